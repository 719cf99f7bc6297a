//! The three-level traffic model: who a source knows (distance-weighted
//! contact groups), whom it talks to (distance-weighted destination choice)
//! and how many contacts it has (power-law group size).

pub mod sympoly;

use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::{build_cube_grid, place_nodes, Point3};

pub use sympoly::{
    inclusion_probabilities, inclusion_probability, inclusion_profile, log_add, sample_categorical, sample_conditional,
    SymPolyTable,
};

/// Weights of every candidate other than the source. Candidate `i` is node
/// `i` below the source and node `i + 1` above it.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    pub source: usize,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node_of(&self, candidate: usize) -> usize {
        candidate_node(self.source, candidate)
    }

    pub fn candidate_of(&self, node: usize) -> Option<usize> {
        match node.cmp(&self.source) {
            std::cmp::Ordering::Less => Some(node),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(node - 1),
        }
    }
}

#[inline]
pub(crate) fn candidate_node(source: usize, candidate: usize) -> usize {
    if candidate < source {
        candidate
    } else {
        candidate + 1
    }
}

/// `d^-exponent` from a squared distance; integral half-exponents avoid `powf`.
#[inline]
pub(crate) fn inv_pow_sq(d2: f64, exponent: f64) -> f64 {
    let half = 0.5 * exponent;
    if half == half.trunc() && half <= 32.0 {
        (1.0 / d2).powi(half as i32)
    } else {
        d2.powf(-half)
    }
}

/// Squared source-to-candidate distances, clamped below at `floor^2`.
pub(crate) fn floored_dist2(positions: &[Point3], source: usize, floor: f64) -> Vec<f64> {
    let s = positions[source];
    let f2 = floor * floor;
    positions.iter().enumerate().filter(|&(i, _)| i != source).map(|(_, p)| p.dist2(&s).max(f2)).collect()
}

/// `w_i = max(d_i, floor)^-exponent` for every node but the source.
pub fn distance_weights(positions: &[Point3], source: usize, exponent: f64, floor: f64) -> Result<WeightVector> {
    if positions.len() < 2 || source >= positions.len() {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 nodes and a valid source (n = {}, source = {source})",
            positions.len()
        )));
    }
    if !(exponent >= 0.0 && exponent.is_finite()) || !(floor > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent must be >= 0 and floor > 0 (got {exponent}, {floor})")));
    }
    let weights = floored_dist2(positions, source, floor).into_iter().map(|d2| inv_pow_sq(d2, exponent)).collect();
    Ok(WeightVector { source, weights })
}

/// Table of `sigma_0..sigma_qmax` over a weight vector.
pub fn sym_poly_table(w: &WeightVector, q_max: usize) -> Result<SymPolyTable> {
    SymPolyTable::new(&w.weights, q_max)
}

/// Group-size law `P(q) ∝ q^-gamma` on `1..=n-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeDistribution {
    pub gamma: f64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    norm: f64,
}

impl DegreeDistribution {
    pub fn new(n: usize, gamma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("degree law needs n >= 2, got {n}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
        }
        let raw: Vec<f64> = (1..n).map(|q| (q as f64).powf(-gamma)).collect();
        // smallest terms first
        let norm: f64 = raw.iter().rev().sum();
        let pmf: Vec<f64> = raw.iter().map(|p| p / norm).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { gamma, pmf, cdf, norm })
    }

    /// Largest group size, `n - 1`.
    pub fn max_degree(&self) -> usize {
        self.pmf.len()
    }

    /// Normalizer `sum_{q=1}^{n-1} q^-gamma`.
    pub fn normalizer(&self) -> f64 {
        self.norm
    }

    pub fn pmf(&self, q: usize) -> f64 {
        if q == 0 {
            return 0.0;
        }
        self.pmf.get(q - 1).copied().unwrap_or(0.0)
    }

    pub fn pmf_slice(&self) -> &[f64] {
        &self.pmf
    }

    /// Smallest `q` whose CDF reaches `p`.
    pub fn quantile(&self, p: f64) -> usize {
        self.cdf.partition_point(|&c| c < p).min(self.cdf.len() - 1) + 1
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.quantile(rng.gen::<f64>())
    }
}

pub fn sample_degree<R: Rng + ?Sized>(n: usize, gamma: f64, rng: &mut R) -> Result<usize> {
    Ok(DegreeDistribution::new(n, gamma)?.sample(rng))
}

/// Default leader threshold: the 90th percentile of the degree law.
pub fn default_q0(n: usize, gamma: f64) -> Result<f64> {
    Ok(DegreeDistribution::new(n, gamma)?.quantile(0.9) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Leader,
    Normal,
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeClass::Leader => "leader",
            NodeClass::Normal => "normal",
        })
    }
}

pub fn classify_node(q: usize, q0: f64) -> NodeClass {
    if q as f64 > q0 {
        NodeClass::Leader
    } else {
        NodeClass::Normal
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactGroup {
    pub source: usize,
    /// Node ids, increasing.
    pub members: Vec<usize>,
    pub q: usize,
}

/// Size-`q` group with probability proportional to the product of member
/// weights.
pub fn sample_contact_group<R: Rng + ?Sized>(w: &WeightVector, q: usize, rng: &mut R) -> Result<ContactGroup> {
    let picked = sample_conditional(&w.weights, q, rng)?;
    Ok(ContactGroup { source: w.source, members: picked.into_iter().map(|c| w.node_of(c)).collect(), q })
}

/// Member `k` with probability `d_k^-beta / sum_members d^-beta`.
/// `distances` is indexed by node id.
pub fn select_destination<R: Rng + ?Sized>(
    group: &ContactGroup,
    distances: &[f64],
    beta: f64,
    rng: &mut R,
) -> Result<usize> {
    if group.members.is_empty() {
        return Err(Error::InvalidArgument("empty contact group".into()));
    }
    let v: Vec<f64> = group.members.iter().map(|&m| inv_pow_sq(distances[m] * distances[m], beta)).collect();
    Ok(group.members[sample_categorical(&v, rng)])
}

/// Everything drawn for one source in one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceDraw {
    pub source: usize,
    pub q: usize,
    pub class: NodeClass,
    pub group: Vec<usize>,
    pub destination: usize,
}

/// Config-derived constants of the traffic model.
#[derive(Clone, Debug)]
pub struct TrafficModel {
    pub alpha: f64,
    pub beta: f64,
    /// Distance floor, the cube side.
    pub floor: f64,
    pub q0: f64,
    pub degree: DegreeDistribution,
}

impl TrafficModel {
    pub fn new(config: &NetworkConfig) -> Result<Self> {
        let grid = build_cube_grid(config)?;
        let degree = DegreeDistribution::new(config.n, config.gamma)?;
        let q0 = match config.q0 {
            Some(q0) => q0,
            None => degree.quantile(0.9) as f64,
        };
        Ok(Self { alpha: config.alpha, beta: config.beta, floor: grid.side, q0, degree })
    }

    /// Draws group size, group and destination for `source`.
    pub fn draw_source<R: Rng + ?Sized>(&self, positions: &[Point3], source: usize, rng: &mut R) -> SourceDraw {
        self.source_sampler(positions, source).draw(rng)
    }

    /// Caches the source's distances and weights for repeated draws.
    pub fn source_sampler(&self, positions: &[Point3], source: usize) -> SourceSampler<'_> {
        let d2 = floored_dist2(positions, source, self.floor);
        let w = d2.iter().map(|&x| inv_pow_sq(x, self.alpha)).collect();
        SourceSampler { model: self, source, d2, w }
    }
}

pub struct SourceSampler<'a> {
    model: &'a TrafficModel,
    source: usize,
    d2: Vec<f64>,
    w: Vec<f64>,
}

impl SourceSampler<'_> {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SourceDraw {
        let q = self.model.degree.sample(rng);
        // 1 <= q <= n - 1 = w.len() by construction of the degree law
        let picked = sample_conditional(&self.w, q, rng).expect("group size within support");
        let v: Vec<f64> = picked.iter().map(|&c| inv_pow_sq(self.d2[c], self.model.beta)).collect();
        let dest = picked[sample_categorical(&v, rng)];
        SourceDraw {
            source: self.source,
            q,
            class: classify_node(q, self.model.q0),
            group: picked.into_iter().map(|c| candidate_node(self.source, c)).collect(),
            destination: candidate_node(self.source, dest),
        }
    }
}

/// A placed network with one draw per source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub positions: Vec<Point3>,
    pub draws: Vec<SourceDraw>,
    pub q0: f64,
}

pub fn realize_topology<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Result<Topology> {
    let model = TrafficModel::new(config)?;
    let positions = place_nodes(config.n, rng);
    let draws = (0..config.n).map(|s| model.draw_source(&positions, s, rng)).collect();
    Ok(Topology { positions, draws, q0: model.q0 })
}

/// Line records: `node_id x y z q class` per node, then
/// `edge src dst kind` with kind `group` or `comm`.
pub fn write_topology_dump<W: Write>(topology: &Topology, mut out: W) -> std::io::Result<()> {
    for (id, (p, d)) in topology.positions.iter().zip(&topology.draws).enumerate() {
        writeln!(out, "{id} {} {} {} {} {}", p.x, p.y, p.z, d.q, d.class)?;
    }
    for d in &topology.draws {
        for &m in &d.group {
            writeln!(out, "edge {} {m} group", d.source)?;
        }
    }
    for d in &topology.draws {
        writeln!(out, "edge {} {} comm", d.source, d.destination)?;
    }
    Ok(())
}

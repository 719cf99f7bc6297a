//! Hop-count distribution of flows and its split into the four flow classes
//! (leader/normal source × ad hoc/cellular), exact at small n and by
//! Monte-Carlo at any n.
//!
//! The exact destination law marginalizes group size and group membership:
//!
//! ```text
//! P(D = k, Q = q) = P(q) E[1{k in G} v_k / sum_G v]
//!                 = P(q) v_k ∫_0^∞ y_k σ_{q-1}(y \ k) / σ_q(w) dt,  y_i = w_i e^{-v_i t}
//! ```
//!
//! The integrand is a finite sum of exponentials in `t`, so the trapezoid
//! rule in `ln t` converges geometrically.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::{build_cube_grid, cube_l1_distance, CubeGrid, CubeIdx, Point3};
use crate::par::par_map;
use crate::rng::stream;
use crate::topology::{
    classify_node, floored_dist2, inclusion_profile, inv_pow_sq, NodeClass, SymPolyTable, TrafficModel,
};

/// Largest `n` accepted by the exact computations.
pub const EXACT_CAP: usize = 500;

/// Cubes at L1 distance `x` from a cube of an unbounded grid, `4x^2 + 2`.
pub fn shell_cube_count(x: u32) -> Result<u64> {
    if x == 0 {
        return Err(Error::InvalidArgument("shell radius must be >= 1".into()));
    }
    let x = x as u64;
    Ok(4 * x * x + 2)
}

/// In-bounds cubes at L1 distance `x` from `center` on a `k^3` grid.
pub fn shell_cube_count_truncated(center: CubeIdx, x: u32, k: u32) -> u64 {
    let x = x as i64;
    let k = k as i64;
    let c = center.map(|v| v as i64);
    let inside = |v: i64| (0..k).contains(&v);
    let mut count = 0;
    for dx in -x..=x {
        if !inside(c[0] + dx) {
            continue;
        }
        let rest = x - dx.abs();
        for dy in -rest..=rest {
            if !inside(c[1] + dy) {
                continue;
            }
            let dz = rest - dy.abs();
            if dz == 0 {
                count += inside(c[2]) as u64;
            } else {
                count += inside(c[2] + dz) as u64 + inside(c[2] - dz) as u64;
            }
        }
    }
    count
}

/// Which sources a computation covers; `All` weights sources equally.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sources {
    One(usize),
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HopMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopDistribution {
    /// `pmf[x]` for `x = 0..=x_max`.
    pub pmf: Vec<f64>,
    /// Draws behind the estimate; `None` when exact.
    pub samples: Option<usize>,
}

impl HopDistribution {
    pub fn x_max(&self) -> u32 {
        self.pmf.len() as u32 - 1
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(x, p)| x as f64 * p).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowClassProbs {
    /// Leader source, ad hoc.
    pub pr1a: f64,
    /// Leader source, cellular.
    pub pr1c: f64,
    /// Normal source, ad hoc.
    pub pr2a: f64,
    /// Normal source, cellular.
    pub pr2c: f64,
}

impl FlowClassProbs {
    pub fn pra(&self) -> f64 {
        self.pr1a + self.pr2a
    }

    pub fn prc(&self) -> f64 {
        self.pr1c + self.pr2c
    }

    pub fn total(&self) -> f64 {
        self.pr1a + self.pr1c + self.pr2a + self.pr2c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopMoments {
    /// `sum_{x<=L} x P(X = x, leader)`.
    pub e1_prime: f64,
    /// `sum_{x<=L} x P(X = x, normal)`.
    pub e2_prime: f64,
    pub e_prime: f64,
    /// Expected ad hoc flows per cube, `n e' s^3`.
    pub ef: f64,
}

/// Hop mass split by source class, indexed by hop count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopJoint {
    pub leader: Vec<f64>,
    pub normal: Vec<f64>,
    pub samples: Option<usize>,
}

impl HopJoint {
    fn zeros(len: usize, samples: Option<usize>) -> Self {
        Self { leader: vec![0.0; len], normal: vec![0.0; len], samples }
    }

    pub fn distribution(&self) -> HopDistribution {
        HopDistribution {
            pmf: self.leader.iter().zip(&self.normal).map(|(a, b)| a + b).collect(),
            samples: self.samples,
        }
    }

    /// Ad hoc iff `x <= l`.
    pub fn class_probs(&self, l: u32) -> FlowClassProbs {
        let split = |v: &[f64]| {
            let cut = (l as usize + 1).min(v.len());
            (v[..cut].iter().sum::<f64>(), v[cut..].iter().sum::<f64>())
        };
        let (pr1a, pr1c) = split(&self.leader);
        let (pr2a, pr2c) = split(&self.normal);
        FlowClassProbs { pr1a, pr1c, pr2a, pr2c }
    }

    pub fn moments(&self, l: u32, n: usize, side: f64) -> HopMoments {
        let trunc = |v: &[f64]| v.iter().enumerate().take(l as usize + 1).map(|(x, p)| x as f64 * p).sum::<f64>();
        let e1_prime = trunc(&self.leader);
        let e2_prime = trunc(&self.normal);
        let e_prime = e1_prime + e2_prime;
        HopMoments { e1_prime, e2_prime, e_prime, ef: n as f64 * e_prime * side.powi(3) }
    }
}

/// `P(D = k, leader)` and `P(D = k, normal)` for one source, by node id
/// (the source's own entry is zero).
#[derive(Clone, Debug, PartialEq)]
pub struct DestinationMarginal {
    pub leader: Vec<f64>,
    pub normal: Vec<f64>,
}

impl DestinationMarginal {
    pub fn total(&self, node: usize) -> f64 {
        self.leader[node] + self.normal[node]
    }
}

/// Quadrature step in `ln t`; the discretization error is about `e^{-π²/h}`.
const QUAD_STEP: f64 = 0.3;

fn check_exact(positions: &[Point3], config: &NetworkConfig) -> Result<()> {
    config.validate()?;
    if positions.len() != config.n {
        return Err(Error::InvalidArgument(format!("{} positions for n = {}", positions.len(), config.n)));
    }
    if config.n > EXACT_CAP {
        return Err(Error::ExactCapExceeded { n: config.n, cap: EXACT_CAP });
    }
    Ok(())
}

fn check_source(config: &NetworkConfig, sources: Sources) -> Result<()> {
    match sources {
        Sources::One(s) if s >= config.n => {
            Err(Error::InvalidArgument(format!("source {s} out of range for n = {}", config.n)))
        }
        _ => Ok(()),
    }
}

/// Per-candidate (leader, normal) destination mass of one source.
fn exact_candidate_mass(positions: &[Point3], source: usize, model: &TrafficModel) -> (Vec<f64>, Vec<f64>) {
    let len = positions.len() - 1;
    let d2 = floored_dist2(positions, source, model.floor);
    let lw: Vec<f64> = d2.iter().map(|&x| -0.5 * model.alpha * x.ln()).collect();
    let v: Vec<f64> = d2.iter().map(|&x| inv_pow_sq(x, model.beta)).collect();
    // len == q_max, always in range
    let tab_w = SymPolyTable::from_log_weights(&lw, len).unwrap();
    let log_coef: Vec<f64> = (0..=len)
        .map(|q| if q == 0 { f64::NEG_INFINITY } else { model.degree.pmf(q).ln() - tab_w.log_sigma(q) })
        .collect();
    let leader: Vec<bool> = (0..=len).map(|q| q > 0 && classify_node(q, model.q0) == NodeClass::Leader).collect();

    let vmax = v.iter().cloned().fold(0.0, f64::max);
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_lo = 1e-13 / (len as f64 * vmax);
    let t_hi = 40.0 / vmin;
    let steps = ((t_hi / t_lo).ln() / QUAD_STEP).ceil() as usize;

    let mut acc_l = vec![0.0; len];
    let mut acc_n = vec![0.0; len];
    let mut ly = vec![0.0; len];
    let mut coef_l = vec![0.0; len + 1];
    let mut coef_n = vec![0.0; len + 1];
    let mut profile = Vec::with_capacity(len + 1);
    for j in 0..=steps {
        let t = t_lo * (j as f64 * QUAD_STEP).exp();
        for i in 0..len {
            ly[i] = lw[i] - v[i] * t;
        }
        let tab = SymPolyTable::from_log_weights(&ly, len).unwrap();
        for q in 1..=len {
            let c = (log_coef[q] + tab.log_sigma(q)).exp();
            if leader[q] {
                coef_l[q] = c;
                coef_n[q] = 0.0;
            } else {
                coef_l[q] = 0.0;
                coef_n[q] = c;
            }
        }
        let scale = QUAD_STEP * t;
        for k in 0..len {
            inclusion_profile(ly[k], &tab, &mut profile);
            let mut sl = 0.0;
            let mut sn = 0.0;
            for q in 1..=len {
                sl += coef_l[q] * profile[q];
                sn += coef_n[q] * profile[q];
            }
            acc_l[k] += scale * v[k] * sl;
            acc_n[k] += scale * v[k] * sn;
        }
    }
    (acc_l, acc_n)
}

/// Exact destination law of one source.
pub fn destination_marginal(
    positions: &[Point3],
    config: &NetworkConfig,
    source: usize,
) -> Result<DestinationMarginal> {
    check_exact(positions, config)?;
    check_source(config, Sources::One(source))?;
    let model = TrafficModel::new(config)?;
    let (l, nm) = exact_candidate_mass(positions, source, &model);
    let mut leader = l;
    let mut normal = nm;
    leader.insert(source, 0.0);
    normal.insert(source, 0.0);
    Ok(DestinationMarginal { leader, normal })
}

fn cubes(positions: &[Point3], grid: &CubeGrid) -> Vec<CubeIdx> {
    positions.iter().map(|p| grid.cube_index_unchecked(p)).collect()
}

fn exact_joint(positions: &[Point3], config: &NetworkConfig, sources: Sources) -> Result<HopJoint> {
    check_exact(positions, config)?;
    check_source(config, sources)?;
    let model = TrafficModel::new(config)?;
    let grid = build_cube_grid(config)?;
    let cube = cubes(positions, &grid);
    let len_x = grid.max_hops() as usize + 1;
    let list: Vec<usize> = match sources {
        Sources::One(s) => vec![s],
        Sources::All => (0..config.n).collect(),
    };
    let per_source = par_map(list.len(), |i| {
        let s = list[i];
        let (l, nm) = exact_candidate_mass(positions, s, &model);
        let mut joint = HopJoint::zeros(len_x, None);
        for c in 0..l.len() {
            let node = crate::topology::candidate_node(s, c);
            let x = cube_l1_distance(cube[s], cube[node]) as usize;
            joint.leader[x] += l[c];
            joint.normal[x] += nm[c];
        }
        joint
    });
    let mut out = HopJoint::zeros(len_x, None);
    let share = 1.0 / list.len() as f64;
    for j in &per_source {
        for x in 0..len_x {
            out.leader[x] += share * j.leader[x];
            out.normal[x] += share * j.normal[x];
        }
    }
    Ok(out)
}

/// Draws per parallel work item.
const MC_CHUNK: usize = 4096;

fn mc_joint(
    positions: &[Point3],
    config: &NetworkConfig,
    sources: Sources,
    samples: usize,
    seed: u64,
) -> Result<HopJoint> {
    config.validate()?;
    check_source(config, sources)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let model = TrafficModel::new(config)?;
    let grid = build_cube_grid(config)?;
    let cube = cubes(positions, &grid);
    let len_x = grid.max_hops() as usize + 1;
    // (source, chunk, draws); `All` splits draws evenly over sources
    let mut work = Vec::new();
    let mut push = |s: usize, count: usize| {
        for (c, start) in (0..count).step_by(MC_CHUNK).enumerate() {
            work.push((s, c as u64, MC_CHUNK.min(count - start)));
        }
    };
    match sources {
        Sources::One(s) => push(s, samples),
        Sources::All => {
            let n = config.n;
            for s in 0..n {
                push(s, samples / n + usize::from(s < samples % n));
            }
        }
    }
    let counts = par_map(work.len(), |i| {
        let (s, chunk, count) = work[i];
        let sampler = model.source_sampler(positions, s);
        let mut rng = stream(seed, s as u64, chunk);
        let mut lc = vec![0u64; len_x];
        let mut nc = vec![0u64; len_x];
        for _ in 0..count {
            let d = sampler.draw(&mut rng);
            let x = cube_l1_distance(cube[s], cube[d.destination]) as usize;
            match d.class {
                NodeClass::Leader => lc[x] += 1,
                NodeClass::Normal => nc[x] += 1,
            }
        }
        (lc, nc)
    });
    let mut joint = HopJoint::zeros(len_x, Some(samples));
    let mut lt = vec![0u64; len_x];
    let mut nt = vec![0u64; len_x];
    for (lc, nc) in counts {
        for x in 0..len_x {
            lt[x] += lc[x];
            nt[x] += nc[x];
        }
    }
    for x in 0..len_x {
        joint.leader[x] = lt[x] as f64 / samples as f64;
        joint.normal[x] = nt[x] as f64 / samples as f64;
    }
    Ok(joint)
}

/// Hop mass by class under the chosen estimator.
pub fn hop_joint(positions: &[Point3], config: &NetworkConfig, sources: Sources, mode: HopMode) -> Result<HopJoint> {
    match mode {
        HopMode::Exact => exact_joint(positions, config, sources),
        HopMode::MonteCarlo { samples, seed } => mc_joint(positions, config, sources, samples, seed),
    }
}

pub fn hop_distribution_exact(
    positions: &[Point3],
    config: &NetworkConfig,
    sources: Sources,
) -> Result<HopDistribution> {
    Ok(exact_joint(positions, config, sources)?.distribution())
}

/// Monte-Carlo estimate; the stream seed is taken from `rng`.
pub fn hop_distribution_mc<R: rand::Rng + ?Sized>(
    positions: &[Point3],
    config: &NetworkConfig,
    sources: Sources,
    samples: usize,
    rng: &mut R,
) -> Result<HopDistribution> {
    Ok(mc_joint(positions, config, sources, samples, rng.gen())?.distribution())
}

pub fn flow_class_probs(
    positions: &[Point3],
    config: &NetworkConfig,
    sources: Sources,
    mode: HopMode,
) -> Result<FlowClassProbs> {
    Ok(hop_joint(positions, config, sources, mode)?.class_probs(config.l))
}

pub fn truncated_hop_moments(
    positions: &[Point3],
    config: &NetworkConfig,
    sources: Sources,
    mode: HopMode,
) -> Result<HopMoments> {
    let side = build_cube_grid(config)?.side;
    Ok(hop_joint(positions, config, sources, mode)?.moments(config.l, config.n, side))
}

pub const HOP_CSV_HEADER: &str = "n,alpha,beta,gamma,L,seed,x,p";
pub const CLASS_CSV_HEADER: &str = "n,alpha,beta,gamma,L,seed,pr1a,pr1c,pr2a,pr2c,pra,prc";

fn key(config: &NetworkConfig) -> String {
    format!("{},{},{},{},{},{}", config.n, config.alpha, config.beta, config.gamma, config.l, config.seed)
}

/// One row per hop count.
pub fn write_hop_csv<W: Write>(
    mut out: W,
    config: &NetworkConfig,
    dist: &HopDistribution,
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(out, "{HOP_CSV_HEADER}")?;
    }
    let k = key(config);
    for (x, p) in dist.pmf.iter().enumerate() {
        writeln!(out, "{k},{x},{p}")?;
    }
    Ok(())
}

pub fn write_class_csv<W: Write>(
    mut out: W,
    config: &NetworkConfig,
    probs: &FlowClassProbs,
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(out, "{CLASS_CSV_HEADER}")?;
    }
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        key(config),
        probs.pr1a,
        probs.pr1c,
        probs.pr2a,
        probs.pr2c,
        probs.pra(),
        probs.prc()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::place_nodes;
    use crate::topology::DegreeDistribution;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(n: usize, alpha: f64, beta: f64, gamma: f64, seed: u64) -> (Vec<Point3>, NetworkConfig) {
        let cfg = NetworkConfig { n, alpha, beta, gamma, seed, ..NetworkConfig::default() };
        let pts = place_nodes(n, &mut ChaCha8Rng::seed_from_u64(seed));
        (pts, cfg)
    }

    /// Exhaustive destination law: every group size, every group.
    fn brute_marginal(pts: &[Point3], cfg: &NetworkConfig, source: usize) -> (Vec<f64>, Vec<f64>) {
        let model = TrafficModel::new(cfg).unwrap();
        let d2 = floored_dist2(pts, source, model.floor);
        let w: Vec<f64> = d2.iter().map(|&x| x.sqrt().powf(-cfg.alpha)).collect();
        let v: Vec<f64> = d2.iter().map(|&x| x.sqrt().powf(-cfg.beta)).collect();
        let len = w.len();
        let deg = DegreeDistribution::new(cfg.n, cfg.gamma).unwrap();
        let mut lead = vec![0.0; len];
        let mut norm = vec![0.0; len];
        for q in 1..=len {
            let members = |m: u32| (0..len).filter(move |i| m >> i & 1 == 1);
            let groups: Vec<u32> = (0u32..1 << len).filter(|m| m.count_ones() as usize == q).collect();
            let sigma: f64 = groups.iter().map(|&m| members(m).map(|i| w[i]).product::<f64>()).sum();
            for &m in &groups {
                let pg = members(m).map(|i| w[i]).product::<f64>() / sigma;
                let vs: f64 = members(m).map(|i| v[i]).sum();
                for k in members(m) {
                    let p = deg.pmf(q) * pg * v[k] / vs;
                    if classify_node(q, model.q0) == NodeClass::Leader {
                        lead[k] += p;
                    } else {
                        norm[k] += p;
                    }
                }
            }
        }
        (lead, norm)
    }

    #[test]
    fn shell_counts() {
        assert_eq!(shell_cube_count(1).unwrap(), 6);
        assert_eq!(shell_cube_count(2).unwrap(), 18);
        assert_eq!(shell_cube_count(5).unwrap(), 102);
        assert!(shell_cube_count(0).is_err());
        for x in 1..=10u32 {
            let brute = (-20i64..=20)
                .flat_map(|a| (-20i64..=20).flat_map(move |b| (-20i64..=20).map(move |c| (a, b, c))))
                .filter(|(a, b, c)| a.abs() + b.abs() + c.abs() == x as i64)
                .count() as u64;
            assert_eq!(brute, shell_cube_count(x).unwrap());
            assert_eq!(shell_cube_count_truncated([30, 30, 30], x, 61), brute);
        }
        assert_eq!(shell_cube_count_truncated([0, 0, 0], 1, 5), 3);
        assert_eq!(shell_cube_count_truncated([0, 0, 0], 2, 5), 6);
    }

    #[test]
    fn exact_marginal_matches_enumeration() {
        for (seed, alpha, beta, gamma) in
            [(1, 1.0, 0.5, 2.0), (2, 3.0, 4.0, 0.5), (3, 0.0, 0.0, 1.0), (4, 5.0, 1.5, 2.5)]
        {
            let (pts, mut cfg) = instance(9, alpha, beta, gamma, seed);
            cfg.q0 = Some(3.0);
            for source in [0, 4, 8] {
                let exact = destination_marginal(&pts, &cfg, source).unwrap();
                let (bl, bn) = brute_marginal(&pts, &cfg, source);
                let w = crate::topology::WeightVector { source, weights: vec![0.0; 8] };
                for c in 0..8 {
                    let node = w.node_of(c);
                    assert!((exact.leader[node] - bl[c]).abs() < 1e-11, "leader {seed} {source} {c}");
                    assert!((exact.normal[node] - bn[c]).abs() < 1e-11, "normal {seed} {source} {c}");
                }
                let total: f64 = (0..9).map(|k| exact.total(k)).sum();
                assert!((total - 1.0).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn two_nodes_put_all_mass_on_their_distance() {
        let pts = vec![Point3::new(0.05, 0.05, 0.05), Point3::new(0.95, 0.5, 0.05)];
        let cfg = NetworkConfig { n: 2, ..NetworkConfig::default() };
        let grid = build_cube_grid(&cfg).unwrap();
        let x = cube_l1_distance(grid.cube_index(&pts[0]).unwrap(), grid.cube_index(&pts[1]).unwrap());
        let d = hop_distribution_exact(&pts, &cfg, Sources::All).unwrap();
        assert!((d.pmf[x as usize] - 1.0).abs() < 1e-12);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_agrees_with_monte_carlo() {
        let (pts, cfg) = instance(30, 1.0, 0.5, 2.0, 7);
        let exact = hop_joint(&pts, &cfg, Sources::One(3), HopMode::Exact).unwrap();
        let samples = 1_000_000;
        let mc = hop_joint(&pts, &cfg, Sources::One(3), HopMode::MonteCarlo { samples, seed: 1 }).unwrap();
        let (e, m) = (exact.distribution(), mc.distribution());
        assert!((e.total() - 1.0).abs() < 1e-9);
        for x in 0..e.pmf.len() {
            let p = e.pmf[x];
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            assert!((m.pmf[x] - p).abs() <= 3.0 * se + 1e-12, "x = {x}: {} vs {p}", m.pmf[x]);
        }
    }

    #[test]
    fn class_probs_partition_and_limits() {
        let (pts, mut cfg) = instance(30, 1.0, 0.5, 2.0, 9);
        let deg = DegreeDistribution::new(30, 2.0).unwrap();
        cfg.q0 = Some(deg.quantile(0.5) as f64);
        cfg.l = 2;
        let joint = hop_joint(&pts, &cfg, Sources::All, HopMode::Exact).unwrap();
        let p = joint.class_probs(cfg.l);
        assert!((p.total() - 1.0).abs() < 1e-9);
        assert!((p.pra() - joint.distribution().pmf[..3].iter().sum::<f64>()).abs() < 1e-12);
        let x_max = build_cube_grid(&cfg).unwrap().max_hops();
        let all = joint.class_probs(x_max);
        assert_eq!((all.pr1c, all.pr2c), (0.0, 0.0));
        let none = joint.class_probs(0);
        assert!((none.pra() - joint.distribution().pmf[0]).abs() < 1e-15);

        let samples = 400_000;
        let mc = flow_class_probs(&pts, &cfg, Sources::All, HopMode::MonteCarlo { samples, seed: 2 }).unwrap();
        for (a, b) in [(p.pr1a, mc.pr1a), (p.pr1c, mc.pr1c), (p.pr2a, mc.pr2a), (p.pr2c, mc.pr2c)] {
            let se = (a * (1.0 - a) / samples as f64).sqrt();
            assert!((a - b).abs() <= 3.0 * se + 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn truncated_moments() {
        let (pts, cfg) = instance(40, 1.0, 0.5, 2.0, 4);
        let joint = hop_joint(&pts, &cfg, Sources::All, HopMode::Exact).unwrap();
        let side = build_cube_grid(&cfg).unwrap().side;
        let m0 = joint.moments(0, cfg.n, side);
        assert_eq!((m0.e_prime, m0.ef), (0.0, 0.0));
        let x_max = build_cube_grid(&cfg).unwrap().max_hops();
        let mut prev = 0.0;
        for l in 0..=x_max + 2 {
            let m = joint.moments(l, cfg.n, side);
            assert!(m.e_prime >= prev);
            assert!((m.e_prime - m.e1_prime - m.e2_prime).abs() < 1e-15);
            prev = m.e_prime;
        }
        assert!((prev - joint.distribution().mean()).abs() < 1e-12);

        // all mass at x = 1 with n s^3 = 0.1
        let unit = HopJoint { leader: vec![0.0, 0.0], normal: vec![0.0, 1.0], samples: None };
        let ef = unit.moments(1, 100, 0.001f64.cbrt()).ef;
        assert!((ef - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mc_point_mass_and_determinism() {
        let (pts, cfg) = instance(50, 2.0, 1.0, 2.0, 1);
        let one = hop_distribution_mc(&pts, &cfg, Sources::One(0), 1, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(one.pmf.iter().filter(|&&p| p == 1.0).count(), 1);
        let a = hop_distribution_mc(&pts, &cfg, Sources::All, 5000, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = hop_distribution_mc(&pts, &cfg, Sources::All, 5000, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!((a.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_cap_is_enforced() {
        let (pts, cfg) = instance(501, 1.0, 0.5, 2.0, 1);
        assert!(matches!(
            hop_distribution_exact(&pts, &cfg, Sources::One(0)),
            Err(Error::ExactCapExceeded { n: 501, cap: 500 })
        ));
    }

    #[test]
    fn csv_rows() {
        let cfg = NetworkConfig::default();
        let d = HopDistribution { pmf: vec![0.25, 0.75], samples: None };
        let mut buf = Vec::new();
        write_hop_csv(&mut buf, &cfg, &d, true).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,alpha,beta,gamma,L,seed,x,p\n100,1,0.5,2,2,0,0,0.25\n100,1,0.5,2,2,0,1,0.75\n"
        );
        let p = FlowClassProbs { pr1a: 0.1, pr1c: 0.2, pr2a: 0.3, pr2c: 0.4 };
        let mut buf = Vec::new();
        write_class_csv(&mut buf, &cfg, &p, false).unwrap();
        let row = String::from_utf8(buf).unwrap();
        assert!(row.starts_with("100,1,0.5,2,2,0,0.1,0.2,0.3,0.4,"));
    }
}

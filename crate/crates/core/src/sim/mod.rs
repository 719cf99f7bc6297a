//! Round-based flow simulation: draw one flow per node, split flows between
//! ad hoc relaying and the cellular backbone by hop count, route ad hoc flows
//! through the cube grid and turn the resulting load into throughput.

pub mod routing;

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::{
    build_cube_grid, cube_l1_distance, place_base_stations, place_nodes, BaseStationGrid, CubeGrid, CubeIdx, Point3,
};
use crate::par::par_map;
use crate::rng::stream;
use crate::topology::{NodeClass, TrafficModel};

pub use routing::{route_adhoc, route_segment};

/// Smallest cluster side `M >= (2 + delta) / c1` of the TDMA schedule.
pub fn mac_cluster_parameter(delta: f64, c1: f64) -> Result<u32> {
    if !(delta > 0.0) || !(c1 > 0.0 && c1 <= 1.0) {
        return Err(Error::InvalidConfig(format!("need delta > 0 and 0 < c1 <= 1 (got {delta}, {c1})")));
    }
    // snap so that exact quotients like 4.0 stay 4
    Ok(((2.0 + delta) / c1 - 1e-9).ceil() as u32)
}

/// Slots of one TDMA cycle, `M^3`.
pub fn tdma_slots(mac_m: u32) -> u64 {
    (mac_m as u64).pow(3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    AdHoc,
    Cellular,
}

/// Ad hoc iff the flow spans at most `l` hops.
pub fn flow_mode(hops: u32, l: u32) -> FlowMode {
    if hops <= l {
        FlowMode::AdHoc
    } else {
        FlowMode::Cellular
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub src: usize,
    pub dst: usize,
    pub q: usize,
    pub hops: u32,
    pub mode: FlowMode,
    /// Empty for cellular flows.
    pub path: Vec<CubeIdx>,
    pub src_class: NodeClass,
}

/// One flow per node for the placed network.
pub fn generate_flows<R: Rng + ?Sized>(positions: &[Point3], config: &NetworkConfig, rng: &mut R) -> Result<Vec<Flow>> {
    if positions.len() != config.n {
        return Err(Error::InvalidArgument(format!("{} positions for n = {}", positions.len(), config.n)));
    }
    let model = TrafficModel::new(config)?;
    let grid = build_cube_grid(config)?;
    Ok((0..config.n)
        .map(|s| {
            let d = model.draw_source(positions, s, rng);
            let hops = cube_l1_distance(
                grid.cube_index_unchecked(&positions[s]),
                grid.cube_index_unchecked(&positions[d.destination]),
            );
            let mode = flow_mode(hops, config.l);
            let path = match mode {
                FlowMode::AdHoc => route_adhoc(&positions[s], &positions[d.destination], &grid),
                FlowMode::Cellular => Vec::new(),
            };
            Flow { src: s, dst: d.destination, q: d.q, hops, mode, path, src_class: d.class }
        })
        .collect())
}

/// Flow counts per cube and per base station.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadMap {
    pub k: u32,
    /// Ad hoc flows transiting each cube, indexed by `CubeGrid::linear`.
    pub cube: Vec<u32>,
    pub uplink: Vec<u32>,
    pub downlink: Vec<u32>,
}

impl LoadMap {
    pub fn total_transit(&self) -> u64 {
        self.cube.iter().map(|&c| c as u64).sum()
    }

    /// `E[F]`: mean flows per cube.
    pub fn mean_per_cube(&self) -> f64 {
        self.total_transit() as f64 / self.cube.len() as f64
    }

    pub fn max_per_cube(&self) -> u32 {
        self.cube.iter().copied().max().unwrap_or(0)
    }
}

pub fn accumulate_load(flows: &[Flow], positions: &[Point3], grid: &CubeGrid, bs: &BaseStationGrid) -> LoadMap {
    let mut load =
        LoadMap { k: grid.k, cube: vec![0; grid.cube_count()], uplink: vec![0; bs.m()], downlink: vec![0; bs.m()] };
    for f in flows {
        match f.mode {
            FlowMode::AdHoc => {
                for &c in &f.path {
                    load.cube[grid.linear(c)] += 1;
                }
            }
            FlowMode::Cellular => {
                load.uplink[bs.associate(&positions[f.src])] += 1;
                load.downlink[bs.associate(&positions[f.dst])] += 1;
            }
        }
    }
    load
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdhocThroughput {
    /// `W_a / (max(E[F], 1) M^3)`.
    pub raw: f64,
    /// `W_a / max(E[F], 1)`, the TDMA constant dropped.
    pub normalized: f64,
}

pub fn per_node_adhoc_throughput(ef: f64, mac_m: u32, wa: f64) -> AdhocThroughput {
    let normalized = wa / ef.max(1.0);
    AdhocThroughput { raw: normalized / tdma_slots(mac_m) as f64, normalized }
}

/// `m W_c` with unit reuse factor.
pub fn cellular_throughput(m: usize, wc: f64) -> f64 {
    m as f64 * wc
}

/// Throughput settings evaluated on one set of flows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variant {
    pub l: u32,
    pub wa: f64,
    pub wc: f64,
}

impl Variant {
    pub fn of(config: &NetworkConfig) -> Self {
        Self { l: config.l, wa: config.wa, wc: config.wc }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub na: u32,
    pub nc: u32,
    pub ef: f64,
    pub f_max: u32,
    pub lambda_a_n: f64,
    pub lambda_a: f64,
    pub lambda_a_bottleneck: f64,
    pub lambda_c: f64,
    pub lambda_total: f64,
    /// Mean cube hops over all flows.
    pub mean_hops: f64,
    /// Mean cube hops over ad hoc flows; 0 without any.
    pub mean_adhoc_hops: f64,
}

/// Standard errors of the round means.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundSem {
    pub na: f64,
    pub ef: f64,
    pub lambda_a: f64,
    pub lambda_c: f64,
    pub lambda_total: f64,
    pub mean_adhoc_hops: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: NetworkConfig,
    /// Cubes per axis.
    pub k: u32,
    /// Cells.
    pub m: usize,
    /// TDMA cluster side.
    pub mac_m: u32,
    pub na: f64,
    pub nc: f64,
    pub ef_avg: f64,
    pub f_max: f64,
    pub lambda_a_n: f64,
    pub lambda_a_n_raw: f64,
    pub lambda_a: f64,
    pub lambda_a_bottleneck: f64,
    pub lambda_c: f64,
    pub lambda_total: f64,
    pub mean_hops: f64,
    pub mean_adhoc_hops: f64,
    pub sem: RoundSem,
    pub per_round: Vec<RoundRecord>,
}

pub const SIM_CSV_HEADER: &str =
    "n,alpha,beta,gamma,L,Wa,Wc,seed,rounds,na,nc,ef_avg,f_max,lambda_a,lambda_c,lambda_total";

impl SimResult {
    pub fn csv_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.n,
            c.alpha,
            c.beta,
            c.gamma,
            c.l,
            c.wa,
            c.wc,
            c.seed,
            c.rounds,
            self.na,
            self.nc,
            self.ef_avg,
            self.f_max,
            self.lambda_a,
            self.lambda_c,
            self.lambda_total
        )
    }
}

pub fn write_sim_csv<W: Write>(mut out: W, results: &[SimResult], header: bool) -> std::io::Result<()> {
    if header {
        writeln!(out, "{SIM_CSV_HEADER}")?;
    }
    for r in results {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RoundLine<'a> {
    n: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    #[serde(rename = "L")]
    l: u32,
    #[serde(rename = "Wa")]
    wa: f64,
    #[serde(rename = "Wc")]
    wc: f64,
    seed: u64,
    #[serde(flatten)]
    record: &'a RoundRecord,
}

/// One JSON object per round.
pub fn write_rounds_jsonl<W: Write>(mut out: W, result: &SimResult) -> std::io::Result<()> {
    let c = &result.config;
    for record in &result.per_round {
        let line = RoundLine {
            n: c.n,
            alpha: c.alpha,
            beta: c.beta,
            gamma: c.gamma,
            l: c.l,
            wa: c.wa,
            wc: c.wc,
            seed: c.seed,
            record,
        };
        serde_json::to_writer(&mut out, &line)?;
        writeln!(out)?;
    }
    Ok(())
}

/// L-independent content of one round.
struct RoundFlows {
    hops: Vec<u32>,
    /// Linear cube ids of every flow's route, concatenated.
    cells: Vec<u32>,
    offsets: Vec<usize>,
}

fn round_flows(config: &NetworkConfig, model: &TrafficModel, grid: &CubeGrid, round: u32) -> RoundFlows {
    let n = config.n;
    let positions = place_nodes(n, &mut stream(config.seed, round as u64, 0));
    let cube: Vec<CubeIdx> = positions.iter().map(|p| grid.cube_index_unchecked(p)).collect();
    let per_source = par_map(n, |s| {
        let mut rng = stream(config.seed, round as u64, s as u64 + 1);
        let d = model.draw_source(&positions, s, &mut rng);
        let route = route_segment(&positions[s], &positions[d.destination], grid);
        let hops = cube_l1_distance(cube[s], cube[d.destination]);
        (hops, route.into_iter().map(|c| grid.linear(c) as u32).collect::<Vec<_>>())
    });
    let mut hops = Vec::with_capacity(n);
    let mut cells = Vec::new();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for (h, route) in per_source {
        hops.push(h);
        cells.extend(route);
        offsets.push(cells.len());
    }
    RoundFlows { hops, cells, offsets }
}

#[derive(Clone, Copy)]
struct LStats {
    na: u32,
    nc: u32,
    transit: u64,
    f_max: u32,
    adhoc_hops: u64,
}

/// Load statistics for each threshold in `ls` (sorted, distinct), adding
/// flows in order of hop count.
fn threshold_stats(rf: &RoundFlows, cubes: usize, ls: &[u32]) -> Vec<LStats> {
    let n = rf.hops.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| rf.hops[i]);
    let mut load = vec![0u32; cubes];
    let mut next = 0;
    let mut transit = 0u64;
    let mut adhoc_hops = 0u64;
    let mut f_max = 0u32;
    ls.iter()
        .map(|&l| {
            while next < n && rf.hops[order[next]] <= l {
                let i = order[next];
                for &c in &rf.cells[rf.offsets[i]..rf.offsets[i + 1]] {
                    let slot = &mut load[c as usize];
                    *slot += 1;
                    f_max = f_max.max(*slot);
                }
                transit += (rf.offsets[i + 1] - rf.offsets[i]) as u64;
                adhoc_hops += rf.hops[i] as u64;
                next += 1;
            }
            LStats { na: next as u32, nc: (n - next) as u32, transit, f_max, adhoc_hops }
        })
        .collect()
}

fn mean_sem(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let k = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / k;
    if k < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Runs `config.rounds` rounds once and evaluates every variant on the same
/// flows.
pub fn simulate_variants(config: &NetworkConfig, variants: &[Variant]) -> Result<Vec<SimResult>> {
    config.validate()?;
    for v in variants {
        if !(v.wa >= 0.0 && v.wc >= 0.0) {
            return Err(Error::InvalidConfig(format!("negative bandwidth in {v:?}")));
        }
    }
    let model = TrafficModel::new(config)?;
    let grid = build_cube_grid(config)?;
    let bs = place_base_stations(config.n, config.c_r)?;
    let mac_m = mac_cluster_parameter(config.delta, config.c1)?;
    let m = bs.m();
    let cubes = grid.cube_count();
    let n = config.n;

    let mut ls: Vec<u32> = variants.iter().map(|v| v.l).collect();
    ls.sort_unstable();
    ls.dedup();

    let rounds = par_map(config.rounds as usize, |r| {
        let rf = round_flows(config, &model, &grid, r as u32);
        let stats = threshold_stats(&rf, cubes, &ls);
        let all_hops: u64 = rf.hops.iter().map(|&h| h as u64).sum();
        variants
            .iter()
            .map(|v| {
                let st = stats[ls.binary_search(&v.l).unwrap()];
                let ef = st.transit as f64 / cubes as f64;
                let lan = per_node_adhoc_throughput(ef, mac_m, v.wa).normalized;
                let lambda_a = st.na as f64 * lan;
                let lambda_c = m.min(st.nc as usize) as f64 * v.wc;
                RoundRecord {
                    round: r as u32,
                    na: st.na,
                    nc: st.nc,
                    ef,
                    f_max: st.f_max,
                    lambda_a_n: lan,
                    lambda_a,
                    lambda_a_bottleneck: st.na as f64 * v.wa / (st.f_max.max(1) as f64),
                    lambda_c,
                    lambda_total: lambda_a + lambda_c,
                    mean_hops: all_hops as f64 / n as f64,
                    mean_adhoc_hops: if st.na == 0 { 0.0 } else { st.adhoc_hops as f64 / st.na as f64 },
                }
            })
            .collect::<Vec<_>>()
    });

    Ok(variants
        .iter()
        .enumerate()
        .map(|(vi, v)| {
            let recs: Vec<RoundRecord> = rounds.iter().map(|r| r[vi].clone()).collect();
            let field = |f: fn(&RoundRecord) -> f64| mean_sem(recs.iter().map(f));
            let (na, na_se) = field(|r| r.na as f64);
            let (ef_avg, ef_se) = field(|r| r.ef);
            let (la, la_se) = field(|r| r.lambda_a);
            let (lc, lc_se) = field(|r| r.lambda_c);
            let (lt, lt_se) = field(|r| r.lambda_total);
            let (ah, ah_se) = field(|r| r.mean_adhoc_hops);
            let lan = field(|r| r.lambda_a_n).0;
            SimResult {
                config: NetworkConfig { l: v.l, wa: v.wa, wc: v.wc, ..config.clone() },
                k: grid.k,
                m,
                mac_m,
                na,
                nc: field(|r| r.nc as f64).0,
                ef_avg,
                f_max: field(|r| r.f_max as f64).0,
                lambda_a_n: lan,
                lambda_a_n_raw: lan / tdma_slots(mac_m) as f64,
                lambda_a: la,
                lambda_a_bottleneck: field(|r| r.lambda_a_bottleneck).0,
                lambda_c: lc,
                lambda_total: lt,
                mean_hops: field(|r| r.mean_hops).0,
                mean_adhoc_hops: ah,
                sem: RoundSem {
                    na: na_se,
                    ef: ef_se,
                    lambda_a: la_se,
                    lambda_c: lc_se,
                    lambda_total: lt_se,
                    mean_adhoc_hops: ah_se,
                },
                per_round: recs,
            }
        })
        .collect())
}

pub fn simulate(config: &NetworkConfig) -> Result<SimResult> {
    Ok(simulate_variants(config, &[Variant::of(config)])?.remove(0))
}

/// The same flows with every flow ad hoc and the whole bandwidth on the ad
/// hoc side.
pub fn pure_adhoc_variant(config: &NetworkConfig) -> Result<Variant> {
    let grid = build_cube_grid(config)?;
    Ok(Variant { l: grid.max_hops(), wa: config.total_bandwidth(), wc: 0.0 })
}

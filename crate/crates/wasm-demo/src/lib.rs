//! Browser bindings. Every export returns a JSON string so the page needs no
//! glue beyond `JSON.parse`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use hybridnet::experiment::{run_sweep, summarize, Comparison, ExperimentPlan, SweepAxis};
use hybridnet::geometry::{build_cube_grid, place_nodes};
use hybridnet::hops::{hop_joint, HopMode, Sources};
use hybridnet::rng::stream;
use hybridnet::scaling::{adhoc_throughput_law, total_throughput_order, OrderTerm};
use hybridnet::NetworkConfig;

/// Largest network the page will simulate; keeps the tab responsive.
pub const MAX_N: usize = 2000;

#[derive(Serialize)]
struct TheoryView {
    region: u8,
    lambda_a: String,
    lambda_total: String,
    optimal_l: String,
    optimal_l_value: Option<f64>,
    dominant_class: String,
    notes: Vec<String>,
    /// `(L, lambda_total order value)` for L = 1..=max hops.
    curve: Vec<(u32, f64)>,
}

#[derive(Serialize)]
struct SweepPoint {
    l: u32,
    hybrid: f64,
    hybrid_sem: f64,
    pure: f64,
    adhoc_hops: f64,
    pure_hops: f64,
}

#[derive(Serialize)]
struct SweepView {
    best_l: u32,
    points: Vec<SweepPoint>,
}

fn config(n: usize, alpha: f64, beta: f64, gamma: f64) -> Result<NetworkConfig, String> {
    if !(8..=MAX_N).contains(&n) {
        return Err(format!("n must be in 8..={MAX_N} here"));
    }
    let cfg = NetworkConfig { n, alpha, beta, gamma, ..Default::default() };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn theory_json(n: usize, alpha: f64, beta: f64, gamma: f64) -> Result<String, String> {
    let cfg = config(n, alpha, beta, gamma)?;
    let law = adhoc_throughput_law(alpha, beta, gamma).map_err(|e| e.to_string())?;
    let total: OrderTerm = total_throughput_order(&cfg).map_err(|e| e.to_string())?;
    let max_hops = build_cube_grid(&cfg).map_err(|e| e.to_string())?.max_hops();
    let curve = (1..=max_hops).map(|l| (l, total.eval(n as f64, l as f64))).collect();
    to_json(&TheoryView {
        region: law.region,
        lambda_a: law.lambda_a.to_string(),
        lambda_total: total.to_string(),
        optimal_l: law.optimal_l.to_string(),
        optimal_l_value: law.optimal_l_value(n as f64),
        dominant_class: format!("{:?}", law.dominant_class).to_lowercase(),
        notes: law.notes,
        curve,
    })
}

pub fn sweep_l_json(n: usize, alpha: f64, beta: f64, gamma: f64, seeds: u32, seed: u64) -> Result<String, String> {
    let mut cfg = config(n, alpha, beta, gamma)?;
    cfg.seed = seed;
    cfg.rounds = 2;
    let max_hops = build_cube_grid(&cfg).map_err(|e| e.to_string())?.max_hops();
    let mut plan = ExperimentPlan::new(cfg, SweepAxis::L, (1..=max_hops).map(f64::from).collect());
    plan.seeds = seeds.clamp(1, 64);
    plan.comparison = Comparison::PureAdhocBaseline;
    let records = run_sweep(&plan).map_err(|e| e.to_string())?;
    let points: Vec<SweepPoint> = summarize(&records, SweepAxis::L)
        .into_iter()
        .map(|r| SweepPoint {
            l: r.value as u32,
            hybrid: r.lambda_total.mean,
            hybrid_sem: r.lambda_total.sem,
            pure: r.baseline_lambda_total.map_or(f64::NAN, |m| m.mean),
            adhoc_hops: r.mean_adhoc_hops.mean,
            pure_hops: r.baseline_mean_hops.map_or(f64::NAN, |m| m.mean),
        })
        .collect();
    let best_l = hybridnet::experiment::find_optimal_l(&records).map_or(1, |(l, _)| l);
    to_json(&SweepView { best_l, points })
}

pub fn hop_pmf_json(n: usize, alpha: f64, beta: f64, gamma: f64, samples: usize, seed: u64) -> Result<String, String> {
    let cfg = config(n, alpha, beta, gamma)?;
    let positions = place_nodes(n, &mut stream(seed, 0, 0));
    let mode = HopMode::MonteCarlo { samples: samples.clamp(1000, 1_000_000), seed };
    let joint = hop_joint(&positions, &cfg, Sources::All, mode).map_err(|e| e.to_string())?;
    to_json(&serde_json::json!({ "leader": joint.leader, "normal": joint.normal }))
}

/// Closed-form law for one parameter point.
#[wasm_bindgen]
pub fn theory(n: usize, alpha: f64, beta: f64, gamma: f64) -> Result<String, JsError> {
    theory_json(n, alpha, beta, gamma).map_err(|e| JsError::new(&e))
}

/// Simulated total throughput over every threshold, hybrid and pure ad hoc.
#[wasm_bindgen]
pub fn sweep_l(n: usize, alpha: f64, beta: f64, gamma: f64, seeds: u32, seed: u64) -> Result<String, JsError> {
    sweep_l_json(n, alpha, beta, gamma, seeds, seed).map_err(|e| JsError::new(&e))
}

/// Hop-count mass split by leader and normal sources.
#[wasm_bindgen]
pub fn hop_pmf(n: usize, alpha: f64, beta: f64, gamma: f64, samples: usize, seed: u64) -> Result<String, JsError> {
    hop_pmf_json(n, alpha, beta, gamma, samples, seed).map_err(|e| JsError::new(&e))
}

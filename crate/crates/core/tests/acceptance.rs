//! End-to-end acceptance checks. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr so it shows up even when output is captured.

use std::io::Write;
use std::time::Instant;

use rand::Rng;

use hybridnet::experiment::{find_optimal_l, fit_loglog, run_sweep, summarize, Comparison, ExperimentPlan, SweepAxis};
use hybridnet::geometry::{build_cube_grid, place_nodes, Point3};
use hybridnet::hops::{hop_joint, shell_cube_count, HopJoint, HopMode, Sources};
use hybridnet::rng::stream;
use hybridnet::scaling::{adhoc_throughput_law, pr1_orders, pr2_orders, truncated_hop_orders};
use hybridnet::sim::simulate;
use hybridnet::topology::{
    distance_weights, inclusion_probabilities, inclusion_probability, sample_contact_group, DegreeDistribution,
    SymPolyTable,
};
use hybridnet::NetworkConfig;

fn report(id: u32, pass: bool, started: Instant, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id}: {verdict} ({:.1}s) {detail}\n", started.elapsed().as_secs_f64());
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {detail}");
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Brute force over all subsets: `sigma[q]` and per-candidate inclusion
/// mass for every `q`.
fn enumerate(weights: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let len = weights.len();
    let mut sigma = vec![0.0; len + 1];
    let mut member = vec![vec![0.0; len]; len + 1];
    for mask in 0u32..(1 << len) {
        let q = mask.count_ones() as usize;
        let prod: f64 = (0..len).filter(|i| mask >> i & 1 == 1).map(|i| weights[i]).product();
        sigma[q] += prod;
        for i in (0..len).filter(|i| mask >> i & 1 == 1) {
            member[q][i] += prod;
        }
    }
    (sigma, member)
}

#[test]
fn c01_combinatorial_exactness() {
    let t = Instant::now();
    let mut rng = stream(101, 0, 0);
    let mut worst = 0.0f64;
    for inst in 0..50 {
        let len = rng.gen_range(2..=12);
        let n = len + 1;
        let alpha = rng.gen_range(0.0..4.0);
        let positions = place_nodes(n, &mut rng);
        let w = distance_weights(&positions, inst % n, alpha, 1e-3).unwrap();
        let (sigma, member) = enumerate(&w.weights);
        let table = SymPolyTable::new(&w.weights, len).unwrap();
        for q in 1..=len {
            worst = worst.max(rel_err(table.sigma(q), sigma[q]));
            for k in 0..len {
                let p = inclusion_probability(&w.weights, q, k).unwrap();
                worst = worst.max(rel_err(p, member[q][k] / sigma[q]));
            }
            let all = inclusion_probabilities(&w.weights, q).unwrap();
            for k in 0..len {
                worst = worst.max(rel_err(all[k], member[q][k] / sigma[q]));
            }
        }
    }
    report(1, worst <= 1e-9, t, &format!("max relative error {worst:.2e} over 50 instances"));
}

#[test]
fn c02_sampler_fidelity() {
    let t = Instant::now();
    let mut rng = stream(202, 0, 0);
    let positions = place_nodes(9, &mut rng);
    let w = distance_weights(&positions, 0, 2.0, 1e-3).unwrap();
    let (q, draws) = (3, 100_000);
    let mut hits = vec![0u32; w.len()];
    for _ in 0..draws {
        for node in sample_contact_group(&w, q, &mut rng).unwrap().members {
            hits[w.candidate_of(node).unwrap()] += 1;
        }
    }
    let mut worst_group = 0.0f64;
    for (k, &h) in hits.iter().enumerate() {
        let p = inclusion_probability(&w.weights, q, k).unwrap();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        worst_group = worst_group.max((h as f64 / draws as f64 - p).abs() / se);
    }

    let dist = DegreeDistribution::new(50, 2.5).unwrap();
    let draws = 1_000_000;
    let mut counts = vec![0u32; 50];
    for _ in 0..draws {
        counts[dist.sample(&mut rng)] += 1;
    }
    let mut worst_degree = 0.0f64;
    for q in 1..50 {
        let p = dist.pmf(q);
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        worst_degree = worst_degree.max((counts[q] as f64 / draws as f64 - p).abs() / se);
    }
    let pass = worst_group <= 3.0 && worst_degree <= 3.0;
    report(2, pass, t, &format!("max deviation {worst_group:.2} SE (contact group), {worst_degree:.2} SE (degree)"));
}

#[test]
fn c03_inclusion_lln() {
    let t = Instant::now();
    let n = 2000;
    let positions = place_nodes(n, &mut stream(303, 0, 0));
    let floor = build_cube_grid(&NetworkConfig { n, ..Default::default() }).unwrap().side;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for alpha in [0.0, 1.0, 2.0, 3.0] {
        let w = distance_weights(&positions, 0, alpha, floor).unwrap();
        for q in [5, 50, 500] {
            let pi = inclusion_probabilities(&w.weights, q).unwrap();
            let mean = pi.iter().map(|p| n as f64 * p / q as f64).sum::<f64>() / pi.len() as f64;
            lo = lo.min(mean);
            hi = hi.max(mean);
        }
    }
    let pass = lo >= 0.9 && hi <= 1.1;
    report(3, pass, t, &format!("mean n*Pr/q in [{lo:.4}, {hi:.4}]"));
}

#[test]
fn c04_probability_partition() {
    let t = Instant::now();
    let mut rng = stream(404, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(20..=200);
        let config = NetworkConfig {
            n,
            alpha: rng.gen_range(0.0..4.0),
            beta: rng.gen_range(0.0..5.0),
            gamma: rng.gen_range(1.1..3.0),
            l: rng.gen_range(0..6),
            ..Default::default()
        };
        let positions = place_nodes(n, &mut rng);
        let source = rng.gen_range(0..n);
        let joint = hop_joint(&positions, &config, Sources::One(source), HopMode::Exact).unwrap();
        worst = worst.max((joint.class_probs(config.l).total() - 1.0).abs());
    }
    report(4, worst <= 1e-9, t, &format!("max |sum - 1| = {worst:.2e} over 20 instances"));
}

#[test]
fn c05_shell_formula() {
    let t = Instant::now();
    let counts: Vec<u64> = (1..=10).map(|x| shell_cube_count(x).unwrap()).collect();
    let pass = counts.iter().zip(1u64..).all(|(&c, x)| c == 4 * x * x + 2) && counts[1] == 18;
    report(5, pass, t, &format!("counts {counts:?}"));
}

#[test]
fn c06_flow_conservation() {
    let t = Instant::now();
    let config = NetworkConfig { n: 500, rounds: 1000, seed: 606, ..Default::default() };
    let result = simulate(&config).unwrap();
    let bad = result.per_round.iter().filter(|r| (r.na + r.nc) as usize != config.n).count();
    let pass = bad == 0 && result.per_round.len() == 1000;
    report(6, pass, t, &format!("{} rounds, {bad} violate na + nc = n", result.per_round.len()));
}

fn l_sweep_plan(n: usize, seed: u64, seeds: u32, rounds: u32) -> ExperimentPlan {
    let base =
        NetworkConfig { n, alpha: 1.0, beta: 0.5, gamma: 2.0, wa: 0.5, wc: 0.5, seed, rounds, ..Default::default() };
    let max_hops = build_cube_grid(&base).unwrap().max_hops();
    let mut plan = ExperimentPlan::new(base, SweepAxis::L, (1..=max_hops).map(f64::from).collect());
    plan.seeds = seeds;
    plan
}

#[test]
fn c07_hybrid_beats_pure() {
    let t = Instant::now();
    let sizes = [200, 500, 1000, 2000];
    let mut ok = 0;
    let mut notes = Vec::new();
    for n in sizes {
        let mut plan = l_sweep_plan(n, 700, 32, 4);
        plan.comparison = Comparison::PureAdhocBaseline;
        let records = run_sweep(&plan).unwrap();
        let (best_l, hybrid_total) = find_optimal_l(&records).unwrap();
        let row = summarize(&records, SweepAxis::L).into_iter().find(|r| r.value == best_l as f64).unwrap();
        let pure_total = row.baseline_lambda_total.unwrap().mean;
        let pure_hops = row.baseline_mean_hops.unwrap().mean;
        let hybrid_hops = row.mean_adhoc_hops.mean;
        let good = hybrid_hops <= pure_hops && hybrid_total >= pure_total;
        ok += good as usize;
        notes.push(format!(
            "n={n} L={best_l} hops {hybrid_hops:.2}/{pure_hops:.2} total {hybrid_total:.1}/{pure_total:.1}"
        ));
    }
    let pass = ok as f64 >= 0.9 * sizes.len() as f64;
    report(7, pass, t, &format!("{ok}/{} sweep points hold (hybrid/pure): {}", sizes.len(), notes.join("; ")));
}

#[test]
fn c08_region7_slope() {
    let t = Instant::now();
    let base = NetworkConfig { alpha: 4.0, beta: 5.0, gamma: 2.0, seed: 800, rounds: 2, ..Default::default() };
    let mut plan = ExperimentPlan::new(base, SweepAxis::N, vec![1000.0, 2000.0, 5000.0, 10_000.0]);
    plan.seeds = 4;
    let rows = summarize(&run_sweep(&plan).unwrap(), SweepAxis::N);
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.lambda_a.mean).collect();
    let fit = fit_loglog(&xs, &ys).unwrap();
    let pass = (0.85..=1.15).contains(&fit.slope);
    report(8, pass, t, &format!("slope {:.3} +/- {:.3}", fit.slope, fit.stderr));
}

#[test]
fn c09_optimal_l() {
    let t = Instant::now();
    let n = 2000;
    let plan = l_sweep_plan(n, 900, 32, 4);
    let records = run_sweep(&plan).unwrap();
    let (best_l, _) = find_optimal_l(&records).unwrap();
    let law = adhoc_throughput_law(1.0, 0.5, 2.0).unwrap();
    let l_star = law.optimal_l_value(n as f64).expect("region 1 has a finite threshold");
    let (lo, hi) = (l_star / 4.0, 4.0 * l_star);
    let pass = (lo..=hi).contains(&(best_l as f64));
    report(
        9,
        pass,
        t,
        &format!("region {} L* = {l_star:.3}, band [{lo:.2}, {hi:.2}], simulated argmax L = {best_l}", law.region),
    );
}

/// Exact marginals averaged over a fixed spread of sources at `n <= 500`,
/// Monte Carlo over all sources above.
fn finite_n_joint(positions: &[Point3], config: &NetworkConfig) -> HopJoint {
    let n = config.n;
    if n <= 500 {
        let picks = 16;
        let mut acc: Option<HopJoint> = None;
        for i in 0..picks {
            let j = hop_joint(positions, config, Sources::One(i * n / picks), HopMode::Exact).unwrap();
            acc = Some(match acc {
                None => j,
                Some(mut a) => {
                    for (x, v) in a.leader.iter_mut().zip(&j.leader) {
                        *x += v;
                    }
                    for (x, v) in a.normal.iter_mut().zip(&j.normal) {
                        *x += v;
                    }
                    a
                }
            });
        }
        let mut a = acc.unwrap();
        a.leader.iter_mut().chain(a.normal.iter_mut()).for_each(|x| *x /= picks as f64);
        a
    } else {
        hop_joint(positions, config, Sources::All, HopMode::MonteCarlo { samples: 400_000, seed: 1010 }).unwrap()
    }
}

#[test]
fn c10_closed_form_cross_validation() {
    let t = Instant::now();
    let l = 2u32;
    let (pr1a_order, _) = pr1_orders(0.0).unwrap();
    let (pr2a_order, _) = pr2_orders(1.0, 1.0, 2.0).unwrap();
    let (_, _, e_order) = truncated_hop_orders(1.0, 1.0, 2.0).unwrap();
    let mut ratios: [Vec<f64>; 3] = Default::default();
    for n in [250usize, 500, 1000, 2000] {
        let positions = place_nodes(n, &mut stream(1000, n as u64, 0));
        let nf = n as f64;
        let leader_cfg = NetworkConfig { n, alpha: 0.0, beta: 0.0, gamma: 2.0, l, ..Default::default() };
        let pr1a = finite_n_joint(&positions, &leader_cfg).class_probs(l).pr1a;
        ratios[0].push(pr1a_order.eval(nf, l as f64) / pr1a);

        let normal_cfg = NetworkConfig { n, alpha: 1.0, beta: 1.0, gamma: 2.0, l, ..Default::default() };
        let joint = finite_n_joint(&positions, &normal_cfg);
        ratios[1].push(pr2a_order.eval(nf, l as f64) / joint.class_probs(l).pr2a);
        ratios[2].push(e_order.eval(nf, l as f64) / joint.moments(l, n, 1.0).e_prime);
    }
    let spread = |v: &[f64]| {
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    };
    let spreads: Vec<f64> = ratios.iter().map(|v| spread(v)).collect();
    let pass = spreads.iter().all(|&s| s <= 4.0);
    report(
        10,
        pass,
        t,
        &format!("ratio spread pr1a {:.2}, pr2a {:.2}, E' {:.2} (limit 4)", spreads[0], spreads[1], spreads[2]),
    );
}

/// At most one adjacent increase, and that one within a standard error.
fn non_increasing(means: &[(f64, f64)]) -> (bool, usize) {
    let ups: Vec<bool> = means
        .windows(2)
        .filter(|w| w[1].0 > w[0].0)
        .map(|w| w[1].0 - w[0].0 <= (w[0].1.powi(2) + w[1].1.powi(2)).sqrt())
        .collect();
    (ups.len() <= 1 && ups.iter().all(|&x| x), ups.len())
}

#[test]
fn c11_hop_monotonicity() {
    let t = Instant::now();
    let base = NetworkConfig { n: 300, alpha: 1.0, beta: 0.5, gamma: 2.0, seed: 1100, rounds: 4, ..Default::default() };
    let mut out = Vec::new();
    let mut pass = true;
    for axis in [SweepAxis::Alpha, SweepAxis::Beta] {
        let mut plan = ExperimentPlan::new(base.clone(), axis, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        plan.seeds = 32;
        let rows = summarize(&run_sweep(&plan).unwrap(), axis);
        let means: Vec<(f64, f64)> = rows.iter().map(|r| (r.mean_hops.mean, r.mean_hops.sem)).collect();
        let (ok, ups) = non_increasing(&means);
        pass &= ok;
        let shown: Vec<String> = means.iter().map(|m| format!("{:.2}", m.0)).collect();
        out.push(format!("{axis}: [{}] ({ups} increases)", shown.join(", ")));
    }
    report(11, pass, t, &out.join("; "));
}

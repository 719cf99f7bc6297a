//! Parameter sweeps over the simulator, with optional pure ad hoc baseline
//! and closed-form overlay, plus the reductions used to read them.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{kv_lines, NetworkConfig};
use crate::error::{Error, Result};
use crate::par::par_map;
use crate::scaling::{adhoc_throughput_law, total_throughput_order};
use crate::sim::{pure_adhoc_variant, simulate_variants, SimResult, Variant};

pub const DEFAULT_SEEDS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "L")]
    L,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "gamma")]
    Gamma,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::L => "L",
            SweepAxis::N => "n",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Beta => "beta",
            SweepAxis::Gamma => "gamma",
        }
    }

    fn value_of(self, c: &NetworkConfig) -> f64 {
        match self {
            SweepAxis::L => c.l as f64,
            SweepAxis::N => c.n as f64,
            SweepAxis::Alpha => c.alpha,
            SweepAxis::Beta => c.beta,
            SweepAxis::Gamma => c.gamma,
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "L" | "l" => SweepAxis::L,
            "n" => SweepAxis::N,
            "alpha" => SweepAxis::Alpha,
            "beta" => SweepAxis::Beta,
            "gamma" => SweepAxis::Gamma,
            _ => return Err(Error::InvalidArgument(format!("unknown sweep axis {s:?}"))),
        })
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    None,
    PureAdhocBaseline,
    TheoryOverlay,
}

impl FromStr for Comparison {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => Comparison::None,
            "pure_adhoc_baseline" | "baseline" => Comparison::PureAdhocBaseline,
            "theory_overlay" | "theory" => Comparison::TheoryOverlay,
            _ => return Err(Error::InvalidArgument(format!("unknown comparison {s:?}"))),
        })
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::None => "none",
            Comparison::PureAdhocBaseline => "pure_adhoc_baseline",
            Comparison::TheoryOverlay => "theory_overlay",
        })
    }
}

/// A sweep of one parameter over a list of values, repeated over seeds
/// `base.seed, base.seed + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub base: NetworkConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub seeds: u32,
    pub comparison: Comparison,
    pub csv: Option<PathBuf>,
    pub jsonl: Option<PathBuf>,
    pub summary_csv: Option<PathBuf>,
}

/// Plan-level keys; everything else in a plan file is a config key.
pub const PLAN_KEYS: [&str; 7] = ["sweep", "values", "seeds", "comparison", "csv", "jsonl", "summary_csv"];

/// Parses `1,2,5` or an inclusive integer range `1..8`.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (i64, i64) = (
            a.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad range start in {text:?}")))?,
            b.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad range end in {text:?}")))?,
        );
        return Ok((a..=b).map(|v| v as f64).collect());
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad sweep value {s:?}"))))
        .collect()
}

impl ExperimentPlan {
    pub fn new(base: NetworkConfig, axis: SweepAxis, values: Vec<f64>) -> Self {
        ExperimentPlan {
            base,
            axis,
            values,
            seeds: DEFAULT_SEEDS,
            comparison: Comparison::None,
            csv: None,
            jsonl: None,
            summary_csv: None,
        }
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut plan = ExperimentPlan::new(NetworkConfig::default(), SweepAxis::L, Vec::new());
        let mut axis_seen = false;
        for (line, key, value) in kv_lines(text)? {
            let wrap = |e: Error| Error::Parse { line, message: e.to_string() };
            match key {
                "sweep" => {
                    plan.axis = value.parse().map_err(wrap)?;
                    axis_seen = true;
                }
                "values" => plan.values = parse_values(value).map_err(wrap)?,
                "seeds" => {
                    plan.seeds = value
                        .parse()
                        .map_err(|_| Error::Parse { line, message: format!("bad seed count {value:?}") })?
                }
                "comparison" => plan.comparison = value.parse().map_err(wrap)?,
                "csv" => plan.csv = Some(PathBuf::from(value)),
                "jsonl" => plan.jsonl = Some(PathBuf::from(value)),
                "summary_csv" => plan.summary_csv = Some(PathBuf::from(value)),
                _ => plan.base.set(key, value).map_err(wrap)?,
            }
        }
        if !axis_seen {
            return Err(Error::InvalidConfig("plan has no `sweep` key".into()));
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut plan = Self::from_kv_str(&text)?;
        // output paths are relative to the plan file
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut plan.csv, &mut plan.jsonl, &mut plan.summary_csv].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(plan)
    }

    pub fn to_kv_string(&self) -> String {
        let mut out = format!(
            "sweep = {}\nvalues = {}\nseeds = {}\ncomparison = {}\n",
            self.axis,
            self.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            self.seeds,
            self.comparison
        );
        for (k, p) in [("csv", &self.csv), ("jsonl", &self.jsonl), ("summary_csv", &self.summary_csv)] {
            if let Some(p) = p {
                out.push_str(&format!("{k} = {}\n", p.display()));
            }
        }
        out.push_str(&self.base.to_kv_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep value list is empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("sweep values must be strictly increasing".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidConfig("seeds must be >= 1".into()));
        }
        for &v in &self.values {
            let cfg = self.point_config(v, 0)?;
            cfg.validate()?;
            if self.axis == SweepAxis::N && v < 8.0 {
                return Err(Error::InvalidConfig(format!("n values must be >= 8 (got {v})")));
            }
        }
        Ok(())
    }

    /// Config of one sweep point and seed index.
    pub fn point_config(&self, value: f64, seed_index: u32) -> Result<NetworkConfig> {
        let mut cfg = self.base.clone();
        cfg.seed = self.base.seed.wrapping_add(seed_index as u64);
        let integral = |what: &str| -> Result<u64> {
            if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as u64)
            } else {
                Err(Error::InvalidConfig(format!("{what} sweep values must be non-negative integers (got {value})")))
            }
        };
        match self.axis {
            SweepAxis::L => cfg.l = integral("L")? as u32,
            SweepAxis::N => cfg.n = integral("n")? as usize,
            SweepAxis::Alpha => cfg.alpha = value,
            SweepAxis::Beta => cfg.beta = value,
            SweepAxis::Gamma => cfg.gamma = value,
        }
        Ok(cfg)
    }

    pub fn record_count(&self) -> usize {
        self.values.len() * self.seeds as usize
    }
}

/// One simulated (sweep value, seed) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(rename = "Wa")]
    pub wa: f64,
    #[serde(rename = "Wc")]
    pub wc: f64,
    pub delta: f64,
    pub c1: f64,
    pub c_r: f64,
    pub q0: Option<f64>,
    pub seed: u64,
    pub rounds: u32,
    pub k: u32,
    pub m: usize,
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
    pub sem_lambda_a: f64,
    pub sem_lambda_c: f64,
    pub sem_lambda_total: f64,
    pub sem_mean_adhoc_hops: f64,
    pub baseline_lambda_a: Option<f64>,
    pub baseline_lambda_total: Option<f64>,
    pub baseline_mean_hops: Option<f64>,
    pub theory_region: Option<u8>,
    pub theory_lambda_a: Option<f64>,
    pub theory_lambda_total: Option<f64>,
    #[serde(rename = "theory_optimal_L")]
    pub theory_optimal_l: Option<f64>,
    /// Wall-clock time of the simulation call this record came from. Not
    /// written to files, which must be reproducible.
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Column order of the record CSV.
pub const RECORD_COLUMNS: [&str; 40] = [
    "n",
    "alpha",
    "beta",
    "gamma",
    "L",
    "Wa",
    "Wc",
    "delta",
    "c1",
    "c_r",
    "q0",
    "seed",
    "rounds",
    "k",
    "m",
    "mac_m",
    "na",
    "nc",
    "ef_avg",
    "f_max",
    "lambda_a_n",
    "lambda_a_n_raw",
    "lambda_a",
    "lambda_a_bottleneck",
    "lambda_c",
    "lambda_total",
    "mean_hops",
    "mean_adhoc_hops",
    "sem_lambda_a",
    "sem_lambda_c",
    "sem_lambda_total",
    "sem_mean_adhoc_hops",
    "baseline_lambda_a",
    "baseline_lambda_total",
    "baseline_mean_hops",
    "theory_region",
    "theory_lambda_a",
    "theory_lambda_total",
    "theory_optimal_L",
    "wall_ms",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentRecord {
    fn from_sim(sim: &SimResult, baseline: Option<&SimResult>, wall_ms: f64) -> Self {
        let c = &sim.config;
        ExperimentRecord {
            n: c.n,
            alpha: c.alpha,
            beta: c.beta,
            gamma: c.gamma,
            l: c.l,
            wa: c.wa,
            wc: c.wc,
            delta: c.delta,
            c1: c.c1,
            c_r: c.c_r,
            q0: c.q0,
            seed: c.seed,
            rounds: c.rounds,
            k: sim.k,
            m: sim.m,
            mac_m: sim.mac_m,
            na: sim.na,
            nc: sim.nc,
            ef_avg: sim.ef_avg,
            f_max: sim.f_max,
            lambda_a_n: sim.lambda_a_n,
            lambda_a_n_raw: sim.lambda_a_n_raw,
            lambda_a: sim.lambda_a,
            lambda_a_bottleneck: sim.lambda_a_bottleneck,
            lambda_c: sim.lambda_c,
            lambda_total: sim.lambda_total,
            mean_hops: sim.mean_hops,
            mean_adhoc_hops: sim.mean_adhoc_hops,
            sem_lambda_a: sim.sem.lambda_a,
            sem_lambda_c: sim.sem.lambda_c,
            sem_lambda_total: sim.sem.lambda_total,
            sem_mean_adhoc_hops: sim.sem.mean_adhoc_hops,
            baseline_lambda_a: baseline.map(|b| b.lambda_a),
            baseline_lambda_total: baseline.map(|b| b.lambda_total),
            baseline_mean_hops: baseline.map(|b| b.mean_hops),
            theory_region: None,
            theory_lambda_a: None,
            theory_lambda_total: None,
            theory_optimal_l: None,
            wall_ms,
        }
    }

    pub fn config(&self) -> NetworkConfig {
        NetworkConfig {
            n: self.n,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            l: self.l,
            wa: self.wa,
            wc: self.wc,
            delta: self.delta,
            c1: self.c1,
            c_r: self.c_r,
            q0: self.q0,
            seed: self.seed,
            rounds: self.rounds,
        }
    }

    /// Fills the closed-form columns; an unsupported regime leaves them empty.
    fn attach_theory(&mut self) -> Result<()> {
        let cfg = self.config();
        let law = match adhoc_throughput_law(cfg.alpha, cfg.beta, cfg.gamma) {
            Ok(law) => law,
            Err(e) if e.is_unsupported_regime() => return Ok(()),
            Err(e) => return Err(e),
        };
        let (n, l) = (cfg.n as f64, cfg.l.max(1) as f64);
        self.theory_region = Some(law.region);
        self.theory_lambda_a = Some(law.lambda_a.eval(n, l) * cfg.wa);
        self.theory_lambda_total = Some(total_throughput_order(&cfg)?.eval(n, l));
        self.theory_optimal_l = law.optimal_l_value(n);
        Ok(())
    }

    /// Numeric column by CSV name; `None` for empty or unknown columns.
    pub fn field(&self, name: &str) -> Option<f64> {
        let i = RECORD_COLUMNS.iter().position(|c| *c == name)?;
        self.csv_values()[i].parse().ok()
    }

    pub fn csv_values(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.alpha.to_string(),
            self.beta.to_string(),
            self.gamma.to_string(),
            self.l.to_string(),
            self.wa.to_string(),
            self.wc.to_string(),
            self.delta.to_string(),
            self.c1.to_string(),
            self.c_r.to_string(),
            opt(&self.q0),
            self.seed.to_string(),
            self.rounds.to_string(),
            self.k.to_string(),
            self.m.to_string(),
            self.mac_m.to_string(),
            self.na.to_string(),
            self.nc.to_string(),
            self.ef_avg.to_string(),
            self.f_max.to_string(),
            self.lambda_a_n.to_string(),
            self.lambda_a_n_raw.to_string(),
            self.lambda_a.to_string(),
            self.lambda_a_bottleneck.to_string(),
            self.lambda_c.to_string(),
            self.lambda_total.to_string(),
            self.mean_hops.to_string(),
            self.mean_adhoc_hops.to_string(),
            self.sem_lambda_a.to_string(),
            self.sem_lambda_c.to_string(),
            self.sem_lambda_total.to_string(),
            self.sem_mean_adhoc_hops.to_string(),
            opt(&self.baseline_lambda_a),
            opt(&self.baseline_lambda_total),
            opt(&self.baseline_mean_hops),
            opt(&self.theory_region),
            opt(&self.theory_lambda_a),
            opt(&self.theory_lambda_total),
            opt(&self.theory_optimal_l),
            self.wall_ms.to_string(),
        ]
    }
}

/// Result of `f` with the milliseconds it took; 0 on targets without a clock.
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    #[cfg(not(target_arch = "wasm32"))]
    {
        let t0 = std::time::Instant::now();
        let out = f();
        (out, t0.elapsed().as_secs_f64() * 1e3)
    }
    #[cfg(target_arch = "wasm32")]
    {
        (f(), 0.0)
    }
}

/// Runs every (sweep value, seed) point. L sweeps evaluate all thresholds on
/// one set of flows per seed, so the curve over L is paired.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<Vec<ExperimentRecord>> {
    plan.validate()?;
    let seeds = plan.seeds as usize;
    let baseline = plan.comparison == Comparison::PureAdhocBaseline;

    let mut records = if plan.axis == SweepAxis::L {
        let per_seed = par_map(seeds, |s| -> Result<Vec<ExperimentRecord>> {
            let cfg = plan.point_config(plan.values[0], s as u32)?;
            let mut variants: Vec<Variant> =
                plan.values.iter().map(|&v| Variant { l: v as u32, wa: cfg.wa, wc: cfg.wc }).collect();
            if baseline {
                variants.push(pure_adhoc_variant(&cfg)?);
            }
            let (sims, ms) = timed(|| simulate_variants(&cfg, &variants));
            let sims = sims?;
            let base = baseline.then(|| &sims[sims.len() - 1]);
            Ok(sims[..plan.values.len()].iter().map(|s| ExperimentRecord::from_sim(s, base, ms)).collect())
        });
        let per_seed: Vec<Vec<ExperimentRecord>> = per_seed.into_iter().collect::<Result<_>>()?;
        // value-major order
        let mut out = Vec::with_capacity(plan.record_count());
        for vi in 0..plan.values.len() {
            for seed_recs in &per_seed {
                out.push(seed_recs[vi].clone());
            }
        }
        out
    } else {
        let tasks = plan.record_count();
        par_map(tasks, |t| -> Result<ExperimentRecord> {
            let (vi, s) = (t / seeds, t % seeds);
            let cfg = plan.point_config(plan.values[vi], s as u32)?;
            let mut variants = vec![Variant::of(&cfg)];
            if baseline {
                variants.push(pure_adhoc_variant(&cfg)?);
            }
            let (sims, ms) = timed(|| simulate_variants(&cfg, &variants));
            let sims = sims?;
            Ok(ExperimentRecord::from_sim(&sims[0], sims.get(1), ms))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
    };

    if plan.comparison == Comparison::TheoryOverlay {
        for r in &mut records {
            r.attach_theory()?;
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}"))),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Creates `path` and any missing parent directories.
fn create_file(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    File::create(path).map_err(io_err(path))
}

/// CSV columns exclude `wall_ms` so reruns are byte-identical.
pub fn write_records<W: Write>(mut out: W, records: &[ExperimentRecord], format: Format) -> std::io::Result<()> {
    let cols = RECORD_COLUMNS.len() - 1;
    match format {
        Format::Csv => {
            writeln!(out, "{}", RECORD_COLUMNS[..cols].join(","))?;
            for r in records {
                writeln!(out, "{}", r.csv_values()[..cols].join(","))?;
            }
        }
        Format::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

pub fn emit(records: &[ExperimentRecord], format: Format, path: &Path) -> Result<()> {
    let file = create_file(path)?;
    let mut w = BufWriter::new(file);
    write_records(&mut w, records, format).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Mean and standard error across seeds at one sweep value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanSem {
    pub mean: f64,
    pub sem: f64,
}

impl MeanSem {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len() as f64;
        if values.is_empty() {
            return MeanSem { mean: f64::NAN, sem: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / k;
        let sem = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        };
        MeanSem { mean, sem }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub value: f64,
    pub seeds: usize,
    pub lambda_a: MeanSem,
    pub lambda_c: MeanSem,
    pub lambda_total: MeanSem,
    pub mean_hops: MeanSem,
    pub mean_adhoc_hops: MeanSem,
    pub baseline_lambda_total: Option<MeanSem>,
    pub baseline_mean_hops: Option<MeanSem>,
    pub theory_lambda_total: Option<f64>,
    pub theory_optimal_l: Option<f64>,
}

/// Per-value means over seeds, in sweep order.
pub fn summarize(records: &[ExperimentRecord], axis: SweepAxis) -> Vec<SummaryRow> {
    let mut values: Vec<f64> = Vec::new();
    for r in records {
        let v = axis.value_of(&r.config());
        if !values.contains(&v) {
            values.push(v);
        }
    }
    values
        .into_iter()
        .map(|v| {
            let group: Vec<&ExperimentRecord> = records.iter().filter(|r| axis.value_of(&r.config()) == v).collect();
            let col = |f: fn(&ExperimentRecord) -> f64| MeanSem::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            let opt_col = |f: fn(&ExperimentRecord) -> Option<f64>| {
                let xs: Option<Vec<f64>> = group.iter().map(|r| f(r)).collect();
                xs.map(|xs| MeanSem::of(&xs))
            };
            SummaryRow {
                value: v,
                seeds: group.len(),
                lambda_a: col(|r| r.lambda_a),
                lambda_c: col(|r| r.lambda_c),
                lambda_total: col(|r| r.lambda_total),
                mean_hops: col(|r| r.mean_hops),
                mean_adhoc_hops: col(|r| r.mean_adhoc_hops),
                baseline_lambda_total: opt_col(|r| r.baseline_lambda_total),
                baseline_mean_hops: opt_col(|r| r.baseline_mean_hops),
                theory_lambda_total: opt_col(|r| r.theory_lambda_total).map(|m| m.mean),
                theory_optimal_l: group.first().and_then(|r| r.theory_optimal_l),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(mut out: W, axis: SweepAxis, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(
        out,
        "{},seeds,lambda_a,lambda_a_sem,lambda_c,lambda_c_sem,lambda_total,lambda_total_sem,mean_hops,mean_hops_sem,\
         mean_adhoc_hops,mean_adhoc_hops_sem,baseline_lambda_total,baseline_lambda_total_sem,baseline_mean_hops,\
         baseline_mean_hops_sem,theory_lambda_total,theory_optimal_L",
        axis.key()
    )?;
    let ms = |m: &Option<MeanSem>| match m {
        Some(m) => format!("{},{}", m.mean, m.sem),
        None => ",".to_string(),
    };
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.value,
            r.seeds,
            r.lambda_a.mean,
            r.lambda_a.sem,
            r.lambda_c.mean,
            r.lambda_c.sem,
            r.lambda_total.mean,
            r.lambda_total.sem,
            r.mean_hops.mean,
            r.mean_hops.sem,
            r.mean_adhoc_hops.mean,
            r.mean_adhoc_hops.sem,
            ms(&r.baseline_lambda_total),
            ms(&r.baseline_mean_hops),
            opt(&r.theory_lambda_total),
            opt(&r.theory_optimal_l),
        )?;
    }
    Ok(())
}

/// Writes every output path the plan names.
pub fn emit_plan_outputs(plan: &ExperimentPlan, records: &[ExperimentRecord]) -> Result<()> {
    if let Some(p) = &plan.csv {
        emit(records, Format::Csv, p)?;
    }
    if let Some(p) = &plan.jsonl {
        emit(records, Format::Jsonl, p)?;
    }
    if let Some(p) = &plan.summary_csv {
        let file = create_file(p)?;
        let mut w = BufWriter::new(file);
        write_summary_csv(&mut w, plan.axis, &summarize(records, plan.axis)).map_err(io_err(p))?;
        w.flush().map_err(io_err(p))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
    /// Points dropped for a non-positive or missing coordinate.
    pub excluded: usize,
}

/// Least squares slope of `ln y` against `ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let excluded = xs.len().min(ys.len()) - pts.len();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "log-log fit needs 3 positive points, {} left after dropping {excluded}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (k - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, stderr, intercept, points: pts.len(), excluded })
}

/// Log-log slope between two record columns, one point per record.
pub fn fit_loglog_slope(records: &[ExperimentRecord], x_field: &str, y_field: &str) -> Result<SlopeFit> {
    for f in [x_field, y_field] {
        if !RECORD_COLUMNS.contains(&f) {
            return Err(Error::InvalidArgument(format!("unknown record column {f:?}")));
        }
    }
    let xs: Vec<f64> = records.iter().map(|r| r.field(x_field).unwrap_or(f64::NAN)).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.field(y_field).unwrap_or(f64::NAN)).collect();
    fit_loglog(&xs, &ys)
}

/// Threshold with the highest seed-mean total throughput; ties go to the
/// smaller L. `None` for an empty set.
pub fn find_optimal_l(records: &[ExperimentRecord]) -> Option<(u32, f64)> {
    let mut ls: Vec<u32> = records.iter().map(|r| r.l).collect();
    ls.sort_unstable();
    ls.dedup();
    let mut best: Option<(u32, f64)> = None;
    for l in ls {
        let xs: Vec<f64> = records.iter().filter(|r| r.l == l).map(|r| r.lambda_total).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((l, mean));
        }
    }
    best
}

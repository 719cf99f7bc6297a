use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hybridnet::experiment::{
    emit_plan_outputs, find_optimal_l, fit_loglog, parse_values, run_sweep, summarize, write_records,
    write_summary_csv, Comparison, ExperimentPlan, Format, SweepAxis,
};
use hybridnet::geometry::place_nodes;
use hybridnet::hops::{hop_joint, write_class_csv, write_hop_csv, HopMode, Sources};
use hybridnet::rng::stream;
use hybridnet::scaling::{
    adhoc_throughput_law, ef_order, flow_count_orders, normal_hop_order, pr1_orders, pr2_orders,
    total_throughput_order, truncated_hop_orders, unit_range, OrderTerm,
};
use hybridnet::sim::{pure_adhoc_variant, simulate_variants, write_rounds_jsonl, write_sim_csv, Variant};
use hybridnet::topology::{realize_topology, write_topology_dump};
use hybridnet::{Error, NetworkConfig};

/// Hybrid ad hoc/cellular network simulator and scaling-law calculator.
///
/// Parameters come from, in increasing priority: built-in defaults, the
/// `--config` file (or the plan file for `run`), `<prefix><key>` environment
/// variables, and command-line flags.
#[derive(Parser)]
#[command(name = "sim", version)]
struct Cli {
    /// Base parameter file with `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Prefix for environment overrides, e.g. `SIM_alpha=2`.
    #[arg(long, global = true, default_value = "SIM_")]
    env_prefix: String,

    #[command(flatten)]
    params: ParamFlags,

    #[command(subcommand)]
    command: Command,
}

/// One flag per network parameter, named like the config keys.
#[derive(Args, Default)]
struct ParamFlags {
    /// Number of nodes.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Concentration factor of contact groups.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Activity factor of destination choice.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Clustering factor of the group-size law.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Hop threshold of L-routing.
    #[arg(long = "L", global = true)]
    l: Option<u32>,
    /// Ad hoc bandwidth.
    #[arg(long = "Wa", global = true)]
    wa: Option<f64>,
    /// Cellular bandwidth.
    #[arg(long = "Wc", global = true)]
    wc: Option<f64>,
    /// Guard zone factor.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Cube side as a fraction of the range.
    #[arg(long, global = true)]
    c1: Option<f64>,
    /// Range constant.
    #[arg(long = "c_r", global = true)]
    c_r: Option<f64>,
    /// Leader threshold, or `auto`.
    #[arg(long, global = true)]
    q0: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Traffic rounds per run.
    #[arg(long, global = true)]
    rounds: Option<u32>,
}

impl ParamFlags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("n", self.n.map(|v| v.to_string()));
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("gamma", self.gamma.map(|v| v.to_string()));
        push("L", self.l.map(|v| v.to_string()));
        push("Wa", self.wa.map(|v| v.to_string()));
        push("Wc", self.wc.map(|v| v.to_string()));
        push("delta", self.delta.map(|v| v.to_string()));
        push("c1", self.c1.map(|v| v.to_string()));
        push("c_r", self.c_r.map(|v| v.to_string()));
        push("q0", self.q0.clone());
        push("seed", self.seed.map(|v| v.to_string()));
        push("rounds", self.rounds.map(|v| v.to_string()));
        out
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a plan file.
    Run {
        plan: PathBuf,
        /// Record format on stdout when the plan names no output file.
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
    /// Sweep the hop threshold against the pure ad hoc baseline.
    SweepL {
        #[arg(long, default_value = "1..16")]
        values: String,
        #[arg(long, default_value_t = 32)]
        seeds: u32,
        /// Skip the pure ad hoc baseline.
        #[arg(long)]
        no_baseline: bool,
        /// Also write one record per (L, seed) here.
        #[arg(long, value_name = "FILE")]
        records: Option<PathBuf>,
    },
    /// Sweep the network size and fit log-log slopes.
    SweepN {
        #[arg(long, default_value = "100,200,500,1000,2000")]
        values: String,
        #[arg(long, default_value_t = 32)]
        seeds: u32,
        #[arg(long, value_enum, default_value_t = CompareWith::Baseline)]
        comparison: CompareWith,
        #[arg(long, value_name = "FILE")]
        records: Option<PathBuf>,
    },
    /// Print the closed-form orders for one parameter point.
    Theory {
        #[arg(long)]
        json: bool,
    },
    /// Hybrid against pure ad hoc and theory at one parameter point.
    Compare {
        #[arg(long, default_value_t = 32)]
        seeds: u32,
        #[arg(long)]
        json: bool,
    },
    /// One simulation: SimResult CSV row, optionally per-round JSONL.
    Simulate {
        #[arg(long, value_name = "FILE")]
        rounds_jsonl: Option<PathBuf>,
    },
    /// Hop distribution or flow-class probabilities of one placement.
    Hops {
        #[arg(long, value_enum, default_value_t = HopEstimator::Mc)]
        mode: HopEstimator,
        /// Monte-Carlo draws.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Restrict to one source node.
        #[arg(long)]
        source: Option<usize>,
        /// Emit the four flow-class probabilities instead of the pmf.
        #[arg(long)]
        classes: bool,
    },
    /// Dump one realized topology as line records.
    Topology,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareWith {
    None,
    Baseline,
    Theory,
}

#[derive(Clone, Copy, ValueEnum)]
enum HopEstimator {
    Exact,
    Mc,
}

fn main() -> ExitCode {
    // clap's own usage status is 2, which is reserved for unsupported regimes
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let unsupported = e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_unsupported_regime));
            ExitCode::from(if unsupported { 2 } else { 1 })
        }
    }
}

fn apply_overrides(cfg: &mut NetworkConfig, cli: &Cli) -> Result<()> {
    cfg.apply_env(&cli.env_prefix).context("environment override")?;
    for (k, v) in cli.params.pairs() {
        cfg.set(k, &v).with_context(|| format!("--{k}"))?;
    }
    Ok(())
}

fn base_config(cli: &Cli) -> Result<NetworkConfig> {
    let mut cfg = match &cli.config {
        Some(p) => NetworkConfig::from_kv_file(p)?,
        None => NetworkConfig::default(),
    };
    apply_overrides(&mut cfg, cli)?;
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| p.display().to_string())?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Run { plan, format } => {
            let mut plan = ExperimentPlan::from_kv_file(plan)?;
            apply_overrides(&mut plan.base, &cli)?;
            let records = run_sweep(&plan)?;
            emit_plan_outputs(&plan, &records)?;
            if plan.csv.is_none() && plan.jsonl.is_none() && plan.summary_csv.is_none() {
                let format = match format {
                    OutFormat::Csv => Format::Csv,
                    OutFormat::Jsonl => Format::Jsonl,
                };
                let mut out = output(None)?;
                write_records(&mut out, &records, format)?;
                out.flush()?;
            }
            eprintln!("{} records", records.len());
        }
        Command::SweepL { values, seeds, no_baseline, records } => {
            let base = base_config(&cli)?;
            let mut plan = ExperimentPlan::new(base, SweepAxis::L, parse_values(values)?);
            plan.seeds = *seeds;
            if !no_baseline {
                plan.comparison = Comparison::PureAdhocBaseline;
            }
            let recs = run_sweep(&plan)?;
            write_sweep(&plan, &recs, records.as_deref())?;
            if let Some((l, total)) = find_optimal_l(&recs) {
                eprintln!("best L = {l} (mean lambda_total {total:.4})");
            }
            match adhoc_throughput_law(plan.base.alpha, plan.base.beta, plan.base.gamma) {
                Ok(law) => match law.optimal_l_value(plan.base.n as f64) {
                    Some(v) => eprintln!("region {} threshold L* = {v:.3} ({})", law.region, law.optimal_l),
                    None => eprintln!("region {} has no finite threshold", law.region),
                },
                Err(e) => eprintln!("theory: {e}"),
            }
        }
        Command::SweepN { values, seeds, comparison, records } => {
            let base = base_config(&cli)?;
            let mut plan = ExperimentPlan::new(base, SweepAxis::N, parse_values(values)?);
            plan.seeds = *seeds;
            plan.comparison = match comparison {
                CompareWith::None => Comparison::None,
                CompareWith::Baseline => Comparison::PureAdhocBaseline,
                CompareWith::Theory => Comparison::TheoryOverlay,
            };
            let recs = run_sweep(&plan)?;
            let rows = write_sweep(&plan, &recs, records.as_deref())?;
            let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
            for (name, ys) in [
                ("lambda_a", rows.iter().map(|r| r.lambda_a.mean).collect::<Vec<_>>()),
                ("lambda_total", rows.iter().map(|r| r.lambda_total.mean).collect()),
            ] {
                match fit_loglog(&xs, &ys) {
                    Ok(f) => eprintln!("slope of {name} vs n: {:.3} +/- {:.3}", f.slope, f.stderr),
                    Err(e) => eprintln!("slope of {name} vs n: {e}"),
                }
            }
        }
        Command::Theory { json } => theory(&base_config(&cli)?, *json)?,
        Command::Compare { seeds, json } => compare(&base_config(&cli)?, *seeds, *json)?,
        Command::Simulate { rounds_jsonl } => {
            let cfg = base_config(&cli)?;
            let result = simulate_variants(&cfg, &[Variant::of(&cfg)])?.remove(0);
            let mut out = output(None)?;
            write_sim_csv(&mut out, std::slice::from_ref(&result), true)?;
            out.flush()?;
            if let Some(p) = rounds_jsonl {
                let mut w = output(Some(p))?;
                write_rounds_jsonl(&mut w, &result)?;
                w.flush()?;
            }
        }
        Command::Hops { mode, samples, source, classes } => {
            let cfg = base_config(&cli)?;
            let positions = place_nodes(cfg.n, &mut stream(cfg.seed, 0, 0));
            let sources = source.map_or(Sources::All, Sources::One);
            let mode = match mode {
                HopEstimator::Exact => HopMode::Exact,
                HopEstimator::Mc => HopMode::MonteCarlo { samples: *samples, seed: cfg.seed },
            };
            let joint = hop_joint(&positions, &cfg, sources, mode)?;
            let mut out = output(None)?;
            if *classes {
                write_class_csv(&mut out, &cfg, &joint.class_probs(cfg.l), true)?;
            } else {
                write_hop_csv(&mut out, &cfg, &joint.distribution(), true)?;
            }
            out.flush()?;
        }
        Command::Topology => {
            let cfg = base_config(&cli)?;
            let topo = realize_topology(&cfg, &mut stream(cfg.seed, 0, 0))?;
            let mut out = output(None)?;
            write_topology_dump(&topo, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Summary CSV on stdout, full records to `records` if given.
fn write_sweep(
    plan: &ExperimentPlan,
    recs: &[hybridnet::experiment::ExperimentRecord],
    records: Option<&Path>,
) -> Result<Vec<hybridnet::experiment::SummaryRow>> {
    if let Some(p) = records {
        hybridnet::experiment::emit(recs, Format::Csv, p)?;
    }
    let rows = summarize(recs, plan.axis);
    let mut out = output(None)?;
    write_summary_csv(&mut out, plan.axis, &rows)?;
    out.flush()?;
    Ok(rows)
}

/// Canonical form and value at `(n, L)`, or the reason it is missing.
fn order_line(name: &str, term: &hybridnet::Result<OrderTerm>, n: f64, l: f64) -> (String, serde_json::Value) {
    match term {
        Ok(t) => {
            let (v, floored) = t.eval_flagged(n, l);
            let mark = if floored { " [ln(1/(L*r)) floored]" } else { "" };
            (
                format!("{name:<8} {t}  = {v:.6e}{mark}"),
                serde_json::json!({ "order": t.to_string(), "value": v, "floored": floored }),
            )
        }
        Err(e) => (format!("{name:<8} {e}"), serde_json::json!({ "error": e.to_string() })),
    }
}

fn theory(cfg: &NetworkConfig, json: bool) -> Result<()> {
    let (a, b, g) = (cfg.alpha, cfg.beta, cfg.gamma);
    let (n, l) = (cfg.n as f64, cfg.l as f64);
    let split2 = |r: hybridnet::Result<(OrderTerm, OrderTerm)>| match r {
        Ok((x, y)) => (Ok(x), Ok(y)),
        Err(e) => (Err(clone_err(&e)), Err(e)),
    };
    let (pr1a, pr1c) = split2(pr1_orders(b));
    let (pr2a, pr2c) = split2(pr2_orders(a, b, g));
    let (na, nc) = split2(flow_count_orders(a, b, g));
    let (e1, e2, e) = match truncated_hop_orders(a, b, g) {
        Ok((x, y, z)) => (Ok(x), Ok(y), Ok(z)),
        Err(err) => (Err(clone_err(&err)), Err(clone_err(&err)), Err(err)),
    };
    let terms: Vec<(&str, hybridnet::Result<OrderTerm>)> = vec![
        ("pr1a", pr1a),
        ("pr1c", pr1c),
        ("pr2a", pr2a),
        ("pr2c", pr2c),
        ("Na", na),
        ("Nc", nc),
        ("E1", e1),
        ("E2", e2),
        ("E", e),
        ("E[X]", normal_hop_order(a, b, g)),
        ("E[F]", ef_order(a, b, g)),
        ("lambda", total_throughput_order(cfg)),
    ];
    let law = adhoc_throughput_law(a, b, g);

    let mut lines = vec![format!("alpha={a} beta={b} gamma={g} n={} L={} r={:.6}", cfg.n, cfg.l, unit_range(n))];
    let mut orders = serde_json::Map::new();
    for (name, t) in &terms {
        let (line, value) = order_line(name, t, n, l);
        lines.push(line);
        orders.insert(name.to_string(), value);
    }
    let law_json = match &law {
        Ok(law) => {
            let l_star = law.optimal_l_value(n);
            lines.push(format!("region   {}", law.region));
            lines.push(format!("lambda_a {}", law.lambda_a));
            lines.push(match l_star {
                Some(v) => format!("L*       {}  = {v:.4}", law.optimal_l),
                None => format!("L*       {}", law.optimal_l),
            });
            lines.push(format!("dominant {:?}", law.dominant_class).to_lowercase());
            for note in &law.notes {
                lines.push(format!("note     {note}"));
            }
            serde_json::json!({
                "region": law.region,
                "lambda_a": law.lambda_a.to_string(),
                "optimal_L": law.optimal_l.to_string(),
                "optimal_L_value": l_star,
                "lambda_a_at_optimum": law.lambda_at_optimum(n),
                "dominant_class": format!("{:?}", law.dominant_class).to_lowercase(),
                "notes": law.notes,
            })
        }
        Err(e) => {
            lines.push(format!("region   {e}"));
            serde_json::json!({ "error": e.to_string() })
        }
    };
    if json {
        let doc = serde_json::json!({ "config": cfg, "orders": orders, "law": law_json });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        for line in lines {
            println!("{line}");
        }
    }
    // partial output is still printed; the exit status reports what was missing
    let mut errors = terms.into_iter().filter_map(|(_, t)| t.err()).chain(law.err());
    if let Some(e) = errors.next() {
        return Err(e.into());
    }
    Ok(())
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::UnsupportedRegime(m) => Error::UnsupportedRegime(m.clone()),
        other => Error::InvalidArgument(other.to_string()),
    }
}

fn compare(cfg: &NetworkConfig, seeds: u32, json: bool) -> Result<()> {
    let mut plan = ExperimentPlan::new(cfg.clone(), SweepAxis::L, vec![cfg.l as f64]);
    plan.seeds = seeds;
    plan.comparison = Comparison::PureAdhocBaseline;
    let recs = run_sweep(&plan)?;
    let row = summarize(&recs, SweepAxis::L).remove(0);
    let pure = pure_adhoc_variant(cfg)?;
    let theory = total_throughput_order(cfg);
    let law = adhoc_throughput_law(cfg.alpha, cfg.beta, cfg.gamma);
    let (n, l) = (cfg.n as f64, cfg.l as f64);
    let base_total = row.baseline_lambda_total.expect("baseline requested");
    let base_hops = row.baseline_mean_hops.expect("baseline requested");
    if json {
        let doc = serde_json::json!({
            "config": cfg,
            "seeds": seeds,
            "hybrid": { "lambda_total": row.lambda_total, "lambda_a": row.lambda_a, "lambda_c": row.lambda_c, "mean_adhoc_hops": row.mean_adhoc_hops },
            "pure_adhoc": { "L": pure.l, "Wa": pure.wa, "lambda_total": base_total, "mean_hops": base_hops },
            "theory": {
                "lambda_total": theory.as_ref().map(|t| t.to_string()).ok(),
                "lambda_total_value": theory.as_ref().map(|t| t.eval(n, l)).ok(),
                "region": law.as_ref().map(|w| w.region).ok(),
                "optimal_L_value": law.as_ref().ok().and_then(|w| w.optimal_l_value(n)),
            },
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!("{:<16} {:>14} {:>10} {:>14} {:>10}", "", "hybrid", "sem", "pure ad hoc", "sem");
        println!(
            "{:<16} {:>14.4} {:>10.4} {:>14.4} {:>10.4}",
            "lambda_total", row.lambda_total.mean, row.lambda_total.sem, base_total.mean, base_total.sem
        );
        println!(
            "{:<16} {:>14.4} {:>10.4} {:>14.4} {:>10.4}",
            "mean hops", row.mean_adhoc_hops.mean, row.mean_adhoc_hops.sem, base_hops.mean, base_hops.sem
        );
        match (&theory, &law) {
            (Ok(t), Ok(w)) => {
                println!("theory region {}: lambda_total ~ {t} = {:.4e}", w.region, t.eval(n, l));
                if let Some(v) = w.optimal_l_value(n) {
                    println!("theory threshold L* = {v:.3}");
                }
            }
            (Err(e), _) | (_, Err(e)) => println!("theory: {e}"),
        }
    }
    Ok(())
}

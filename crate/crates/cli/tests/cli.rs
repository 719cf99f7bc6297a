use std::process::{Command, Output};

fn sim(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sim"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn theory_prints_region_and_threshold() {
    let o = sim(&["theory", "--alpha", "1", "--beta", "0.5", "--gamma", "2", "--n", "2000", "--L", "3"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("region   1"), "{out}");
    assert!(out.contains("lambda_a n^0.333333 * lnn^0.666667 * L^1.5 + lnn * L^2.5"), "{out}");
    assert!(out.contains("L*       n^0.266667 * lnn^-0.666667"), "{out}");
}

#[test]
fn unsupported_regime_exits_2() {
    let o = sim(&["theory", "--alpha", "1", "--beta", "1", "--gamma", "0.8"], &[]);
    assert_eq!(o.status.code(), Some(2));
    // the supported parts are still printed
    assert!(stdout(&o).contains("pr1a"));
}

#[test]
fn other_failures_exit_1() {
    let o = sim(&["theory", "--alpha=-1"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = sim(&["simulate", "--n", "lots"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(sim(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn env_overrides_and_flags_win() {
    let o = sim(&["theory", "--json"], &[("SIM_alpha", "4"), ("SIM_BETA", "5")]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["law"]["region"], 7);
    let o = sim(&["theory", "--json", "--beta", "0.5"], &[("SIM_alpha", "4"), ("SIM_beta", "5")]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["config"]["beta"], 0.5);
    assert_eq!(doc["config"]["alpha"], 4.0);
}

#[test]
fn config_file_is_the_base() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.cfg");
    std::fs::write(&path, "alpha = 4\nbeta = 5\n").unwrap();
    let o = sim(&["--config", path.to_str().unwrap(), "theory", "--json"], &[]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["law"]["region"], 7);
}

#[test]
fn simulate_emits_sim_csv_and_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("rounds.jsonl");
    let o = sim(&["simulate", "--n", "50", "--rounds", "3", "--rounds-jsonl", jsonl.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(
        out.lines().next().unwrap(),
        "n,alpha,beta,gamma,L,Wa,Wc,seed,rounds,na,nc,ef_avg,f_max,lambda_a,lambda_c,lambda_total"
    );
    assert_eq!(out.lines().count(), 2);
    assert_eq!(std::fs::read_to_string(&jsonl).unwrap().lines().count(), 3);
}

#[test]
fn run_plan_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("p.plan");
    std::fs::write(&plan, "sweep = L\nvalues = 1..3\nseeds = 2\nn = 60\nrounds = 2\ncsv = out.csv\n").unwrap();
    let csv = dir.path().join("out.csv");
    assert_eq!(sim(&["run", plan.to_str().unwrap()], &[]).status.code(), Some(0));
    let first = std::fs::read(&csv).unwrap();
    assert_eq!(sim(&["run", plan.to_str().unwrap()], &[]).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&csv).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 1 + 3 * 2);
}

#[test]
fn sweeps_print_summaries() {
    let o = sim(&["sweep-l", "--values", "1..3", "--seeds", "2", "--n", "60", "--rounds", "2"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("L,seeds,"));
    assert_eq!(out.lines().count(), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("best L ="));

    let o = sim(&["sweep-n", "--values", "40,80,160", "--seeds", "2", "--rounds", "2"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("n,seeds,"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("slope of lambda_a vs n"));
}

#[test]
fn hops_and_topology_dumps() {
    let o = sim(&["hops", "--n", "40", "--mode", "exact"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("n,alpha,beta,gamma,L,seed,x,p\n"));
    let total: f64 = out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let o = sim(&["topology", "--n", "10"], &[]);
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| !l.starts_with("edge")).count(), 10);
    assert_eq!(out.lines().filter(|l| l.ends_with(" comm")).count(), 10);
}

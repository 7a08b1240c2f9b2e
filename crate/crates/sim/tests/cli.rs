use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relay-noma"))
        .args(args)
        .current_dir(dir)
        .env_remove("RNOMA_SEED")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_writes_results_and_solution() {
    let d = tempfile::tempdir().unwrap();
    ok(&cli(&["run", "--strategy", "D-mNOMA-BF", "--trials", "2", "--out", "r.csv", "--solution", "s.csv"], d.path()));
    let r = read(d.path(), "r.csv");
    assert_eq!(r.lines().count(), 3);
    assert!(r.lines().nth(1).unwrap().starts_with("single-run,D-mNOMA-BF,none,"));
    let s = read(d.path(), "s.csv");
    assert_eq!(s.lines().next().unwrap(), "slot,cell,sat,user,demand_bps,rate_bps,power_w,beam_norm_sq,infeasible");
    // 16 cells of 4 users at desk scale
    assert_eq!(s.lines().count(), 1 + 64);
}

#[test]
fn seed_flag_and_env_change_output() {
    let d = tempfile::tempdir().unwrap();
    ok(&cli(&["dump-channels", "--seed", "3", "--out", "a.csv"], d.path()));
    ok(&cli(&["dump-channels", "--seed", "4", "--out", "b.csv"], d.path()));
    let out = Command::new(env!("CARGO_BIN_EXE_relay-noma"))
        .args(["dump-channels", "--out", "c.csv"])
        .current_dir(d.path())
        .env("RNOMA_SEED", "3")
        .output()
        .unwrap();
    ok(&out);
    let (a, b, c) = (read(d.path(), "a.csv"), read(d.path(), "b.csv"), read(d.path(), "c.csv"));
    assert_ne!(a, b);
    assert_eq!(a, c);
    assert!(a.starts_with("slot,sat_id,cell_id,user_id,gain_db,aod_deg,offaxis_deg,distance_km\n"));
}

#[test]
fn dumped_plan_drives_fixed_plan_strategy() {
    let d = tempfile::tempdir().unwrap();
    ok(&cli(&["dump-plan", "--planner", "doppler", "--out", "plan.csv"], d.path()));
    ok(&cli(&["run", "--strategy", "D-mNOMA-BF", "--out", "d.csv"], d.path()));
    ok(&cli(&["run", "--strategy", "F-mNOMA-BF", "--plan", "plan.csv", "--out", "f.csv"], d.path()));
    let metrics = |text: &str| text.lines().nth(1).unwrap().split(',').skip(5).collect::<Vec<_>>().join(",");
    assert_eq!(metrics(&read(d.path(), "d.csv")), metrics(&read(d.path(), "f.csv")));
}

#[test]
fn fixed_plan_without_file_fails() {
    let d = tempfile::tempdir().unwrap();
    let out = cli(&["run", "--strategy", "F-mNOMA-BF", "--out", "f.csv"], d.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--plan"));
}

#[test]
fn unknown_strategy_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let out = cli(&["run", "--strategy", "D-xNOMA-BF", "--out", "x.csv"], d.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("D-xNOMA-BF"));
    assert!(!d.path().join("x.csv").exists());
}

#[test]
fn sweep_kind_from_config_table() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("c.toml"),
        "seed = 9\n[experiment]\nkind = \"power-sweep\"\nstrategies = [\"A-eNOMA-BF\"]\nvalues = [19.0, 25.0]\ntrials = 2\n",
    )
    .unwrap();
    ok(&cli(&["sweep", "--config", "c.toml", "--out", "p.csv"], d.path()));
    let text = read(d.path(), "p.csv");
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.starts_with("power-sweep,A-eNOMA-BF,sat_power_dbw,")));
    // the flag beats the table
    ok(&cli(&["sweep", "--config", "c.toml", "--trials", "1", "--out", "q.csv"], d.path()));
    assert_eq!(read(d.path(), "q.csv").lines().count(), 3);
}

#[test]
fn solve_instance_file() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("i.toml"),
        "gains = [1e-15, 4e-14]\ndemands_bps = [3e8, 6e8]\nnoise_w = 2.5e-14\nbandwidth_hz = 5e8\nbudget_w = 300.0\nr_min_bps = 5e6\n",
    )
    .unwrap();
    for solver in ["monotonic", "expcone", "oma", "equal"] {
        let out = format!("{solver}.csv");
        ok(&cli(&["solve", "--instance", "i.toml", "--solver", solver, "--out", &out], d.path()));
        let text = read(d.path(), &out);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "user_id,p_w,rate_bps");
        let total: f64 = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
        assert!(total <= 300.0 * (1.0 + 1e-9), "{solver}: {total}");
    }
    // both demands are reachable, so the exact solvers meet them
    let text = read(d.path(), "monotonic.csv");
    let r: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!((r[0] / 3e8 - 1.0).abs() < 1e-6 && (r[1] / 6e8 - 1.0).abs() < 1e-6, "{r:?}");
}

#[test]
fn ephemeris_has_every_satellite_each_slot() {
    let d = tempfile::tempdir().unwrap();
    ok(&cli(&["dump-ephemeris", "--out", "e.csv"], d.path()));
    let text = read(d.path(), "e.csv");
    let rows = text.lines().count() - 1;
    // desk scale: 3 satellites over ceil(16 / 3) slots
    assert_eq!(rows, 3 * 6);
}

#[test]
fn shipped_example_config_runs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    ok(&cli(&["sweep", "--config", cfg.to_str().unwrap(), "--trials", "1", "--out", "x.csv"], d.path()));
    // 6 demand values x 5 strategies
    assert_eq!(read(d.path(), "x.csv").lines().count(), 31);
}

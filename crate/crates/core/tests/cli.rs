use std::path::Path;
use std::process::{Command, Output};

use relaysim::report::{read_report, sim_header, Report};

const CONFIG: &str = r#"
num_ues = 2
power_ue_dbm = [20, 20]
power_rs_dbm = 20
power_bs_dbm = 46
frames = 4000
seed = 3

[omega_db]
U1R = -6
U2R = -8
U1B = -40
U2B = -41
RB = 0

[search]
batch_frames = 2000
max_iters = 20

[sweep]
axis = "power_rs"
values = [20, 30]
protocols = ["odba", "nodba", "benchmark"]
"#;

fn relaysim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaysim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("c.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sweep_csv_has_one_row_per_point_and_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("s.csv");
    let o = relaysim(&["sweep", "--config", &cfg, "--format", "csv", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], sim_header().join(","));
    assert!(lines[1].starts_with("20,odba,"));
    assert!(lines[6].starts_with("30,benchmark,"));
}

#[test]
fn run_json_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("r.json");
    let o = relaysim(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--frames", "3000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let Report::Run(r) = read_report(&out).unwrap() else { panic!("expected a run report") };
    assert_eq!(r.frames, 3000);
    assert!(r.search.is_some());
}

#[test]
fn stdout_is_identical_across_execution_modes_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let a = relaysim(&["search", "--config", &cfg]);
    let b = relaysim(&["search", "--config", &cfg]);
    let c = relaysim(&["search", "--config", &cfg, "--sequential"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let d = relaysim(&["search", "--config", &cfg, "--seed", "4"]);
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn search_csv_lists_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = relaysim(&["search", "--config", &cfg, "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("iteration,lambda_ul,lambda_dl,drift_ul,drift_dl\n"));
    assert!(text.lines().count() > 1);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad_power = write_config(dir.path(), &CONFIG.replace("power_rs_dbm = 20", "power_rs_dbm = 50"));
    let o = relaysim(&["run", "--config", &bad_power]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let cfg = write_config(dir.path(), CONFIG);
    let o = relaysim(&["run", "--config", &cfg, "--format", "xml"]);
    assert!(!o.status.success());

    let o = relaysim(&["run", "--config", "/nonexistent/c.toml"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/c.toml"));

    let no_sweep = write_config(dir.path(), &CONFIG[..CONFIG.find("[sweep]").unwrap()]);
    let o = relaysim(&["sweep", "--config", &no_sweep]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[sweep]"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        let text = std::fs::read_to_string(&p).unwrap();
        relaysim::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 5);
}

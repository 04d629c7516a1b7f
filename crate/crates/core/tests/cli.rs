use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pd-meshfree"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("PDMF_ORDER")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn report_rows(out: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(out.join("report.csv")).unwrap();
    r.records().map(|r| r.unwrap()).collect()
}

#[test]
fn patch_test_sweep_is_exact_for_every_formulation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep"], &configs().join("patch_test.toml"), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = report_rows(dir.path());
    assert_eq!(rows.len(), 12);
    for row in rows {
        let rms: f64 = row[5].parse().unwrap();
        assert!(rms <= 1e-10, "{row:?}");
        assert_eq!(&row[11], "ok");
    }
}

#[test]
fn report_header_and_field_dump_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "benchmark = \"manufactured\"\nformulation = \"gmls\"\norder = 1\ngrid = \"uniform\"\nladder = [0.5, 0.25]\n",
    );
    let out = run(&["run", "--dump-fields", "--dump-weights"], &cfg, &dir.path().join("o"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("o/report.csv")).unwrap();
    assert!(report.starts_with("case,formulation,order,level,h,rms,rate,grid,delta,nu,seed,status\n"));
    let fields = fs::read_dir(dir.path().join("o"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("fields_"))
        .count();
    assert_eq!(fields, 2);
    let f = fs::read_to_string(dir.path().join("o/fields_manufactured_gmls_n1_uniform_d2.5_L1.csv")).unwrap();
    assert!(f.starts_with("id,x,y,u1,u2,e1,e2\n"));
    let w = fs::read_to_string(dir.path().join("o/weights_manufactured_gmls_n1_uniform_d2.5_L0.csv")).unwrap();
    assert!(w.starts_with("node,neighbor,family,g1,g2\n"));
    assert!(fs::read_to_string(dir.path().join("o/diagnostics.txt")).unwrap().contains("residual="));
}

#[test]
fn reruns_produce_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "benchmark = \"manufactured\"\nformulation = \"ba_gmls\"\norder = 2\ngrid = \"perturbed\"\nseed = 9\nladder = [0.4, 0.2]\n",
    );
    assert!(run(&["run"], &cfg, &dir.path().join("a")).status.success());
    assert!(run(&["run"], &cfg, &dir.path().join("b")).status.success());
    let a = fs::read(dir.path().join("a/report.csv")).unwrap();
    let b = fs::read(dir.path().join("b/report.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "benchmark = \"patch_test\"\nformulation = \"rk\"\norder = 1\ngrid = \"perturbed\"\nseed = 1\nladder = [0.5]\n",
    );
    assert!(run(&["run", "--seed", "42"], &cfg, &dir.path().join("o")).status.success());
    assert_eq!(&report_rows(&dir.path().join("o"))[0][10], "42");
}

#[test]
fn environment_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "benchmark = \"patch_test\"\nformulation = \"rk\"\norder = 1\ngrid = \"uniform\"\nladder = [0.5]\n",
    );
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .env("PDMF_FORMULATION", "ba_gmls")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(&report_rows(&dir.path().join("o"))[0][1], "ba_gmls");
}

#[test]
fn invalid_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "benchmark = \"manufactured\"\nformulation = \"rk\"\norder = 5\ngrid = \"uniform\"\nladder = [0.5]\n");
    assert_eq!(run(&["run"], &cfg, dir.path()).status.code(), Some(2));
    let cfg = write_config(dir.path(), "benchmark = \"manufactured\"\nformulation = \"rk\"\n");
    assert_eq!(run(&["run"], &cfg, dir.path()).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["run"], &missing, dir.path()).status.code(), Some(2));
}

#[test]
fn empty_sweep_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "benchmark = \"manufactured\"\nformulation = \"rk\"\norder = 1\ngrid = \"uniform\"\nladder = [0.5]\n[sweep]\nformulation = []\n",
    );
    assert_eq!(run(&["sweep"], &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn too_small_horizon_exits_with_solver_code() {
    // a cubic basis needs nine neighbors; 1.2h gives eight
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "benchmark = \"manufactured\"\nformulation = \"gmls\"\norder = 3\ngrid = \"uniform\"\ndelta = 1.2\nladder = [0.5]\n",
    );
    let out = run(&["run"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs at least 9"));
    let rows = report_rows(&dir.path().join("o"));
    assert!(rows[0][11].starts_with("error:"));
}

#[test]
fn single_cell_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = "benchmark = \"manufactured\"\nformulation = \"ba_rk\"\norder = 1\ngrid = \"uniform\"\nladder = [0.5, 0.25]\n";
    let cfg = write_config(dir.path(), &format!("{base}[sweep]\nformulation = [\"ba_rk\"]\n"));
    assert!(run(&["sweep"], &cfg, &dir.path().join("s")).status.success());
    assert!(run(&["run"], &cfg, &dir.path().join("r")).status.success());
    assert_eq!(
        fs::read(dir.path().join("s/report.csv")).unwrap(),
        fs::read(dir.path().join("r/report.csv")).unwrap()
    );
}

#[test]
fn expected_rate_marks_final_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "benchmark = \"manufactured\"\nformulation = \"ba_rk\"\norder = 2\ngrid = \"uniform\"\nladder = [0.2, 0.1]\nexpected_rate = 1.7\n",
    );
    assert!(run(&["run"], &cfg, &dir.path().join("o")).status.success());
    let rows = report_rows(&dir.path().join("o"));
    assert_eq!(&rows[0][11], "ok");
    assert_eq!(&rows[1][11], "pass");
}

use std::path::Path;
use std::process::{Command, Output};

use cvtomo_cli::table::{Key, Table};
use cvtomo_cli::ExperimentConfig;

fn cvtomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvtomo")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn defaults_round_trip() {
    let out = cvtomo(&["--print-defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(parsed, ExperimentConfig::default());
    assert_eq!(ExperimentConfig::from_toml(&parsed.to_toml()).unwrap(), parsed);
    assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
}

#[test]
fn config_validation_names_fields() {
    let mut cfg = ExperimentConfig::default();
    cfg.methods.clear();
    cfg.orders = vec![5];
    let msg = format!("{:#}", cfg.validate().unwrap_err());
    assert!(msg.contains("methods:") && msg.contains("orders:"), "{msg}");

    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "methods = []\n");
    let out = cvtomo(&["scrb-table", "--config", &path]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("methods"));

    let path = write_config(dir.path(), "eta = 0.5\n");
    let out = cvtomo(&["scrb-table", "--config", &path]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
}

#[test]
fn scrb_table_fock_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "methods = [\"HET\", \"UHOM\"]\n[states]\ngaussian_mu = []\nfock_n = [0, 1, 2, 3, 4, 5]\n",
    );
    let out = cvtomo(&["scrb-table", "--config", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&out);
    let closed = rows.iter().filter(|r| r[4] == "closed_form").count();
    let numeric = rows.iter().filter(|r| r[4] == "numeric").count();
    assert_eq!((closed, numeric), (2 * 6 * 4, 2 * 6 * 4));
    assert!(rows.iter().all(|r| num(&r[7]) < 1e-3));
}

#[test]
fn scrb_table_vacuum_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "methods = [\"UHOM\", \"BHOMOPT\"]\norders = [2]\n[states]\ngaussian_mu = []\nfock_n = [0]\n",
    );
    let out = cvtomo(&["scrb-table", "--config", &path]);
    assert!(out.status.success());
    let row = rows(&out)
        .into_iter()
        .find(|r| r[2] == "UHOM" && r[4] == "closed_form")
        .unwrap();
    assert!((num(&row[9]) - 33.0 / 32.0).abs() < 1e-12);
}

#[test]
fn figure_theory_columns() {
    let out = cvtomo(&["figure", "fig4"]);
    assert!(out.status.success());
    let rows = rows(&out);
    let pick = |method: &str, m: &str| {
        rows.iter()
            .find(|r| r[2].parse::<f64>().unwrap() == 0.0 && r[3] == method && r[4] == m)
            .map(|r| num(&r[5]))
            .unwrap()
    };
    assert!((pick("BHOMOPT", "2") - 4.0).abs() < 1e-12);
    assert!((pick("HET", "2") - 5.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r[3] != "BHOM"));

    let out = cvtomo(&["figure", "fig3"]);
    let rows = self::rows(&out);
    let curve = |method: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r[3] == method && r[4] == "1")
            .map(|r| num(&r[5]))
            .collect()
    };
    let (het, uhom) = (curve("HET"), curve("UHOM"));
    assert_eq!(het.len(), 21);
    assert!(het.iter().zip(&uhom).all(|(h, u)| u < h));
    assert!(het.windows(2).all(|w| w[1] > w[0]));
    assert!(uhom.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn figure_markers_track_theory() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "methods = [\"HET\", \"UHOM\"]\norders = [1]\n[figure]\nfock_n = [0, 1]\nreplications = 2000\n",
    );
    let out = cvtomo(&["figure", "fig4", "--config", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for r in rows(&out) {
        let ratio = num(&r[8]);
        assert!((0.9..=1.1).contains(&ratio), "{r:?}");
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "replications = 20\nmethods = [\"HET\", \"UHOM\", \"BHOMOPT\"]\norders = [1, 2]\n[states]\ngaussian_mu = [2.0]\nfock_n = [1]\n[sampler]\nhet_events = 2000\nuhom_events_per_point = 50\nbhom_events_per_phase = 500\ngrid_points = 61\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = cvtomo(&["mse", "--config", &path, "--seed", "9", "--threads", "2", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",9")));
}

#[test]
fn validate_suites() {
    let out = cvtomo(&["validate", "crossovers"]);
    assert!(out.status.success());
    let rows = rows(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[5] == "true"));

    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "[states]\ngaussian_mu = [2.0]\nfock_n = []\n[validate]\ncorrelation_replications = 400\nratio_replications = 4000\n",
    );
    for suite in ["appendixB", "appendixA"] {
        let out = cvtomo(&["validate", suite, "--config", &path]);
        assert!(out.status.success(), "{suite}: {}", String::from_utf8_lossy(&out.stdout));
    }
    let out = cvtomo(&["validate", "nonsense"]);
    assert!(!out.status.success());
}

#[test]
fn validate_failure_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "[states]\ngaussian_mu = []\nfock_n = [0]\n[grid]\npoints = 16\n");
    let out = cvtomo(&["validate", "conventions", "--config", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(rows(&out).iter().any(|r| r[5] == "false"));
}

#[test]
fn table_orders_rows_by_key() {
    let mut t = Table::new("k,v");
    t.push(vec![Key::from("b"), Key::from(2.0)], &["b".into(), "2".into()]);
    t.push(vec![Key::from("a"), Key::from(10.0)], &["a".into(), "10".into()]);
    t.push(vec![Key::from("a"), Key::from(9.0)], &["a".into(), "9".into()]);
    let mut buf = Vec::new();
    t.write(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "k,v\na,9\na,10\nb,2\n");
}

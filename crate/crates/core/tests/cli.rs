//! End-to-end runs of the `atomnet` binary.

use std::path::Path;
use std::process::{Command, Output};

fn atomnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atomnet")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bodies_identical_across_job_counts() {
    let runs: [&[&str]; 3] = [
        &["sweep", "--figure", "fig4", "--trials", "200", "--length-km", "20,60,100"],
        &["sweep", "--figure", "fig5b", "--trials", "100", "--length-km", "400,1200"],
        &["sweep", "--figure", "figS4", "--trials", "500"],
    ];
    for args in runs {
        let one = atomnet(&[args, &["--jobs", "1"]].concat());
        let four = atomnet(&[args, &["--jobs", "4"]].concat());
        assert!(one.status.success());
        assert_eq!(one.stdout, four.stdout, "{args:?}");
        assert!(body(&String::from_utf8_lossy(&one.stdout)).lines().count() > 2);
    }
}

#[test]
fn seed_changes_monte_carlo_rows() {
    let a = atomnet(&["sweep", "--figure", "figS4", "--trials", "300", "--seed", "1"]);
    let b = atomnet(&["sweep", "--figure", "figS4", "--trials", "300", "--seed", "2"]);
    assert_ne!(body(&String::from_utf8_lossy(&a.stdout)), body(&String::from_utf8_lossy(&b.stdout)));
}

#[test]
fn metadata_header_records_seed_and_hash() {
    let out = String::from_utf8(atomnet(&["link", "--seed", "99"]).stdout).unwrap();
    assert!(out.contains("# seed: 99\n"));
    assert!(out.lines().any(|l| l.starts_with("# config_sha256: ") && l.len() == "# config_sha256: ".len() + 64));
    assert!(out.contains("# default link.eta_fwm: 0.364 ("));
    assert!(out.contains("# effective_config: {"));
}

#[test]
fn out_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cavity.json");
    let out = atomnet(&["cavity", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let g = v["rows"][0]["g_2pi_hz"].as_f64().unwrap();
    assert!((g / 1.53e6 - 1.0).abs() < 0.01);
    assert_eq!(v["metadata"]["seed"], "1");
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("range.toml", "[link]\neta_fwm = 1.5\n", "link.eta_fwm"),
        ("unknown.toml", "[link]\nfoo = 1\n", "foo"),
        ("type.toml", "[network]\nnesting = \"four\"\n", "nesting"),
    ];
    for (name, text, key) in cases {
        let out = atomnet(&["link", "--config", &write(dir.path(), name, text)]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(key), "{name}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn failed_rows_give_nonzero_exit_and_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "coarse.toml", "[fwm]\ntiming = [0.0, 0.05]\n[fwm.options]\ndt = 1e-6\n");
    let out = atomnet(&["fwm", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(body(&text).lines().filter(|l| l.contains(",error,")).count(), 2);

    let ok = atomnet(&["fwm"]);
    assert!(ok.status.success());
}

#[test]
fn sweep_list_gives_one_row_per_value() {
    let out = String::from_utf8(atomnet(&["link", "--atoms", "10,20,50,100,150,200"]).stdout).unwrap();
    assert_eq!(body(&out).lines().count(), 7);
}

#[test]
fn fig6b_omits_impossible_ladders() {
    let out = atomnet(&["sweep", "--figure", "fig6b", "--trials", "100"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let body = body(&text);
    let rows: Vec<&str> = body.lines().skip(1).collect();
    assert_eq!(rows.len(), 6 * 40);
    let omitted: Vec<&&str> = rows.iter().filter(|r| r.ends_with(",omitted,B > N")).collect();
    // B > N only for N = 10 (B = 11..40) and N = 20 (B = 21..40).
    assert_eq!(omitted.len(), 30 + 20);
    assert!(rows.iter().any(|r| r.starts_with("5e1,200,26,")));
}

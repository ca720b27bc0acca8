use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cellfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellfree")).args(args).output().unwrap()
}

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml")
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn run_writes_all_csvs_with_headers() {
    let out = tempfile::tempdir().unwrap();
    let o = cellfree(&[
        "run",
        "--config",
        config().to_str().unwrap(),
        "--algo",
        "opportunistic",
        "--steps",
        "50",
        "--seed",
        "3",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let expected = [
        ("outage_cdf.csv", "zone,log10_eps,cdf"),
        ("power_cdf.csv", "power_fraction,cdf"),
        ("cluster_size_pdf.csv", "cluster_size,probability"),
        ("reconfig_rate.csv", "step,n_active,reconfigured,rate"),
        ("summary.csv", "metric,value"),
    ];
    for (file, head) in expected {
        assert_eq!(header(&out.path().join(file)), head, "{file}");
    }
    let pdf = std::fs::read_to_string(out.path().join("cluster_size_pdf.csv")).unwrap();
    let mass: f64 = pdf.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() <= 1e-12);
}

#[test]
fn different_seeds_give_different_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let o = cellfree(&[
            "run",
            "--config",
            config().to_str().unwrap(),
            "--algo",
            "closest",
            "--steps",
            "100",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        summaries.push(std::fs::read(out.join("outage_cdf.csv")).unwrap());
    }
    assert_ne!(summaries[0], summaries[1]);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config()).unwrap();
    std::fs::write(&bad, format!("warp_drive = true\n{text}")).unwrap();
    let o = cellfree(&[
        "run",
        "--config",
        bad.to_str().unwrap(),
        "--algo",
        "closest",
        "--steps",
        "1",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warp_drive"));
}

#[test]
fn external_without_endpoint_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = cellfree(&[
        "run",
        "--config",
        config().to_str().unwrap(),
        "--algo",
        "external",
        "--steps",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--listen or --connect"));
}

#[test]
fn small_outage_validation_passes() {
    let o = cellfree(&["validate-outage", "--cases", "8", "--samples", "200000", "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("passed: 8/8"));
}

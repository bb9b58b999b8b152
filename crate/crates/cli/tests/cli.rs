//! End-to-end checks of the `corrpoly` binary: file schemas, exit codes,
//! config layering and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn corrpoly(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrpoly"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("CORRPOLY_WORKERS")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path, command: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, &format!("{command}.json"))).unwrap()
}

#[test]
fn csv_headers_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases: &[(&[&str], &str, &str)] = &[
        (&["free-energy", "--realizations", "4", "--t", "4"], "free-energy.csv", "x,y,se,n,flag"),
        (&["pinning", "--h-list", "0,0.2"], "pinning.csv", "h,f,method,domain,converged"),
        (&["selftest"], "selftest.csv", "check,error,tolerance,passed"),
        (&["variance", "--realizations", "8", "--t-list", "2,4,8,16"], "variance.csv", "x,y,se,n,flag"),
    ];
    for (args, file, header) in cases {
        let out = corrpoly(d, args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(read(d, file).lines().next().unwrap(), *header);
    }
    let out = corrpoly(d, &["fit", "--input", d.join("variance.csv").to_str().unwrap(), "--transform", "loglog-var", "--n-boot", "50"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(d, "fit.csv").lines().next().unwrap(), "slope,intercept,ci_low,ci_high,r_squared,n_boot");
}

#[test]
fn numbers_use_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    corrpoly(dir.path(), &["pinning", "--h-list", "0.2"]);
    let csv = read(dir.path(), "pinning.csv");
    let f = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = f.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{f}");
    assert!(!csv.contains('\r'));
}

#[test]
fn pinning_without_potential_is_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrpoly(dir.path(), &["pinning", "--h-list", "0", "--method", "transfer"]);
    assert_eq!(out.status.code(), Some(0));
    let row = read(dir.path(), "pinning.csv").lines().nth(1).unwrap().to_string();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(cols[4], "true");
}

#[test]
fn output_is_identical_across_worker_counts_and_reruns() {
    let runs = [
        vec!["free-energy", "--realizations", "10", "--t", "8"],
        vec!["diffusivity", "--realizations", "4", "--paths", "3", "--t-list", "4,8"],
        vec!["weak-disorder", "--realizations", "6", "--checkpoints", "4,8"],
        vec!["field-sample", "--dump"],
    ];
    for args in &runs {
        let mut seen: Vec<Vec<u8>> = Vec::new();
        for workers in ["1", "4", "4"] {
            let dir = tempfile::tempdir().unwrap();
            let mut a = args.clone();
            a.extend(["--workers", workers, "--seed", "5"]);
            assert_eq!(corrpoly(dir.path(), &a).status.code(), Some(0));
            let mut bytes = std::fs::read(dir.path().join(format!("{}.csv", args[0]))).unwrap();
            if args[0] == "field-sample" {
                bytes.extend(std::fs::read(dir.path().join("field-sample.bin")).unwrap());
            }
            seen.push(bytes);
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]), "{args:?}");
    }
}

#[test]
fn different_seeds_give_different_output() {
    let dir = tempfile::tempdir().unwrap();
    corrpoly(dir.path(), &["free-energy", "--realizations", "6", "--t", "4", "--seed", "1"]);
    let a = read(dir.path(), "free-energy.csv");
    corrpoly(dir.path(), &["free-energy", "--realizations", "6", "--t", "4", "--seed", "2"]);
    assert_ne!(a, read(dir.path(), "free-energy.csv"));
}

#[test]
fn usage_and_validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["free-energy", "--no-such-flag"][..],
        &["no-such-command"],
        &["pinning", "--method", "guess"],
        &["free-energy", "--set", "polymer.nonsense=1"],
        &["free-energy", "--set", "polymer.beta"],
        &["free-energy", "--realizations", "0"],
        &["variance", "--t-list", "8,4"],
        &["covariance-check", "--theta", "-1"],
        &["fit"],
    ] {
        let out = corrpoly(d, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn strict_mode_turns_warnings_into_exit_three_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["second-moment-check", "--realizations", "3", "--t", "8", "--beta", "1.5"];
    let lax = corrpoly(d, &args);
    assert_eq!(lax.status.code(), Some(0));
    assert!(!manifest(d, "second-moment-check")["warnings"].as_array().unwrap().is_empty());
    std::fs::remove_file(d.join("second-moment-check.csv")).unwrap();
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(corrpoly(d, &strict).status.code(), Some(3));
    assert!(d.join("second-moment-check.csv").exists());
    assert_eq!(manifest(d, "second-moment-check")["exit_status"], 3);
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = corrpoly(dir.path(), &["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "selftest.csv");
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn manifest_records_outputs_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = corrpoly(d, &["variance", "--realizations", "8", "--t-list", "2,4,8", "--beta", "0.7", "--seed", "31", "--svg"]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(d, "variance");
    assert_eq!(m["command"], "variance");
    assert_eq!(m["exit_status"], 0);
    assert_eq!(m["config"]["polymer.beta"], "0.7");
    assert_eq!(m["config"]["run.seed"], "31");
    assert!(m["seed_scheme"].as_str().unwrap().contains("splitmix64"));
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["variance.csv", "variance.svg"]);
    let csv = read(d, "variance.csv");
    let digest = m["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);

    // replay into a fresh directory from the manifest alone
    let again = tempfile::tempdir().unwrap();
    let path = d.join("variance.json");
    let out = corrpoly(again.path(), &["variance", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(again.path(), "variance.csv"), csv);
    let m2 = manifest(again.path(), "variance");
    let strip = |v: &serde_json::Value| {
        let mut c = v["config"].clone();
        c.as_object_mut().unwrap().remove("run.out");
        c
    };
    assert_eq!(strip(&m), strip(&m2));
    assert_eq!(m2["outputs"][0]["sha256"], digest);
}

#[test]
fn key_value_config_files_layer_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("run.conf");
    std::fs::write(&cfg, "# experiment\n[polymer]\nbeta = 0.4\nt = 4\nrealizations = 5\n\nrun.seed = 3\n").unwrap();
    let out = corrpoly(d, &["fractional-moment", "--config", cfg.to_str().unwrap(), "--t", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(d, "fractional-moment");
    assert_eq!(m["config"]["polymer.beta"], "0.4");
    assert_eq!(m["config"]["polymer.t"], "6");
    assert_eq!(m["config"]["run.seed"], "3");
    std::fs::write(&cfg, "polymer.bogus = 1\n").unwrap();
    assert_eq!(corrpoly(d, &["fractional-moment", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn fit_reads_pinning_tables_and_skips_unconverged_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let input = d.join("curve.csv");
    let mut text = String::from("h,f,method,domain,converged\n");
    for h in [0.1f64, 0.2, 0.4, 0.8] {
        text += &format!("{h},{},eigenvalue,10,true\n", 2.0 * h.powf(1.5));
    }
    text += "1.6,99,eigenvalue,10,false\n";
    std::fs::write(&input, text).unwrap();
    let out = corrpoly(d, &["fit", "--input", input.to_str().unwrap(), "--n-boot", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let row = read(d, "fit.csv").lines().nth(1).unwrap().to_string();
    let slope: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!((slope - 1.5).abs() < 1e-12, "{slope}");
    assert!(manifest(d, "fit")["warnings"][0].as_str().unwrap().contains("skipped"));
}

#[test]
fn workers_default_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_corrpoly"))
        .args(["covariance-check", "--out"])
        .arg(dir.path())
        .env("CORRPOLY_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(manifest(dir.path(), "covariance-check")["config"]["run.workers"], "2");
}

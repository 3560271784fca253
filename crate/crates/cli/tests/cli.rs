use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sphmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphmc")).args(args).output().expect("binary runs")
}

fn dataset() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/diabetes.csv")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p
}

fn run_config(dir: &Path, body: &str, out: &str) -> (Output, PathBuf) {
    let cfg = write_config(dir, body);
    let out = dir.join(out);
    let o = sphmc(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"]);
    (o, out)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

const TMG2D: &str = r#"
experiment = "tmg2d"
kernels = ["RWM", "WallHMC-box", "cSphHMC", "sSphHMC"]
seed = 11
[sampler]
iterations = 600
burn_in = 100
"#;

#[test]
fn output_schema_is_stable() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config(dir.path(), TMG2D, "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(
        header(&out.join("summary.csv")),
        "experiment,s,kernel,D,step_size,AP,sec_per_iter,ess_min,ess_med,ess_max,\
         min_ess_per_sec,speedup_vs_baseline,weight_eff,mean_1,mean_2"
    );
    assert_eq!(header(&out.join("samples_cSphHMC_chain0.csv")), "iteration,beta_1,beta_2,log_weight,accepted");

    for kernel in ["RWM", "WallHMC-box", "cSphHMC", "sSphHMC"] {
        let text = fs::read_to_string(out.join(format!("report_{kernel}.json"))).unwrap();
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            [
                "AP", "D", "cov", "ess", "kernel", "mean", "min_ess_per_sec", "sec_per_iter",
                "speedup_vs_baseline", "weight_eff"
            ]
        );
        assert_eq!(report["kernel"], kernel);
    }
    // RWM is the implicit baseline
    let rwm: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report_RWM.json")).unwrap()).unwrap();
    assert_eq!(rwm["speedup_vs_baseline"], 1.0);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for key in ["experiment", "seed", "config", "chains", "total_secs"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(manifest["seed"], 11);
    assert!(!out.join(".partial").exists());
}

#[test]
fn samples_are_reproducible_for_a_fixed_seed() {
    // summary.csv and the reports carry wall-clock timings and are excluded
    let dir = TempDir::new().unwrap();
    let (a, out_a) = run_config(dir.path(), TMG2D, "a");
    let (b, out_b) = run_config(dir.path(), TMG2D, "b");
    assert!(a.status.success() && b.status.success());
    for kernel in ["RWM", "WallHMC-box", "cSphHMC", "sSphHMC"] {
        let name = format!("samples_{kernel}_chain0.csv");
        assert_eq!(fs::read(out_a.join(&name)).unwrap(), fs::read(out_b.join(&name)).unwrap(), "{name}");
    }

    let (c, out_c) = run_config(dir.path(), &TMG2D.replace("seed = 11", "seed = 12"), "c");
    assert!(c.status.success());
    let name = "samples_cSphHMC_chain0.csv";
    assert_ne!(fs::read(out_a.join(name)).unwrap(), fs::read(out_c.join(name)).unwrap());
}

#[test]
fn worker_count_does_not_change_samples() {
    let dir = TempDir::new().unwrap();
    let body = r#"
experiment = "tmg2d"
kernels = ["cSphHMC", "RWM"]
seed = 3
chains = 2
[sampler]
iterations = 400
burn_in = 50
"#;
    let cfg = write_config(dir.path(), body);
    let mut outs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("w{workers}"));
        let o = sphmc(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
        assert!(o.status.success());
        outs.push(out);
    }
    for name in ["samples_cSphHMC_chain0.csv", "samples_cSphHMC_chain1.csv", "samples_RWM_chain1.csv"] {
        assert_eq!(fs::read(outs[0].join(name)).unwrap(), fs::read(outs[1].join(name)).unwrap(), "{name}");
    }
    // chains draw from distinct streams
    assert_ne!(
        fs::read(outs[0].join("samples_cSphHMC_chain0.csv")).unwrap(),
        fs::read(outs[0].join("samples_cSphHMC_chain1.csv")).unwrap()
    );
}

#[test]
fn empty_kernel_list_writes_header_only_summary() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config(dir.path(), "experiment = \"tmgD\"\nkernels = []\n", "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("experiment,s,kernel,D,"));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn config_errors_exit_with_code_1_and_write_nothing() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "experiment = \"tmg2d\"\nbogus = 3\n",
        "experiment = \"tmg2d\"\nkernels = [\"NUTS\"]\n",
        "experiment = \"tmg2d\"\nchains = 0\n",
        "experiment = \"tmg2d\"\nkernels = [\"RWM\"]\n[sampler]\niterations = 10\nburn_in = 20\n",
        "experiment = \"lasso_path\"\nkernels = [\"cSphHMC\"]\n[problem]\ndataset = \"missing.csv\"\n",
        "experiment = \"tmg2d\"\nkernels = [\"RWM\"]\n[problem]\ncov = [[1.0, 2.0], [2.0, 1.0]]\n",
        // the diamond kernel needs a 1-norm ball
        "experiment = \"tmg2d\"\nkernels = [\"WallHMC-diamond\"]\n",
        // SphLMC only samples the simplex
        "experiment = \"tmgD\"\nkernels = [\"SphLMC\"]\n",
    ];
    for (i, body) in cases.iter().enumerate() {
        let (o, out) = run_config(dir.path(), body, &format!("out{i}"));
        assert_eq!(o.status.code(), Some(1), "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: config error"), "case {i}");
        assert!(!out.join(".partial").exists(), "case {i}");
        assert!(!out.join("summary.csv").exists(), "case {i}");
    }
    let o = sphmc(&["run", "--config", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = write_config(dir.path(), TMG2D);
    let o = sphmc(&["run", "--config", cfg.to_str().unwrap(), "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: runtime error"));
}

#[test]
fn cli_flags_override_config() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config(dir.path(), TMG2D, "base");
    assert!(o.status.success());
    let cfg = dir.path().join("exp.toml");
    let out2 = dir.path().join("flags");
    let o = sphmc(&[
        "run", "--config", cfg.to_str().unwrap(), "--out", out2.to_str().unwrap(), "--kernel", "sSphHMC",
        "--seed", "11", "--trace",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out2.join("report_RWM.json").exists());
    assert_eq!(
        fs::read(out.join("samples_sSphHMC_chain0.csv")).unwrap(),
        fs::read(out2.join("samples_sSphHMC_chain0.csv")).unwrap()
    );
    assert!(header(&out2.join("trajectory_sSphHMC.csv")).starts_with("step,x1,"));

    let o = sphmc(&["run", "--config", cfg.to_str().unwrap(), "--kernel", "Gibbs"]);
    assert_eq!(o.status.code(), Some(1));
    let o = sphmc(&["run", "--config", cfg.to_str().unwrap(), "--workers", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_out_resolves_against_config_dir() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"dirichlet_toy\"\nkernels = [\"SphLMC\"]\nout = \"results\"\n[sampler]\niterations = 300\n",
    );
    let o = sphmc(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results/report_SphLMC.json")).unwrap()).unwrap();
    assert_eq!(report["D"], 3);
    // burn-in defaults to a tenth of the configured length
    let rows = fs::read_to_string(dir.path().join("results/samples_SphLMC_chain0.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 270);
}

#[test]
fn bridge_with_q_one_matches_lasso() {
    let dir = TempDir::new().unwrap();
    let data = dataset();
    let mut paths = Vec::new();
    for (model, extra) in [("lasso", vec![]), ("bridge", vec!["--q", "1"])] {
        let out = dir.path().join(model);
        let mut args = vec![
            "path", "--model", model, "--dataset", data.to_str().unwrap(), "--s-grid", "0.3,0.8",
            "--iterations", "400", "--burn-in", "100", "--seed", "5", "--out", out.to_str().unwrap(),
        ];
        args.extend(extra);
        let o = sphmc(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        paths.push(fs::read_to_string(out.join("path.csv")).unwrap());
    }
    assert_eq!(paths[0], paths[1]);
    let lines: Vec<&str> = paths[0].lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("s,kernel,beta_1,"));
    assert_eq!(lines[0].split(',').count(), 12);
    assert!(lines[1].starts_with("0.3,cSphHMC,"));
}

#[test]
fn path_argument_errors() {
    let dir = TempDir::new().unwrap();
    let data = dataset();
    let data = data.to_str().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    for args in [
        vec!["path", "--model", "lasso", "--q", "1.5", "--dataset", data, "--out", out],
        vec!["path", "--model", "bridge", "--dataset", data, "--out", out],
        vec!["path", "--model", "lasso", "--s-grid", "0,0.5", "--dataset", data, "--out", out],
        vec!["path", "--model", "lasso", "--dataset", "/nonexistent.csv", "--out", out],
        vec!["path", "--model", "lasso", "--response", "nope", "--dataset", data, "--out", out],
    ] {
        let o = sphmc(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn verify_passes() {
    let o = sphmc(&["verify"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 7);
}

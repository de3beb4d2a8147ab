//! End-to-end tests of the `sparsid` binary: exit codes, output schemas,
//! manifest round-trips and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sparsid::signal::{generate_sparse_system, save_samples, SampleStream, SignalConfig};

fn sparsid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsid"))
        .args(args)
        .env_remove("SPARSID_THREADS")
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

const SMOKE: &str = r#"
m = 12
r_true = 3
noise_variance = 0.005
lambda = 0.99
n_iters = 10
n_trials = 1
seed = 5

[[algorithms]]
kind = "rls"

[[algorithms]]
kind = "em_pnorm"
p = 0.5
gamma = 0.1
"#;

#[test]
fn simulate_writes_curves_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("smoke.toml");
    let out = dir.path().join("curves.csv");
    write(&config, SMOKE);

    let res = sparsid(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11); // header + 10 iterations
    assert_eq!(lines[0], "iter,rls,em-p0.5");
    assert!(lines[1].starts_with("1,"));

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("curves.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["config_toml"].as_str().unwrap().contains("m = 12"));
}

#[test]
fn simulate_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("smoke.toml");
    let out = dir.path().join("curves.json");
    write(&config, SMOKE);

    let res = sparsid(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(res.status.success());
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(value["schema_version"], 1);
    assert_eq!(value["n_iters"], 10);
    assert_eq!(value["curves"][0]["algorithm_id"], "rls");
}

#[test]
fn missing_field_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    let out = dir.path().join("curves.csv");
    write(&config, &SMOKE.replace("lambda = 0.99\n", ""));

    let res = sparsid(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("lambda"), "stderr was: {stderr}");
    assert!(!out.exists());
}

#[test]
fn reruns_are_byte_identical_and_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("smoke.toml");
    write(&config, SMOKE);

    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let res = sparsid(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            "2",
        ]);
        assert!(res.status.success());
    }
    let bytes_a = fs::read(&out_a).unwrap();
    assert_eq!(bytes_a, fs::read(&out_b).unwrap());

    // Re-run from the manifest's embedded config.
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap())
            .unwrap();
    let config_rt = dir.path().join("from_manifest.toml");
    write(&config_rt, manifest["config_toml"].as_str().unwrap());
    let out_c = dir.path().join("c.csv");
    let res = sparsid(&[
        "simulate",
        "--config",
        config_rt.to_str().unwrap(),
        "--out",
        out_c.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert!(res.status.success());
    assert_eq!(bytes_a, fs::read(&out_c).unwrap());
}

#[test]
fn thread_env_var_is_honored_and_output_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("smoke.toml");
    write(&config, SMOKE);

    let out_env = dir.path().join("env.csv");
    let res = Command::new(env!("CARGO_BIN_EXE_sparsid"))
        .args([
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_env.to_str().unwrap(),
        ])
        .env("SPARSID_THREADS", "1")
        .output()
        .unwrap();
    assert!(res.status.success());

    let out_flag = dir.path().join("flag.csv");
    let res = sparsid(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_flag.to_str().unwrap(),
        "--threads",
        "4",
    ]);
    assert!(res.status.success());
    assert_eq!(fs::read(&out_env).unwrap(), fs::read(&out_flag).unwrap());
}

#[test]
fn sweep_single_point_and_grid_validation() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("smoke.toml");
    let out = dir.path().join("sweep.csv");
    write(&config, SMOKE);

    let res = sparsid(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--algo",
        "em-p0.5",
        "--grid",
        "0.19:0.1:0.19",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("gamma,steady_mse\n0.19,"));
    assert!(text.trim_end().ends_with("# best_gamma = 0.19"));

    // start > stop yields an empty grid
    let res = sparsid(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--algo",
        "em-p0.5",
        "--grid",
        "0.4:0.1:0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));

    // unknown algorithm id
    let res = sparsid(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--algo",
        "nope",
        "--grid",
        "0.1:0.1:0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("em-p0.5"));
}

const EM_ALGO: &str = r#"
lambda = 0.999
sigma2 = 0.005

[algorithm]
kind = "em_pnorm"
p = 0.5
gamma = 0.001
"#;

#[test]
fn identify_recovers_recorded_system() {
    let dir = tempfile::tempdir().unwrap();
    let samples_path = dir.path().join("samples.csv");
    let algo_path = dir.path().join("algo.toml");
    let out = dir.path().join("identify.json");

    let m = 24;
    let sys = generate_sparse_system(m, 3, 77).unwrap();
    let sig = SignalConfig {
        m,
        input_variance: 1.0 / m as f64,
        noise_variance: 0.0,
        seed: 78,
    };
    let samples: Vec<_> = SampleStream::new(&sys, &sig).unwrap().take(1500).collect();
    save_samples(&samples_path, &samples).unwrap();
    write(&algo_path, EM_ALGO);

    let res = sparsid(&[
        "identify",
        "--samples",
        samples_path.to_str().unwrap(),
        "--algo-config",
        algo_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["algorithm_id"], "em-p0.5");
    assert_eq!(report["n_samples"], 1500);
    assert_eq!(report["xi_trace"].as_array().unwrap().len(), 1500);
    let support: Vec<usize> = report["support"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    for idx in sys.support() {
        assert!(support.contains(idx), "support misses tap {idx}");
    }
    let w_hat: Vec<f64> = report["w_hat"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let err: f64 = w_hat
        .iter()
        .zip(sys.taps().iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(err < 1e-2, "recovery error {err}");
    assert!(report["alpha_condition"]["s1"].as_f64().unwrap() > 0.0);
}

#[test]
fn identify_plain_rls_gives_dense_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let samples_path = dir.path().join("samples.csv");
    let algo_path = dir.path().join("algo.toml");
    let out = dir.path().join("identify.json");

    let m = 10;
    let sys = generate_sparse_system(m, 2, 8).unwrap();
    let sig = SignalConfig {
        m,
        input_variance: 1.0 / m as f64,
        noise_variance: 0.001,
        seed: 9,
    };
    let samples: Vec<_> = SampleStream::new(&sys, &sig).unwrap().take(200).collect();
    save_samples(&samples_path, &samples).unwrap();
    write(
        &algo_path,
        "lambda = 0.999\n\n[algorithm]\nkind = \"rls\"\n",
    );

    let res = sparsid(&[
        "identify",
        "--samples",
        samples_path.to_str().unwrap(),
        "--algo-config",
        algo_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["support"].as_array().unwrap().len(), m);
    assert!(report["alpha_condition"].is_null());
}

#[test]
fn identify_non_finite_samples_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let samples_path = dir.path().join("nan.csv");
    let algo_path = dir.path().join("algo.toml");
    write(&samples_path, "# m=2\n0.1,0.2,0.3\n0.4,NaN,0.5\n");
    write(&algo_path, EM_ALGO);

    let res = sparsid(&[
        "identify",
        "--samples",
        samples_path.to_str().unwrap(),
        "--algo-config",
        algo_path.to_str().unwrap(),
        "--out",
        dir.path().join("out.json").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("non-finite"), "stderr was: {stderr}");
}

#[test]
fn identify_empty_samples_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let samples_path = dir.path().join("empty.csv");
    let algo_path = dir.path().join("algo.toml");
    write(&samples_path, "");
    write(&algo_path, EM_ALGO);

    let res = sparsid(&[
        "identify",
        "--samples",
        samples_path.to_str().unwrap(),
        "--algo-config",
        algo_path.to_str().unwrap(),
        "--out",
        dir.path().join("out.json").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn identify_malformed_row_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let samples_path = dir.path().join("bad.csv");
    let algo_path = dir.path().join("algo.toml");
    write(&samples_path, "# m=2\n0.1,0.2,0.3\n0.1,0.2,0.3,0.4\n");
    write(&algo_path, EM_ALGO);

    let res = sparsid(&[
        "identify",
        "--samples",
        samples_path.to_str().unwrap(),
        "--algo-config",
        algo_path.to_str().unwrap(),
        "--out",
        dir.path().join("out.json").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));
}

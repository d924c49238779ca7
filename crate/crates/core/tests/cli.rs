use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn ecodyn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecodyn"))
        .args(args)
        .env("ECODYN_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn write_config(dir: &Path, name: &str, body: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(body).unwrap()).unwrap();
    path.display().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn harrod_base_run_reaches_double_capital() {
    let out = TempDir::new().unwrap();
    let o = ecodyn(out.path(), &["run", &config("harrod_base.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("t_crisis=20"));
    let (header, rows) = read_csv(&out.path().join("out/harrod_base.csv"));
    assert_eq!(header, ["t", "K", "I", "Y"]);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 10.0);
    assert!((last[1] - 200.0).abs() < 1e-4, "K(10) = {}", last[1]);
    let report: Value = serde_json::from_str(
        &fs::read_to_string(out.path().join("out/harrod_base.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["t_crisis"].as_f64(), Some(20.0));
}

#[test]
fn crisis_subcommand_prints_closed_form_time() {
    let out = TempDir::new().unwrap();
    let o = ecodyn(out.path(), &["crisis", &config("harrod_base.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("t_crisis=20"));
}

#[test]
fn equilibrium_scenario_stays_put() {
    let out = TempDir::new().unwrap();
    let o = ecodyn(out.path(), &["run", &config("balance_eq.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&out.path().join("out/balance_eq.csv"));
    assert_eq!(header, ["t", "x_1", "x_2"]);
    let eq = [80.0 / 3.0, 340.0 / 9.0];
    for row in rows {
        assert!(
            (row[1] - eq[0]).abs() < 1e-9 && (row[2] - eq[1]).abs() < 1e-9,
            "{row:?}"
        );
    }
}

#[test]
fn crisis_inside_the_horizon_exits_four() {
    let out = TempDir::new().unwrap();
    let o = ecodyn(out.path(), &["run", &config("harrod_cumulative.json")]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

fn harrod(m: Value) -> Value {
    json!({
        "model": "harrod",
        "harrod": { "m": m, "n": 10, "k0": 100, "horizon": 5 },
        "outputs": { "csv_path": "h.csv" }
    })
}

#[test]
fn malformed_configs_exit_two_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("constraint", harrod(json!(1.5)), "harrod.m"),
        ("wrong_type", harrod(json!("half")), "harrod.m"),
        (
            "missing_field",
            json!({ "model": "harrod", "harrod": { "n": 10, "k0": 100, "horizon": 5 } }),
            "m",
        ),
        (
            "unknown_field",
            json!({ "model": "harrod", "harrod": { "m": 0.5, "n": 10, "k0": 100, "horizon": 5, "q": 1 } }),
            "q",
        ),
        (
            "two_blocks",
            json!({
                "model": "harrod",
                "harrod": { "m": 0.5, "n": 10, "k0": 100, "horizon": 5 },
                "phillips": { "k": 1, "l": 1, "m": 0.5, "n": 2, "y1": 1, "y1p": 0 }
            }),
            "exactly the `harrod` block",
        ),
        (
            "ragged_matrix",
            json!({
                "model": "balance",
                "balance": { "a": [[0.1, 0.2], [0.3]], "c": [1, 1], "p": [0, 0], "p_prime": [0, 0], "mode": "ivp" }
            }),
            "balance.a",
        ),
        (
            "vector_length",
            json!({
                "model": "balance",
                "balance": { "a": [[0.1, 0.2], [0.3, 0.1]], "c": [1, 1], "p": [0, 0, 0], "p_prime": [0, 0], "mode": "ivp" }
            }),
            "balance.p",
        ),
    ];
    for (name, body, needle) in cases {
        let path = write_config(dir.path(), &format!("{name}.json"), &body);
        let o = ecodyn(dir.path(), &["run", &path]);
        assert_eq!(code(&o), 2, "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let o = ecodyn(
        dir.path(),
        &["run", &dir.path().join("absent.json").display().to_string()],
    );
    assert_ne!(code(&o), 0);
}

#[test]
fn critical_lambda_exits_three() {
    let dir = TempDir::new().unwrap();
    let b: f64 = 11.0;
    let lambda = 2.0 * b - 2.0 * (b * b - PI * PI).sqrt();
    let body = json!({
        "model": "balance",
        "balance": { "a": [[1.0 - b]], "c": [0], "p": [0], "r": [0], "lambda": lambda },
        "grid": { "points": 201 },
        "outputs": { "csv_path": "critical.csv" }
    });
    let path = write_config(dir.path(), "critical.json", &body);
    let o = ecodyn(dir.path(), &["run", &path]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("not meaningful"), "{}", stderr(&o));
}

#[test]
fn identical_runs_are_byte_identical() {
    for name in [
        "balance_forecast.json",
        "phillips_corrected.json",
        "balance_time_varying.json",
    ] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert_eq!(code(&ecodyn(a.path(), &["run", &config(name)])), 0);
        assert_eq!(code(&ecodyn(b.path(), &["run", &config(name)])), 0);
        let files: Vec<_> = fs::read_dir(a.path().join("out"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert!(!files.is_empty());
        for f in files {
            let x = fs::read(a.path().join("out").join(&f)).unwrap();
            let y = fs::read(b.path().join("out").join(&f)).unwrap();
            assert!(x == y, "{name}: {f:?} differs");
        }
    }
}

#[test]
fn every_shipped_config_runs() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.starts_with("sweep_") {
            continue;
        }
        let out = TempDir::new().unwrap();
        let o = ecodyn(out.path(), &["run", &path.display().to_string()]);
        let expected = if name == "harrod_cumulative.json" {
            4
        } else {
            0
        };
        assert_eq!(code(&o), expected, "{name}: {}", stderr(&o));
    }
}

#[test]
fn sweep_writes_one_file_per_variation_and_a_summary() {
    let out = TempDir::new().unwrap();
    let o = ecodyn(
        out.path(),
        &[
            "sweep",
            &config("balance_forecast.json"),
            &config("sweep_c_scale.json"),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = out.path().join("out");
    for k in 0..3 {
        assert!(dir
            .join(format!("balance_forecast_variation_{k}.csv"))
            .exists());
    }
    let (header, rows) = read_csv(&dir.join("balance_forecast_summary.csv"));
    assert_eq!(header[0], "variation");
    assert_eq!(header.len(), 7);
    assert_eq!(rows.len(), 3);
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        [0.0, 1.0, 2.0]
    );
    assert!((rows[2][1] - 30.0).abs() < 1e-9 && (rows[2][2] - 42.0).abs() < 1e-9);

    // c_scale = 1 reproduces the plain forecast
    let base = TempDir::new().unwrap();
    assert_eq!(
        code(&ecodyn(
            base.path(),
            &["run", &config("balance_forecast.json")]
        )),
        0
    );
    let (_, plain) = read_csv(&base.path().join("out/balance_forecast.csv"));
    let (_, varied) = read_csv(&dir.join("balance_forecast_variation_1.csv"));
    assert_eq!(plain.len(), varied.len());
    for (p, v) in plain.iter().zip(&varied) {
        for (a, b) in p.iter().zip(v) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let out = TempDir::new().unwrap();
    let o = ecodyn(
        out.path(),
        &[
            "sweep",
            &config("balance_forecast.json"),
            &config("sweep_empty.json"),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.path().join("out/balance_forecast_summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("variation,terminal_x_1"));
}

#[test]
fn diagnose_reports_a_verdict() {
    let out = TempDir::new().unwrap();
    let o = ecodyn(out.path(), &["diagnose", &config("balance_eq.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict=well_posed"));
}

#[test]
fn jsonl_format_and_overrides() {
    let out = TempDir::new().unwrap();
    let o = ecodyn(
        out.path(),
        &[
            "run",
            &config("balance_eq.json"),
            "--format",
            "jsonl",
            "--grid-points",
            "11",
            "--tol",
            "1e-10",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.path().join("out/balance_eq.jsonl")).unwrap();
    let rows: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[10]["t"].as_f64(), Some(1.0));
    assert!(rows[0]["x_2"].is_number());
}

use std::path::Path;
use std::process::Command as Process;

use proptest::prelude::*;
use scale_iter::engines::IterationReport;
use scale_iter_cli::{
    emit_table, main_with_args, validate, CliReport, Command, ExperimentConfig, Format, CLI_REPORT_SCHEMA,
};
use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_scale-iter");

fn write_config(dir: &TempDir, name: &str, config: &Value) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, config.to_string()).unwrap();
    path
}

fn invoke(command: &str, config: &Path, extra: &[&str]) -> (i32, String) {
    let out = Process::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn run_json(command: &str, config: Value) -> (i32, CliReport) {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, "config.json", &config);
    let (code, stdout) = invoke(command, &path, &[]);
    (code, serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{e}: {stdout}")))
}

fn config(command: Option<&str>, parameters: Value) -> ExperimentConfig {
    let mut v = json!({ "parameters": parameters });
    if let Some(c) = command {
        v["command"] = json!(c);
    }
    ExperimentConfig::from_json_str(&v.to_string()).unwrap()
}

#[test]
fn bruno_constant_one() {
    let (code, report) = run_json(
        "bruno",
        json!({"command": "bruno", "parameters": {"kind": "constant", "value": 1}}),
    );
    assert_eq!(code, 0);
    assert_eq!(report.schema, CLI_REPORT_SCHEMA);
    assert_eq!(report.result["a_pi"], json!(1.0));
    assert_eq!(report.result["is_bruno"], json!(true));
}

#[test]
fn tame_geometric_pair() {
    let (code, report) = run_json(
        "tame",
        json!({"parameters": {"a": {"kind": "geometric", "ratio": 2}, "b": {"kind": "geometric", "ratio": 0.25}}}),
    );
    assert_eq!(code, 0);
    assert_eq!(report.result["tame"]["taming_index"], json!(2));
}

#[test]
fn non_tame_pair_exits_two() {
    let (code, report) = run_json(
        "tame",
        json!({"parameters": {"a": {"kind": "geometric", "ratio": 4}, "b": {"kind": "constant", "value": 1}, "horizon": 20}}),
    );
    assert_eq!(code, 2);
    assert!(!report.ok);
}

#[test]
fn kam_drive_exit_depends_on_tameness() {
    let kam = |t: f64| {
        json!({"parameters": {
            "engine": "kam",
            "a": {"kind": "phase-power", "sign": "positive", "power": 3},
            "b": {"kind": "phase-power", "sign": "positive", "power": 3},
            "eps": 0.5, "c_phase_exponent": 1.9, "t": t, "x0": 0.001, "steps": 40
        }})
    };
    let (code, report) = run_json("drive", kam(1.0));
    assert_eq!(code, 2, "{}", report.summary);
    assert_eq!(report.result["tame"], json!(false));
    let (code, report) = run_json("drive", kam(8.0));
    assert_eq!(report.result["tame"], json!(true));
    assert_eq!(code, 0, "{}", report.summary);
}

#[test]
fn morse_report_carries_exact_rational_strings() {
    let (code, report) = run_json("morse", json!({"parameters": {"steps": 3, "truncation": 20}}));
    assert_eq!(code, 0);
    let steps = report.result["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 3);
    let f1 = &steps[0]["f"]["coefficients"];
    assert_eq!(f1[4], json!("-3/2"));
    assert_eq!(f1[5], json!("4/1"));
    assert_eq!(f1[6], json!("-15/2"));
    let f2 = &steps[1]["f"]["coefficients"];
    assert_eq!(f2[6], json!("-12/1"));
    assert_eq!(f2[7], json!("39/1"));
    let v1 = &steps[1]["v"]["coefficients"];
    assert_eq!(v1[3], json!("3/2"));
    assert_eq!(v1[4], json!("-4/1"));
    let inner: IterationReport = serde_json::from_value(report.result["report"].clone()).unwrap();
    assert_eq!(inner.records.len(), 3);
}

#[test]
fn report_json_round_trips() {
    for (command, params) in [
        ("morse", json!({"steps": 2, "truncation": 8})),
        ("circle", json!({"eps": 0.3, "steps": 3})),
        ("newton", json!({"truncation": 16, "y": ["0", "1", "1/10"], "mode": "float"})),
    ] {
        let (code, report) = run_json(command, json!({ "parameters": params }));
        assert_eq!(code, 0, "{command}");
        let text = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<CliReport>(&text).unwrap(), report);
        let inner = IterationReport::from_json_str(&report.result["report"].to_string()).unwrap();
        assert_eq!(IterationReport::from_json_str(&inner.to_json_string()).unwrap(), inner);
        let table = emit_table(&inner, Format::Json).unwrap();
        assert_eq!(IterationReport::from_json_str(&table).unwrap(), inner);
    }
}

#[test]
fn empty_report_gives_header_only_csv() {
    let report = IterationReport::new("empty", Vec::new(), 1e-10).unwrap();
    assert_eq!(emit_table(&report, Format::Csv).unwrap(), "n,s_n,step_norm,residual,bound,flag\n");
}

fn csv_header(command: &str, params: Value) -> Vec<String> {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, "c.json", &json!({ "parameters": params }));
    let (code, stdout) = invoke(command, &path, &["--format", "csv"]);
    assert_eq!(code, 0);
    stdout.lines().next().unwrap().split(',').map(str::to_string).collect()
}

#[test]
fn csv_columns() {
    let fixed = ["n", "s_n", "step_norm", "residual", "bound", "flag"];
    let morse = csv_header("morse", json!({"steps": 2, "truncation": 8}));
    assert_eq!(&morse[..6], &fixed);
    assert!(morse.contains(&"valuation".to_string()));
    let circle = csv_header("circle", json!({"eps": 0.3, "steps": 2}));
    assert_eq!(&circle[..6], &fixed);
    for k in 1..=4 {
        assert!(circle.contains(&format!("h{k}")), "{circle:?}");
    }
}

#[test]
fn out_and_format_flags_override_the_config() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("report.csv");
    let path = write_config(
        &dir,
        "c.json",
        &json!({"parameters": {"steps": 1, "truncation": 4}, "output": {"format": "json"}}),
    );
    let (code, stdout) = invoke("morse", &path, &["--out", target.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.starts_with("n,s_n,step_norm,residual,bound,flag"));
}

#[test]
fn seeded_runs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let path = write_config(
        &dir,
        "c.json",
        &json!({"parameters": {"kind": "constant", "value": 2, "horizon": 40, "samples": 64}, "seed": 3}),
    );
    let a = invoke("bruno", &path, &[]);
    let b = invoke("bruno", &path, &[]);
    assert_eq!(a, b);
    assert_eq!(a.0, 0);
    let c = invoke("bruno", &path, &["--seed", "11"]);
    let report: CliReport = serde_json::from_str(&c.1).unwrap();
    assert_eq!(report.seed, 11);
    assert_eq!(report.result["samples"]["agree"], report.result["samples"]["checked"]);
}

#[test]
fn validate_examples() {
    let schedule = config(
        Some("schedule"),
        json!({"t": 1, "rho": {"kind": "constant", "value": 0.6}, "steps": 4}),
    );
    let d = validate(&schedule, Command::Schedule);
    assert!(!d.is_empty());
    assert!(d.iter().any(|m| m.contains("rho_n < 1/2")), "{d:?}");

    let morse = config(None, json!({"steps": 3, "truncation": 9}));
    let d = validate(&morse, Command::Morse);
    assert!(d.iter().any(|m| m.contains("2^steps + 2")), "{d:?}");
    assert!(validate(&config(None, json!({"steps": 3, "truncation": 10})), Command::Morse).is_empty());

    let newton = config(Some("newton"), json!({"truncation": 16, "y": ["0", "1", "1/10"]}));
    assert!(validate(&newton, Command::Newton).is_empty());
}

#[test]
fn command_mismatch_is_a_config_error() {
    let c = config(Some("morse"), json!({"steps": 1, "truncation": 4}));
    assert!(!validate(&c, Command::Morse).iter().any(|m| m.contains("requested")));
    assert!(validate(&c, Command::Circle).iter().any(|m| m.contains("requested")));
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, "c.json", &json!({"command": "morse", "parameters": {"steps": 1, "truncation": 4}}));
    assert_eq!(invoke("circle", &path, &[]).0, 1);
}

#[test]
fn cli_usage_errors_exit_one() {
    assert_eq!(main_with_args(["scale-iter", "warp", "--config", "x.json"]), 1);
    assert_eq!(main_with_args(["scale-iter", "morse"]), 1);
    assert_eq!(main_with_args(["scale-iter", "morse", "--config", "/nonexistent/c.json"]), 1);
}

fn valid_configs() -> Vec<(&'static str, Value)> {
    vec![
        ("bruno", json!({"kind": "constant", "value": 1, "horizon": 10})),
        ("tame", json!({"a": {"kind": "geometric", "ratio": 2}, "b": {"kind": "geometric", "ratio": 0.25}, "horizon": 8})),
        ("schedule", json!({"t": 1, "rho": {"kind": "constant", "value": 0.25}, "steps": 4})),
        ("morse", json!({"steps": 1, "truncation": 4})),
        ("circle", json!({"eps": 0.2, "steps": 1})),
        ("newton", json!({"truncation": 8, "y": ["0", "1"], "steps": 3})),
    ]
}

#[derive(Clone, Debug)]
enum Malformation {
    Garbage(String),
    UnknownTopKey(String),
    UnknownParam(String),
    DropParams,
    WrongType(String),
}

fn malformation() -> impl Strategy<Value = Malformation> {
    prop_oneof![
        "[^{]{0,40}".prop_map(Malformation::Garbage),
        "[a-z]{3,10}".prop_map(Malformation::UnknownTopKey),
        "[a-z]{3,10}".prop_map(Malformation::UnknownParam),
        Just(Malformation::DropParams),
        "[a-z]{1,8}".prop_map(Malformation::WrongType),
    ]
}

const KNOWN: [&str; 24] = [
    "command", "parameters", "output", "seed", "kind", "value", "horizon", "tol", "u0", "steps", "samples",
    "a", "b", "t", "rho", "exponent", "factor", "truncation", "f0", "radius", "eps", "cap", "width", "y",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn malformed_configs_exit_one(which in 0usize..6, m in malformation()) {
        let (command, params) = valid_configs()[which].clone();
        let text = match m {
            Malformation::Garbage(s) => s,
            Malformation::UnknownTopKey(k) => {
                prop_assume!(!KNOWN.contains(&k.as_str()));
                let mut v = json!({"parameters": params});
                v[k] = json!(1);
                v.to_string()
            }
            Malformation::UnknownParam(k) => {
                prop_assume!(!KNOWN.contains(&k.as_str()) && !["order", "mode", "defect", "x0", "ratio"].contains(&k.as_str()));
                let mut p = params;
                p[k] = json!(1);
                json!({"parameters": p}).to_string()
            }
            Malformation::DropParams => json!({"command": command}).to_string(),
            Malformation::WrongType(s) => {
                let mut p = params;
                let key = p.as_object().unwrap().keys().next().unwrap().clone();
                p[key] = json!(s);
                json!({"parameters": p}).to_string()
            }
        };
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, text).unwrap();
        let code = main_with_args(["scale-iter", command, "--config", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
        prop_assert_eq!(code, 1);
    }

    #[test]
    fn exit_codes_partition(which in 0usize..6, seed in any::<u64>()) {
        let (command, params) = valid_configs()[which].clone();
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, json!({"parameters": params, "seed": seed}).to_string()).unwrap();
        let out = dir.path().join("o.json");
        let code = main_with_args(["scale-iter", command, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        let report: CliReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        prop_assert_eq!(code, if report.ok { 0 } else { 2 });
        prop_assert_eq!(report.seed, seed);
    }
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn fixplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fixplan")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn plan_fix1_writes_strategy() {
    let o = fixplan(&["plan", "--model", &data("fix1.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["order"], serde_json::json!(["A", "B"]));
    assert_eq!(v["ec"], 1.75);
    let report = String::from_utf8_lossy(&o.stderr);
    assert!(report.contains("method: ratio sort"), "{report}");
    assert!(report.contains("ecf: 2.333333"), "{report}");
}

#[test]
fn plan_fix4_dp() {
    let o = fixplan(&["plan", "--model", &data("fix4.json"), "--method", "dp"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["order"], serde_json::json!(["A", "B"]));
    assert!((v["ec"].as_f64().unwrap() - 1.2).abs() < 1e-9);
}

#[test]
fn plan_fix4_local_and_sort_agree_here() {
    for method in ["local", "sort"] {
        let o = fixplan(&["plan", "--model", &data("fix4.json"), "--method", method]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(json(&o)["order"], serde_json::json!(["A", "B"]), "{method}");
    }
}

#[test]
fn plan_fix5_matches_golden_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.json");
    let o = fixplan(&["plan", "--model", &data("fix5.json"), "--out", out.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&o);
    assert_eq!(report["ecf"], 5.0);
    let written = std::fs::read_to_string(&out).unwrap();
    let golden = std::fs::read_to_string(data("fix5_plan.json")).unwrap();
    assert_eq!(written, golden);
}

#[test]
fn plan_fix3_and_fix6_inspect() {
    let v = json(&fixplan(&["plan", "--model", &data("fix3.json")]));
    assert_eq!(v["inspect"], serde_json::json!(["A"]));
    assert!((v["ec"].as_f64().unwrap() - 2.2).abs() < 1e-9);
    let v = json(&fixplan(&["plan", "--model", &data("fix6.json")]));
    assert_eq!(v["inspect"], serde_json::json!(["comp"]));
    assert_eq!(v["ec"], 2.5);
}

#[test]
fn invalid_model_exits_1() {
    let o = fixplan(&["plan", "--model", &data("invalid.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("components[0].p"));
}

#[test]
fn missing_file_exits_1() {
    let o = fixplan(&["plan", "--model", &data("nope.json")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oversized_dp_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    let comps: Vec<_> = (0..30)
        .map(|i| serde_json::json!({"id": format!("c{i}"), "p": 0.1, "c": 1}))
        .collect();
    std::fs::write(&path, serde_json::json!({"type": "flat", "components": comps}).to_string()).unwrap();
    let o = fixplan(&["plan", "--model", path.to_str().unwrap(), "--method", "dp"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn check_exit_codes() {
    let ok = fixplan(&["check", "--model", &data("fix1.json"), "--strategy", &data("fix1_ab.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("locally optimal"));

    let bad = fixplan(&["check", "--model", &data("fix1.json"), "--strategy", &data("fix1_ba.json"), "--json"]);
    assert_eq!(bad.status.code(), Some(3));
    let v = json(&bad);
    assert_eq!(v["optimal"], false);
    assert_eq!(v["first_violation"], 1);
}

#[test]
fn check_rejects_mismatched_components() {
    let o = fixplan(&["check", "--model", &data("fix3.json"), "--strategy", &data("fix6_strategy.json")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cost_of_strategy_and_plan() {
    let v = json(&fixplan(&["cost", "--model", &data("fix1.json"), "--strategy", &data("fix1_ba.json"), "--json"]));
    assert_eq!(v["ec"], 2.0);
    let v = json(&fixplan(&["cost", "--model", &data("fix5.json"), "--plan", &data("fix5_plan.json"), "--json"]));
    assert_eq!(v["ecf"], 5.0);
}

#[test]
fn simulate_is_seeded() {
    let args = [
        "simulate",
        "--model",
        &data("fix5.json"),
        "--plan",
        &data("fix5_plan.json"),
        "--samples",
        "20000",
        "--seed",
        "11",
    ];
    let a = json(&fixplan(&args));
    let b = json(&fixplan(&args));
    assert_eq!(a, b);
    assert_eq!(a["analytic"], 5.0);
    let (mean, se) = (a["mean"].as_f64().unwrap(), a["stderr"].as_f64().unwrap());
    assert!((mean - 5.0).abs() <= 4.0 * se, "{mean} +- {se}");
}

#[test]
fn gen_is_deterministic_and_shaped() {
    let a = fixplan(&["gen", "-k", "3", "--depth", "3", "--seed", "5"]);
    let b = fixplan(&["gen", "-k", "3", "--depth", "3", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.matches("\"id\"").count(), 40);

    let single = json(&fixplan(&["gen", "-k", "1", "--depth", "1"]));
    assert_eq!(single["root"]["children"].as_array().unwrap().len(), 1);
}

#[test]
fn generated_plans_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let o = fixplan(&["gen", "-k", "5", "--depth", "5", "--seed", "42", "--out", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let plan = |name: &str| {
        let out = dir.path().join(name);
        let o = fixplan(&["plan", "--model", model.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(plan("a.json"), plan("b.json"));
}

#[test]
fn bench_reports_table_and_fit() {
    let o = fixplan(&["bench", "-k", "2,3", "--depths", "2,3,4", "--repetitions", "1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["cells"].as_array().unwrap().len(), 6);
    assert_eq!(v["fits"].as_array().unwrap().len(), 2);
    assert_eq!(v["noisy"], true);
}

#[test]
fn bench_grid_shape() {
    let o = fixplan(&["bench", "-k", "3,4,5", "--depths", "1,2,3", "--repetitions", "2"]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).take(3).collect();
    for (row, k) in rows.iter().zip(["3", "4", "5"]) {
        assert_eq!(row.split_whitespace().next(), Some(k));
        assert_eq!(row.split_whitespace().count(), 4);
    }
}

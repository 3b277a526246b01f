use ffaba::harness::config::parse_complex;
use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn ffaba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffaba")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ffaba-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_config(name: &str, body: &str) -> String {
    let path = scratch(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn records(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str::<Value>(l).unwrap()).filter(|v| v.get("summary").is_none()).collect()
}

#[test]
fn theta_zero_and_shift() {
    let o = ffaba(&["theta", "--kind", "1", "--u", "0", "--tau", "0.5i"]);
    assert!(o.status.success());
    assert_eq!(parse_complex(stdout(&o).trim()).unwrap().norm(), 0.0);
    let a = ffaba(&["theta", "--kind", "1", "--u", "0.25", "--tau", "0.5i"]);
    let b = ffaba(&["theta", "--kind", "2", "--u", "-0.25", "--tau", "0.5i"]);
    let (a, b) = (parse_complex(stdout(&a).trim()).unwrap(), parse_complex(stdout(&b).trim()).unwrap());
    assert!((a - b).norm() < 1e-15 * a.norm());
}

#[test]
fn theta_output_round_trips() {
    let o = ffaba(&["theta", "--kind", "3", "--u", "0.3+0.1i", "--tau", "0.1+0.9i", "--scale", "2"]);
    let text = stdout(&o);
    let z = parse_complex(text.trim()).unwrap();
    let again = ffaba(&["theta", "--kind", "3", "--u", "0.3+0.1i", "--tau", "0.1+0.9i", "--scale", "2"]);
    assert_eq!(parse_complex(stdout(&again).trim()).unwrap(), z);
    let ctx = ffaba::theta::ModularContext::new(ffaba::C64::new(0.1, 0.9)).unwrap();
    let want = ctx.eval_theta(3, ffaba::C64::new(0.3, 0.1), 2).unwrap();
    assert!((z - want).norm() <= 1e-15 * want.norm());
}

#[test]
fn theta_bad_arguments_are_usage_errors() {
    assert_eq!(ffaba(&["theta", "--kind", "5", "--u", "0", "--tau", "0.5i"]).status.code(), Some(2));
    assert_eq!(ffaba(&["theta", "--kind", "1", "--u", "0", "--tau", "-0.5i"]).status.code(), Some(2));
    assert_eq!(ffaba(&["theta", "--kind", "1", "--u", "zero", "--tau", "0.5i"]).status.code(), Some(2));
}

#[test]
fn odd_chain_is_rejected() {
    let cfg = write_config("odd.json", r#"{"schema": 1, "N": [3]}"#);
    let o = ffaba(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("N must be even"));
}

#[test]
fn only_filter_selects_contour_checks() {
    let o = ffaba(&["verify", "--only", "appendix-c"]);
    assert_eq!(o.status.code(), Some(0));
    let ids: Vec<String> = records(&stdout(&o)).iter().map(|r| r["check_id"].as_str().unwrap().to_string()).collect();
    let want = ["cal-a", "cal-b", "contour-sum", "h-residue", "om-product-entries"].map(|n| format!("appendix-c.{n}.N4"));
    assert_eq!(ids, want);
}

#[test]
fn verify_is_reproducible() {
    let a = ffaba(&["verify", "--only", "scalar", "--seed", "5"]);
    let b = ffaba(&["verify", "--only", "scalar", "--seed", "5", "--jobs", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let last: Value = serde_json::from_str(stdout(&a).lines().last().unwrap()).unwrap();
    assert_eq!(last["summary"]["seed"], 5);
    assert!(!stdout(&a).contains("wall_time_ms"));
}

#[test]
fn solve_bethe_file_is_deterministic() {
    let cfg = write_config("n4.json", r#"{"schema": 1, "N": [4], "seed": 3}"#);
    let (p1, p2) = (scratch("roots1.json"), scratch("roots2.json"));
    for p in [&p1, &p2] {
        let o = ffaba(&["solve-bethe", "--config", &cfg, "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(a, b);
    let doc: Value = serde_json::from_slice(&a).unwrap();
    let run = &doc["runs"][0];
    assert_eq!(run["roots"].as_array().unwrap().len(), 4);
    assert_eq!(run["twin_pairs"].as_array().unwrap().len(), 2);
    assert!(run["chi_residuals"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap() < 1e-9));
}

#[test]
fn scalar_product_sectors() {
    let cfg = write_config("sp.json", r#"{"schema": 1, "N": [4], "kappa": [0, 2], "nu": 0, "lambda": 1}"#);
    let o = ffaba(&["scalar-product", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&stdout(&o));
    let find = |id: &str| recs.iter().find(|r| r["check_id"] == id).unwrap_or_else(|| panic!("{id}"));
    assert!(find("scalar.balanced.N4")["residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(find("scalar.kappa-plus2.N4")["status"], "pass");
    let req = find("scalar.requested-sector.N4.kappa+0.lambda1");
    assert_eq!(req["flag"], "selection-rule");
    assert_eq!(req["status"], "pass");
    assert!(recs.iter().all(|r| !r["check_id"].as_str().unwrap().starts_with("cascade")));
}

#[test]
fn model_lists_couplings() {
    let o = ffaba(&["model"]);
    assert!(o.status.success());
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["dim"], 16);
    let jz = &lines[0]["couplings"]["Jz"];
    assert!(jz[0].as_f64().unwrap().abs() < 1e-12 && jz[1].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn bad_config_is_usage_error() {
    let cfg = write_config("bad.json", r#"{"schema": 2}"#);
    assert_eq!(ffaba(&["verify", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(ffaba(&["verify", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(ffaba(&["verify", "--jobs", "0"]).status.code(), Some(2));
}

#[test]
fn tolerance_failure_exits_three() {
    let cfg = write_config("tight.json", r#"{"schema": 1, "N": [2], "tolerances": {"theta.shift": 1e-300}}"#);
    let o = ffaba(&["verify", "--config", &cfg, "--only", "theta.shift"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta.shift"));
}

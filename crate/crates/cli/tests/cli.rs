use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quasispec::report::{BoundReport, Outcome};
use serde_json::Value;

fn quasispec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasispec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn snowflake_rejects_p_out_of_range() {
    let out = quasispec(&["snowflake", "--p", "0.6", "--n", "3"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("p out of [0.25, 0.5)"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_flag_is_a_single_line_error() {
    let out = quasispec(&["bound", "--theorem", "c", "--bogus", "1"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stderr(&out).trim_end().lines().count(), 1);
}

#[test]
fn theorem_c_bound_is_deterministic() {
    // the config echo includes --out, so compare identical command lines
    let run = || {
        let out = quasispec(&["bound", "--theorem", "c", "--p", "0.25", "--area", "1.2"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        out.stdout
    };
    let (ta, tb) = (run(), run());
    assert_eq!(ta, tb);
    let report: BoundReport = serde_json::from_slice(&ta).unwrap();
    let entry = &report.bounds[0];
    let leading = entry.terms.as_ref().unwrap().get("leading").unwrap().ln().unwrap();
    assert!((leading / 1.291_413_107_133_977_2e21 - 1.0).abs() < 1e-12, "{leading}");
    let tower = entry.inv_mu1_bound.unwrap().tower().unwrap();
    assert!((tower.ln_magnitude / leading - 1.0).abs() < 1e-12);
    assert!(entry.audit.as_ref().unwrap().agrees);
    assert_eq!(report.verdict, Outcome::Unchecked);
    assert!(report.self_verify().unwrap());
}

#[test]
fn theorem_c_area_enters_as_a_single_factor() {
    let run = |area: &str| -> BoundReport {
        let out = quasispec(&["bound", "--theorem", "c", "--p", "0.25", "--area", area]);
        assert_eq!(code(&out), 0);
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let (one, two) = (run("1.2"), run("2.4"));
    let t1 = one.bounds[0].terms.clone().unwrap();
    let t2 = two.bounds[0].terms.clone().unwrap();
    for (name, v) in &t1.0 {
        if name == "area" {
            assert!((t2.get(name).unwrap().ln_diff(v).unwrap() - 2f64.ln()).abs() < 1e-15);
        } else {
            assert_eq!(t2.get(name).unwrap(), *v, "{name}");
        }
    }
}

#[test]
fn infeasible_alpha_exits_2() {
    let out = quasispec(&["bound", "--theorem", "a", "--k", "1", "--area", "1", "--alpha", "2.5"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("infeasible"));
    // the report is still written, with the diagnostic in place of a bound
    let v = json(&out);
    assert!(v["bounds"][0]["inv_mu1_bound"].is_null());
    assert!(v["bounds"][0]["infeasible"].is_string());
}

#[test]
fn csv_report_is_flattened() {
    let out = quasispec(&["bound", "--theorem", "eq16", "--q", "1", "--area", "1", "--alpha", "4", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path,value"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.contains(&"verdict,unchecked"));
    assert!(rows.contains(&"fem_mu1,null"));
    let ln: f64 = rows
        .iter()
        .find_map(|r| r.strip_prefix("bounds.0.inv_mu1_bound.ln,"))
        .unwrap()
        .parse()
        .unwrap();
    // (4/sqrt(pi)) 3^{3/2}
    assert!((ln.exp() - 11.726_460_285_670_078).abs() < 1e-9, "{}", ln.exp());
}

#[test]
fn verify_star_preset_is_ok() {
    let out = quasispec(&["verify", "--preset", "star", "--beta", "0.5", "--h", "0.03"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: BoundReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.verdict, Outcome::Ok);
    assert!(report.self_verify().unwrap());
    assert_eq!(report.bounds.len(), 3);
    assert!(report.bounds.iter().all(|b| b.inv_mu1_bound.is_some()));
    let k = report.k.unwrap().k_log.to_f64();
    assert!((k - 5.828_427_124_746_19).abs() < 1e-9);
    // defaults are echoed
    assert_eq!(report.config["run"]["command"]["tol"], 1e-8);
    assert_eq!(report.config["pipeline"]["boundary_points"], 128);
}

#[test]
fn snowflake_svg_is_deterministic_and_framed() {
    let dir = tempfile::tempdir().unwrap();
    let svg = |name: &str| {
        let path = dir.path().join(name);
        let out = quasispec(&["snowflake", "--p", "0.3", "--n", "4", "--svg", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read_to_string(path).unwrap()
    };
    let (a, b) = (svg("a.svg"), svg("b.svg"));
    assert_eq!(a, b);
    let attr = |text: &str, key: &str| -> String {
        let start = text.find(&format!("{key}=\"")).unwrap() + key.len() + 2;
        text[start..].split('"').next().unwrap().to_string()
    };
    let vb: Vec<f64> = attr(&a, "viewBox").split(' ').map(|x| x.parse().unwrap()).collect();
    for pair in attr(&a, "points").split(' ') {
        let (x, y) = pair.split_once(',').unwrap();
        let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
        assert!(x >= vb[0] && x <= vb[0] + vb[2] && y >= vb[1] && y <= vb[1] + vb[3]);
    }
}

#[test]
fn eig_mesh_svg_has_every_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("square.csv");
    fs::write(&curve, "x,y\n0,0\n1,0\n1,1\n0,1\n").unwrap();
    let svg = dir.path().join("mesh.svg");
    let out = quasispec(&[
        "eig",
        "--curve",
        curve.to_str().unwrap(),
        "--h",
        "0.1",
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    let mu = v["result"]["mu1"].as_f64().unwrap();
    assert!((mu / std::f64::consts::PI.powi(2) - 1.0).abs() < 0.05, "{mu}");
    let text = fs::read_to_string(svg).unwrap();
    assert_eq!(text.matches("class=\"tri\"").count() as u64, v["result"]["triangles"].as_u64().unwrap());
    assert!(text.contains("#d95f02") && text.contains("#1b9e77"));
}

#[test]
fn capacity_custom_reads_continua() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("continua.json");
    fs::write(&input, r#"{"f0": [[1, 0], [2, 0]], "f1": [[-1, 0], [-2, 0]]}"#).unwrap();
    let out = quasispec(&[
        "capacity",
        "--preset",
        "custom",
        "--input",
        input.to_str().unwrap(),
        "--spacing",
        "0.03125",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["result"]["holds"], true);
    assert!((v["result"]["bound"].as_f64().unwrap() - 0.441_271_200_305_303_2).abs() < 1e-12);
}

#[test]
fn missing_output_directory_fails_before_compute() {
    let out = quasispec(&["verify", "--preset", "star", "--out", "/nonexistent/dir/report.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("does not exist"));
    assert!(!Path::new("/nonexistent/dir").exists());
}

#[test]
fn thread_count_from_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_quasispec"))
            .env("QUASISPEC_THREADS", threads)
            .args(["qalpha", "--map", "quadratic:0.25", "--alpha", "2"])
            .output()
            .unwrap()
    };
    let (one, two) = (run("1"), run("2"));
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, two.stdout);
    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    let q = v["result"][0]["value"].as_f64().unwrap();
    assert!((q / (1.125 * std::f64::consts::PI) - 1.0).abs() < 1e-3);
    assert_eq!(code(&run("zero")), 1);
}

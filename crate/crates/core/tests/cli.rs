use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radial-mmot"))
        .args(args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("radial-mmot-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Meta line, records, summary line.
fn json_lines(path: &PathBuf) -> Vec<Value> {
    let text = std::fs::read_to_string(path).unwrap();
    let v: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(v[0]["meta"]["command"].is_string());
    assert!(v[0]["meta"]["version"].is_string());
    assert!(v[0]["meta"]["threads"].is_u64());
    assert!(v.last().unwrap()["summary"].is_object());
    v
}

#[test]
fn cost_of_equal_radii() {
    let o = run(&["cost", "1", "1", "1"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("cost 1.7320508075688"), "{s}");
    assert!(s.contains("120.00000000") && s.contains("-120.00000000"));

    let out = temp("cost.jsonl");
    let o = run(&["cost", "2", "2", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("cost 8.66025403784"));
    let v = json_lines(&out);
    assert!((v[1]["value"].as_f64().unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-12);
    assert_eq!(
        v[0]["meta"]["params"]["radii"],
        serde_json::json!([2.0, 2.0, 2.0])
    );
}

#[test]
fn four_charge_cost() {
    let o = run(&["cost", "1", "1", "1", "--n4", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("cost 3.8284271247"), "{}", stdout(&o));
}

#[test]
fn ce145_confirms_violation() {
    let out = temp("ce145.jsonl");
    let o = run(&["ce145", "--eps", "0.005", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = json_lines(&out);
    assert_eq!(v[0]["meta"]["params"]["eps"], 0.005);
    let body = &v[1..v.len() - 1];
    assert!(!body.is_empty());
    assert!(body.iter().all(|r| r["gap"].is_number()));
    assert!(body.iter().any(|r| r["gap"].as_f64().unwrap() < 0.0));
}

#[test]
fn ceclass_is_inconclusive_for_huge_spacing() {
    let o = run(&["ceclass", "--eps", "1000"]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
}

#[test]
fn ceclass_with_explicit_parameters() {
    let out = temp("ceclass.jsonl");
    let o = run(&[
        "ceclass",
        "--eps",
        "0.1",
        "--M",
        "60",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = json_lines(&out);
    assert_eq!(v[0]["meta"]["params"]["M"], 60.0);
    let witnesses: Vec<&Value> = v[1..v.len() - 1].iter().collect();
    assert_eq!(witnesses.len(), 4);
    assert!(witnesses.iter().all(|w| w["violated"] == true));
}

#[test]
fn example_cpi_without_samples_is_empty() {
    let out = temp("cpi.jsonl");
    let o = run(&[
        "example-cpi",
        "--M",
        "40",
        "--samples",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = json_lines(&out);
    assert_eq!(v.len(), 2);
    assert_eq!(v[1]["summary"]["checks"], 0);
}

#[test]
fn example_cpi_too_close_far_block_is_inconclusive() {
    let o = run(&["example-cpi", "--M", "5", "--samples", "100"]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
}

#[test]
fn region_csv() {
    let o = run(&["region", "--grid", "15x15:1:15"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "r1,r2,r3,margin,sign");
    assert!(s.lines().any(|l| l == "# command=region"));
    let mut signs = Vec::new();
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f.len(), 5);
        let (r2, r3): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        assert!(r2 <= r3);
        signs.push(f[4].parse::<i32>().unwrap());
    }
    assert!(signs.contains(&1) && signs.contains(&-1));
    assert!(!String::from_utf8(o.stderr).unwrap().is_empty());
}

#[test]
fn curves_csv() {
    let out = temp("curves.csv");
    let o = run(&["curves", "--samples", "72", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "branch,theta3,theta2");
    assert_eq!(
        rows.iter()
            .filter(|r| r.starts_with("intersection,"))
            .count(),
        4
    );
    for b in ["vertical_0", "vertical_pi", "diagonal_0", "diagonal_pi"] {
        assert_eq!(
            rows.iter()
                .filter(|r| r.starts_with(&format!("{b},")))
                .count(),
            72
        );
    }
}

#[test]
fn fourmarg_logs_discrepancy() {
    let out = temp("fourmarg.jsonl");
    let o = run(&["fourmarg", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("discrepancy"));
    let v = json_lines(&out);
    assert!(v.len() > 2);

    let o = run(&["fourmarg", "--eps", "0", "--sweep", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("7.65685424949"));
}

#[test]
fn lp_with_measure_file() {
    let measure = temp("measure.json");
    std::fs::write(
        &measure,
        r#"[{"lo": 1.0, "hi": 1.06, "density": 16.666666666666668}]"#,
    )
    .unwrap();
    let plan = temp("plan.jsonl");
    let o = run(&[
        "lp",
        "--measure",
        measure.to_str().unwrap(),
        "--n",
        "6",
        "--patterns",
        "DDI,DID",
        "--plan-out",
        plan.to_str().unwrap(),
    ]);
    // DID is optimal here, so not every listed map is beaten
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,pattern,plan_value,lp_value,gap,lp_on_graph");
    assert_eq!(rows.len(), 5);
    let text = std::fs::read_to_string(&plan).unwrap();
    let meta: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(meta["meta"]["command"], "lp");
    assert!(text.lines().count() > 6);

    let two_scale = temp("two_scale.json");
    std::fs::write(
        &two_scale,
        r#"[{"lo": 1.0, "hi": 1.5, "density": 1.6666666666666667},
            {"lo": 60.0, "hi": 61.0, "density": 0.16666666666666666}]"#,
    )
    .unwrap();
    let csv = temp("two_scale.csv");
    let o = run(&[
        "lp",
        "--measure",
        two_scale.to_str().unwrap(),
        "--n",
        "6",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 2 * 4);
    for r in &rows[1..] {
        let gap: f64 = r.split(',').nth(4).unwrap().parse().unwrap();
        assert!(gap > 1e-3, "{r}");
    }
}

#[test]
fn invalid_input_exits_with_one() {
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["cost", "1", "2"])), 1);
    assert_eq!(code(&run(&["cost", "--", "1", "-2", "3"])), 1);
    assert_eq!(code(&run(&["region", "--grid", "10x10"])), 1);
    let bad = temp("bad.json");
    std::fs::write(&bad, r#"[{"lo": 2.0, "hi": 1.0, "density": 1.0}]"#).unwrap();
    assert_eq!(code(&run(&["lp", "--measure", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["lp", "--measure", "/nonexistent/m.json"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

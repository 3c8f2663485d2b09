use std::process::{Command, Output};

use polytrope_core::equilibrium::EquilibriumDocument;

fn polytrope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polytrope")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn equilibrium_json_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eq.json");
    // tabulated first zeros: nu = 3/2 (gamma = 5/3) and nu = 2 (gamma = 3/2)
    let o = polytrope(&["equilibrium", "--gamma", "1.6666666666666667", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc: EquilibriumDocument = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((doc.xi1 - 3.6537537).abs() < 1e-7, "xi1 = {}", doc.xi1);
    let o = polytrope(&["equilibrium", "--gamma", "1.5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["xi1"].as_f64().unwrap() - 4.3528746).abs() < 1e-7);
    // written, read back and rebuilt: bit-identical profiles
    let rebuilt = doc.rebuild().unwrap().to_document();
    assert_eq!(rebuilt, doc);
}

#[test]
fn equilibrium_csv() {
    let o = polytrope(&["equilibrium", "--gamma", "1.5", "--n", "10", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,rho,u,P"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn invalid_gamma_is_a_usage_error() {
    let o = polytrope(&["equilibrium", "--gamma", "2.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(6/5, 2)"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    assert_eq!(polytrope(&["spectrum", "--n", "many"]).status.code(), Some(2));
    assert_eq!(polytrope(&["spectrum", "--n", "3"]).status.code(), Some(2));
}

#[test]
fn merged_spectrum_counts() {
    let o = polytrope(&["spectrum", "--gamma", "1.6666666666666667", "--l", "0,1,2", "--n-modes", "5", "--n", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let merged = v["merged"].as_array().unwrap();
    let positive: Vec<_> = merged.iter().filter(|r| r["l"].is_u64()).collect();
    assert_eq!(positive.len(), 15);
    assert!(positive.iter().all(|r| r["lambda"].as_f64().unwrap() > 0.0));
    for r in &positive {
        let l = r["l"].as_u64().unwrap();
        assert_eq!(r["multiplicity"].as_str().unwrap(), (2 * l + 1).to_string());
    }
    let kernel: Vec<_> = merged.iter().filter(|r| r["l"].is_null()).collect();
    assert_eq!(kernel.len(), 1);
    assert_eq!(kernel[0]["multiplicity"], "infinite multiplicity (kernel)");
    assert_eq!(v["per_l"].as_array().unwrap().len(), 3);
    assert!(v["per_l"][0]["Lss"]["lambdas"].is_array());
}

#[test]
fn unstable_mode_is_flagged() {
    let o = polytrope(&["spectrum", "--gamma", "1.3", "--l", "0", "--n", "200", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let first = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = first.split(',').collect();
    assert!(cols[0].parse::<f64>().unwrap() < 0.0);
    assert_eq!(cols[3], "true");
}

#[test]
fn zero_modes_is_header_only() {
    let o = polytrope(&["spectrum", "--n-modes", "0", "--format", "csv", "--n", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "lambda,l,multiplicity,unstable");
}

#[test]
fn modes_writes_vectors() {
    let o = polytrope(&["modes", "--l", "1", "--n", "60", "--n-modes", "3", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("r,mode_1,mode_2,mode_3"));
    assert_eq!(text.lines().count(), 62);
}

fn evolve(extra: &[&str]) -> serde_json::Value {
    let mut args = vec!["evolve", "--l", "1", "--n", "100", "--t-end", "40", "--samples", "81"];
    args.extend_from_slice(extra);
    let o = polytrope(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn evolve_flags_periodic_and_growing() {
    let v = evolve(&[]);
    assert_eq!(v["periodic"], true);
    let v = evolve(&["--residue", "1"]);
    assert_eq!(v["periodic"], false);
    let t: Vec<f64> = serde_json::from_value(v["t"].clone()).unwrap();
    let n: Vec<f64> = serde_json::from_value(v["norm"].clone()).unwrap();
    let b = v["B_norm"].as_f64().unwrap();
    // the residue dominates at late times: slope close to the residue norm
    let slope = (n[80] - n[40]) / (t[80] - t[40]);
    assert!((slope - b).abs() < 0.05 * b, "{slope} vs {b}");
    let v = evolve(&["--amplitude", "0"]);
    let n: Vec<f64> = serde_json::from_value(v["norm"].clone()).unwrap();
    assert!(n.iter().all(|&x| x == 0.0));
}

#[test]
fn evolve_missing_mode_is_usage_error() {
    let o = polytrope(&["evolve", "--l", "1", "--n", "40", "--mode", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_writes_consistent_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = polytrope(&[
        "verify", "--gammas", "1.5", "--ns", "100,200", "--only", "kappa_identities,Hl_inverse,C_nu_positive",
        "--json", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let s = &v["summary"];
    let total = s["total"].as_u64().unwrap();
    assert_eq!(total, 3);
    assert_eq!(s["passed"].as_u64().unwrap() + s["failed"].as_u64().unwrap() + s["skipped"].as_u64().unwrap(), total);
    assert_eq!(v["results"].as_array().unwrap().len() as u64, total);
}

#[test]
fn verify_induced_failure_exits_one() {
    let o = polytrope(&["verify", "--gammas", "1.5", "--ns", "100,200", "--only", "Hl_inverse", "--tolerance-scale", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn seeded_runs_are_identical() {
    let args = ["verify", "--gammas", "1.5", "--ns", "60,120", "--only", "I_bound", "--n-random", "5", "--seed", "7", "--out"];
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| {
        let p = dir.path().join(name);
        let mut a: Vec<&str> = args.to_vec();
        let ps = p.to_str().unwrap().to_string();
        a.push(&ps);
        assert_eq!(polytrope(&a).status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        v["results"][0]["measured"].clone()
    };
    assert_eq!(read("a.json"), read("b.json"));
}

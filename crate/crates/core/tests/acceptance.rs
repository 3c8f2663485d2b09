//! One line per acceptance criterion, each backed by exactly one named check.

use polytrope_core::verification::{run_check, Context, VerificationConfig};

const CRITERIA: &[(u32, &str, Option<f64>)] = &[
    (1, "zero_mode_4_3", Some(5.0)),
    (2, "sign_change_across_4_3", Some(10.0)),
    (3, "Lss_vs_N0_consistency", Some(30.0)),
    (4, "shooting_oracle_agreement", Some(30.0)),
    (5, "A_translational_null", None),
    (6, "Hl_inverse", None),
    (7, "kappa_identities", Some(1.0)),
    (8, "Nl_simplicity", None),
    (9, "Lambda_positivity", None),
    (10, "theorem6_lower_bound", None),
    (11, "lane_emden", None),
    (12, "periodic_vs_growth", None),
    (13, "accumulation_trend", Some(120.0)),
    (14, "toroidal_kernel", None),
];

fn main() {
    let ctx = Context::new(VerificationConfig::default()).expect("default configuration is valid");
    let mut failed = Vec::new();
    for &(id, name, budget) in CRITERIA {
        let r = run_check(&ctx, name).expect("check is registered");
        let in_budget = budget.map_or(true, |b| r.runtime_s < b);
        let ok = r.pass && r.skipped.is_none() && in_budget;
        let mut note = r.diagnostic.clone().unwrap_or_default();
        if !in_budget {
            note = format!("runtime {:.1} s over budget {:.0} s {note}", r.runtime_s, budget.unwrap());
        }
        println!("{} criterion {id:>2} {name} ({:.2} s) {note}", if ok { "PASS" } else { "FAIL" }, r.runtime_s);
        if !ok {
            failed.push(id);
        }
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed.len(), CRITERIA.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

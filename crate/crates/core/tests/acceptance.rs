//! Acceptance criteria 1 to 11 at full sample sizes, with their runtime
//! limits where one applies. Runs without the libtest harness so the
//! per-criterion lines always reach the console.

use std::process::ExitCode;
use std::time::Duration;

use kingman_core::verify::{render_check, run_check, run_numeric, Report, VerifyConfig};

fn limit(id: u8) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(1)),
        2 => Some(Duration::from_secs(10)),
        7 => Some(Duration::from_secs(60)),
        10 => Some(Duration::from_secs(300)),
        _ => None,
    }
}

fn main() -> ExitCode {
    let cfg = VerifyConfig::default();
    let mut failures = Vec::new();
    let mut checks = Vec::new();
    for id in 1..=10u8 {
        let r = run_check(id, &cfg);
        let in_time = limit(id).is_none_or(|l| r.elapsed < l);
        let ok = r.pass() && in_time;
        println!(
            "criterion {id:>2} {}: {} ({:.2?}{})",
            r.name,
            if ok { "PASS" } else { "FAIL" },
            r.elapsed,
            limit(id).map(|l| format!(", limit {l:?}")).unwrap_or_default()
        );
        print!("{}", render_check(&r));
        if !ok {
            failures.push(id);
        }
        checks.push(r);
    }

    // Criterion 11: an independent second run renders the same bytes.
    let first = Report { config: cfg, checks }.render();
    let second = run_numeric(&cfg).render();
    let ok = first == second;
    println!(
        "criterion 11 determinism of the report: {} ({} bytes compared)",
        if ok { "PASS" } else { "FAIL" },
        first.len()
    );
    if !ok {
        failures.push(11);
    }
    if failures.is_empty() {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failures:?}");
        ExitCode::FAILURE
    }
}

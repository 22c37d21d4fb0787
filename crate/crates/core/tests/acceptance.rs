//! Acceptance suite: one line per criterion, built from the verification rows.

use worldsheet_core::verify::{self, CheckRow, Status, VerifyConfig};

fn line(rows: &[CheckRow]) -> String {
    rows.iter()
        .map(|r| match r.status {
            Status::Skipped => format!("{}=skipped", r.name),
            Status::Info => format!("{}={:.3e} (info)", r.name, r.value),
            _ => format!("{}={:.3e}{}{:.0e}", r.name, r.value, if r.bound == verify::Bound::AtLeast { ">=" } else { "<=" }, r.tolerance),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn acceptance() {
    let cfg = VerifyConfig::default();
    let mut failed = Vec::new();
    println!();
    for group in 1..=9u8 {
        let rows = verify::run(group, &cfg);
        let ok = verify::all_passed(&rows) && rows.iter().any(|r| r.status == Status::Pass);
        println!("{} criterion {group} ({}): {}", if ok { "PASS" } else { "FAIL" }, verify::GROUPS[group as usize - 1], line(&rows));
        for r in rows.iter().filter(|r| r.status == Status::Fail) {
            println!("    failed {}: {}", r.name, r.note);
        }
        if !ok {
            failed.push(group);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

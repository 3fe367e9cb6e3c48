//! # Growth-schedule validation
//!
//! The limit theorems only hold when the alphabet grows slowly enough with
//! the word length. Schedules are symbolic power laws so the little-o
//! conditions are decidable; this example validates a few schedules against
//! each regime and prints the per-condition report.

use ytlab::model::{validate_schedule, GrowthSchedule, Theorem};

fn main() -> ytlab::Result<()> {
    for (label, a) in [("a = 0.25 (valid)", 0.25), ("a = 0.35 (too fast)", 0.35)] {
        let schedule = GrowthSchedule::power(a);
        let report = validate_schedule(&schedule, Theorem::Main)?;
        println!("{label}: overall pass = {}", report.pass);
        for check in &report.conditions {
            println!("  [{}] {}: {}", if check.pass { "ok" } else { "fail" }, check.name, check.detail);
        }
        println!("  m(10^5) = {}", schedule.m_of(100_000));
    }
    Ok(())
}

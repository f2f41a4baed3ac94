//! Runner for the end-to-end acceptance checks of `calib`.
//!
//! Each criterion is a function returning a one-line detail on success or
//! failure. [`run`] executes the selected criteria, prints one PASS/FAIL
//! line per criterion and reports how many failed.

use std::time::Instant;

/// Outcome of one criterion: `Ok(detail)` passes, `Err(detail)` fails.
pub type Check = Result<String, String>;

pub fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub check: fn() -> Check,
}

/// Criterion ids named in `args`; empty means all. Non-numeric arguments
/// (such as flags cargo forwards to test binaries) are ignored.
pub fn selected_ids(args: &[String]) -> Vec<u32> {
    args.iter().filter_map(|a| a.parse().ok()).collect()
}

/// Run the criteria picked by `args` and return the number of failures.
/// `--list` prints the criteria without running them.
pub fn run(criteria: &[Criterion], args: &[String]) -> usize {
    if args.iter().any(|a| a == "--list") {
        for c in criteria {
            println!("criterion {}: {}: test", c.id, c.name);
        }
        return 0;
    }
    let wanted = selected_ids(args);
    let mut failed = 0;
    for c in criteria {
        if !wanted.is_empty() && !wanted.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}  {} ({secs:.1} s): {detail}", c.id, c.name);
    }
    failed
}

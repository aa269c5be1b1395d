//! Runner for the acceptance suite in `tests/acceptance.rs`.
//!
//! Each criterion is a closure returning a one-line summary on success or
//! an explanation on failure. Panics count as failures. The runner prints
//! one `PASS` or `FAIL` line per criterion and keeps going after failures.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

pub type Verdict = Result<String, String>;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<28} [{:>7.2} s] {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

pub fn run_criterion(name: &'static str, check: impl FnOnce() -> Verdict) -> Outcome {
    let t0 = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check));
    let elapsed = t0.elapsed();
    let (passed, detail) = match result {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            (false, format!("panic: {msg}"))
        }
    };
    Outcome {
        name,
        passed,
        detail,
        elapsed,
    }
}

/// `Ok(summary)` when every check holds, otherwise `Err` listing the
/// failed ones after the summary.
pub fn verdict(summary: String, checks: &[(bool, String)]) -> Verdict {
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, what)| what.as_str())
        .collect();
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; failed: {}", failed.join("; ")))
    }
}

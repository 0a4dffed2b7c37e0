//! One PASS/FAIL verdict per acceptance criterion, preceded by its checks.
//! Tolerances live in `cvdistill::analysis::validate`; the literals below
//! restate them so that a silent change there fails here.

use std::process::ExitCode;

use cvdistill::analysis::validate::{CheckResult, ValidateOptions, Validator};

type Pinned = &'static [(&'static str, f64)];

const CRITERIA: [(&str, Pinned); 10] = [
    (
        "1 closed forms match the oracle",
        &[("1a", 1e-6), ("1b", 1e-8)],
    ),
    ("2 symplectic route", &[("2", 1e-12)]),
    (
        "3 centrosymmetric structure",
        &[
            ("3a", 1e-12),
            ("3b", 1e-10),
            ("3c", 1.0),
            ("3d", 1e-12),
            ("3e", 1e-10),
            ("3f", 1.0),
        ],
    ),
    ("4 unit trace", &[("4", 1e-10)]),
    (
        "5 pinned values",
        &[
            ("5a", 1e-9),
            ("5b", 1e-4),
            ("5c", 1e-7),
            ("5d", 1e-8),
            ("5e", 1e-4),
            ("5f", 1e-9),
            ("5g", 1e-12),
        ],
    ),
    (
        "6 threshold transmittance",
        &[
            ("6a", 0.0),
            ("6b", 1e-3),
            ("6c", 1e-3),
            ("6d", 1e-6),
            ("6e", 1e-3),
            ("6f", 1e-3),
            ("6g", 1e-3),
        ],
    ),
    (
        "7 threshold detectors",
        &[("7a", 1e-12), ("7b", 1e-12), ("7c", 1e-12), ("7d", 0.9)],
    ),
    ("8 optimal squeezing", &[("8a", 0.0), ("8b", 0.05)]),
    (
        "9 teleportation fidelity",
        &[("9a", 1e-8), ("9b", 1e-12), ("9c", 0.0)],
    ),
    (
        "beamsplitter and truncation invariants",
        &[("U1", 1e-12), ("U2", 1e-12), ("T1", 1e-8), ("T2", 1e-8)],
    ),
];

fn verdict(checks: &[CheckResult], pinned: Pinned) -> Result<(), String> {
    for (id, tol) in pinned {
        let c = checks
            .iter()
            .find(|c| c.id == *id)
            .ok_or_else(|| format!("missing check {id}"))?;
        if c.tolerance.is_finite() && c.tolerance != *tol {
            return Err(format!("tolerance of {id} drifted to {:e}", c.tolerance));
        }
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed && !c.informational)
        .map(|c| c.id.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(format!("failed checks {failed:?}"))
    }
}

fn main() -> ExitCode {
    // cargo passes harness flags such as --nocapture; none apply here
    let v = Validator::new(ValidateOptions::default());
    let mut failures = 0;
    for (n, (title, pinned)) in CRITERIA.iter().enumerate() {
        let checks = if n < 9 {
            v.criterion(n + 1)
        } else {
            v.extras()
        };
        for c in &checks {
            println!("    {}", c.line());
        }
        match verdict(&checks, pinned) {
            Ok(()) => println!("PASS criterion {title}"),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {title}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        CRITERIA.len() - failures,
        CRITERIA.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

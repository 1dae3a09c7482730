//! The thirteen acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p bl_gevrey_cli --test acceptance -- --nocapture`.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use bl_gevrey_cli::runner::{self, Overrides, Termination, NORMS, SLACK, SNAPSHOT_DIR, TRAJECTORY};
use bl_gevrey_cli::snapshot::read_snapshot;
use bl_gevrey_cli::suites::{self, Check, Hooks};
use bl_gevrey_cli::RunConfig;
use tempfile::tempdir;

type Outcome = (bool, String);

fn from_checks(checks: &[Check]) -> Outcome {
    let pass = checks.iter().all(|c| c.pass);
    let detail = checks
        .iter()
        .map(|c| format!("[{} {}] {}", if c.pass { "ok" } else { "FAILED" }, c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    (pass, detail)
}

fn within(limit_secs: f64, start: Instant, (pass, detail): Outcome) -> Outcome {
    let secs = start.elapsed().as_secs_f64();
    (pass && secs < limit_secs, format!("{detail}; {secs:.1}s of {limit_secs}s allowed"))
}

fn find<'a>(checks: &'a [Check], name: &str) -> Vec<Check> {
    checks.iter().filter(|c| c.name == name).cloned().collect()
}

fn same_bytes(a: &Path, b: &Path, names: &[&str]) -> Vec<String> {
    names
        .iter()
        .filter(|n| fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok())
        .map(|n| n.to_string())
        .collect()
}

fn determinism_and_resume() -> Outcome {
    let (a, b, c) = (tempdir().unwrap(), tempdir().unwrap(), tempdir().unwrap());
    let cfg = |dir: &Path| RunConfig {
        t_end: 0.02,
        snapshot_every: 5,
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    };
    let ma = runner::run(&cfg(a.path())).unwrap();
    runner::run(&cfg(b.path())).unwrap();
    let rerun_diff = same_bytes(a.path(), b.path(), &[NORMS, SLACK, TRAJECTORY]);

    let snap = a.path().join(SNAPSHOT_DIR).join("step_000010.bin");
    let overrides = Overrides {
        output_dir: Some(c.path().to_path_buf()),
        ..Overrides::default()
    };
    let mr = runner::resume(&snap, &overrides).unwrap();
    let resume_diff = same_bytes(a.path(), c.path(), &[NORMS, SLACK, TRAJECTORY]);
    let last = format!("step_{:06}.bin", ma.steps);
    let (_, fa) = read_snapshot(&a.path().join(SNAPSHOT_DIR).join(&last)).unwrap();
    let (_, fc) = read_snapshot(&c.path().join(SNAPSHOT_DIR).join(&last)).unwrap();
    let field_gap = fa.iter().zip(&fc).map(|(x, y)| x.sub(y).max_abs()).fold(0.0, f64::max);

    let pass = ma.termination == Termination::EndTime
        && mr.steps == ma.steps
        && rerun_diff.is_empty()
        && resume_diff.is_empty()
        && field_gap == 0.0;
    (
        pass,
        format!(
            "rerun differs in {rerun_diff:?}, resume differs in {resume_diff:?}, final field gap {field_gap:.1e}"
        ),
    )
}

#[test]
fn acceptance() {
    let reference_cfg = RunConfig::default();
    let reference = std::cell::OnceCell::new();
    let reference_checks = || {
        reference
            .get_or_init(|| match suites::reference_run(&reference_cfg) {
                Ok((sim, fits)) => suites::assess_reference(&sim, &fits),
                Err(e) => vec![Check {
                    name: "reference_run".into(),
                    pass: false,
                    detail: e.to_string(),
                }],
            })
            .clone()
    };

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (
            "Bony decomposition identity",
            Box::new(|| {
                let t = Instant::now();
                within(30.0, t, from_checks(&[suites::bony_identity(256, 100, 1)]))
            }),
        ),
        (
            "weight identity",
            Box::new(|| from_checks(&[suites::weight_identity(10_000, 2, &Hooks::default())])),
        ),
        (
            "sup bound with explicit constant",
            Box::new(|| {
                let t = Instant::now();
                within(60.0, t, from_checks(&[suites::sup_bound(50, 23)]))
            }),
        ),
        ("phase convexity", Box::new(|| from_checks(&[suites::phase_convexity(128)]))),
        (
            "solver manufactured solution",
            Box::new(|| {
                let t = Instant::now();
                let checks = [suites::mms_space_order(), suites::mms_time_order(), suites::linear_decay()];
                within(300.0, t, from_checks(&checks))
            }),
        ),
        ("divergence constraint", Box::new(|| from_checks(&[suites::divergence_order()]))),
        (
            "auxiliary residuals",
            Box::new(|| from_checks(&[suites::residual_orders(), suites::collapse_cases()])),
        ),
        ("energy identities", Box::new(|| from_checks(&[suites::identity_orders()]))),
        (
            "radius tracking",
            Box::new(|| {
                let mut c = find(&reference_checks(), "radius_tracking");
                c.push(suites::zero_field_radius());
                from_checks(&c)
            }),
        ),
        (
            "bootstrap and positivity",
            Box::new(|| {
                let r = reference_checks();
                let mut c = find(&r, "bootstrap");
                c.extend(find(&r, "positivity"));
                from_checks(&c)
            }),
        ),
        (
            "energy bounds and constant stability",
            Box::new(|| {
                let mut c = find(&reference_checks(), "energy_bounds");
                c.push(suites::minimal_constant_stability(&reference_cfg, &[64, 128, 256]));
                from_checks(&c)
            }),
        ),
        ("viscosity robustness", Box::new(|| from_checks(&[suites::viscosity_refinement()]))),
        ("determinism and resume", Box::new(determinism_and_resume)),
    ];

    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(outcome) => outcome,
            Err(p) => {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}

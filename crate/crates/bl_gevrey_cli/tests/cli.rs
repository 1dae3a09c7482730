use std::fs;
use std::path::Path;
use std::process::Command;

use bl_gevrey::Error;
use bl_gevrey_cli::runner::{self, Overrides, Termination, MANIFEST, MMS_ERRORS, NORMS, SLACK, SNAPSHOT_DIR};
use bl_gevrey_cli::snapshot::{read_snapshot, sidecar_path};
use bl_gevrey_cli::suites::{self, Hooks};
use bl_gevrey_cli::{CliError, RunConfig};
use tempfile::tempdir;

const BIN: &str = env!("CARGO_BIN_EXE_bl-gevrey");

fn small(out: &Path) -> RunConfig {
    RunConfig {
        nx: 32,
        ny: 65,
        t_end: 0.01,
        snapshot_every: 4,
        output_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn snapshot(out: &Path, step: usize) -> std::path::PathBuf {
    out.join(SNAPSHOT_DIR).join(format!("step_{step:06}.bin"))
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = RunConfig {
        gamma: Some(2.5),
        seed: Some(7),
        dt: Some(1e-4),
        ..RunConfig::default()
    };
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    for text in ["nx_typo = 3", "epsilon = 1.5", "delta = -1.0", "snapshot_every = 0", "ny = 2"] {
        let e = RunConfig::from_toml(text).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}: {e}");
    }
}

#[test]
fn runs_are_deterministic() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let ma = runner::run(&small(a.path())).unwrap();
    let mb = runner::run(&small(b.path())).unwrap();
    assert_eq!(ma.termination, Termination::EndTime);
    for name in [NORMS, SLACK] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    assert_eq!(ma.steps, mb.steps);
}

#[test]
fn resume_reproduces_uninterrupted_run() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let full = runner::run(&small(a.path())).unwrap();
    let overrides = Overrides {
        output_dir: Some(b.path().to_path_buf()),
        ..Overrides::default()
    };
    let resumed = runner::resume(&snapshot(a.path(), 4), &overrides).unwrap();
    assert_eq!(resumed.steps, full.steps);
    assert_eq!(resumed.t_final, full.t_final);
    let last = snapshot(a.path(), full.steps);
    let (_, fa) = read_snapshot(&last).unwrap();
    let (_, fb) = read_snapshot(&snapshot(b.path(), full.steps)).unwrap();
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.phys(), y.phys());
    }
    for name in [NORMS, SLACK] {
        assert!(fs::read(a.path().join(name)).unwrap() == fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn resume_can_extend_the_horizon() {
    let dir = tempdir().unwrap();
    let m = runner::run(&small(dir.path())).unwrap();
    let next = tempdir().unwrap();
    let overrides = Overrides {
        output_dir: Some(next.path().to_path_buf()),
        t_end: Some(0.015),
        ..Overrides::default()
    };
    let r = runner::resume(&snapshot(dir.path(), m.steps), &overrides).unwrap();
    assert!((r.t_final - 0.015).abs() < 1e-12);
    assert!(r.steps > m.steps);
}

#[test]
fn zero_amplitude_run_stops_at_radius_limit() {
    let dir = tempdir().unwrap();
    let cfg = RunConfig {
        amplitude: 0.0,
        epsilon: 0.0,
        gamma: Some(2.0),
        t_end: 1.0,
        snapshot_every: 1000,
        ..small(dir.path())
    };
    let m = runner::run(&cfg).unwrap();
    assert_eq!(m.termination, Termination::RadiusExhausted);
    assert!((m.t_star.unwrap() - 0.05).abs() < 1e-12);
    let text = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
    assert!(text.contains("\"termination\": \"T*\""));

    let e = runner::resume(&snapshot(dir.path(), m.steps), &Overrides::default()).unwrap_err();
    assert!(matches!(e, CliError::Model(Error::PastTStar { .. })), "{e}");
}

#[test]
fn missing_sidecar_is_an_error() {
    let dir = tempdir().unwrap();
    runner::run(&small(dir.path())).unwrap();
    let snap = snapshot(dir.path(), 4);
    fs::remove_file(sidecar_path(&snap)).unwrap();
    let e = runner::resume(&snap, &Overrides::default()).unwrap_err();
    assert!(e.to_string().contains("sidecar missing"), "{e}");
}

#[test]
fn truncated_snapshot_is_an_error() {
    let dir = tempdir().unwrap();
    runner::run(&small(dir.path())).unwrap();
    let snap = snapshot(dir.path(), 4);
    let bytes = fs::read(&snap).unwrap();
    fs::write(&snap, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(read_snapshot(&snap), Err(CliError::Snapshot { .. })));
}

#[test]
fn manufactured_mode_writes_errors() {
    let dir = tempdir().unwrap();
    let cfg = RunConfig {
        nx: 16,
        ny: 65,
        ymax: 8.0,
        amplitude: 0.1,
        mms: true,
        dt: Some(1e-3),
        t_end: 0.01,
        ..small(dir.path())
    };
    let m = runner::run(&cfg).unwrap();
    assert_eq!(m.termination, Termination::EndTime);
    let text = fs::read_to_string(dir.path().join(MMS_ERRORS)).unwrap();
    assert_eq!(text.lines().count(), 11, "{text}");
}

#[test]
fn flipped_weight_sign_fails_only_the_identity_check() {
    let broken = Hooks {
        weight_dt: |t, y, te| -bl_gevrey::gevrey::weight_dt(t, y, te),
        ..Hooks::default()
    };
    let failed: Vec<String> = suites::verify_with("spaces", &broken)
        .unwrap()
        .into_iter()
        .filter(|c| !c.pass)
        .map(|c| c.name)
        .collect();
    assert_eq!(failed, ["weight_identity"]);
    assert!(suites::verify("spaces").unwrap().iter().all(|c| c.pass));
}

#[test]
fn unknown_suite_is_rejected() {
    assert!(matches!(suites::verify("everything"), Err(CliError::UnknownSuite(_))));
}

#[test]
fn binary_exit_codes_and_output_precedence() {
    let dir = tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    let cfg = RunConfig {
        output_dir: dir.path().join("from_config"),
        ..small(dir.path())
    };
    fs::write(&cfg_path, cfg.to_toml()).unwrap();

    let env_dir = dir.path().join("from_env");
    let status = Command::new(BIN)
        .args(["run", cfg_path.to_str().unwrap()])
        .env("BLAYER_OUTPUT_DIR", &env_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(env_dir.join(MANIFEST).exists());

    let flag_dir = dir.path().join("from_flag");
    let status = Command::new(BIN)
        .args(["run", cfg_path.to_str().unwrap(), "--output", flag_dir.to_str().unwrap()])
        .env("BLAYER_OUTPUT_DIR", &env_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(flag_dir.join(MANIFEST).exists());
    assert!(!dir.path().join("from_config").exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "colour = 3\n").unwrap();
    let out = Command::new(BIN).args(["run", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(Command::new(BIN).args(["verify", "nope"]).status().unwrap().code(), Some(2));

    let snap = snapshot(&flag_dir, 4);
    let out = Command::new(BIN).args(["inspect", snap.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"step\": 4"));

    let out = Command::new(BIN).args(["verify", "dyadic"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

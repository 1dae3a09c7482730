//! Run orchestration: calibration, the monitored time loop, snapshots,
//! resume, and the output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bl_gevrey::aux::{decompose, AuxState, Identity};
use bl_gevrey::mms::Manufactured;
use bl_gevrey::monitor::{
    fourier_decay_exponent, BootstrapParams, BootstrapReport, EnergyLedger, Inequality, MuRhs, MuState,
    SlackReport,
};
use bl_gevrey::run::{RunSettings, Simulation, Stop};
use bl_gevrey::solver::{make_initial, step, SimState};
use bl_gevrey::Error;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::snapshot::{read_snapshot, sidecar_path, write_atomic, write_snapshot, SnapshotHeader, FORMAT, VERSION};

pub const MANIFEST: &str = "manifest.json";
pub const NORMS: &str = "norms.csv";
pub const TRAJECTORY: &str = "trajectory.csv";
pub const DECOMPOSITIONS: &str = "decompositions.csv";
pub const SLACK: &str = "slack.json";
pub const MMS_ERRORS: &str = "mms.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    #[serde(rename = "T_end")]
    EndTime,
    #[serde(rename = "T*")]
    RadiusExhausted,
    #[serde(rename = "positivity-abort")]
    PositivityAbort,
    #[serde(rename = "NaN")]
    NonFinite,
    #[serde(rename = "error")]
    Failed,
}

impl Termination {
    /// Whether the run ended on its own terms.
    pub fn is_clean(&self) -> bool {
        matches!(self, Termination::EndTime | Termination::RadiusExhausted)
    }
}

/// Constants fixed before the main run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub gamma: f64,
    pub gamma_floor: f64,
    /// Largest minimal constant seen in the calibration run.
    pub calibrated_c: Option<f64>,
    /// Threshold for the constant-bearing inequalities, `gamma / 10`.
    pub c_pass: f64,
    pub k: f64,
    pub eta: f64,
    pub zeta: f64,
    pub m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub version: String,
    pub constants: Option<Constants>,
    pub termination: Termination,
    pub error: Option<String>,
    pub t_final: f64,
    pub t_star: Option<f64>,
    pub steps: usize,
    pub bootstrap: Option<BootstrapReport>,
    /// All three energy bounds held at every recorded time.
    pub energy_bounds_hold: Option<bool>,
    /// Largest minimal constant over the run.
    pub max_minimal_c: Option<f64>,
    pub resumed_from: Option<PathBuf>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub t: f64,
    pub mu: f64,
    pub mu_dot: f64,
    pub radius: f64,
    pub positivity: f64,
    pub decay_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub t: f64,
    pub identity: String,
    pub term: String,
    pub value: f64,
}

/// Everything besides the fields needed to continue a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub constants: Constants,
    pub settings: RunSettings,
    pub mu: MuState,
    pub rhs: MuRhs,
    pub steps: usize,
    pub ledger: EnergyLedger,
    pub slack: SlackReport,
    pub bootstrap: BootstrapParams,
    pub trajectory: Vec<TrajectoryRow>,
    pub decompositions: Vec<DecompositionRow>,
}

/// Changes allowed when resuming.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub t_end: Option<f64>,
    pub snapshot_every: Option<usize>,
}

struct Log {
    trajectory: Vec<TrajectoryRow>,
    decompositions: Vec<DecompositionRow>,
}

fn trajectory_row(sim: &Simulation) -> TrajectoryRow {
    TrajectoryRow {
        step: sim.steps,
        t: sim.state.t,
        mu: sim.mu.mu,
        mu_dot: sim.rhs.value,
        radius: sim.phase().radius(),
        positivity: *sim.ledger.positivity.last().expect("ledger has the initial record"),
        decay_exponent: fourier_decay_exponent(&sim.state.u),
    }
}

/// `gamma` from a short run at the floor value, unless fixed by the config.
pub fn calibrate(cfg: &RunConfig, initial: &SimState) -> Result<(f64, Option<f64>), CliError> {
    if let Some(g) = cfg.gamma {
        return Ok((g, None));
    }
    let horizon = cfg.calibration_time.min(cfg.t_end);
    let mut sim = Simulation::new(initial.clone(), cfg.settings(cfg.gamma_floor, horizon))?;
    sim.run()?;
    let c = sim.slack.max_constant();
    if !c.is_finite() {
        return Err(CliError::Config(
            "calibration found an inequality that no finite constant satisfies".into(),
        ));
    }
    Ok(((10.0 * c).max(cfg.gamma_floor), Some(c)))
}

/// Runs the configuration into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    if let Some(path) = &cfg.resume {
        return resume(
            path,
            &Overrides {
                output_dir: Some(cfg.output_dir.clone()),
                t_end: Some(cfg.t_end),
                snapshot_every: Some(cfg.snapshot_every),
            },
        );
    }
    if cfg.mms {
        return run_mms(cfg);
    }
    let started = Instant::now();
    let grid = cfg.grid()?;
    let (u, theta) = make_initial(&cfg.init_spec(), &grid, cfg.theta_e)?;
    let initial = SimState::new(u, theta, cfg.nu, cfg.theta_e)?;
    let (gamma, calibrated_c) = calibrate(cfg, &initial)?;
    let sim = Simulation::new(initial, cfg.settings(gamma, cfg.t_end))?;
    let constants = Constants {
        gamma,
        gamma_floor: cfg.gamma_floor,
        calibrated_c,
        c_pass: sim.settings.c_pass,
        k: sim.bootstrap.k_coupling,
        eta: sim.bootstrap.eta,
        zeta: sim.bootstrap.zeta,
        m: sim.bootstrap.m,
    };
    let log = Log {
        trajectory: vec![trajectory_row(&sim)],
        decompositions: Vec::new(),
    };
    drive(cfg, sim, log, constants, None, started)
}

/// Continues from a snapshot written by [`run`].
pub fn resume(snapshot: &Path, overrides: &Overrides) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let (header, mut fields) = read_snapshot(snapshot)?;
    let side = sidecar_path(snapshot);
    let text = fs::read_to_string(&side)
        .map_err(|_| CliError::snapshot(snapshot, "accumulator sidecar missing"))?;
    let cp: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| CliError::snapshot(snapshot, format!("bad sidecar: {e}")))?;

    let mut cfg = cp.config.clone();
    cfg.resume = None;
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(t) = overrides.t_end {
        cfg.t_end = t;
    }
    if let Some(n) = overrides.snapshot_every {
        cfg.snapshot_every = n;
    }
    cfg.validate()?;
    let grid = cfg.grid()?;
    if !header.matches(&grid) || header.fields != ["u", "theta", "v", "w"] {
        return Err(Error::GridMismatch.into());
    }
    let mut settings = cp.settings;
    settings.t_end = cfg.t_end;
    let radius = settings.delta - settings.gamma * cp.mu.mu;
    if cp.mu.t_star.is_some() || radius <= 0.0 {
        return Err(Error::PastTStar { radius }.into());
    }

    let w = fields.pop().expect("four fields");
    let v = fields.pop().expect("four fields");
    let theta = fields.pop().expect("four fields");
    let u = fields.pop().expect("four fields");
    let state = SimState {
        t: header.t,
        u,
        theta,
        v,
        mu: header.mu,
        nu: header.nu,
        theta_e: header.theta_e,
    };
    let aux = AuxState::from_w(w, &state)?;
    let sim = Simulation {
        settings,
        state,
        aux,
        mu: cp.mu,
        ledger: cp.ledger,
        slack: cp.slack,
        bootstrap: cp.bootstrap,
        rhs: cp.rhs,
        steps: cp.steps,
    };
    let log = Log {
        trajectory: cp.trajectory,
        decompositions: cp.decompositions,
    };
    drive(&cfg, sim, log, cp.constants, Some(snapshot.to_path_buf()), started)
}

fn termination_of(e: &CliError) -> Termination {
    match e {
        CliError::Model(Error::Positivity { .. }) => Termination::PositivityAbort,
        CliError::Model(Error::NonFinite(_)) => Termination::NonFinite,
        _ => Termination::Failed,
    }
}

/// One step, plus the identity decompositions when a snapshot is due.
fn advance(sim: &mut Simulation, log: &mut Log, decompose_now: bool) -> Result<(), CliError> {
    let before = decompose_now.then(|| (sim.state.clone(), sim.aux.clone(), sim.phase(), sim.rhs.value));
    sim.advance()?;
    if let Some((state0, aux0, phase0, mu_dot)) = before {
        let dt = sim.state.t - state0.t;
        for id in Identity::all() {
            let d = decompose(id, &state0, &aux0, &phase0, sim.settings.s, Some((&sim.aux, dt, mu_dot)))?;
            let mut push = |term: &str, value: f64| {
                log.decompositions.push(DecompositionRow {
                    t: state0.t,
                    identity: id.name().into(),
                    term: term.into(),
                    value,
                })
            };
            for (label, v) in &d.terms {
                push(label, *v);
            }
            push("time_difference", d.left[0]);
            push("radius_decay", d.left[1]);
            push("normal_diffusion", d.left[2]);
            push("discrepancy", d.discrepancy());
        }
    }
    log.trajectory.push(trajectory_row(sim));
    Ok(())
}

fn drive(
    cfg: &RunConfig,
    mut sim: Simulation,
    mut log: Log,
    constants: Constants,
    resumed_from: Option<PathBuf>,
    started: Instant,
) -> Result<RunManifest, CliError> {
    let out = cfg.output_dir.clone();
    let snaps = out.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snaps).map_err(|e| CliError::io(&snaps, e))?;
    let every = cfg.snapshot_every;
    let mut error = None;
    let termination = loop {
        if let Some(stop) = sim.stop() {
            break match stop {
                Stop::EndTime => Termination::EndTime,
                Stop::RadiusExhausted { .. } => Termination::RadiusExhausted,
            };
        }
        let due = (sim.steps + 1) % every == 0;
        if let Err(e) = advance(&mut sim, &mut log, due) {
            error = Some(e.to_string());
            break termination_of(&e);
        }
        if due {
            save(cfg, &sim, &log, &constants, &snaps)?;
        }
    };
    let last = save(cfg, &sim, &log, &constants, &snaps)?;

    let mut outputs = vec![NORMS, TRAJECTORY, DECOMPOSITIONS, SLACK]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    write_outputs(&out, &sim, &log)?;
    outputs.push(format!("{SNAPSHOT_DIR}/{}", last.file_name().unwrap().to_string_lossy()));

    let energy_bounds_hold = [Inequality::EnergyMain, Inequality::EnergySlope, Inequality::EnergyCurvature]
        .into_iter()
        .all(|w| sim.slack.get(w).map(|rows| rows.iter().all(|r| r.pass)).unwrap_or(false));
    let manifest = RunManifest {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        constants: Some(constants),
        termination,
        error,
        t_final: sim.state.t,
        t_star: sim.mu.t_star,
        steps: sim.steps,
        bootstrap: Some(sim.bootstrap_report()),
        energy_bounds_hold: Some(energy_bounds_hold),
        max_minimal_c: Some(sim.slack.max_constant()),
        resumed_from,
        outputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(&out, &manifest)?;
    Ok(manifest)
}

fn save(
    cfg: &RunConfig,
    sim: &Simulation,
    log: &Log,
    constants: &Constants,
    dir: &Path,
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("step_{:06}.bin", sim.steps));
    let g = sim.state.grid();
    let header = SnapshotHeader {
        format: FORMAT.into(),
        version: VERSION,
        step: sim.steps,
        t: sim.state.t,
        mu: sim.state.mu,
        nu: sim.state.nu,
        theta_e: sim.state.theta_e,
        nx: g.nx(),
        ny: g.ny(),
        lx: g.lx(),
        ymax: g.ymax(),
        fields: ["u", "theta", "v", "w"].map(String::from).to_vec(),
    };
    let cp = Checkpoint {
        config: cfg.clone(),
        constants: *constants,
        settings: sim.settings,
        mu: sim.mu,
        rhs: sim.rhs,
        steps: sim.steps,
        ledger: sim.ledger.clone(),
        slack: sim.slack.clone(),
        bootstrap: sim.bootstrap,
        trajectory: log.trajectory.clone(),
        decompositions: log.decompositions.clone(),
    };
    // sidecar first: a snapshot file implies a complete sidecar
    let side = sidecar_path(&path);
    write_atomic(&side, serde_json::to_string(&cp).expect("checkpoint serializes").as_bytes())?;
    write_snapshot(
        &path,
        &header,
        &[&sim.state.u, &sim.state.theta, &sim.state.v, &sim.aux.w],
    )?;
    Ok(path)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_outputs(out: &Path, sim: &Simulation, log: &Log) -> Result<(), CliError> {
    let mut norms = String::from("t,series,value\n");
    for (t, name, v) in sim.ledger.rows() {
        writeln!(norms, "{t},{name},{v}").unwrap();
    }
    write_atomic(&out.join(NORMS), norms.as_bytes())?;

    let mut traj = String::from("step,t,mu,mu_dot,radius,positivity,decay_exponent\n");
    for r in &log.trajectory {
        writeln!(
            traj,
            "{},{},{},{},{},{},{}",
            r.step,
            r.t,
            r.mu,
            r.mu_dot,
            r.radius,
            r.positivity,
            opt(r.decay_exponent)
        )
        .unwrap();
    }
    write_atomic(&out.join(TRAJECTORY), traj.as_bytes())?;

    let mut dec = String::from("t,identity,term,value\n");
    for r in &log.decompositions {
        writeln!(dec, "{},{},{},{}", r.t, r.identity, r.term, r.value).unwrap();
    }
    write_atomic(&out.join(DECOMPOSITIONS), dec.as_bytes())?;

    let slack = serde_json::to_string_pretty(&sim.slack.series).expect("slack serializes");
    write_atomic(&out.join(SLACK), slack.as_bytes())
}

fn write_manifest(out: &Path, m: &RunManifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(m).expect("manifest serializes");
    write_atomic(&out.join(MANIFEST), text.as_bytes())
}

/// Manufactured-solution run: forced solver only, errors against the exact fields.
fn run_mms(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let grid = cfg.grid()?;
    let m = Manufactured {
        c: cfg.amplitude,
        theta_e: cfg.theta_e,
    };
    let (u, theta, _) = m.fields(&grid, 0.0);
    let mut state = SimState::new(u, theta, cfg.nu, cfg.theta_e)?;
    let dt = cfg.dt.unwrap_or(cfg.dt_max);
    let steps = (cfg.t_end / dt).round().max(1.0) as usize;
    let params = cfg.solver();
    let g2 = grid.clone();
    let force = move |t: f64| m.forcing(&g2, t);
    let mut csv = String::from("t,err_u,err_theta\n");
    let mut error = None;
    let mut termination = Termination::EndTime;
    for _ in 0..steps {
        match step(&state, dt, &params, Some(&force)) {
            Ok(next) => state = next,
            Err(e) => {
                let e = CliError::from(e);
                termination = termination_of(&e);
                error = Some(e.to_string());
                break;
            }
        }
        let (ue, te, _) = m.fields(&grid, state.t);
        writeln!(csv, "{},{},{}", state.t, state.u.sub(&ue).max_abs(), state.theta.sub(&te).max_abs()).unwrap();
    }
    write_atomic(&out.join(MMS_ERRORS), csv.as_bytes())?;
    let manifest = RunManifest {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        constants: None,
        termination,
        error,
        t_final: state.t,
        t_star: None,
        steps,
        bootstrap: None,
        energy_bounds_hold: None,
        max_minimal_c: None,
        resumed_from: None,
        outputs: vec![MMS_ERRORS.into()],
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(&out, &manifest)?;
    Ok(manifest)
}

/// JSON header of a snapshot.
pub fn inspect(snapshot: &Path) -> Result<String, CliError> {
    let h = crate::snapshot::read_header(snapshot)?;
    Ok(serde_json::to_string_pretty(&h).expect("header serializes"))
}

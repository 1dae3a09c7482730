//! Run configuration: a flat TOML table with explicit keys.

use std::path::{Path, PathBuf};

use bl_gevrey::run::RunSettings;
use bl_gevrey::solver::{InitSpec, SolverParams};
use bl_gevrey::Grid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable overriding `output_dir`.
pub const OUTPUT_ENV: &str = "BLAYER_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub nx: usize,
    pub lx: f64,
    pub ny: usize,
    pub ymax: f64,

    pub theta_e: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub amplitude: f64,
    /// Gevrey decay rate of the initial x-spectrum.
    pub decay: f64,
    /// Seed for random initial phases; absent means the deterministic sine/cosine data.
    pub seed: Option<u64>,

    pub delta: f64,
    /// Fixed radius decay rate; absent means calibrated.
    pub gamma: Option<f64>,
    /// Smallest calibrated `gamma`.
    pub gamma_floor: f64,
    pub s: f64,
    pub sigma_offset: f64,
    /// Length of the calibration run.
    pub calibration_time: f64,

    /// Fixed step; absent means the CFL step capped by `dt_max`.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub linear: bool,
    /// Manufactured-solution run instead of a monitored run.
    pub mms: bool,

    pub output_dir: PathBuf,
    /// Steps between snapshots.
    pub snapshot_every: usize,
    /// Snapshot to continue from.
    pub resume: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nx: 64,
            lx: 2.0 * std::f64::consts::PI,
            ny: 129,
            ymax: 12.0,
            theta_e: 1.0,
            nu: 0.0,
            epsilon: 1e-3,
            amplitude: 0.05,
            decay: 5.0,
            seed: None,
            delta: 0.1,
            gamma: None,
            gamma_floor: 1.0,
            s: 2.75,
            sigma_offset: 0.01,
            calibration_time: 0.01,
            dt: None,
            cfl: 0.4,
            dt_max: 1e-3,
            t_end: 0.05,
            linear: false,
            mms: false,
            output_dir: PathBuf::from("out"),
            snapshot_every: 10,
            resume: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are plain values")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        for (name, v) in [
            ("theta_e", self.theta_e),
            ("decay", self.decay),
            ("delta", self.delta),
            ("gamma_floor", self.gamma_floor),
            ("sigma_offset", self.sigma_offset),
            ("calibration_time", self.calibration_time),
            ("cfl", self.cfl),
            ("dt_max", self.dt_max),
            ("t_end", self.t_end),
        ] {
            positive(name, v)?;
        }
        if let Some(g) = self.gamma {
            positive("gamma", g)?;
        }
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(CliError::Config(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(CliError::Config(format!("amplitude must be >= 0, got {}", self.amplitude)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < self.theta_e) {
            return Err(CliError::Config(format!(
                "epsilon must lie in [0, theta_e), got {}",
                self.epsilon
            )));
        }
        if !self.s.is_finite() {
            return Err(CliError::Config("s must be finite".into()));
        }
        if self.snapshot_every == 0 {
            return Err(CliError::Config("snapshot_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.nx, self.lx, self.ny, self.ymax)?)
    }

    pub fn init_spec(&self) -> InitSpec {
        InitSpec {
            amplitude: self.amplitude,
            decay: self.decay,
            epsilon: self.epsilon,
            lift_delta: self.delta,
            s: self.s,
            phase_seed: self.seed,
        }
    }

    pub fn solver(&self) -> SolverParams {
        match self.dt {
            // a fixed step: the CFL bound never binds
            Some(dt) => SolverParams {
                cfl: f64::INFINITY,
                dt_max: dt,
                linear: self.linear,
            },
            None => SolverParams {
                cfl: self.cfl,
                dt_max: self.dt_max,
                linear: self.linear,
            },
        }
    }

    pub fn settings(&self, gamma: f64, t_end: f64) -> RunSettings {
        RunSettings {
            delta: self.delta,
            gamma,
            s: self.s,
            sigma_offset: self.sigma_offset,
            epsilon: self.epsilon,
            c_pass: gamma / 10.0,
            t_end,
            solver: self.solver(),
        }
    }

    /// Output directory after the environment override.
    pub fn resolved_output(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

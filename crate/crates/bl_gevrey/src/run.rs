//! Time loop coupling the solver, the auxiliary fields and the monitors.

use serde::{Deserialize, Serialize};

use crate::aux::{evolve_w, AuxState};
use crate::error::Result;
use crate::gevrey::PhaseState;
use crate::monitor::{
    advance_mu, bootstrap_check, measure, mu_rhs, positivity_margin, step_to_limit, BootstrapParams,
    BootstrapReport, EnergyLedger, MuRhs, MuState, SlackReport,
};
use crate::solver::{cfl_dt, step, SimState, SolverParams};

/// Parameters of a monitored run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub delta: f64,
    pub gamma: f64,
    pub s: f64,
    /// Amount by which every `sigma+` in the radius ODE exceeds `sigma`.
    pub sigma_offset: f64,
    pub epsilon: f64,
    /// Constant used for the temperature weight and as the pass threshold.
    pub c_pass: f64,
    pub t_end: f64,
    pub solver: SolverParams,
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Stop {
    EndTime,
    RadiusExhausted { t_star: f64 },
}

/// Everything that evolves during a run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub settings: RunSettings,
    pub state: SimState,
    pub aux: AuxState,
    pub mu: MuState,
    pub ledger: EnergyLedger,
    pub slack: SlackReport,
    pub bootstrap: BootstrapParams,
    pub rhs: MuRhs,
    pub steps: usize,
}

impl Simulation {
    pub fn new(state: SimState, settings: RunSettings) -> Result<Self> {
        let aux = AuxState::initial(&state)?;
        let phase = PhaseState::new(settings.delta, settings.gamma);
        let rhs = mu_rhs(&state, &phase, settings.sigma_offset)?;
        let mut ledger = EnergyLedger::new(settings.s, settings.gamma, state.theta_e);
        ledger.record(
            state.t,
            &rhs,
            &measure(&state, &aux, &phase, settings.s)?,
            positivity_margin(&state),
        )?;
        let bootstrap = BootstrapParams::from_initial(&ledger, settings.epsilon, settings.c_pass)?;
        let mut slack = SlackReport::default();
        slack.push_all(&ledger, &bootstrap, settings.c_pass)?;
        Ok(Self {
            settings,
            mu: MuState {
                t: state.t,
                mu: state.mu,
                mu_dot: rhs.value,
                t_star: None,
            },
            state,
            aux,
            ledger,
            slack,
            bootstrap,
            rhs,
            steps: 0,
        })
    }

    pub fn phase(&self) -> PhaseState {
        PhaseState::new(self.settings.delta, self.settings.gamma).with_mu(self.mu.mu)
    }

    /// Whether another step is due.
    pub fn stop(&self) -> Option<Stop> {
        if let Some(t_star) = self.mu.t_star {
            return Some(Stop::RadiusExhausted { t_star });
        }
        if self.state.t >= self.settings.t_end * (1.0 - 1e-14) {
            return Some(Stop::EndTime);
        }
        None
    }

    /// Advances one step and records the new snapshot.
    pub fn advance(&mut self) -> Result<()> {
        let phase = self.phase();
        let mut dt = cfl_dt(&self.state, &self.settings.solver).min(self.settings.t_end - self.state.t);
        dt = step_to_limit(&self.mu, self.rhs.value, dt, &phase);
        let next = step(&self.state, dt, &self.settings.solver, None)?;
        let aux = evolve_w(&self.aux, &self.state, &next, dt)?;
        let mut mu = advance_mu(self.mu, self.rhs.value, dt, &phase)?;
        if mu.t_star.is_some() {
            // the last step lands on the limit; remove round-off overshoot
            mu.mu = mu.mu.min(phase.delta / phase.gamma);
        }
        let mut state = next;
        state.mu = mu.mu;
        let phase = phase.with_mu(mu.mu);
        let rhs = mu_rhs(&state, &phase, self.settings.sigma_offset)?;
        self.ledger.record(
            state.t,
            &rhs,
            &measure(&state, &aux, &phase, self.settings.s)?,
            positivity_margin(&state),
        )?;
        self.slack.push_all(&self.ledger, &self.bootstrap, self.settings.c_pass)?;
        self.state = state;
        self.aux = aux;
        self.mu = mu;
        self.rhs = rhs;
        self.steps += 1;
        Ok(())
    }

    /// Steps until the end time or the radius limit.
    pub fn run(&mut self) -> Result<Stop> {
        loop {
            if let Some(s) = self.stop() {
                return Ok(s);
            }
            self.advance()?;
        }
    }

    pub fn bootstrap_report(&self) -> BootstrapReport {
        bootstrap_check(&self.ledger, &self.bootstrap)
    }
}

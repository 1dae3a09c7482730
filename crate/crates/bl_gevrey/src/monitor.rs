//! Gevrey-radius ODE, energy ledger and a priori inequality monitors.
//!
//! The ledger stores lifted norms of the solution and the auxiliary
//! fields at every recorded time. From those it integrates the time norms
//! of the energy functional, and it evaluates each a priori inequality.
//!
//! The constants of the inequalities are not explicit. Each is reported
//! as the smallest `C` for which the inequality holds at that time. The
//! three energy bounds have explicit right sides and are reported as
//! booleans.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aux::AuxState;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::gevrey::{
    accumulate_time_norm, japanese, lift_with_radius, weighted_norm, PhaseState, TimeAccumulator,
    TimeExponent, Weighting,
};
use crate::solver::SimState;

/// Radius ODE state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuState {
    pub t: f64,
    pub mu: f64,
    /// Last right-side evaluation.
    pub mu_dot: f64,
    /// Time at which `mu` reached `delta / gamma`.
    pub t_star: Option<f64>,
}

impl Default for MuState {
    fn default() -> Self {
        Self {
            t: 0.0,
            mu: 0.0,
            mu_dot: 1.0,
            t_star: None,
        }
    }
}

/// Right side of the radius ODE, split into its five groups.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuRhs {
    pub value: f64,
    pub groups: [f64; 5],
}

/// Names of the five groups, in order.
pub const MU_GROUPS: [&str; 5] = [
    "mu_first_derivatives",
    "mu_quadratic",
    "mu_quartic",
    "mu_third_derivative_cross",
    "mu_third_derivative_products",
];

/// Lifted norms entering the radius ODE at one instant.
struct RadiusNorms<'a> {
    w: Weighting,
    sp: f64,
    u: &'a Field,
    th: &'a Field,
    uy: Field,
    thy: Field,
    uyy: Field,
    thyy: Field,
    uyyy: Field,
    thyyy: Field,
}

impl RadiusNorms<'_> {
    fn n(&self, label: &str, f: &Field, sigma: f64) -> Result<f64> {
        let v = weighted_norm(f, sigma + self.sp, self.w);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("radius ODE norm {label} at sigma {sigma}")))
        }
    }
    /// `||f||_{H^{sigma+,1}_Psi} = ||f|| + ||d_y f||`.
    fn n1(&self, label: &str, f: &Field, sigma: f64) -> Result<f64> {
        Ok(self.n(label, f, sigma)? + self.n(label, &f.dy(), sigma)?)
    }
}

/// Evaluates the radius ODE right side for the lifted state; `offset`
/// is the amount by which every `sigma+` exceeds `sigma`.
pub fn mu_rhs(state: &SimState, phase: &PhaseState, offset: f64) -> Result<MuRhs> {
    let r = phase.checked_radius()?;
    let u = lift_with_radius(&state.u, r)?;
    let th = lift_with_radius(&state.theta, r)?;
    let uy = u.dy();
    let thy = th.dy();
    let uyy = uy.dy();
    let thyy = thy.dy();
    let q = RadiusNorms {
        w: Weighting {
            t: state.t,
            theta_e: state.theta_e,
        },
        sp: offset,
        u: &u,
        th: &th,
        uyyy: uyy.dy(),
        thyyy: thyy.dy(),
        uy,
        thy,
        uyy,
        thyy,
    };
    let t1 = 1.0 + state.t;
    let pair = |a: f64, b: f64| a + b;

    let first = t1.powf(0.25)
        * (pair(q.n("dy_u", &q.uy, 2.5)?, q.n("dy_theta", &q.thy, 2.5)?)
            + pair(q.n1("dyy_u", &q.uyy, 1.5)?, q.n1("dyy_theta", &q.thyy, 1.5)?));
    let quadratic = t1.sqrt()
        * (q.n("u", q.u, 2.5)?.powi(2)
            + q.n("theta", q.th, 1.5)?.powi(2)
            + pair(q.n("dy_u", &q.uy, 2.5)?, q.n("dy_theta", &q.thy, 2.5)?).powi(2)
            + pair(q.n("dyy_u", &q.uyy, 1.5)?, q.n("dyy_theta", &q.thyy, 1.5)?).powi(2));
    let quartic = q.n("theta", q.th, 0.5)?.powi(4)
        + t1 * pair(q.n1("dy_u", &q.uy, 1.5)?, q.n1("dy_theta", &q.thy, 1.5)?).powi(4);
    let cross = t1.sqrt()
        * q.n("dy_theta", &q.thy, 1.5)?
        * (q.n("dyyy_u", &q.uyyy, 1.5)? + q.n("dyyy_theta", &q.thyyy, 1.5)?);
    let products = q.n("dyyy_u", &q.uyyy, 0.5)?
        * (q.n("dy_u", &q.uy, 0.5)? + q.n("dyy_u", &q.uyy, 0.5)? + q.n("theta", q.th, 0.5)?)
        + q.n("dyyy_theta", &q.thyyy, 0.5)? * q.n("dy_u", &q.uy, 0.5)?;
    let groups = [first, quadratic, quartic, cross, products];
    Ok(MuRhs {
        value: 1.0 + groups.iter().sum::<f64>(),
        groups,
    })
}

/// Forward-Euler step of the radius ODE. When `mu` reaches `delta / gamma`
/// the crossing time is recorded by linear interpolation within the step.
pub fn advance_mu(ms: MuState, rhs: f64, dt: f64, phase: &PhaseState) -> Result<MuState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if !(rhs >= 1.0) {
        return Err(Error::Domain(format!("radius ODE right side must be >= 1, got {rhs}")));
    }
    let limit = phase.delta / phase.gamma;
    let mu = ms.mu + dt * rhs;
    let t_star = match ms.t_star {
        Some(t) => Some(t),
        None if mu >= limit => Some(ms.t + (limit - ms.mu) / rhs),
        None => None,
    };
    Ok(MuState {
        t: ms.t + dt,
        mu,
        mu_dot: rhs,
        t_star,
    })
}

/// Step that lands exactly on the radius limit, if the next step would cross it.
pub fn step_to_limit(ms: &MuState, rhs: f64, dt: f64, phase: &PhaseState) -> f64 {
    let remaining = (phase.delta / phase.gamma - ms.mu) / rhs;
    if remaining < dt {
        remaining.max(0.0)
    } else {
        dt
    }
}

/// Quantity whose lifted norm is tracked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    UAux,
    Lambda,
    Varphi,
    U,
    Theta,
    DyU,
    DyTheta,
    DyyU,
    DyyTheta,
    DxU,
    DxTheta,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::UAux => "U",
            Quantity::Lambda => "lambda",
            Quantity::Varphi => "varphi",
            Quantity::U => "u",
            Quantity::Theta => "theta",
            Quantity::DyU => "dy_u",
            Quantity::DyTheta => "dy_theta",
            Quantity::DyyU => "dyy_u",
            Quantity::DyyTheta => "dyy_theta",
            Quantity::DxU => "dx_u",
            Quantity::DxTheta => "dx_theta",
        }
    }
}

/// How a probe enters the ledger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    /// Current value and running maximum.
    Sup,
    /// `int mu' ||f||^2 dt`.
    Mu,
    /// `int ||d_y f||^2 dt`.
    Dy,
    /// `int mu' ||f||^2_{H^{s,1}} dt`.
    MuH1,
    /// Value at the initial time.
    Init,
}

/// One tracked norm: kind, quantity and regularity `s + quarters / 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Probe {
    pub kind: Kind,
    pub q: Quantity,
    pub quarters: i32,
}

/// `s`, `s+1/4`, `s-1/2`, ...
pub fn offset_label(quarters: i32) -> String {
    if quarters == 0 {
        return "s".into();
    }
    let sign = if quarters > 0 { '+' } else { '-' };
    let a = quarters.abs();
    let body = if a % 4 == 0 {
        format!("{}", a / 4)
    } else if a % 2 == 0 {
        format!("{}/2", a / 2)
    } else {
        format!("{a}/4")
    };
    format!("s{sign}{body}")
}

impl Probe {
    pub fn label(&self) -> String {
        let k = match self.kind {
            Kind::Sup => "sup",
            Kind::Mu => "mu",
            Kind::Dy => "dy",
            Kind::MuH1 => "mu_h1",
            Kind::Init => "init",
        };
        format!("{k}:{}@{}", self.q.name(), offset_label(self.quarters))
    }
}

fn p(kind: Kind, q: Quantity, quarters: i32) -> Probe {
    Probe { kind, q, quarters }
}

/// Every norm needed by the energy functionals and the inequalities.
pub fn probes() -> Vec<Probe> {
    use Kind::*;
    use Quantity::*;
    let energy = [
        (UAux, 0),
        (Lambda, 2),
        (Varphi, 0),
        (U, 4),
        (Theta, 4),
        (DyU, 0),
        (DyTheta, 0),
        (DyyU, -4),
        (DyyTheta, -4),
    ];
    let mut out = Vec::new();
    for (q, o) in energy {
        out.push(p(Sup, q, o));
        out.push(p(Mu, q, o + 1));
        out.push(p(Dy, q, o));
    }
    for (q, o) in [(U, 4), (Theta, 4), (UAux, 0), (DyTheta, 0), (DyU, 0), (Theta, -4)] {
        out.push(p(Mu, q, o));
    }
    for (q, o) in [(U, 2), (Theta, 2), (UAux, -2), (UAux, -4), (UAux, -1)] {
        out.push(p(Dy, q, o));
    }
    out.push(p(MuH1, U, 0));
    for (q, o) in [
        (DxU, 2),
        (DxTheta, 0),
        (U, 6),
        (Theta, 4),
        (DyU, 0),
        (DyTheta, 0),
        (DyyU, -4),
        (DyyTheta, -4),
    ] {
        out.push(p(Init, q, o));
    }
    out
}

/// Instantaneous values of all probes, keyed by label.
pub type Measurements = BTreeMap<String, f64>;

/// Lifted norms of every probe at one snapshot.
pub fn measure(state: &SimState, aux: &AuxState, phase: &PhaseState, s: f64) -> Result<Measurements> {
    let r = phase.checked_radius()?;
    let w = Weighting {
        t: state.t,
        theta_e: state.theta_e,
    };
    let mut lifted: BTreeMap<Quantity, Field> = BTreeMap::new();
    let u = lift_with_radius(&state.u, r)?;
    let th = lift_with_radius(&state.theta, r)?;
    lifted.insert(Quantity::UAux, lift_with_radius(&aux.u_aux, r)?);
    lifted.insert(Quantity::Lambda, lift_with_radius(&aux.lambda, r)?);
    lifted.insert(Quantity::Varphi, lift_with_radius(&aux.varphi, r)?);
    lifted.insert(Quantity::DyU, u.dy());
    lifted.insert(Quantity::DyTheta, th.dy());
    lifted.insert(Quantity::DyyU, u.dyy());
    lifted.insert(Quantity::DyyTheta, th.dyy());
    lifted.insert(Quantity::DxU, u.dx());
    lifted.insert(Quantity::DxTheta, th.dx());
    lifted.insert(Quantity::U, u);
    lifted.insert(Quantity::Theta, th);
    let mut out = Measurements::new();
    for pr in probes() {
        let f = &lifted[&pr.q];
        let reg = s + pr.quarters as f64 / 4.0;
        let v = match pr.kind {
            Kind::Sup | Kind::Mu | Kind::Init => weighted_norm(f, reg, w),
            Kind::Dy => weighted_norm(&f.dy(), reg, w),
            Kind::MuH1 => weighted_norm(f, reg, w) + weighted_norm(&f.dy(), reg, w),
        };
        if !v.is_finite() {
            return Err(Error::NonFinite(pr.label()));
        }
        out.insert(pr.label(), v);
    }
    Ok(out)
}

/// `min(theta + theta_E) / theta_E`.
pub fn positivity_margin(state: &SimState) -> f64 {
    (state.theta.min() + state.theta_e) / state.theta_e
}

/// Running norms of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub s: f64,
    pub gamma: f64,
    pub theta_e: f64,
    pub times: Vec<f64>,
    /// Instantaneous `Sup` values at every recorded time.
    pub history: BTreeMap<String, Vec<f64>>,
    pub sup: BTreeMap<String, TimeAccumulator>,
    pub integrals: BTreeMap<String, TimeAccumulator>,
    pub initial: BTreeMap<String, f64>,
    pub positivity: Vec<f64>,
    /// Radius-ODE right side at every recorded time.
    pub mu_rates: Vec<MuRhs>,
    /// Values and `mu'` at the last record, integrated on the next one.
    pending: Option<(f64, Measurements)>,
}

impl EnergyLedger {
    pub fn new(s: f64, gamma: f64, theta_e: f64) -> Self {
        Self {
            s,
            gamma,
            theta_e,
            times: Vec::new(),
            history: BTreeMap::new(),
            sup: BTreeMap::new(),
            integrals: BTreeMap::new(),
            initial: BTreeMap::new(),
            positivity: Vec::new(),
            mu_rates: Vec::new(),
            pending: None,
        }
    }

    /// Adds the snapshot at time `t`. `rate` is the radius-ODE right side
    /// used for the step that starts at `t`.
    pub fn record(&mut self, t: f64, rate: &MuRhs, values: &Measurements, positivity: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Domain(format!("ledger times must increase: {t} after {last}")));
            }
        }
        if let Some(&last) = self.times.last() {
            let dt = t - last;
            let (rate, prev) = self.pending.take().expect("pending set after first record");
            for pr in probes() {
                let weight = match pr.kind {
                    Kind::Mu | Kind::MuH1 => rate,
                    Kind::Dy => 1.0,
                    _ => continue,
                };
                let label = pr.label();
                let v = *prev.get(&label).ok_or_else(|| Error::MissingSeries(label.clone()))?;
                let acc = self
                    .integrals
                    .entry(label)
                    .or_insert_with(|| TimeAccumulator::new(TimeExponent::Two));
                *acc = accumulate_time_norm(*acc, v, dt, weight)?;
            }
        } else {
            for pr in probes() {
                let label = pr.label();
                let v = *values.get(&label).ok_or_else(|| Error::MissingSeries(label.clone()))?;
                match pr.kind {
                    Kind::Init => {
                        self.initial.insert(label, v);
                    }
                    Kind::Mu | Kind::MuH1 | Kind::Dy => {
                        self.integrals.insert(label, TimeAccumulator::new(TimeExponent::Two));
                    }
                    Kind::Sup => {}
                }
            }
        }
        for pr in probes().into_iter().filter(|p| p.kind == Kind::Sup) {
            let label = pr.label();
            let v = *values.get(&label).ok_or_else(|| Error::MissingSeries(label.clone()))?;
            let acc = self
                .sup
                .entry(label.clone())
                .or_insert_with(|| TimeAccumulator::new(TimeExponent::Infinity));
            acc.value = acc.value.max(v);
            self.history.entry(label).or_default().push(v);
        }
        self.times.push(t);
        self.positivity.push(positivity);
        self.mu_rates.push(*rate);
        self.pending = Some((rate.value, values.clone()));
        Ok(())
    }

    pub fn t(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    fn get(&self, map: &BTreeMap<String, f64>, label: String) -> Result<f64> {
        map.get(&label).copied().ok_or(Error::MissingSeries(label))
    }

    /// Latest value of `||q_Phi||_{s + quarters/4}`.
    pub fn current(&self, q: Quantity, quarters: i32) -> Result<f64> {
        let label = p(Kind::Sup, q, quarters).label();
        self.history
            .get(&label)
            .and_then(|h| h.last().copied())
            .ok_or(Error::MissingSeries(label))
    }

    /// `||q_Phi||_{L^inf_t}`.
    pub fn sup_of(&self, q: Quantity, quarters: i32) -> Result<f64> {
        let label = p(Kind::Sup, q, quarters).label();
        self.sup.get(&label).map(|a| a.value).ok_or(Error::MissingSeries(label))
    }

    /// Squared time norm of the given kind.
    pub fn integral(&self, kind: Kind, q: Quantity, quarters: i32) -> Result<f64> {
        let label = p(kind, q, quarters).label();
        self.integrals.get(&label).map(|a| a.value).ok_or(Error::MissingSeries(label))
    }

    /// Initial lifted norm.
    pub fn init(&self, q: Quantity, quarters: i32) -> Result<f64> {
        let label = p(Kind::Init, q, quarters).label();
        self.get(&self.initial, label)
    }

    /// Flat `(t, series_name, value)` rows for the ledger file.
    pub fn rows(&self) -> Vec<(f64, String, f64)> {
        let mut out = Vec::new();
        for (i, &t) in self.times.iter().enumerate() {
            for (name, h) in &self.history {
                out.push((t, name.clone(), h[i]));
            }
            out.push((t, "positivity_margin".into(), self.positivity[i]));
            out.push((t, "mu_dot".into(), self.mu_rates[i].value));
            for (name, g) in MU_GROUPS.iter().zip(self.mu_rates[i].groups) {
                out.push((t, name.to_string(), g));
            }
        }
        out
    }
}

/// `||f_Phi||^2_{L^inf_t} + gamma ||f_Phi||^2_{L^2_{t,mu'}(s+1/4)} + theta_E/16 ||d_y f_Phi||^2_{L^2_t}`
/// at regularity `s + quarters/4`, where `field_name` is a [`Quantity`] name.
pub fn energy_functional(ledger: &EnergyLedger, field_name: &str, quarters: i32) -> Result<f64> {
    let q = quantity_by_name(field_name)?;
    let sup = ledger.sup_of(q, quarters)?;
    let mu = ledger.integral(Kind::Mu, q, quarters + 1)?;
    let dy = ledger.integral(Kind::Dy, q, quarters)?;
    Ok(sup * sup + ledger.gamma * mu + ledger.theta_e / 16.0 * dy)
}

fn quantity_by_name(name: &str) -> Result<Quantity> {
    use Quantity::*;
    [UAux, Lambda, Varphi, U, Theta, DyU, DyTheta, DyyU, DyyTheta, DxU, DxTheta]
        .into_iter()
        .find(|q| q.name() == name)
        .ok_or_else(|| Error::MissingSeries(format!("unknown field {name}")))
}

/// Constants of the bootstrap argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapParams {
    /// Velocity slope bound.
    pub m: f64,
    /// Temperature slope bound, twice `epsilon`.
    pub zeta: f64,
    pub epsilon: f64,
    pub s: f64,
    pub eta: f64,
    pub k_coupling: f64,
    pub gamma: f64,
    pub theta_e: f64,
}

impl BootstrapParams {
    /// Constants from the initial lifted norms: `M = 2 (|d_y u_0| + |d_y theta_0|)`,
    /// `zeta = 2 epsilon`, `eta = theta_E / 16`, and the temperature weight
    /// `k` from the absorption condition at `t = 0` with constant `c`.
    pub fn from_initial(ledger: &EnergyLedger, epsilon: f64, c: f64) -> Result<Self> {
        let te = ledger.theta_e;
        let m = 2.0 * (ledger.init(Quantity::DyU, 0)? + ledger.init(Quantity::DyTheta, 0)?);
        let zeta = 2.0 * epsilon;
        let num = 3.0 * te / 8.0 + 5.0 / te + c * m * m * 5.0 / te;
        let den = 5.0 * te / 16.0 - c * zeta * zeta * 5.0 / te;
        if !(den > 0.0) {
            return Err(Error::Config(format!(
                "temperature weight undefined: C zeta^2 too large (denominator {den})"
            )));
        }
        Ok(Self {
            m,
            zeta,
            epsilon,
            s: ledger.s,
            eta: te / 16.0,
            k_coupling: num / den,
            gamma: ledger.gamma,
            theta_e: te,
        })
    }
}

/// Outcome of the bootstrap bounds along a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub velocity_max: f64,
    pub temperature_max: f64,
    pub velocity_ok: bool,
    pub temperature_ok: bool,
    /// Max below `sqrt(6)/4 M`.
    pub velocity_improved: bool,
    /// Max below `sqrt(3)/2 zeta`.
    pub temperature_improved: bool,
    /// First time and bound that failed.
    pub first_violation: Option<(f64, String)>,
    /// `min(theta + theta_E) / theta_E` over the run.
    pub positivity_margin: f64,
    pub positivity_ok: bool,
}

impl BootstrapReport {
    pub fn all_pass(&self) -> bool {
        self.velocity_ok && self.temperature_ok && self.positivity_ok
    }
}

pub fn bootstrap_check(ledger: &EnergyLedger, params: &BootstrapParams) -> BootstrapReport {
    let series = |q: Quantity| {
        ledger
            .history
            .get(&p(Kind::Sup, q, 0).label())
            .cloned()
            .unwrap_or_default()
    };
    let vel = series(Quantity::DyU);
    let tem = series(Quantity::DyTheta);
    let vmax = vel.iter().cloned().fold(0.0, f64::max);
    let tmax = tem.iter().cloned().fold(0.0, f64::max);
    let margin = ledger.positivity.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut first = None;
    for (i, &t) in ledger.times.iter().enumerate() {
        let hit = if vel.get(i).is_some_and(|&v| v > params.m) {
            Some("velocity slope")
        } else if tem.get(i).is_some_and(|&v| v > params.zeta) {
            Some("temperature slope")
        } else if ledger.positivity[i] < 0.5 {
            Some("positivity")
        } else {
            None
        };
        if let Some(h) = hit {
            first = Some((t, h.to_string()));
            break;
        }
    }
    BootstrapReport {
        velocity_max: vmax,
        temperature_max: tmax,
        velocity_ok: vmax <= params.m,
        temperature_ok: tmax <= params.zeta,
        velocity_improved: vmax <= 6f64.sqrt() / 4.0 * params.m,
        temperature_improved: tmax <= 3f64.sqrt() / 2.0 * params.zeta,
        first_violation: first,
        positivity_margin: margin,
        positivity_ok: margin >= 0.5,
    }
}

/// Monitored inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Inequality {
    UAux,
    Lambda,
    Varphi,
    Velocity,
    Temperature,
    SlopeVelocity,
    SlopeTemperature,
    Curvature,
    EnergyMain,
    EnergySlope,
    EnergyCurvature,
}

impl Inequality {
    pub fn all() -> [Inequality; 11] {
        use Inequality::*;
        [
            UAux,
            Lambda,
            Varphi,
            Velocity,
            Temperature,
            SlopeVelocity,
            SlopeTemperature,
            Curvature,
            EnergyMain,
            EnergySlope,
            EnergyCurvature,
        ]
    }
    pub fn name(&self) -> &'static str {
        use Inequality::*;
        match self {
            UAux => "u_aux",
            Lambda => "lambda",
            Varphi => "varphi",
            Velocity => "velocity",
            Temperature => "temperature",
            SlopeVelocity => "slope_velocity",
            SlopeTemperature => "slope_temperature",
            Curvature => "curvature",
            EnergyMain => "energy_main",
            EnergySlope => "energy_slope",
            EnergyCurvature => "energy_curvature",
        }
    }
    pub fn from_name(name: &str) -> Option<Self> {
        Self::all().into_iter().find(|i| i.name() == name)
    }
    /// Whether the inequality carries an unknown constant.
    pub fn has_constant(&self) -> bool {
        !matches!(
            self,
            Inequality::EnergyMain | Inequality::EnergySlope | Inequality::EnergyCurvature
        )
    }
}

/// One time of a slack series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Smallest constant making the inequality hold; absent for explicit bounds.
    pub minimal_c: Option<f64>,
    pub pass: bool,
}

/// Both sides of a constant-bearing inequality as functions of `C`.
fn sides(ledger: &EnergyLedger, which: Inequality, bp: &BootstrapParams, c: f64) -> Result<(f64, f64)> {
    use Kind::{Dy, Mu, MuH1};
    use Quantity::*;
    let l = ledger;
    let t1 = 1.0 + l.t();
    let (g, te, eta, zeta) = (l.gamma, l.theta_e, bp.eta, bp.zeta);
    let damp = te - c * zeta * t1.powf(0.25) - 2.0 * eta;
    let soft = 2.0 * eta + c * zeta * t1.powf(0.25);
    let cur2 = |q, o| l.current(q, o).map(|v| v * v);
    let init2 = |q, o| l.init(q, o).map(|v| v * v);
    // left side: current value, radius decay, diffusion
    let left = |q: Quantity, o: i32| -> Result<f64> {
        Ok(cur2(q, o)? + 2.0 * (g - c) * l.integral(Mu, q, o + 1)? + damp * l.integral(Dy, q, o)?)
    };
    // parenthesized feedback through the velocity slope bound
    let feedback = || -> Result<f64> {
        Ok(2.0 * eta * l.integral(Dy, U, 4)?
            + c * l.integral(Mu, Lambda, 3)?
            + 5.0 / te * l.integral(Dy, Theta, 4)?)
    };
    Ok(match which {
        Inequality::UAux => (
            left(UAux, 0)?,
            2.0 * eta * l.integral(Dy, U, 4)?
                + c * l.integral(Mu, Lambda, 3)?
                + 5.0 / te * l.integral(Dy, Theta, 4)?,
        ),
        Inequality::Lambda => (
            left(Lambda, 2)?,
            init2(DxU, 2)?
                + c * l.integral(Mu, U, 5)?
                + soft * l.integral(Dy, U, 2)?
                + c * l.integral(Mu, Theta, 5)?
                + 2.0 * eta * l.integral(Dy, Theta, 2)?
                + c * l.integral(Mu, UAux, 1)?
                + 2.0 * eta * l.integral(Dy, UAux, -2)?,
        ),
        Inequality::Varphi => (
            left(Varphi, 0)?,
            init2(DxTheta, 0)?
                + c * l.integral(Mu, U, 4)?
                + 2.0 * eta * l.integral(Dy, U, 4)?
                + c * l.integral(Mu, Theta, 4)?
                + soft * l.integral(Dy, Theta, 4)?
                + c * l.integral(Mu, UAux, 0)?
                + 2.0 * eta * l.integral(Dy, UAux, -4)?,
        ),
        Inequality::Velocity => (
            left(U, 4)?,
            init2(U, 6)?
                + c * l.integral(Mu, U, 5)?
                + soft * l.integral(Dy, U, 4)?
                + c * l.integral(Mu, Theta, 4)?
                + 4.0 * eta * l.integral(Dy, Theta, 4)?
                + c * l.integral(Mu, UAux, 1)?
                + 2.0 * eta * l.integral(Dy, UAux, -1)?
                + c * t1.sqrt() * bp.m * bp.m * feedback()?,
        ),
        Inequality::Temperature => (
            left(Theta, 4)?,
            init2(Theta, 4)?
                + c * l.integral(Mu, U, 5)?
                + 4.0 * eta * l.integral(Dy, U, 4)?
                + c * l.integral(Mu, Theta, 4)?
                + soft * l.integral(Dy, Theta, 4)?
                + c * l.integral(Mu, UAux, 0)?
                + 2.0 * eta * l.integral(Dy, UAux, -4)?
                + c * t1.sqrt() * zeta * zeta * feedback()?,
        ),
        Inequality::SlopeVelocity => (
            left(DyU, 0)?,
            init2(DyU, 0)?
                + c * (l.integral(Mu, U, 4)? + l.integral(Mu, DyTheta, 0)?)
                + 2.0 * eta * l.integral(Dy, DyTheta, 0)?,
        ),
        Inequality::SlopeTemperature => (
            left(DyTheta, 0)?,
            init2(DyTheta, 0)?
                + c * (l.integral(Mu, U, 4)? + l.integral(Mu, DyU, 0)? + l.integral(Mu, Theta, 4)?)
                + 2.0 * eta * l.integral(Dy, DyU, 0)?,
        ),
        Inequality::Curvature => (
            left(DyyU, -4)? + left(DyyTheta, -4)?,
            init2(DyyU, -4)?
                + init2(DyyTheta, -4)?
                + c * (l.integral(MuH1, U, 0)? + l.integral(Mu, Theta, -4)? + l.integral(Mu, DyTheta, 0)?),
        ),
        _ => unreachable!("explicit bounds handled separately"),
    })
}

/// Smallest `C >= 0` with `rhs(C) >= lhs(C)`; the gap is nondecreasing in `C`.
pub fn minimal_constant(gap: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if gap(0.0)? >= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while gap(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e15 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Evaluates one inequality at the ledger's latest time. Constant-bearing
/// inequalities pass when they hold with `C = c_pass`.
pub fn slack_now(ledger: &EnergyLedger, which: Inequality, bp: &BootstrapParams, c_pass: f64) -> Result<SlackRow> {
    let t = ledger.t();
    if which.has_constant() {
        let c = minimal_constant(|c| sides(ledger, which, bp, c).map(|(l, r)| r - l))?;
        let (lhs, rhs) = sides(ledger, which, bp, c_pass)?;
        return Ok(SlackRow {
            t,
            lhs,
            rhs,
            minimal_c: Some(c),
            pass: c <= c_pass,
        });
    }
    let e = |n: &str, o| energy_functional(ledger, n, o);
    let i2 = |q, o| ledger.init(q, o).map(|v| v * v);
    let (lhs, rhs) = match which {
        Inequality::EnergyMain => {
            let k = bp.k_coupling;
            (
                e("U", 0)? + e("lambda", 2)? + e("u", 4)? + k * e("theta", 4)?,
                2.0 * i2(Quantity::U, 6)? + k * i2(Quantity::Theta, 4)?,
            )
        }
        Inequality::EnergySlope => (
            e("dy_u", 0)? + e("dy_theta", 0)?,
            1.5 * (i2(Quantity::DyU, 0)? + i2(Quantity::DyTheta, 0)?),
        ),
        Inequality::EnergyCurvature => (
            e("dyy_u", -4)? + e("dyy_theta", -4)?,
            1.5 * (i2(Quantity::DyyU, -4)? + i2(Quantity::DyyTheta, -4)?),
        ),
        _ => unreachable!(),
    };
    Ok(SlackRow {
        t,
        lhs,
        rhs,
        minimal_c: None,
        pass: lhs <= rhs,
    })
}

/// Slack series of every inequality, appended row by row.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub series: BTreeMap<String, Vec<SlackRow>>,
}

impl SlackReport {
    pub fn push_all(&mut self, ledger: &EnergyLedger, bp: &BootstrapParams, c_pass: f64) -> Result<()> {
        for which in Inequality::all() {
            let row = slack_now(ledger, which, bp, c_pass)?;
            self.series.entry(which.name().into()).or_default().push(row);
        }
        Ok(())
    }

    /// Series of one inequality.
    pub fn get(&self, which: Inequality) -> Result<&[SlackRow]> {
        self.series
            .get(which.name())
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::MissingSeries(which.name().into()))
    }

    /// Largest minimal constant over time and over the constant-bearing inequalities.
    pub fn max_constant(&self) -> f64 {
        Inequality::all()
            .into_iter()
            .filter(|w| w.has_constant())
            .filter_map(|w| self.series.get(w.name()))
            .flatten()
            .filter_map(|r| r.minimal_c)
            .fold(0.0, f64::max)
    }

    pub fn all_pass(&self) -> bool {
        self.series.values().flatten().all(|r| r.pass)
    }
}

/// Whether a minimal-constant series is stable across resolutions: the
/// largest value over runs is within a factor `2` of the smallest.
/// Series that vanish on every run count as stable.
pub fn constant_drift(per_run_max: &[f64]) -> f64 {
    let hi = per_run_max.iter().cloned().fold(0.0, f64::max);
    let lo = per_run_max.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        1.0
    } else if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Least-squares slope of `-log |f_hat(xi, y*)|` against `<xi>^{1/2}` over
/// modes above the round-off floor, at the row `y*` of largest energy.
pub fn fourier_decay_exponent(f: &Field) -> Option<f64> {
    let g = f.grid();
    let spec = f.spec();
    let energy = |j: usize| spec.row(j).iter().map(|c| c.norm_sqr()).sum::<f64>();
    let row = (0..g.ny()).max_by(|&a, &b| energy(a).total_cmp(&energy(b)))?;
    let coeffs = spec.row(row);
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return None;
    }
    let pts: Vec<(f64, f64)> = (1..g.nx() / 2)
        .filter(|&m| coeffs[m].norm() > 1e-11 * peak)
        .map(|m| (japanese(g.xi(m)).sqrt(), -coeffs[m].norm().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

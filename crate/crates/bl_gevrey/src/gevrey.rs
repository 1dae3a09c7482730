//! Gaussian-weighted anisotropic Sobolev norms, the Gevrey phase and lift,
//! and time-integrated norm accumulators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;

/// Largest exponent allowed in the Gevrey multiplier.
pub const MAX_LIFT_EXPONENT: f64 = 700.0;

/// Boundary-row weighted energy above which a weighted norm is flagged.
pub const DECAY_THRESHOLD: f64 = 1e-12;

/// `<xi> = (1 + xi^2)^{1/2}`.
pub fn japanese(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// Weight `y^2 / (16 theta_E (1 + t))`.
pub fn weight(t: f64, y: f64, theta_e: f64) -> Result<f64> {
    if !(theta_e > 0.0) || t < 0.0 || y < 0.0 {
        return Err(Error::Domain(format!(
            "weight needs theta_E > 0, t >= 0, y >= 0; got ({theta_e}, {t}, {y})"
        )));
    }
    Ok(y * y / (16.0 * theta_e * (1.0 + t)))
}

/// Exact time derivative of the weight.
pub fn weight_dt(t: f64, y: f64, theta_e: f64) -> f64 {
    -y * y / (16.0 * theta_e * (1.0 + t) * (1.0 + t))
}

/// Exact y-derivative of the weight.
pub fn weight_dy(t: f64, y: f64, theta_e: f64) -> f64 {
    y / (8.0 * theta_e * (1.0 + t))
}

/// Gevrey phase data: radius `delta - gamma mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub delta: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl PhaseState {
    pub fn new(delta: f64, gamma: f64) -> Self {
        Self {
            delta,
            gamma,
            mu: 0.0,
        }
    }
    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }
    pub fn radius(&self) -> f64 {
        self.delta - self.gamma * self.mu
    }
    /// Checked radius; negative means the run is past `T*`.
    pub fn checked_radius(&self) -> Result<f64> {
        let r = self.radius();
        if r < 0.0 {
            Err(Error::PastTStar { radius: r })
        } else {
            Ok(r)
        }
    }
}

/// `Phi(xi) = (delta - gamma mu) <xi>^{1/2}`.
pub fn phase_symbol(xi: f64, phase: &PhaseState) -> Result<f64> {
    Ok(phase.checked_radius()? * japanese(xi).sqrt())
}

/// Multiplies the spectrum by `exp(radius <xi>^{1/2})`.
pub fn lift_with_radius(f: &Field, radius: f64) -> Result<Field> {
    let top = radius * japanese(f.grid().xi_max()).sqrt();
    if top > MAX_LIFT_EXPONENT {
        return Err(Error::LiftOverflow { exponent: top });
    }
    Ok(f.multiplier(|xi| (radius * japanese(xi).sqrt()).exp()))
}

/// `f_Phi`.
pub fn gevrey_lift(f: &Field, phase: &PhaseState) -> Result<Field> {
    lift_with_radius(f, phase.checked_radius()?)
}

/// Inverse of [`gevrey_lift`].
pub fn gevrey_unlift(f: &Field, phase: &PhaseState) -> Result<Field> {
    lift_with_radius(f, -phase.checked_radius()?)
}

/// Which norm to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub k_order: u8,
    pub weighted: bool,
}

impl NormSpec {
    pub fn weighted(s: f64, k_order: u8) -> Self {
        Self {
            s,
            k_order,
            weighted: true,
        }
    }
}

/// A norm value with the far-field decay flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub decay_warning: bool,
}

/// Quadrature context for norms at a fixed time.
#[derive(Clone, Copy, Debug)]
pub struct Weighting {
    pub t: f64,
    pub theta_e: f64,
}

/// Squared `H^s_x` norm of every y-row.
pub fn row_energy(f: &Field, s: f64) -> Vec<f64> {
    let g = f.grid();
    let w: Vec<f64> = g
        .wavenumbers()
        .iter()
        .map(|&xi| (1.0 + xi * xi).powf(s))
        .collect();
    f.spec()
        .rows()
        .into_iter()
        .map(|row| g.lx() * row.iter().zip(&w).map(|(c, wi)| c.norm_sqr() * wi).sum::<f64>())
        .collect()
}

fn weights_y(f: &Field, weighted: Option<Weighting>) -> Result<Vec<f64>> {
    let g = f.grid();
    (0..g.ny())
        .map(|j| {
            let base = g.y_weight(j);
            match weighted {
                Some(w) => Ok(base * (2.0 * weight(w.t, g.y(j), w.theta_e)?).exp()),
                None => Ok(base),
            }
        })
        .collect()
}

/// `H^{s,k}` or `H^{s,k}_Psi` norm: Parseval in x, trapezoid in y.
pub fn sobolev_norm(f: &Field, spec: NormSpec, w: Weighting) -> Result<NormValue> {
    if spec.k_order > 2 {
        return Err(Error::Domain(format!("k_order {} > 2", spec.k_order)));
    }
    let ctx = spec.weighted.then_some(w);
    let wy = weights_y(f, ctx)?;
    let mut total = 0.0;
    let mut decay_warning = false;
    for l in 0..=spec.k_order as usize {
        let d = f.dy_n(l);
        let e = row_energy(&d, spec.s);
        let sq: f64 = e.iter().zip(&wy).map(|(a, b)| a * b).sum();
        total += sq.sqrt();
        if spec.weighted && l == 0 {
            let last = e.len() - 1;
            let edge = e[last] * (2.0 * weight(w.t, f.grid().ymax(), w.theta_e)?).exp();
            decay_warning = edge > DECAY_THRESHOLD * sq.max(1.0);
        }
    }
    Ok(NormValue {
        value: total,
        decay_warning,
    })
}

/// `||f||_{H^{s,0}_Psi}` without derivative terms.
pub fn weighted_norm(f: &Field, s: f64, w: Weighting) -> f64 {
    let wy = weights_y(f, Some(w)).expect("weighting validated by caller");
    row_energy(f, s)
        .iter()
        .zip(&wy)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .sqrt()
}

/// `<f, g>_{H^{s,0}_Psi}` (real part; fields are real).
pub fn weighted_inner(f: &Field, g: &Field, s: f64, w: Weighting) -> f64 {
    let grid = f.grid();
    let wy = weights_y(f, Some(w)).expect("weighting validated by caller");
    let mult: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|&xi| (1.0 + xi * xi).powf(s))
        .collect();
    let mut total = 0.0;
    for (j, wj) in wy.iter().enumerate() {
        let a = f.spec().row(j);
        let b = g.spec().row(j);
        let mut row = 0.0;
        for i in 0..grid.nx() {
            row += (a[i] * b[i].conj()).re * mult[i];
        }
        total += wj * row;
    }
    total * grid.lx()
}

/// `sup_y ||f(., y)||_{H^s_x}`.
pub fn sup_y_norm(f: &Field, s: f64) -> f64 {
    row_energy(f, s).into_iter().fold(0.0, f64::max).sqrt()
}

/// Ratio `int |f dPsi/dy|^2 e^{2 Psi} / int |df/dy|^2 e^{2 Psi}` appearing in
/// the weighted Hardy-type inequality.
pub fn hardy_ratio(f: &Field, w: Weighting) -> f64 {
    let g = f.grid();
    let wy = weights_y(f, Some(w)).expect("weighting validated by caller");
    let e0 = row_energy(f, 0.0);
    let e1 = row_energy(&f.dy(), 0.0);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..g.ny() {
        let p = weight_dy(w.t, g.y(j), w.theta_e);
        num += wy[j] * e0[j] * p * p;
        den += wy[j] * e1[j];
    }
    num / den
}

/// Both sides of `sup_y ||f||_{H^s_x} <= (2 pi theta_E)^{1/4} (1+t)^{1/4} ||d_y f||_{H^{s,0}_Psi}`.
pub fn sup_bound_sides(f: &Field, s: f64, w: Weighting) -> (f64, f64) {
    let lhs = sup_y_norm(f, s);
    let c = (2.0 * std::f64::consts::PI * w.theta_e).powf(0.25) * (1.0 + w.t).powf(0.25);
    (lhs, c * weighted_norm(&f.dy(), s, w))
}

/// Time exponent of an accumulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeExponent {
    Two,
    Infinity,
}

/// Running `L^p_t` or `L^p_{t,f}` norm (stored squared for `p = 2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAccumulator {
    pub p: TimeExponent,
    pub value: f64,
}

impl TimeAccumulator {
    pub fn new(p: TimeExponent) -> Self {
        Self { p, value: 0.0 }
    }
}

/// Adds one left-endpoint step to an accumulator.
pub fn accumulate_time_norm(
    acc: TimeAccumulator,
    norm_value: f64,
    dt: f64,
    weight_value: f64,
) -> Result<TimeAccumulator> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if weight_value < 0.0 {
        return Err(Error::Domain(format!(
            "time weight must be nonnegative, got {weight_value}"
        )));
    }
    let value = match acc.p {
        TimeExponent::Two => acc.value + weight_value * norm_value * norm_value * dt,
        TimeExponent::Infinity => acc.value.max(norm_value),
    };
    Ok(TimeAccumulator { value, ..acc })
}

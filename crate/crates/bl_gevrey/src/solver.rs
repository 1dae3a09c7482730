//! IMEX time stepping for the regularized boundary-layer system
//!
//! ```text
//! u_t + u u_x + v u_y = nu u_xx + (theta + theta_E) u_yy
//! theta_t + u theta_x + v theta_y = nu theta_xx + (theta + theta_E) theta_yy + (theta + theta_E) u_y^2
//! u_x + v_y = theta_yy + u_y^2
//! ```
//!
//! with `u = v = theta_y = 0` on the wall and `u = theta = 0` at the top of
//! the truncated domain. Transport and the heating source are explicit, the
//! tangential viscosity is integrated exactly in Fourier space and the
//! normal diffusion is implicit with its coefficient frozen at the start of
//! the step.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::gevrey::{japanese, lift_with_radius, weighted_norm, Weighting};
use crate::grid::Grid;

/// Prognostic and diagnostic fields at one instant.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub theta: Field,
    pub v: Field,
    pub mu: f64,
    pub nu: f64,
    pub theta_e: f64,
}

impl SimState {
    /// State built from prognostic fields; `v` is reconstructed.
    pub fn new(u: Field, theta: Field, nu: f64, theta_e: f64) -> Result<Self> {
        u.grid().ensure_same(theta.grid())?;
        let mut s = Self {
            t: 0.0,
            v: Field::zeros(u.grid()),
            u,
            theta,
            mu: 0.0,
            nu,
            theta_e,
        };
        apply_boundary(&mut s);
        s.v = reconstruct_v(&s.u, &s.theta);
        Ok(s)
    }

    pub fn zero(grid: &Grid, nu: f64, theta_e: f64) -> Self {
        Self {
            t: 0.0,
            u: Field::zeros(grid),
            theta: Field::zeros(grid),
            v: Field::zeros(grid),
            mu: 0.0,
            nu,
            theta_e,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }
}

/// Solver switches and limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub cfl: f64,
    pub dt_max: f64,
    /// Drops transport and sources and freezes the diffusion coefficient at `theta_E`.
    pub linear: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            dt_max: 1e-3,
            linear: false,
        }
    }
}

/// Additive forcing `(f_u, f_theta)` evaluated at the start of a step.
pub type Forcing<'a> = &'a dyn Fn(f64) -> (Field, Field);

/// Boundary treatment of one end of a column solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndCondition {
    /// Homogeneous Dirichlet.
    Zero,
    /// Homogeneous Neumann with the second-order one-sided stencil.
    Flat,
}

/// Solves `(I - diff * D2) f = rhs` column by column, where `diff` holds
/// `dt * a(y, x)`. End rows are eliminated with the given conditions.
pub fn implicit_columns(
    rhs: &Array2<f64>,
    diff: &Array2<f64>,
    dy: f64,
    wall: EndCondition,
    top: EndCondition,
) -> Array2<f64> {
    let (ny, nx) = rhs.dim();
    let n = ny - 2;
    let mut out = Array2::zeros((ny, nx));
    let mut lo = vec![0.0; n];
    let mut di = vec![0.0; n];
    let mut up = vec![0.0; n];
    let mut b = vec![0.0; n];
    let h2 = dy * dy;
    for i in 0..nx {
        for k in 0..n {
            let j = k + 1;
            let r = diff[[j, i]] / h2;
            lo[k] = -r;
            di[k] = 1.0 + 2.0 * r;
            up[k] = -r;
            b[k] = rhs[[j, i]];
        }
        // f_0 = (4 f_1 - f_2) / 3 folded into the first interior row
        if wall == EndCondition::Flat {
            let r = -lo[0];
            di[0] = 1.0 + 2.0 * r / 3.0;
            up[0] = -2.0 * r / 3.0;
        }
        if top == EndCondition::Flat {
            let r = -up[n - 1];
            di[n - 1] = 1.0 + 2.0 * r / 3.0;
            lo[n - 1] = -2.0 * r / 3.0;
        }
        thomas(&lo, &mut di, &up, &mut b);
        for k in 0..n {
            out[[k + 1, i]] = b[k];
        }
        out[[0, i]] = match wall {
            EndCondition::Zero => 0.0,
            EndCondition::Flat => (4.0 * b[0] - b[1]) / 3.0,
        };
        out[[ny - 1, i]] = match top {
            EndCondition::Zero => 0.0,
            EndCondition::Flat => (4.0 * b[n - 1] - b[n - 2]) / 3.0,
        };
    }
    out
}

/// In-place tridiagonal solve; `b` receives the solution.
fn thomas(lo: &[f64], di: &mut [f64], up: &[f64], b: &mut [f64]) {
    let n = di.len();
    for k in 1..n {
        let m = lo[k] / di[k - 1];
        di[k] -= m * up[k - 1];
        b[k] -= m * b[k - 1];
    }
    b[n - 1] /= di[n - 1];
    for k in (0..n - 1).rev() {
        b[k] = (b[k] - up[k] * b[k + 1]) / di[k];
    }
}

/// Normal velocity from the divergence constraint, vanishing on the wall.
pub fn reconstruct_v(u: &Field, theta: &Field) -> Field {
    let uy = u.dy();
    let source = uy.mul(&uy).sub(&u.dx());
    theta.dy().minus_wall_row().add(&source.cumulative_y())
}

/// `u_x + v_y - theta_yy - u_y^2`.
pub fn divergence_residual(u: &Field, theta: &Field, v: &Field) -> Field {
    let uy = u.dy();
    u.dx().add(&v.dy()).sub(&theta.dyy()).sub(&uy.mul(&uy))
}

/// Root-mean-square over the interior rows `[skip, ny - skip)`.
pub fn interior_rms(f: &Field, skip: usize) -> f64 {
    let g = f.grid();
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in skip..g.ny() - skip {
        for v in f.phys().row(j) {
            sum += v * v;
            count += 1;
        }
    }
    (sum / count as f64).sqrt()
}

/// Enforces the wall and far-field conditions.
pub fn apply_boundary(state: &mut SimState) {
    let top = state.grid().ny() - 1;
    state.u.set_row_combination(0, &[]);
    state.u.set_row_combination(top, &[]);
    state.v.set_row_combination(0, &[]);
    state.theta.set_row_combination(0, &[(1, 4.0 / 3.0), (2, -1.0 / 3.0)]);
    state.theta.set_row_combination(top, &[]);
}

/// Largest stable explicit step.
pub fn cfl_dt(state: &SimState, params: &SolverParams) -> f64 {
    let g = state.grid();
    let mut best = f64::INFINITY;
    let umax = state.u.max_abs();
    let vmax = state.v.max_abs();
    let tmax = state.theta.max_abs();
    if umax > 0.0 {
        best = best.min(g.dx() / umax);
    }
    if vmax > 0.0 {
        best = best.min(g.dy() / vmax);
    }
    // the auxiliary transport keeps T_theta d_y^2 explicit
    if tmax > 0.0 {
        best = best.min(g.dy() * g.dy() / tmax);
    }
    (params.cfl * best).min(params.dt_max)
}

/// Aborts on non-finite values or loss of the diffusion floor.
pub fn check_state(state: &SimState) -> Result<()> {
    for (name, f) in [("u", &state.u), ("theta", &state.theta), ("v", &state.v)] {
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("{name} at t={}", state.t)));
        }
    }
    let min_total = state.theta.min() + state.theta_e;
    let floor = 0.5 * state.theta_e;
    if min_total < floor {
        return Err(Error::Positivity {
            t: state.t,
            min_total,
            floor,
        });
    }
    Ok(())
}

/// One IMEX step.
pub fn step(
    state: &SimState,
    dt: f64,
    params: &SolverParams,
    forcing: Option<Forcing>,
) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let g = state.grid().clone();
    let (u, th, v) = (&state.u, &state.theta, &state.v);
    let (mut nu_rhs, mut th_rhs) = if params.linear {
        (Field::zeros(&g), Field::zeros(&g))
    } else {
        let uy = u.dy();
        let total = th.add(&Field::constant(&g, state.theta_e));
        let adv_u = u.mul(&u.dx()).add(&v.mul(&uy));
        let adv_t = u.mul(&th.dx()).add(&v.mul(&th.dy()));
        let heat = total.mul(&uy.mul(&uy));
        (adv_u.scale(-1.0), heat.sub(&adv_t))
    };
    if let Some(f) = forcing {
        let (fu, ft) = f(state.t);
        nu_rhs = nu_rhs.add(&fu);
        th_rhs = th_rhs.add(&ft);
    }
    let mut u_star = u.lin(1.0, &nu_rhs, dt);
    let mut t_star = th.lin(1.0, &th_rhs, dt);
    if state.nu > 0.0 {
        let decay = |xi: f64| (-state.nu * xi * xi * dt).exp();
        u_star = u_star.multiplier(decay);
        t_star = t_star.multiplier(decay);
    }
    let diff = if params.linear {
        Array2::from_elem((g.ny(), g.nx()), dt * state.theta_e)
    } else {
        th.phys().mapv(|x| dt * (x + state.theta_e))
    };
    let u_new = implicit_columns(u_star.phys(), &diff, g.dy(), EndCondition::Zero, EndCondition::Zero);
    let t_new = implicit_columns(t_star.phys(), &diff, g.dy(), EndCondition::Flat, EndCondition::Zero);
    let mut next = SimState {
        t: state.t + dt,
        u: Field::from_phys(&g, u_new)?,
        theta: Field::from_phys(&g, t_new)?,
        v: Field::zeros(&g),
        mu: state.mu,
        nu: state.nu,
        theta_e: state.theta_e,
    };
    apply_boundary(&mut next);
    next.v = reconstruct_v(&next.u, &next.theta);
    check_state(&next)?;
    Ok(next)
}

/// Initial data description.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    /// Velocity amplitude; zero gives the zero state.
    pub amplitude: f64,
    /// Exponential decay rate of the x-spectrum in `<xi>^{1/2}`.
    pub decay: f64,
    /// Target lifted size of `d_y theta_0`.
    pub epsilon: f64,
    /// Gevrey radius used to measure `epsilon`.
    pub lift_delta: f64,
    /// Regularity index of the smallness norm.
    pub s: f64,
    /// Random Fourier phases from this seed; `None` gives `u_0` odd and
    /// `theta_0` even in x, a parity the equations preserve.
    pub phase_seed: Option<u64>,
}

/// Velocity profile: vanishes on the wall, Gaussian tail.
pub fn profile_u(y: f64) -> f64 {
    y * (-0.5 * y * y).exp()
}

/// Temperature profile: flat at the wall, Gaussian tail.
pub fn profile_theta(y: f64) -> f64 {
    (-0.5 * y * y).exp()
}

/// Gevrey-decaying x-spectrum times a y-profile. Without a seed the series
/// is a sine series (`odd`) or a cosine series.
fn spectral_shape(
    grid: &Grid,
    decay: f64,
    seed: Option<u64>,
    odd: bool,
    profile: fn(f64) -> f64,
) -> Result<Field> {
    let (ny, nx) = (grid.ny(), grid.nx());
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut spec = Array2::<Complex64>::zeros((ny, nx));
    for m in 0..nx / 2 {
        let xi = grid.xi(m);
        let amp = (-decay * (japanese(xi).sqrt() - 1.0)).exp();
        let phase = match (&mut rng, m) {
            (_, 0) if odd => Complex64::new(0.0, 0.0),
            (_, 0) => Complex64::new(1.0, 0.0),
            (Some(r), _) => Complex64::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU)),
            (None, _) if odd => Complex64::new(0.0, -1.0),
            (None, _) => Complex64::new(1.0, 0.0),
        };
        for j in 0..ny {
            let c = phase * (amp * profile(grid.y(j)));
            spec[[j, m]] = c;
            if m > 0 {
                spec[[j, nx - m]] = c.conj();
            }
        }
    }
    Field::from_spec(grid, spec)
}

/// Builds `(u_0, theta_0)` with Gevrey-decaying x-spectra; `theta_0` is
/// scaled so that its lifted wall-normal derivative has size `epsilon`.
pub fn make_initial(spec: &InitSpec, grid: &Grid, theta_e: f64) -> Result<(Field, Field)> {
    if !(spec.epsilon >= 0.0 && spec.epsilon < theta_e) {
        return Err(Error::Config(format!(
            "epsilon must lie in [0, theta_E), got {}",
            spec.epsilon
        )));
    }
    if !(spec.decay >= 0.0) || !spec.amplitude.is_finite() {
        return Err(Error::Config("decay must be >= 0 and amplitude finite".into()));
    }
    if spec.amplitude == 0.0 {
        return Ok((Field::zeros(grid), Field::zeros(grid)));
    }
    let u0 = spectral_shape(grid, spec.decay, spec.phase_seed, true, profile_u)?.scale(spec.amplitude);
    let shape = spectral_shape(grid, spec.decay, spec.phase_seed.map(|s| s ^ 0x9e37), false, profile_theta)?;
    let w = Weighting { t: 0.0, theta_e };
    let size = weighted_norm(&lift_with_radius(&shape.dy(), spec.lift_delta)?, spec.s, w);
    if !(size.is_finite() && size > 0.0) {
        return Err(Error::Config(format!(
            "cannot normalize theta_0: lifted size is {size}"
        )));
    }
    Ok((u0, shape.scale(spec.epsilon / size)))
}

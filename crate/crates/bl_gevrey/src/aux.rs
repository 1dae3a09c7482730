//! Auxiliary fields built to cancel the derivative loss.
//!
//! `W` solves the paralinearized transport-diffusion problem
//! `L W = -d_x v` with `L = d_t + T_u d_x + T_v d_y - (theta_E + T_theta) d_y^2`,
//! and
//!
//! ```text
//! U      = d_y W
//! lambda = d_x u     - T_{d_y u} W
//! varphi = d_x theta - T_{d_y theta} W
//! ```
//!
//! Each of `U`, `lambda`, `varphi` obeys a transport-diffusion equation
//! whose right side is a sum of paraproducts, remainders and commutators.
//! The term lists below enumerate those right sides with the transport
//! terms first, so that
//! `d_t f - theta_E d_y^2 f = sum_i term_i`
//! for each auxiliary field `f`. The same lists drive the residual checks
//! and the energy-identity decompositions.
//!
//! The normal derivative of `theta` enters with a plus sign in the last
//! term of the `U` equation (`+T_{d_y theta} d_y U`), and the terms
//! `T_{d_x d_y^2 u} theta` and `R(d_x d_y^2 u, theta)` (and their `theta`
//! analogues) enter with plus signs; these follow from differentiating
//! `(theta + theta_E) d_y^2` with the Bony split of `theta d_x d_y^2 u`.

use serde::{Deserialize, Serialize};

use crate::dyadic::{paraproduct_blocks, remainder_blocks, PaddedBlocks};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::gevrey::{lift_with_radius, weighted_inner, weighted_norm, PhaseState, Weighting};
use crate::grid::Grid;
use crate::solver::{implicit_columns, EndCondition, SimState};

/// `W`, `U = d_y W`, `lambda` and `varphi`.
#[derive(Clone, Debug)]
pub struct AuxState {
    pub w: Field,
    pub u_aux: Field,
    pub lambda: Field,
    pub varphi: Field,
}

impl AuxState {
    /// Auxiliary state for a given `W`.
    pub fn from_w(w: Field, state: &SimState) -> Result<Self> {
        let u_aux = w.dy();
        let lambda = compute_lambda(&state.u, &state.u.dy(), &w)?;
        let varphi = compute_varphi(&state.theta, &state.theta.dy(), &w)?;
        Ok(Self {
            w,
            u_aux,
            lambda,
            varphi,
        })
    }

    /// Initial auxiliary state (`W = 0`).
    pub fn initial(state: &SimState) -> Result<Self> {
        Self::from_w(Field::zeros(state.grid()), state)
    }

    pub fn zero(grid: &Grid) -> Self {
        Self {
            w: Field::zeros(grid),
            u_aux: Field::zeros(grid),
            lambda: Field::zeros(grid),
            varphi: Field::zeros(grid),
        }
    }
}

/// `lambda = d_x u - T_{d_y u} W`.
pub fn compute_lambda(u: &Field, dy_u: &Field, w: &Field) -> Result<Field> {
    u.grid().ensure_same(w.grid())?;
    dy_u.grid().ensure_same(w.grid())?;
    Ok(u.dx().sub(&para(dy_u, w)))
}

/// `varphi = d_x theta - T_{d_y theta} W`.
pub fn compute_varphi(theta: &Field, dy_theta: &Field, w: &Field) -> Result<Field> {
    compute_lambda(theta, dy_theta, w)
}

fn para(f: &Field, g: &Field) -> Field {
    paraproduct_blocks(&PaddedBlocks::new(f), &PaddedBlocks::new(g))
}

/// Coefficients of the paralinearized operator at one instant.
pub struct PrandtlOperator<'a> {
    pub u: &'a Field,
    pub v: &'a Field,
    pub theta: &'a Field,
    pub theta_e: f64,
}

impl PrandtlOperator<'_> {
    /// Spatial part `T_u d_x f + T_v d_y f - theta_E d_y^2 f - T_theta d_y^2 f`.
    pub fn apply_spatial(&self, f: &Field) -> Field {
        let f2 = f.dyy();
        para(self.u, &f.dx())
            .add(&para(self.v, &f.dy()))
            .sub(&f2.scale(self.theta_e))
            .sub(&para(self.theta, &f2))
    }
}

/// Advances `W` from `state` to `next` with the solver's splitting: the
/// transport, the `T_theta` part of the diffusion and the source are
/// explicit, `theta_E d_y^2` is implicit. `W = 0` on the wall and
/// `d_y W = 0` at the top.
pub fn evolve_w(aux: &AuxState, state: &SimState, next: &SimState, dt: f64) -> Result<AuxState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    state.grid().ensure_same(aux.w.grid())?;
    let g = state.grid();
    let w = &aux.w;
    let explicit = para(&state.theta, &w.dyy())
        .sub(&para(&state.u, &w.dx()))
        .sub(&para(&state.v, &w.dy()))
        .sub(&state.v.dx());
    let w_star = w.lin(1.0, &explicit, dt);
    let diff = ndarray::Array2::from_elem((g.ny(), g.nx()), dt * state.theta_e);
    let solved = implicit_columns(w_star.phys(), &diff, g.dy(), EndCondition::Zero, EndCondition::Flat);
    let w_new = Field::from_phys(g, solved)?;
    if !w_new.is_finite() {
        return Err(Error::NonFinite(format!("W at t={}", next.t)));
    }
    AuxState::from_w(w_new, next)
}

/// Rows next to the wall left out of the `U` residual and pairings.
///
/// `U = d_y W` uses a one-sided stencil on the wall row; a second
/// difference of it does not converge on the first two rows, so the
/// discrete equation for `U` only holds from the third row on.
pub const WALL_STRIP: usize = 2;

/// Copy of `f` with the first `rows` rows set to zero.
pub fn mask_wall(f: &Field, rows: usize) -> Field {
    let mut out = f.clone();
    let zeros = vec![0.0; f.grid().nx()];
    for j in 0..rows.min(f.grid().ny()) {
        out.set_row(j, &zeros);
    }
    out
}

/// Weighted `L^2` size of a residual of one identity, away from its wall strip.
pub fn residual_norm(which: Identity, r: &Field, w: Weighting) -> f64 {
    weighted_norm(&mask_wall(r, which.wall_strip()), 0.0, w)
}

/// Which auxiliary equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Identity {
    U,
    Lambda,
    Varphi,
}

impl Identity {
    pub fn name(&self) -> &'static str {
        match self {
            Identity::U => "U",
            Identity::Lambda => "lambda",
            Identity::Varphi => "varphi",
        }
    }
    /// Tangential regularity offset of the energy identity.
    pub fn offset(&self) -> f64 {
        match self {
            Identity::Lambda => 0.5,
            _ => 0.0,
        }
    }
    /// Rows excluded next to the wall.
    pub fn wall_strip(&self) -> usize {
        match self {
            Identity::U => WALL_STRIP,
            _ => 0,
        }
    }
    fn prefix(&self) -> char {
        match self {
            Identity::U => 'A',
            Identity::Lambda => 'B',
            Identity::Varphi => 'C',
        }
    }
    pub fn pick<'a>(&self, aux: &'a AuxState) -> &'a Field {
        match self {
            Identity::U => &aux.u_aux,
            Identity::Lambda => &aux.lambda,
            Identity::Varphi => &aux.varphi,
        }
    }
    pub fn all() -> [Identity; 3] {
        [Identity::U, Identity::Lambda, Identity::Varphi]
    }
}

/// One labelled right-side term.
pub struct Term {
    pub label: String,
    pub field: Field,
}

/// Shared derivative fields and padded blocks for the term lists.
struct Ctx<'a> {
    s: &'a SimState,
    aux: &'a AuxState,
    ux: Field,
    uy: Field,
    uyy: Field,
    thx: Field,
    thy: Field,
    thyy: Field,
    vy: Field,
    pu: PaddedBlocks,
    pv: PaddedBlocks,
    pth: PaddedBlocks,
    pw: PaddedBlocks,
    pwx: PaddedBlocks,
    p_ua: PaddedBlocks,
    p_ua_y: PaddedBlocks,
}

impl<'a> Ctx<'a> {
    fn new(s: &'a SimState, aux: &'a AuxState) -> Self {
        Self {
            ux: s.u.dx(),
            uy: s.u.dy(),
            uyy: s.u.dyy(),
            thx: s.theta.dx(),
            thy: s.theta.dy(),
            thyy: s.theta.dyy(),
            vy: s.v.dy(),
            pu: PaddedBlocks::new(&s.u),
            pv: PaddedBlocks::new(&s.v),
            pth: PaddedBlocks::new(&s.theta),
            pw: PaddedBlocks::new(&aux.w),
            pwx: PaddedBlocks::new(&aux.w.dx()),
            p_ua: PaddedBlocks::new(&aux.u_aux),
            p_ua_y: PaddedBlocks::new(&aux.u_aux.dy()),
            s,
            aux,
        }
    }

    /// `-T_u d_x f - T_v d_y f + T_theta d_y^2 f`.
    fn transport(&self, f: &Field) -> [Field; 3] {
        [
            paraproduct_blocks(&self.pu, &PaddedBlocks::new(&f.dx())).scale(-1.0),
            paraproduct_blocks(&self.pv, &PaddedBlocks::new(&f.dy())).scale(-1.0),
            paraproduct_blocks(&self.pth, &PaddedBlocks::new(&f.dyy())),
        ]
    }
}

fn labelled(prefix: char, fields: Vec<Field>) -> Vec<Term> {
    fields
        .into_iter()
        .enumerate()
        .map(|(i, field)| Term {
            label: format!("{prefix}{}", i + 1),
            field,
        })
        .collect()
}

fn u_terms(c: &Ctx) -> Vec<Field> {
    let aux = c.aux;
    let [a1, a2, a3] = c.transport(&aux.u_aux);
    let a4 = aux.lambda.dx();
    let uxy = c.uy.dx();
    let a5 = paraproduct_blocks(&PaddedBlocks::new(&uxy), &c.pw);
    let a6 = c.uy.mul(&uxy).scale(-2.0);
    let a7 = c.thyy.dx().scale(-1.0);
    let a8 = paraproduct_blocks(&PaddedBlocks::new(&c.vy), &c.p_ua).scale(-1.0);
    let a9 = paraproduct_blocks(&PaddedBlocks::new(&c.thy), &c.p_ua_y);
    vec![a1, a2, a3, a4, a5, a6, a7, a8, a9]
}

/// Terms common to `lambda` (`f = u`) and `varphi` (`f = theta`):
/// `T_{d_x v} d_y f + R(d_x v, d_y f)`, the transport remainders and the
/// high-order normal term, each split into paraproduct and remainder.
struct Splits {
    t_vx_fy: Field,
    r_vx_fy: Field,
    t_fxx_u: Field,
    r_fxx_u: Field,
    t_fxy_v: Field,
    r_fxy_v: Field,
    t_fxyy_th: Field,
    r_fxyy_th: Field,
}

fn splits(c: &Ctx, f: &Field, fy: &Field) -> Splits {
    let pvx = PaddedBlocks::new(&c.s.v.dx());
    let pfy = PaddedBlocks::new(fy);
    let fx = f.dx();
    let pfxx = PaddedBlocks::new(&fx.dx());
    let pfxy = PaddedBlocks::new(&fy.dx());
    let pfxyy = PaddedBlocks::new(&fy.dy().dx());
    Splits {
        t_vx_fy: paraproduct_blocks(&pvx, &pfy),
        r_vx_fy: remainder_blocks(&pvx, &pfy),
        t_fxx_u: paraproduct_blocks(&pfxx, &c.pu),
        r_fxx_u: remainder_blocks(&pfxx, &c.pu),
        t_fxy_v: paraproduct_blocks(&pfxy, &c.pv),
        r_fxy_v: remainder_blocks(&pfxy, &c.pv),
        t_fxyy_th: paraproduct_blocks(&pfxyy, &c.pth),
        r_fxyy_th: remainder_blocks(&pfxyy, &c.pth),
    }
}

fn lambda_terms(c: &Ctx) -> Vec<Field> {
    let s = c.s;
    let [b1, b2, b3] = c.transport(&c.aux.lambda);
    let sp = splits(c, &s.u, &c.uy);
    let b4 = c.ux.mul(&c.ux).scale(-1.0);
    let b7 = c.thx.mul(&c.uyy);
    let coef = c
        .uy
        .mul(&c.ux)
        .add(&c.vy.mul(&c.uy))
        .scale(-1.0)
        .add(&c.thy.mul(&c.uyy));
    let b14 = paraproduct_blocks(&PaddedBlocks::new(&coef), &c.pw).scale(-1.0);
    let [b15, b16, b17, b18, b19] = commutators(c, &c.uy);
    vec![
        b1,
        b2,
        b3,
        b4,
        sp.t_vx_fy.scale(-1.0),
        sp.r_vx_fy.scale(-1.0),
        b7,
        sp.t_fxx_u.scale(-1.0),
        sp.r_fxx_u.scale(-1.0),
        sp.t_fxy_v.scale(-1.0),
        sp.r_fxy_v.scale(-1.0),
        sp.t_fxyy_th,
        sp.r_fxyy_th,
        b14,
        b15,
        b16,
        b17,
        b18,
        b19,
    ]
}

fn varphi_terms(c: &Ctx) -> Vec<Field> {
    let s = c.s;
    let [c1, c2, c3] = c.transport(&c.aux.varphi);
    let sp = splits(c, &s.theta, &c.thy);
    let total = s.theta.add(&Field::constant(s.grid(), s.theta_e));
    let uxy = c.uy.dx();
    let c4 = c.ux.mul(&c.thx).scale(-1.0);
    let c7 = c.thx.mul(&c.thyy);
    let c8 = c.thx.mul(&c.uy.mul(&c.uy));
    let c9 = total.mul(&c.uy.mul(&uxy)).scale(2.0);
    let coef = c
        .uy
        .mul(&c.thx)
        .scale(-1.0)
        .add(&c.ux.mul(&c.thy))
        .add(&total.mul(&c.uy.mul(&c.uyy)).scale(2.0));
    let c16 = paraproduct_blocks(&PaddedBlocks::new(&coef), &c.pw).scale(-1.0);
    let [c17, c18, c19, c20, c21] = commutators(c, &c.thy);
    vec![
        c1,
        c2,
        c3,
        c4,
        sp.t_vx_fy.scale(-1.0),
        sp.r_vx_fy.scale(-1.0),
        c7,
        c8,
        c9,
        sp.t_fxx_u.scale(-1.0),
        sp.r_fxx_u.scale(-1.0),
        sp.t_fxy_v.scale(-1.0),
        sp.r_fxy_v.scale(-1.0),
        sp.t_fxyy_th,
        sp.r_fxyy_th,
        c16,
        c17,
        c18,
        c19,
        c20,
        c21,
    ]
}

/// The five commutator-type terms for coefficient `a`.
fn commutators(c: &Ctx, a: &Field) -> [Field; 5] {
    let s = c.s;
    let pa = PaddedBlocks::new(a);
    let pw = &c.pw;
    // (T_c T_d - T_{cd}) W
    let pair = |cf: &PaddedBlocks, cfield: &Field, d: &Field| {
        let t_d_w = paraproduct_blocks(&PaddedBlocks::new(d), pw);
        let lhs = paraproduct_blocks(cf, &PaddedBlocks::new(&t_d_w));
        let rhs = paraproduct_blocks(&PaddedBlocks::new(&cfield.mul(d)), pw);
        lhs.sub(&rhs)
    };
    let triple = pair(&c.pu, &s.u, &a.dx())
        .add(&pair(&c.pv, &s.v, &a.dy()))
        .sub(&pair(&c.pth, &s.theta, &a.dyy()))
        .scale(-1.0);
    // [T_c; T_a] g = T_c T_a g - T_a T_c g
    let comm = |cf: &PaddedBlocks, g: &PaddedBlocks| {
        let ta = paraproduct_blocks(&pa, g);
        let tc = paraproduct_blocks(cf, g);
        paraproduct_blocks(cf, &PaddedBlocks::new(&ta)).sub(&paraproduct_blocks(&pa, &PaddedBlocks::new(&tc)))
    };
    let c_u = comm(&c.pu, &c.pwx).scale(-1.0);
    let c_v = comm(&c.pv, &c.p_ua).scale(-1.0);
    let c_t = comm(&c.pth, &c.p_ua_y);
    let t_ay_ua = paraproduct_blocks(&PaddedBlocks::new(&a.dy()), &c.p_ua);
    let last = t_ay_ua
        .scale(s.theta_e)
        .add(&paraproduct_blocks(&c.pth, &PaddedBlocks::new(&t_ay_ua)))
        .scale(2.0);
    [triple, c_u, c_v, c_t, last]
}

/// Right-side terms of one auxiliary equation at a snapshot.
pub fn terms(which: Identity, state: &SimState, aux: &AuxState) -> Result<Vec<Term>> {
    state.grid().ensure_same(aux.w.grid())?;
    let c = Ctx::new(state, aux);
    let fields = match which {
        Identity::U => u_terms(&c),
        Identity::Lambda => lambda_terms(&c),
        Identity::Varphi => varphi_terms(&c),
    };
    Ok(labelled(which.prefix(), fields))
}

/// Consecutive snapshots of the coupled run.
pub struct SnapshotPair<'a> {
    pub state0: &'a SimState,
    pub aux0: &'a AuxState,
    pub state1: &'a SimState,
    pub aux1: &'a AuxState,
}

impl SnapshotPair<'_> {
    fn check(&self, dt: f64) -> Result<()> {
        let got = self.state1.t - self.state0.t;
        if (got - dt).abs() > 1e-12 * dt.max(1.0) {
            return Err(Error::SnapshotMismatch { expected: dt, got });
        }
        self.state0.grid().ensure_same(self.state1.grid())
    }
}

/// `(f1 - f0)/dt - theta_E d_y^2 f0 - sum terms`, with the terms at the
/// earlier snapshot.
pub fn residual(which: Identity, pair: &SnapshotPair, dt: f64) -> Result<Field> {
    pair.check(dt)?;
    let f0 = which.pick(pair.aux0);
    let f1 = which.pick(pair.aux1);
    let ts = terms(which, pair.state0, pair.aux0)?;
    let rhs = Field::sum(f0.grid(), ts.iter().map(|t| &t.field));
    Ok(f1
        .lin(1.0 / dt, f0, -1.0 / dt)
        .sub(&f0.dyy().scale(pair.state0.theta_e))
        .sub(&rhs))
}

pub fn residual_u(pair: &SnapshotPair, dt: f64) -> Result<Field> {
    residual(Identity::U, pair, dt)
}
pub fn residual_lambda(pair: &SnapshotPair, dt: f64) -> Result<Field> {
    residual(Identity::Lambda, pair, dt)
}
pub fn residual_varphi(pair: &SnapshotPair, dt: f64) -> Result<Field> {
    residual(Identity::Varphi, pair, dt)
}

/// Values of one energy identity at a snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub identity: Identity,
    /// `(label, <[term]_Phi, f_Phi>)`.
    pub terms: Vec<(String, f64)>,
    /// Time-derivative pairing, the `gamma mu'` term and the `-theta_E <d_y^2 f_Phi, f_Phi>` term.
    pub left: [f64; 3],
}

impl Decomposition {
    pub fn left_sum(&self) -> f64 {
        self.left.iter().sum()
    }
    pub fn right_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum()
    }
    /// Left minus right; vanishes with the time step.
    pub fn discrepancy(&self) -> f64 {
        self.left_sum() - self.right_sum()
    }
}

/// Lifts the terms of one identity and pairs them with `f_Phi` in
/// `H^{s + offset, 0}_Psi`, away from the wall strip of that identity. When the next snapshot is supplied the three
/// left-side terms are measured as well: the lifted forward difference,
/// `gamma mu' ||f_Phi||^2_{s'+1/4}` and `-theta_E <d_y^2 f_Phi, f_Phi>`.
pub fn decompose(
    which: Identity,
    state: &SimState,
    aux: &AuxState,
    phase: &PhaseState,
    s: f64,
    next: Option<(&AuxState, f64, f64)>,
) -> Result<Decomposition> {
    let radius = phase.checked_radius()?;
    let reg = s + which.offset();
    let w = Weighting {
        t: state.t,
        theta_e: state.theta_e,
    };
    let f = which.pick(aux);
    let f_phi = lift_with_radius(f, radius)?;
    let f_in = mask_wall(&f_phi, which.wall_strip());
    let mut out = Vec::new();
    for t in terms(which, state, aux)? {
        let v = weighted_inner(&lift_with_radius(&t.field, radius)?, &f_in, reg, w);
        out.push((t.label, v));
    }
    let diffusion = -state.theta_e * weighted_inner(&f_phi.dyy(), &f_in, reg, w);
    let mut left = [0.0, 0.0, diffusion];
    if let Some((aux1, dt, mu_dot)) = next {
        let r1 = phase.delta - phase.gamma * (phase.mu + dt * mu_dot);
        let f1_phi = lift_with_radius(which.pick(aux1), r1)?;
        let dfdt = f1_phi.lin(1.0 / dt, &f_phi, -1.0 / dt);
        left[0] = weighted_inner(&dfdt, &f_in, reg, w);
        let half = weighted_inner(&f_phi, &f_in, reg + 0.25, w);
        left[1] = phase.gamma * mu_dot * half;
    }
    Ok(Decomposition {
        identity: which,
        terms: out,
        left,
    })
}

//! Property suites behind `verify`, at pinned desk-scale resolutions.
//!
//! Each check is a plain function returning a [`Check`], so the
//! acceptance target can call the same code at its own sizes.

use std::time::Instant;

use bl_gevrey::aux::{
    decompose, evolve_w, residual, residual_norm, AuxState, Identity, SnapshotPair,
};
use bl_gevrey::dyadic::{dyadic_block, make_partition, paraproduct, remainder};
use bl_gevrey::gevrey::{phase_symbol, sup_bound_sides, weight_dt, weight_dy, weighted_norm, PhaseState, Weighting};
use bl_gevrey::mms::Manufactured;
use bl_gevrey::monitor::{constant_drift, fourier_decay_exponent, Inequality};
use bl_gevrey::run::{Simulation, Stop};
use bl_gevrey::solver::{
    divergence_residual, interior_rms, make_initial, reconstruct_v, step, InitSpec, SimState, SolverParams,
};
use bl_gevrey::{Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::runner::calibrate;

const TAU: f64 = 2.0 * std::f64::consts::PI;

pub const SUITES: [&str; 5] = ["dyadic", "spaces", "solver-mms", "aux-residuals", "monitors"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            detail,
        }
    }
}

/// Replaceable pieces, so a deliberately broken build can be exercised.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub weight_dt: fn(f64, f64, f64) -> f64,
    pub weight_dy: fn(f64, f64, f64) -> f64,
}

impl Default for Hooks {
    fn default() -> Self {
        Self {
            weight_dt,
            weight_dy,
        }
    }
}

pub fn verify(suite: &str) -> Result<Vec<Check>, CliError> {
    verify_with(suite, &Hooks::default())
}

pub fn verify_with(suite: &str, hooks: &Hooks) -> Result<Vec<Check>, CliError> {
    Ok(match suite {
        "dyadic" => vec![partition_unity(256), block_completeness(256, 3), bony_identity(256, 20, 1)],
        "spaces" => vec![weight_identity(10_000, 2, hooks), sup_bound(50, 23), phase_convexity(128)],
        "solver-mms" => vec![
            mms_space_order(),
            mms_time_order(),
            linear_decay(),
            divergence_order(),
            viscosity_refinement(),
        ],
        "aux-residuals" => vec![collapse_cases(), residual_orders(), identity_orders()],
        "monitors" => {
            let mut out = vec![zero_field_radius()];
            out.extend(reference_checks(&RunConfig {
                nx: 32,
                t_end: 0.02,
                ..RunConfig::default()
            }));
            out
        }
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(verify_with(s, hooks)?);
            }
            out
        }
        other => return Err(CliError::UnknownSuite(other.into())),
    })
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.sub(b).max_abs()
}

pub fn partition_unity(nx: usize) -> Check {
    let g = Grid::new(nx, TAU, 33, 12.0).expect("pinned grid");
    let worst = match make_partition(&g) {
        Ok(p) => (0..g.nx())
            .filter(|&j| !g.is_nyquist(j))
            .map(|j| {
                let sum = p.chi_samples[j] + p.phi_samples_per_block.iter().map(|b| b[j]).sum::<f64>();
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };
    Check::new("partition_of_unity", worst <= 1e-12, format!("max |sum - 1| = {worst:.2e}"))
}

pub fn block_completeness(nx: usize, seed: u64) -> Check {
    let g = Grid::new(nx, TAU, 33, 12.0).expect("pinned grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Field::random_white(&g, &mut rng);
    let k_max = g.partition().k_max;
    let acc = (-1..=k_max + 1).fold(Field::zeros(&g), |a, k| a.add(&dyadic_block(&w, k)));
    let err = max_diff(&acc, &w);
    Check::new("block_completeness", err <= 1e-12, format!("max error {err:.2e}"))
}

/// Worst relative Bony defect over random pairs, and the wall time.
pub fn bony_identity(nx: usize, pairs: usize, seed: u64) -> Check {
    let start = Instant::now();
    let g = Grid::new(nx, TAU, 33, 12.0).expect("pinned grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let f = Field::random_white(&g, &mut rng);
        let h = Field::random_white(&g, &mut rng);
        let split = paraproduct(&f, &h)
            .and_then(|a| Ok(a.add(&paraproduct(&h, &f)?).add(&remainder(&f, &h)?)))
            .expect("same grid");
        worst = worst.max(max_diff(&f.mul(&h), &split) / (f.max_abs() * h.max_abs()));
    }
    let secs = start.elapsed().as_secs_f64();
    Check::new(
        "bony_identity",
        worst <= 1e-10,
        format!("{pairs} pairs at Nx={nx}: worst {worst:.2e} in {secs:.1}s"),
    )
}

pub fn weight_identity(samples: usize, seed: u64, hooks: &Hooks) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let t = rng.random_range(0.0..10.0);
        let y = rng.random_range(0.0..20.0);
        let te = rng.random_range(0.1..5.0);
        let r = (hooks.weight_dt)(t, y, te) + 4.0 * te * (hooks.weight_dy)(t, y, te).powi(2);
        worst = worst.max(r.abs());
    }
    Check::new("weight_identity", worst <= 1e-12, format!("{samples} samples: worst {worst:.2e}"))
}

pub fn sup_bound(fields: usize, seed: u64) -> Check {
    let g = Grid::new(32, TAU, 193, 12.0).expect("pinned grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..fields {
        let f = Field::random_decaying(&g, &mut rng, 10, 0.3);
        let w = Weighting {
            t: 0.1 * i as f64,
            theta_e: 1.0,
        };
        let (lhs, rhs) = sup_bound_sides(&f, 1.5, w);
        worst = worst.max(lhs / rhs);
    }
    Check::new("sup_bound", worst <= 1.01, format!("{fields} fields: worst ratio {worst:.4}"))
}

pub fn phase_convexity(nx: usize) -> Check {
    let g = Grid::new(nx, TAU, 33, 12.0).expect("pinned grid");
    let mut worst = f64::NEG_INFINITY;
    for mu in [0.0, 0.03, 0.099] {
        let p = PhaseState::new(0.1, 1.0).with_mu(mu);
        for &xi in g.wavenumbers() {
            for &eta in g.wavenumbers() {
                let gap = phase_symbol(xi, &p).unwrap()
                    - phase_symbol(xi - eta, &p).unwrap()
                    - phase_symbol(eta, &p).unwrap();
                worst = worst.max(gap);
            }
        }
    }
    Check::new("phase_convexity", worst <= 1e-12, format!("max excess {worst:.2e}"))
}

fn mms_run(ny: usize, dt: f64, t_end: f64) -> (SimState, Grid) {
    let g = Grid::new(16, TAU, ny, 8.0).expect("pinned grid");
    let m = Manufactured { c: 0.1, theta_e: 1.0 };
    let (u, th, _) = m.fields(&g, 0.0);
    let mut s = SimState::new(u, th, 0.0, 1.0).expect("manufactured data");
    let p = SolverParams {
        cfl: 0.4,
        dt_max: dt,
        linear: false,
    };
    let gg = g.clone();
    let force = move |t: f64| m.forcing(&gg, t);
    for _ in 0..(t_end / dt).round() as usize {
        s = step(&s, dt, &p, Some(&force)).expect("manufactured run");
    }
    (s, g)
}

pub fn mms_space_order() -> Check {
    let m = Manufactured { c: 0.1, theta_e: 1.0 };
    let errs: Vec<f64> = [65, 129, 257]
        .iter()
        .map(|&ny| {
            let (s, g) = mms_run(ny, 1e-5, 0.05);
            let (u, th, _) = m.fields(&g, s.t);
            max_diff(&s.u, &u) + max_diff(&s.theta, &th)
        })
        .collect();
    let p = order(errs[0], errs[1]).min(order(errs[1], errs[2]));
    Check::new("mms_order_y", p >= 1.9, format!("Ny 65/129/257: order {p:.3}"))
}

pub fn mms_time_order() -> Check {
    let runs: Vec<SimState> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| mms_run(65, dt, 0.2).0).collect();
    let d1 = max_diff(&runs[0].u, &runs[1].u);
    let d2 = max_diff(&runs[1].u, &runs[2].u);
    let p = order(d1, d2);
    Check::new("mms_order_t", p >= 0.9, format!("dt 4e-3/2e-3/1e-3: order {p:.3}"))
}

pub fn linear_decay() -> Check {
    let ymax = 12.0;
    let g = Grid::new(16, TAU, 129, ymax).expect("pinned grid");
    let k = std::f64::consts::PI / ymax;
    let u0 = Field::from_fn(&g, |_, y| (k * y).sin());
    let mut s = SimState {
        t: 0.0,
        u: u0.clone(),
        theta: Field::zeros(&g),
        v: Field::zeros(&g),
        mu: 0.0,
        nu: 0.0,
        theta_e: 1.0,
    };
    let (dt, steps) = (0.01, 200);
    let p = SolverParams {
        cfl: 0.4,
        dt_max: dt,
        linear: true,
    };
    for _ in 0..steps {
        s = step(&s, dt, &p, None).expect("linear run");
    }
    let mid = (g.ny() - 1) / 2;
    let rate = -(s.u.phys()[[mid, 0]] / u0.phys()[[mid, 0]]).ln() / (dt * steps as f64);
    let h = g.dy();
    let eig = (2.0 / (h * h)) * (1.0 - (k * h).cos());
    let oracle = (1.0 + dt * eig).ln() / dt;
    let rel = (rate / oracle - 1.0).abs();
    Check::new("linear_decay_rate", rel < 0.02, format!("rate {rate:.6} vs {oracle:.6} ({rel:.2e})"))
}

pub fn divergence_order() -> Check {
    let res = |ny: usize| {
        let g = Grid::new(16, TAU, ny, 8.0).expect("pinned grid");
        let u = Field::from_fn(&g, |x, y| x.sin() * y * (-y * y).exp());
        let th = Field::from_fn(&g, |x, y| 0.1 * x.cos() * (-y * y).exp());
        let v = reconstruct_v(&u, &th);
        interior_rms(&divergence_residual(&u, &th, &v), 1)
    };
    let r = res(129) / res(257);
    Check::new("divergence_constraint", r >= 3.5, format!("Ny 129/257 ratio {r:.3}"))
}

fn viscous_spec() -> InitSpec {
    InitSpec {
        amplitude: 0.05,
        decay: 5.0,
        epsilon: 1e-3,
        lift_delta: 0.1,
        s: 2.75,
        phase_seed: None,
    }
}

/// `||u^nu - u^{nu/2}||_{H^{1,0}_Psi}` for `nu` in `{1e-2, 5e-3, 2.5e-3}`.
pub fn viscosity_refinement() -> Check {
    let g = Grid::new(32, TAU, 65, 12.0).expect("pinned grid");
    let run = |nu: f64| {
        let (u, th) = make_initial(&viscous_spec(), &g, 1.0).expect("initial data");
        let mut s = SimState::new(u, th, nu, 1.0).expect("initial data");
        for _ in 0..50 {
            s = step(&s, 1e-3, &SolverParams::default(), None).expect("viscous run");
        }
        s.u
    };
    let w = Weighting {
        t: 0.05,
        theta_e: 1.0,
    };
    let us: Vec<Field> = [1e-2, 5e-3, 2.5e-3, 1.25e-3].iter().map(|&n| run(n)).collect();
    let d: Vec<f64> = us.windows(2).map(|p| weighted_norm(&p[0].sub(&p[1]), 1.0, w)).collect();
    let pass = d[0] > d[1] && d[1] > d[2];
    Check::new("viscosity_refinement", pass, format!("differences {d:?}"))
}

/// Coupled run with fixed `dt`; the snapshot at `t_end` and one step later.
fn trajectory_pair(g: &Grid, dt: f64, t_end: f64) -> ((SimState, AuxState), (SimState, AuxState)) {
    let (u, th) = make_initial(&viscous_spec(), g, 1.0).expect("initial data");
    let mut st = SimState::new(u, th, 0.0, 1.0).expect("initial data");
    let mut aux = AuxState::initial(&st).expect("initial aux");
    let p = SolverParams {
        dt_max: dt,
        ..Default::default()
    };
    let pair_step = |st: &SimState, aux: &AuxState| {
        let next = step(st, dt, &p, None).expect("trajectory step");
        let a = evolve_w(aux, st, &next, dt).expect("trajectory step");
        (next, a)
    };
    for _ in 0..(t_end / dt).round() as usize {
        (st, aux) = pair_step(&st, &aux);
    }
    let next = pair_step(&st, &aux);
    ((st, aux), next)
}

/// Zero and x-independent data keep every auxiliary field and residual at zero.
pub fn collapse_cases() -> Check {
    let mut worst = 0.0f64;
    let cases = [
        (Field::zeros as fn(&Grid) -> Field, Field::zeros as fn(&Grid) -> Field),
        (
            |g: &Grid| Field::from_fn(g, |_, y| y * (-y * y).exp()),
            |g: &Grid| Field::from_fn(g, |_, y| 0.1 * (-y * y).exp()),
        ),
    ];
    for (mk_u, mk_t) in cases {
        let g = Grid::new(16, TAU, 65, 8.0).expect("pinned grid");
        let mut st = SimState::new(mk_u(&g), mk_t(&g), 0.0, 1.0).expect("collapse data");
        let mut aux = AuxState::initial(&st).expect("collapse aux");
        let dt = 1e-3;
        for _ in 0..10 {
            let next = step(&st, dt, &SolverParams::default(), None).expect("collapse step");
            let a1 = evolve_w(&aux, &st, &next, dt).expect("collapse step");
            let pair = SnapshotPair {
                state0: &st,
                aux0: &aux,
                state1: &next,
                aux1: &a1,
            };
            for id in Identity::all() {
                worst = worst.max(residual(id, &pair, dt).expect("residual").max_abs());
            }
            for f in [&a1.w, &a1.u_aux, &a1.lambda, &a1.varphi] {
                worst = worst.max(f.max_abs());
            }
            (st, aux) = (next, a1);
        }
    }
    Check::new("collapse_cases", worst <= 1e-12, format!("largest value {worst:.2e}"))
}

/// Residual norms under joint `(dt, dy)` refinement; returns the smallest order.
pub fn residual_orders() -> Check {
    let mut norms = [[0.0; 3]; 3];
    for (row, (ny, dt)) in [(65, 4e-3), (129, 2e-3), (257, 1e-3)].into_iter().enumerate() {
        let g = Grid::new(32, TAU, ny, 8.0).expect("pinned grid");
        let ((s0, a0), (s1, a1)) = trajectory_pair(&g, dt, 0.032);
        let pair = SnapshotPair {
            state0: &s0,
            aux0: &a0,
            state1: &s1,
            aux1: &a1,
        };
        let w = Weighting { t: s0.t, theta_e: 1.0 };
        for (k, id) in Identity::all().into_iter().enumerate() {
            norms[row][k] = residual_norm(id, &residual(id, &pair, dt).expect("residual"), w);
        }
    }
    let mut detail = Vec::new();
    let mut worst = f64::INFINITY;
    for (k, id) in Identity::all().into_iter().enumerate() {
        let p = order(norms[0][k], norms[1][k]).min(order(norms[1][k], norms[2][k]));
        worst = worst.min(p);
        detail.push(format!("{} {p:.2}", id.name()));
    }
    Check::new("residual_orders", worst >= 0.9, format!("orders {}", detail.join(", ")))
}

/// Energy-identity discrepancy under joint refinement; returns the smallest order.
pub fn identity_orders() -> Check {
    let phase = PhaseState::new(0.1, 1.0).with_mu(0.01);
    let mut disc = [[0.0; 3]; 3];
    for (row, (ny, dt)) in [(129, 2e-3), (257, 1e-3), (513, 5e-4)].into_iter().enumerate() {
        let g = Grid::new(32, TAU, ny, 8.0).expect("pinned grid");
        let ((s0, a0), (_, a1)) = trajectory_pair(&g, dt, 0.032);
        for (k, id) in Identity::all().into_iter().enumerate() {
            let d = decompose(id, &s0, &a0, &phase, 2.75, Some((&a1, dt, 1.5))).expect("decomposition");
            disc[row][k] = d.discrepancy().abs();
        }
    }
    let mut detail = Vec::new();
    let mut worst = f64::INFINITY;
    for (k, id) in Identity::all().into_iter().enumerate() {
        let p = order(disc[0][k], disc[1][k]).min(order(disc[1][k], disc[2][k]));
        worst = worst.min(p);
        detail.push(format!("{} {p:.2}", id.name()));
    }
    Check::new("identity_orders", worst >= 0.9, format!("orders {}", detail.join(", ")))
}

/// Zero data: the radius ODE rate is one and the run stops at `delta / gamma`.
pub fn zero_field_radius() -> Check {
    let cfg = RunConfig {
        nx: 32,
        ny: 65,
        amplitude: 0.0,
        gamma: Some(1.0),
        t_end: 1.0,
        ..RunConfig::default()
    };
    let g = cfg.grid().expect("pinned grid");
    let state = SimState::zero(&g, 0.0, 1.0);
    let result = Simulation::new(state, cfg.settings(1.0, cfg.t_end)).and_then(|mut sim| {
        let stop = sim.run()?;
        Ok((stop, sim))
    });
    match result {
        Ok((Stop::RadiusExhausted { t_star }, sim)) => {
            let unit = sim.ledger.mu_rates.iter().all(|r| r.value == 1.0);
            let err = (t_star - 0.1).abs();
            Check::new(
                "zero_field_radius",
                unit && err <= 1e-12,
                format!("t_star {t_star} (error {err:.1e}), unit rate {unit}"),
            )
        }
        Ok((stop, _)) => Check::new("zero_field_radius", false, format!("stopped with {stop:?}")),
        Err(e) => Check::new("zero_field_radius", false, e.to_string()),
    }
}

/// Calibrated monitored run of `cfg`, with the decay fit and radius at every step.
pub fn reference_run(cfg: &RunConfig) -> Result<(Simulation, Vec<(f64, f64)>), CliError> {
    let g = cfg.grid()?;
    let (u, th) = make_initial(&cfg.init_spec(), &g, cfg.theta_e)?;
    let state = SimState::new(u, th, cfg.nu, cfg.theta_e)?;
    let (gamma, _) = calibrate(cfg, &state)?;
    let mut sim = Simulation::new(state, cfg.settings(gamma, cfg.t_end))?;
    let mut fits = Vec::new();
    let mut record = |sim: &Simulation| {
        let fit = fourier_decay_exponent(&sim.state.u).unwrap_or(f64::NAN);
        fits.push((fit, sim.phase().radius()));
    };
    record(&sim);
    while sim.stop().is_none() {
        sim.advance()?;
        record(&sim);
    }
    Ok((sim, fits))
}

/// Radius tracking, bootstrap and energy bounds along a reference run.
pub fn reference_checks(cfg: &RunConfig) -> Vec<Check> {
    match reference_run(cfg) {
        Ok((sim, fits)) => assess_reference(&sim, &fits),
        Err(e) => vec![Check::new("reference_run", false, e.to_string())],
    }
}

/// Checks on a finished reference run; `fits` pairs decay exponent and radius.
pub fn assess_reference(sim: &Simulation, fits: &[(f64, f64)]) -> Vec<Check> {
    let worst_fit = fits.iter().map(|(f, r)| f / (0.9 * r)).fold(f64::INFINITY, f64::min);
    let rep = sim.bootstrap_report();
    let energy = [Inequality::EnergyMain, Inequality::EnergySlope, Inequality::EnergyCurvature]
        .into_iter()
        .all(|w| sim.slack.get(w).map(|r| r.iter().all(|x| x.pass)).unwrap_or(false));
    let ended = sim.stop() == Some(Stop::EndTime);
    vec![
        Check::new(
            "radius_tracking",
            ended && worst_fit >= 1.0,
            format!("min fit / (0.9 radius) = {worst_fit:.2} over {} times", fits.len()),
        ),
        Check::new(
            "bootstrap",
            rep.velocity_ok && rep.temperature_ok,
            format!(
                "velocity {:.3e} <= {:.3e}, temperature {:.3e} <= {:.3e}",
                rep.velocity_max, sim.bootstrap.m, rep.temperature_max, sim.bootstrap.zeta
            ),
        ),
        Check::new(
            "positivity",
            rep.positivity_ok,
            format!("min (theta + theta_E) / theta_E = {:.6}", rep.positivity_margin),
        ),
        Check::new(
            "energy_bounds",
            energy,
            format!("gamma {}, k {:.4}, eta {}", sim.settings.gamma, sim.bootstrap.k_coupling, sim.bootstrap.eta),
        ),
    ]
}

/// Largest minimal constant of the three auxiliary inequalities at each resolution.
pub fn minimal_constant_stability(cfg: &RunConfig, nxs: &[usize]) -> Check {
    let which = [Inequality::UAux, Inequality::Lambda, Inequality::Varphi];
    let mut per = vec![Vec::new(); which.len()];
    for &nx in nxs {
        let run_cfg = RunConfig { nx, ..cfg.clone() };
        let sim = match reference_run(&run_cfg) {
            Ok((sim, _)) => sim,
            Err(e) => return Check::new("minimal_constant_stability", false, e.to_string()),
        };
        for (k, w) in which.iter().enumerate() {
            let c = sim
                .slack
                .get(*w)
                .map(|rows| rows.iter().filter_map(|r| r.minimal_c).fold(0.0, f64::max))
                .unwrap_or(f64::INFINITY);
            per[k].push(c);
        }
    }
    let drifts: Vec<f64> = per.iter().map(|c| constant_drift(c)).collect();
    let pass = drifts.iter().all(|d| *d < 2.0);
    let detail = which
        .iter()
        .zip(&per)
        .zip(&drifts)
        .map(|((w, c), d)| format!("{} {c:?} drift {d:.3}", w.name()))
        .collect::<Vec<_>>()
        .join("; ");
    Check::new("minimal_constant_stability", pass, detail)
}

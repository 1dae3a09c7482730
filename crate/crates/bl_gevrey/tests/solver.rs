mod common;

use bl_gevrey::gevrey::{lift_with_radius, weighted_norm, Weighting};
use bl_gevrey::mms::Manufactured;
use bl_gevrey::solver::{
    apply_boundary, cfl_dt, divergence_residual, interior_rms, make_initial, reconstruct_v, step,
    InitSpec, SimState, SolverParams,
};
use bl_gevrey::{Error, Field, Grid};

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn init_spec() -> InitSpec {
    InitSpec {
        amplitude: 0.05,
        decay: 5.0,
        epsilon: 1e-3,
        lift_delta: 0.1,
        s: 2.75,
        phase_seed: None,
    }
}

#[test]
fn reconstruct_v_pure_conduction() {
    let g = Grid::new(16, TAU, 2049, 6.0).unwrap();
    let th = Field::from_fn(&g, |x, y| (-y * y).exp() * x.cos());
    let v = reconstruct_v(&Field::zeros(&g), &th);
    let exact = Field::from_fn(&g, |x, y| -2.0 * y * (-y * y).exp() * x.cos());
    assert!(v.sub(&exact).max_abs() < 1e-5);
    assert!(v.phys().row(0).iter().all(|&x| x == 0.0));
}

#[test]
fn reconstruct_v_matches_quadrature_oracle() {
    let g = Grid::new(16, TAU, 80_001, 4.0).unwrap();
    let u = Field::from_fn(&g, |x, y| x.sin() * y * (-y).exp());
    let v = reconstruct_v(&u, &Field::zeros(&g));
    let mut worst: f64 = 0.0;
    for j in (0..g.ny()).step_by(4000) {
        let y = g.y(j);
        let a = common::integrate(|s| ((1.0 - s) * (-s).exp()).powi(2), 0.0, y, 40);
        let b = common::integrate(|s| s * (-s).exp(), 0.0, y, 40);
        for i in 0..g.nx() {
            let x = g.x(i);
            let expect = x.sin().powi(2) * a - x.cos() * b;
            worst = worst.max((v.phys()[[j, i]] - expect).abs());
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn reconstruct_v_mean_identity() {
    let g = Grid::new(32, TAU, 129, 8.0).unwrap();
    let u = Field::from_fn(&g, |x, y| (x.sin() + 0.3 * (2.0 * x).cos()) * y * (-y * y).exp());
    let th = Field::from_fn(&g, |x, y| 0.1 * (1.0 + x.cos()) * (-y * y).exp());
    let v = reconstruct_v(&u, &th);
    let uy = u.dy();
    let expect = th.dy().minus_wall_row().add(&uy.mul(&uy).cumulative_y());
    for j in 0..g.ny() {
        let a = v.spec()[[j, 0]].re;
        let b = expect.spec()[[j, 0]].re;
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn boundary_examples() {
    let g = Grid::new(16, TAU, 65, 8.0).unwrap();
    let h = g.dy();
    // wall slope: the corrected wall value kills the one-sided derivative
    let th = Field::from_fn(&g, |x, y| 0.1 * (1.0 + 0.5 * x.cos()) * (y - 8.0));
    let u = Field::from_fn(&g, |x, y| x.sin() + y * 0.0 + 1.0);
    let mut s = SimState {
        t: 0.0,
        v: u.clone(),
        u,
        theta: th,
        mu: 0.0,
        nu: 0.0,
        theta_e: 1.0,
    };
    apply_boundary(&mut s);
    for i in 0..g.nx() {
        let t = s.theta.phys();
        let d = (-3.0 * t[[0, i]] + 4.0 * t[[1, i]] - t[[2, i]]) / (2.0 * h);
        assert!(d.abs() < 1e-12);
        assert_eq!(s.u.phys()[[0, i]], 0.0);
        assert_eq!(s.v.phys()[[0, i]], 0.0);
        assert_eq!(s.u.phys()[[g.ny() - 1, i]], 0.0);
    }
    let before = s.clone();
    apply_boundary(&mut s);
    assert!(s.theta.sub(&before.theta).max_abs() < 1e-15);
    assert!(s.u.sub(&before.u).max_abs() == 0.0);
}

#[test]
fn zero_state_is_fixed() {
    let g = Grid::new(16, TAU, 65, 12.0).unwrap();
    let s = SimState::zero(&g, 0.01, 1.0);
    let p = SolverParams::default();
    assert_eq!(cfl_dt(&s, &p), p.dt_max);
    let n = step(&s, 1e-3, &p, None).unwrap();
    assert_eq!(n.u.max_abs(), 0.0);
    assert_eq!(n.theta.max_abs(), 0.0);
    assert_eq!(n.v.max_abs(), 0.0);
}

#[test]
fn cfl_scales_with_velocity() {
    let g = Grid::new(16, TAU, 65, 12.0).unwrap();
    let u = Field::from_fn(&g, |x, y| 2.0 * x.sin() * y * (-y * y).exp());
    let s1 = SimState {
        t: 0.0,
        u: u.clone(),
        theta: Field::zeros(&g),
        v: Field::zeros(&g),
        mu: 0.0,
        nu: 0.0,
        theta_e: 1.0,
    };
    let mut s2 = s1.clone();
    s2.u = u.scale(2.0);
    let p = SolverParams {
        cfl: 0.4,
        dt_max: 1.0,
        linear: false,
    };
    let d1 = cfl_dt(&s1, &p);
    let d2 = cfl_dt(&s2, &p);
    assert!((d1 / d2 - 2.0).abs() < 1e-12);
    assert!((d1 - 0.4 * g.dx() / u.max_abs()).abs() < 1e-15);
}

#[test]
fn cfl_fixture() {
    // regression value from the formula on the default initial data
    let g = Grid::new(64, TAU, 129, 12.0).unwrap();
    let (u, th) = make_initial(&init_spec(), &g, 1.0).unwrap();
    let s = SimState::new(u, th, 0.0, 1.0).unwrap();
    let p = SolverParams {
        cfl: 0.4,
        dt_max: 1.0,
        linear: false,
    };
    let got = cfl_dt(&s, &p);
    let cands = [
        g.dx() / s.u.max_abs(),
        g.dy() / s.v.max_abs(),
        g.dy() * g.dy() / s.theta.max_abs(),
    ];
    let expect = 0.4 * cands.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(got, expect);
    assert!((got / 0.570_979_943_013_46 - 1.0).abs() < 1e-9, "{got}");
}

#[test]
fn initial_data_examples() {
    let g = Grid::new(64, TAU, 129, 12.0).unwrap();
    let mut zero = init_spec();
    zero.amplitude = 0.0;
    let (u, th) = make_initial(&zero, &g, 1.0).unwrap();
    assert_eq!(u.max_abs() + th.max_abs(), 0.0);

    let spec = init_spec();
    let (u, th) = make_initial(&spec, &g, 1.0).unwrap();
    let w = Weighting {
        t: 0.0,
        theta_e: 1.0,
    };
    let size = weighted_norm(&lift_with_radius(&th.dy(), 0.1).unwrap(), 2.75, w);
    assert!((size / 1e-3 - 1.0).abs() < 0.05);

    // Fourier decay is exactly the prescribed Gevrey profile
    let row = 40;
    let base = (u.spec()[[row, 1]].norm()).ln() + 5.0 * 2f64.powf(0.25);
    assert_eq!(u.spec()[[row, 0]].norm(), 0.0);
    for m in 2..g.nx() / 2 {
        let xi = g.xi(m);
        let c = u.spec()[[row, m]].norm().ln() + 5.0 * (1.0 + xi * xi).powf(0.25);
        assert!((c - base).abs() < 1e-6, "mode {m}: {c} vs {base}");
    }
    assert!(u.phys().row(0).iter().all(|&v| v.abs() < 1e-15));

    let mut bad = init_spec();
    bad.epsilon = 1.5;
    assert!(matches!(make_initial(&bad, &g, 1.0), Err(Error::Config(_))));
}

fn mms_run(nx: usize, ny: usize, ymax: f64, dt: f64, t_end: f64) -> (SimState, Grid) {
    let g = Grid::new(nx, TAU, ny, ymax).unwrap();
    let m = Manufactured { c: 0.1, theta_e: 1.0 };
    let (u, th, _) = m.fields(&g, 0.0);
    let mut s = SimState::new(u, th, 0.0, 1.0).unwrap();
    let p = SolverParams {
        cfl: 0.4,
        dt_max: dt,
        linear: false,
    };
    let steps = (t_end / dt).round() as usize;
    let gg = g.clone();
    let force = move |t: f64| m.forcing(&gg, t);
    for _ in 0..steps {
        s = step(&s, dt, &p, Some(&force)).unwrap();
    }
    (s, g)
}

#[test]
fn mms_second_order_in_y() {
    let m = Manufactured { c: 0.1, theta_e: 1.0 };
    let mut errs = vec![];
    for ny in [65, 129, 257] {
        let (s, g) = mms_run(16, ny, 8.0, 1e-5, 0.05);
        let (u, th, _) = m.fields(&g, s.t);
        errs.push(s.u.sub(&u).max_abs() + s.theta.sub(&th).max_abs());
    }
    let o1 = common::order(errs[0], errs[1]);
    let o2 = common::order(errs[1], errs[2]);
    assert!(o1 >= 1.9 && o2 >= 1.9, "{errs:?} orders {o1} {o2}");
}

#[test]
fn mms_first_order_in_time() {
    let runs: Vec<SimState> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| mms_run(16, 65, 8.0, dt, 0.2).0)
        .collect();
    let d1 = runs[0].u.sub(&runs[1].u).max_abs();
    let d2 = runs[1].u.sub(&runs[2].u).max_abs();
    let o = common::order(d1, d2);
    assert!(o >= 0.9, "{d1} {d2} {o}");
}

#[test]
fn linear_mode_decay_rate() {
    let ymax = 12.0;
    let g = Grid::new(16, TAU, 129, ymax).unwrap();
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
    let p = SolverParams {
        cfl: 0.4,
        dt_max: 0.01,
        linear: true,
    };
    let dt = 0.01;
    let steps = 200;
    for _ in 0..steps {
        s = step(&s, dt, &p, None).unwrap();
    }
    let t = dt * steps as f64;
    let mid = (g.ny() - 1) / 2;
    let rate = -(s.u.phys()[[mid, 0]] / u0.phys()[[mid, 0]]).ln() / t;
    let h = g.dy();
    let lam_h = (2.0 / (h * h)) * (1.0 - (k * h).cos());
    let oracle = (1.0 + dt * lam_h).ln() / dt;
    assert!((rate / oracle - 1.0).abs() < 0.02, "{rate} vs {oracle}");
    let continuous = k * k;
    assert!((rate - continuous).abs() < 10.0 * (dt + h * h) * continuous);
}

#[test]
fn divergence_residual_second_order() {
    let res = |ny: usize| {
        let g = Grid::new(16, TAU, ny, 8.0).unwrap();
        let u = Field::from_fn(&g, |x, y| x.sin() * y * (-y * y).exp());
        let th = Field::from_fn(&g, |x, y| 0.1 * x.cos() * (-y * y).exp());
        let v = reconstruct_v(&u, &th);
        interior_rms(&divergence_residual(&u, &th, &v), 1)
    };
    let r = res(129) / res(257);
    assert!(r >= 3.5, "{r}");
}

#[test]
fn reflection_parity_is_preserved() {
    let g = Grid::new(32, TAU, 97, 12.0).unwrap();
    let (u, th) = make_initial(&init_spec(), &g, 1.0).unwrap();
    let mut s = SimState::new(u, th, 1e-3, 1.0).unwrap();
    let p = SolverParams::default();
    for _ in 0..20 {
        let dt = cfl_dt(&s, &p);
        s = step(&s, dt, &p, None).unwrap();
    }
    // u odd and theta even in x: purely imaginary and purely real spectra
    let u_re = s.u.spec().iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    let t_im = s.theta.spec().iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    assert!(u_re <= 1e-10 && t_im <= 1e-10, "{u_re} {t_im}");
}

#[test]
fn positivity_violation_aborts() {
    let g = Grid::new(16, TAU, 65, 12.0).unwrap();
    let th = Field::from_fn(&g, |_, y| -0.8 * (-y * y).exp());
    let s = SimState::new(Field::zeros(&g), th, 0.0, 1.0).unwrap();
    let e = step(&s, 1e-4, &SolverParams::default(), None).unwrap_err();
    assert!(matches!(e, Error::Positivity { .. }));
}

#[test]
fn nan_aborts() {
    let g = Grid::new(16, TAU, 65, 12.0).unwrap();
    let u = Field::from_fn(&g, |x, y| if x == 0.0 && y > 1.0 && y < 1.2 { f64::NAN } else { 0.0 });
    let s = SimState {
        t: 0.0,
        u,
        theta: Field::zeros(&g),
        v: Field::zeros(&g),
        mu: 0.0,
        nu: 0.0,
        theta_e: 1.0,
    };
    let e = step(&s, 1e-4, &SolverParams::default(), None).unwrap_err();
    assert!(matches!(e, Error::NonFinite(_)));
}

#[test]
fn viscosity_refinement_is_cauchy() {
    let g = Grid::new(32, TAU, 65, 12.0).unwrap();
    let run = |nu: f64| {
        let (u, th) = make_initial(&init_spec(), &g, 1.0).unwrap();
        let mut s = SimState::new(u, th, nu, 1.0).unwrap();
        let p = SolverParams::default();
        for _ in 0..50 {
            s = step(&s, 1e-3, &p, None).unwrap();
        }
        s.u
    };
    let w = Weighting {
        t: 0.05,
        theta_e: 1.0,
    };
    let us: Vec<Field> = [1e-2, 5e-3, 2.5e-3, 1.25e-3].iter().map(|&n| run(n)).collect();
    let d: Vec<f64> = us.windows(2).map(|p| weighted_norm(&p[0].sub(&p[1]), 1.0, w)).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

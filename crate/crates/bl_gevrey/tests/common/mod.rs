#![allow(dead_code)]

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let dp = {
                    let (mut p0, mut p1) = (1.0, z);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (z * p1 - p0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(12);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    0.5 * h * total
}

/// Observed order from errors at successive halvings.
pub fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

use bl_gevrey::aux::{evolve_w, AuxState};
use bl_gevrey::solver::{make_initial, step, InitSpec, SimState, SolverParams};
use bl_gevrey::Grid;

/// Small-data initial description shared by trajectory tests.
pub fn small_data() -> InitSpec {
    InitSpec {
        amplitude: 0.05,
        decay: 5.0,
        epsilon: 1e-3,
        lift_delta: 0.1,
        s: 2.75,
        phase_seed: None,
    }
}

/// Coupled run to `t_end` with fixed `dt`; returns the snapshot at
/// `t_end` and the one a step later.
pub fn trajectory_pair(
    grid: &Grid,
    spec: &InitSpec,
    dt: f64,
    t_end: f64,
) -> ((SimState, AuxState), (SimState, AuxState)) {
    let (u, th) = make_initial(spec, grid, 1.0).unwrap();
    let mut st = SimState::new(u, th, 0.0, 1.0).unwrap();
    let mut aux = AuxState::initial(&st).unwrap();
    let p = SolverParams {
        dt_max: dt,
        ..Default::default()
    };
    let n = (t_end / dt).round() as usize;
    for _ in 0..n {
        let next = step(&st, dt, &p, None).unwrap();
        aux = evolve_w(&aux, &st, &next, dt).unwrap();
        st = next;
    }
    let next = step(&st, dt, &p, None).unwrap();
    let aux1 = evolve_w(&aux, &st, &next, dt).unwrap();
    ((st, aux), (next, aux1))
}

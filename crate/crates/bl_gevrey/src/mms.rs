//! Manufactured solution for convergence studies.
//!
//! `u = e^{-t} sin x * y e^{-y^2}` and `theta = c e^{-t} cos x * e^{-y^2}`
//! satisfy every boundary condition; `v` follows from the constraint in
//! closed form up to one quadrature, and the forcing absorbs the residual
//! of both evolution equations.

use crate::field::Field;
use crate::grid::Grid;

/// Five-point Gauss-Legendre rule on [-1, 1].
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn p(y: f64) -> f64 {
    y * (-y * y).exp()
}
fn p1(y: f64) -> f64 {
    (1.0 - 2.0 * y * y) * (-y * y).exp()
}
fn p2(y: f64) -> f64 {
    (4.0 * y * y * y - 6.0 * y) * (-y * y).exp()
}
fn q(y: f64) -> f64 {
    (-y * y).exp()
}
fn q1(y: f64) -> f64 {
    -2.0 * y * (-y * y).exp()
}
fn q2(y: f64) -> f64 {
    (4.0 * y * y - 2.0) * (-y * y).exp()
}

/// Manufactured problem with temperature amplitude `c`.
#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub c: f64,
    pub theta_e: f64,
}

/// Exact fields and their derivatives at one instant, row-sampled.
struct Sample {
    e: f64,
    c: f64,
    /// `int_0^y p'(s)^2 ds` at every grid row.
    slope_energy: Vec<f64>,
}

impl Manufactured {
    fn sample(&self, grid: &Grid, t: f64) -> Sample {
        let mut slope_energy = vec![0.0; grid.ny()];
        for j in 1..grid.ny() {
            let (a, b) = (grid.y(j - 1), grid.y(j));
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let piece: f64 = GL_X
                .iter()
                .zip(GL_W)
                .map(|(x, w)| w * p1(mid + half * x).powi(2))
                .sum();
            slope_energy[j] = slope_energy[j - 1] + half * piece;
        }
        Sample {
            e: (-t).exp(),
            c: self.c,
            slope_energy,
        }
    }

    fn row_field(grid: &Grid, f: impl Fn(f64, usize) -> f64) -> Field {
        let phys = ndarray::Array2::from_shape_fn((grid.ny(), grid.nx()), |(j, i)| f(grid.x(i), j));
        Field::from_phys(grid, phys).expect("shape built from grid")
    }

    /// Exact `(u, theta, v)` at time `t`.
    pub fn fields(&self, grid: &Grid, t: f64) -> (Field, Field, Field) {
        let s = self.sample(grid, t);
        let y = |j: usize| grid.y(j);
        let u = Self::row_field(grid, |x, j| s.e * x.sin() * p(y(j)));
        let th = Self::row_field(grid, |x, j| s.c * s.e * x.cos() * q(y(j)));
        let v = Self::row_field(grid, |x, j| exact_v(&s, x, y(j), j));
        (u, th, v)
    }

    /// Forcing `(f_u, f_theta)` at time `t` for inviscid tangential transport.
    pub fn forcing(&self, grid: &Grid, t: f64) -> (Field, Field) {
        let s = self.sample(grid, t);
        let te = self.theta_e;
        let fu = Self::row_field(grid, |x, j| {
            let y = grid.y(j);
            let (sx, cx) = (x.sin(), x.cos());
            let u = s.e * sx * p(y);
            let ut = -u;
            let ux = s.e * cx * p(y);
            let uy = s.e * sx * p1(y);
            let uyy = s.e * sx * p2(y);
            let th = s.c * s.e * cx * q(y);
            let v = exact_v(&s, x, y, j);
            ut + u * ux + v * uy - (th + te) * uyy
        });
        let ft = Self::row_field(grid, |x, j| {
            let y = grid.y(j);
            let (sx, cx) = (x.sin(), x.cos());
            let u = s.e * sx * p(y);
            let uy = s.e * sx * p1(y);
            let th = s.c * s.e * cx * q(y);
            let tht = -th;
            let thx = -s.c * s.e * sx * q(y);
            let thy = s.c * s.e * cx * q1(y);
            let thyy = s.c * s.e * cx * q2(y);
            let v = exact_v(&s, x, y, j);
            tht + u * thx + v * thy - (th + te) * thyy - (th + te) * uy * uy
        });
        (fu, ft)
    }
}

fn exact_v(s: &Sample, x: f64, y: f64, j: usize) -> f64 {
    let (sx, cx) = (x.sin(), x.cos());
    s.c * s.e * cx * q1(y) + s.e * s.e * sx * sx * s.slope_energy[j]
        - s.e * cx * 0.5 * (1.0 - (-y * y).exp())
}

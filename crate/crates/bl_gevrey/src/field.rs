//! Real scalar fields on the grid, held simultaneously in physical space and
//! as x-Fourier coefficients per y-row.
//!
//! Coefficients are normalized so that `f(x, y_j) = sum_m c_m(y_j) e^{i xi_m x}`.
//! The Nyquist slot is always zero, so every field is band limited to
//! `|m| < nx/2` and quadratic products are exact after 3/2 padding.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{mode_index, Grid};

#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    phys: Array2<f64>,
    spec: Array2<Complex64>,
}

/// Values that y-stencils can act on.
trait StencilValue:
    Copy
    + Default
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
}
impl StencilValue for f64 {}
impl StencilValue for Complex64 {}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        let (ny, nx) = (grid.ny(), grid.nx());
        Self {
            grid: grid.clone(),
            phys: Array2::zeros((ny, nx)),
            spec: Array2::zeros((ny, nx)),
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.phys.fill(c);
        f.spec.column_mut(0).fill(Complex64::new(c, 0.0));
        f
    }

    /// Projects physical samples onto the resolved spectrum.
    pub fn from_phys(grid: &Grid, phys: Array2<f64>) -> Result<Self> {
        check_shape(grid, phys.dim())?;
        let (ny, nx) = (grid.ny(), grid.nx());
        let mut spec = Array2::<Complex64>::zeros((ny, nx));
        let mut buf = vec![Complex64::default(); nx];
        let scale = 1.0 / nx as f64;
        for j in 0..ny {
            for i in 0..nx {
                buf[i] = Complex64::new(phys[[j, i]], 0.0);
            }
            grid.fft_forward(&mut buf);
            for i in 0..nx {
                spec[[j, i]] = buf[i] * scale;
            }
            spec[[j, nx / 2]] = Complex64::default();
        }
        Ok(Self::from_spec_unchecked(grid, spec))
    }

    /// Builds a field from x-Fourier coefficients, enforcing the reality
    /// condition `c(-xi) = conj(c(xi))`.
    pub fn from_spec(grid: &Grid, mut spec: Array2<Complex64>) -> Result<Self> {
        check_shape(grid, spec.dim())?;
        let nx = grid.nx();
        for mut row in spec.rows_mut() {
            row[0].im = 0.0;
            row[nx / 2] = Complex64::default();
            for j in 1..nx / 2 {
                let avg = 0.5 * (row[j] + row[nx - j].conj());
                row[j] = avg;
                row[nx - j] = avg.conj();
            }
        }
        Ok(Self::from_spec_unchecked(grid, spec))
    }

    /// Reassembles a field from stored samples and coefficients without
    /// recomputing either, so a saved field is restored bit for bit.
    pub fn from_parts(grid: &Grid, phys: Array2<f64>, spec: Array2<Complex64>) -> Result<Self> {
        check_shape(grid, phys.dim())?;
        check_shape(grid, spec.dim())?;
        let back = spec_to_phys(grid, &spec);
        let scale = phys.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let gap = back.iter().zip(&phys).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if !(gap <= 1e-12 * scale) {
            return Err(Error::Domain(format!(
                "samples and coefficients disagree by {gap:e}"
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            phys,
            spec,
        })
    }

    fn from_spec_unchecked(grid: &Grid, spec: Array2<Complex64>) -> Self {
        let phys = spec_to_phys(grid, &spec);
        Self {
            grid: grid.clone(),
            phys,
            spec,
        }
    }

    /// Samples `f(x, y)` on the grid.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let phys = Array2::from_shape_fn((grid.ny(), grid.nx()), |(j, i)| f(grid.x(i), grid.y(j)));
        Self::from_phys(grid, phys).expect("shape built from grid")
    }

    /// Smooth random field, band limited to `|m| <= max_mode`, with y-structure
    /// drawn from `y^q exp(-y^2/2)`, `q = 0..=3`, so it decays at the far field.
    pub fn random_decaying(grid: &Grid, rng: &mut impl Rng, max_mode: usize, x_decay: f64) -> Self {
        let (ny, nx) = (grid.ny(), grid.nx());
        let top = max_mode.min(nx / 2 - 1);
        let mut spec = Array2::<Complex64>::zeros((ny, nx));
        for m in 0..=top {
            let amp = (-x_decay * m as f64).exp();
            let coeffs: Vec<Complex64> = (0..4)
                .map(|_| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * amp
                })
                .collect();
            for j in 0..ny {
                let y = grid.y(j);
                let g = (-0.5 * y * y).exp();
                let mut c = Complex64::default();
                let mut p = 1.0;
                for cq in &coeffs {
                    c += cq * p * g;
                    p *= y;
                }
                spec[[j, m]] = c;
                if m > 0 {
                    spec[[j, nx - m]] = c.conj();
                }
            }
        }
        Self::from_spec(grid, spec).expect("shape built from grid")
    }

    /// Independent uniform samples in `[-1, 1]` at every grid point.
    pub fn random_white(grid: &Grid, rng: &mut impl Rng) -> Self {
        let phys = Array2::from_shape_fn((grid.ny(), grid.nx()), |_| rng.random_range(-1.0..1.0));
        Self::from_phys(grid, phys).expect("shape built from grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn phys(&self) -> &Array2<f64> {
        &self.phys
    }
    pub fn spec(&self) -> &Array2<Complex64> {
        &self.spec
    }
    pub fn into_parts(self) -> (Array2<f64>, Array2<Complex64>) {
        (self.phys, self.spec)
    }

    pub fn max_abs(&self) -> f64 {
        self.phys.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn min(&self) -> f64 {
        self.phys.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
    pub fn is_finite(&self) -> bool {
        self.phys.iter().all(|v| v.is_finite())
    }

    // ---- linear algebra (acts on both representations, no transforms) ----

    pub fn add(&self, other: &Field) -> Field {
        self.lin(1.0, other, 1.0)
    }
    pub fn sub(&self, other: &Field) -> Field {
        self.lin(1.0, other, -1.0)
    }
    pub fn scale(&self, a: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            phys: &self.phys * a,
            spec: self.spec.mapv(|c| c * a),
        }
    }
    /// `a * self + b * other`.
    pub fn lin(&self, a: f64, other: &Field, b: f64) -> Field {
        assert!(self.grid == other.grid, "grid mismatch");
        let phys = &self.phys * a + &other.phys * b;
        let mut spec = self.spec.mapv(|c| c * a);
        spec.zip_mut_with(&other.spec, |s, o| *s += o * b);
        Field {
            grid: self.grid.clone(),
            phys,
            spec,
        }
    }
    /// Sum of many fields.
    pub fn sum<'a>(grid: &Grid, fields: impl IntoIterator<Item = &'a Field>) -> Field {
        let mut acc = Field::zeros(grid);
        for f in fields {
            acc.phys += &f.phys;
            acc.spec += &f.spec;
        }
        acc
    }

    // ---- x-derivatives and Fourier multipliers ----

    /// Applies the Fourier multiplier `m(xi)` row by row.
    pub fn multiplier(&self, m: impl Fn(f64) -> f64) -> Field {
        let w: Vec<f64> = self.grid.wavenumbers().iter().map(|&xi| m(xi)).collect();
        self.multiplier_table(&w)
    }

    /// Applies a multiplier given by its value at each FFT slot.
    pub fn multiplier_table(&self, w: &[f64]) -> Field {
        let mut spec = self.spec.clone();
        for mut row in spec.rows_mut() {
            for (c, &wi) in row.iter_mut().zip(w) {
                *c *= wi;
            }
        }
        Field::from_spec_unchecked(&self.grid, spec)
    }

    /// Spectral x-derivative.
    pub fn dx(&self) -> Field {
        let nx = self.grid.nx();
        let mut spec = self.spec.clone();
        for mut row in spec.rows_mut() {
            for j in 0..nx {
                row[j] *= Complex64::new(0.0, self.grid.xi(j));
            }
            row[nx / 2] = Complex64::default();
        }
        Field::from_spec_unchecked(&self.grid, spec)
    }

    // ---- y-derivatives (second-order stencils, one-sided at the ends) ----

    pub fn dy(&self) -> Field {
        let h = self.grid.dy();
        self.y_stencil(|src, out| d1(src, out, h))
    }
    pub fn dyy(&self) -> Field {
        let h = self.grid.dy();
        self.y_stencil(|src, out| d2(src, out, h))
    }
    pub fn dyyy(&self) -> Field {
        let h = self.grid.dy();
        self.y_stencil(|src, out| d3(src, out, h))
    }
    /// `l`-th y-derivative, `l <= 3`.
    pub fn dy_n(&self, l: usize) -> Field {
        match l {
            0 => self.clone(),
            1 => self.dy(),
            2 => self.dyy(),
            3 => self.dyyy(),
            _ => panic!("y-derivative order {l} not supported"),
        }
    }

    /// Cumulative trapezoid integral from the wall: `int_0^y f`.
    pub fn cumulative_y(&self) -> Field {
        let h = self.grid.dy();
        self.y_stencil(|src, out| cumtrapz(src, out, h))
    }

    fn y_stencil(&self, op: impl Fn(&Col, &mut ColMut)) -> Field {
        Field {
            grid: self.grid.clone(),
            phys: apply_columns(&self.phys, &op),
            spec: apply_columns(&self.spec, &op),
        }
    }

    // ---- products ----

    /// Dealiased pointwise product (3/2 zero padding in x).
    pub fn mul(&self, other: &Field) -> Field {
        assert!(self.grid == other.grid, "grid mismatch");
        let a = self.padded(None);
        let b = other.padded(None);
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Field::from_padded(&self.grid, &prod)
    }

    /// Fallible product for callers that want an error instead of a panic.
    pub fn try_mul(&self, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.mul(other))
    }

    /// Physical values on the padded x-grid after applying an optional
    /// multiplier table; row-major `(ny, 3nx/2)`.
    pub(crate) fn padded(&self, w: Option<&[f64]>) -> Vec<f64> {
        let (ny, nx, np) = (self.grid.ny(), self.grid.nx(), self.grid.npad());
        let mut out = vec![0.0; ny * np];
        let mut buf = vec![Complex64::default(); np];
        for j in 0..ny {
            buf.fill(Complex64::default());
            let row = self.spec.row(j);
            let mut any = false;
            for s in 0..nx {
                if s == nx / 2 {
                    continue;
                }
                let c = match w {
                    Some(w) => row[s] * w[s],
                    None => row[s],
                };
                if c.re != 0.0 || c.im != 0.0 {
                    any = true;
                }
                let m = mode_index(s, nx);
                let dst = if m >= 0 { m as usize } else { (np as i64 + m) as usize };
                buf[dst] = c;
            }
            if !any {
                continue;
            }
            self.grid.fft_inverse_pad(&mut buf);
            for (o, b) in out[j * np..(j + 1) * np].iter_mut().zip(&buf) {
                *o = b.re;
            }
        }
        out
    }

    /// Inverse of [`Field::padded`]: transform padded samples and truncate.
    pub(crate) fn from_padded(grid: &Grid, vals: &[f64]) -> Field {
        let (ny, nx, np) = (grid.ny(), grid.nx(), grid.npad());
        let mut spec = Array2::<Complex64>::zeros((ny, nx));
        let mut buf = vec![Complex64::default(); np];
        let scale = 1.0 / np as f64;
        for j in 0..ny {
            let row = &vals[j * np..(j + 1) * np];
            if row.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (b, &v) in buf.iter_mut().zip(row) {
                *b = Complex64::new(v, 0.0);
            }
            grid.fft_forward_pad(&mut buf);
            for s in 0..nx {
                if s == nx / 2 {
                    continue;
                }
                let m = mode_index(s, nx);
                let src = if m >= 0 { m as usize } else { (np as i64 + m) as usize };
                spec[[j, s]] = buf[src] * scale;
            }
            spec[[j, 0]].im = 0.0;
        }
        Field::from_spec_unchecked(grid, spec)
    }

    /// Overwrites a physical row and refreshes its coefficients.
    pub fn set_row(&mut self, j: usize, values: &[f64]) {
        let nx = self.grid.nx();
        assert_eq!(values.len(), nx);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.fft_forward(&mut buf);
        let scale = 1.0 / nx as f64;
        for i in 0..nx {
            self.spec[[j, i]] = buf[i] * scale;
        }
        self.spec[[j, nx / 2]] = Complex64::default();
        self.spec[[j, 0]].im = 0.0;
        let mut row: Vec<Complex64> = self.spec.row(j).to_vec();
        self.grid.fft_inverse(&mut row);
        for i in 0..nx {
            self.phys[[j, i]] = row[i].re;
        }
    }

    /// Sets row `j` to `sum c_k row_k` in both representations.
    pub fn set_row_combination(&mut self, j: usize, terms: &[(usize, f64)]) {
        let nx = self.grid.nx();
        let mut p = vec![0.0; nx];
        let mut s = vec![Complex64::default(); nx];
        for &(k, c) in terms {
            for i in 0..nx {
                p[i] += c * self.phys[[k, i]];
                s[i] += self.spec[[k, i]] * c;
            }
        }
        for i in 0..nx {
            self.phys[[j, i]] = p[i];
            self.spec[[j, i]] = s[i];
        }
    }

    /// Subtracts the wall row from every row.
    pub fn minus_wall_row(&self) -> Field {
        let mut out = self.clone();
        let p0 = self.phys.row(0).to_owned();
        let s0 = self.spec.row(0).to_owned();
        for mut r in out.phys.rows_mut() {
            r -= &p0;
        }
        for mut r in out.spec.rows_mut() {
            r -= &s0;
        }
        out
    }

    /// Row `j` of the physical values.
    pub fn row(&self, j: usize) -> Vec<f64> {
        self.phys.row(j).to_vec()
    }

    /// Replaces physical values wholesale (coefficients recomputed).
    pub fn with_phys(&self, phys: Array2<f64>) -> Result<Field> {
        Field::from_phys(&self.grid, phys)
    }
}

type Col = [f64];
type ColMut = [f64];

fn check_shape(grid: &Grid, dim: (usize, usize)) -> Result<()> {
    if dim != (grid.ny(), grid.nx()) {
        return Err(Error::Config(format!(
            "array shape {:?} does not match grid ({}, {})",
            dim,
            grid.ny(),
            grid.nx()
        )));
    }
    Ok(())
}

fn spec_to_phys(grid: &Grid, spec: &Array2<Complex64>) -> Array2<f64> {
    let (ny, nx) = (grid.ny(), grid.nx());
    let mut phys = Array2::zeros((ny, nx));
    let mut buf = vec![Complex64::default(); nx];
    for j in 0..ny {
        let row = spec.row(j);
        if row.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
            continue;
        }
        for i in 0..nx {
            buf[i] = row[i];
        }
        grid.fft_inverse(&mut buf);
        for i in 0..nx {
            phys[[j, i]] = buf[i].re;
        }
    }
    phys
}

/// Applies a column operator to every x-column of a (ny, nx) array. The
/// operator sees contiguous real buffers; complex arrays are split into
/// real and imaginary parts.
fn apply_columns<T: StencilValue + SplitParts>(
    a: &Array2<T>,
    op: &impl Fn(&Col, &mut ColMut),
) -> Array2<T> {
    let (ny, nx) = a.dim();
    let mut out = Array2::from_elem((ny, nx), T::default());
    let mut src = vec![0.0; ny];
    let mut dst = vec![0.0; ny];
    for part in 0..T::PARTS {
        for i in 0..nx {
            for j in 0..ny {
                src[j] = a[[j, i]].part(part);
            }
            op(&src, &mut dst);
            for j in 0..ny {
                out[[j, i]].set_part(part, dst[j]);
            }
        }
    }
    out
}

trait SplitParts {
    const PARTS: usize;
    fn part(&self, p: usize) -> f64;
    fn set_part(&mut self, p: usize, v: f64);
}
impl SplitParts for f64 {
    const PARTS: usize = 1;
    fn part(&self, _p: usize) -> f64 {
        *self
    }
    fn set_part(&mut self, _p: usize, v: f64) {
        *self = v;
    }
}
impl SplitParts for Complex64 {
    const PARTS: usize = 2;
    fn part(&self, p: usize) -> f64 {
        if p == 0 {
            self.re
        } else {
            self.im
        }
    }
    fn set_part(&mut self, p: usize, v: f64) {
        if p == 0 {
            self.re = v
        } else {
            self.im = v
        }
    }
}

/// First derivative, centered inside and second-order one-sided at the ends.
pub fn d1(f: &[f64], out: &mut [f64], h: f64) {
    let n = f.len();
    let c = 0.5 / h;
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * c;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - f[j - 1]) * c;
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * c;
}

/// Second derivative, second order everywhere.
pub fn d2(f: &[f64], out: &mut [f64], h: f64) {
    let n = f.len();
    let c = 1.0 / (h * h);
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * c;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) * c;
    }
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * c;
}

/// Third derivative, second order everywhere.
pub fn d3(f: &[f64], out: &mut [f64], h: f64) {
    let n = f.len();
    let c = 0.5 / (h * h * h);
    let fwd = |j: usize| {
        (-5.0 * f[j] + 18.0 * f[j + 1] - 24.0 * f[j + 2] + 14.0 * f[j + 3] - 3.0 * f[j + 4]) * c
    };
    let bwd = |j: usize| {
        (5.0 * f[j] - 18.0 * f[j - 1] + 24.0 * f[j - 2] - 14.0 * f[j - 3] + 3.0 * f[j - 4]) * c
    };
    out[0] = fwd(0);
    out[1] = fwd(1);
    for j in 2..n - 2 {
        out[j] = (f[j + 2] - 2.0 * f[j + 1] + 2.0 * f[j - 1] - f[j - 2]) * c;
    }
    out[n - 2] = bwd(n - 2);
    out[n - 1] = bwd(n - 1);
}

/// Cumulative trapezoid rule starting from zero at the wall.
pub fn cumtrapz(f: &[f64], out: &mut [f64], h: f64) {
    out[0] = 0.0;
    for j in 1..f.len() {
        out[j] = out[j - 1] + 0.5 * h * (f[j - 1] + f[j]);
    }
}

//! Tensor grid: a periodic x-direction resolved by FFT and a uniform
//! finite-difference grid on the truncated half-line `0 <= y <= ymax`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dyadic::{make_partition, DyadicPartition};
use crate::error::{Error, Result};

/// Smallest admissible x resolution.
pub const MIN_NX: usize = 16;
/// Smallest admissible y resolution.
pub const MIN_NY: usize = 33;

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
}

struct Inner {
    nx: usize,
    ny: usize,
    lx: f64,
    ymax: f64,
    dy: f64,
    xi: Vec<f64>,
    plans: Plans,
    partition: OnceLock<Arc<DyadicPartition>>,
}

/// Cheaply clonable handle to the discretization.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<Inner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx())
            .field("lx", &self.lx())
            .field("ny", &self.ny())
            .field("ymax", &self.ymax())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.nx() == other.nx()
                && self.ny() == other.ny()
                && self.lx() == other.lx()
                && self.ymax() == other.ymax())
    }
}

impl Grid {
    /// Builds a grid with `nx` x-points (power of two) on a period `lx` and
    /// `ny` y-points spanning `[0, ymax]`.
    pub fn new(nx: usize, lx: f64, ny: usize, ymax: f64) -> Result<Self> {
        if nx < MIN_NX || !nx.is_power_of_two() {
            return Err(Error::Config(format!(
                "nx must be a power of two >= {MIN_NX}, got {nx}"
            )));
        }
        if ny < MIN_NY {
            return Err(Error::Config(format!("ny must be >= {MIN_NY}, got {ny}")));
        }
        if !(lx.is_finite() && lx > 0.0) || !(ymax.is_finite() && ymax > 0.0) {
            return Err(Error::Config("lx and ymax must be positive".into()));
        }
        let xi = (0..nx)
            .map(|j| {
                let m = mode_index(j, nx);
                2.0 * std::f64::consts::PI * m as f64 / lx
            })
            .collect();
        let mut planner = FftPlanner::new();
        let npad = 3 * nx / 2;
        let plans = Plans {
            fwd: planner.plan_fft_forward(nx),
            inv: planner.plan_fft_inverse(nx),
            fwd_pad: planner.plan_fft_forward(npad),
            inv_pad: planner.plan_fft_inverse(npad),
        };
        Ok(Self {
            inner: Arc::new(Inner {
                nx,
                ny,
                lx,
                ymax,
                dy: ymax / (ny - 1) as f64,
                xi,
                plans,
                partition: OnceLock::new(),
            }),
        })
    }

    pub fn nx(&self) -> usize {
        self.inner.nx
    }
    pub fn ny(&self) -> usize {
        self.inner.ny
    }
    pub fn lx(&self) -> f64 {
        self.inner.lx
    }
    pub fn ymax(&self) -> f64 {
        self.inner.ymax
    }
    pub fn dy(&self) -> f64 {
        self.inner.dy
    }
    pub fn dx(&self) -> f64 {
        self.inner.lx / self.inner.nx as f64
    }
    /// Padded length used for dealiased products.
    pub fn npad(&self) -> usize {
        3 * self.inner.nx / 2
    }

    /// Angular frequency of FFT slot `j`; the Nyquist slot is reported with
    /// its negative frequency but is never populated.
    pub fn xi(&self, j: usize) -> f64 {
        self.inner.xi[j]
    }
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.xi
    }
    /// True for the unpopulated Nyquist slot.
    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.inner.nx / 2
    }
    /// Largest resolved |xi|.
    pub fn xi_max(&self) -> f64 {
        2.0 * std::f64::consts::PI * (self.inner.nx / 2 - 1) as f64 / self.inner.lx
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.inner.dy
    }

    /// Trapezoid quadrature weight of row `j`.
    pub fn y_weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.inner.ny {
            0.5 * self.inner.dy
        } else {
            self.inner.dy
        }
    }

    /// Littlewood-Paley partition sampled on this grid.
    pub fn partition(&self) -> Arc<DyadicPartition> {
        self.inner
            .partition
            .get_or_init(|| Arc::new(make_partition(self).expect("grid validated at construction")))
            .clone()
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.inner.plans.fwd.process(buf);
    }
    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.inner.plans.inv.process(buf);
    }
    pub(crate) fn fft_forward_pad(&self, buf: &mut [Complex64]) {
        self.inner.plans.fwd_pad.process(buf);
    }
    pub(crate) fn fft_inverse_pad(&self, buf: &mut [Complex64]) {
        self.inner.plans.inv_pad.process(buf);
    }

    /// Checks that two grids describe the same discretization.
    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Signed mode number stored in FFT slot `j`.
pub fn mode_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

//! Littlewood-Paley blocks and Bony paraproducts in the x-direction.
//!
//! Blocks are indexed from `-1` (the low-frequency ball) upwards. The
//! low-frequency cutoff is `S_k = sum_{j <= k-1} Delta_j`, which is
//! `chi(2^{-k} xi)` for `k >= 0` and vanishes for `k <= -1`. With that
//! convention `f g = T_f g + T_g f + R(f, g)` holds exactly on the grid.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

const SMALL: f64 = 3.0 / 4.0;
const LARGE: f64 = 4.0 / 3.0;

fn transition(t: f64) -> f64 {
    let e = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        e(t) / (e(t) + e(1.0 - t))
    }
}

/// Smooth radial cutoff: 1 on `|xi| <= 3/4`, 0 on `|xi| >= 4/3`.
pub fn chi(xi: f64) -> f64 {
    transition((LARGE - xi.abs()) / (LARGE - SMALL))
}

/// Annulus bump `chi(xi/2) - chi(xi)`, supported in `3/4 <= |xi| <= 8/3`.
pub fn phi(xi: f64) -> f64 {
    chi(0.5 * xi) - chi(xi)
}

/// Block symbols sampled at every FFT slot of a grid.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    pub chi_samples: Vec<f64>,
    pub phi_samples_per_block: Vec<Vec<f64>>,
    pub k_max: i32,
}

impl DyadicPartition {
    /// Symbol of `Delta_k` at each slot; zero outside `-1..=k_max`.
    pub fn block_symbol(&self, k: i32) -> Vec<f64> {
        match k {
            k if k <= -2 || k > self.k_max => vec![0.0; self.chi_samples.len()],
            -1 => self.chi_samples.clone(),
            k => self.phi_samples_per_block[k as usize].clone(),
        }
    }

    /// Symbol of `S_k` at each slot.
    pub fn cutoff_symbol(&self, k: i32) -> Vec<f64> {
        let n = self.chi_samples.len();
        let mut acc = vec![0.0; n];
        for j in -1..k.min(self.k_max + 1) {
            let b = self.block_ref(j);
            for (a, v) in acc.iter_mut().zip(b) {
                *a += v;
            }
        }
        acc
    }

    fn block_ref(&self, k: i32) -> &[f64] {
        if k == -1 {
            &self.chi_samples
        } else {
            &self.phi_samples_per_block[k as usize]
        }
    }

    /// Number of nontrivial blocks, `k = -1..=k_max`.
    pub fn n_blocks(&self) -> usize {
        (self.k_max + 2) as usize
    }
}

/// Samples the partition of unity on the grid frequencies.
pub fn make_partition(grid: &Grid) -> Result<DyadicPartition> {
    let nx = grid.nx();
    let xi: Vec<f64> = (0..nx)
        .map(|j| if grid.is_nyquist(j) { 0.0 } else { grid.xi(j).abs() })
        .collect();
    let smallest = grid.xi(1).abs();
    if smallest >= 8.0 / 3.0 {
        return Err(Error::Config(format!(
            "lowest frequency {smallest} leaves block 0 empty; increase lx"
        )));
    }
    let chi_samples: Vec<f64> = xi.iter().map(|&x| chi(x)).collect();
    let top = grid.xi_max();
    let mut phi_samples_per_block = Vec::new();
    let mut k = 0;
    while SMALL * 2f64.powi(k) < top {
        let scale = 2f64.powi(-k);
        phi_samples_per_block.push(xi.iter().map(|&x| phi(scale * x)).collect::<Vec<_>>());
        k += 1;
    }
    // drop trailing blocks that no grid frequency reaches
    while phi_samples_per_block
        .last()
        .is_some_and(|b: &Vec<f64>| b.iter().all(|&v| v == 0.0))
    {
        phi_samples_per_block.pop();
    }
    let k_max = phi_samples_per_block.len() as i32 - 1;
    Ok(DyadicPartition {
        chi_samples,
        phi_samples_per_block,
        k_max,
    })
}

/// `Delta_k f`.
pub fn dyadic_block(f: &Field, k: i32) -> Field {
    let p = f.grid().partition();
    f.multiplier_table(&p.block_symbol(k))
}

/// `S_k f`.
pub fn low_freq_cutoff(f: &Field, k: i32) -> Field {
    let p = f.grid().partition();
    f.multiplier_table(&p.cutoff_symbol(k))
}

/// All blocks of a field evaluated on the padded x-grid, so products
/// between blocks of two fields need no further transforms.
pub struct PaddedBlocks {
    grid: Grid,
    /// Entry `i` holds block `k = i - 1`.
    blocks: Vec<Vec<f64>>,
}

impl PaddedBlocks {
    pub fn new(f: &Field) -> Self {
        let p = f.grid().partition();
        let blocks = (-1..=p.k_max)
            .map(|k| f.padded(Some(p.block_ref(k))))
            .collect();
        Self {
            grid: f.grid().clone(),
            blocks,
        }
    }

    fn block(&self, k: i32) -> Option<&[f64]> {
        if k < -1 {
            return None;
        }
        self.blocks.get((k + 1) as usize).map(|b| b.as_slice())
    }
}

/// `T_f g = sum_k S_{k-1} f Delta_k g`, from precomputed blocks.
pub fn paraproduct_blocks(f: &PaddedBlocks, g: &PaddedBlocks) -> Field {
    assert!(f.grid == g.grid, "grid mismatch");
    let len = f.blocks[0].len();
    let mut low = vec![0.0; len];
    let mut acc = vec![0.0; len];
    let n = f.blocks.len() as i32;
    // S_{k-1} f = sum_{j <= k-2} Delta_j f
    for k in 1..n - 1 {
        let fj = f.block(k - 2).expect("block in range");
        for (l, v) in low.iter_mut().zip(fj) {
            *l += v;
        }
        let gk = g.block(k).expect("block in range");
        for ((a, l), gv) in acc.iter_mut().zip(&low).zip(gk) {
            *a += l * gv;
        }
    }
    Field::from_padded(&f.grid, &acc)
}

/// `R(f, g) = sum_k Delta_k g (Delta_{k-1} + Delta_k + Delta_{k+1}) f`.
pub fn remainder_blocks(f: &PaddedBlocks, g: &PaddedBlocks) -> Field {
    assert!(f.grid == g.grid, "grid mismatch");
    let len = f.blocks[0].len();
    let mut acc = vec![0.0; len];
    let n = f.blocks.len() as i32;
    let mut near = vec![0.0; len];
    for k in -1..n - 1 {
        near.fill(0.0);
        for kk in k - 1..=k + 1 {
            if let Some(b) = f.block(kk) {
                for (a, v) in near.iter_mut().zip(b) {
                    *a += v;
                }
            }
        }
        let gk = g.block(k).expect("block in range");
        for ((a, l), gv) in acc.iter_mut().zip(&near).zip(gk) {
            *a += l * gv;
        }
    }
    Field::from_padded(&f.grid, &acc)
}

/// `T_f g`.
pub fn paraproduct(f: &Field, g: &Field) -> Result<Field> {
    f.grid().ensure_same(g.grid())?;
    Ok(paraproduct_blocks(&PaddedBlocks::new(f), &PaddedBlocks::new(g)))
}

/// `R(f, g)`.
pub fn remainder(f: &Field, g: &Field) -> Result<Field> {
    f.grid().ensure_same(g.grid())?;
    Ok(remainder_blocks(&PaddedBlocks::new(f), &PaddedBlocks::new(g)))
}

/// L2 adjoint of `g -> T_a g`: `sum_k Delta_k (S_{k-1} a f)`.
pub fn paraproduct_adjoint(a: &Field, f: &Field) -> Result<Field> {
    a.grid().ensure_same(f.grid())?;
    let grid = a.grid();
    let p = grid.partition();
    let fp = f.padded(None);
    let ab = PaddedBlocks::new(a);
    let mut low = vec![0.0; fp.len()];
    let mut out = Field::zeros(grid);
    for k in 1..=p.k_max {
        for (l, v) in low.iter_mut().zip(ab.block(k - 2).expect("block in range")) {
            *l += v;
        }
        let prod: Vec<f64> = low.iter().zip(&fp).map(|(x, y)| x * y).collect();
        let piece = Field::from_padded(grid, &prod).multiplier_table(p.block_ref(k));
        out = out.add(&piece);
    }
    Ok(out)
}

/// Parameters of the empirical constant extraction.
#[derive(Clone, Copy, Debug)]
pub struct CommutatorParams {
    /// Target regularity `s`.
    pub s: f64,
    /// Coefficient regularity `sigma`.
    pub sigma: f64,
    /// Gevrey radius `delta - gamma mu`; zero disables the lift.
    pub radius: f64,
}

/// One left-side / right-side comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioEntry {
    pub name: &'static str,
    pub ratio: f64,
    pub inconsistent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorReport {
    pub entries: Vec<RatioEntry>,
}

impl CommutatorReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.ratio)
    }
    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.ratio.is_finite() && !e.inconsistent)
    }
}

/// Per-row `H^s_x` norms of a field.
pub fn row_norms(f: &Field, s: f64) -> Vec<f64> {
    let g = f.grid();
    let w: Vec<f64> = g
        .wavenumbers()
        .iter()
        .map(|&xi| (1.0 + xi * xi).powf(s))
        .collect();
    f.spec()
        .rows()
        .into_iter()
        .map(|row| {
            let sum: f64 = row.iter().zip(&w).map(|(c, wi)| c.norm_sqr() * wi).sum();
            (g.lx() * sum).sqrt()
        })
        .collect()
}

fn lift(f: &Field, radius: f64) -> Field {
    if radius == 0.0 {
        return f.clone();
    }
    f.multiplier(|xi| (radius * (1.0 + xi * xi).powf(0.25)).exp())
}

/// Evaluates the paraproduct, remainder and commutator bounds row by row
/// and returns the worst ratio of left to right side for each. The second
/// coefficient of the two-operator commutators is `b = d_x a`.
pub fn commutator_suite(a: &Field, f: &Field, params: CommutatorParams) -> Result<CommutatorReport> {
    a.grid().ensure_same(f.grid())?;
    let CommutatorParams { s, sigma, radius } = params;
    let b = a.dx();
    let ab = a.mul(&b);
    let pa = PaddedBlocks::new(a);
    let pb = PaddedBlocks::new(&b);
    let pf = PaddedBlocks::new(f);

    let ta_f = paraproduct_blocks(&pa, &pf);
    let tb_f = paraproduct_blocks(&pb, &pf);
    let ta_tb_f = paraproduct(a, &tb_f)?;
    let tb_ta_f = paraproduct(&b, &ta_f)?;
    let tab_f = paraproduct(&ab, f)?;
    let adj = paraproduct_adjoint(a, f)?;
    let rem = remainder_blocks(&pa, &pf);
    let js = |xi: f64| (1.0 + xi * xi).powf(0.5 * s);
    let mult_comm = paraproduct(a, &f.multiplier(js))?.sub(&ta_f.multiplier(js));
    let twisted = lift(&paraproduct(a, &f.dx())?, radius)
        .sub(&paraproduct(a, &lift(f, radius).dx())?);

    let la = row_norms(&lift(a, radius), sigma);
    let lb = row_norms(&lift(&b, radius), sigma);
    let lf_s = row_norms(&lift(f, radius), s);
    let lf_sm1 = row_norms(&lift(f, radius), s - 1.0);
    let lf_sh = row_norms(&lift(f, radius), s + 0.5);

    let lhs = |g: &Field, reg: f64| row_norms(&lift(g, radius), reg);
    let mut entries = Vec::new();
    let mut push = |name: &'static str, lhs: Vec<f64>, rhs: Vec<f64>| {
        entries.push(worst_ratio(name, &lhs, &rhs));
    };
    push("paraproduct", lhs(&ta_f, s), mul_rows(&[&la, &lf_s]));
    push("adjoint", lhs(&adj, s), mul_rows(&[&la, &lf_s]));
    push("remainder", lhs(&rem, s), mul_rows(&[&la, &lf_s]));
    push(
        "product_commutator",
        lhs(&ta_tb_f.sub(&tab_f), s),
        mul_rows(&[&la, &lb, &lf_sm1]),
    );
    push("multiplier_commutator", lhs(&mult_comm, 0.0), mul_rows(&[&la, &lf_sm1]));
    push("adjoint_difference", lhs(&ta_f.sub(&adj), s), mul_rows(&[&la, &lf_sm1]));
    push(
        "paraproduct_commutator",
        lhs(&ta_tb_f.sub(&tb_ta_f), s),
        mul_rows(&[&la, &lb, &lf_sm1]),
    );
    let twisted_rhs: Vec<f64> = mul_rows(&[&la, &lf_sh]).iter().map(|v| v * radius).collect();
    push("phase_commutator", row_norms(&twisted, s), twisted_rhs);
    Ok(CommutatorReport { entries })
}

fn mul_rows(parts: &[&Vec<f64>]) -> Vec<f64> {
    let n = parts[0].len();
    (0..n).map(|j| parts.iter().map(|p| p[j]).product()).collect()
}

fn worst_ratio(name: &'static str, lhs: &[f64], rhs: &[f64]) -> RatioEntry {
    let scale = rhs.iter().fold(0.0f64, |m, v| m.max(*v));
    let lscale = lhs.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut ratio: f64 = 0.0;
    let mut inconsistent = false;
    for (l, r) in lhs.iter().zip(rhs) {
        if *r > 1e-12 * scale && *r > 0.0 {
            ratio = ratio.max(l / r);
        } else if *l > 1e-10 * lscale.max(1e-300) && *l > 1e-14 {
            inconsistent = true;
        }
    }
    RatioEntry {
        name,
        ratio,
        inconsistent,
    }
}

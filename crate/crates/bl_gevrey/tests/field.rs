use bl_gevrey::{Field, Grid};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[test]
fn grid_validation() {
    assert!(Grid::new(24, TAU, 65, 12.0).is_err());
    assert!(Grid::new(8, TAU, 65, 12.0).is_err());
    assert!(Grid::new(16, TAU, 32, 12.0).is_err());
    assert!(Grid::new(16, -1.0, 65, 12.0).is_err());
    let g = Grid::new(16, TAU, 65, 12.0).unwrap();
    assert_eq!(g.dy(), 12.0 / 64.0);
    assert_eq!(g.npad(), 24);
    let other = Grid::new(32, TAU, 65, 12.0).unwrap();
    assert!(g.ensure_same(&other).is_err());
}

#[test]
fn representations_agree() {
    let g = Grid::new(32, TAU, 33, 4.0).unwrap();
    let f = Field::from_fn(&g, |x, y| (2.0 * x).sin() * y + (5.0 * x).cos() - 0.5);
    let again = Field::from_phys(&g, f.phys().clone()).unwrap();
    for (a, b) in f.spec().iter().zip(again.spec()) {
        assert!((a - b).norm() < 1e-14);
    }
    let nx = g.nx();
    for row in f.spec().rows() {
        assert_eq!(row[nx / 2], Complex64::new(0.0, 0.0));
        for j in 1..nx / 2 {
            assert!((row[j] - row[nx - j].conj()).norm() < 1e-15);
        }
    }
}

#[test]
fn nyquist_is_projected_out() {
    let g = Grid::new(16, TAU, 33, 4.0).unwrap();
    let f = Field::from_fn(&g, |x, _| (8.0 * x).cos());
    assert!(f.max_abs() < 1e-14);
}

#[test]
fn spectral_x_derivative() {
    let g = Grid::new(64, TAU, 33, 4.0).unwrap();
    let f = Field::from_fn(&g, |x, y| (x.sin()).exp() * (1.0 + y));
    let d = f.dx();
    let exact = Field::from_fn(&g, |x, y| x.cos() * (x.sin()).exp() * (1.0 + y));
    assert!(d.sub(&exact).max_abs() < 1e-10);
}

fn order_of(errs: &[f64]) -> f64 {
    (errs[0] / errs[1]).log2()
}

#[test]
fn y_stencils_are_second_order() {
    let profile = |y: f64| (0.7 * y).sin() + y * y * 0.1;
    let exact = [
        |y: f64| 0.7 * (0.7 * y).cos() + 0.2 * y,
        |y: f64| -0.49 * (0.7 * y).sin() + 0.2,
        |y: f64| -0.343 * (0.7 * y).cos(),
    ];
    let mut errs = vec![vec![]; 3];
    for ny in [65, 129] {
        let g = Grid::new(16, TAU, ny, 4.0).unwrap();
        let f = Field::from_fn(&g, |_, y| profile(y));
        for l in 0..3 {
            let d = f.dy_n(l + 1);
            let e = (0..ny)
                .map(|j| (d.phys()[[j, 0]] - exact[l](g.y(j))).abs())
                .fold(0.0, f64::max);
            errs[l].push(e);
        }
    }
    for l in 0..3 {
        assert!(order_of(&errs[l]) > 1.9, "order {} for d{}", order_of(&errs[l]), l + 1);
    }
}

#[test]
fn cumulative_integral() {
    let g = Grid::new(16, TAU, 257, 4.0).unwrap();
    let f = Field::from_fn(&g, |x, y| x.cos() * y.cos());
    let i = f.cumulative_y();
    let exact = Field::from_fn(&g, |x, y| x.cos() * y.sin());
    assert!(i.sub(&exact).max_abs() < 1e-4);
    assert!(i.phys().row(0).iter().all(|&v| v == 0.0));
}

#[test]
fn dealiased_product_is_exact_for_band_limited_fields() {
    let g = Grid::new(32, TAU, 33, 4.0).unwrap();
    let a = Field::from_fn(&g, |x, y| (7.0 * x).cos() + y * (3.0 * x).sin());
    let b = Field::from_fn(&g, |x, _| (6.0 * x).sin() + 0.5);
    let prod = a.mul(&b);
    let exact = Field::from_fn(&g, |x, y| ((7.0 * x).cos() + y * (3.0 * x).sin()) * ((6.0 * x).sin() + 0.5));
    assert!(prod.sub(&exact).max_abs() < 1e-13);

    // products whose frequencies overflow the grid keep only the resolved part
    let h1 = Field::from_fn(&g, |x, _| (12.0 * x).cos());
    let sq = h1.mul(&h1);
    let expect = Field::constant(&g, 0.5);
    assert!(sq.sub(&expect).max_abs() < 1e-13);
}

#[test]
fn random_fields_are_deterministic() {
    let g = Grid::new(32, TAU, 33, 4.0).unwrap();
    let a = Field::random_decaying(&g, &mut ChaCha8Rng::seed_from_u64(5), 10, 0.1);
    let b = Field::random_decaying(&g, &mut ChaCha8Rng::seed_from_u64(5), 10, 0.1);
    assert_eq!(a.phys(), b.phys());
    assert!(a.max_abs() > 0.0);
}

#[test]
fn set_row_refreshes_spectrum() {
    let g = Grid::new(16, TAU, 33, 4.0).unwrap();
    let mut f = Field::zeros(&g);
    let vals: Vec<f64> = (0..16).map(|i| (g.x(i)).cos()).collect();
    f.set_row(3, &vals);
    assert!((f.spec()[[3, 1]].re - 0.5).abs() < 1e-15);
    assert!((f.phys()[[3, 0]] - 1.0).abs() < 1e-15);
}

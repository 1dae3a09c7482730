use approx::assert_relative_eq;
use bl_gevrey::dyadic::dyadic_block;
use bl_gevrey::gevrey::{
    accumulate_time_norm, gevrey_lift, gevrey_unlift, hardy_ratio, phase_symbol, sobolev_norm,
    sup_bound_sides, weight, weight_dt, weight_dy, weighted_inner, weighted_norm, NormSpec,
    PhaseState, TimeAccumulator, TimeExponent, Weighting,
};
use bl_gevrey::{Error, Field, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU: f64 = 2.0 * std::f64::consts::PI;
const W0: Weighting = Weighting {
    t: 0.0,
    theta_e: 1.0,
};

fn grid(nx: usize, ny: usize) -> Grid {
    Grid::new(nx, TAU, ny, 12.0).unwrap()
}

#[test]
fn weight_values() {
    assert_eq!(weight(0.0, 0.0, 1.0).unwrap(), 0.0);
    assert_eq!(weight(0.0, 4.0, 1.0).unwrap(), 1.0);
    assert!(matches!(weight(-1.0, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(weight(0.0, -1.0, 1.0), Err(Error::Domain(_))));
    assert!(weight(0.0, 1.0, 0.0).is_err());
}

#[test]
fn weight_identity_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let t = rng.random_range(0.0..10.0);
        let y = rng.random_range(0.0..20.0);
        let te = rng.random_range(0.1..5.0);
        let r = weight_dt(t, y, te) + 4.0 * te * weight_dy(t, y, te).powi(2);
        assert!(r.abs() <= 1e-12, "{r}");
    }
}

#[test]
fn weight_partials_match_finite_differences() {
    let (t, y, te) = (0.7, 3.1, 1.3);
    let h = 1e-6;
    let ft = (weight(t + h, y, te).unwrap() - weight(t - h, y, te).unwrap()) / (2.0 * h);
    let fy = (weight(t, y + h, te).unwrap() - weight(t, y - h, te).unwrap()) / (2.0 * h);
    assert_relative_eq!(ft, weight_dt(t, y, te), max_relative = 1e-7);
    assert_relative_eq!(fy, weight_dy(t, y, te), max_relative = 1e-7);
}

#[test]
fn zero_field_norm() {
    let g = grid(16, 65);
    let v = sobolev_norm(&Field::zeros(&g), NormSpec::weighted(2.0, 2), W0).unwrap();
    assert_eq!(v.value, 0.0);
    assert!(!v.decay_warning);
}

#[test]
fn gaussian_norm_matches_quadrature_oracle() {
    let g = grid(16, 2001);
    let f = Field::from_fn(&g, |_, y| (-y * y).exp());
    let v = sobolev_norm(&f, NormSpec::weighted(0.0, 0), W0).unwrap();
    // integral over the half-line of exp(2 Psi - 2 y^2)
    let half_line = 0.5 * (std::f64::consts::PI / (2.0 - 1.0 / 8.0)).sqrt();
    let expect = (TAU * half_line).sqrt();
    assert!((v.value - expect).abs() < 1e-6, "{} vs {}", v.value, expect);
    assert!(!v.decay_warning);
}

#[test]
fn undecayed_field_is_flagged() {
    let g = grid(16, 65);
    let f = Field::from_fn(&g, |_, y| (-0.01 * y).exp());
    assert!(sobolev_norm(&f, NormSpec::weighted(0.0, 0), W0).unwrap().decay_warning);
}

#[test]
fn norm_is_homogeneous_and_monotone_in_s() {
    let g = grid(32, 129);
    let f = Field::from_fn(&g, |x, y| (3.0 * x).sin() * y * (-y * y / 2.0).exp());
    let n1 = weighted_norm(&f, 1.0, W0);
    let n3 = weighted_norm(&f.scale(3.0), 1.0, W0);
    assert_relative_eq!(n3, 3.0 * n1, max_relative = 1e-13);
    let mut prev = 0.0;
    for s in [0.0, 0.5, 1.0, 2.0, 2.75] {
        let n = weighted_norm(&f, s, W0);
        assert!(n >= prev);
        prev = n;
    }
}

#[test]
fn derivative_orders_add() {
    let g = grid(16, 257);
    let f = Field::from_fn(&g, |x, y| x.cos() * (-y * y / 2.0).exp());
    let n0 = weighted_norm(&f, 1.0, W0);
    let n1 = weighted_norm(&f.dy(), 1.0, W0);
    let n2 = weighted_norm(&f.dyy(), 1.0, W0);
    let k2 = sobolev_norm(&f, NormSpec::weighted(1.0, 2), W0).unwrap().value;
    assert_relative_eq!(k2, n0 + n1 + n2, max_relative = 1e-13);
}

#[test]
fn inner_product_matches_direct_quadrature() {
    let g = grid(16, 129);
    let f = Field::from_fn(&g, |x, y| (2.0 * x).cos() * (-y * y / 2.0).exp());
    let h = Field::from_fn(&g, |x, y| ((2.0 * x).cos() + x.sin()) * y * (-y * y / 2.0).exp());
    let s = 1.5;
    let got = weighted_inner(&f, &h, s, W0);
    // only the |xi| = 2 cosine survives: <2>^{2s} * L_x/2 * int e^{2Psi} p q
    let mut q = 0.0;
    for j in 0..g.ny() {
        let y = g.y(j);
        q += g.y_weight(j) * (y * y / 8.0).exp() * y * (-y * y).exp();
    }
    let expect = 5f64.powf(s) * TAU / 2.0 * q;
    assert_relative_eq!(got, expect, max_relative = 1e-12);
}

#[test]
fn phase_values() {
    let p = PhaseState::new(0.1, 1.0);
    assert_relative_eq!(phase_symbol(0.0, &p).unwrap(), 0.1);
    assert_relative_eq!(phase_symbol(3f64.sqrt(), &p).unwrap(), 0.1 * 2f64.sqrt(), max_relative = 1e-15);
    let past = p.with_mu(0.2);
    assert!(matches!(phase_symbol(1.0, &past), Err(Error::PastTStar { .. })));
}

#[test]
fn phase_subadditive_on_grid_pairs() {
    let g = grid(128, 33);
    let p = PhaseState::new(0.1, 1.0).with_mu(0.03);
    for i in 0..g.nx() {
        for j in 0..g.nx() {
            let (xi, eta) = (g.xi(i), g.xi(j));
            let lhs = phase_symbol(xi, &p).unwrap();
            let rhs = phase_symbol(xi - eta, &p).unwrap() + phase_symbol(eta, &p).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }
}

#[test]
fn lift_examples() {
    let g = grid(32, 65);
    let f = Field::from_fn(&g, |x, y| (x.cos() + 0.3 * (5.0 * x).sin()) * (-y * y).exp());
    let zero_radius = PhaseState::new(0.1, 1.0).with_mu(0.1);
    assert!(gevrey_lift(&f, &zero_radius).unwrap().sub(&f).max_abs() < 1e-14);

    let p = PhaseState::new(0.1, 1.0);
    let c = Field::from_fn(&g, |_, y| (-y * y).exp());
    let lc = gevrey_lift(&c, &p).unwrap();
    assert!(lc.sub(&c.scale(0.1f64.exp())).max_abs() < 1e-14);

    let back = gevrey_unlift(&gevrey_lift(&f, &p).unwrap(), &p).unwrap();
    assert!(back.sub(&f).max_abs() < 1e-12);

    let huge = PhaseState::new(200.0, 1.0);
    assert!(matches!(gevrey_lift(&f, &huge), Err(Error::LiftOverflow { .. })));
}

#[test]
fn lift_commutes_with_blocks() {
    let g = grid(64, 33);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = Field::random_decaying(&g, &mut rng, 31, 0.1);
    let p = PhaseState::new(0.2, 1.0);
    for k in -1..5 {
        let a = dyadic_block(&gevrey_lift(&f, &p).unwrap(), k);
        let b = gevrey_lift(&dyadic_block(&f, k), &p).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-12);
    }
}

#[test]
fn sup_bound_holds_on_random_fields() {
    let g = grid(32, 193);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for i in 0..50 {
        let f = Field::random_decaying(&g, &mut rng, 10, 0.3);
        let t = 0.1 * i as f64;
        let w = Weighting { t, theta_e: 1.0 };
        let (lhs, rhs) = sup_bound_sides(&f, 1.5, w);
        assert!(lhs <= 1.01 * rhs, "field {i}: {lhs} > {rhs}");
    }
}

#[test]
fn hardy_constant_is_resolution_stable() {
    let worst = |ny: usize| {
        let g = grid(16, ny);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        (0..20)
            .map(|_| hardy_ratio(&Field::random_decaying(&g, &mut rng, 4, 0.5), W0))
            .fold(0.0, f64::max)
    };
    let (a, b) = (worst(129), worst(257));
    assert!(a.is_finite() && a > 0.0);
    assert!((b / a - 1.0).abs() < 0.05, "{a} {b}");
}

#[test]
fn accumulator_examples() {
    let mut acc = TimeAccumulator::new(TimeExponent::Two);
    for _ in 0..100 {
        acc = accumulate_time_norm(acc, 1.0, 0.01, 1.0).unwrap();
    }
    assert_relative_eq!(acc.value, 1.0, max_relative = 1e-12);

    let mut m = TimeAccumulator::new(TimeExponent::Infinity);
    for v in [0.5, 2.0, 1.0] {
        m = accumulate_time_norm(m, v, 0.1, 1.0).unwrap();
    }
    assert_eq!(m.value, 2.0);

    // mu-dot weight of one, constant norm c on [0, T]
    let (c, t_end, dt) = (0.7, 0.3, 0.001);
    let mut w = TimeAccumulator::new(TimeExponent::Two);
    let steps = (t_end / dt) as usize;
    for _ in 0..steps {
        w = accumulate_time_norm(w, c, dt, 1.0).unwrap();
    }
    assert!((w.value - c * c * t_end).abs() <= c * c * dt);

    assert!(accumulate_time_norm(acc, 1.0, 0.1, -1.0).is_err());
    assert!(accumulate_time_norm(acc, 1.0, 0.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn accumulator_is_nondecreasing(samples in proptest::collection::vec((0.0f64..10.0, 1e-4f64..1.0, 0.0f64..5.0), 1..40)) {
        let mut two = TimeAccumulator::new(TimeExponent::Two);
        let mut inf = TimeAccumulator::new(TimeExponent::Infinity);
        for (n, dt, w) in samples {
            let a = accumulate_time_norm(two, n, dt, w).unwrap();
            let b = accumulate_time_norm(inf, n, dt, w).unwrap();
            prop_assert!(a.value >= two.value);
            prop_assert!(b.value >= inf.value);
            two = a;
            inf = b;
        }
    }
}

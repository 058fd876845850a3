mod common;

use common::oracle::{flat_lr_oracle, flat_oracle, random_metric};
use mmgeo::flat::{flat, flat_l, flat_lr, FlatProblem};
use mmgeo::PointedSpace;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn host(d: &[Vec<f64>], base: usize) -> PointedSpace {
    PointedSpace::from_matrix(d, base).unwrap()
}

fn random_measure(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.6) }).collect()
}

#[test]
fn lr_matches_simplex_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.gen_range(1..=8);
        let d = random_metric(&mut rng, n, 2.0);
        let base = rng.gen_range(0..n);
        let h = host(&d, base);
        let mu = random_measure(&mut rng, n);
        let nu = random_measure(&mut rng, n);
        let l = rng.gen_range(0.1..5.0);
        let r = rng.gen_range(0.05..3.0);
        let got = flat_lr(&FlatProblem { host: &h, mu: &mu, nu: &nu, l, r }).unwrap().value;
        let want = flat_lr_oracle(&d, base, &mu, &nu, l, r);
        assert!((got - want).abs() < 1e-9, "n={n} L={l} r={r}: {got} vs {want}");
    }
}

#[test]
fn flat_matches_oracle_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let n = rng.gen_range(1..=6);
        let d = random_metric(&mut rng, n, 3.0);
        let h = host(&d, 0);
        let mu = random_measure(&mut rng, n);
        let nu = random_measure(&mut rng, n);
        let got = flat(&h, &mu, &nu).unwrap();
        let want = flat_oracle(&d, 0, &mu, &nu);
        assert!((got - want).abs() < 2e-6, "{got} vs {want}");
    }
}

#[test]
fn restriction_example_frozen() {
    // Four quarter atoms on {0,1,2,3}, drop the last one.
    let d: Vec<Vec<f64>> =
        (0..4).map(|i| (0..4).map(|j| (i as f64 - j as f64).abs()).collect()).collect();
    let mu = [0.25; 4];
    let nu = [0.25, 0.25, 0.25, 0.0];
    let oracle = flat_lr_oracle(&d, 0, &mu, &nu, 1.0, 5.0);
    assert!((oracle - 0.25).abs() < 1e-12);
    let h = host(&d, 0);
    let v = flat_lr(&FlatProblem { host: &h, mu: &mu, nu: &nu, l: 1.0, r: 5.0 }).unwrap().value;
    assert!((v - oracle).abs() < 1e-12);
    // A tighter Lipschitz budget and a ball excluding the far atom shrink it.
    let v = flat_lr(&FlatProblem { host: &h, mu: &mu, nu: &nu, l: 0.1, r: 2.5 }).unwrap().value;
    let oracle = flat_lr_oracle(&d, 0, &mu, &nu, 0.1, 2.5);
    assert!((v - oracle).abs() < 1e-12);
    assert_eq!(oracle, 0.0);
}

#[test]
fn far_diracs_oracle_grid() {
    let d = vec![vec![0.0, 10.0], vec![10.0, 0.0]];
    for k in 1..50 {
        let e = k as f64 / 100.0;
        assert!(flat_lr_oracle(&d, 0, &[1.0, 0.0], &[0.0, 1.0], 1.0 / e, 1.0 / e) >= e);
    }
    assert_eq!(flat(&host(&d, 0), &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.5);
}

/// Metric, base and three measures.
type Instance = (Vec<Vec<f64>>, usize, Vec<f64>, Vec<f64>, Vec<f64>);

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..8, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_metric(&mut rng, n, 2.0);
        let base = rng.gen_range(0..n);
        let a = random_measure(&mut rng, n);
        let b = random_measure(&mut rng, n);
        let c = random_measure(&mut rng, n);
        (d, base, a, b, c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_and_monotonicity((d, base, mu, nu, _) in instance(), l in 0.1f64..4.0, f in 1.0f64..3.0, r in 0.1f64..3.0) {
        let h = host(&d, base);
        let v = |l: f64, r: f64| flat_lr(&FlatProblem { host: &h, mu: &mu, nu: &nu, l, r }).unwrap().value;
        let base_v = v(l, r);
        prop_assert!(v(l * f, r) <= f * base_v + 1e-9);
        prop_assert!(v(l * f, r) >= base_v - 1e-9);
        prop_assert!(v(l, r * f) >= base_v - 1e-9);
    }

    #[test]
    fn restriction_bound((d, base, mu, _, _) in instance(), mask in any::<u8>(), l in 0.1f64..4.0, r in 0.1f64..3.0) {
        let h = host(&d, base);
        let n = d.len();
        let keep: Vec<bool> = (0..n).map(|i| i == base || mask >> (i % 8) & 1 == 1).collect();
        let nu: Vec<f64> = (0..n).map(|i| if keep[i] { mu[i] } else { 0.0 }).collect();
        let v = flat_lr(&FlatProblem { host: &h, mu: &mu, nu: &nu, l, r }).unwrap().value;
        let dropped: f64 = (0..n).filter(|&i| !keep[i] && h.within(base, i, r)).map(|i| mu[i]).sum();
        prop_assert!(v <= dropped + 1e-9);
    }

    #[test]
    fn flat_is_symmetric_and_triangular((d, base, a, b, c) in instance()) {
        let h = host(&d, base);
        let ab = flat(&h, &a, &b).unwrap();
        let ba = flat(&h, &b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-6);
        let bc = flat(&h, &b, &c).unwrap();
        let ac = flat(&h, &a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 2e-6);
    }

    #[test]
    fn zero_flat_means_equal((d, base, a, b, _) in instance()) {
        let h = host(&d, base);
        if a != b {
            prop_assert!(flat(&h, &a, &b).unwrap() > 0.0);
            prop_assert!(flat_l(&h, &a, &b, 1.0).unwrap() > 0.0);
        }
    }
}

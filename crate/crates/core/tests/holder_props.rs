use mmgeo::holder::{mcshane_extend, mcshane_extend_vec, solve_constants};
use mmgeo::PointedSpace;
use proptest::prelude::*;

/// Smallest `N` with `(5K²)^n ≤ 2^{N(1−γ)}` by counting up.
fn n_oracle(k: f64, gamma: f64, n: usize) -> u32 {
    let sigma = (5.0 * k * k).powi(n as i32);
    (1u32..).find(|&big_n| sigma <= 2f64.powf(big_n as f64 * (1.0 - gamma)) * (1.0 + 1e-12)).unwrap()
}

#[test]
fn frozen_constants() {
    let c = solve_constants(1.0, 0.5, 1, 1.0).unwrap();
    assert_eq!(c.big_n, 5);
    assert!((c.alpha - 0.535_614_381_022_527_6).abs() < 1e-9);
    let c = solve_constants(1.0, 1e-12, 1, 1.0).unwrap();
    assert_eq!(c.big_n, 3);
    assert!((c.alpha - 0.226_023_968_370_879_4).abs() < 1e-9);
    let c = solve_constants(1.0, 0.5, 2, 1.0).unwrap();
    assert_eq!(c.big_n, 10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn constants_match_oracle(k in 1.0f64..6.0, gamma in 0.01f64..0.95, n in 1usize..4) {
        let c = solve_constants(k, gamma, n, 1.0).unwrap();
        prop_assert_eq!(c.big_n, n_oracle(k, gamma, n));
        prop_assert!(c.alpha >= gamma - 1e-12 && c.alpha < 1.0);
        let lhs = c.sigma * c.l;
        prop_assert!((lhs - c.l.powf(c.alpha)).abs() <= 1e-12 * lhs);
        for i in c.big_m..c.big_m + 10 {
            prop_assert!(c.beta_bound_holds(i));
        }
    }

    #[test]
    fn mcshane_keeps_constant_and_data(
        xs in prop::collection::vec(0.0f64..1.0, 3..14),
        raw in prop::collection::vec(-1.0f64..1.0, 14),
        mask in prop::collection::vec(any::<bool>(), 14),
        alpha in 0.2f64..1.0,
    ) {
        let s = PointedSpace::line(&xs, 0).unwrap();
        let n = xs.len();
        let vals: Vec<Option<f64>> = (0..n).map(|i| (mask[i] || i == 0).then_some(raw[i])).collect();
        // Smallest constant that makes the data Hölder.
        let mut h: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                if let (Some(x), Some(y)) = (vals[a], vals[b]) {
                    let d = s.d(a, b);
                    if d > 0.0 { h = h.max((x - y).abs() / d.powf(alpha)); }
                    else if x != y { return Ok(()); }
                }
            }
        }
        let f = mcshane_extend(&s, &vals, alpha, h).unwrap();
        let lo = vals.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = vals.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        for a in 0..n {
            if let Some(v) = vals[a] { prop_assert_eq!(f[a], v); }
            prop_assert!(f[a] >= lo && f[a] <= hi);
            for b in 0..n {
                prop_assert!((f[a] - f[b]).abs() <= h * s.d(a, b).powf(alpha) * (1.0 + 1e-9) + 1e-12);
            }
        }
    }

    #[test]
    fn vector_extension_is_coordinatewise(xs in prop::collection::vec(0.0f64..1.0, 2..10), seed in 0u64..1000) {
        let s = PointedSpace::line(&xs, 0).unwrap();
        let vals: Vec<Option<Vec<f64>>> = (0..xs.len()).map(|i| (i % 2 == 0).then(|| vec![xs[i], 2.0 * xs[i] + seed as f64])).collect();
        let f = mcshane_extend_vec(&s, &vals, 1.0, 2.0).unwrap();
        let first: Vec<Option<f64>> = vals.iter().map(|v| v.as_ref().map(|v| v[0])).collect();
        let g = mcshane_extend(&s, &first, 1.0, 2.0).unwrap();
        for i in 0..xs.len() {
            prop_assert_eq!(f[i][0], g[i]);
        }
    }
}

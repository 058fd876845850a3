use mmgeo::alignment::{estimate_dstar, Budget};
use mmgeo::space::{rescale, Cloud, Norm};
use mmgeo::tangent::{
    blowup, doubling_inheritance, flatness_scan, generate, model_tangent, FixtureKind, FixtureParams, Gauge,
    ScanParams,
};
use mmgeo::{MeasuredSpace, PointedSpace};
use proptest::prelude::*;

fn cloud_space(pts: &[(f64, f64)], w: &[f64], base: usize) -> MeasuredSpace {
    let pts: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
    let cloud = Cloud::new(2, Norm::Linf, &pts).unwrap();
    MeasuredSpace::new(PointedSpace::from_cloud(cloud, base).unwrap(), w.to_vec()).unwrap()
}

fn arb_space() -> impl Strategy<Value = MeasuredSpace> {
    (2usize..12)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), n),
                prop::collection::vec(0.01f64..1.0, n),
                0..n,
            )
        })
        .prop_map(|(p, w, b)| cloud_space(&p, &w, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rescale_composes(s in arb_space(), u in 0.2f64..3.0, v in 0.2f64..3.0) {
        // Every atom has positive weight, so both radii see mass.
        let lhs = rescale(&rescale(&s, v).unwrap(), u).unwrap();
        let rhs = rescale(&s, u * v).unwrap();
        for i in 0..s.len() {
            prop_assert!((lhs.weight(i) - rhs.weight(i)).abs() <= 1e-12 * rhs.weight(i).max(1.0));
            for j in 0..s.len() {
                let (a, b) = (lhs.space.d(i, j), rhs.space.d(i, j));
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0), "d({i},{j}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn blowups_have_unit_ball_mass(s in arb_space(), k in 0u32..4, start in 0.5f64..4.0) {
        let scales: Vec<f64> = (0..=k).map(|j| start / 2f64.powi(j as i32)).collect();
        let seq = blowup(&s, s.base(), &scales, 2.0).unwrap();
        for b in &seq.blowups {
            prop_assert!((b.ball_mass(b.base(), 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn fixture_blowups_have_unit_ball_mass() {
    for kind in [FixtureKind::Segment, FixtureKind::LinfPlanePatch, FixtureKind::FourCornerCantor] {
        let f = generate(kind, &FixtureParams::default(), 2).unwrap();
        let seq = blowup(&f.space, f.probes[0], &[0.25, 0.125, 0.0625], 1.0).unwrap();
        for s in seq.summary() {
            assert!((s.unit_ball_mass - 1.0).abs() < 1e-12, "{kind:?} at {}", s.scale);
        }
    }
}

#[test]
fn doubling_is_inherited_on_segment_and_plane() {
    for (kind, scales) in [(FixtureKind::Segment, vec![0.125, 0.0625]), (FixtureKind::LinfPlanePatch, vec![0.25, 0.125])] {
        let f = generate(kind, &FixtureParams::default(), 0).unwrap();
        let x = f.probes[f.probes.len() / 2];
        let d = doubling_inheritance(&f.space, x, &scales, 1.0, 0.25, 0.1).unwrap();
        assert!(d.pass, "{kind:?}: {d:?}");
        assert!(d.bracket_max >= 1.0);
    }
}

#[test]
fn model_is_at_distance_zero_from_itself() {
    for gauge in [Gauge::WeightedLinf(vec![1.0, 2.0]), Gauge::Ellipse(vec![1.0, 0.5])] {
        let m = model_tangent(&gauge, 2, 2, 1.5).unwrap();
        let e = estimate_dstar(&m, &m, &Budget::default(), &[]).unwrap();
        assert!(e.lower <= 1e-9 && e.upper <= 1e-9, "{e:?}");
    }
}

#[test]
fn restriction_moves_scores_by_at_most_the_dropped_mass() {
    let full = generate(FixtureKind::ScatteredDustCurve, &FixtureParams { dust_mass: Some(0.05), ..Default::default() }, 4).unwrap();
    let curve: Vec<usize> = (0..1001).collect();
    let part = mmgeo::space::restrict(&full.space, &curve).unwrap();
    let x = full.probes[3];
    let (r, w) = (1.0 / 16.0, 1.0);
    let a = blowup(&full.space, x, &[r], w).unwrap();
    let b = blowup(&part, x, &[r], w).unwrap();
    let (ba, bb) = (&a.blowups[0], &b.blowups[0]);

    // Total variation between the two normalized measures, matched through original indices.
    let mut tv = 0.0;
    for (i, &orig) in a.kept[0].iter().enumerate() {
        let other = b.kept[0].iter().position(|&o| o == orig).map_or(0.0, |j| bb.weight(j));
        tv += (ba.weight(i) - other).abs();
    }
    let budget = Budget { restarts: 1, local_steps: 0, flat_tol: 1e-5, ..Budget::default() };
    let ab = estimate_dstar(ba, bb, &budget, &[]).unwrap();
    assert!(ab.upper <= tv + 1e-5, "{} > {tv}", ab.upper);

    let line = model_tangent(&Gauge::WeightedLinf(vec![1.0]), 1, 8, w).unwrap();
    let am = estimate_dstar(ba, &line, &budget, &[]).unwrap();
    let bm = estimate_dstar(bb, &line, &budget, &[]).unwrap();
    assert!(am.lower <= bm.upper + ab.upper + 1e-9);
    assert!(bm.lower <= am.upper + ab.upper + 1e-9);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn segment_scores_shrink_as_sampling_refines() {
    let mut med = Vec::new();
    for atoms in [101, 401, 1601] {
        let f = generate(FixtureKind::Segment, &FixtureParams { atoms: Some(atoms), ..Default::default() }, 0).unwrap();
        let rep = flatness_scan(&f.space, 1, &f.probes, &[0.25, 0.125], &ScanParams::default()).unwrap();
        med.push(median(rep.records.iter().map(|x| x.upper).collect()));
    }
    assert!(med.windows(2).all(|w| w[1] < w[0]), "{med:?}");
    assert!(med[2] < 0.01);
}

#[test]
fn cantor_scores_stay_away_from_zero() {
    let f = generate(FixtureKind::FourCornerCantor, &FixtureParams::default(), 0).unwrap();
    let rep = flatness_scan(&f.space, 1, &f.probes, &[0.25, 0.125], &ScanParams::default()).unwrap();
    let far = rep.records.iter().filter(|r| r.lower > 0.05).count();
    assert!(far * 2 >= rep.records.len(), "{far} of {}", rep.records.len());
}

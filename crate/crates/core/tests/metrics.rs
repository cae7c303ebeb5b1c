use proptest::prelude::*;
use quasispec::conformal::ConformalMap;
use quasispec::geometry::{generate_snowflake, EdgeRule, Point2, PolygonalCurve, SnowflakeSpec};
use quasispec::metrics::{
    estimate_beta, estimate_bounded_turning, estimate_three_point, k_from_ahlfors, AhlforsMethod,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tent(p: f64, n: u32) -> PolygonalCurve {
    generate_snowflake(&SnowflakeSpec::new(p, n, EdgeRule::AllTent)).unwrap()
}

fn arc_ids(n: usize, i: usize, j: usize) -> Vec<usize> {
    let len = (j + n - i) % n;
    (0..=len).map(|k| (i + k) % n).collect()
}

fn brute_diam(v: &[Point2], ids: &[usize]) -> f64 {
    let mut d = 0.0f64;
    for &a in ids {
        for &b in ids {
            d = d.max(v[a].dist(v[b]));
        }
    }
    d
}

/// Direct O(n^4) evaluation of both estimators.
fn brute(v: &[Point2]) -> (f64, f64) {
    let n = v.len();
    let (mut bt, mut tp) = (1.0f64, 1.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let fwd = arc_ids(n, i, j);
            let bwd = arc_ids(n, j, i);
            let (df, db) = (brute_diam(v, &fwd), brute_diam(v, &bwd));
            let arc = if df < db || (df == db && fwd.len() <= bwd.len()) { fwd } else { bwd };
            let chord = v[i].dist(v[j]);
            bt = bt.max(df.min(db) / chord);
            for &k in &arc {
                tp = tp.max(v[k].dist(v[i]).max(v[k].dist(v[j])) / chord);
            }
        }
    }
    (bt, tp)
}

/// Value of an independent brute-force evaluation over the 400-point square.
const SQUARE_400_ORACLE: f64 = 1.144_116_039_944_945_5;

#[test]
fn densified_square_matches_oracle() {
    let sq = PolygonalCurve::unit_square().densified(100);
    assert_eq!(sq.len(), 400);
    let bt = estimate_bounded_turning(sq.vertices(), 1).unwrap();
    assert!((bt.c_hat - SQUARE_400_ORACLE).abs() < 1e-12, "{}", bt.c_hat);
    // continuum supremum: golden ratio over sqrt 2, from chords (1/2 - d, 0)-(1/2 + d, 1)
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((bt.c_hat - golden / 2f64.sqrt()).abs() < 0.01);
    let (i, _, j) = bt.witness;
    let (a, b) = (sq.vertices()[i], sq.vertices()[j]);
    assert!(((a.y - b.y).abs() - 1.0).abs() < 1e-12);
    assert!((a.x + b.x - 1.0).abs() < 1e-12);
    let tp = estimate_three_point(sq.vertices(), 1).unwrap();
    assert!(tp.c_hat >= 1.0 && tp.c_hat <= bt.c_hat + 1e-12);
}

#[test]
fn snowflake_constant_below_limit_bound_and_monotone() {
    let mut prev = 0.0;
    for n in 1..=4 {
        let s = tent(0.3, n);
        let c = estimate_bounded_turning(s.vertices(), 1).unwrap().c_hat;
        assert!(c <= 16.0 / (1.0 - 0.6), "{c}");
        assert!(c >= prev - 1e-12, "n={n}: {c} < {prev}");
        prev = c;
    }
}

#[test]
fn similarity_invariance() {
    let s = tent(0.35, 3);
    let moved = s.similarity(7.3, 0.9, Point2::new(-3.0, 11.0)).unwrap();
    for method in [AhlforsMethod::BoundedTurning, AhlforsMethod::ThreePoint] {
        let f = match method {
            AhlforsMethod::BoundedTurning => estimate_bounded_turning,
            AhlforsMethod::ThreePoint => estimate_three_point,
        };
        let a = f(s.vertices(), 1).unwrap().c_hat;
        let b = f(moved.vertices(), 1).unwrap().c_hat;
        assert!((a - b).abs() < 1e-10, "{method:?}: {a} vs {b}");
    }
}

#[test]
fn strided_never_exceeds_exhaustive() {
    let s = tent(0.4, 4);
    let full = estimate_bounded_turning(s.vertices(), 1).unwrap();
    let full3 = estimate_three_point(s.vertices(), 1).unwrap();
    for stride in [2, 3, 7] {
        let e = estimate_bounded_turning(s.vertices(), stride).unwrap();
        assert!(e.subsampled);
        assert!(e.c_hat <= full.c_hat + 1e-12);
        assert!(estimate_three_point(s.vertices(), stride).unwrap().c_hat <= full3.c_hat + 1e-12);
    }
}

#[test]
fn witness_lies_on_chosen_arc() {
    let s = tent(0.3, 3);
    let n = s.len();
    for e in [
        estimate_bounded_turning(s.vertices(), 1).unwrap(),
        estimate_three_point(s.vertices(), 1).unwrap(),
    ] {
        let (i, k, j) = e.witness;
        assert!(i < n && j < n && k < n);
        let on_fwd = arc_ids(n, i, j).contains(&k);
        let on_bwd = arc_ids(n, j, i).contains(&k);
        assert!(on_fwd || on_bwd);
    }
}

#[test]
fn hull_based_search_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let k = rng.gen_range(5..30);
        let pts: Vec<Point2> = (0..k)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                let r = rng.gen_range(0.2..1.0);
                Point2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let c = PolygonalCurve::new(pts).unwrap();
        let (bt, tp) = brute(c.vertices());
        let e_bt = estimate_bounded_turning(c.vertices(), 1).unwrap().c_hat;
        let e_tp = estimate_three_point(c.vertices(), 1).unwrap().c_hat;
        assert!((bt - e_bt).abs() < 1e-12, "{bt} vs {e_bt}");
        assert!((tp - e_tp).abs() < 1e-12, "{tp} vs {e_tp}");
    }
    let (bt, tp) = brute(tent(0.3, 2).vertices());
    assert!((bt - estimate_bounded_turning(tent(0.3, 2).vertices(), 1).unwrap().c_hat).abs() < 1e-12);
    assert!((tp - estimate_three_point(tent(0.3, 2).vertices(), 1).unwrap().c_hat).abs() < 1e-12);
}

#[test]
fn beta_estimates() {
    assert_eq!(estimate_beta(&ConformalMap::Identity, 64).unwrap().beta, 0.0);
    assert!(estimate_beta(&ConformalMap::Scale { r: 3.5 }, 64).unwrap().beta < 1e-15);
    // dense-grid reference fixed before the build
    let b = estimate_beta(&ConformalMap::Quadratic { c: 0.2 }, 2048).unwrap();
    assert!((b.beta - 0.139_428_301_242_217_47).abs() < 1e-12, "{}", b.beta);
    assert!(b.beta <= 0.139_509_531_095_259_7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn three_point_never_exceeds_bounded_turning(seed in 0u64..500, k in 6usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point2> = (0..k)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                let r = rng.gen_range(0.1..1.0);
                Point2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let c = PolygonalCurve::new(pts).unwrap();
        let bt = estimate_bounded_turning(c.vertices(), 1).unwrap().c_hat;
        let tp = estimate_three_point(c.vertices(), 1).unwrap().c_hat;
        prop_assert!(tp <= bt + 1e-12);
    }

    #[test]
    fn ahlfors_k_strictly_increasing(a in 1.0f64..40.0, d in 1e-3f64..5.0) {
        let lo = k_from_ahlfors(a).unwrap().k_log;
        let hi = k_from_ahlfors(a + d).unwrap().k_log;
        prop_assert!(lo < hi);
    }
}

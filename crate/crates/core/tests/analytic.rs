use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use smoothparam::analytic::*;
use smoothparam::bivar::BivarPoly;
use smoothparam::expr::{Expr, FunctionExpr};
use smoothparam::rational::{q, qi, to_f64, Q};
use smoothparam::stats::linear_fit;

/// Every (kept interval, point) pair checked from scratch in floating point.
fn pair_scan(p: &DyadicPartition, pts: &[Complex64]) -> usize {
    let mut bad = 0;
    for (a, b) in &p.kept {
        let (a, b) = (to_f64(a), to_f64(b));
        for z in pts {
            if (Complex64::new(0.5 * (a + b), 0.0) - z).norm() < 3.0 * (b - a) {
                bad += 1;
            }
        }
    }
    bad
}

fn tiles(p: &DyadicPartition, lo: f64, hi: f64) -> bool {
    let mut all: Vec<(f64, f64)> = p.kept.iter().chain(&p.removed).map(|(a, b)| (to_f64(a), to_f64(b))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let kept_disjoint = p.kept.windows(2).all(|w| w[0].1 <= w[1].0);
    let mut reach = lo;
    for (a, b) in all {
        if a > reach {
            return false;
        }
        reach = reach.max(b);
    }
    kept_disjoint && reach >= hi
}

#[test]
fn real_singularity_needs_a_few_extra_intervals() {
    // a point on the real axis: growth per interval is capped by the 3x test,
    // so the kept count sits slightly above 2 (m + 1) log2(1 / delta)
    let z = [Complex64::new(0.0, 0.0)];
    let p = dyadic_partition(&qi(-1), &qi(1), &z, &q(1, 16)).unwrap();
    assert_eq!(p.removed, vec![(q(-1, 16), q(1, 16))]);
    assert_eq!(pair_scan(&p, &z), 0);
    assert!(tiles(&p, -1.0, 1.0));
    assert_eq!(p.kept.len(), 18);
    assert_eq!(p.count_bound(), 16.0);
    for j in [8u32, 12, 16, 20] {
        let p = dyadic_partition(&qi(-1), &qi(1), &z, &q(1, 1 << j)).unwrap();
        assert!(p.kept.len() as f64 <= 1.1 * p.count_bound(), "j = {j}: {}", p.kept.len());
    }
}

#[test]
fn no_singularities_keep_the_whole_interval() {
    for j in [1u32, 5, 30] {
        let p = dyadic_partition(&qi(-1), &qi(1), &[], &q(1, 1 << j)).unwrap();
        assert_eq!(p.kept, vec![(qi(-1), qi(1))]);
        assert!(p.removed.is_empty());
    }
}

#[test]
fn three_random_points_pass_the_pair_scan() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let pts: Vec<Complex64> =
            (0..3).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5))).collect();
        let p = dyadic_partition(&qi(-1), &qi(1), &pts, &q(1, 1024)).unwrap();
        assert_eq!(pair_scan(&p, &pts), 0);
        assert!(p.distance_violations().is_empty());
        assert!(tiles(&p, -1.0, 1.0));
    }
}

fn max_on_circle(g: impl Fn(Complex64) -> Complex64, c: f64, r: f64) -> f64 {
    let g0 = g(Complex64::new(c, 0.0));
    (0..100_000)
        .map(|i| (g(Complex64::new(c, 0.0) + Complex64::from_polar(r, i as f64 * std::f64::consts::TAU / 1e5)) - g0).norm())
        .fold(0.0, f64::max)
}

fn fine() -> AnalyticConfig {
    AnalyticConfig { radii: 1, angles: 8192, ..AnalyticConfig::default() }
}

#[test]
fn square_root_disk_maxima_match_closed_form() {
    let delta = q(1, 64);
    let f = FunctionExpr::new(
        Expr::branch(BivarPoly::from_terms(&[(0, 2, qi(1)), (1, 0, qi(-1))]), (1.0, 1.0)),
        &delta * &delta,
        qi(1),
    );
    let p = analytic_delta_parametrize(&f, &delta, &AnalyticConfig::default()).unwrap();
    assert!(!p.charts.is_empty());
    let g = &p.normalized()[0];
    let s = 1.0 / to_f64(&p.normalization.scale);
    for c in &p.charts {
        let (a, b) = c.chart.image();
        let (a, b) = (to_f64(&a), to_f64(&b));
        let cert = verify_a_chart(&c.chart, g, f64::INFINITY, 3.0, &fine()).unwrap();
        // radius 3 in the chart parameter is radius 3 L / 2 in x; the maximum sits on the rim
        let oracle = s * max_on_circle(|z| z.sqrt(), 0.5 * (a + b), 1.5 * (b - a));
        assert!((cert.measured - oracle).abs() <= 1e-6 * oracle.max(1.0), "{} vs {oracle}", cert.measured);
    }
}

fn hyperbola(eps: &Q) -> FunctionExpr {
    FunctionExpr::new(Expr::div(Expr::constant(-(eps * eps)), Expr::var()), qi(-1), -eps.clone())
}

#[test]
fn hyperbola_disk_maxima_match_closed_form() {
    let eps = q(1, 100);
    let p = analytic_delta_parametrize(&hyperbola(&eps), &q(1, 256), &AnalyticConfig::default()).unwrap();
    let e2 = to_f64(&(&eps * &eps)) / to_f64(&p.normalization.scale);
    for c in &p.charts {
        let (a, b) = c.chart.image();
        let (a, b) = (to_f64(&a), to_f64(&b));
        let cert = verify_a_chart(&c.chart, &p.normalized()[0], f64::INFINITY, 4.0, &fine()).unwrap();
        let oracle = max_on_circle(|z| -e2 / z, 0.5 * (a + b), 2.0 * (b - a));
        assert!((cert.measured - oracle).abs() <= 1e-6 * oracle.max(1.0), "{} vs {oracle}", cert.measured);
        assert!((c.k_bound - oracle).abs() <= 1e-2 * oracle.max(1e-9));
    }
}

#[test]
fn unit_refinement_splits_by_three_k() {
    let eps = q(1, 10_000);
    let f = FunctionExpr::new(Expr::div(Expr::constant(-(&eps * &eps)), Expr::var()), qi(-1), qi(1));
    let cfg = AnalyticConfig::default();
    let (mut xs, mut before, mut after) = (Vec::new(), Vec::new(), Vec::new());
    for j in [6u32, 9, 12, 15, 18] {
        let p = analytic_delta_parametrize(&f, &q(1, 1 << j), &cfg).unwrap();
        let r = refine_to_unit_charts(&p, &cfg).unwrap();
        assert!(r.unit);
        for c in &p.charts {
            let (a, b) = c.chart.image();
            let inside = r.charts.iter().filter(|u| {
                let (x, y) = u.chart.image();
                x >= a && y <= b
            });
            let n = inside.count();
            let want = if c.k_bound > 1.0 + 1e-6 { (3.0 * c.k_bound).ceil() as usize } else { 1 };
            assert!(n >= want, "K = {}: {n} pieces", c.k_bound);
        }
        for u in &r.charts {
            let cert = verify_a_chart(&u.chart, &r.normalized()[0], 1.0, 3.0, &fine()).unwrap();
            assert!(cert.pass, "{}", cert.measured);
        }
        xs.push(j as f64);
        before.push(p.charts.len() as f64);
        after.push(r.charts.len() as f64);
    }
    let (s0, s1) = (linear_fit(&xs, &before).slope, linear_fit(&xs, &after).slope);
    assert!(s1 <= 3.0 * s0, "slope {s1} vs {s0}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn partition_invariants(
        pts in proptest::collection::vec((-1.2f64..1.2, -1.0f64..1.0), 0..6),
        j in 2u32..24,
    ) {
        let z: Vec<Complex64> = pts.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let p = dyadic_partition(&qi(-1), &qi(1), &z, &q(1, 1 << j)).unwrap();
        prop_assert_eq!(pair_scan(&p, &z), 0);
        prop_assert!(tiles(&p, -1.0, 1.0));
        let delta = 1.0 / (1u64 << j) as f64;
        if z.iter().all(|w| w.im.abs() >= delta) {
            prop_assert!(p.kept.len() as f64 <= p.count_bound().max(1.0));
        }
    }
}

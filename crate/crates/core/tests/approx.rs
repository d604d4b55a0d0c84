use smoothparam::analytic::{analytic_delta_parametrize, refine_to_unit_charts, AnalyticConfig};
use smoothparam::approx::*;
use smoothparam::ck::CkConfig;
use smoothparam::expr::{Expr, FunctionExpr};
use smoothparam::rational::{q, qi, to_f64};

fn horner(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * s + v)
}

/// Unit a-charts of the normalized hyperbola `-eps^2 / x` on `[-1, -eps]`.
fn hyperbola_unit_sources() -> (Vec<Source>, f64) {
    let eps = q(1, 100);
    let f = FunctionExpr::new(Expr::div(Expr::constant(-(&eps * &eps)), Expr::var()), qi(-1), -eps.clone());
    let cfg = AnalyticConfig::default();
    let p = refine_to_unit_charts(&analytic_delta_parametrize(&f, &q(1, 1024), &cfg).unwrap(), &cfg).unwrap();
    let e2 = to_f64(&(&eps * &eps)) / to_f64(&p.normalization.scale);
    let srcs = p
        .charts
        .iter()
        .map(|c| Source { piece: 0, chart: c.chart.id, chain: c.chart.chain.clone(), targets: p.normalized() })
        .collect();
    (srcs, e2)
}

/// Max error of a Taylor patch against `-e2 / x` at `n + 1` points of `[lo, hi]`.
fn sampled(src: &Source, center: f64, coeffs: &[Vec<f64>], lo: f64, hi: f64, e2: f64, n: usize) -> f64 {
    (0..=n)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            let x = src.chain.apply_f64(t);
            let ex = (horner(&coeffs[0], t - center) - x).abs();
            let ey = (horner(&coeffs[1], t - center) + e2 / x).abs();
            ex.max(ey)
        })
        .fold(0.0, f64::max)
}

#[test]
fn unit_chart_taylor_error_halves_per_degree() {
    let (srcs, e2) = hyperbola_unit_sources();
    for src in srcs.iter().step_by(3) {
        for d in 1..=8usize {
            let (center, coeffs, _) = taylor_patch(src, -1.0, 1.0, d).unwrap();
            let err = sampled(src, center, &coeffs, -1.0, 1.0, e2, 1 << 12);
            assert!(err <= 2f64.powi(-(d as i32)), "chart {} degree {d}: {err}", src.chart);
        }
    }
}

#[test]
fn remainder_bound_covers_sampled_error() {
    let (srcs, e2) = hyperbola_unit_sources();
    for src in &srcs {
        let (center, coeffs, rem) = taylor_patch(src, -1.0, 1.0, 5).unwrap();
        let err = sampled(src, center, &coeffs, -1.0, 1.0, e2, 4096);
        assert!(err <= rem * (1.0 + 1e-9) + 1e-15, "chart {}: {err} > {rem}", src.chart);
    }
}

#[test]
fn quartic_patches_meet_epsilon() {
    let f = FunctionExpr::new(Expr::poly(vec![qi(0), qi(0), qi(0), qi(0), qi(1)]), qi(-1), qi(1));
    let input = SetInput { pieces: vec![Piece::Function { f }], boxes: vec![] };
    let a = ck_approximate(&input, 1e-4, 0.5, &CkConfig::default()).unwrap();
    assert_eq!(a.k, Some(3));
    for p in &a.patches {
        let PatchMap::Taylor { center, coeffs } = &p.map else { panic!("unexpected patch") };
        let src = &a.sources[p.source.unwrap()];
        let err = (0..=10_000)
            .map(|i| {
                let t = p.lo + (p.hi - p.lo) * i as f64 / 1e4;
                let x = src.chain.apply_f64(t);
                (horner(&coeffs[0], t - center) - x).abs().max((horner(&coeffs[1], t - center) - x.powi(4)).abs())
            })
            .fold(0.0, f64::max);
        assert!(err <= 1e-4, "{err}");
    }
}

#[test]
fn rescoring_agrees_with_build() {
    let mut runs = vec![
        analytic_approximate(&hyperbola_set(&q(1, 10)), &q(1, 1000), &AnalyticConfig::default()).unwrap(),
        ck_approximate(&hyperbola_set(&q(1, 10)), 1e-3, 1.0, &CkConfig::default()).unwrap(),
    ];
    let affine = FunctionExpr::new(Expr::poly(vec![q(1, 3), q(1, 2)]), qi(-1), qi(1));
    for e in [q(1, 10), q(1, 1 << 20)] {
        let input = SetInput { pieces: vec![Piece::Function { f: affine.clone() }], boxes: vec![] };
        let a = analytic_approximate(&input, &e, &AnalyticConfig::default()).unwrap();
        assert_eq!(a.charts, 1);
        runs.push(a);
    }
    for a in &runs {
        let s = verify_and_score(a).unwrap();
        assert!(s.pass);
        assert_eq!(s.complexity, a.complexity);
        for r in &s.patches {
            assert!(r.error <= 1.1 * r.build_error + 1e-15, "patch {}: {} vs {}", r.index, r.error, r.build_error);
        }
    }
}

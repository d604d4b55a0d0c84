use proptest::prelude::*;
use smoothparam::bivar::BivarPoly;
use smoothparam::rational::{from_f64, q, qi, to_f64};
use smoothparam::remez::*;

fn hyperbola(e: f64) -> BivarPoly {
    let eq = from_f64(e);
    BivarPoly::from_terms(&[(1, 1, qi(1)), (0, 0, -(&eq * &eq))])
}

#[test]
fn classical_constant_for_half_interval() {
    assert_eq!(classical_remez_bound(2, &qi(1)).unwrap(), qi(17));
    assert_eq!(chebyshev(3, &qi(3)), qi(99));
    assert!(classical_remez_bound(2, &qi(0)).is_err());
    assert!(classical_remez_bound(2, &q(5, 2)).is_err());
}

#[test]
fn gradient_floor_matches_closed_form_and_scan() {
    for e in [0.1, 0.03] {
        let fl = curve_gradient_floor(&hyperbola(e), [0.0, 1.0, 0.0, 1.0], 2000).unwrap();
        // on y = e^2/x the gradient (y, x) is smallest at x = e; sup |P| on the box is 1 - e^2
        let closed = 2f64.sqrt() * e / (1.0 - e * e);
        // independent scan: a million points along the branch
        let scan = (0..1_000_000)
            .map(|i| {
                let x = e * e + (1.0 - e * e) * i as f64 / 999_999.0;
                let y = e * e / x;
                x.hypot(y) / (1.0 - e * e)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((fl.rho - closed).abs() < 1e-4, "{e}: {} vs {closed}", fl.rho);
        assert!((fl.rho - scan).abs() < 1e-4, "{e}: {} vs scan {scan}", fl.rho);
        assert!((fl.norm - (1.0 - e * e)).abs() < 1e-6);
        assert!((fl.point[0] - e).abs() < 1e-2 && (fl.point[0] * fl.point[1] - e * e).abs() < 1e-9);
    }
}

#[test]
fn singular_curve_is_rejected() {
    let p = BivarPoly::from_terms(&[(1, 1, qi(1))]);
    assert!(curve_gradient_floor(&p, [-1.0, 1.0, -1.0, 1.0], 400).is_err());
}

#[test]
fn chain_bound_dominates_sampled_constant() {
    for e in [0.25, 0.1] {
        let p = hyperbola(e);
        let par = remez_parametrization(&p, [0.0, 1.0, 0.0, 1.0], &RemezParamConfig::default()).unwrap();
        let query = RemezQuery {
            poly: p,
            domain: [0.0, 1.0, 0.0, 1.0],
            z: ZSpec::Window { window: [e, 1.0, 0.0, 1.0] },
            degree: 1,
            samples: 500,
            scan: 1000,
        };
        let r = empirical_remez_constant(&query).unwrap();
        assert!(par.chain_bound >= r.constant, "{e}: 2^{} < {}", par.n, r.constant);
        assert!(par.heuristic && par.chain_bound == 2f64.powi(par.n as i32));
    }
}

#[test]
fn line_has_only_analytic_charts() {
    let p = BivarPoly::from_terms(&[(0, 1, qi(1)), (1, 0, q(-1, 2))]);
    let par = remez_parametrization(&p, UNIT_BOX, &RemezParamConfig::default()).unwrap();
    assert_eq!(par.branches, 1);
    assert!(par.charts.iter().all(|c| matches!(c, RemezChart::Analytic { .. })));
    let covered: f64 = par
        .charts
        .iter()
        .map(|c| match c {
            RemezChart::Analytic { lo, hi, .. } => hi - lo,
            _ => 0.0,
        })
        .sum();
    assert!((covered - 2.0).abs() < 1e-9, "{covered}");
}

proptest! {
    #[test]
    fn chebyshev_is_cosine_of_multiple_angle(d in 0u32..12, num in -64i64..=64) {
        let x = q(num, 64);
        let want = (d as f64 * to_f64(&x).acos()).cos();
        prop_assert!((to_f64(&chebyshev(d, &x)) - want).abs() < 1e-12);
    }
}

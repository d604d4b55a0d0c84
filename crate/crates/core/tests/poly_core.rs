use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use smoothparam::bivar::*;
use smoothparam::expr::{Derivatives, Expr, FunctionExpr};
use smoothparam::rational::{q, qi, to_f64, Q};
use smoothparam::roots::isolate_real_zeros;
use smoothparam::upoly::UPoly;

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Sign changes on a uniform grid, each bisected down to `2^-30`.
fn bisection_zeros(c: &[f64], a: f64, b: f64, grid: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let xs: Vec<f64> = (0..=grid).map(|i| a + (b - a) * i as f64 / grid as f64).collect();
    for w in xs.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (horner(c, lo), horner(c, hi));
        if flo == 0.0 {
            out.push(lo);
            continue;
        }
        // a zero on a grid point is counted by the window it starts
        if fhi == 0.0 || flo * fhi > 0.0 {
            continue;
        }
        while hi - lo > 2f64.powi(-30) {
            let mid = 0.5 * (lo + hi);
            if horner(c, mid) * flo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

#[test]
fn degree_eight_zeros_match_bisection() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let c: Vec<i64> = (0..=8).map(|_| rng.gen_range(-20..=20)).collect();
        let c: Vec<i64> = if c[8] == 0 { c.into_iter().chain([1]).take(9).collect() } else { c };
        let cf: Vec<f64> = c.iter().map(|&v| v as f64).collect();
        let f = FunctionExpr::new(Expr::poly(c.iter().map(|&v| qi(v)).collect()), qi(-2), qi(2));
        let iso = isolate_real_zeros(&f, &qi(-2), &qi(2)).unwrap();
        assert!(iso.exact && !iso.flagged);
        let oracle = bisection_zeros(&cf, -2.0, 2.0, 1 << 14);
        assert_eq!(iso.intervals.len(), oracle.len(), "coefficients {c:?}");
        for (z, (a, b)) in oracle.iter().zip(&iso.intervals) {
            assert!(to_f64(a) - 2e-9 <= *z && *z <= to_f64(b) + 2e-9, "{z} outside [{a}, {b}]");
        }
    }
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

/// Sylvester determinant of two polynomials in `y` (coefficients low to high).
fn sylvester(a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = (a.len() - 1, b.len() - 1);
    let size = m + n;
    let mut rows = Vec::new();
    for i in 0..n {
        let mut r = vec![0.0; size];
        for (j, v) in a.iter().rev().enumerate() {
            r[i + j] = *v;
        }
        rows.push(r);
    }
    for i in 0..m {
        let mut r = vec![0.0; size];
        for (j, v) in b.iter().rev().enumerate() {
            r[i + j] = *v;
        }
        rows.push(r);
    }
    det(rows)
}

#[test]
fn elliptic_discriminant_matches_interpolated_resultant() {
    // y^2 - x^3 + x
    let p = BivarPoly::from_terms(&[(0, 2, qi(1)), (3, 0, qi(-1)), (1, 0, qi(1))]);
    let res = resultant_y(&p, &p.d_dy());
    let deg = res.degree().unwrap();
    assert_eq!(deg, 3);
    // the oracle samples Res(P(x, .), dP/dy(x, .)) at integer x and compares values
    for x in -3..=3 {
        let c = x as f64;
        let oracle = sylvester(&[c - c * c * c, 0.0, 1.0], &[0.0, 2.0]);
        assert!((res.eval_f64(c) - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()), "x = {x}");
    }
    let proj = singular_locus(&p).unwrap().projections();
    assert_eq!(proj.len(), 3);
    for (got, want) in proj.iter().zip([-1.0, 0.0, 1.0]) {
        assert!((got - want).abs() < 1e-9);
    }
}

#[test]
fn square_root_loop_has_no_monodromy() {
    let p = BivarPoly::from_terms(&[(0, 2, qi(1)), (1, 0, qi(-1))]);
    let sing = singular_locus(&p).unwrap();
    let path: Vec<Complex64> =
        (0..=96).map(|i| Complex64::new(1.0, 0.0) + Complex64::from_polar(0.25, i as f64 * std::f64::consts::TAU / 96.0) - 0.25).collect();
    let vals = continue_along(&p, &sing, Complex64::new(0.75f64.sqrt(), 0.0), &path, &ContinuationConfig::default()).unwrap();
    for (z, y) in path.iter().zip(&vals) {
        assert!((y - z.sqrt()).norm() < 1e-9, "at {z}: {y} vs {}", z.sqrt());
    }
    assert!((vals[0] - vals[vals.len() - 1]).norm() < 1e-9);
}

fn small_poly() -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-9i64..=9, 1..7)
}

proptest! {
    #[test]
    fn jets_match_formal_derivatives(c in small_poly(), num in -20i64..=20) {
        let x = q(num, 7);
        let p = UPoly::from_ints(&c);
        let f = FunctionExpr::new(Expr::poly(c.iter().map(|&v| qi(v)).collect()), qi(-3), qi(3));
        let Derivatives::Exact(d) = f.derivatives(&x, 4).unwrap() else { panic!("inexact") };
        let mut g = p.clone();
        for dk in d {
            prop_assert_eq!(dk, g.eval(&x));
            g = g.derivative();
        }
    }

    #[test]
    fn quotient_rule_is_exact(a in small_poly(), b in small_poly(), num in -20i64..=20) {
        let (pa, pb) = (UPoly::from_ints(&a), UPoly::from_ints(&b));
        let x = q(num, 11);
        prop_assume!(!pb.eval(&x).is_zero_q());
        let e = Expr::div(Expr::poly(pa.coeffs().to_vec()), Expr::poly(pb.coeffs().to_vec()));
        let f = FunctionExpr::new(e, qi(-3), qi(3));
        let Derivatives::Exact(d) = f.derivatives(&x, 1).unwrap() else { panic!("inexact") };
        let (ua, ub) = (pa.eval(&x), pb.eval(&x));
        let expected: Q = (pa.derivative().eval(&x) * &ub - &ua * pb.derivative().eval(&x)) / (&ub * &ub);
        prop_assert_eq!(&d[0], &(ua / ub));
        prop_assert_eq!(&d[1], &expected);
    }

    #[test]
    fn division_reconstructs(a in small_poly(), b in small_poly()) {
        let (pa, pb) = (UPoly::from_ints(&a), UPoly::from_ints(&b));
        prop_assume!(!pb.is_zero());
        let (quo, rem) = pa.div_rem(&pb);
        prop_assert_eq!(quo.mul(&pb).add(&rem), pa);
        prop_assert!(rem.is_zero() || rem.degree() < pb.degree());
    }
}

trait IsZeroQ {
    fn is_zero_q(&self) -> bool;
}

impl IsZeroQ for Q {
    fn is_zero_q(&self) -> bool {
        *self == qi(0)
    }
}

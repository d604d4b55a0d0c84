mod common;

use num_bigint::BigInt;
use proptest::prelude::*;
use smoothparam::bp::*;
use smoothparam::expr::{Expr, FunctionExpr};
use smoothparam::rational::{q, qi, Q};

use common::oracle::{brute_force_points, Curve};

/// Pascal's triangle row by row, independent of the multiplicative formula.
fn pascal(n: usize) -> Vec<Vec<u128>> {
    let mut rows = vec![vec![1u128]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut r = vec![1u128; i + 1];
        for j in 1..i {
            r[j] = prev[j - 1] + prev[j];
        }
        rows.push(r);
    }
    rows
}

/// Count monomials of degree exactly `l` in `s` variables by enumeration.
fn monomials(s: u64, l: u64) -> u128 {
    if s == 0 {
        return (l == 0) as u128;
    }
    (0..=l).map(|first| monomials(s - 1, l - first)).sum()
}

#[test]
fn cubic_points_match_double_loop() {
    let f = FunctionExpr::new(Expr::poly(vec![qi(0), qi(-1), qi(0), qi(1)]), qi(-1), qi(1));
    let c = Curve { num: vec![0, -1, 0, 1], den: vec![1], lo: (-1, 1), hi: (1, 1), ylo: (-1, 1), yhi: (1, 1) };
    for t in 1..=60 {
        let mine: std::collections::BTreeSet<_> = enumerate_points(&f, t, DEFAULT_CANDIDATE_CAP).unwrap().into_iter().collect();
        assert_eq!(mine, brute_force_points(&c, t), "t = {t}");
    }
    let six = enumerate_points(&f, 6, DEFAULT_CANDIDATE_CAP).unwrap();
    assert!(six.iter().any(|p| p.x == q(1, 1) && p.y == qi(0)));
}

#[test]
fn cover_exponent_decreases_in_degree() {
    let eps = epsilon_sequence(1, 2, 6, KappaVariant::AsPrinted).unwrap();
    assert!(eps.windows(2).all(|w| w[1] < w[0]), "{eps:?}");
    // the truncated variant saturates at 1 for small d; only require it to stay in (0, 1]
    let alt = epsilon_sequence(1, 2, 6, KappaVariant::TruncatedAtK).unwrap();
    assert!(alt.iter().all(|e| *e <= qi(1) && *e > qi(0)), "{alt:?}");
}

#[test]
fn vandermonde_within_bound() {
    // phi = (1, x, x^2): |det| = prod |z_i - z_j| <= (2r)^3
    let phi: Vec<MPoly> = (0..3).map(|e| MPoly { terms: vec![(vec![e], qi(1))] }).collect();
    for (pts, r) in [([q(-1, 10), q(0, 1), q(1, 10)], 0.1), ([q(1, 3), q(1, 2), q(2, 3)], 0.2)] {
        let c = (pts[0].clone() + &pts[2]) / qi(2);
        let rep = vandermonde_bound_check(&phi, &pts.iter().map(|p| vec![p.clone()]).collect::<Vec<_>>(), &[smoothparam::rational::to_f64(&c)], r).unwrap();
        assert_eq!(rep.e, 3);
        let prod = (&pts[1] - &pts[0]) * (&pts[2] - &pts[0]) * (&pts[2] - &pts[1]);
        assert!((rep.delta - smoothparam::rational::to_f64(&prod).abs()).abs() < 1e-15);
        assert!(rep.pass && rep.delta <= 8.0 * r * r * r);
    }
}

proptest! {
    #[test]
    fn dimensions_match_pascal(s in 1u64..8, l in 0u64..12) {
        let tri = pascal(30);
        prop_assert_eq!(dim_upto(s, l).unwrap(), tri[(s + l) as usize][s as usize]);
        prop_assert_eq!(dim_exact(s, l).unwrap(), monomials(s, l));
        let sum: u128 = (0..=l).map(|j| dim_exact(s, j).unwrap()).sum();
        prop_assert_eq!(sum, dim_upto(s, l).unwrap());
    }

    #[test]
    fn combinatorics_are_consistent(n in 1u64..5, m in 1u64..400) {
        let c = bp_combinatorics(n, m).unwrap();
        let (dk, dk1) = (dim_upto(n, c.k).unwrap(), dim_upto(n, c.k + 1).unwrap());
        prop_assert!(dk <= m as u128 && (m as u128) < dk1);
        let e: u128 = (0..=c.k).map(|l| monomials(n, l) * l as u128).sum::<u128>() + (c.k as u128 + 1) * (m as u128 - dk);
        prop_assert_eq!(c.e, e);
        prop_assert!(c.kappa_truncated <= c.kappa_as_printed);
    }

    #[test]
    fn bareiss_matches_rational_elimination(cells in proptest::collection::vec(-6i64..=6, 16)) {
        let m: Vec<Vec<Q>> = cells.chunks(4).map(|r| r.iter().map(|&v| qi(v)).collect()).collect();
        let ints: Vec<Vec<BigInt>> = cells.chunks(4).map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
        // Laplace expansion as the oracle
        fn laplace(m: &[Vec<Q>]) -> Q {
            if m.len() == 1 {
                return m[0][0].clone();
            }
            (0..m.len()).fold(qi(0), |acc, j| {
                let minor: Vec<Vec<Q>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect()).collect();
                let term = &m[0][j] * laplace(&minor);
                if j % 2 == 0 { acc + term } else { acc - term }
            })
        }
        let d = laplace(&m);
        prop_assert_eq!(det_q(&m), d.clone());
        let (rank, det) = bareiss(ints);
        prop_assert_eq!(Q::from_integer(det.unwrap()), d.clone());
        prop_assert_eq!(rank == 4, d != qi(0));
        prop_assert_eq!(rank_q(&m), rank);
    }
}

//! Brute-force rational point enumeration over integer-coefficient rational
//! functions, independent of the expression evaluator.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use smoothparam::bp::RationalPoint;
use smoothparam::expr::{Expr, FunctionExpr};
use smoothparam::rational::{q, Q};

/// `y = num(x) / den(x)` on `[lo, hi]` with `ylo <= y <= yhi` there.
/// Rationals are `(numerator, denominator)` pairs with positive denominators.
pub struct Curve {
    pub num: Vec<i64>,
    pub den: Vec<i64>,
    pub lo: (i64, i64),
    pub hi: (i64, i64),
    pub ylo: (i64, i64),
    pub yhi: (i64, i64),
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

/// Double loop over all `(a / t, b / t)` in the bounding box.
pub fn brute_force_points(c: &Curve, t: u64) -> BTreeSet<RationalPoint> {
    let t = t as i128;
    let deg = c.num.len().max(c.den.len()) - 1;
    let homog = |coeffs: &[i64], a: i128| -> i128 {
        coeffs.iter().enumerate().map(|(i, &ci)| ci as i128 * a.pow(i as u32) * t.pow((deg - i) as u32)).sum()
    };
    let mut out = BTreeSet::new();
    let (alo, ahi) = (ceil_div(t * c.lo.0 as i128, c.lo.1 as i128), (t * c.hi.0 as i128).div_euclid(c.hi.1 as i128));
    let (blo, bhi) = (ceil_div(t * c.ylo.0 as i128, c.ylo.1 as i128), (t * c.yhi.0 as i128).div_euclid(c.yhi.1 as i128));
    for a in alo..=ahi {
        let n = homog(&c.num, a);
        let m = homog(&c.den, a);
        if m == 0 {
            continue;
        }
        for b in blo..=bhi {
            if b * m == t * n {
                out.insert(RationalPoint {
                    x: Q::new(BigInt::from(a), BigInt::from(t)),
                    y: Q::new(BigInt::from(b), BigInt::from(t)),
                });
            }
        }
    }
    out
}

fn poly(c: &[i64]) -> Expr {
    Expr::poly(c.iter().map(|&v| q(v, 1)).collect())
}

fn curve(num: &[i64], den: &[i64], lo: (i64, i64), hi: (i64, i64), ylo: (i64, i64), yhi: (i64, i64)) -> (FunctionExpr, Curve) {
    let e = if den == [1] { poly(num) } else { Expr::div(poly(num), poly(den)) };
    let f = FunctionExpr::new(e, q(lo.0, lo.1), q(hi.0, hi.1));
    (f, Curve { num: num.to_vec(), den: den.to_vec(), lo, hi, ylo, yhi })
}

/// Named test curves as expressions and as oracle data.
pub fn test_curves() -> Vec<(&'static str, FunctionExpr, Curve)> {
    let list = [
        ("x^2", curve(&[0, 0, 1], &[1], (0, 1), (1, 1), (0, 1), (1, 1))),
        ("x^3", curve(&[0, 0, 0, 1], &[1], (-1, 1), (1, 1), (-1, 1), (1, 1))),
        ("1/(1+x)", curve(&[1], &[1, 1], (0, 1), (1, 1), (1, 2), (1, 1))),
        ("(x^3-x)/2", curve(&[0, -1, 0, 1], &[2], (-1, 1), (1, 1), (-1, 1), (1, 1))),
        ("x^2/(x^2+1)", curve(&[0, 0, 1], &[1, 0, 1], (-1, 1), (1, 1), (0, 1), (1, 1))),
        ("1/x", curve(&[1], &[0, 1], (1, 2), (2, 1), (1, 2), (2, 1))),
    ];
    list.into_iter().map(|(n, (f, c))| (n, f, c)).collect()
}

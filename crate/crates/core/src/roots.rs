//! Real zero isolation: Sturm sequences for rational functions, sampled
//! sign-change bisection for everything else.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::FunctionExpr;
use crate::rational::{self, Q};
use crate::upoly::UPoly;

/// Samples per unit length for blackbox sign-change scans.
pub const DEFAULT_DENSITY: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroIsolation {
    #[serde(with = "interval_vec")]
    pub intervals: Vec<(Q, Q)>,
    /// Completeness guaranteed (Sturm) rather than sampled.
    pub exact: bool,
    /// Sampled result whose count differs from the declared bound.
    pub flagged: bool,
}

pub(crate) mod interval_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[(Q, Q)], s: S) -> std::result::Result<S::Ok, S::Error> {
        let w: Vec<[serde_json::Value; 2]> =
            v.iter().map(|(a, b)| [rational::to_wire(a), rational::to_wire(b)]).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<(Q, Q)>, D::Error> {
        #[derive(Deserialize)]
        struct W {
            num: String,
            den: String,
        }
        let v = Vec::<[W; 2]>::deserialize(d)?;
        v.into_iter()
            .map(|[a, b]| {
                let pa = rational::parse(&a.num, &a.den);
                let pb = rational::parse(&b.num, &b.den);
                pa.zip(pb).ok_or_else(|| serde::de::Error::custom("invalid rational"))
            })
            .collect()
    }
}

impl ZeroIsolation {
    pub fn midpoints(&self) -> Vec<Q> {
        self.intervals
            .iter()
            .map(|(a, b)| (a + b) / rational::qi(2))
            .collect()
    }
}

/// Zeros of `num` in `[a, b]` that are not also zeros of `den`, refined to `width`.
pub fn rational_zeros(num: &UPoly, den: &UPoly, a: &Q, b: &Q, width: &Q) -> Vec<(Q, Q)> {
    if num.is_zero() {
        return vec![];
    }
    let sf = num.square_free();
    sf.isolate_roots(a, b)
        .into_iter()
        .map(|iv| sf.refine_root(&iv, width))
        .filter(|(lo, hi)| {
            // a shared zero with the denominator is a removable point, not a zero
            !(lo == hi && den.eval(lo).is_zero())
        })
        .collect()
}

/// Strict sign changes of `g` on `[a, b]` sampled at `density` points per
/// unit, each bracket bisected to width `1e-13`. Samples where `g` vanishes
/// are skipped; a function vanishing at every sample has no isolated zeros.
pub fn sampled_zeros<F>(g: F, a: f64, b: f64, density: usize) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = (((b - a) * density as f64).ceil() as usize).max(16);
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect::<Result<_>>()?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&x, &v) in xs.iter().zip(&vals) {
        if v.abs() <= tiny {
            continue;
        }
        if let Some((lx, lv)) = last {
            if lv.signum() != v.signum() {
                let (mut lo, mut hi, mut flo) = (lx, x, lv);
                while hi - lo > 1e-13 * (1.0 + lo.abs()) {
                    let m = 0.5 * (lo + hi);
                    let fm = g(m)?;
                    if fm == 0.0 {
                        lo = m;
                        hi = m;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = m;
                        flo = fm;
                    } else {
                        hi = m;
                    }
                }
                out.push((lo, hi));
            }
        }
        last = Some((x, v));
    }
    Ok(out)
}

/// Isolating intervals for the real zeros of `f` in `[a, b]`.
pub fn isolate_real_zeros(f: &FunctionExpr, a: &Q, b: &Q) -> Result<ZeroIsolation> {
    if let Some((num, den)) = f.expr.to_rational() {
        return Ok(ZeroIsolation {
            intervals: num_isolation(&num, &den, a, b),
            exact: true,
            flagged: false,
        });
    }
    let (af, bf) = (rational::to_f64(a), rational::to_f64(b));
    let found = sampled_zeros(|x| f.eval_f64(x), af, bf, DEFAULT_DENSITY)?;
    let declared = f.expr.declared_zero_bound();
    if let Some(n) = declared {
        if found.len() > n {
            return Err(Error::ZeroCountMismatch { found: found.len(), declared: n });
        }
    }
    Ok(ZeroIsolation {
        intervals: found
            .into_iter()
            .map(|(lo, hi)| (rational::from_f64(lo), rational::from_f64(hi)))
            .collect(),
        exact: false,
        flagged: declared.is_some_and(|n| n != 0),
    })
}

fn num_isolation(num: &UPoly, den: &UPoly, a: &Q, b: &Q) -> Vec<(Q, Q)> {
    if num.is_zero() {
        return vec![];
    }
    let sf = num.square_free();
    sf.isolate_roots(a, b)
        .into_iter()
        .filter(|(lo, hi)| !(lo == hi && den.eval(lo).is_zero()))
        .collect()
}

//! Exact rational helpers and the `{"num": "...", "den": "..."}` JSON encoding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| ratio_f64(x.numer(), x.denom()))
}

/// `n / d` as a float without forming the reduced rational.
pub fn ratio_f64(n: &BigInt, d: &BigInt) -> f64 {
    // scale both down via bit lengths so huge ratios stay finite
    let shift = n.bits().max(d.bits()).saturating_sub(900);
    let n = (n >> shift).to_f64().unwrap_or(0.0);
    let d = (d >> shift).to_f64().unwrap_or(1.0);
    n / d
}

/// Exact dyadic value of a finite float.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).unwrap_or_else(Q::zero)
}

/// Short dyadic rational close to `x`: rounds `x` to a multiple of 2^-bits.
pub fn dyadic(x: f64, bits: u32) -> Q {
    let scale = 2f64.powi(bits as i32);
    let n = (x * scale).round();
    Q::new(
        BigInt::from(n as i128),
        BigInt::one() << bits as usize,
    )
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

pub fn pow(x: &Q, e: u32) -> Q {
    let mut r = Q::one();
    for _ in 0..e {
        r *= x;
    }
    r
}

/// Exact square root when `x` is the square of a rational.
pub fn sqrt_exact(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Q::new(n, d))
    } else {
        None
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    num: String,
    den: String,
}

pub fn to_wire(x: &Q) -> serde_json::Value {
    serde_json::json!({"num": x.numer().to_string(), "den": x.denom().to_string()})
}

pub fn parse(num: &str, den: &str) -> Option<Q> {
    let n: BigInt = num.trim().parse().ok()?;
    let d: BigInt = den.trim().parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Q::new(n, d))
}

/// serde adapter: `#[serde(with = "crate::rational::serde_q")]`
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        Wire {
            num: x.numer().to_string(),
            den: x.denom().to_string(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let w = Wire::deserialize(d)?;
        parse(&w.num, &w.den).ok_or_else(|| serde::de::Error::custom("invalid rational"))
    }
}

pub mod serde_q_vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let ws: Vec<Wire> = xs
            .iter()
            .map(|x| Wire {
                num: x.numer().to_string(),
                den: x.denom().to_string(),
            })
            .collect();
        ws.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let ws = Vec::<Wire>::deserialize(d)?;
        ws.into_iter()
            .map(|w| parse(&w.num, &w.den).ok_or_else(|| serde::de::Error::custom("invalid rational")))
            .collect()
    }
}

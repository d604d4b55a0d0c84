//! Truncated Taylor series ("jets") over exact rationals, reals and complexes.
//!
//! A jet of order `n` stores the normalized Taylor coefficients
//! `c_i = f^(i)(x0) / i!` for `i = 0..=n`. Arithmetic on jets is exact
//! symbolic differentiation of the expression that produced them, evaluated
//! at `x0`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::rational::{self, Q};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero_s() -> Self;
    fn one_s() -> Self;
    fn from_q(x: &Q) -> Self;
    fn from_i64(x: i64) -> Self;
    fn is_zero_s(&self) -> bool;
    fn magnitude(&self) -> f64;
    fn to_c64(&self) -> Complex64;
    /// `None` when the value is not representable (e.g. a non-real value for `f64`).
    fn from_c64(z: Complex64) -> Option<Self>;
    fn sqrt(&self) -> Option<Self>;
    fn exp(&self) -> Option<Self>;
    fn ln(&self) -> Option<Self>;
    fn sin_cos(&self) -> Option<(Self, Self)>;
}

impl Scalar for f64 {
    fn zero_s() -> Self {
        0.0
    }
    fn one_s() -> Self {
        1.0
    }
    fn from_q(x: &Q) -> Self {
        rational::to_f64(x)
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn is_zero_s(&self) -> bool {
        *self == 0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        if z.im.abs() <= 1e-9 * (1.0 + z.re.abs()) {
            Some(z.re)
        } else {
            None
        }
    }
    fn sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| f64::sqrt(*self))
    }
    fn exp(&self) -> Option<Self> {
        Some(f64::exp(*self))
    }
    fn ln(&self) -> Option<Self> {
        (*self > 0.0).then(|| f64::ln(*self))
    }
    fn sin_cos(&self) -> Option<(Self, Self)> {
        Some(f64::sin_cos(*self))
    }
}

impl Scalar for Complex64 {
    fn zero_s() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one_s() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_q(x: &Q) -> Self {
        Complex64::new(rational::to_f64(x), 0.0)
    }
    fn from_i64(x: i64) -> Self {
        Complex64::new(x as f64, 0.0)
    }
    fn is_zero_s(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        Some(z)
    }
    // principal branches
    fn sqrt(&self) -> Option<Self> {
        Some(Complex64::sqrt(*self))
    }
    fn exp(&self) -> Option<Self> {
        Some(Complex64::exp(*self))
    }
    fn ln(&self) -> Option<Self> {
        (!Scalar::is_zero_s(self)).then(|| Complex64::ln(*self))
    }
    fn sin_cos(&self) -> Option<(Self, Self)> {
        Some((Complex64::sin(*self), Complex64::cos(*self)))
    }
}

impl Scalar for Q {
    fn zero_s() -> Self {
        Zero::zero()
    }
    fn one_s() -> Self {
        One::one()
    }
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn from_i64(x: i64) -> Self {
        rational::qi(x)
    }
    fn is_zero_s(&self) -> bool {
        Zero::is_zero(self)
    }
    fn magnitude(&self) -> f64 {
        rational::to_f64(self).abs()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational::to_f64(self), 0.0)
    }
    fn from_c64(_: Complex64) -> Option<Self> {
        None
    }
    fn sqrt(&self) -> Option<Self> {
        rational::sqrt_exact(self)
    }
    fn exp(&self) -> Option<Self> {
        Zero::is_zero(self).then(One::one)
    }
    fn ln(&self) -> Option<Self> {
        One::is_one(self).then(Zero::zero)
    }
    fn sin_cos(&self) -> Option<(Self, Self)> {
        Zero::is_zero(self).then(|| (Zero::zero(), One::one()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    pub c: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn constant(v: T, order: usize) -> Self {
        let mut c = vec![T::zero_s(); order + 1];
        c[0] = v;
        Jet { c }
    }

    /// The identity function expanded at `x0`.
    pub fn variable(x0: T, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.c[1] = T::one_s();
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> &T {
        &self.c[0]
    }

    /// Derivatives `f(x0), f'(x0), ..., f^(n)(x0)`.
    pub fn derivatives(&self) -> Vec<T> {
        let mut fact = T::one_s();
        self.c
            .iter()
            .enumerate()
            .map(|(i, ci)| {
                if i > 0 {
                    fact = fact.clone() * T::from_i64(i as i64);
                }
                ci.clone() * fact.clone()
            })
            .collect()
    }

    pub fn from_derivatives(d: &[T]) -> Self {
        let mut fact = T::one_s();
        let c = d
            .iter()
            .enumerate()
            .map(|(i, di)| {
                if i > 0 {
                    fact = fact.clone() * T::from_i64(i as i64);
                }
                di.clone() / fact.clone()
            })
            .collect();
        Jet { c }
    }

    pub fn scale(&self, s: &T) -> Self {
        Jet {
            c: self.c.iter().map(|a| a.clone() * s.clone()).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Jet {
            c: self.c.iter().map(|a| -a.clone()).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.order();
        let mut c = vec![T::zero_s(); n + 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero_s() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate().take(n + 1 - i) {
                c[i + j] = c[i + j].clone() + a.clone() * b.clone();
            }
        }
        Jet { c }
    }

    /// `None` when the divisor vanishes at the expansion point.
    pub fn div(&self, o: &Self) -> Option<Self> {
        if o.c[0].is_zero_s() {
            return None;
        }
        let n = self.order();
        let mut c: Vec<T> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = self.c[k].clone();
            for j in 1..=k {
                acc = acc - o.c[j].clone() * c[k - j].clone();
            }
            c.push(acc / o.c[0].clone());
        }
        Some(Jet { c })
    }

    pub fn powi(&self, e: i32) -> Option<Self> {
        let n = self.order();
        let mut base = self.clone();
        let mut acc = Self::constant(T::one_s(), n);
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        if e < 0 {
            Self::constant(T::one_s(), n).div(&acc)
        } else {
            Some(acc)
        }
    }

    pub fn sqrt(&self) -> Option<Self> {
        let n = self.order();
        let s0 = self.c[0].sqrt()?;
        if n > 0 && s0.is_zero_s() {
            return None;
        }
        let two_s0 = s0.clone() + s0.clone();
        let mut c = vec![s0];
        for k in 1..=n {
            let mut acc = self.c[k].clone();
            for j in 1..k {
                acc = acc - c[j].clone() * c[k - j].clone();
            }
            c.push(acc / two_s0.clone());
        }
        Some(Jet { c })
    }

    pub fn exp(&self) -> Option<Self> {
        let n = self.order();
        let mut c = vec![self.c[0].exp()?];
        for k in 1..=n {
            let mut acc = T::zero_s();
            for j in 1..=k {
                acc = acc + T::from_i64(j as i64) * self.c[j].clone() * c[k - j].clone();
            }
            c.push(acc / T::from_i64(k as i64));
        }
        Some(Jet { c })
    }

    pub fn ln(&self) -> Option<Self> {
        let n = self.order();
        let a0 = self.c[0].clone();
        let mut c = vec![a0.ln()?];
        for k in 1..=n {
            let mut acc = self.c[k].clone();
            for j in 1..k {
                acc = acc
                    - T::from_i64(j as i64) * c[j].clone() * self.c[k - j].clone()
                        / T::from_i64(k as i64);
            }
            c.push(acc / a0.clone());
        }
        Some(Jet { c })
    }

    pub fn sin_cos(&self) -> Option<(Self, Self)> {
        let n = self.order();
        let (s0, c0) = self.c[0].sin_cos()?;
        let mut s = vec![s0];
        let mut co = vec![c0];
        for k in 1..=n {
            let mut sa = T::zero_s();
            let mut ca = T::zero_s();
            for j in 1..=k {
                let ja = T::from_i64(j as i64) * self.c[j].clone();
                sa = sa + ja.clone() * co[k - j].clone();
                ca = ca - ja * s[k - j].clone();
            }
            s.push(sa / T::from_i64(k as i64));
            co.push(ca / T::from_i64(k as i64));
        }
        Some((Jet { c: s }, Jet { c: co }))
    }

    /// Compose an outer series (normalized coefficients around `self.c[0]`)
    /// with this jet: returns `outer(self)`.
    pub fn compose_outer(&self, outer: &[T]) -> Self {
        let n = self.order();
        let mut delta = self.clone();
        delta.c[0] = T::zero_s();
        let mut acc = Self::constant(T::zero_s(), n);
        let mut pw = Self::constant(T::one_s(), n);
        for (i, a) in outer.iter().enumerate().take(n + 1) {
            if i > 0 {
                pw = pw.mul(&delta);
            }
            acc = acc.add(&pw.scale(a));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn cube_derivatives_exact() {
        let x = Jet::variable(q(1, 2), 3);
        let f = x.powi(3).unwrap();
        assert_eq!(f.derivatives(), vec![q(1, 8), q(3, 4), q(3, 1), q(6, 1)]);
    }

    #[test]
    fn reciprocal_series() {
        // 1/(1+x) at 0: 1, -1, 2, -6
        let x = Jet::variable(0.0, 3);
        let one = Jet::constant(1.0, 3);
        let f = one.div(&one.add(&x)).unwrap();
        assert_eq!(f.derivatives(), vec![1.0, -1.0, 2.0, -6.0]);
    }

    #[test]
    fn sqrt_and_exp_match_closed_forms() {
        let x0 = 0.7f64;
        let x = Jet::variable(x0, 4);
        let s = x.sqrt().unwrap().derivatives();
        assert!((s[1] - 0.5 / x0.sqrt()).abs() < 1e-14);
        assert!((s[2] + 0.25 * x0.powf(-1.5)).abs() < 1e-14);
        let e = x.exp().unwrap().derivatives();
        for d in e {
            assert!((d - x0.exp()).abs() < 1e-13);
        }
        let (sn, cs) = x.sin_cos().unwrap();
        let sd = sn.derivatives();
        assert!((sd[3] + x0.cos()).abs() < 1e-14);
        assert!((cs.derivatives()[2] + x0.cos()).abs() < 1e-14);
        let l = x.ln().unwrap().derivatives();
        assert!((l[2] + 1.0 / (x0 * x0)).abs() < 1e-13);
    }
}

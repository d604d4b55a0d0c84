//! Univariate polynomials with exact rational coefficients.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use crate::rational::{self, Q};

/// Coefficients stored lowest degree first, with no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UPoly {
    coeffs: Vec<Q>,
}

impl UPoly {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UPoly { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| rational::qi(v)).collect())
    }

    pub fn zero() -> Self {
        UPoly { coeffs: vec![] }
    }

    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![Q::zero(), Q::one()])
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Q {
        self.coeffs.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn eval(&self, x: &Q) -> Q {
        let mut acc = Q::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + rational::to_f64(c))
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + rational::to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * rational::qi(i as i64))
                .collect(),
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).cloned().unwrap_or_default()
                        + o.coeffs.get(i).cloned().unwrap_or_default()
                })
                .collect(),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Q::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(Q::one()), |acc, _| acc.mul(self))
    }

    /// `self(inner(x))`
    pub fn compose(&self, inner: &Self) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(inner).add(&Self::constant(c.clone()));
        }
        acc
    }

    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let dd = d.coeffs.len() - 1;
        let lead = d.leading();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut qc = vec![Q::zero(); r.len() - dd];
        for k in (0..qc.len()).rev() {
            let coef = &r[k + dd] / &lead;
            if !coef.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    r[k + j] -= &coef * dc;
                }
            }
            qc[k] = coef;
        }
        r.truncate(dd);
        (Self::new(qc), Self::new(r))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&(Q::one() / self.leading()))
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    pub fn square_free(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0
    }

    pub fn sturm_sequence(&self) -> Vec<UPoly> {
        let mut seq = vec![self.clone(), self.derivative()];
        while !seq.last().unwrap().is_zero() {
            let n = seq.len();
            let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
            // positive rescaling keeps signs and curbs coefficient growth
            let s = if r.is_zero() { Q::one() } else { r.leading().abs() };
            seq.push(r.scale(&(-Q::one() / s)));
        }
        seq.pop();
        seq
    }

    /// Sign variations of the Sturm sequence at `x`.
    pub fn sturm_variations(seq: &[UPoly], x: &Q) -> usize {
        let signs: Vec<i8> = seq
            .iter()
            .map(|p| {
                let v = p.eval(x);
                if v.is_positive() {
                    1
                } else if v.is_negative() {
                    -1
                } else {
                    0
                }
            })
            .filter(|&s| s != 0)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Number of distinct real zeros in `(a, b]`.
    pub fn count_roots(&self, a: &Q, b: &Q) -> usize {
        let sf = self.square_free();
        if sf.degree().unwrap_or(0) == 0 {
            return 0;
        }
        let seq = sf.sturm_sequence();
        Self::sturm_variations(&seq, a) - Self::sturm_variations(&seq, b)
    }

    /// Disjoint isolating intervals, sorted, for the distinct real zeros in `[a, b]`.
    /// An exactly rational zero hit by bisection comes back as a degenerate interval.
    pub fn isolate_roots(&self, a: &Q, b: &Q) -> Vec<(Q, Q)> {
        if self.is_zero() {
            return vec![];
        }
        let sf = self.square_free();
        if sf.degree().unwrap_or(0) == 0 {
            return vec![];
        }
        let seq = sf.sturm_sequence();
        let mut out = Vec::new();
        if sf.eval(a).is_zero() {
            out.push((a.clone(), a.clone()));
        }
        Self::isolate_half_open(&sf, &seq, a.clone(), b.clone(), &mut out);
        out
    }

    fn isolate_half_open(sf: &UPoly, seq: &[UPoly], a: Q, b: Q, out: &mut Vec<(Q, Q)>) {
        let n = Self::sturm_variations(seq, &a) - Self::sturm_variations(seq, &b);
        if n == 0 {
            return;
        }
        if n == 1 {
            if sf.eval(&b).is_zero() {
                out.push((b.clone(), b));
                return;
            }
            // a zero sitting at `a` belongs to the neighbour; keep bisecting so
            // refinement never mistakes it for this one
            if !sf.eval(&a).is_zero() {
                out.push((a, b));
                return;
            }
        }
        let m = (&a + &b) / rational::qi(2);
        Self::isolate_half_open(sf, seq, a, m.clone(), out);
        Self::isolate_half_open(sf, seq, m, b, out);
    }

    /// Shrink an isolating interval of a square-free polynomial to width `<= width`.
    pub fn refine_root(&self, iv: &(Q, Q), width: &Q) -> (Q, Q) {
        let (mut a, mut b) = iv.clone();
        if a == b {
            return (a, b);
        }
        let sa = self.eval(&a);
        if sa.is_zero() {
            return (a.clone(), a);
        }
        let pos_at_a = sa.is_positive();
        while &(&b - &a) > width {
            let m = (&a + &b) / rational::qi(2);
            let v = self.eval(&m);
            if v.is_zero() {
                return (m.clone(), m);
            }
            if v.is_positive() == pos_at_a {
                a = m;
            } else {
                b = m;
            }
        }
        (a, b)
    }

    /// All complex roots from companion-matrix eigenvalues, Newton-polished,
    /// each with the radius `deg * |p(z)/p'(z)|` of a disk guaranteed to hold a root.
    pub fn complex_roots(&self) -> Vec<(Complex64, f64)> {
        let Some(n) = self.degree() else { return vec![] };
        if n == 0 {
            return vec![];
        }
        let lead = rational::to_f64(&self.leading());
        let c: Vec<f64> = self.coeffs.iter().map(|v| rational::to_f64(v) / lead).collect();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -c[i];
        }
        let eig = m.complex_eigenvalues();
        let dp = self.derivative();
        eig.iter()
            .map(|&z0| {
                let mut z = z0;
                for _ in 0..50 {
                    let pz = self.eval_c64(z);
                    let dz = dp.eval_c64(z);
                    if dz.norm() == 0.0 {
                        break;
                    }
                    let step = pz / dz;
                    z -= step;
                    if step.norm() <= 1e-16 * (1.0 + z.norm()) {
                        break;
                    }
                }
                let pz = self.eval_c64(z);
                let dz = dp.eval_c64(z);
                let r = if pz.norm() == 0.0 {
                    0.0
                } else if dz.norm() == 0.0 {
                    f64::INFINITY
                } else {
                    n as f64 * (pz / dz).norm()
                };
                // floor at a few ulps so clustered roots keep a nonzero radius
                (z, r.max(4.0 * f64::EPSILON * (1.0 + z.norm())))
            })
            .collect()
    }
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*x"),
                _ => format!("{c}*x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn division_and_gcd() {
        let p = UPoly::from_ints(&[-1, 0, 1]); // x^2 - 1
        let d = UPoly::from_ints(&[-1, 1]);
        let (qt, r) = p.div_rem(&d);
        assert_eq!(qt, UPoly::from_ints(&[1, 1]));
        assert!(r.is_zero());
        let g = p.gcd(&UPoly::from_ints(&[-1, 0, 0, 1]));
        assert_eq!(g, UPoly::from_ints(&[-1, 1]));
    }

    #[test]
    fn quarter_roots() {
        let p = UPoly::new(vec![q(-1, 4), Q::zero(), Q::one()]);
        let iv = p.isolate_roots(&qi(-1), &qi(1));
        assert_eq!(iv.len(), 2);
        for (r, (a, b)) in [q(-1, 2), q(1, 2)].iter().zip(&iv) {
            assert!(a <= r && r <= b);
        }
    }

    #[test]
    fn cubic_roots_and_exact_hits() {
        let p = UPoly::from_ints(&[0, -1, 0, 1]);
        let iv = p.isolate_roots(&qi(-2), &qi(2));
        assert_eq!(iv.len(), 3);
        assert_eq!(iv[1], (qi(0), qi(0)));
        assert_eq!(p.count_roots(&qi(-2), &qi(2)), 3);
        // endpoint zero
        let iv = p.isolate_roots(&qi(-1), &qi(1));
        assert_eq!(iv.first().unwrap(), &(qi(-1), qi(-1)));
        assert_eq!(iv.last().unwrap(), &(qi(1), qi(1)));
    }

    #[test]
    fn repeated_roots_counted_once() {
        let p = UPoly::from_ints(&[1, -2, 1]).mul(&UPoly::from_ints(&[2, 1]));
        assert_eq!(p.isolate_roots(&qi(-3), &qi(3)).len(), 2);
    }

    #[test]
    fn root_beside_an_exact_bisection_hit() {
        // 12x(2x - 1)(2x + 1)(x^2 + 1): bisection lands on 0 with 1/2 still inside (0, 1]
        let p = UPoly::from_ints(&[0, -12, 0, 36, 0, 48]);
        let roots: Vec<(Q, Q)> = p.isolate_roots(&qi(-1), &qi(1)).iter().map(|iv| p.refine_root(iv, &q(1, 1 << 20))).collect();
        assert_eq!(roots, vec![(q(-1, 2), q(-1, 2)), (qi(0), qi(0)), (q(1, 2), q(1, 2))]);
    }

    #[test]
    fn companion_roots_of_cubic() {
        let p = UPoly::from_ints(&[0, -1, 0, 1]);
        let mut re: Vec<f64> = p.complex_roots().iter().map(|(z, _)| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_polys() {
        let p = UPoly::from_ints(&[0, 0, 1]);
        let inner = UPoly::from_ints(&[1, 1]);
        assert_eq!(p.compose(&inner), UPoly::from_ints(&[1, 2, 1]));
    }
}

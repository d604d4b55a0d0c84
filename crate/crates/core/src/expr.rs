//! Function expressions: closed forms, algebraic branches and declared blackboxes.
//!
//! Every expression is evaluated through [`Jet`] arithmetic, so the same tree
//! yields exact rational derivatives (when the expression is rational),
//! real derivatives, or complex values for disk certification.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::bivar::{self, BivarPoly, ContinuationConfig, SingularityData};
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::rational::{self, Q};
use crate::upoly::UPoly;

/// Cap on the derivative order accepted by [`FunctionExpr::derivatives`].
pub const MAX_ORDER: usize = 64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Branch {
    pub poly: BivarPoly,
    /// A point `(x, y)` on `P = 0` selecting the branch.
    pub seed: (f64, f64),
    #[serde(skip)]
    locus: OnceLock<Arc<SingularityData>>,
}

impl PartialEq for Branch {
    fn eq(&self, o: &Self) -> bool {
        self.poly == o.poly && self.seed == o.seed
    }
}

impl Branch {
    pub fn new(poly: BivarPoly, seed: (f64, f64)) -> Self {
        Branch {
            poly,
            seed,
            locus: OnceLock::new(),
        }
    }

    pub fn locus(&self) -> Arc<SingularityData> {
        self.locus
            .get_or_init(|| Arc::new(bivar::singular_locus(&self.poly).unwrap_or_default()))
            .clone()
    }

    /// Value of the branch at `z`, continued from the seed along the real
    /// axis to `Re z` and then vertically.
    pub fn value_at(&self, z: Complex64) -> Result<Complex64> {
        let sing = self.locus();
        let x0 = Complex64::new(self.seed.0, 0.0);
        let mut path = vec![x0];
        let foot = Complex64::new(z.re, 0.0);
        if (foot - x0).norm() > 0.0 {
            path.push(foot);
        }
        if z.im != 0.0 {
            path.push(z);
        }
        let start = Complex64::new(self.seed.1, 0.0);
        let vals = bivar::continue_along(&self.poly, &sing, start, &path, &ContinuationConfig::default())
            .map_err(|e| match e {
                Error::PathNearSingularity { .. } => Error::EvaluationAtSingularity { x: z.re },
                other => other,
            })?;
        Ok(*vals.last().unwrap())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expr {
    Var,
    Const {
        #[serde(with = "rational::serde_q")]
        value: Q,
    },
    /// Polynomial in the variable, coefficients lowest degree first.
    Poly {
        #[serde(with = "rational::serde_q_vec")]
        coeffs: Vec<Q>,
    },
    Add { a: Box<Expr>, b: Box<Expr> },
    Sub { a: Box<Expr>, b: Box<Expr> },
    Mul { a: Box<Expr>, b: Box<Expr> },
    Div { num: Box<Expr>, den: Box<Expr> },
    Neg { arg: Box<Expr> },
    Pow { arg: Box<Expr>, exp: i32 },
    Sqrt { arg: Box<Expr> },
    Exp { arg: Box<Expr> },
    Ln { arg: Box<Expr> },
    Sin { arg: Box<Expr> },
    Cos { arg: Box<Expr> },
    /// `outer(inner(x))`
    Compose { outer: Box<Expr>, inner: Box<Expr> },
    /// Algebraic branch `y(x)` of `P(x, y) = 0`, applied to `arg` (default: the variable).
    Branch {
        #[serde(flatten)]
        branch: Branch,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arg: Option<Box<Expr>>,
    },
    /// A named function from the blackbox zoo, with its declared zero count.
    BlackboxRef {
        name: String,
        zero_bound: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        body: Option<Box<Expr>>,
    },
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Expr {
    pub fn var() -> Self {
        Expr::Var
    }
    pub fn constant(v: Q) -> Self {
        Expr::Const { value: v }
    }
    pub fn poly(coeffs: Vec<Q>) -> Self {
        Expr::Poly { coeffs }
    }
    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add { a: bx(a), b: bx(b) }
    }
    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub { a: bx(a), b: bx(b) }
    }
    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul { a: bx(a), b: bx(b) }
    }
    pub fn div(num: Expr, den: Expr) -> Self {
        Expr::Div { num: bx(num), den: bx(den) }
    }
    pub fn neg(arg: Expr) -> Self {
        Expr::Neg { arg: bx(arg) }
    }
    pub fn pow(arg: Expr, exp: i32) -> Self {
        Expr::Pow { arg: bx(arg), exp }
    }
    pub fn sqrt(arg: Expr) -> Self {
        Expr::Sqrt { arg: bx(arg) }
    }
    pub fn exp(arg: Expr) -> Self {
        Expr::Exp { arg: bx(arg) }
    }
    pub fn sin(arg: Expr) -> Self {
        Expr::Sin { arg: bx(arg) }
    }
    pub fn compose(outer: Expr, inner: Expr) -> Self {
        Expr::Compose { outer: bx(outer), inner: bx(inner) }
    }
    pub fn branch(poly: BivarPoly, seed: (f64, f64)) -> Self {
        Expr::Branch { branch: Branch::new(poly, seed), arg: None }
    }

    /// Look up a blackbox from the built-in zoo.
    pub fn blackbox(name: &str) -> Result<Self> {
        let (body, n) = blackbox_zoo(name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown blackbox '{name}'")))?;
        Ok(Expr::BlackboxRef { name: name.to_string(), zero_bound: n, body: Some(bx(body)) })
    }

    /// Jet of the expression at the expansion point of `x`.
    pub fn eval_jet<T: Scalar>(&self, x: &Jet<T>) -> Result<Jet<T>> {
        let n = x.order();
        let inexact = |what: &str| Error::InexactCurve(what.to_string());
        Ok(match self {
            Expr::Var => x.clone(),
            Expr::Const { value } => Jet::constant(T::from_q(value), n),
            Expr::Poly { coeffs } => {
                let mut acc = Jet::constant(T::zero_s(), n);
                for c in coeffs.iter().rev() {
                    acc = acc.mul(x).add(&Jet::constant(T::from_q(c), n));
                }
                acc
            }
            Expr::Add { a, b } => a.eval_jet(x)?.add(&b.eval_jet(x)?),
            Expr::Sub { a, b } => a.eval_jet(x)?.sub(&b.eval_jet(x)?),
            Expr::Mul { a, b } => a.eval_jet(x)?.mul(&b.eval_jet(x)?),
            Expr::Div { num, den } => {
                let d = den.eval_jet(x)?;
                num.eval_jet(x)?.div(&d).ok_or(Error::EvaluationAtSingularity {
                    x: x.value().to_c64().re,
                })?
            }
            Expr::Neg { arg } => arg.eval_jet(x)?.neg(),
            Expr::Pow { arg, exp } => arg.eval_jet(x)?.powi(*exp).ok_or(Error::EvaluationAtSingularity {
                x: x.value().to_c64().re,
            })?,
            Expr::Sqrt { arg } => {
                let a = arg.eval_jet(x)?;
                // sqrt(0) itself is fine; only its derivatives blow up
                if a.value().is_zero_s() && x.order() > 0 {
                    return Err(Error::EvaluationAtSingularity { x: x.value().to_c64().re });
                }
                a.sqrt().ok_or_else(|| inexact("sqrt"))?
            }
            Expr::Exp { arg } => arg.eval_jet(x)?.exp().ok_or_else(|| inexact("exp"))?,
            Expr::Ln { arg } => arg.eval_jet(x)?.ln().ok_or_else(|| inexact("ln"))?,
            Expr::Sin { arg } => arg.eval_jet(x)?.sin_cos().ok_or_else(|| inexact("sin"))?.0,
            Expr::Cos { arg } => arg.eval_jet(x)?.sin_cos().ok_or_else(|| inexact("cos"))?.1,
            Expr::Compose { outer, inner } => {
                let u = inner.eval_jet(x)?;
                outer.eval_jet(&u)?
            }
            Expr::Branch { branch, arg } => {
                let u = match arg {
                    Some(a) => a.eval_jet(x)?,
                    None => x.clone(),
                };
                branch_jet(branch, &u)?
            }
            Expr::BlackboxRef { name, body, .. } => match body {
                Some(b) => b.eval_jet(x)?,
                None => {
                    let (b, _) = blackbox_zoo(name)
                        .ok_or_else(|| Error::InvalidInput(format!("unknown blackbox '{name}'")))?;
                    b.eval_jet(x)?
                }
            },
        })
    }

    pub fn eval<T: Scalar>(&self, x: T) -> Result<T> {
        Ok(self.eval_jet(&Jet::variable(x, 0))?.c.swap_remove(0))
    }

    /// Exact `(numerator, denominator)` when the expression is a rational function.
    pub fn to_rational(&self) -> Option<(UPoly, UPoly)> {
        let one = UPoly::constant(Q::one());
        Some(match self {
            Expr::Var => (UPoly::x(), one),
            Expr::Const { value } => (UPoly::constant(value.clone()), one),
            Expr::Poly { coeffs } => (UPoly::new(coeffs.clone()), one),
            Expr::Add { a, b } | Expr::Sub { a, b } => {
                let (an, ad) = a.to_rational()?;
                let (bn, bd) = b.to_rational()?;
                let l = an.mul(&bd);
                let r = bn.mul(&ad);
                let num = if matches!(self, Expr::Add { .. }) { l.add(&r) } else { l.sub(&r) };
                reduce(num, ad.mul(&bd))
            }
            Expr::Mul { a, b } => {
                let (an, ad) = a.to_rational()?;
                let (bn, bd) = b.to_rational()?;
                reduce(an.mul(&bn), ad.mul(&bd))
            }
            Expr::Div { num, den } => {
                let (an, ad) = num.to_rational()?;
                let (bn, bd) = den.to_rational()?;
                if bn.is_zero() {
                    return None;
                }
                reduce(an.mul(&bd), ad.mul(&bn))
            }
            Expr::Neg { arg } => {
                let (n, d) = arg.to_rational()?;
                (n.scale(&-Q::one()), d)
            }
            Expr::Pow { arg, exp } => {
                let (n, d) = arg.to_rational()?;
                let e = exp.unsigned_abs();
                if *exp >= 0 {
                    (n.pow(e), d.pow(e))
                } else {
                    if n.is_zero() {
                        return None;
                    }
                    reduce(d.pow(e), n.pow(e))
                }
            }
            Expr::Compose { outer, inner } => {
                let (on, od) = outer.to_rational()?;
                let (inn, ind) = inner.to_rational()?;
                let deg = on.degree().unwrap_or(0).max(od.degree().unwrap_or(0)) as u32;
                reduce(homogenize(&on, &inn, &ind, deg), homogenize(&od, &inn, &ind, deg))
            }
            _ => return None,
        })
    }

    /// Declared zero-count bound when the expression is (or wraps) a blackbox.
    pub fn declared_zero_bound(&self) -> Option<usize> {
        match self {
            Expr::BlackboxRef { zero_bound, .. } => Some(*zero_bound),
            Expr::Compose { outer, .. } => outer.declared_zero_bound(),
            _ => None,
        }
    }

    pub fn contains_branch(&self) -> bool {
        match self {
            Expr::Branch { .. } => true,
            Expr::Var | Expr::Const { .. } | Expr::Poly { .. } => false,
            Expr::Add { a, b } | Expr::Sub { a, b } | Expr::Mul { a, b } => a.contains_branch() || b.contains_branch(),
            Expr::Div { num, den } => num.contains_branch() || den.contains_branch(),
            Expr::Compose { outer, inner } => outer.contains_branch() || inner.contains_branch(),
            Expr::Neg { arg }
            | Expr::Pow { arg, .. }
            | Expr::Sqrt { arg }
            | Expr::Exp { arg }
            | Expr::Ln { arg }
            | Expr::Sin { arg }
            | Expr::Cos { arg } => arg.contains_branch(),
            Expr::BlackboxRef { .. } => false,
        }
    }
}

/// `sum_i c_i n^i d^(deg - i)`: numerator of `p(n/d)` times `d^deg`.
fn homogenize(p: &UPoly, n: &UPoly, d: &UPoly, deg: u32) -> UPoly {
    let mut acc = UPoly::zero();
    for (i, c) in p.coeffs().iter().enumerate() {
        let t = n.pow(i as u32).mul(&d.pow(deg - i as u32)).scale(c);
        acc = acc.add(&t);
    }
    acc
}

fn reduce(n: UPoly, d: UPoly) -> (UPoly, UPoly) {
    if n.is_zero() {
        return (n, UPoly::constant(Q::one()));
    }
    let g = n.gcd(&d);
    let (n, _) = n.div_rem(&g);
    let (d, _) = d.div_rem(&g);
    let lead = d.leading();
    (n.scale(&(Q::one() / &lead)), d.scale(&(Q::one() / lead)))
}

/// Series of the branch through the value continued to `u(x0)`,
/// by Newton iteration on jets.
fn branch_jet<T: Scalar>(branch: &Branch, u: &Jet<T>) -> Result<Jet<T>> {
    let z = u.value().to_c64();
    let y0c = branch.value_at(z)?;
    let y0 = T::from_c64(y0c).ok_or_else(|| Error::InexactCurve("algebraic branch".into()))?;
    let n = u.order();
    let p = &branch.poly;
    let py = p.d_dy();
    let mut y = Jet::constant(y0, n);
    let eval = |poly: &BivarPoly, y: &Jet<T>| -> Jet<T> {
        let mut acc = Jet::constant(T::zero_s(), n);
        for j in (0..=poly.deg_y()).rev() {
            let mut cx = Jet::constant(T::zero_s(), n);
            for i in (0..=poly.deg_x()).rev() {
                cx = cx.mul(u).add(&Jet::constant(T::from_q(&poly.coeff(i, j)), n));
            }
            acc = acc.mul(y).add(&cx);
        }
        acc
    };
    let mut done = 1usize;
    while done <= n {
        let f = eval(p, &y);
        let d = eval(&py, &y);
        let step = f.div(&d).ok_or(Error::EvaluationAtSingularity { x: z.re })?;
        y = y.sub(&step);
        done *= 2;
    }
    // one more pass so the top coefficient has seen a full correction
    if n > 0 {
        let f = eval(p, &y);
        let d = eval(&py, &y);
        y = y.sub(&f.div(&d).ok_or(Error::EvaluationAtSingularity { x: z.re })?);
    }
    Ok(y)
}

/// Named blackbox functions with their declared zero counts (for the
/// function and its first few derivatives on `[-1, 1]`).
pub fn blackbox_zoo(name: &str) -> Option<(Expr, usize)> {
    let x = Expr::var;
    Some(match name {
        // e^{-1/t}, flat at 0; declared on (0, 1]
        "exp-neg-inv" => (
            Expr::exp(Expr::neg(Expr::div(Expr::constant(Q::one()), x()))),
            4,
        ),
        "sin" => (Expr::sin(x()), 3),
        "exp" => (Expr::exp(x()), 0),
        // sin(3x)/4: several derivative zeros per unit
        "sin3" => (
            Expr::mul(
                Expr::constant(rational::q(1, 4)),
                Expr::sin(Expr::mul(Expr::constant(rational::qi(3)), x())),
            ),
            4,
        ),
        _ => return None,
    })
}

/// A function with its closed domain `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionExpr {
    pub expr: Expr,
    #[serde(with = "rational::serde_q")]
    pub lo: Q,
    #[serde(with = "rational::serde_q")]
    pub hi: Q,
    /// Singularities declared by the caller (blackboxes of meromorphic class).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_singularities: Option<SingularityData>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Derivatives {
    Exact(Vec<Q>),
    Float(Vec<f64>),
}

impl Derivatives {
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Derivatives::Exact(v) => v.iter().map(rational::to_f64).collect(),
            Derivatives::Float(v) => v.clone(),
        }
    }
}

impl FunctionExpr {
    pub fn new(expr: Expr, lo: Q, hi: Q) -> Self {
        FunctionExpr { expr, lo, hi, declared_singularities: None }
    }

    pub fn domain_f64(&self) -> (f64, f64) {
        (rational::to_f64(&self.lo), rational::to_f64(&self.hi))
    }

    /// `f(x), f'(x), ..., f^(order)(x)`: exact for rational expressions at
    /// rational `x`, floats otherwise.
    pub fn derivatives(&self, x: &Q, order: usize) -> Result<Derivatives> {
        if order > MAX_ORDER {
            return Err(Error::OrderOverflow { order, cap: MAX_ORDER });
        }
        self.check_domain(rational::to_f64(x))?;
        match self.expr.eval_jet(&Jet::variable(x.clone(), order)) {
            Ok(j) => return Ok(Derivatives::Exact(j.derivatives())),
            Err(Error::InexactCurve(_)) => {}
            Err(e) => return Err(e),
        }
        self.derivatives_f64(rational::to_f64(x), order).map(Derivatives::Float)
    }

    pub fn derivatives_f64(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        if order > MAX_ORDER {
            return Err(Error::OrderOverflow { order, cap: MAX_ORDER });
        }
        let j = self.expr.eval_jet(&Jet::variable(x, order))?;
        let d = j.derivatives();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::EvaluationAtSingularity { x });
        }
        Ok(d)
    }

    pub fn eval_f64(&self, x: f64) -> Result<f64> {
        self.expr.eval(x)
    }

    pub fn eval_c64(&self, z: Complex64) -> Result<Complex64> {
        self.expr.eval(z)
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.domain_f64();
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if x < lo - slack || x > hi + slack {
            return Err(Error::InvalidInput(format!("x = {x} outside [{lo}, {hi}]")));
        }
        if let Some(s) = &self.declared_singularities {
            for p in &s.points {
                if (Complex64::new(x, 0.0) - p.z()).norm() <= p.radius {
                    return Err(Error::EvaluationAtSingularity { x });
                }
            }
        }
        Ok(())
    }

    /// Singular data: the branch locus for algebraic branches, poles of
    /// rational functions, or what the caller declared.
    pub fn singularities(&self) -> Result<SingularityData> {
        if let Some(s) = &self.declared_singularities {
            return Ok(s.clone());
        }
        if let Some((_, den)) = self.expr.to_rational() {
            let mut sd = SingularityData::default();
            for (z, r) in den.complex_roots() {
                sd.points.push(bivar::SingularPoint {
                    re: z.re,
                    im: z.im,
                    radius: r,
                    source: bivar::SingularitySource::Pole,
                });
            }
            return Ok(sd);
        }
        let mut sd = SingularityData::default();
        collect_branch_loci(&self.expr, &mut sd);
        Ok(sd)
    }
}

fn collect_branch_loci(e: &Expr, out: &mut SingularityData) {
    match e {
        Expr::Branch { branch, arg: None } => out.points.extend(branch.locus().points.iter().cloned()),
        Expr::Add { a, b } | Expr::Sub { a, b } | Expr::Mul { a, b } => {
            collect_branch_loci(a, out);
            collect_branch_loci(b, out);
        }
        Expr::Div { num, den } => {
            collect_branch_loci(num, out);
            collect_branch_loci(den, out);
        }
        Expr::Neg { arg } | Expr::Pow { arg, .. } => collect_branch_loci(arg, out),
        _ => {}
    }
}

impl Expr {
    /// Derivative of a rational function `n/d`, as a reduced pair.
    pub fn rational_derivative(n: &UPoly, d: &UPoly) -> (UPoly, UPoly) {
        let num = n.derivative().mul(d).sub(&n.mul(&d.derivative()));
        reduce(num, d.mul(d))
    }

    /// Numerators `N_0..=N_k` with `(n/d)^(i) = N_i / d^(i+1)`, without gcd reduction.
    pub fn rational_derivative_numerators(n: &UPoly, d: &UPoly, k: usize) -> Vec<UPoly> {
        let dd = d.derivative();
        let mut out = vec![n.clone()];
        for i in 0..k {
            let ni = &out[i];
            let c = UPoly::constant(crate::rational::qi(i as i64 + 1));
            let next = ni.derivative().mul(d).sub(&c.mul(ni).mul(&dd));
            out.push(next);
        }
        out
    }
}

pub fn is_one(d: &UPoly) -> bool {
    d.degree() == Some(0) && d.leading().is_one()
}

//! Charts as composition chains of exact affine and square steps, and their
//! sampled derivative certificates.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::expr::{Expr, FunctionExpr};
use crate::jet::{Jet, Scalar};
use crate::rational::{self, Q};
use crate::upoly::UPoly;

/// Grid points per dimension used by [`verify_ck_chart`].
pub const DEFAULT_GRID: usize = 1 << 12;
pub const EXACT_TOLERANCE: f64 = 1e-9;
pub const FLOAT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Step {
    /// `t -> a t + b`
    Affine {
        #[serde(with = "rational::serde_q")]
        a: Q,
        #[serde(with = "rational::serde_q")]
        b: Q,
    },
    /// `u -> scale u^2 + shift`; `u = 0` lands on `shift`.
    Square {
        #[serde(with = "rational::serde_q")]
        scale: Q,
        #[serde(with = "rational::serde_q")]
        shift: Q,
    },
}

impl Step {
    pub fn degree(&self) -> u32 {
        match self {
            Step::Affine { .. } => 1,
            Step::Square { .. } => 2,
        }
    }

    /// Affine map sending `[lo, hi]` (source) onto `[to_lo, to_hi]`.
    pub fn affine_between(lo: &Q, hi: &Q, to_lo: &Q, to_hi: &Q) -> Step {
        let a = (to_hi - to_lo) / (hi - lo);
        let b = to_lo - &a * lo;
        Step::Affine { a, b }
    }

    pub fn apply<T: Scalar>(&self, t: &Jet<T>) -> Jet<T> {
        let n = t.order();
        match self {
            Step::Affine { a, b } => t.scale(&T::from_q(a)).add(&Jet::constant(T::from_q(b), n)),
            Step::Square { scale, shift } => t
                .mul(t)
                .scale(&T::from_q(scale))
                .add(&Jet::constant(T::from_q(shift), n)),
        }
    }

    pub fn apply_q(&self, t: &Q) -> Q {
        match self {
            Step::Affine { a, b } => a * t + b,
            Step::Square { scale, shift } => scale * t * t + shift,
        }
    }

    pub fn as_poly(&self) -> UPoly {
        match self {
            Step::Affine { a, b } => UPoly::new(vec![b.clone(), a.clone()]),
            Step::Square { scale, shift } => UPoly::new(vec![shift.clone(), Q::zero(), scale.clone()]),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Step::Affine { a, b } if a.is_one() && b.is_zero())
    }
}

/// Composition chain applied innermost first: `x = s_n(...s_1(t))`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Chain(pub Vec<Step>);

impl Chain {
    pub fn degree(&self) -> u32 {
        self.0.iter().map(Step::degree).product()
    }

    pub fn apply<T: Scalar>(&self, t: &Jet<T>) -> Jet<T> {
        self.0.iter().fold(t.clone(), |acc, s| s.apply(&acc))
    }

    pub fn apply_q(&self, t: &Q) -> Q {
        self.0.iter().fold(t.clone(), |acc, s| s.apply_q(&acc))
    }

    pub fn apply_f64(&self, t: f64) -> f64 {
        *self.apply(&Jet::variable(t, 0)).value()
    }

    pub fn as_poly(&self) -> UPoly {
        self.0.iter().fold(UPoly::x(), |acc, s| s.as_poly().compose(&acc))
    }

    /// Chain with `inner` applied before the existing steps.
    pub fn precompose(&self, inner: Step) -> Chain {
        let mut v = vec![inner];
        v.extend(self.0.iter().cloned());
        Chain(v)
    }
}

/// Value-axis normalization `f -> (f - shift) / scale` applied before parametrizing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    #[serde(with = "rational::serde_q")]
    pub shift: Q,
    #[serde(with = "rational::serde_q")]
    pub scale: Q,
}

impl Normalization {
    pub fn identity() -> Self {
        Normalization { shift: Q::zero(), scale: Q::one() }
    }

    pub fn is_identity(&self) -> bool {
        self.shift.is_zero() && self.scale.is_one()
    }

    pub fn apply(&self, e: &Expr) -> Expr {
        if self.is_identity() {
            return e.clone();
        }
        Expr::mul(
            Expr::constant(Q::one() / &self.scale),
            Expr::sub(e.clone(), Expr::constant(self.shift.clone())),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMethod {
    ExactGrid,
    FloatGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkCertificate {
    pub order: usize,
    /// `max |d^i psi / dt^i|` for `i = 1..=order` (max over components and multi-indices).
    pub chart_bounds: Vec<f64>,
    /// Same for the composed function, when one was given.
    pub function_bounds: Vec<f64>,
    /// `sup |psi(t) - psi(0)|`, and the same for `f∘psi`.
    pub displacement: f64,
    pub verified_bound: f64,
    pub tolerance: f64,
    pub grid: usize,
    pub method: CertMethod,
    pub pass: bool,
}

/// The two boundary functions of a slab `g1(x) <= y <= g2(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabFns {
    pub g1: Expr,
    pub g2: Expr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub id: usize,
    #[serde(with = "rational::serde_q")]
    pub lo: Q,
    #[serde(with = "rational::serde_q")]
    pub hi: Q,
    pub chain: Chain,
    pub degree: u32,
    /// Chart is 2D: `(t1, t2) -> (x(t1), u g2(x) + (1 - u) g1(x))`, `u = (t2 + 1) / 2`.
    #[serde(default)]
    pub slab: bool,
    /// Number of equal splits applied to the final piece.
    #[serde(default)]
    pub final_split: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CkCertificate>,
}

impl Chart {
    pub fn new(id: usize, lo: Q, hi: Q, chain: Chain) -> Self {
        let degree = chain.degree();
        Chart { id, lo, hi, chain, degree, slab: false, final_split: 1, certificate: None }
    }

    /// Image interval on the x-axis, in increasing order.
    pub fn image(&self) -> (Q, Q) {
        let a = self.chain.apply_q(&self.lo);
        let b = self.chain.apply_q(&self.hi);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn center(&self) -> Q {
        (&self.lo + &self.hi) / rational::qi(2)
    }
}

/// What the chart parametrizes, for certificate purposes.
pub enum ChartTarget<'a> {
    None,
    Function(&'a Expr),
    Slab(&'a SlabFns),
}

struct Maxima {
    chart: Vec<f64>,
    func: Vec<f64>,
    disp: f64,
}

fn measure<T: Scalar>(
    chart: &Chart,
    target: &ChartTarget,
    k: usize,
    points: impl Iterator<Item = T>,
    center: T,
) -> Result<Maxima> {
    let mut m = Maxima { chart: vec![0.0; k], func: vec![0.0; k], disp: 0.0 };
    let c_jet = chart.chain.apply(&Jet::variable(center, 0));
    let x0 = c_jet.value().clone();
    let (f0a, f0b) = match target {
        ChartTarget::None => (None, None),
        ChartTarget::Function(e) => (Some(e.eval(x0.clone())?), None),
        ChartTarget::Slab(s) => (Some(s.g1.eval(x0.clone())?), Some(s.g2.eval(x0.clone())?)),
    };
    for t in points {
        let xj = chart.chain.apply(&Jet::variable(t, k));
        let xd = xj.derivatives();
        m.disp = m.disp.max((xd[0].clone() - x0.clone()).magnitude());
        for i in 1..=k {
            m.chart[i - 1] = m.chart[i - 1].max(xd[i].magnitude());
        }
        match target {
            ChartTarget::None => {}
            ChartTarget::Function(e) => {
                let fd = e.eval_jet(&xj)?.derivatives();
                m.disp = m.disp.max((fd[0].clone() - f0a.clone().unwrap()).magnitude());
                for i in 1..=k {
                    m.func[i - 1] = m.func[i - 1].max(fd[i].magnitude());
                }
            }
            ChartTarget::Slab(s) => {
                let a = s.g1.eval_jet(&xj)?.derivatives();
                let b = s.g2.eval_jet(&xj)?.derivatives();
                // second component is affine in u in [0, 1]: extremes at u = 0, 1
                let (a0, b0) = (f0a.clone().unwrap(), f0b.clone().unwrap());
                // psi(0) uses u = 1/2
                let y0 = (a0 + b0) / T::from_i64(2);
                m.disp = m
                    .disp
                    .max((a[0].clone() - y0.clone()).magnitude())
                    .max((b[0].clone() - y0).magnitude());
                for i in 1..=k {
                    let di = a[i].magnitude().max(b[i].magnitude());
                    // mixed partial d^i/dt1^(i-1) dt2 = (G2 - G1)^(i-1) / 2
                    let mixed = (b[i - 1].clone() - a[i - 1].clone()).magnitude() / 2.0;
                    m.func[i - 1] = m.func[i - 1].max(di).max(if i >= 1 { mixed } else { 0.0 });
                }
            }
        }
    }
    Ok(m)
}

/// Integer-coefficient polynomial in the grid index `s = 0..=n`.
struct GridPoly(Vec<BigInt>);

impl GridPoly {
    /// `p(lo + len s / n)` with denominators cleared; returns the common denominator too.
    fn new(p: &UPoly, lo: &Q, len: &Q, n: usize) -> (GridPoly, BigInt) {
        let lin = UPoly::new(vec![lo.clone(), len / rational::qi(n as i64)]);
        let c = p.compose(&lin);
        let den = c.coeffs().iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints = c.coeffs().iter().map(|x| x.numer() * (&den / x.denom())).collect();
        (GridPoly(ints), den)
    }

    fn eval(&self, s: &BigInt) -> BigInt {
        self.0.iter().rev().fold(BigInt::zero(), |acc, c| acc * s + c)
    }
}

/// Rational function of the grid index, evaluated as a big-integer ratio.
struct GridRat {
    num: GridPoly,
    den: GridPoly,
}

impl GridRat {
    fn new(n: &UPoly, d: &UPoly, lo: &Q, len: &Q, grid: usize) -> GridRat {
        let (mut a, ca) = GridPoly::new(n, lo, len, grid);
        let (mut b, cb) = GridPoly::new(d, lo, len, grid);
        a.0.iter_mut().for_each(|x| *x *= &cb);
        b.0.iter_mut().for_each(|x| *x *= &ca);
        GridRat { num: a, den: b }
    }

    fn eval(&self, s: &BigInt) -> f64 {
        rational::ratio_f64(&self.num.eval(s), &self.den.eval(s))
    }
}

/// `[F, F', ..., F^(k)]` of the rational function `n/d` as grid evaluators.
fn grid_jet(n: &UPoly, d: &UPoly, k: usize, lo: &Q, len: &Q, grid: usize) -> Vec<GridRat> {
    let mut dp = d.clone();
    let mut out = Vec::with_capacity(k + 1);
    for ni in Expr::rational_derivative_numerators(n, d, k) {
        out.push(GridRat::new(&ni, &dp, lo, len, grid));
        dp = dp.mul(d);
    }
    out
}

/// Exact-grid maxima: every sample is an exact rational value rounded once to f64.
fn measure_exact(chart: &Chart, target: &ChartTarget, k: usize, n: usize) -> Maxima {
    let len = &chart.hi - &chart.lo;
    let one = UPoly::constant(Q::one());
    let p = chart.chain.as_poly();
    let psi = grid_jet(&p, &one, k, &chart.lo, &len, n);
    let fs: Vec<Vec<GridRat>> = match target {
        ChartTarget::None => vec![],
        ChartTarget::Function(e) => vec![e.to_rational().unwrap()],
        ChartTarget::Slab(sf) => vec![sf.g1.to_rational().unwrap(), sf.g2.to_rational().unwrap()],
    }
    .into_iter()
    .map(|(a, b)| grid_jet(&a.compose(&p), &b.compose(&p), k, &chart.lo, &len, n))
    .collect();
    // the chart center sits at grid index n/2 for even n; otherwise evaluate it directly
    let center = rational::to_f64(&chart.center());
    let c_idx = (n % 2 == 0).then(|| BigInt::from(n / 2));
    let at_center = |g: &GridRat| match &c_idx {
        Some(i) => g.eval(i),
        None => {
            let t = (center - rational::to_f64(&chart.lo)) / rational::to_f64(&len) * n as f64;
            g.num.0.iter().rev().fold(0.0, |a, c| a * t + rational::ratio_f64(c, &BigInt::one()))
                / g.den.0.iter().rev().fold(0.0, |a, c| a * t + rational::ratio_f64(c, &BigInt::one()))
        }
    };
    let x0 = at_center(&psi[0]);
    let f0: Vec<f64> = fs.iter().map(|f| at_center(&f[0])).collect();
    let y0 = if fs.len() == 2 { 0.5 * (f0[0] + f0[1]) } else { f0.first().copied().unwrap_or(0.0) };
    let mut m = Maxima { chart: vec![0.0; k], func: vec![0.0; k], disp: 0.0 };
    for s in 0..=n {
        let s = BigInt::from(s);
        m.disp = m.disp.max((psi[0].eval(&s) - x0).abs());
        for i in 1..=k {
            m.chart[i - 1] = m.chart[i - 1].max(psi[i].eval(&s).abs());
        }
        let vals: Vec<Vec<f64>> = fs.iter().map(|f| f.iter().map(|g| g.eval(&s)).collect()).collect();
        for v in &vals {
            m.disp = m.disp.max((v[0] - y0).abs());
            for i in 1..=k {
                m.func[i - 1] = m.func[i - 1].max(v[i].abs());
            }
        }
        if vals.len() == 2 {
            for i in 1..=k {
                let mixed = (vals[1][i - 1] - vals[0][i - 1]).abs() / 2.0;
                m.func[i - 1] = m.func[i - 1].max(mixed);
            }
        }
    }
    m
}

/// Sampled `C^k` certificate: all derivatives of orders `1..=k` of the chart
/// (and of the target composed with it) and the displacement from the center
/// must be at most `1 + tolerance` on a `grid + 1` point grid.
pub fn verify_ck_chart(
    chart: &Chart,
    target: &ChartTarget,
    k: usize,
    grid: usize,
    exact: bool,
) -> Result<CkCertificate> {
    let exact_ok = exact
        && match target {
            ChartTarget::None => true,
            ChartTarget::Function(e) => e.to_rational().is_some(),
            ChartTarget::Slab(s) => s.g1.to_rational().is_some() && s.g2.to_rational().is_some(),
        };
    let n = grid.max(1);
    let m = if exact_ok {
        measure_exact(chart, target, k, n)
    } else {
        let (lo, hi) = (rational::to_f64(&chart.lo), rational::to_f64(&chart.hi));
        let pts = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64);
        measure::<f64>(chart, target, k, pts, 0.5 * (lo + hi))?
    };
    let tolerance = if exact_ok { EXACT_TOLERANCE } else { FLOAT_TOLERANCE };
    let verified = m
        .chart
        .iter()
        .chain(&m.func)
        .fold(m.disp, |acc, v| acc.max(*v));
    Ok(CkCertificate {
        order: k,
        chart_bounds: m.chart,
        function_bounds: if matches!(target, ChartTarget::None) { vec![] } else { m.func },
        displacement: m.disp,
        verified_bound: verified,
        tolerance,
        grid: n,
        method: if exact_ok { CertMethod::ExactGrid } else { CertMethod::FloatGrid },
        pass: verified <= 1.0 + tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MildReport {
    pub pass: bool,
    /// `max over orders of measured / allowed`.
    pub worst_ratio: f64,
    pub worst_order: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// `(A, C)`-mildness: `max |d^a psi| <= a! (A a^C)^a` for orders `1..=max_order`,
/// checked on the chart and on the target composed with it.
pub fn verify_mild_chart(
    chart: &Chart,
    target: Option<&FunctionExpr>,
    a: f64,
    c: f64,
    max_order: usize,
    grid: usize,
) -> Result<MildReport> {
    let (lo, hi) = (rational::to_f64(&chart.lo), rational::to_f64(&chart.hi));
    let mut worst = (0.0f64, 0usize);
    for i in 0..=grid {
        let t = lo + (hi - lo) * i as f64 / grid as f64;
        let xj = chart.chain.apply(&Jet::variable(t, max_order));
        let mut series = vec![xj.derivatives()];
        if let Some(f) = target {
            series.push(f.expr.eval_jet(&xj)?.derivatives());
        }
        for d in &series {
            for (alpha, v) in d.iter().enumerate().skip(1) {
                let al = alpha as f64;
                let bound = factorial(alpha) * (a * al.powf(c)).powi(alpha as i32);
                let ratio = if bound > 0.0 {
                    v.abs() / bound
                } else if v.abs() > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                if ratio > worst.0 {
                    worst = (ratio, alpha);
                }
            }
        }
    }
    Ok(MildReport { pass: worst.0 <= 1.0 + FLOAT_TOLERANCE, worst_ratio: worst.0, worst_order: worst.1 })
}

pub fn is_positive(q: &Q) -> bool {
    q.is_positive()
}

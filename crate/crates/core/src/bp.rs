//! Determinant-method point counting: the combinatorial exponents, the
//! determinant bound for smooth maps on small balls, exact rational-point
//! enumeration on graphs, and the ball cover by degree-`d` hypersurfaces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionExpr, MAX_ORDER};
use crate::jet::Jet;
use crate::rational::{self, qi, Q};

/// Safety factor applied to sampled derivative maxima.
pub const SAMPLING_MARGIN: f64 = 1.1;
/// Default cap on candidate abscissae in [`enumerate_points`].
pub const DEFAULT_CANDIDATE_CAP: u64 = 1_000_000;

pub fn binom(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by i + 1
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Dimension of polynomials of degree `<= l` in `s` variables.
pub fn dim_upto(s: u64, l: u64) -> Option<u128> {
    binom(s + l, s)
}

/// Number of monomials of degree exactly `l` in `s` variables.
pub fn dim_exact(s: u64, l: u64) -> Option<u128> {
    if s == 0 {
        return Some((l == 0) as u128);
    }
    binom(s + l - 1, s - 1)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KappaVariant {
    /// `sum_{l=0}^{m} L_n(l) l`, summing up to the number of functions.
    #[default]
    AsPrinted,
    /// The same sum stopped at `k`.
    TruncatedAtK,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BpCombinatorics {
    pub n: u64,
    /// Number of functions (`tau` when built from a degree).
    pub m: u64,
    /// Hypersurface degree and ambient dimension, when built by [`bp_for_degree`].
    pub degree: Option<u64>,
    pub ambient: Option<u64>,
    pub k: u64,
    pub e: u128,
    pub kappa_as_printed: u128,
    pub kappa_truncated: u128,
    /// `D_n(l)` for `l = 0..=k+1`.
    pub d_table: Vec<u128>,
    /// `L_n(l)` for `l = 0..=k+1`.
    pub l_table: Vec<u128>,
}

impl BpCombinatorics {
    pub fn kappa(&self, v: KappaVariant) -> u128 {
        match v {
            KappaVariant::AsPrinted => self.kappa_as_printed,
            KappaVariant::TruncatedAtK => self.kappa_truncated,
        }
    }

    /// Cover exponent `kappa n / e`, exactly.
    pub fn epsilon(&self, v: KappaVariant) -> Q {
        if self.e == 0 {
            return Q::zero();
        }
        Q::new(BigInt::from(self.kappa(v)) * BigInt::from(self.n), BigInt::from(self.e))
    }

    pub fn d_k(&self) -> u128 {
        self.d_table[self.k as usize]
    }
}

fn overflow() -> Error {
    Error::InvalidInput("combinatorial quantity overflows 128 bits".into())
}

fn weighted_sum(n: u64, upto: u64) -> Result<u128> {
    (0..=upto).try_fold(0u128, |acc, l| {
        dim_exact(n, l)
            .and_then(|c| c.checked_mul(l as u128))
            .and_then(|c| acc.checked_add(c))
            .ok_or_else(overflow)
    })
}

pub fn bp_combinatorics(n: u64, m: u64) -> Result<BpCombinatorics> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("n and m must be at least 1".into()));
    }
    let mut k = 0u64;
    while dim_upto(n, k + 1).ok_or_else(overflow)? <= m as u128 {
        k += 1;
    }
    let d_table: Vec<u128> = (0..=k + 1).map(|l| dim_upto(n, l).ok_or_else(overflow)).collect::<Result<_>>()?;
    let l_table: Vec<u128> = (0..=k + 1).map(|l| dim_exact(n, l).ok_or_else(overflow)).collect::<Result<_>>()?;
    assert!(d_table[k as usize] <= m as u128 && (m as u128) < d_table[k as usize + 1]);
    let e = weighted_sum(n, k)?
        .checked_add((k as u128 + 1) * (m as u128 - d_table[k as usize]))
        .ok_or_else(overflow)?;
    Ok(BpCombinatorics {
        n,
        m,
        degree: None,
        ambient: None,
        k,
        e,
        kappa_as_printed: weighted_sum(n, m)?,
        kappa_truncated: weighted_sum(n, k)?,
        d_table,
        l_table,
    })
}

/// Exponents for degree-`d` hypersurfaces in `ambient` dimensions:
/// `tau = D_ambient(d)` functions on an `n`-dimensional parameter space.
pub fn bp_for_degree(n: u64, ambient: u64, d: u64) -> Result<BpCombinatorics> {
    let tau = dim_upto(ambient, d).ok_or_else(overflow)?;
    let tau = u64::try_from(tau).map_err(|_| overflow())?;
    let mut c = bp_combinatorics(n, tau)?;
    c.degree = Some(d);
    c.ambient = Some(ambient);
    Ok(c)
}

/// `epsilon(psi, d)` for `d = 1..=dmax`.
pub fn epsilon_sequence(n: u64, ambient: u64, dmax: u64, v: KappaVariant) -> Result<Vec<Q>> {
    (1..=dmax).map(|d| Ok(bp_for_degree(n, ambient, d)?.epsilon(v))).collect()
}

// ---------------------------------------------------------------------------
// exact linear algebra

/// Rank of an integer matrix by fraction-free (Bareiss) elimination; also
/// returns the determinant when the matrix is square.
pub fn bareiss(mut a: Vec<Vec<BigInt>>) -> (usize, Option<BigInt>) {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let square = rows == cols;
    let mut prev = BigInt::one();
    let mut rank = 0;
    let mut sign = 1i32;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        if p != rank {
            a.swap(p, rank);
            sign = -sign;
        }
        for r in rank + 1..rows {
            for j in c + 1..cols {
                let v = &a[rank][c] * &a[r][j] - &a[r][c] * &a[rank][j];
                a[r][j] = v / &prev;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
    }
    let det = square.then(|| if rank < rows { BigInt::zero() } else { prev * sign });
    (rank, det)
}

/// Clear denominators row by row; returns the integer rows and the product of scalings.
fn integer_rows(m: &[Vec<Q>]) -> (Vec<Vec<BigInt>>, BigInt) {
    let mut scale = BigInt::one();
    let rows = m
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            scale *= &l;
            row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();
    (rows, scale)
}

pub fn det_q(m: &[Vec<Q>]) -> Q {
    let (rows, scale) = integer_rows(m);
    let (_, det) = bareiss(rows);
    Q::new(det.unwrap_or_default(), scale)
}

pub fn rank_q(m: &[Vec<Q>]) -> usize {
    bareiss(integer_rows(m).0).0
}

// ---------------------------------------------------------------------------
// determinant bound

/// Polynomial in `n` variables with rational coefficients, as `(exponents, coefficient)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MPoly {
    pub terms: Vec<(Vec<u32>, Q)>,
}

impl MPoly {
    pub fn eval_q(&self, z: &[Q]) -> Q {
        self.terms.iter().fold(Q::zero(), |acc, (ex, c)| {
            acc + ex.iter().zip(z).fold(c.clone(), |p, (e, x)| p * rational::pow(x, *e))
        })
    }

    /// Partial derivative `d^alpha` evaluated in floats.
    pub fn partial_f64(&self, alpha: &[u32], z: &[f64]) -> f64 {
        let mut s = 0.0;
        'terms: for (ex, c) in &self.terms {
            let mut v = rational::to_f64(c);
            for ((&e, &a), &x) in ex.iter().zip(alpha).zip(z) {
                if a > e {
                    continue 'terms;
                }
                v *= ((e - a + 1)..=e).map(f64::from).product::<f64>() * x.powi((e - a) as i32);
            }
            s += v;
        }
        s
    }
}

/// Multi-indices in `n` variables of total degree `<= d`.
pub fn multi_indices(n: usize, d: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..=d {
        for mut rest in multi_indices(n - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out.sort_by_key(|a| (a.iter().sum::<u32>(), std::cmp::Reverse(a.clone())));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VandermondeReport {
    pub n: u64,
    pub m: u64,
    pub k: u64,
    pub e: u128,
    /// Sampled derivative maximum, with the safety margin applied.
    pub m_k: f64,
    pub delta: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Compare `|det(phi_i(z^j))|` with `m! [D_n(k) M_k]^m r^e` for `m` points in
/// the sup-norm ball of radius `r` around `center`. `M_k` is the sampled
/// maximum over the ball of all partials of order `<= k + 1`.
pub fn vandermonde_bound_check(phi: &[MPoly], points: &[Vec<Q>], center: &[f64], r: f64) -> Result<VandermondeReport> {
    let m = phi.len();
    let n = center.len();
    if m == 0 || points.len() != m || points.iter().any(|p| p.len() != n) || !(r > 0.0) {
        return Err(Error::InvalidInput("need m points of dimension n for m component functions".into()));
    }
    for p in points {
        if p.iter().zip(center).any(|(x, c)| (rational::to_f64(x) - c).abs() > r * (1.0 + 1e-12)) {
            return Err(Error::InvalidInput("point outside the ball".into()));
        }
    }
    let comb = bp_combinatorics(n as u64, m as u64)?;
    let rows: Vec<Vec<Q>> = points.iter().map(|z| phi.iter().map(|f| f.eval_q(z)).collect()).collect();
    let delta = rational::to_f64(&rational::abs(&det_q(&rows)));
    let alphas = multi_indices(n, comb.k as u32 + 1);
    let per_dim = if n == 1 { 65 } else { 17 };
    let mut mk = 0.0f64;
    let mut idx = vec![0usize; n];
    loop {
        let z: Vec<f64> = idx
            .iter()
            .zip(center)
            .map(|(&i, c)| c - r + 2.0 * r * i as f64 / (per_dim - 1) as f64)
            .collect();
        for f in phi {
            for a in &alphas {
                mk = mk.max(f.partial_f64(a, &z).abs());
            }
        }
        let Some(pos) = idx.iter().position(|&i| i + 1 < per_dim) else { break };
        idx[pos] += 1;
        idx[..pos].iter_mut().for_each(|i| *i = 0);
    }
    let mk = mk * SAMPLING_MARGIN;
    let log_bound = ln_factorial(m as u64) + m as f64 * ((comb.d_k() as f64) * mk).ln() + comb.e as f64 * r.ln();
    let bound = log_bound.exp();
    let pass = delta == 0.0 || delta.ln() <= log_bound;
    Ok(VandermondeReport { n: n as u64, m: m as u64, k: comb.k, e: comb.e, m_k: mk, delta, bound, pass })
}

fn ln_factorial(m: u64) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub violations: usize,
    /// Largest `ln(|Delta| / bound)` over trials with nonzero `Delta`.
    pub worst_log_ratio: f64,
}

/// Randomized determinant-bound trials: polynomial maps of degree `<= 4`,
/// `n <= 2`, `m <= 6`, radii log-uniform in `[1e-3, 1e-1]`.
pub fn determinant_trials(seed: u64, trials: usize) -> Result<TrialSummary> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let n = rng.gen_range(1..=2usize);
        let m = rng.gen_range(1..=6usize);
        let phi: Vec<MPoly> = (0..m)
            .map(|_| {
                let deg = rng.gen_range(0..=4u32);
                let terms = multi_indices(n, deg)
                    .into_iter()
                    .map(|ex| (ex, Q::new(BigInt::from(rng.gen_range(-64..=64i64)), BigInt::from(64))))
                    .collect();
                MPoly { terms }
            })
            .collect();
        let r = 10f64.powf(rng.gen_range(-3.0..=-1.0));
        let center: Vec<f64> = (0..n).map(|_| rational::to_f64(&rational::dyadic(rng.gen_range(-0.9..0.9), 20))).collect();
        let points: Vec<Vec<Q>> = (0..m)
            .map(|_| center.iter().map(|c| rational::from_f64(c + r * rng.gen_range(-1.0..=1.0) * (1.0 - 1e-9))).collect())
            .collect();
        let rep = vandermonde_bound_check(&phi, &points, &center, r)?;
        if !rep.pass {
            violations += 1;
        }
        if rep.delta > 0.0 {
            worst = worst.max(rep.delta.ln() - rep.bound.ln());
        }
    }
    Ok(TrialSummary { trials, violations, worst_log_ratio: worst })
}

// ---------------------------------------------------------------------------
// rational points

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RationalPoint {
    #[serde(with = "rational::serde_q")]
    pub x: Q,
    #[serde(with = "rational::serde_q")]
    pub y: Q,
}

fn check_algebraic(e: &Expr) -> Result<()> {
    match e {
        Expr::Var | Expr::Const { .. } | Expr::Poly { .. } => Ok(()),
        Expr::Add { a, b } | Expr::Sub { a, b } | Expr::Mul { a, b } => {
            check_algebraic(a)?;
            check_algebraic(b)
        }
        Expr::Div { num, den } => {
            check_algebraic(num)?;
            check_algebraic(den)
        }
        Expr::Compose { outer, inner } => {
            check_algebraic(outer)?;
            check_algebraic(inner)
        }
        Expr::Neg { arg } | Expr::Pow { arg, .. } | Expr::Sqrt { arg } => check_algebraic(arg),
        Expr::Exp { .. } | Expr::Ln { .. } | Expr::Sin { .. } | Expr::Cos { .. } => {
            Err(Error::InexactCurve("transcendental function in the curve".into()))
        }
        Expr::Branch { .. } => Err(Error::InexactCurve("implicit algebraic branch".into())),
        Expr::BlackboxRef { name, .. } => Err(Error::InexactCurve(format!("blackbox '{name}'"))),
    }
}

/// Exact value at a rational point; `None` when undefined or irrational.
fn exact_value(e: &Expr, x: &Q) -> Option<Q> {
    Some(match e {
        Expr::Var => x.clone(),
        Expr::Const { value } => value.clone(),
        Expr::Poly { coeffs } => coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * x + c),
        Expr::Add { a, b } => exact_value(a, x)? + exact_value(b, x)?,
        Expr::Sub { a, b } => exact_value(a, x)? - exact_value(b, x)?,
        Expr::Mul { a, b } => exact_value(a, x)? * exact_value(b, x)?,
        Expr::Div { num, den } => {
            let d = exact_value(den, x)?;
            if d.is_zero() {
                return None;
            }
            exact_value(num, x)? / d
        }
        Expr::Neg { arg } => -exact_value(arg, x)?,
        Expr::Pow { arg, exp } => {
            let v = exact_value(arg, x)?;
            if *exp < 0 {
                if v.is_zero() {
                    return None;
                }
                rational::pow(&v.recip(), exp.unsigned_abs())
            } else {
                rational::pow(&v, *exp as u32)
            }
        }
        Expr::Sqrt { arg } => {
            let v = exact_value(arg, x)?;
            if v.is_negative() {
                return None;
            }
            rational::sqrt_exact(&v)?
        }
        Expr::Compose { outer, inner } => exact_value(outer, &exact_value(inner, x)?)?,
        _ => return None,
    })
}

/// Points `(x, f(x))` of the graph with `t x` and `t f(x)` both integers.
pub fn enumerate_points(f: &FunctionExpr, t: u64, cap: u64) -> Result<Vec<RationalPoint>> {
    if t == 0 {
        return Err(Error::InvalidInput("t must be positive".into()));
    }
    check_algebraic(&f.expr)?;
    let tq = qi(t as i64);
    let first = (&f.lo * &tq).ceil().to_integer();
    let last = (&f.hi * &tq).floor().to_integer();
    let count = (&last - &first + 1i32).to_u64().unwrap_or(u64::MAX);
    if last >= first && count > cap {
        return Err(Error::InvalidInput(format!("{count} candidate abscissae exceed the cap {cap}")));
    }
    let mut out = Vec::new();
    let mut a = first;
    while a <= last {
        let x = Q::new(a.clone(), BigInt::from(t));
        if let Some(y) = exact_value(&f.expr, &x) {
            if (&y * &tq).is_integer() {
                out.push(RationalPoint { x, y });
            }
        }
        a += 1;
    }
    Ok(out)
}

/// Exponent vectors `(a, b)` with `a + b <= d`, graded.
fn planar_monomials(d: u32) -> Vec<(u32, u32)> {
    multi_indices(2, d).into_iter().map(|v| (v[0], v[1])).collect()
}

/// True when the points lie on a common curve of degree `<= d` in the plane:
/// the Veronese matrix has rank below the number of monomials.
pub fn on_hypersurface(points: &[RationalPoint], d: u32) -> bool {
    veronese_rank(points, d) < planar_monomials(d).len()
}

fn veronese_rank(points: &[RationalPoint], d: u32) -> usize {
    let mons = planar_monomials(d);
    let rows: Vec<Vec<Q>> = mons
        .iter()
        .map(|&(a, b)| points.iter().map(|p| rational::pow(&p.x, a) * rational::pow(&p.y, b)).collect())
        .collect();
    if points.is_empty() {
        return 0;
    }
    rank_q(&rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub index: u64,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub rank: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceCover {
    pub t: u64,
    pub d: u64,
    pub combinatorics: BpCombinatorics,
    pub kappa_variant: KappaVariant,
    /// Cover exponent for the selected variant and for the other one.
    pub epsilon: f64,
    pub epsilon_alt: f64,
    pub m_k: f64,
    pub radius: f64,
    /// Balls of radius `radius` covering the domain.
    pub ball_count: f64,
    /// `ceil(1 / radius)`.
    pub ball_bound: f64,
    /// Nonempty balls only.
    pub balls: Vec<BallReport>,
    pub point_count: usize,
    /// All points lie on one degree-`d` curve.
    pub shared_hypersurface: bool,
    pub hypersurface_count: u64,
}

/// Sampled maximum of all derivatives of order `<= order` of the monomials
/// `x^a f(x)^b`, `a + b <= d`, over the domain.
fn veronese_derivative_max(f: &FunctionExpr, d: u32, order: usize, samples: usize) -> Result<f64> {
    if order > MAX_ORDER {
        return Err(Error::OrderOverflow { order, cap: MAX_ORDER });
    }
    let (lo, hi) = f.domain_f64();
    let mons = planar_monomials(d);
    let mut m = 0.0f64;
    for i in 0..=samples {
        let x = lo + (hi - lo) * i as f64 / samples as f64;
        let xj = Jet::variable(x, order);
        let yj = f.expr.eval_jet(&xj)?;
        for &(a, b) in &mons {
            let v = xj.powi(a as i32).unwrap().mul(&yj.powi(b as i32).unwrap());
            for dv in v.derivatives() {
                if !dv.is_finite() {
                    return Err(Error::EvaluationAtSingularity { x });
                }
                m = m.max(dv.abs());
            }
        }
    }
    Ok(m)
}

/// Cover the graph's parameter interval by balls small enough that each
/// ball's points of `Omega(t, Z)` lie on one curve of degree `<= d`, and
/// check that with exact rank tests.
pub fn hypersurface_cover(f: &FunctionExpr, t: u64, d: u32, variant: KappaVariant) -> Result<HypersurfaceCover> {
    if d == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    let comb = bp_for_degree(1, 2, d as u64)?;
    let tau = comb.m;
    let mk = veronese_derivative_max(f, d, comb.k as usize + 1, 2048)? * SAMPLING_MARGIN;
    // tau! [D_1(k) M]^tau r^e < t^-kappa, solved for r with a hair of slack
    let kappa = comb.kappa(variant) as f64;
    let ln_r = (-kappa * (t as f64).ln()
        - ln_factorial(tau)
        - tau as f64 * ((comb.d_k() as f64) * mk.max(1e-300)).ln())
        / comb.e as f64;
    let radius = ln_r.exp() * (1.0 - 1e-9);
    let (lo, hi) = f.domain_f64();
    let ball_count = ((hi - lo) / (2.0 * radius)).ceil().max(1.0);
    let points = enumerate_points(f, t, DEFAULT_CANDIDATE_CAP)?;
    let mut buckets: std::collections::BTreeMap<u64, Vec<RationalPoint>> = Default::default();
    for p in &points {
        let i = ((rational::to_f64(&p.x) - lo) / (2.0 * radius)).floor().clamp(0.0, ball_count - 1.0) as u64;
        buckets.entry(i).or_default().push(p.clone());
    }
    let mut balls = Vec::with_capacity(buckets.len());
    for (index, pts) in buckets {
        let rank = veronese_rank(&pts, d);
        let pass = rank < tau as usize;
        if !pass {
            return Err(Error::CoverTestFailed { ball: index as usize });
        }
        let blo = lo + 2.0 * radius * index as f64;
        balls.push(BallReport { index, lo: blo, hi: blo + 2.0 * radius, points: pts.len(), rank, pass });
    }
    let shared = on_hypersurface(&points, d);
    let hypersurface_count = if shared { points.len().min(1) as u64 } else { balls.len() as u64 };
    let other = match variant {
        KappaVariant::AsPrinted => KappaVariant::TruncatedAtK,
        KappaVariant::TruncatedAtK => KappaVariant::AsPrinted,
    };
    Ok(HypersurfaceCover {
        t,
        d: d as u64,
        epsilon: rational::to_f64(&comb.epsilon(variant)),
        epsilon_alt: rational::to_f64(&comb.epsilon(other)),
        combinatorics: comb,
        kappa_variant: variant,
        m_k: mk,
        radius,
        ball_count,
        ball_bound: (1.0 / radius).ceil(),
        balls,
        point_count: points.len(),
        shared_hypersurface: shared,
        hypersurface_count,
    })
}

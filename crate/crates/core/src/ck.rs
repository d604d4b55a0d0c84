//! `C^k` reparametrization of graphs and slabs by derivative killing:
//! monotone subdivision, square substitutions anchored at the endpoint where
//! the current derivative is largest, and equal splitting.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::chart::{
    verify_ck_chart, Chain, Chart, ChartTarget, CkCertificate, Normalization, SlabFns, Step,
    DEFAULT_GRID,
};
use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionExpr};
use crate::jet::Jet;
use crate::rational::{self, q, qi, Q};
use crate::roots::{self, rational_zeros, DEFAULT_DENSITY};
use crate::upoly::UPoly;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CkConfig {
    /// Verification grid (points per chart minus one).
    pub grid: usize,
    /// Samples per piece when measuring derivative bounds during construction.
    pub probe: usize,
    /// Extra rounds of doubling the final split when a certificate fails.
    pub refinement_rounds: usize,
    pub auto_normalize: bool,
    /// Certify on an exact rational grid when the target is a rational function.
    pub exact: bool,
}

impl Default for CkConfig {
    fn default() -> Self {
        CkConfig { grid: DEFAULT_GRID, probe: 1024, refinement_rounds: 3, auto_normalize: true, exact: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CkTarget {
    Function { f: FunctionExpr },
    Slab { g1: FunctionExpr, g2: FunctionExpr },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkParametrization {
    pub schema_version: u32,
    pub order: usize,
    pub target: CkTarget,
    pub normalization: Normalization,
    pub charts: Vec<Chart>,
    /// Pieces produced by the initial monotone subdivision.
    pub monotone_pieces: usize,
    pub kill_steps: usize,
    pub refinement_rounds: usize,
}

impl CkParametrization {
    /// Normalized expressions the charts were certified against.
    pub fn normalized(&self) -> Vec<Expr> {
        match &self.target {
            CkTarget::Function { f } => vec![self.normalization.apply(&f.expr)],
            CkTarget::Slab { g1, g2 } => {
                vec![self.normalization.apply(&g1.expr), self.normalization.apply(&g2.expr)]
            }
        }
    }

    pub fn domain(&self) -> (Q, Q) {
        match &self.target {
            CkTarget::Function { f } => (f.lo.clone(), f.hi.clone()),
            CkTarget::Slab { g1, .. } => (g1.lo.clone(), g1.hi.clone()),
        }
    }

    /// Recompute every chart certificate.
    pub fn verify(&self, grid: usize, exact: bool) -> Result<Vec<CkCertificate>> {
        let exprs = self.normalized();
        let slab = (exprs.len() == 2).then(|| SlabFns { g1: exprs[0].clone(), g2: exprs[1].clone() });
        self.charts
            .iter()
            .map(|c| {
                let t = match &slab {
                    Some(s) => ChartTarget::Slab(s),
                    None => ChartTarget::Function(&exprs[0]),
                };
                verify_ck_chart(c, &t, self.order, grid, exact)
            })
            .collect()
    }

    /// Chart images tile the domain exactly (sorted, adjacent, no gaps).
    pub fn covers_domain(&self) -> bool {
        let mut imgs: Vec<(Q, Q)> = self.charts.iter().map(Chart::image).collect();
        imgs.sort();
        let (a, b) = self.domain();
        if imgs.is_empty() || imgs[0].0 != a || imgs.last().unwrap().1 != b {
            return false;
        }
        imgs.windows(2).all(|w| w[0].1 == w[1].0)
    }

    pub fn max_degree(&self) -> u32 {
        self.charts.iter().map(|c| c.degree).max().unwrap_or(1)
    }
}

#[derive(Clone, Debug)]
struct Piece {
    chain: Chain,
    lo: Q,
    hi: Q,
}

impl Piece {
    fn sub(&self, lo: Q, hi: Q) -> Piece {
        Piece { chain: self.chain.clone(), lo, hi }
    }
}

/// Derivatives `F(w), F'(w), ...` of `e ∘ chain` at working point `w`.
fn composed_f64(chain: &Chain, e: &Expr, w: f64, order: usize) -> Result<Vec<f64>> {
    let d = e.eval_jet(&chain.apply(&Jet::variable(w, order)))?.derivatives();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::EvaluationAtSingularity { x: chain.apply_f64(w) });
    }
    Ok(d)
}

/// [`composed_f64`] on a piece; a singularity exactly at an endpoint (as for
/// `x^(3/2)` at 0) is probed a hair inside instead, so finite limits count
/// and blow-ups still show up as huge values.
fn probe(p: &Piece, e: &Expr, w: f64, order: usize) -> Result<Vec<f64>> {
    match composed_f64(&p.chain, e, w, order) {
        Err(Error::EvaluationAtSingularity { .. }) => {
            let (lo, hi) = (rational::to_f64(&p.lo), rational::to_f64(&p.hi));
            let nudge = 1e-9 * (hi - lo);
            if w == lo {
                composed_f64(&p.chain, e, lo + nudge, order)
            } else if w == hi {
                composed_f64(&p.chain, e, hi - nudge, order)
            } else {
                Err(Error::EvaluationAtSingularity { x: p.chain.apply_f64(w) })
            }
        }
        r => r,
    }
}

/// `(max |psi^(i)|, max |F^(i)|)` for `i = 1..=k` over `samples + 1` points.
fn piece_bounds(p: &Piece, targets: &[Expr], k: usize, samples: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = (rational::to_f64(&p.lo), rational::to_f64(&p.hi));
    let mut cpsi = vec![0.0f64; k];
    let mut cf = vec![0.0f64; k];
    for s in 0..=samples {
        let w = lo + (hi - lo) * s as f64 / samples as f64;
        let xj = p.chain.apply(&Jet::variable(w, k)).derivatives();
        for i in 1..=k {
            cpsi[i - 1] = cpsi[i - 1].max(xj[i].abs());
        }
        for e in targets {
            let d = probe(p, e, w, k)?;
            for i in 1..=k {
                cf[i - 1] = cf[i - 1].max(d[i].abs());
            }
        }
    }
    Ok((cpsi, cf))
}

fn sup_upto(v: &[f64], l: usize) -> f64 {
    v[..l].iter().fold(0.0f64, |m, x| m.max(*x))
}

/// Interior zeros of `F^(i)` (for `i` in `orders`) on the piece, as rational split points.
fn zero_splits(p: &Piece, targets: &[Expr], orders: std::ops::RangeInclusive<usize>) -> Result<Vec<Q>> {
    let len = &p.hi - &p.lo;
    let margin = rational::to_f64(&len) * 1e-9;
    let mut pts: Vec<Q> = Vec::new();
    let cp = p.chain.as_poly();
    for e in targets {
        if let Some((n, d)) = e.to_rational() {
            let (n, d) = (n.compose(&cp), d.compose(&cp));
            let width = &len * rational::pow(&q(1, 2), 40);
            let nums = Expr::rational_derivative_numerators(&n, &d, *orders.end());
            for ni in &nums[(*orders.start()).max(1)..] {
                for (a, b) in rational_zeros(ni, &d, &p.lo, &p.hi, &width) {
                    pts.push((a + b) / qi(2));
                }
            }
        } else {
            let (lo, hi) = (rational::to_f64(&p.lo), rational::to_f64(&p.hi));
            let l = (hi - lo).max(f64::MIN_POSITIVE);
            let density = ((DEFAULT_DENSITY as f64).max(2048.0 / l)) as usize;
            for i in orders.clone() {
                let z = roots::sampled_zeros(|w| Ok(probe(p, e, w, i)?[i]), lo, hi, density)?;
                pts.extend(z.into_iter().map(|(a, b)| rational::dyadic(0.5 * (a + b), 52)));
            }
        }
    }
    pts.retain(|x| {
        rational::to_f64(&(x - &p.lo)) > margin && rational::to_f64(&(&p.hi - x)) > margin
    });
    pts.sort();
    pts.dedup();
    Ok(pts)
}

fn split_at(p: &Piece, pts: &[Q]) -> Vec<Piece> {
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut lo = p.lo.clone();
    for x in pts {
        out.push(p.sub(lo, x.clone()));
        lo = x.clone();
    }
    out.push(p.sub(lo, p.hi.clone()));
    out
}

/// `n` equal pieces, each reparametrized over `[0, 1]`.
fn equal_split(p: &Piece, n: usize) -> Vec<Piece> {
    if n <= 1 && p.lo.is_zero() && p.hi.is_one() {
        return vec![p.clone()];
    }
    let len = &p.hi - &p.lo;
    (0..n)
        .map(|j| {
            let a = &len / qi(n as i64);
            let b = &p.lo + &len * q(j as i64, n as i64);
            Piece { chain: p.chain.precompose(Step::Affine { a, b }), lo: Q::zero(), hi: Q::one() }
        })
        .collect()
}

/// Square substitution `w = c + (e - c) u^2`, `u in [0, 1]`, with `c` the
/// endpoint where `max |F^(l)|` over `targets` is largest.
fn square_step_for(p: &Piece, targets: &[Expr], l: usize) -> Result<Step> {
    let (lo, hi) = (rational::to_f64(&p.lo), rational::to_f64(&p.hi));
    let mag = |w: f64| -> Result<f64> {
        targets
            .iter()
            .map(|e| probe(p, e, w, l).map(|d| d[l].abs()))
            .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
    };
    let (c, e) = if mag(lo)? >= mag(hi)? { (&p.lo, &p.hi) } else { (&p.hi, &p.lo) };
    Ok(Step::Square { scale: e - c, shift: c.clone() })
}

fn apply_square(p: &Piece, s: Step) -> Piece {
    Piece { chain: p.chain.precompose(s), lo: Q::zero(), hi: Q::one() }
}

fn ceil_count(c: f64) -> usize {
    ((c - 1e-9).ceil() as usize).max(1)
}

/// Split `[a, b]` at every zero of `f^(1), ..., f^(k+1)`.
pub fn monotone_subdivision(f: &FunctionExpr, k: usize) -> Result<Vec<(Q, Q)>> {
    let p = Piece { chain: Chain::default(), lo: f.lo.clone(), hi: f.hi.clone() };
    let pts = zero_splits(&p, std::slice::from_ref(&f.expr), 1..=k + 1)?;
    Ok(split_at(&p, &pts).into_iter().map(|p| (p.lo, p.hi)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KillStep {
    pub step: Step,
    /// `g^(l)` vanishes identically; the step is the identity.
    pub noop: bool,
    /// `g ∘ h` over `[0, 1]`.
    pub transformed: FunctionExpr,
    /// `max |(g ∘ h)^(i)|`, `i = 1..=l`.
    pub bounds: Vec<f64>,
    /// `max |h^(i)|`, `i = 1..=l`.
    pub chart_bounds: Vec<f64>,
}

/// One derivative-killing substitution for `g` on its domain. Requires
/// `|g^(i)| <= 1` for `1 <= i < l` and `g^(l)`, `g^(l+1)` of constant sign.
pub fn kill_derivative_step(g: &FunctionExpr, l: usize) -> Result<KillStep> {
    if l < 1 {
        return Err(Error::PreconditionFailed("derivative order must be at least 1".into()));
    }
    let p = Piece { chain: Chain::default(), lo: g.lo.clone(), hi: g.hi.clone() };
    let t = std::slice::from_ref(&g.expr);
    let (_, cf) = piece_bounds(&p, t, l, 1024)?;
    if l > 1 && sup_upto(&cf, l - 1) > 1.0 + 1e-6 {
        return Err(Error::PreconditionFailed(format!(
            "derivatives below order {l} exceed 1 (max {:.6})",
            sup_upto(&cf, l - 1)
        )));
    }
    if !zero_splits(&p, t, l..=l + 1)?.is_empty() {
        return Err(Error::PreconditionFailed(format!("g^({l}) or g^({}) changes sign", l + 1)));
    }
    let noop = cf[l - 1] <= 1e-12;
    let step = if noop {
        Step::affine_between(&Q::zero(), &Q::one(), &g.lo, &g.hi)
    } else {
        square_step_for(&p, t, l)?
    };
    let transformed = FunctionExpr::new(
        Expr::compose(g.expr.clone(), Expr::poly(step.as_poly().coeffs().to_vec())),
        Q::zero(),
        Q::one(),
    );
    let np = apply_square(&p, step.clone());
    let (chart_bounds, bounds) = piece_bounds(&np, t, l, 4096)?;
    Ok(KillStep { step, noop, transformed, bounds, chart_bounds })
}

/// Value-axis normalization making `0 <= f <= 1` and `|f'| <= 1`.
fn choose_normalization(fs: &[&FunctionExpr], auto: bool) -> Result<Normalization> {
    let (mut fmin, mut fmax, mut d1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for f in fs {
        let (a, b) = f.domain_f64();
        let n = ((b - a).ceil() as usize).max(1) * 4096;
        for s in 0..=n {
            let x = a + (b - a) * s as f64 / n as f64;
            let d = f.derivatives_f64(x, 1)?;
            fmin = fmin.min(d[0]);
            fmax = fmax.max(d[0]);
            d1 = d1.max(d[1].abs());
        }
    }
    let slack = 1e-9;
    if fmin >= -slack && fmax <= 1.0 + slack && d1 <= 1.0 + slack {
        return Ok(Normalization::identity());
    }
    if !auto {
        return Err(Error::PreconditionFailed(format!(
            "need 0 <= f <= 1 and |f'| <= 1; got range [{fmin}, {fmax}], max |f'| = {d1}"
        )));
    }
    // round to a coarse dyadic grid so exact certification stays cheap
    let res = 1024.0;
    let shift = if fmin < 0.0 || fmax > 1.0 {
        rational::q((fmin * res).floor() as i64, res as i64)
    } else {
        Q::zero()
    };
    let span = fmax - rational::to_f64(&shift);
    let s = span.max(d1).max(1.0);
    let scale = rational::q((s * res - 1e-6).ceil() as i64, res as i64);
    Ok(Normalization { shift, scale })
}

fn presplit(a: &Q, b: &Q) -> Vec<Piece> {
    let n = (rational::to_f64(&(b - a)) / 2.0).ceil().max(1.0) as usize;
    let len = b - a;
    (0..n)
        .map(|j| Piece {
            chain: Chain::default(),
            lo: a + &len * q(j as i64, n as i64),
            hi: a + &len * q(j as i64 + 1, n as i64),
        })
        .collect()
}

struct Built {
    charts: Vec<Chart>,
    monotone_pieces: usize,
    kill_steps: usize,
    rounds: usize,
}

fn build(a: &Q, b: &Q, targets: &[Expr], k: usize, cfg: &CkConfig) -> Result<Built> {
    if k < 1 {
        return Err(Error::PreconditionFailed("smoothness order k must be at least 1".into()));
    }
    let mut pieces = Vec::new();
    for p in presplit(a, b) {
        let pts = zero_splits(&p, targets, 1..=k + 1)?;
        pieces.extend(split_at(&p, &pts));
    }
    let monotone_pieces = pieces.len();
    let max_kills = targets.len();
    let mut kill_steps = 0;

    for l in 2..=k {
        let mut done = Vec::new();
        for piece in pieces {
            let mut work = vec![(piece, 0usize)];
            while let Some((p, kills)) = work.pop() {
                let (_, cf) = piece_bounds(&p, targets, l, cfg.probe)?;
                if cf[l - 1] <= 1.0 || kills >= max_kills {
                    done.push(p);
                    continue;
                }
                // a second substitution is only for a slab side left untamed by the first
                if kills > 0 {
                    let per: Vec<f64> = targets
                        .iter()
                        .map(|e| piece_bounds(&p, std::slice::from_ref(e), l, cfg.probe).map(|b| b.1[l - 1]))
                        .collect::<Result<_>>()?;
                    let (lo, hi) = per.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
                    if hi <= 2.0 * lo.max(1.0) {
                        done.push(p);
                        continue;
                    }
                }
                for s in split_at(&p, &zero_splits(&p, targets, l..=l + 1)?) {
                    let step = square_step_for(&s, targets, l)?;
                    let ns = apply_square(&s, step);
                    kill_steps += 1;
                    let (cpsi, cf) = piece_bounds(&ns, targets, l, cfg.probe)?;
                    let c = sup_upto(&cpsi, l).max(sup_upto(&cf, l));
                    let subs = if l < k && c > 1.0 { equal_split(&ns, ceil_count(c)) } else { vec![ns] };
                    work.extend(subs.into_iter().map(|s| (s, kills + 1)));
                }
            }
        }
        pieces = done;
    }

    let slab = (targets.len() == 2).then(|| SlabFns { g1: targets[0].clone(), g2: targets[1].clone() });
    let mut charts = Vec::new();
    let mut rounds = 0;
    let neg1 = qi(-1);
    let one = Q::one();
    for p in &pieces {
        let (cpsi, cf) = piece_bounds(p, targets, k, cfg.probe)?;
        let mut n = ceil_count(sup_upto(&cpsi, k).max(sup_upto(&cf, k)));
        let mut round = 0;
        loop {
            let len = &p.hi - &p.lo;
            let mut out = Vec::with_capacity(n);
            let mut ok = true;
            for j in 0..n {
                let lo = &p.lo + &len * q(j as i64, n as i64);
                let hi = &p.lo + &len * q(j as i64 + 1, n as i64);
                let chain = p.chain.precompose(Step::affine_between(&neg1, &one, &lo, &hi));
                let mut ch = Chart::new(0, neg1.clone(), one.clone(), chain);
                ch.slab = slab.is_some();
                ch.final_split = n;
                let t = match &slab {
                    Some(s) => ChartTarget::Slab(s),
                    None => ChartTarget::Function(&targets[0]),
                };
                let cert = verify_ck_chart(&ch, &t, k, cfg.grid, cfg.exact)?;
                ok &= cert.pass;
                ch.certificate = Some(cert);
                out.push(ch);
                if !ok {
                    break;
                }
            }
            if ok {
                charts.extend(out);
                break;
            }
            round += 1;
            if round > cfg.refinement_rounds {
                return Err(Error::BoundViolationAfterMaxDepth { rounds: cfg.refinement_rounds });
            }
            n *= 2;
        }
        rounds = rounds.max(round);
    }
    charts.sort_by(|x, y| x.image().cmp(&y.image()));
    for (i, c) in charts.iter_mut().enumerate() {
        c.id = i;
    }
    Ok(Built { charts, monotone_pieces, kill_steps, rounds })
}

/// Cover the graph of `f` on its domain by `C^k` charts with all derivatives
/// of orders `1..=k` of the chart and of `f ∘ chart` bounded by 1.
pub fn ck_parametrize_function(f: &FunctionExpr, k: usize, cfg: &CkConfig) -> Result<CkParametrization> {
    let norm = choose_normalization(&[f], cfg.auto_normalize)?;
    let t = vec![norm.apply(&f.expr)];
    let b = build(&f.lo, &f.hi, &t, k, cfg)?;
    Ok(CkParametrization {
        schema_version: SCHEMA_VERSION,
        order: k,
        target: CkTarget::Function { f: f.clone() },
        normalization: norm,
        charts: b.charts,
        monotone_pieces: b.monotone_pieces,
        kill_steps: b.kill_steps,
        refinement_rounds: b.rounds,
    })
}

/// Cover the slab `g1(x) <= y <= g2(x)` by 2D `C^k` charts.
pub fn ck_parametrize_slab(
    g1: &FunctionExpr,
    g2: &FunctionExpr,
    k: usize,
    cfg: &CkConfig,
) -> Result<CkParametrization> {
    if g1.lo != g2.lo || g1.hi != g2.hi {
        return Err(Error::InvalidInput("slab boundaries must share a domain".into()));
    }
    check_slab_order(g1, g2)?;
    let norm = choose_normalization(&[g1, g2], cfg.auto_normalize)?;
    let t = vec![norm.apply(&g1.expr), norm.apply(&g2.expr)];
    let b = build(&g1.lo, &g1.hi, &t, k, cfg)?;
    Ok(CkParametrization {
        schema_version: SCHEMA_VERSION,
        order: k,
        target: CkTarget::Slab { g1: g1.clone(), g2: g2.clone() },
        normalization: norm,
        charts: b.charts,
        monotone_pieces: b.monotone_pieces,
        kill_steps: b.kill_steps,
        refinement_rounds: b.rounds,
    })
}

fn check_slab_order(g1: &FunctionExpr, g2: &FunctionExpr) -> Result<()> {
    let gap = FunctionExpr::new(Expr::sub(g2.expr.clone(), g1.expr.clone()), g1.lo.clone(), g1.hi.clone());
    if let Some(&(lo, _)) = roots::isolate_real_zeros(&gap, &g1.lo, &g1.hi)?
        .intervals
        .iter()
        .map(|(a, b)| (rational::to_f64(a), rational::to_f64(b)))
        .collect::<Vec<_>>()
        .first()
    {
        return Err(Error::SlabOrderViolation { x: lo });
    }
    let (a, b) = gap.domain_f64();
    for s in 0..=256 {
        let x = a + (b - a) * s as f64 / 256.0;
        if gap.eval_f64(x)? <= 0.0 {
            return Err(Error::SlabOrderViolation { x });
        }
    }
    Ok(())
}

/// Chain polynomial of a chart, i.e. the x-coordinate as a polynomial in `t`.
pub fn chart_polynomial(c: &Chart) -> UPoly {
    c.chain.as_poly()
}

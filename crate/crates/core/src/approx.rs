//! Parametric polynomial approximation of curves and slabs by Taylor patches
//! over chart subdomains, with complexity `sum d^n` accounting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analytic::{self, AnalyticConfig};
use crate::chart::Chain;
use crate::ck::{self, CkConfig};
use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionExpr, MAX_ORDER};
use crate::jet::Jet;
use crate::rational::{self, qi, Q};

pub const SCHEMA_VERSION: u32 = 1;
/// Samples per patch at build time; verification uses four times as many.
pub const BUILD_SAMPLES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Piece {
    /// Graph `y = f(x)`.
    Function { f: FunctionExpr },
    /// `g1(x) <= y <= g2(x)`.
    Slab { g1: FunctionExpr, g2: FunctionExpr },
}

impl Piece {
    pub fn dim(&self) -> u32 {
        match self {
            Piece::Function { .. } => 1,
            Piece::Slab { .. } => 2,
        }
    }

    fn exprs(&self) -> Vec<Expr> {
        match self {
            Piece::Function { f } => vec![f.expr.clone()],
            Piece::Slab { g1, g2 } => vec![g1.expr.clone(), g2.expr.clone()],
        }
    }
}

/// A planar set given as pieces plus axis-aligned boxes covered by constant patches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetInput {
    pub pieces: Vec<Piece>,
    /// `[x0, x1, y0, y1]`.
    #[serde(default)]
    pub boxes: Vec<[f64; 4]>,
}

impl SetInput {
    pub fn dim(&self) -> u32 {
        let b = if self.boxes.is_empty() { 0 } else { 2 };
        self.pieces.iter().map(Piece::dim).max().unwrap_or(0).max(b)
    }
}

/// `{(x, y) in [0, 1]^2 : x y <= a^2}` as two mirror-image slabs under the
/// hyperbola plus the corner square `[0, a]^2`.
pub fn hyperbola_set(a: &Q) -> SetInput {
    let g2 = FunctionExpr::new(Expr::div(Expr::constant(a * a), Expr::var()), a.clone(), qi(1));
    let g1 = FunctionExpr::new(Expr::constant(qi(0)), a.clone(), qi(1));
    let slab = Piece::Slab { g1, g2 };
    let af = rational::to_f64(a);
    SetInput { pieces: vec![slab.clone(), slab], boxes: vec![[0.0, af, 0.0, af]] }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Ck,
    Analytic,
}

/// Chart data needed to re-evaluate a patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub piece: usize,
    pub chart: usize,
    pub chain: Chain,
    pub targets: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PatchMap {
    /// Coordinates `x, F_1, (F_2)` as polynomials in `t - center`.
    Taylor { center: f64, coeffs: Vec<Vec<f64>> },
    Constant { point: [f64; 2], half_sides: [f64; 2] },
    /// Exact affine image of the square: the box `[lo, hi]`.
    Box { lo: [f64; 2], hi: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    /// Index into `Approximation::sources`; `None` for box patches.
    pub source: Option<usize>,
    pub dim: u32,
    pub degree: u32,
    /// Number of identical-shape subcubes this patch stands for (the second
    /// slab coordinate is linear, so its subdivision only multiplies the count).
    pub multiplicity: u64,
    pub lo: f64,
    pub hi: f64,
    pub map: PatchMap,
    pub remainder_bound: f64,
    pub sampled_error: f64,
}

impl Patch {
    pub fn cost(&self) -> u128 {
        self.multiplicity as u128 * (self.degree.max(1) as u128).pow(self.dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Approximation {
    pub schema_version: u32,
    pub route: Route,
    pub epsilon: f64,
    pub degree: u32,
    /// Smoothness order used by the `C^k` route.
    pub k: Option<usize>,
    pub log_base: u32,
    pub charts: usize,
    pub sources: Vec<Source>,
    pub patches: Vec<Patch>,
    pub complexity: u128,
    pub max_sampled_error: f64,
}

fn horner(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * s + v)
}

/// Values `[x(t), F_1(t), ...]` with derivatives up to `order`.
fn coords(src: &Source, t: f64, order: usize) -> Result<Vec<Vec<f64>>> {
    let xj = src.chain.apply(&Jet::variable(t, order));
    let mut out = vec![xj.c.clone()];
    for e in &src.targets {
        out.push(e.eval_jet(&xj)?.c);
    }
    Ok(out)
}

fn patch_error(src: &Source, center: f64, coeffs: &[Vec<f64>], lo: f64, hi: f64, samples: usize) -> Result<f64> {
    let mut err = 0.0f64;
    for i in 0..=samples {
        let t = lo + (hi - lo) * i as f64 / samples as f64;
        let v = coords(src, t, 0)?;
        for (vc, pc) in v.iter().zip(coeffs) {
            err = err.max((vc[0] - horner(pc, t - center)).abs());
        }
    }
    Ok(err)
}

/// Taylor polynomial of every coordinate of `src` at the center of `[lo, hi]`,
/// with a Lagrange remainder bound from sampled `(d+1)`-th derivatives.
pub fn taylor_patch(src: &Source, lo: f64, hi: f64, d: usize) -> Result<(f64, Vec<Vec<f64>>, f64)> {
    if d + 1 > MAX_ORDER {
        return Err(Error::DegreeOverflow { degree: d, cap: MAX_ORDER - 1 });
    }
    let center = 0.5 * (lo + hi);
    let coeffs: Vec<Vec<f64>> = coords(src, center, d)?;
    let mut m = 0.0f64;
    for i in 0..=32 {
        let t = lo + (hi - lo) * i as f64 / 32.0;
        for c in coords(src, t, d + 1)? {
            // normalized coefficient already carries 1/(d+1)!
            m = m.max(c[d + 1].abs());
        }
    }
    let rem = m * (0.5 * (hi - lo)).powi(d as i32 + 1);
    Ok((center, coeffs, rem))
}

fn box_patches(input: &SetInput) -> Vec<Patch> {
    input
        .boxes
        .iter()
        .map(|b| {
            Patch {
                source: None,
                dim: 2,
                degree: 1,
                multiplicity: 1,
                lo: b[0],
                hi: b[1],
                map: PatchMap::Box { lo: [b[0], b[2]], hi: [b[1], b[3]] },
                remainder_bound: 0.0,
                sampled_error: 0.0,
            }
        })
        .collect()
}

fn finish(
    route: Route,
    eps: f64,
    d: usize,
    k: Option<usize>,
    charts: usize,
    sources: Vec<Source>,
    patches: Vec<Patch>,
) -> Approximation {
    let complexity = patches.iter().map(Patch::cost).sum();
    let max_sampled_error = patches.iter().map(|p| p.sampled_error).fold(0.0, f64::max);
    Approximation {
        schema_version: SCHEMA_VERSION,
        route,
        epsilon: eps,
        degree: d as u32,
        k,
        log_base: 2,
        charts,
        sources,
        patches,
        complexity,
        max_sampled_error,
    }
}

/// `C^k` route: `k = floor(n / sigma) + 1`, Taylor degree `k - 1` on equal
/// subcubes of each chart, doubling their number until every sampled error
/// is at most `eps`.
pub fn ck_approximate(input: &SetInput, eps: f64, sigma: f64, cfg: &CkConfig) -> Result<Approximation> {
    if !(eps > 0.0 && eps <= 1.0 && sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::InvalidInput("eps and sigma must lie in (0, 1]".into()));
    }
    let n = input.dim().max(1);
    let k = (n as f64 / sigma).floor() as usize + 1;
    let d = k - 1;
    let mut sources = Vec::new();
    let mut patches = box_patches(input);
    let mut charts = 0;
    for (pi, piece) in input.pieces.iter().enumerate() {
        let param = match piece {
            Piece::Function { f } => ck::ck_parametrize_function(f, k, cfg)?,
            Piece::Slab { g1, g2 } => ck::ck_parametrize_slab(g1, g2, k, cfg)?,
        };
        charts += param.charts.len();
        for ch in &param.charts {
            let src = Source { piece: pi, chart: ch.id, chain: ch.chain.clone(), targets: piece.exprs() };
            let (tlo, thi) = (rational::to_f64(&ch.lo), rational::to_f64(&ch.hi));
            // whole chart first (exact for polynomial targets), then double the piece count
            let mut m = 1usize;
            let built = loop {
                let mut out = Vec::with_capacity(m);
                let mut ok = true;
                for j in 0..m {
                    let a = tlo + (thi - tlo) * j as f64 / m as f64;
                    let b = tlo + (thi - tlo) * (j + 1) as f64 / m as f64;
                    let (center, coeffs, rem) = taylor_patch(&src, a, b, d)?;
                    let err = patch_error(&src, center, &coeffs, a, b, BUILD_SAMPLES)?;
                    ok &= err <= eps;
                    out.push((a, b, center, coeffs, rem, err));
                }
                if ok {
                    break (m, out);
                }
                m *= 2;
                if m > 1 << 30 {
                    return Err(Error::BoundViolationAfterMaxDepth { rounds: 30 });
                }
            };
            let (m, out) = built;
            let idx = sources.len();
            sources.push(src);
            let mult = if piece.dim() == 2 { m as u64 } else { 1 };
            for (a, b, center, coeffs, rem, err) in out {
                patches.push(Patch {
                    source: Some(idx),
                    dim: piece.dim(),
                    degree: d as u32,
                    multiplicity: mult,
                    lo: a,
                    hi: b,
                    map: PatchMap::Taylor { center, coeffs },
                    remainder_bound: rem,
                    sampled_error: err,
                });
            }
        }
    }
    Ok(finish(Route::Ck, eps, d, Some(k), charts, sources, patches))
}

/// Analytic route: δ = ε partition, unit a-charts, Taylor degree
/// `floor(log2(1 / eps)) + 1`; removed intervals become constant patches.
pub fn analytic_approximate(input: &SetInput, eps: &Q, cfg: &AnalyticConfig) -> Result<Approximation> {
    let ef = rational::to_f64(eps);
    if !(ef > 0.0 && ef < 1.0) {
        return Err(Error::InvalidInput("eps must lie in (0, 1)".into()));
    }
    let d = (1.0 / ef).log2().floor() as usize + 1;
    if d + 1 > MAX_ORDER {
        return Err(Error::DegreeOverflow { degree: d, cap: MAX_ORDER - 1 });
    }
    let mut sources = Vec::new();
    let mut patches = box_patches(input);
    let mut charts = 0;
    for (pi, piece) in input.pieces.iter().enumerate() {
        let param = match piece {
            Piece::Function { f } => analytic::analytic_delta_parametrize(f, eps, cfg)?,
            Piece::Slab { g1, g2 } => analytic::analytic_delta_parametrize_slab(g1, g2, eps, cfg)?,
        };
        let exact_poly = piece
            .exprs()
            .iter()
            .all(|e| e.to_rational().is_some_and(|(n, den)| crate::expr::is_one(&den) && n.degree().unwrap_or(0) <= 1));
        // an affine graph is reproduced exactly by one degree-1 patch per chart
        let param = if exact_poly { param } else { analytic::refine_to_unit_charts(&param, cfg)? };
        let scale = rational::to_f64(&param.normalization.scale);
        charts += param.charts.len();
        for ac in &param.charts {
            let src = Source { piece: pi, chart: ac.chart.id, chain: ac.chart.chain.clone(), targets: piece.exprs() };
            let center = 0.0;
            let deg = if exact_poly { 1 } else { d };
            let coeffs = coords(&src, center, deg)?;
            let err = patch_error(&src, center, &coeffs, -1.0, 1.0, BUILD_SAMPLES)?;
            let rem = if exact_poly { 0.0 } else { scale * 2f64.powi(-(d as i32)) };
            let idx = sources.len();
            sources.push(src);
            patches.push(Patch {
                source: Some(idx),
                dim: piece.dim(),
                degree: deg as u32,
                multiplicity: 1,
                lo: -1.0,
                hi: 1.0,
                map: PatchMap::Taylor { center, coeffs },
                remainder_bound: rem,
                sampled_error: err,
            });
        }
        for (a, b) in &param.partition.removed {
            patches.push(removed_patch(piece, a, b)?);
        }
    }
    Ok(finish(Route::Analytic, ef, d, None, charts, sources, patches))
}

/// Constant patch over the part of the piece above a removed interval.
fn removed_patch(piece: &Piece, a: &Q, b: &Q) -> Result<Patch> {
    let (a, b) = (rational::to_f64(a), rational::to_f64(b));
    let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for e in piece.exprs() {
        for i in 0..=64 {
            let x = a + (b - a) * i as f64 / 64.0;
            match e.eval(x) {
                Ok(v) if f64::is_finite(v) => {
                    ylo = ylo.min(v);
                    yhi = yhi.max(v);
                }
                _ => {
                    ylo = f64::NEG_INFINITY;
                    yhi = f64::INFINITY;
                }
            }
        }
    }
    let half = [0.5 * (b - a), 0.5 * (yhi - ylo)];
    let err = half[0].max(half[1]);
    Ok(Patch {
        source: None,
        dim: piece.dim(),
        degree: 0,
        multiplicity: 1,
        lo: a,
        hi: b,
        map: PatchMap::Constant { point: [0.5 * (a + b), 0.5 * (ylo + yhi)], half_sides: half },
        remainder_bound: err,
        sampled_error: err,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchReport {
    pub index: usize,
    pub error: f64,
    pub build_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub max_error: f64,
    pub complexity: u128,
    pub pass: bool,
    pub patches: Vec<PatchReport>,
}

/// Re-sample every patch at four times the build resolution.
pub fn verify_and_score(a: &Approximation) -> Result<Score> {
    let mut reports = Vec::with_capacity(a.patches.len());
    for (i, p) in a.patches.iter().enumerate() {
        let error = match (&p.map, p.source) {
            (PatchMap::Taylor { center, coeffs }, Some(s)) => {
                patch_error(&a.sources[s], *center, coeffs, p.lo, p.hi, 4 * BUILD_SAMPLES)?
            }
            (PatchMap::Constant { half_sides, .. }, _) => half_sides[0].max(half_sides[1]),
            (PatchMap::Box { .. }, _) => 0.0,
            (PatchMap::Taylor { .. }, None) => {
                return Err(Error::InvalidInput(format!("patch {i} has no source chart")))
            }
        };
        reports.push(PatchReport { index: i, error, build_error: p.sampled_error, pass: error <= a.epsilon });
    }
    let complexity = a.patches.iter().map(Patch::cost).sum();
    let max_error = reports.iter().map(|r| r.error).fold(0.0, f64::max);
    Ok(Score { max_error, complexity, pass: reports.iter().all(|r| r.pass), patches: reports })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub route: Route,
    pub charts: usize,
    pub complexity: u128,
    pub max_error: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("epsilon,route,charts,complexity,max_error\n");
    for r in rows {
        let route = match r.route {
            Route::Ck => "ck",
            Route::Analytic => "analytic",
        };
        let _ = writeln!(s, "{:e},{},{},{},{:e}", r.epsilon, route, r.charts, r.complexity, r.max_error);
    }
    s
}

impl From<&Approximation> for SweepRow {
    fn from(a: &Approximation) -> Self {
        SweepRow {
            epsilon: a.epsilon,
            route: a.route,
            charts: a.charts,
            complexity: a.complexity,
            max_error: a.max_sampled_error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Step;
    use crate::rational::q;

    #[test]
    fn square_chart_exact() {
        let src = Source {
            piece: 0,
            chart: 0,
            chain: Chain(vec![Step::Square { scale: qi(1), shift: qi(0) }]),
            targets: vec![],
        };
        let (c, coeffs, rem) = taylor_patch(&src, -1.0, 1.0, 3).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(coeffs[0], vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(rem, 0.0);
    }

    #[test]
    fn complexity_mixed_dims() {
        let mk = |dim| Patch {
            source: None,
            dim,
            degree: 3,
            multiplicity: 1,
            lo: 0.0,
            hi: 1.0,
            map: PatchMap::Constant { point: [0.0, 0.0], half_sides: [0.0, 0.0] },
            remainder_bound: 0.0,
            sampled_error: 0.0,
        };
        assert_eq!(mk(2).cost() + mk(1).cost(), 12);
    }

    #[test]
    fn affine_segment() {
        let f = FunctionExpr::new(Expr::poly(vec![q(1, 2), q(1, 4)]), qi(-1), qi(1));
        let input = SetInput { pieces: vec![Piece::Function { f }], boxes: vec![] };
        let a = ck_approximate(&input, 1e-3, 1.0, &CkConfig::default()).unwrap();
        assert_eq!(a.patches.len(), 1);
        assert_eq!(a.complexity, a.degree as u128);
        let b = analytic_approximate(&input, &q(1, 1 << 10), &AnalyticConfig::default()).unwrap();
        assert_eq!(b.patches.len(), 1);
        assert_eq!(b.patches[0].degree, 1);
        assert!(verify_and_score(&b).unwrap().pass);
    }

    #[test]
    fn hyperbola_analytic_small() {
        let e = q(1, 256);
        let a = analytic_approximate(&hyperbola_set(&e), &e, &AnalyticConfig::default()).unwrap();
        assert_eq!(a.degree, 9);
        let s = verify_and_score(&a).unwrap();
        assert!(s.pass, "max error {}", s.max_error);
    }
}

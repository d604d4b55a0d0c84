//! Remez-type inequalities on algebraic curves: the classical Chebyshev
//! bound, sampled Remez constants from linear programs, the gradient floor of
//! a curve and the chart count of its ρ-scaled analytic parametrization.

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::analytic::{self, AnalyticConfig};
use crate::bivar::{self, BivarPoly};
use crate::bp::multi_indices;
use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionExpr};
use crate::lp;
use crate::rational::{self, qi, Q};
use crate::upoly::UPoly;

/// Curve samples must satisfy `|P| <= ON_CURVE` after projection.
pub const ON_CURVE: f64 = 1e-10;

/// `T_d(x)` by the three-term recurrence.
pub fn chebyshev(d: u32, x: &Q) -> Q {
    let (mut a, mut b) = (Q::one(), x.clone());
    if d == 0 {
        return a;
    }
    for _ in 1..d {
        let c = qi(2) * x * &b - &a;
        a = b;
        b = c;
    }
    b
}

/// `T_d((4 - mu) / mu)`: the sharp Remez constant for degree-`d` polynomials on
/// `[-1, 1]` against a subset of measure `mu`.
pub fn classical_remez_bound(d: u32, mu: &Q) -> Result<Q> {
    if *mu <= Q::zero() || *mu > qi(2) {
        return Err(Error::InvalidInput("mu must lie in (0, 2]".into()));
    }
    Ok(chebyshev(d, &((qi(4) - mu) / mu)))
}

// ---------------------------------------------------------------------------
// curve sampling

/// `[x0, x1, y0, y1]`.
pub type Domain = [f64; 4];

pub const UNIT_BOX: Domain = [-1.0, 1.0, -1.0, 1.0];

struct FloatPoly {
    terms: Vec<(i32, i32, f64)>,
}

impl FloatPoly {
    fn new(p: &BivarPoly) -> Self {
        FloatPoly { terms: p.terms().map(|(i, j, c)| (i as i32, j as i32, rational::to_f64(c))).collect() }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|&(i, j, c)| c * x.powi(i) * y.powi(j)).sum()
    }

    fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        let (mut gx, mut gy) = (0.0, 0.0);
        for &(i, j, c) in &self.terms {
            if i > 0 {
                gx += c * i as f64 * x.powi(i - 1) * y.powi(j);
            }
            if j > 0 {
                gy += c * j as f64 * x.powi(i) * y.powi(j - 1);
            }
        }
        (gx, gy)
    }

    /// Newton steps along the gradient back onto the curve.
    fn project(&self, mut p: [f64; 2]) -> [f64; 2] {
        for _ in 0..4 {
            let v = self.eval(p[0], p[1]);
            let (gx, gy) = self.grad(p[0], p[1]);
            let g2 = gx * gx + gy * gy;
            if v == 0.0 || g2 == 0.0 {
                break;
            }
            p = [p[0] - v * gx / g2, p[1] - v * gy / g2];
        }
        p
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Crossings of the curve with `scan + 1` vertical and horizontal lines.
fn scan_cloud(p: &FloatPoly, dom: Domain, scan: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let lerp = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / scan as f64;
    for axis in 0..2 {
        for i in 0..=scan {
            let (line, (lo, hi)) = if axis == 0 {
                (lerp(dom[0], dom[1], i), (dom[2], dom[3]))
            } else {
                (lerp(dom[2], dom[3], i), (dom[0], dom[1]))
            };
            let at = |s: f64| if axis == 0 { p.eval(line, s) } else { p.eval(s, line) };
            let vals: Vec<f64> = (0..=scan).map(|k| at(lerp(lo, hi, k))).collect();
            if vals.iter().all(|v| *v == 0.0) {
                continue; // the line lies in the curve
            }
            for k in 0..=scan {
                let s = lerp(lo, hi, k);
                let root = if vals[k] == 0.0 {
                    Some(s)
                } else if k < scan && vals[k + 1] != 0.0 && (vals[k] > 0.0) != (vals[k + 1] > 0.0) {
                    Some(bisect(at, s, lerp(lo, hi, k + 1)))
                } else {
                    None
                };
                if let Some(r) = root {
                    out.push(if axis == 0 { [line, r] } else { [r, line] });
                }
            }
        }
    }
    out
}

fn inside(d: Domain, q: [f64; 2]) -> bool {
    let e = 1e-12;
    q[0] >= d[0] - e && q[0] <= d[1] + e && q[1] >= d[2] - e && q[1] <= d[3] + e
}

fn on_edge(d: Domain, q: [f64; 2]) -> bool {
    let e = 1e-12;
    (q[0] - d[0]).abs() < e || (q[0] - d[1]).abs() < e || (q[1] - d[2]).abs() < e || (q[1] - d[3]).abs() < e
}

/// Greedy thinning to spacing `h`: box-edge points first, then lexicographic order.
fn thin(pts: &[[f64; 2]], dom: Domain, h: f64) -> Vec<[f64; 2]> {
    use std::collections::HashMap;
    let mut grid: HashMap<(i64, i64), Vec<[f64; 2]>> = HashMap::new();
    let cell = |q: [f64; 2]| (((q[0] - dom[0]) / h).floor() as i64, ((q[1] - dom[2]) / h).floor() as i64);
    let mut kept = Vec::new();
    let order = pts.iter().filter(|q| on_edge(dom, **q)).chain(pts.iter().filter(|q| !on_edge(dom, **q)));
    for q in order {
        let (cx, cy) = cell(*q);
        let near = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                grid.get(&(cx + dx, cy + dy))
                    .is_some_and(|v| v.iter().any(|o| (o[0] - q[0]).hypot(o[1] - q[1]) < h))
            })
        });
        if !near {
            grid.entry((cx, cy)).or_default().push(*q);
            kept.push(*q);
        }
    }
    kept
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// Roughly arc-length-uniform sample of about the requested size.
    pub points: Vec<[f64; 2]>,
    /// Every scan crossing, used for refinement.
    pub fine: Vec<[f64; 2]>,
    pub spacing: f64,
}

/// Sample `{P = 0}` inside the domain: crossings with a grid of lines,
/// projected onto the curve and thinned to about `n` points.
pub fn sample_curve(p: &BivarPoly, dom: Domain, n: usize, scan: usize) -> Result<CurveSample> {
    let fine = fine_cloud(p, dom, scan)?;
    let diam = (dom[1] - dom[0]).hypot(dom[3] - dom[2]);
    let (mut lo, mut hi) = (diam * 1e-9, diam);
    let mut best = thin(&fine, dom, hi);
    let mut spacing = hi;
    for _ in 0..50 {
        let h = (lo * hi).sqrt();
        let kept = thin(&fine, dom, h);
        if kept.len() >= n {
            lo = h;
            if kept.len() <= n + n / 8 + 1 || best.len() < n {
                best = kept;
                spacing = h;
            }
        } else {
            hi = h;
            if best.len() < kept.len() {
                best = kept;
                spacing = h;
            }
        }
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
    }
    Ok(CurveSample { points: best, fine, spacing })
}

/// All scan crossings, projected onto the curve, sorted and deduplicated.
fn fine_cloud(p: &BivarPoly, dom: Domain, scan: usize) -> Result<Vec<[f64; 2]>> {
    let fp = FloatPoly::new(p);
    let scale = p.sup_norm((dom[0], dom[1]), (dom[2], dom[3]), 256).max(f64::MIN_POSITIVE);
    let mut fine: Vec<[f64; 2]> = scan_cloud(&fp, dom, scan.max(2))
        .into_iter()
        .map(|q| {
            let r = fp.project(q);
            if inside(dom, r) && fp.eval(r[0], r[1]).abs() <= fp.eval(q[0], q[1]).abs() {
                r
            } else {
                q
            }
        })
        .filter(|q| inside(dom, *q) && (fp.eval(q[0], q[1]) / scale).abs() <= ON_CURVE)
        .collect();
    if fine.is_empty() {
        return Err(Error::InvalidInput("the curve does not meet the domain".into()));
    }
    fine.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    fine.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    Ok(fine)
}

// ---------------------------------------------------------------------------
// empirical constants

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ZSpec {
    All,
    /// Part of the curve inside `[x0, x1] x [y0, y1]`.
    Window { window: Domain },
    Samples { points: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemezQuery {
    pub poly: BivarPoly,
    #[serde(default = "unit_box")]
    pub domain: Domain,
    pub z: ZSpec,
    pub degree: u32,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_scan")]
    pub scan: usize,
}

fn unit_box() -> Domain {
    UNIT_BOX
}
fn default_samples() -> usize {
    1000
}
fn default_scan() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemezReport {
    /// `max_Y |Q*| / max_Z |Q*|` on the fine samples.
    pub constant: f64,
    /// Best LP value over the `Y` sample.
    pub lp_value: f64,
    /// Monomials `x^a y^b` and the extremal coefficients.
    pub monomials: Vec<(u32, u32)>,
    pub extremal: Vec<f64>,
    pub witness: [f64; 2],
    pub y_samples: usize,
    pub z_samples: usize,
    pub refinement_rounds: usize,
}

fn features(mons: &[(u32, u32)], q: [f64; 2]) -> Vec<f64> {
    mons.iter().map(|&(a, b)| q[0].powi(a as i32) * q[1].powi(b as i32)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn in_window(w: Domain, q: [f64; 2]) -> bool {
    inside(w, q)
}

/// Sampled Remez constant: for every `y*` in the `Y` sample, maximize
/// `Q(y*)` over degree-`d` polynomials bounded by 1 on the `Z` sample, then
/// refine the constraints with the fine `Z` sample until the constant moves
/// less than 1%.
pub fn empirical_remez_constant(query: &RemezQuery) -> Result<RemezReport> {
    let dom = query.domain;
    let ys = sample_curve(&query.poly, dom, query.samples, query.scan)?;
    let (mut z, z_fine): (Vec<[f64; 2]>, Vec<[f64; 2]>) = match &query.z {
        ZSpec::All => (ys.points.clone(), ys.fine.clone()),
        ZSpec::Window { window } => (
            ys.points.iter().copied().filter(|q| in_window(*window, *q)).collect(),
            ys.fine.iter().copied().filter(|q| in_window(*window, *q)).collect(),
        ),
        ZSpec::Samples { points } => {
            let fp = FloatPoly::new(&query.poly);
            let scale = query.poly.sup_norm((dom[0], dom[1]), (dom[2], dom[3]), 256);
            if points.iter().any(|q| (fp.eval(q[0], q[1]) / scale).abs() > ON_CURVE) {
                return Err(Error::InvalidInput("Z samples must lie on the curve".into()));
            }
            (points.clone(), points.clone())
        }
    };
    if z.is_empty() {
        return Err(Error::InvalidInput("Z sample is empty".into()));
    }
    let mons: Vec<(u32, u32)> = multi_indices(2, query.degree).into_iter().map(|v| (v[0], v[1])).collect();
    let yf: Vec<Vec<f64>> = ys.points.iter().map(|q| features(&mons, *q)).collect();
    let zf_fine: Vec<Vec<f64>> = z_fine.iter().map(|q| features(&mons, *q)).collect();

    let solve_all = |z: &[[f64; 2]], which: &[usize]| -> Result<Vec<(usize, lp::LpSolution)>> {
        let mut a = Vec::with_capacity(2 * z.len());
        for q in z {
            let f = features(&mons, *q);
            a.push(f.iter().map(|v| -v).collect::<Vec<f64>>());
            a.push(f);
        }
        let b = vec![1.0; a.len()];
        which.iter().map(|&i| Ok((i, lp::maximize(&a, &b, &yf[i])?))).collect()
    };

    let all: Vec<usize> = (0..yf.len()).collect();
    let mut sols = solve_all(&z, &all)?;
    sols.sort_by(|x, y| y.1.value.total_cmp(&x.1.value).then(x.0.cmp(&y.0)));
    let mut rounds = 0;
    let mut best = sols[0].1.value;
    loop {
        let q = &sols[0].1.x;
        let mut viol: Vec<(f64, usize)> = zf_fine
            .iter()
            .enumerate()
            .map(|(i, f)| (dot(f, q).abs(), i))
            .filter(|(v, _)| *v > 1.0 + 1e-9)
            .collect();
        if viol.is_empty() || rounds >= 10 {
            break;
        }
        viol.sort_by(|a, b| b.0.total_cmp(&a.0));
        z.extend(viol.iter().take(64).map(|(_, i)| z_fine[*i]));
        let top: Vec<usize> = sols.iter().take(16).map(|s| s.0).collect();
        sols = solve_all(&z, &top)?;
        sols.sort_by(|x, y| y.1.value.total_cmp(&x.1.value).then(x.0.cmp(&y.0)));
        rounds += 1;
        let v = sols[0].1.value;
        let small = (v - best).abs() <= 0.01 * best;
        best = v;
        if small && rounds > 1 {
            break;
        }
    }
    let q = sols[0].1.x.clone();
    let zmax = zf_fine.iter().map(|f| dot(f, &q).abs()).fold(0.0f64, f64::max).max(1.0);
    let mut witness = ys.points[sols[0].0];
    let mut ymax = dot(&yf[sols[0].0], &q).abs();
    for p in ys.fine.iter() {
        let v = dot(&features(&mons, *p), &q).abs();
        if v > ymax {
            ymax = v;
            witness = *p;
        }
    }
    Ok(RemezReport {
        constant: (ymax / zmax).max(1.0),
        lp_value: sols[0].1.value,
        monomials: mons,
        extremal: q,
        witness,
        y_samples: ys.points.len(),
        z_samples: z.len(),
        refinement_rounds: rounds,
    })
}

// ---------------------------------------------------------------------------
// gradient floor

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientFloor {
    /// `min ‖∇P‖` over the curve, for `P` scaled to sup-norm 1 on the domain.
    pub rho: f64,
    pub point: [f64; 2],
    /// Sup-norm of the input polynomial on the domain.
    pub norm: f64,
}

pub fn curve_gradient_floor(p: &BivarPoly, dom: Domain, scan: usize) -> Result<GradientFloor> {
    let norm = p.sup_norm((dom[0], dom[1]), (dom[2], dom[3]), 512);
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("P vanishes on the domain".into()));
    }
    let fp = FloatPoly::new(p);
    let gnorm = |q: [f64; 2]| {
        let (gx, gy) = fp.grad(q[0], q[1]);
        gx.hypot(gy) / norm
    };
    let (mut point, mut rho) = fine_cloud(p, dom, scan)?
        .iter()
        .map(|q| (*q, gnorm(*q)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    // polish: golden-section search along the tangent, reprojecting onto the curve
    let mut h = 4.0 * ((dom[1] - dom[0]).max(dom[3] - dom[2])) / scan.max(2) as f64;
    for _ in 0..3 {
        let (gx, gy) = fp.grad(point[0], point[1]);
        let g = gx.hypot(gy);
        if g == 0.0 {
            break;
        }
        let t = [-gy / g, gx / g];
        let at = |u: f64| {
            let q = fp.project([point[0] + u * t[0], point[1] + u * t[1]]);
            let ok = inside(dom, q) && (fp.eval(q[0], q[1]) / norm).abs() <= ON_CURVE;
            (q, if ok { gnorm(q) } else { f64::INFINITY })
        };
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (-h, h);
        for _ in 0..60 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if at(c).1 < at(d).1 {
                b = d;
            } else {
                a = c;
            }
        }
        let (q, v) = at(0.5 * (a + b));
        if v < rho {
            rho = v;
            point = q;
        }
        h *= 0.25;
    }
    if rho < 1e-12 {
        return Err(Error::SingularCurve { rho });
    }
    Ok(GradientFloor { rho, point, norm })
}

// ---------------------------------------------------------------------------
// chart count

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemezParamConfig {
    /// `2 delta = c1 rho`.
    pub c1: f64,
    pub scan: usize,
    pub analytic: AnalyticConfig,
}

impl Default for RemezParamConfig {
    fn default() -> Self {
        RemezParamConfig { c1: 0.125, scan: 2000, analytic: AnalyticConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RemezChart {
    /// Affine a-chart of branch `branch` over `[lo, hi]`.
    Analytic { branch: usize, lo: f64, hi: f64 },
    /// Coordinate chart from the implicit function theorem over a removed box.
    Implicit { branch: usize, x: (f64, f64), y: (f64, f64) },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemezParametrization {
    pub rho: f64,
    pub delta: f64,
    pub branches: usize,
    pub charts: Vec<RemezChart>,
    pub n: usize,
    /// `2^N`, chaining charts in domain order (heuristic upper bound).
    pub chain_bound: f64,
    pub chain_bound_log2: f64,
    pub heuristic: bool,
}

fn real_roots_in(p: &UPoly, lo: f64, hi: f64) -> Vec<f64> {
    if p.is_zero() || p.degree() == Some(0) {
        return vec![];
    }
    let mut out: Vec<f64> = p
        .complex_roots()
        .into_iter()
        .filter(|(z, r)| z.im.abs() <= r + 1e-9 * (1.0 + z.norm()) && z.re > lo && z.re < hi)
        .map(|(z, _)| z.re)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// `P(x0, y)` as a polynomial in `y`.
fn slice_at_x(p: &BivarPoly, x0: &Q) -> UPoly {
    UPoly::new((0..=p.deg_y()).map(|j| p.coeff_in_y(j).eval(x0)).collect())
}

/// `P(x, y0)` as a polynomial in `x`.
fn slice_at_y(p: &BivarPoly, y0: &Q) -> UPoly {
    (0..=p.deg_y()).fold(UPoly::zero(), |acc, j| acc.add(&p.coeff_in_y(j).scale(&rational::pow(y0, j as u32))))
}

/// Branches `y(x)` of the curve inside the domain, split where branches
/// collide, escape or leave through the top or bottom edge.
pub fn curve_branches(p: &BivarPoly, dom: Domain) -> Result<Vec<FunctionExpr>> {
    let locus = bivar::singular_locus(p)?;
    let mut cuts: Vec<f64> = locus
        .points
        .iter()
        .filter(|s| s.im.abs() <= s.radius + 1e-9)
        .map(|s| s.re)
        .filter(|x| *x > dom[0] && *x < dom[1])
        .collect();
    for y0 in [dom[2], dom[3]] {
        cuts.extend(real_roots_in(&slice_at_y(p, &rational::from_f64(y0)), dom[0], dom[1]));
    }
    cuts.push(dom[0]);
    cuts.push(dom[1]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let linear = p.deg_y() == 1;
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-9 {
            continue;
        }
        let pad = (b - a) * 2f64.powi(-30);
        let lo = if a == dom[0] { rational::from_f64(a) } else { rational::dyadic(a + pad, 52) };
        let hi = if b == dom[1] { rational::from_f64(b) } else { rational::dyadic(b - pad, 52) };
        let mid = 0.5 * (a + b);
        let ys = real_roots_in(&slice_at_x(p, &rational::from_f64(mid)), dom[2], dom[3]);
        for y in ys {
            let expr = if linear {
                let (p0, p1) = (p.coeff_in_y(0), p.coeff_in_y(1));
                Expr::div(Expr::poly(p0.scale(&-Q::one()).coeffs().to_vec()), Expr::poly(p1.coeffs().to_vec()))
            } else {
                Expr::branch(p.clone(), (mid, y))
            };
            out.push(FunctionExpr::new(expr, lo.clone(), hi.clone()));
        }
    }
    Ok(out)
}

/// Analytic δ-parametrization of every branch with `2 delta = c1 rho`, plus
/// one implicit-function chart per removed box.
pub fn remez_parametrization(p: &BivarPoly, dom: Domain, cfg: &RemezParamConfig) -> Result<RemezParametrization> {
    let floor = curve_gradient_floor(p, dom, cfg.scan)?;
    let delta = (0.5 * cfg.c1 * floor.rho).min(0.5);
    let dq = rational::dyadic(delta, 52);
    if dq.is_zero() {
        return Err(Error::SingularCurve { rho: floor.rho });
    }
    let branches = curve_branches(p, dom)?;
    let mut charts = Vec::new();
    for (bi, f) in branches.iter().enumerate() {
        let param = analytic::analytic_delta_parametrize(f, &dq, &cfg.analytic)?;
        let (flo, fhi) = f.domain_f64();
        for (a, b) in &param.partition.removed {
            let (a, b) = (rational::to_f64(a).max(flo), rational::to_f64(b).min(fhi));
            if b > a {
                let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
                for s in 0..=32 {
                    if let Ok(v) = f.eval_f64(a + (b - a) * s as f64 / 32.0) {
                        ylo = ylo.min(v.max(dom[2]));
                        yhi = yhi.max(v.min(dom[3]));
                    }
                }
                if ylo > yhi {
                    (ylo, yhi) = (dom[2], dom[3]);
                }
                charts.push(RemezChart::Implicit { branch: bi, x: (a, b), y: (ylo, yhi) });
            }
        }
        for c in &param.charts {
            let (lo, hi) = c.chart.image();
            charts.push(RemezChart::Analytic { branch: bi, lo: rational::to_f64(&lo), hi: rational::to_f64(&hi) });
        }
    }
    let n = charts.len();
    Ok(RemezParametrization {
        rho: floor.rho,
        delta,
        branches: branches.len(),
        charts,
        n,
        chain_bound: 2f64.powi(n as i32),
        chain_bound_log2: n as f64,
        heuristic: true,
    })
}

/// Complex singular points of every branch, for reporting.
pub fn branch_singularities(p: &BivarPoly) -> Result<Vec<Complex64>> {
    Ok(bivar::singular_locus(p)?.complex_points())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn chebyshev_values() {
        assert_eq!(classical_remez_bound(2, &qi(2)).unwrap(), qi(1));
        assert_eq!(classical_remez_bound(1, &qi(1)).unwrap(), qi(3));
        assert_eq!(classical_remez_bound(2, &qi(1)).unwrap(), qi(17));
        assert!(classical_remez_bound(2, &qi(3)).is_err());
    }

    #[test]
    fn full_set_gives_one() {
        let circle = BivarPoly::from_terms(&[(2, 0, qi(1)), (0, 2, qi(1)), (0, 0, qi(-1))]);
        let r = empirical_remez_constant(&RemezQuery {
            poly: circle,
            domain: UNIT_BOX,
            z: ZSpec::All,
            degree: 2,
            samples: 200,
            scan: 400,
        })
        .unwrap();
        assert!((r.constant - 1.0).abs() < 1e-6, "{}", r.constant);
    }

    #[test]
    fn line_gradient() {
        let p = BivarPoly::from_terms(&[(0, 1, qi(1)), (1, 0, qi(-1))]);
        let g = curve_gradient_floor(&p, UNIT_BOX, 400).unwrap();
        assert!((g.rho - 2f64.sqrt() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn hyperbola_branch_is_rational() {
        let p = BivarPoly::from_terms(&[(1, 1, qi(1)), (0, 0, -q(1, 100))]);
        let b = curve_branches(&p, [0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0].eval_f64(0.5).unwrap() - 0.02).abs() < 1e-12);
    }
}

//! Analytic δ-parametrization: remove short intervals around singular
//! projections, cover the rest by intervals whose centers stay three lengths
//! away from every singular point, and certify affine a-charts on disks.

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::chart::{verify_mild_chart, Chain, Chart, MildReport, Normalization, Step};
use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionExpr};
use crate::rational::{self, q, qi, Q};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    #[serde(with = "crate::roots::interval_vec")]
    pub removed: Vec<(Q, Q)>,
    /// Removal intervals before merging overlaps.
    pub removed_unmerged: usize,
    #[serde(with = "crate::roots::interval_vec")]
    pub kept: Vec<(Q, Q)>,
    #[serde(with = "rational::serde_q")]
    pub delta: Q,
    /// Singular points as `(re, im)`.
    pub points: Vec<(f64, f64)>,
}

/// A kept interval that fails the distance test, with the offending point.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceViolation {
    pub interval: usize,
    pub point: usize,
    pub distance: f64,
    pub length: f64,
}

impl DyadicPartition {
    /// Exhaustive scan of all (interval, point) pairs.
    pub fn distance_violations(&self) -> Vec<DistanceViolation> {
        let mut out = Vec::new();
        for (j, (a, b)) in self.kept.iter().enumerate() {
            let len = rational::to_f64(&(b - a));
            let c = rational::to_f64(&((a + b) / qi(2)));
            for (i, &(re, im)) in self.points.iter().enumerate() {
                let d = Complex64::new(c - re, im).norm();
                if d < 3.0 * len {
                    out.push(DistanceViolation { interval: j, point: i, distance: d, length: len });
                }
            }
        }
        out
    }

    /// `2 (m + 1) log2(1 / delta)`.
    pub fn count_bound(&self) -> f64 {
        2.0 * (self.points.len() as f64 + 1.0) * (1.0 / rational::to_f64(&self.delta)).log2()
    }

    /// Kept and removed intervals together cover the base interval.
    pub fn covers(&self, lo: &Q, hi: &Q) -> bool {
        let mut all: Vec<&(Q, Q)> = self.kept.iter().chain(&self.removed).collect();
        all.sort();
        let mut reach = lo.clone();
        for (a, b) in all {
            if *a > reach {
                return false;
            }
            if *b > reach {
                reach = b.clone();
            }
        }
        reach >= *hi
    }
}

/// Largest `L` with `|s + L/2 - z| >= 3 L` for an interval `[s, s + L]` whose
/// start sits at signed offset `u = s - Re z` (mirror for leftward growth).
fn max_length(u: f64, im: f64) -> f64 {
    // -35/4 L^2 + u L + (u^2 + im^2) >= 0
    let c = u * u + im * im;
    (u + (u * u + 35.0 * c).sqrt()) / 17.5
}

/// Round down to a short dyadic rational.
fn dyadic_floor(x: f64) -> Q {
    let bits = ((-x.log2()).ceil() as i32 + 12).clamp(1, 1000) as u32;
    let n = (x * 2f64.powi(bits as i32)).floor();
    rational::dyadic(n / 2f64.powi(bits as i32), bits)
}

fn cover_side(from: &Q, to: &Q, rightward: bool, pts: &[(f64, f64)], out: &mut Vec<(Q, Q)>) {
    let mut s = from.clone();
    loop {
        let rem = if rightward { to - &s } else { &s - to };
        if rem <= Q::zero() {
            break;
        }
        let sf = rational::to_f64(&s);
        let lmax = pts
            .iter()
            .map(|&(re, im)| max_length(if rightward { sf - re } else { re - sf }, im))
            .fold(f64::INFINITY, f64::min)
            * (1.0 - 1e-9);
        let step = if rational::to_f64(&rem) <= lmax { rem } else { dyadic_floor(lmax) };
        let next = if rightward { &s + &step } else { &s - &step };
        out.push(if rightward { (s.clone(), next.clone()) } else { (next.clone(), s.clone()) });
        s = next;
    }
}

fn passes(a: &Q, b: &Q, pts: &[(f64, f64)]) -> bool {
    let c = rational::to_f64(&((a + b) / qi(2)));
    let len = rational::to_f64(&(b - a));
    pts.iter().all(|&(re, im)| Complex64::new(c - re, im).norm() >= 3.0 * len)
}

/// Fuse neighbouring intervals of a contiguous cover, smallest union first,
/// while the union still passes the distance test.
fn merge_passing(mut cover: Vec<(Q, Q)>, pts: &[(f64, f64)]) -> Vec<(Q, Q)> {
    loop {
        let best = (0..cover.len().saturating_sub(1))
            .filter(|&i| passes(&cover[i].0, &cover[i + 1].1, pts))
            .min_by_key(|&i| &cover[i + 1].1 - &cover[i].0);
        let Some(i) = best else { return cover };
        let (_, b) = cover.remove(i + 1);
        cover[i].1 = b;
    }
}

/// Cover `[lo, hi]` minus the open `2 delta`-intervals around each singular
/// projection. Each remaining gap is covered from both ends toward its
/// midpoint by intervals of the largest length the distance test allows.
pub fn dyadic_partition(lo: &Q, hi: &Q, points: &[Complex64], delta: &Q) -> Result<DyadicPartition> {
    if *delta <= Q::zero() || *delta >= Q::one() {
        return Err(Error::InvalidInput("delta must lie in (0, 1)".into()));
    }
    if lo >= hi {
        return Err(Error::InvalidInput("empty interval".into()));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|z| (z.re, z.im)).collect();
    let mut raw: Vec<(Q, Q)> = points
        .iter()
        .map(|z| {
            let x = rational::from_f64(z.re);
            (&x - delta, &x + delta)
        })
        .filter(|(a, b)| b > lo && a < hi)
        .map(|(a, b)| (a.max(lo.clone()), b.min(hi.clone())))
        .collect();
    let removed_unmerged = raw.len();
    raw.sort();
    let mut removed: Vec<(Q, Q)> = Vec::new();
    for (a, b) in raw {
        match removed.last_mut() {
            Some(last) if a < last.1 => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => removed.push((a, b)),
        }
    }
    let mut gaps = Vec::new();
    let mut cur = lo.clone();
    for (a, b) in &removed {
        if *a > cur {
            gaps.push((cur.clone(), a.clone()));
        }
        if *b > cur {
            cur = b.clone();
        }
    }
    if *hi > cur {
        gaps.push((cur, hi.clone()));
    }
    let mut kept = Vec::new();
    for (a, b) in gaps {
        if passes(&a, &b, &pts) {
            kept.push((a, b));
            continue;
        }
        // a gap touching the base interval grows away from its only singular end
        let mut cover = Vec::new();
        if a == *lo && removed.iter().any(|r| r.0 == b) {
            cover_side(&b, &a, false, &pts, &mut cover);
        } else if b == *hi && removed.iter().any(|r| r.1 == a) {
            cover_side(&a, &b, true, &pts, &mut cover);
        } else {
            let mid = (&a + &b) / qi(2);
            cover_side(&a, &mid, true, &pts, &mut cover);
            cover_side(&b, &mid, false, &pts, &mut cover);
        }
        cover.sort();
        kept.extend(merge_passing(cover, &pts));
    }
    kept.sort();
    Ok(DyadicPartition { removed, removed_unmerged, kept, delta: delta.clone(), points: pts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticConfig {
    pub radii: usize,
    pub angles: usize,
    /// Optional a-priori cap on chart bounds; exceeding it is an error.
    pub bound_cap: Option<f64>,
    pub refinement_rounds: usize,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig { radii: 8, angles: 256, bound_cap: None, refinement_rounds: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ACertificate {
    pub center: f64,
    /// Disk radius in the chart parameter.
    pub radius: f64,
    /// `max |f(psi(z)) - f(psi(0))|` on the disk.
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AChart {
    pub chart: Chart,
    /// Bound on the radius-2|Δ| disk in x, i.e. radius 4 in the chart parameter.
    pub k_bound: f64,
    pub certificate: ACertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParametrization {
    pub schema_version: u32,
    /// One function, or the lower and upper boundary of a slab.
    pub targets: Vec<FunctionExpr>,
    pub normalization: Normalization,
    pub partition: DyadicPartition,
    pub charts: Vec<AChart>,
    /// All charts certified with bound 1.
    pub unit: bool,
}

fn affine_chart(id: usize, a: &Q, b: &Q) -> Chart {
    Chart::new(id, qi(-1), qi(1), Chain(vec![Step::affine_between(&qi(-1), &qi(1), a, b)]))
}

/// `max |f(psi(t)) - f(psi(0))|` over `|t| <= radius`, sampled on concentric circles.
pub fn verify_a_chart(
    chart: &Chart,
    f: &Expr,
    k: f64,
    radius: f64,
    cfg: &AnalyticConfig,
) -> Result<ACertificate> {
    let x = |t: Complex64| -> Complex64 {
        let j = chart.chain.apply(&crate::jet::Jet::variable(t, 0));
        *j.value()
    };
    let c = x(Complex64::new(rational::to_f64(&chart.center()), 0.0));
    let f0: Complex64 = f.eval(c)?;
    let mut measured = 0.0f64;
    for r in 1..=cfg.radii {
        let rr = radius * r as f64 / cfg.radii as f64;
        for a in 0..cfg.angles {
            let th = std::f64::consts::TAU * a as f64 / cfg.angles as f64;
            let t = Complex64::from_polar(rr, th) + rational::to_f64(&chart.center());
            let v: Complex64 = f.eval(x(t))?;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::SingularityInsideDisk { chart: chart.id });
            }
            measured = measured.max((v - f0).norm());
        }
    }
    let tolerance = 1e-6;
    Ok(ACertificate { center: c.re, radius, measured, bound: k, tolerance, pass: measured <= k * (1.0 + tolerance) })
}

fn certify(
    id: usize,
    a: &Q,
    b: &Q,
    fs: &[Expr],
    pts: &[Complex64],
    cfg: &AnalyticConfig,
) -> Result<AChart> {
    let chart = affine_chart(id, a, b);
    let len = rational::to_f64(&(b - a));
    let c = rational::to_f64(&((a + b) / qi(2)));
    // radius 3|Δ| in x must be free of singular points
    for z in pts {
        if (z - c).norm() < 3.0 * len * (1.0 - 1e-9) {
            return Err(Error::SingularityInsideDisk { chart: id });
        }
    }
    // radius 2|Δ| in x is radius 4 in the chart parameter (half-length |Δ|/2)
    let mut k_bound = 0.0f64;
    for f in fs {
        k_bound = k_bound.max(verify_a_chart(&chart, f, f64::INFINITY, 4.0, cfg)?.measured);
    }
    if let Some(cap) = cfg.bound_cap {
        if k_bound > cap {
            return Err(Error::RefinementDiverged { chart: id, bound: k_bound });
        }
    }
    let certificate = certify_all(&chart, fs, k_bound.max(f64::MIN_POSITIVE), 3.0, cfg)?;
    Ok(AChart { chart, k_bound, certificate })
}

/// Certificate for several functions at once: the worst measured variation.
fn certify_all(chart: &Chart, fs: &[Expr], k: f64, radius: f64, cfg: &AnalyticConfig) -> Result<ACertificate> {
    let mut worst: Option<ACertificate> = None;
    for f in fs {
        let c = verify_a_chart(chart, f, k, radius, cfg)?;
        if worst.as_ref().is_none_or(|w| c.measured > w.measured) {
            worst = Some(c);
        }
    }
    Ok(worst.expect("at least one target"))
}

fn choose_scale(fs: &[FunctionExpr], kept: &[(Q, Q)]) -> Result<Normalization> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for f in fs {
        for (a, b) in kept {
            let (a, b) = (rational::to_f64(a), rational::to_f64(b));
            for s in 0..=64 {
                let v = f.eval_f64(a + (b - a) * s as f64 / 64.0)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let span = hi - lo;
    if !(span > 1.0) {
        return Ok(Normalization::identity());
    }
    let scale = rational::q((span * 1024.0).ceil() as i64, 1024);
    Ok(Normalization { shift: Q::zero(), scale })
}

/// Affine a-charts over the kept intervals of the partition built from the
/// singular locus of `f`; each chart records its bound on the radius-2|Δ| disk.
pub fn analytic_delta_parametrize(
    f: &FunctionExpr,
    delta: &Q,
    cfg: &AnalyticConfig,
) -> Result<AnalyticParametrization> {
    build(vec![f.clone()], delta, cfg)
}

/// Same for a slab: the partition avoids the singularities of both boundaries.
pub fn analytic_delta_parametrize_slab(
    g1: &FunctionExpr,
    g2: &FunctionExpr,
    delta: &Q,
    cfg: &AnalyticConfig,
) -> Result<AnalyticParametrization> {
    if g1.lo != g2.lo || g1.hi != g2.hi {
        return Err(Error::InvalidInput("slab boundaries must share a domain".into()));
    }
    build(vec![g1.clone(), g2.clone()], delta, cfg)
}

fn build(targets: Vec<FunctionExpr>, delta: &Q, cfg: &AnalyticConfig) -> Result<AnalyticParametrization> {
    let mut pts = Vec::new();
    for f in &targets {
        pts.extend(f.singularities()?.complex_points());
    }
    let (lo, hi) = (targets[0].lo.clone(), targets[0].hi.clone());
    let partition = dyadic_partition(&lo, &hi, &pts, delta)?;
    let normalization = choose_scale(&targets, &partition.kept)?;
    let gs: Vec<Expr> = targets.iter().map(|f| normalization.apply(&f.expr)).collect();
    let charts = partition
        .kept
        .iter()
        .enumerate()
        .map(|(i, (a, b))| certify(i, a, b, &gs, &pts, cfg))
        .collect::<Result<Vec<_>>>()?;
    let unit = charts.iter().all(|c| c.k_bound <= 1.0);
    Ok(AnalyticParametrization { schema_version: SCHEMA_VERSION, targets, normalization, partition, charts, unit })
}

impl AnalyticParametrization {
    pub fn normalized(&self) -> Vec<Expr> {
        self.targets.iter().map(|f| self.normalization.apply(&f.expr)).collect()
    }
}

/// Split every chart with bound `K > 1` into `ceil(3K)` equal pieces and
/// re-certify each piece as an a-1-chart on the radius-3 disk.
pub fn refine_to_unit_charts(
    p: &AnalyticParametrization,
    cfg: &AnalyticConfig,
) -> Result<AnalyticParametrization> {
    let gs = p.normalized();
    let mut out = Vec::new();
    for ac in &p.charts {
        let (a, b) = ac.chart.image();
        let mut pieces = vec![(a, b, ac.k_bound)];
        let mut round = 0;
        loop {
            let mut next = Vec::new();
            let mut bad = false;
            for (a, b, k) in pieces {
                let n = if k > 1.0 + 1e-6 { (3.0 * k).ceil() as i64 } else { 1 };
                for j in 0..n {
                    let lo = &a + (&b - &a) * q(j, n);
                    let hi = &a + (&b - &a) * q(j + 1, n);
                    let chart = affine_chart(0, &lo, &hi);
                    let cert = certify_all(&chart, &gs, 1.0, 3.0, cfg)?;
                    if cert.pass {
                        out.push(AChart { chart, k_bound: cert.measured, certificate: cert });
                    } else {
                        bad = true;
                        next.push((lo, hi, cert.measured));
                    }
                }
            }
            if !bad {
                break;
            }
            round += 1;
            if round > cfg.refinement_rounds {
                let worst = next.iter().map(|t| t.2).fold(0.0, f64::max);
                return Err(Error::RefinementDiverged { chart: ac.chart.id, bound: worst });
            }
            pieces = next;
        }
    }
    out.sort_by(|x, y| x.chart.image().cmp(&y.chart.image()));
    for (i, c) in out.iter_mut().enumerate() {
        c.chart.id = i;
    }
    Ok(AnalyticParametrization {
        schema_version: SCHEMA_VERSION,
        targets: p.targets.clone(),
        normalization: p.normalization.clone(),
        partition: p.partition.clone(),
        charts: out,
        unit: true,
    })
}

/// Mildness of an emitted a-chart with `A = max(K, 1)`, `C = 0`.
pub fn mild_check(p: &AnalyticParametrization, c: &AChart, max_order: usize) -> Result<MildReport> {
    let mut worst: Option<MildReport> = None;
    for t in &p.targets {
        let f = FunctionExpr::new(p.normalization.apply(&t.expr), t.lo.clone(), t.hi.clone());
        let r = verify_mild_chart(&c.chart, Some(&f), c.certificate.bound.max(1.0), 0.0, max_order, 64)?;
        if worst.as_ref().is_none_or(|w| r.worst_ratio > w.worst_ratio) {
            worst = Some(r);
        }
    }
    Ok(worst.expect("at least one target"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_real_point() {
        let p = dyadic_partition(&qi(-1), &qi(1), &[Complex64::new(0.0, 0.0)], &q(1, 16)).unwrap();
        assert_eq!(p.removed, vec![(q(-1, 16), q(1, 16))]);
        assert!(p.distance_violations().is_empty());
        assert!(p.covers(&qi(-1), &qi(1)));
    }

    #[test]
    fn no_points_single_interval() {
        let p = dyadic_partition(&qi(-1), &qi(1), &[], &q(1, 1024)).unwrap();
        assert_eq!(p.kept, vec![(qi(-1), qi(1))]);
        assert!((p.kept.len() as f64) <= p.count_bound());
    }

    #[test]
    fn merged_removals() {
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(0.05, 0.2)];
        let p = dyadic_partition(&qi(-1), &qi(1), &pts, &q(1, 16)).unwrap();
        assert_eq!(p.removed_unmerged, 2);
        assert_eq!(p.removed.len(), 1);
        assert!(p.distance_violations().is_empty());
    }

    #[test]
    fn affine_unit() {
        let f = FunctionExpr::new(Expr::poly(vec![q(1, 2), q(1, 4)]), qi(-1), qi(1));
        let p = analytic_delta_parametrize(&f, &q(1, 64), &AnalyticConfig::default()).unwrap();
        assert_eq!(p.charts.len(), 1);
        let r = refine_to_unit_charts(&p, &AnalyticConfig::default()).unwrap();
        assert!(r.charts.iter().all(|c| c.certificate.pass && c.k_bound <= 1.0));
    }

    #[test]
    fn square_on_unit_chart() {
        let chart = affine_chart(0, &qi(-1), &qi(1));
        let f = Expr::poly(vec![qi(0), qi(0), qi(1)]);
        let c = verify_a_chart(&chart, &f, 9.0, 3.0, &AnalyticConfig::default()).unwrap();
        assert!((c.measured - 9.0).abs() < 1e-9 && c.pass);
        assert!(!verify_a_chart(&chart, &f, 8.9, 3.0, &AnalyticConfig::default()).unwrap().pass);
    }
}

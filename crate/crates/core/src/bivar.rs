//! Bivariate polynomials `P(x, y)`, their singular locus over the x-axis,
//! and predictor-corrector continuation of branches of `P(x, y) = 0`.

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::rational::{self, Q};
use crate::upoly::UPoly;

/// `P(x, y) = sum coeffs[i][j] x^i y^j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BivarPoly {
    #[serde(with = "grid_serde")]
    coeffs: Vec<Vec<Q>>,
}

mod grid_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(g: &[Vec<Q>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<Vec<serde_json::Value>> = g
            .iter()
            .map(|row| row.iter().map(rational::to_wire).collect())
            .collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Q>>, D::Error> {
        #[derive(Deserialize)]
        struct W {
            num: String,
            den: String,
        }
        let v = Vec::<Vec<W>>::deserialize(d)?;
        v.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|w| {
                        rational::parse(&w.num, &w.den)
                            .ok_or_else(|| serde::de::Error::custom("invalid rational"))
                    })
                    .collect()
            })
            .collect()
    }
}

impl BivarPoly {
    /// Build from `(i, j, c)` terms meaning `c x^i y^j`.
    pub fn from_terms(terms: &[(usize, usize, Q)]) -> Self {
        let dx = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let dy = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut coeffs = vec![vec![Q::zero(); dy + 1]; dx + 1];
        for (i, j, c) in terms {
            coeffs[*i][*j] += c;
        }
        Self::from_grid(coeffs)
    }

    pub fn from_grid(mut coeffs: Vec<Vec<Q>>) -> Self {
        let width = coeffs.iter().map(|r| r.len()).max().unwrap_or(0);
        for r in &mut coeffs {
            r.resize(width, Q::zero());
        }
        // trim so that degree fields match the support
        while coeffs.last().is_some_and(|r| r.iter().all(|c| c.is_zero())) {
            coeffs.pop();
        }
        let dy = coeffs
            .iter()
            .filter_map(|r| r.iter().rposition(|c| !c.is_zero()))
            .max();
        match dy {
            Some(dy) => {
                for r in &mut coeffs {
                    r.truncate(dy + 1);
                }
            }
            None => coeffs.clear(),
        }
        BivarPoly { coeffs }
    }

    /// `y - q(x)`
    pub fn graph_of(q: &UPoly) -> Self {
        let mut terms: Vec<(usize, usize, Q)> = q
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| (i, 0, -c.clone()))
            .collect();
        terms.push((0, 1, Q::one()));
        Self::from_terms(&terms)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn deg_x(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn deg_y(&self) -> usize {
        self.coeffs.first().map_or(0, |r| r.len().saturating_sub(1))
    }

    pub fn total_degree(&self) -> usize {
        let mut d = 0;
        for (i, r) in self.coeffs.iter().enumerate() {
            for (j, c) in r.iter().enumerate() {
                if !c.is_zero() {
                    d = d.max(i + j);
                }
            }
        }
        d
    }

    pub fn coeff(&self, i: usize, j: usize) -> Q {
        self.coeffs
            .get(i)
            .and_then(|r| r.get(j))
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.coeffs.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(move |(j, c)| (i, j, c))
        })
    }

    /// Coefficient of `y^j` as a polynomial in `x`.
    pub fn coeff_in_y(&self, j: usize) -> UPoly {
        UPoly::new(self.coeffs.iter().map(|r| r.get(j).cloned().unwrap_or_default()).collect())
    }

    pub fn leading_in_y(&self) -> UPoly {
        self.coeff_in_y(self.deg_y())
    }

    pub fn eval<T: Scalar>(&self, x: &T, y: &T) -> T {
        // Horner in y of Horner in x
        let mut acc = T::zero_s();
        for j in (0..=self.deg_y()).rev() {
            let mut cx = T::zero_s();
            for i in (0..self.coeffs.len()).rev() {
                cx = cx * x.clone() + T::from_q(&self.coeffs[i][j]);
            }
            acc = acc * y.clone() + cx;
        }
        acc
    }

    pub fn eval_q(&self, x: &Q, y: &Q) -> Q {
        self.eval(x, y)
    }

    pub fn d_dx(&self) -> Self {
        let terms: Vec<_> = self
            .terms()
            .filter(|(i, _, _)| *i > 0)
            .map(|(i, j, c)| (i - 1, j, c * rational::qi(i as i64)))
            .collect();
        Self::from_terms(&terms)
    }

    pub fn d_dy(&self) -> Self {
        let terms: Vec<_> = self
            .terms()
            .filter(|(_, j, _)| *j > 0)
            .map(|(i, j, c)| (i, j - 1, c * rational::qi(j as i64)))
            .collect();
        Self::from_terms(&terms)
    }

    pub fn scale(&self, s: &Q) -> Self {
        let terms: Vec<_> = self.terms().map(|(i, j, c)| (i, j, c * s)).collect();
        Self::from_terms(&terms)
    }

    /// `‖P‖ = max over box of |P|`, sampled on a `(n+1)²` grid.
    pub fn sup_norm(&self, xr: (f64, f64), yr: (f64, f64), n: usize) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..=n {
            let x = xr.0 + (xr.1 - xr.0) * a as f64 / n as f64;
            for b in 0..=n {
                let y = yr.0 + (yr.1 - yr.0) * b as f64 / n as f64;
                m = m.max(self.eval(&x, &y).abs());
            }
        }
        m
    }

    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (self.d_dx().eval(&x, &y), self.d_dy().eval(&x, &y))
    }
}

/// Determinant of a square matrix over `Q[x]` by fraction-free (Bareiss) elimination.
pub fn poly_det(mut m: Vec<Vec<UPoly>>) -> UPoly {
    let n = m.len();
    if n == 0 {
        return UPoly::constant(Q::one());
    }
    let mut sign = Q::one();
    let mut prev = UPoly::constant(Q::one());
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return UPoly::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                let (qt, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero(), "Bareiss division must be exact");
                m[i][j] = qt;
            }
            m[i][k] = UPoly::zero();
        }
        prev = m[k][k].clone();
    }
    m[n - 1][n - 1].scale(&sign)
}

/// `Res_y(P, Q)` as a polynomial in `x`, via the Sylvester determinant.
pub fn resultant_y(p: &BivarPoly, q: &BivarPoly) -> UPoly {
    let (m, n) = (p.deg_y(), q.deg_y());
    if m == 0 && n == 0 {
        return UPoly::constant(Q::one());
    }
    let size = m + n;
    let mut s = vec![vec![UPoly::zero(); size]; size];
    for r in 0..n {
        for j in 0..=m {
            s[r][r + j] = p.coeff_in_y(m - j);
        }
    }
    for r in 0..m {
        for j in 0..=n {
            s[n + r][r + j] = q.coeff_in_y(n - j);
        }
    }
    poly_det(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularitySource {
    DiscriminantRoot,
    LeadingCoefficientRoot,
    Pole,
    UserDeclared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub re: f64,
    pub im: f64,
    pub radius: f64,
    pub source: SingularitySource,
}

impl SingularPoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Unverified `(n, p1, p2)` class metadata for declared-singularity inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Valency {
    pub poles: usize,
    pub p1: usize,
    pub p2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct SingularityData {
    pub points: Vec<SingularPoint>,
    #[serde(default)]
    pub valency: Option<Valency>,
}

impl SingularityData {
    pub fn declared(points: &[Complex64]) -> Self {
        SingularityData {
            points: points
                .iter()
                .map(|z| SingularPoint {
                    re: z.re,
                    im: z.im,
                    radius: 0.0,
                    source: SingularitySource::UserDeclared,
                })
                .collect(),
            valency: None,
        }
    }

    /// Sorted, deduplicated real projections.
    pub fn projections(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.points.iter().map(|p| p.re).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        xs
    }

    pub fn complex_points(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.z()).collect()
    }

    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.points
            .iter()
            .map(|p| ((p.z() - z).norm() - p.radius).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }
}

fn push_roots(out: &mut Vec<SingularPoint>, poly: &UPoly, source: SingularitySource) {
    for (z, r) in poly.complex_roots() {
        let dup = out
            .iter_mut()
            .find(|p| (p.z() - z).norm() <= (p.radius + r).max(1e-9 * (1.0 + z.norm())));
        match dup {
            Some(p) => p.radius = p.radius.max(r),
            None => out.push(SingularPoint {
                re: z.re,
                im: z.im,
                radius: r,
                source,
            }),
        }
    }
}

/// Complex points over which branches of `P = 0` collide or escape to infinity:
/// roots of `Res_y(P, ∂P/∂y)` and of the leading coefficient in `y`.
pub fn singular_locus(p: &BivarPoly) -> Result<SingularityData> {
    if p.is_zero() {
        return Err(Error::InvalidInput("P is identically zero".into()));
    }
    if p.deg_y() == 0 {
        return Err(Error::DegenerateInY);
    }
    let lead = p.leading_in_y();
    let mut points = Vec::new();
    push_roots(&mut points, &lead, SingularitySource::LeadingCoefficientRoot);
    let disc = resultant_y(p, &p.d_dy());
    if disc.is_zero() {
        return Err(Error::PreconditionFailed(
            "P has a repeated factor in y (discriminant vanishes identically)".into(),
        ));
    }
    // the resultant carries the leading coefficient as a factor; strip it
    let mut reduced = disc;
    if lead.degree().unwrap_or(0) > 0 {
        loop {
            let (qt, r) = reduced.div_rem(&lead);
            if r.is_zero() && qt.degree().unwrap_or(0) < reduced.degree().unwrap_or(0) {
                reduced = qt;
            } else {
                break;
            }
        }
    }
    push_roots(&mut points, &reduced, SingularitySource::DiscriminantRoot);
    points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(SingularityData {
        points,
        valency: None,
    })
}

/// Step-control parameters for branch continuation.
#[derive(Clone, Debug)]
pub struct ContinuationConfig {
    pub step_floor: f64,
    pub residual_tol: f64,
    pub max_steps: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            step_floor: 1e-12,
            residual_tol: 1e-10,
            max_steps: 100_000,
        }
    }
}

fn newton_y(p: &BivarPoly, py: &BivarPoly, x: Complex64, mut y: Complex64) -> Option<Complex64> {
    for _ in 0..30 {
        let f = p.eval(&x, &y);
        let d = py.eval(&x, &y);
        if d.norm() == 0.0 {
            return None;
        }
        let step = f / d;
        y -= step;
        if step.norm() <= 1e-15 * (1.0 + y.norm()) {
            return Some(y);
        }
    }
    let f = p.eval(&x, &y);
    (f.norm() <= 1e-9 * (1.0 + y.norm())).then_some(y)
}

fn residual_scale(p: &BivarPoly, x: Complex64, y: Complex64) -> f64 {
    // sum of |monomial| magnitudes, so residual tolerance is relative
    p.terms()
        .map(|(i, j, c)| rational::to_f64(c).abs() * x.norm().powi(i as i32) * y.norm().powi(j as i32))
        .sum::<f64>()
        .max(1.0)
}

/// Track a root of `P(z, ·) = 0` along the polyline `path`, starting from
/// `(path[0], start)`. Returns the value at every path vertex.
pub fn continue_along(
    p: &BivarPoly,
    sing: &SingularityData,
    start: Complex64,
    path: &[Complex64],
    cfg: &ContinuationConfig,
) -> Result<Vec<Complex64>> {
    let py = p.d_dy();
    let px = p.d_dx();
    let Some(&x0) = path.first() else { return Ok(vec![]) };
    let mut y = newton_y(p, &py, x0, start).ok_or(Error::BranchJump { at: 0.0 })?;
    let mut out = vec![y];
    let mut steps = 0usize;
    for (seg, w) in path.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let len = (b - a).norm();
        let mut s = 0.0f64;
        while len - s > 1e-14 * len.max(1.0) {
            let x = a + (b - a) * (s / len);
            let dist = sing.distance_to(x);
            if dist <= cfg.step_floor {
                return Err(Error::PathNearSingularity { distance: dist });
            }
            let mut h = (0.5 * dist).min(len - s);
            loop {
                if h < cfg.step_floor {
                    return Err(Error::BranchJump { at: seg as f64 + s / len });
                }
                let xn = a + (b - a) * ((s + h) / len);
                let dx = xn - x;
                let slope = -px.eval(&x, &y) / py.eval(&x, &y);
                let pred = y + slope * dx;
                match newton_y(p, &py, xn, pred) {
                    Some(yc)
                        if (yc - pred).norm() <= 0.5 * (pred - y).norm() + 1e-10 * (1.0 + y.norm()) =>
                    {
                        y = yc;
                        s += h;
                        break;
                    }
                    _ => h *= 0.5,
                }
            }
            steps += 1;
            if steps > cfg.max_steps {
                return Err(Error::PathNearSingularity { distance: 0.0 });
            }
        }
        if let Some(yc) = newton_y(p, &py, b, y) {
            if (yc - y).norm() <= 1e-8 * (1.0 + y.norm()) {
                y = yc;
            }
        }
        let r = p.eval(&b, &y).norm() / residual_scale(p, b, y);
        if r > cfg.residual_tol {
            return Err(Error::BranchJump { at: seg as f64 + 1.0 });
        }
        out.push(y);
    }
    Ok(out)
}

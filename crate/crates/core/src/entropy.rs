//! Covering numbers and finite-time entropies `h(f, n, eps)` of sample
//! dynamical systems, bracketed between a separated set and a greedy cover
//! on a grid.

use serde::{Deserialize, Serialize};

use crate::bivar::BivarPoly;
use crate::error::{Error, Result};
use crate::stats::linear_fit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    /// Coordinates modulo 1.
    Toroidal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapSpec {
    Identity { dim: usize },
    /// `x -> 2x mod 1` on the circle.
    Doubling,
    /// `x -> r x (1 - x)` on `[0, 1]`.
    Logistic { r: f64 },
    /// Linear automorphism of the 2-torus.
    Torus { matrix: [[i64; 2]; 2] },
    /// `(x, y) -> (fx(x, y), fy(x, y))` on an invariant box.
    Planar { fx: BivarPoly, fy: BivarPoly },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynSystem {
    pub name: String,
    pub map: MapSpec,
    pub metric: Metric,
    /// Per-axis `[lo, hi]`.
    pub region: Vec<[f64; 2]>,
    pub iteration_cap: usize,
}

pub const DEFAULT_ITERATION_CAP: usize = 40;

impl DynSystem {
    pub fn identity() -> Self {
        Self::new("identity", MapSpec::Identity { dim: 1 }, Metric::Euclidean, vec![[0.0, 1.0]])
    }

    pub fn doubling() -> Self {
        Self::new("doubling", MapSpec::Doubling, Metric::Toroidal, vec![[0.0, 1.0]])
    }

    pub fn logistic(r: f64) -> Self {
        Self::new("logistic", MapSpec::Logistic { r }, Metric::Euclidean, vec![[0.0, 1.0]])
    }

    /// The automorphism `(2 1; 1 1)`.
    pub fn cat() -> Self {
        Self::new("cat", MapSpec::Torus { matrix: [[2, 1], [1, 1]] }, Metric::Toroidal, vec![[0.0, 1.0]; 2])
    }

    pub fn planar(fx: BivarPoly, fy: BivarPoly, region: [[f64; 2]; 2]) -> Result<Self> {
        let s = Self::new("planar", MapSpec::Planar { fx, fy }, Metric::Euclidean, region.to_vec());
        s.check_invariant(10_000)?;
        Ok(s)
    }

    fn new(name: &str, map: MapSpec, metric: Metric, region: Vec<[f64; 2]>) -> Self {
        DynSystem { name: name.into(), map, metric, region, iteration_cap: DEFAULT_ITERATION_CAP }
    }

    /// Look up a named system.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "identity" => Self::identity(),
            "doubling" => Self::doubling(),
            "logistic" => Self::logistic(4.0),
            "cat" => Self::cat(),
            _ => return Err(Error::InvalidInput(format!("unknown system '{name}'"))),
        })
    }

    pub fn dim(&self) -> usize {
        self.region.len()
    }

    pub fn step(&self, p: &mut [f64]) {
        match &self.map {
            MapSpec::Identity { .. } => {}
            MapSpec::Doubling => p[0] = (2.0 * p[0]).rem_euclid(1.0),
            MapSpec::Logistic { r } => p[0] = r * p[0] * (1.0 - p[0]),
            MapSpec::Torus { matrix: m } => {
                let x = (m[0][0] as f64 * p[0] + m[0][1] as f64 * p[1]).rem_euclid(1.0);
                let y = (m[1][0] as f64 * p[0] + m[1][1] as f64 * p[1]).rem_euclid(1.0);
                p[0] = x;
                p[1] = y;
            }
            MapSpec::Planar { fx, fy } => {
                let (x, y) = (p[0], p[1]);
                p[0] = fx.eval(&x, &y);
                p[1] = fy.eval(&x, &y);
            }
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let d = (x - y).abs();
                let d = match self.metric {
                    Metric::Euclidean => d,
                    Metric::Toroidal => d.min(1.0 - d),
                };
                d * d
            })
            .sum();
        sq.sqrt()
    }

    /// Sampled check that the map sends the region into itself.
    pub fn check_invariant(&self, samples: usize) -> Result<()> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..samples {
            let mut p: Vec<f64> = self.region.iter().map(|r| rng.gen_range(r[0]..=r[1])).collect();
            self.step(&mut p);
            let ok = p.iter().zip(&self.region).all(|(v, r)| *v >= r[0] - 1e-12 && *v <= r[1] + 1e-12);
            if !ok {
                return Err(Error::InvalidInput(format!("{} leaves its region at {p:?}", self.name)));
            }
        }
        Ok(())
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.iteration_cap {
            return Err(Error::InvalidInput(format!("n = {n} exceeds the iteration cap {}", self.iteration_cap)));
        }
        Ok(())
    }
}

/// `d_n(x, y) = max_{0 <= i <= n} d(f^i x, f^i y)`.
pub fn dn_distance(sys: &DynSystem, n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    sys.check_n(n)?;
    let (mut a, mut b) = (x.to_vec(), y.to_vec());
    let mut m = sys.distance(&a, &b);
    for _ in 0..n {
        sys.step(&mut a);
        sys.step(&mut b);
        m = m.max(sys.distance(&a, &b));
    }
    Ok(m)
}

/// Default lattice size per axis: fine enough that `d_n`-balls of expanding
/// maps at `n <= 12` still hold several grid points.
pub fn default_grid(sys: &DynSystem) -> usize {
    if sys.dim() == 1 {
        1 << 20
    } else {
        1 << 10
    }
}

pub const DEFAULT_NS: [usize; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];
pub const DEFAULT_EPS: [f64; 2] = [0.05, 0.02];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub n: usize,
    pub eps: f64,
    /// Size of a maximal `2 eps`-separated set: no `eps`-ball holds two of its points.
    pub lower: usize,
    /// Size of a greedy `eps`-cover of the grid.
    pub upper: usize,
    pub grid_points: usize,
    pub resolution: f64,
}

/// Grid point `i` of a `grid^dim` lattice, lexicographic in the coordinates.
fn grid_point(sys: &DynSystem, grid: usize, mut i: usize, out: &mut [f64]) {
    for k in (0..sys.dim()).rev() {
        let r = sys.region[k];
        let j = i % grid;
        i /= grid;
        // circles and tori: drop the duplicate endpoint
        let steps = match sys.metric {
            Metric::Toroidal => grid,
            Metric::Euclidean => grid.saturating_sub(1).max(1),
        };
        out[k] = r[0] + (r[1] - r[0]) * j as f64 / steps as f64;
    }
}

fn resolution(sys: &DynSystem, grid: usize) -> f64 {
    sys.region
        .iter()
        .map(|r| {
            let steps = match sys.metric {
                Metric::Toroidal => grid,
                Metric::Euclidean => grid.saturating_sub(1).max(1),
            };
            (r[1] - r[0]) / steps as f64
        })
        .fold(0.0, f64::max)
}

/// Orbit segments `x, f x, ..., f^n x` of grid points.
struct Orbits<'a> {
    sys: &'a DynSystem,
    grid: usize,
    n: usize,
}

impl Orbits<'_> {
    fn orbit(&self, i: u32, out: &mut Vec<f64>) {
        let dim = self.sys.dim();
        out.resize(dim * (self.n + 1), 0.0);
        let mut p = vec![0.0; dim];
        grid_point(self.sys, self.grid, i as usize, &mut p);
        for t in 0..=self.n {
            out[t * dim..(t + 1) * dim].copy_from_slice(&p);
            if t < self.n {
                self.sys.step(&mut p);
            }
        }
    }

    /// Whether grid point `j` stays within `eps` of the orbit `a`, stopping
    /// at the first escape.
    fn within(&self, a: &[f64], j: u32, eps: f64, p: &mut Vec<f64>) -> bool {
        let dim = self.sys.dim();
        p.resize(dim, 0.0);
        grid_point(self.sys, self.grid, j as usize, p);
        for t in 0..=self.n {
            if self.sys.distance(&a[t * dim..(t + 1) * dim], p) > eps {
                return false;
            }
            if t < self.n {
                self.sys.step(p);
            }
        }
        true
    }
}

/// Points sorted by their cells at a few orbit times, for pruned range
/// search: two points within `cell` in `d_n` sit in adjacent cells at every
/// time.
struct CellIndex {
    times: Vec<usize>,
    cell_counts: Vec<u32>,
    wrap: bool,
    /// Flattened keys, `width` entries per point, in sorted order.
    keys: Vec<u32>,
    order: Vec<u32>,
    width: usize,
}

impl CellIndex {
    fn new(sys: &DynSystem, n: usize, cell: f64) -> CellIndex {
        let mut times = vec![n, 0, n / 2, n / 4, (3 * n) / 4];
        let mut seen = std::collections::HashSet::new();
        times.retain(|t| seen.insert(*t));
        let cell_counts = sys.region.iter().map(|r| ((r[1] - r[0]) / cell).floor().max(1.0) as u32).collect();
        let width = times.len() * sys.dim();
        CellIndex { times, cell_counts, wrap: sys.metric == Metric::Toroidal, keys: Vec::new(), order: Vec::new(), width }
    }

    fn key(&self, sys: &DynSystem, orbit: &[f64], out: &mut Vec<u32>) {
        let dim = sys.dim();
        out.clear();
        for &t in &self.times {
            for k in 0..dim {
                let r = sys.region[k];
                let m = self.cell_counts[k];
                let c = ((orbit[t * dim + k] - r[0]) / (r[1] - r[0]) * m as f64).floor().clamp(0.0, m as f64 - 1.0);
                out.push(c as u32);
            }
        }
    }

    fn fill(&mut self, sys: &DynSystem, orbits: &Orbits, points: impl Iterator<Item = u32>) {
        let mut raw: Vec<(Vec<u32>, u32)> = Vec::new();
        let mut orbit = Vec::new();
        for i in points {
            orbits.orbit(i, &mut orbit);
            let mut k = Vec::with_capacity(self.width);
            self.key(sys, &orbit, &mut k);
            raw.push((k, i));
        }
        raw.sort_unstable();
        self.keys = raw.iter().flat_map(|(k, _)| k.iter().copied()).collect();
        self.order = raw.into_iter().map(|(_, i)| i).collect();
    }

    fn level_cells(&self, level: usize) -> u32 {
        self.cell_counts[level % self.cell_counts.len()]
    }

    /// Visit every indexed point whose cell at each level is within one of `q`'s.
    fn neighbors(&self, q: &[u32], visit: &mut impl FnMut(u32)) {
        self.descend(q, 0, 0, self.order.len(), visit);
    }

    fn descend(&self, q: &[u32], level: usize, lo: usize, hi: usize, visit: &mut impl FnMut(u32)) {
        if lo >= hi {
            return;
        }
        if level == self.width {
            for pos in lo..hi {
                visit(self.order[pos]);
            }
            return;
        }
        let c = q[level];
        let m = self.level_cells(level);
        let mut vals = [c, u32::MAX, u32::MAX];
        if c > 0 {
            vals[1] = c - 1;
        } else if self.wrap && m > 2 {
            vals[1] = m - 1;
        }
        if c + 1 < m {
            vals[2] = c + 1;
        } else if self.wrap && m > 2 {
            vals[2] = 0;
        }
        for (idx, &v) in vals.iter().enumerate() {
            if v == u32::MAX || vals[..idx].contains(&v) {
                continue;
            }
            let a = lo + self.partition(lo, hi, level, |k| k < v);
            let b = a + self.partition(a, hi, level, |k| k <= v);
            self.descend(q, level + 1, a, b, visit);
        }
    }

    fn partition(&self, lo: usize, hi: usize, level: usize, pred: impl Fn(u32) -> bool) -> usize {
        let (mut a, mut b) = (0, hi - lo);
        while a < b {
            let mid = (a + b) / 2;
            if pred(self.keys[(lo + mid) * self.width + level]) {
                a = mid + 1;
            } else {
                b = mid;
            }
        }
        a
    }
}

/// Greedy `radius`-cover of the indexed points, centres taken in
/// lexicographic grid order. The centres are pairwise more than `radius` apart.
fn greedy_cover(index: &CellIndex, sys: &DynSystem, orbits: &Orbits, points: &[u32], radius: f64) -> Vec<u32> {
    let mut covered = std::collections::HashSet::new();
    let mut dense = vec![false; if points.len() == orbits.grid.pow(sys.dim() as u32) { points.len() } else { 0 }];
    let mut centres = Vec::new();
    let (mut oc, mut oq, mut key) = (Vec::new(), Vec::new(), Vec::new());
    for &i in points {
        let done = if dense.is_empty() { covered.contains(&i) } else { dense[i as usize] };
        if done {
            continue;
        }
        centres.push(i);
        orbits.orbit(i, &mut oc);
        index.key(sys, &oc, &mut key);
        index.neighbors(&key, &mut |j| {
            let seen = if dense.is_empty() { covered.contains(&j) } else { dense[j as usize] };
            if !seen {
                if orbits.within(&oc, j, radius, &mut oq) {
                    if dense.is_empty() {
                        covered.insert(j);
                    } else {
                        dense[j as usize] = true;
                    }
                }
            }
        });
    }
    centres
}

/// Bracket the `eps`-covering number of the region in the `d_n` metric on a
/// `grid^dim` lattice with spacing at most `eps / 4`.
pub fn covering_number(sys: &DynSystem, n: usize, eps: f64, grid: usize) -> Result<Covering> {
    sys.check_n(n)?;
    let res = resolution(sys, grid);
    if !(eps > 0.0) || res > eps / 4.0 {
        return Err(Error::GridTooCoarse { resolution: res, limit: eps / 4.0 });
    }
    let orbits = Orbits { sys, grid, n };
    let count = grid.pow(sys.dim() as u32);
    let all: Vec<u32> = (0..count as u32).collect();
    let mut index = CellIndex::new(sys, n, eps);
    index.fill(sys, &orbits, all.iter().copied());
    let centres = greedy_cover(&index, sys, &orbits, &all, eps);
    // a 2 eps-separated set meets each eps-ball at most once
    let mut sparse = CellIndex::new(sys, n, 2.0 * eps);
    sparse.fill(sys, &orbits, centres.iter().copied());
    let separated = greedy_cover(&sparse, sys, &orbits, &centres, 2.0 * eps);
    Ok(Covering { n, eps, lower: separated.len(), upper: centres.len(), grid_points: count, resolution: res })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: usize,
    pub eps: f64,
    pub m_lower: usize,
    pub m_upper: usize,
    /// `log2(M) / n` from the greedy cover.
    pub h_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub eps: f64,
    /// Slope of `log2 M` against `n` over the top half of the `n` range.
    pub h: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub system: String,
    pub grid: usize,
    pub rows: Vec<EntropyRow>,
    pub estimates: Vec<EntropyEstimate>,
    /// `M` nondecreasing in `n` and nonincreasing in `eps`, for both brackets.
    pub monotone: bool,
    pub lower_le_upper: bool,
}

pub fn entropy_sweep(sys: &DynSystem, ns: &[usize], epss: &[f64], grid: usize) -> Result<EntropyReport> {
    if ns.is_empty() || epss.is_empty() {
        return Err(Error::InvalidInput("empty sweep".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    let mut epss = epss.to_vec();
    epss.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for &eps in &epss {
        for &n in &ns {
            let c = covering_number(sys, n, eps, grid)?;
            let h_n = if n == 0 { f64::NAN } else { (c.upper as f64).log2() / n as f64 };
            rows.push(EntropyRow { n, eps, m_lower: c.lower, m_upper: c.upper, h_n });
        }
    }
    let at = |ei: usize, ni: usize| &rows[ei * ns.len() + ni];
    let mut monotone = true;
    for ei in 0..epss.len() {
        for ni in 0..ns.len() {
            let r = at(ei, ni);
            if ni > 0 {
                let p = at(ei, ni - 1);
                monotone &= r.m_upper >= p.m_upper && r.m_lower >= p.m_lower;
            }
            if ei > 0 {
                // eps decreasing along ei
                let p = at(ei - 1, ni);
                monotone &= r.m_upper >= p.m_upper && r.m_lower >= p.m_lower;
            }
        }
    }
    let lower_le_upper = rows.iter().all(|r| r.m_lower <= r.m_upper);
    let half = ns.len() / 2;
    let estimates = (0..epss.len())
        .map(|ei| {
            let top: Vec<usize> = (half.min(ns.len().saturating_sub(2))..ns.len()).collect();
            let xs: Vec<f64> = top.iter().map(|&ni| ns[ni] as f64).collect();
            let ys: Vec<f64> = top.iter().map(|&ni| (at(ei, ni).m_upper as f64).log2()).collect();
            let fit = linear_fit(&xs, &ys);
            EntropyEstimate { eps: epss[ei], h: fit.slope, r2: fit.r2 }
        })
        .collect();
    Ok(EntropyReport { system: sys.name.clone(), grid, rows, estimates, monotone, lower_le_upper })
}

impl EntropyReport {
    /// One row per `(n, eps)`; `h` is the slope estimate for that `eps`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,eps,m_lower,m_upper,h_n,h\n");
        for r in &self.rows {
            let h = self.estimates.iter().find(|e| e.eps == r.eps).map_or(f64::NAN, |e| e.h);
            s.push_str(&format!("{},{},{},{},{:.6},{:.6}\n", r.n, r.eps, r.m_lower, r.m_upper, r.h_n, h));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_distance() {
        let d = dn_distance(&DynSystem::doubling(), 1, &[0.1], &[0.2]).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        let d = dn_distance(&DynSystem::identity(), 7, &[0.1], &[0.35]).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identity_static_cover() {
        let sys = DynSystem::identity();
        for n in [0, 3, 8] {
            let c = covering_number(&sys, n, 0.1, 401).unwrap();
            assert!(c.lower >= 5 && c.upper <= 11 && c.lower <= c.upper, "{c:?}");
        }
    }

    #[test]
    fn planar_invariance_checked() {
        use crate::rational::qi;
        let half = crate::rational::q(1, 2);
        // ((x^2 + y)/2, (xy + x)/2) keeps the unit square
        let fx = BivarPoly::from_terms(&[(2, 0, half.clone()), (0, 1, half.clone())]);
        let fy = BivarPoly::from_terms(&[(1, 1, half.clone()), (1, 0, half)]);
        assert!(DynSystem::planar(fx.clone(), fy.clone(), [[0.0, 1.0]; 2]).is_ok());
        let bad = BivarPoly::from_terms(&[(1, 0, qi(2))]);
        assert!(DynSystem::planar(bad, fy, [[0.0, 1.0]; 2]).is_err());
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(covering_number(&DynSystem::identity(), 1, 0.1, 10), Err(Error::GridTooCoarse { .. })));
    }
}

//! Dense two-phase simplex for `maximize c·x subject to A x <= b` with free
//! `x` and `b >= 0`, solved through its dual `min b·w, Aᵀw = c, w >= 0`.
//! The dual has one row per variable, so the tableau stays short even with
//! thousands of constraints.

use num_traits::{FromPrimitive, Num, Signed};

use crate::error::{Error, Result};
use crate::rational::{self, Q};

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Solved with exact rational pivots after the float pass failed verification.
    pub exact: bool,
}

const FLOAT_TOL: f64 = 1e-10;
const VERIFY_TOL: f64 = 1e-7;

trait Field: Clone + PartialOrd + Num + Signed + FromPrimitive {}
impl<T: Clone + PartialOrd + Num + Signed + FromPrimitive> Field for T {}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    active: Vec<bool>,
    tol: T,
    iterations: usize,
}

impl<T: Field> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        for i in 0..self.rows.len() {
            if i == r || !self.active[i] || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for j in 0..self.rows[i].len() {
                if !self.rows[r][j].is_zero() {
                    let v = self.rows[i][j].clone() - f.clone() * self.rows[r][j].clone();
                    self.rows[i][j] = v;
                }
            }
            self.rhs[i] = self.rhs[i].clone() - f * self.rhs[r].clone();
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let mut d = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            if !self.active[i] {
                continue;
            }
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(row) {
                *dj = dj.clone() - cb.clone() * a.clone();
            }
        }
        d
    }

    /// Minimize `cost` over columns `< allowed`; returns false when the
    /// iteration cap is hit.
    fn run(&mut self, cost: &[T], allowed: usize, cap: usize) -> bool {
        let mut degenerate = 0usize;
        let start = self.iterations;
        loop {
            if self.iterations - start > cap {
                return false;
            }
            let d = self.reduced_costs(cost);
            let neg = -self.tol.clone();
            let bland = degenerate > 50;
            let mut enter: Option<usize> = None;
            for (j, dj) in d[..allowed].iter().enumerate() {
                if *dj < neg && (enter.is_none() || (!bland && *dj < d[enter.unwrap()])) {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                if !self.active[i] || self.rows[i][c] <= self.tol {
                    continue;
                }
                let ratio = self.rhs[i].clone() / self.rows[i][c].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            // dual unbounded below cannot happen for a feasible primal with b >= 0
            let Some((r, ratio)) = leave else { return true };
            degenerate = if ratio.is_zero() { degenerate + 1 } else { 0 };
            self.pivot(r, c);
        }
    }
}

fn solve<T: Field>(a: &[Vec<T>], b: &[T], c: &[T], tol: T) -> Result<(T, Vec<T>, usize)> {
    let m = a.len();
    let n = c.len();
    let width = m + n;
    let mut rows = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for i in 0..n {
        let s = if c[i].is_negative() { -T::one() } else { T::one() };
        let mut row = vec![T::zero(); width];
        for j in 0..m {
            row[j] = s.clone() * a[j][i].clone();
        }
        row[m + i] = T::one();
        rows.push(row);
        rhs.push(s.clone() * c[i].clone());
        signs.push(s);
    }
    let mut t = Tableau { rows, rhs, basis: (m..m + n).collect(), active: vec![true; n], tol, iterations: 0 };
    let cap = 50 * (width + 1);
    let mut phase1 = vec![T::zero(); width];
    phase1[m..].iter_mut().for_each(|v| *v = T::one());
    if !t.run(&phase1, width, cap) {
        return Err(Error::InvalidInput("simplex iteration cap reached".into()));
    }
    let infeas = (0..n)
        .filter(|&i| t.basis[i] >= m)
        .fold(T::zero(), |acc, i| acc + t.rhs[i].clone());
    let scale = c.iter().fold(T::one(), |acc, v| if v.abs() > acc { v.abs() } else { acc });
    if infeas > t.tol.clone() * scale {
        return Err(Error::UnboundedLp);
    }
    // drive zero-level artificials out of the basis; rows that cannot pivot are redundant
    for i in 0..n {
        if t.basis[i] < m {
            continue;
        }
        let best = (0..m).max_by(|&x, &y| t.rows[i][x].abs().partial_cmp(&t.rows[i][y].abs()).unwrap());
        match best {
            Some(j) if t.rows[i][j].abs() > t.tol => t.pivot(i, j),
            _ => t.active[i] = false,
        }
    }
    let mut cost = vec![T::zero(); width];
    cost[..m].clone_from_slice(b);
    if !t.run(&cost, m, cap) {
        return Err(Error::InvalidInput("simplex iteration cap reached".into()));
    }
    let value = (0..n)
        .filter(|&i| t.active[i])
        .fold(T::zero(), |acc, i| acc + cost[t.basis[i]].clone() * t.rhs[i].clone());
    // primal solution = simplex multipliers, read off the artificial columns
    let x = (0..n)
        .map(|i| {
            let y = (0..n)
                .filter(|&k| t.active[k])
                .fold(T::zero(), |acc, k| acc + cost[t.basis[k]].clone() * t.rows[k][m + i].clone());
            signs[i].clone() * y
        })
        .collect();
    Ok((value, x, t.iterations))
}

fn verified(a: &[Vec<f64>], b: &[f64], c: &[f64], value: f64, x: &[f64]) -> bool {
    let scale = 1.0 + value.abs();
    let obj: f64 = c.iter().zip(x).map(|(ci, xi)| ci * xi).sum();
    if !x.iter().all(|v| v.is_finite()) || (obj - value).abs() > VERIFY_TOL * scale {
        return false;
    }
    a.iter()
        .zip(b)
        .all(|(row, bi)| row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= bi + VERIFY_TOL * scale)
}

/// Maximize `c·x` subject to `A x <= b` (`b >= 0`, so `x = 0` is feasible).
/// Returns [`Error::UnboundedLp`] when the constraints do not bound the objective.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    if b.iter().any(|v| *v < 0.0) || a.iter().any(|r| r.len() != c.len()) || a.len() != b.len() {
        return Err(Error::InvalidInput("need b >= 0 and rows matching c".into()));
    }
    let float = solve(a, b, c, FLOAT_TOL);
    match float {
        Ok((value, x, iterations)) if verified(a, b, c, value, &x) => {
            return Ok(LpSolution { value, x, iterations, exact: false })
        }
        Err(Error::UnboundedLp) => {}
        _ => {}
    }
    let aq: Vec<Vec<Q>> = a.iter().map(|r| r.iter().map(|v| rational::from_f64(*v)).collect()).collect();
    let bq: Vec<Q> = b.iter().map(|v| rational::from_f64(*v)).collect();
    let cq: Vec<Q> = c.iter().map(|v| rational::from_f64(*v)).collect();
    let (value, x, iterations) = solve(&aq, &bq, &cq, Q::from_integer(0.into()))?;
    Ok(LpSolution {
        value: rational::to_f64(&value),
        x: x.iter().map(rational::to_f64).collect(),
        iterations,
        exact: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_constrained() {
        // max x + 2y, |x| <= 1, |y| <= 3
        let a = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let s = maximize(&a, &[1.0, 1.0, 3.0, 3.0], &[1.0, 2.0]).unwrap();
        assert!((s.value - 7.0).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9 && (s.x[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn negative_objective_and_unbounded() {
        let a = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
        let b = [2.0, 2.0];
        assert!(matches!(maximize(&a, &b, &[1.0, 0.0]), Err(Error::UnboundedLp)));
        let s = maximize(&a, &b, &[-1.0, -1.0]).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_objective_free_direction() {
        // y never constrained but carries no weight
        let a = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let s = maximize(&a, &[1.0, 1.0], &[3.0, 0.0]).unwrap();
        assert!((s.value - 3.0).abs() < 1e-9);
    }
}

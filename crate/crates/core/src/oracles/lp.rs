//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Problems are in standard form: minimize `c.x` subject to `A x = b`,
//! `x >= 0`. Infeasibility comes with a Farkas certificate `y` satisfying
//! `A^T y <= 0` and `b.y > 0`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub a: Vec<Vec<BigRational>>,
    pub b: Vec<BigRational>,
    pub c: Vec<BigRational>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { x: Vec<BigRational>, value: BigRational },
    Infeasible { certificate: Vec<BigRational> },
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let inv = self.rows[r][col].recip();
        for v in self.rows[r].iter_mut() {
            *v *= &inv;
        }
        self.rhs[r] *= &inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for k in 0..self.rows.len() {
            if k == r || self.rows[k][col].is_zero() {
                continue;
            }
            let f = self.rows[k][col].clone();
            for (v, p) in self.rows[k].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            self.rhs[k] -= &f * &pivot_rhs;
        }
        self.basis[r] = col;
    }

    fn reduced_costs(&self, cost: &[BigRational], allowed: usize) -> Vec<BigRational> {
        (0..allowed)
            .map(|j| {
                let mut d = cost[j].clone();
                for (k, &bj) in self.basis.iter().enumerate() {
                    if !cost[bj].is_zero() && !self.rows[k][j].is_zero() {
                        d -= &cost[bj] * &self.rows[k][j];
                    }
                }
                d
            })
            .collect()
    }

    /// Runs the simplex on columns `0..allowed`. Returns false if unbounded.
    fn optimize(&mut self, cost: &[BigRational], allowed: usize) -> bool {
        loop {
            let d = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..allowed).find(|&j| d[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for k in 0..self.rows.len() {
                let e = &self.rows[k][enter];
                if !e.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[k] / e;
                let better = match &leave {
                    None => true,
                    Some((lk, lr)) => ratio < *lr || (ratio == *lr && self.basis[k] < self.basis[*lk]),
                };
                if better {
                    leave = Some((k, ratio));
                }
            }
            match leave {
                Some((k, _)) => self.pivot(k, enter),
                None => return false,
            }
        }
    }
}

pub fn minimize(lp: &LinearProgram) -> LpResult {
    let m = lp.b.len();
    let n = lp.c.len();
    assert!(lp.a.len() == m && lp.a.iter().all(|row| row.len() == n), "shape mismatch");
    let zero = BigRational::zero();
    let one = BigRational::one();
    let sign: Vec<BigRational> = lp.b.iter().map(|v| if v.is_negative() { -one.clone() } else { one.clone() }).collect();
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: Vec<BigRational> = lp.a[i].iter().map(|v| v * &sign[i]).collect();
        row.extend((0..m).map(|k| if k == i { one.clone() } else { zero.clone() }));
        rows.push(row);
    }
    let rhs: Vec<BigRational> = lp.b.iter().zip(&sign).map(|(v, s)| v * s).collect();
    let mut t = Tableau { rows, rhs, basis: (n..n + m).collect() };

    let phase1: Vec<BigRational> = (0..n + m).map(|j| if j < n { zero.clone() } else { one.clone() }).collect();
    t.optimize(&phase1, n + m);
    let infeasibility: BigRational = t.basis.iter().zip(&t.rhs).filter(|(&j, _)| j >= n).map(|(_, v)| v.clone()).sum();
    if infeasibility.is_positive() {
        // Phase-one duals u = c_B B^-1; the artificial columns hold B^-1.
        let certificate = (0..m)
            .map(|i| {
                let u: BigRational = t
                    .basis
                    .iter()
                    .enumerate()
                    .filter(|(_, &j)| j >= n)
                    .map(|(k, _)| t.rows[k][n + i].clone())
                    .sum();
                u * &sign[i]
            })
            .collect();
        return LpResult::Infeasible { certificate };
    }

    // Drive zero-level artificials out, dropping rows that are redundant.
    let mut k = 0;
    while k < t.rows.len() {
        if t.basis[k] >= n {
            match (0..n).find(|&j| !t.rows[k][j].is_zero()) {
                Some(j) => t.pivot(k, j),
                None => {
                    t.rows.remove(k);
                    t.rhs.remove(k);
                    t.basis.remove(k);
                    continue;
                }
            }
        }
        k += 1;
    }

    let mut phase2 = lp.c.clone();
    phase2.extend((0..m).map(|_| zero.clone()));
    if !t.optimize(&phase2, n) {
        return LpResult::Unbounded;
    }
    let mut x = vec![zero.clone(); n];
    for (k, &j) in t.basis.iter().enumerate() {
        x[j] = t.rhs[k].clone();
    }
    let value = x.iter().zip(&lp.c).map(|(xi, ci)| xi * ci).sum();
    LpResult::Optimal { x, value }
}

pub fn maximize(lp: &LinearProgram) -> LpResult {
    let neg = LinearProgram { a: lp.a.clone(), b: lp.b.clone(), c: lp.c.iter().map(|v| -v).collect() };
    match minimize(&neg) {
        LpResult::Optimal { x, value } => LpResult::Optimal { x, value: -value },
        other => other,
    }
}

/// Checks `A^T y <= 0` and `b.y > 0`.
pub fn is_farkas_certificate(lp: &LinearProgram, y: &[BigRational]) -> bool {
    let n = lp.c.len();
    let by: BigRational = lp.b.iter().zip(y).map(|(b, y)| b * y).sum();
    by.is_positive()
        && (0..n).all(|j| {
            let s: BigRational = lp.a.iter().zip(y).map(|(row, y)| &row[j] * y).sum();
            !s.is_positive()
        })
}

//! Linear program over 2x2x2x2 boxes showing that no-signaling plus the PR
//! condition leaves no room for biased marginals.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::lp::{self, LinearProgram, LpResult};
use super::{OracleError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PrConstraint {
    /// `x xor y = a b` with probability one for every input pair.
    Exact,
    /// Winning probability under uniform inputs at least this value.
    AtLeast(BigRational),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalLp {
    pub pr: PrConstraint,
    pub no_signaling: bool,
}

impl Default for MarginalLp {
    fn default() -> Self {
        Self { pr: PrConstraint::Exact, no_signaling: true }
    }
}

fn var(x: usize, y: usize, a: usize, b: usize) -> usize {
    ((x * 2 + y) * 2 + a) * 2 + b
}

/// Minimum and maximum of `P(X=0 | A=0, B=0)` over the described set.
pub fn marginal_extremes(spec: &MarginalLp) -> Result<(BigRational, BigRational)> {
    let zero = BigRational::zero();
    let one = BigRational::one();
    let slack = matches!(spec.pr, PrConstraint::AtLeast(_));
    let cols = 16 + slack as usize;
    let mut a: Vec<Vec<BigRational>> = Vec::new();
    let mut b: Vec<BigRational> = Vec::new();
    let mut row = |entries: &[(usize, i64)], rhs: BigRational, a: &mut Vec<Vec<BigRational>>| {
        let mut r = vec![zero.clone(); cols];
        for &(j, v) in entries {
            r[j] += BigRational::from_integer(v.into());
        }
        a.push(r);
        b.push(rhs);
    };
    for ia in 0..2 {
        for ib in 0..2 {
            let cells: Vec<(usize, i64)> = (0..4).map(|k| (var(k / 2, k % 2, ia, ib), 1)).collect();
            row(&cells, one.clone(), &mut a);
        }
    }
    match &spec.pr {
        PrConstraint::Exact => {
            for x in 0..2 {
                for y in 0..2 {
                    for ia in 0..2 {
                        for ib in 0..2 {
                            if x ^ y != ia & ib {
                                row(&[(var(x, y, ia, ib), 1)], zero.clone(), &mut a);
                            }
                        }
                    }
                }
            }
        }
        PrConstraint::AtLeast(r) => {
            let mut wins: Vec<(usize, i64)> = Vec::new();
            for x in 0..2 {
                for y in 0..2 {
                    for ia in 0..2 {
                        for ib in 0..2 {
                            if x ^ y == ia & ib {
                                wins.push((var(x, y, ia, ib), 1));
                            }
                        }
                    }
                }
            }
            wins.push((16, -1));
            row(&wins, r * BigRational::from_integer(4.into()), &mut a);
        }
    }
    if spec.no_signaling {
        // Alice's marginal P(x=0|a,b) cannot depend on b, Bob's on a.
        for ia in 0..2 {
            row(
                &[(var(0, 0, ia, 0), 1), (var(0, 1, ia, 0), 1), (var(0, 0, ia, 1), -1), (var(0, 1, ia, 1), -1)],
                zero.clone(),
                &mut a,
            );
        }
        for ib in 0..2 {
            row(
                &[(var(0, 0, 0, ib), 1), (var(1, 0, 0, ib), 1), (var(0, 0, 1, ib), -1), (var(1, 0, 1, ib), -1)],
                zero.clone(),
                &mut a,
            );
        }
    }
    let mut c = vec![zero.clone(); cols];
    c[var(0, 0, 0, 0)] = one.clone();
    c[var(0, 1, 0, 0)] = one.clone();
    let program = LinearProgram { a, b, c };
    let value = |r: LpResult| match r {
        LpResult::Optimal { value, .. } => Ok(value),
        other => Err(OracleError::Lp(format!("marginal LP not solvable: {other:?}"))),
    };
    Ok((value(lp::minimize(&program))?, value(lp::maximize(&program))?))
}

/// Extremes of `P(X=0 | A=0, B=0)` for exact PR boxes that do not signal.
pub fn ns_pr_marginal_extremes() -> (BigRational, BigRational) {
    marginal_extremes(&MarginalLp::default()).expect("the PR box itself is feasible")
}

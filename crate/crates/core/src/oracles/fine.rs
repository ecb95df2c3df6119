//! Membership in the local polytope: is a conditional distribution a convex
//! mixture of deterministic strategy pairs?

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::lp::{self, LinearProgram, LpResult};
use super::{ratio, OracleError, Result};

pub const MAX_VERTICES: u128 = 10_000;

/// `P(x, y | a, b)` with exact entries, stored flat in `(x, y, a, b)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub qa: usize,
    pub qb: usize,
    pub qx: usize,
    pub qy: usize,
    p: Vec<BigRational>,
    /// Input pairs the distribution is defined on; `None` means all.
    pub promise: Option<Vec<Vec<bool>>>,
}

impl Distribution {
    pub fn from_fn(
        (qa, qb, qx, qy): (usize, usize, usize, usize),
        f: impl Fn(usize, usize, usize, usize) -> BigRational,
    ) -> Self {
        let mut p = Vec::with_capacity(qa * qb * qx * qy);
        for x in 0..qx {
            for y in 0..qy {
                for a in 0..qa {
                    for b in 0..qb {
                        p.push(f(x, y, a, b));
                    }
                }
            }
        }
        Self { qa, qb, qx, qy, p, promise: None }
    }

    /// Uniform over the two output pairs with `x xor y = a b`.
    pub fn pr_box() -> Self {
        Self::from_fn((2, 2, 2, 2), |x, y, a, b| {
            if x ^ y == a & b {
                BigRational::new(1.into(), 2.into())
            } else {
                BigRational::zero()
            }
        })
    }

    pub fn independent_fair_coins() -> Self {
        Self::from_fn((2, 2, 2, 2), |_, _, _, _| BigRational::new(1.into(), 4.into()))
    }

    /// The deterministic box `x = fa[a]`, `y = fb[b]`.
    pub fn vertex(qx: usize, qy: usize, fa: &[usize], fb: &[usize]) -> Self {
        Self::from_fn((fa.len(), fb.len(), qx, qy), |x, y, a, b| {
            if fa[a] == x && fb[b] == y {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
    }

    fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.qy + y) * self.qa + a) * self.qb + b
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> &BigRational {
        &self.p[self.index(x, y, a, b)]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.p
    }

    fn in_promise(&self, a: usize, b: usize) -> bool {
        self.promise.as_ref().is_none_or(|m| m[a][b])
    }

    pub fn validate(&self) -> Result<()> {
        if self.qa == 0 || self.qb == 0 || self.qx == 0 || self.qy == 0 {
            return Err(OracleError::BadDistribution("empty alphabet".into()));
        }
        if let Some(mask) = &self.promise {
            if mask.len() != self.qa || mask.iter().any(|row| row.len() != self.qb) {
                return Err(OracleError::BadDistribution("promise mask shape".into()));
            }
        }
        if let Some(v) = self.p.iter().find(|v| v.is_negative()) {
            return Err(OracleError::BadDistribution(format!("negative entry {v}")));
        }
        for a in 0..self.qa {
            for b in 0..self.qb {
                if !self.in_promise(a, b) {
                    continue;
                }
                let mut total = BigRational::zero();
                for x in 0..self.qx {
                    for y in 0..self.qy {
                        total += self.get(x, y, a, b);
                    }
                }
                if !total.is_one() {
                    return Err(OracleError::BadDistribution(format!(
                        "P(.|a={a},b={b}) sums to {}",
                        ratio::to_string(&total)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DistributionFile =
            serde_json::from_str(text).map_err(|e| OracleError::BadDistribution(e.to_string()))?;
        let qx = file.p.len();
        let qy = file.p.first().map_or(0, |v| v.len());
        let qa = file.p.first().and_then(|v| v.first()).map_or(0, |v| v.len());
        let qb = file.p.first().and_then(|v| v.first()).and_then(|v| v.first()).map_or(0, |v| v.len());
        let mut p = Vec::with_capacity(qx * qy * qa * qb);
        for by_y in &file.p {
            if by_y.len() != qy {
                return Err(OracleError::BadDistribution("ragged table".into()));
            }
            for by_a in by_y {
                if by_a.len() != qa {
                    return Err(OracleError::BadDistribution("ragged table".into()));
                }
                for by_b in by_a {
                    if by_b.len() != qb {
                        return Err(OracleError::BadDistribution("ragged table".into()));
                    }
                    for s in by_b {
                        p.push(ratio::parse(s).map_err(OracleError::BadDistribution)?);
                    }
                }
            }
        }
        let d = Self { qa, qb, qx, qy, p, promise: file.promise };
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        let p = (0..self.qx)
            .map(|x| {
                (0..self.qy)
                    .map(|y| {
                        (0..self.qa)
                            .map(|a| (0..self.qb).map(|b| ratio::to_string(self.get(x, y, a, b))).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let file = DistributionFile { p, promise: self.promise.clone() };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }
}

/// JSON layout: `p[x][y][a][b]` as `"p/q"` strings.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionFile {
    p: Vec<Vec<Vec<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    promise: Option<Vec<Vec<bool>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedVertex {
    pub fa: Vec<usize>,
    pub fb: Vec<usize>,
    #[serde(with = "ratio")]
    pub weight: BigRational,
}

/// A Bell-type functional `sum c[x][y][a][b] p(x,y|a,b)`; coefficients are
/// in the distribution's flat order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "ratio::vec")]
    pub coefficients: Vec<BigRational>,
    #[serde(with = "ratio")]
    pub value_on_dist: BigRational,
    #[serde(with = "ratio")]
    pub vertex_max: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Membership {
    Local { weights: Vec<WeightedVertex> },
    NonLocal { certificate: Certificate },
}

/// Deterministic tables `f: [0, qin) -> [0, qout)` in lexicographic order.
fn tables(qin: usize, qout: usize) -> Vec<Vec<usize>> {
    let count = qout.pow(qin as u32);
    (0..count)
        .map(|mut k| {
            let mut t = vec![0; qin];
            for slot in t.iter_mut().rev() {
                *slot = k % qout;
                k /= qout;
            }
            t
        })
        .collect()
}

pub fn fine_membership(dist: &Distribution) -> Result<Membership> {
    dist.validate()?;
    if dist.promise.as_ref().is_some_and(|m| m.iter().flatten().any(|&v| !v)) {
        return Err(OracleError::BadDistribution("membership needs the full input grid".into()));
    }
    let count = (dist.qx as u128).pow(dist.qa as u32) * (dist.qy as u128).pow(dist.qb as u32);
    if count > MAX_VERTICES {
        return Err(OracleError::TooManyVertices(count));
    }
    let fas = tables(dist.qa, dist.qx);
    let fbs = tables(dist.qb, dist.qy);
    let vertices: Vec<(&Vec<usize>, &Vec<usize>)> = fas.iter().flat_map(|fa| fbs.iter().map(move |fb| (fa, fb))).collect();
    let entries = dist.p.len();
    let zero = BigRational::zero();
    let one = BigRational::one();

    // Row per entry plus normalization; column per vertex.
    let mut a = vec![vec![zero.clone(); vertices.len()]; entries + 1];
    for (v, (fa, fb)) in vertices.iter().enumerate() {
        for ia in 0..dist.qa {
            for ib in 0..dist.qb {
                a[dist.index(fa[ia], fb[ib], ia, ib)][v] = one.clone();
            }
        }
        a[entries][v] = one.clone();
    }
    let mut b = dist.p.clone();
    b.push(one.clone());
    let program = LinearProgram { a, b, c: vec![zero.clone(); vertices.len()] };
    match lp::minimize(&program) {
        LpResult::Optimal { x, .. } => {
            let weights = vertices
                .iter()
                .zip(x)
                .filter(|(_, w)| !w.is_zero())
                .map(|((fa, fb), weight)| WeightedVertex { fa: (*fa).clone(), fb: (*fb).clone(), weight })
                .collect();
            Ok(Membership::Local { weights })
        }
        LpResult::Infeasible { certificate } => {
            let coefficients: Vec<BigRational> = certificate[..entries].to_vec();
            let value_on_dist = functional(&coefficients, &dist.p);
            let vertex_max = vertices
                .iter()
                .map(|(fa, fb)| functional(&coefficients, &Distribution::vertex(dist.qx, dist.qy, fa, fb).p))
                .max()
                .expect("at least one vertex");
            debug_assert!(value_on_dist > vertex_max);
            Ok(Membership::NonLocal { certificate: Certificate { coefficients, value_on_dist, vertex_max } })
        }
        LpResult::Unbounded => Err(OracleError::Lp("feasibility problem reported unbounded".into())),
    }
}

pub fn functional(coefficients: &[BigRational], p: &[BigRational]) -> BigRational {
    coefficients.iter().zip(p).map(|(c, v)| c * v).sum()
}

/// Entry-wise mixture of the weighted vertices.
pub fn mixture(qx: usize, qy: usize, weights: &[WeightedVertex]) -> Option<Distribution> {
    let first = weights.first()?;
    let mut out = Distribution::from_fn((first.fa.len(), first.fb.len(), qx, qy), |_, _, _, _| BigRational::zero());
    for w in weights {
        let v = Distribution::vertex(qx, qy, &w.fa, &w.fb);
        for (o, e) in out.p.iter_mut().zip(&v.p) {
            *o += e * &w.weight;
        }
    }
    Some(out)
}

/// Scales rational coefficients to coprime integers.
pub fn integer_coefficients(c: &[BigRational]) -> Vec<BigInt> {
    use num_integer::Integer;
    let lcm = c.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let scaled: Vec<BigInt> = c.iter().map(|r| (r * BigRational::from(lcm.clone())).to_integer()).collect();
    let g = scaled.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g.is_zero() {
        scaled
    } else {
        scaled.into_iter().map(|v| v / &g).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pr_box_is_nonlocal() {
        let d = Distribution::pr_box();
        match fine_membership(&d).unwrap() {
            Membership::NonLocal { certificate } => {
                assert!(certificate.value_on_dist > certificate.vertex_max);
                // Recheck the maximum by brute force over all 16 vertices.
                let mut best = None;
                for fa in tables(2, 2) {
                    for fb in tables(2, 2) {
                        let v = functional(&certificate.coefficients, Distribution::vertex(2, 2, &fa, &fb).entries());
                        best = Some(best.map_or(v.clone(), |b: BigRational| b.max(v)));
                    }
                }
                assert_eq!(best.unwrap(), certificate.vertex_max);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_vertex_is_local_with_itself() {
        for fa in tables(2, 2) {
            for fb in tables(2, 2) {
                let d = Distribution::vertex(2, 2, &fa, &fb);
                match fine_membership(&d).unwrap() {
                    Membership::Local { weights } => {
                        assert_eq!(weights.len(), 1);
                        assert_eq!((&weights[0].fa, &weights[0].fb), (&fa, &fb));
                        assert!(weights[0].weight.is_one());
                    }
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn fair_coins_reconstruct() {
        let d = Distribution::independent_fair_coins();
        match fine_membership(&d).unwrap() {
            Membership::Local { weights } => {
                assert_eq!(mixture(2, 2, &weights).unwrap(), d);
                assert_eq!(weights.iter().map(|w| w.weight.clone()).sum::<BigRational>(), BigRational::one());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let d = Distribution::pr_box();
        assert_eq!(Distribution::from_json(&d.to_json()).unwrap(), d);
        let bad = d.to_json().replacen("\"1/2\"", "\"2/3\"", 1);
        assert!(matches!(Distribution::from_json(&bad), Err(OracleError::BadDistribution(_))));
        let neg = d.to_json().replacen("\"0/1\"", "\"-1/2\"", 1);
        assert!(Distribution::from_json(&neg).is_err());
        assert!(Distribution::from_json("{\"p\": [], \"extra\": 1}").is_err());
    }

    #[test]
    fn integer_scaling() {
        let c = vec![BigRational::new(1.into(), 2.into()), BigRational::new((-3).into(), 4.into())];
        assert_eq!(integer_coefficients(&c), vec![BigInt::from(2), BigInt::from(-3)]);
    }

    #[test]
    fn vertex_count_is_bounded() {
        let big = Distribution::from_fn((7, 7, 2, 2), |x, y, _, _| {
            if x == 0 && y == 0 {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        });
        assert!(matches!(fine_membership(&big), Err(OracleError::TooManyVertices(_))));
    }
}

//! Exact ground truth: classical game values, local-polytope membership and
//! the no-signaling marginal LP. Everything here is rational arithmetic.

pub mod fine;
pub mod lp;
pub mod marginals;
pub mod value;

use thiserror::Error;

pub use fine::{fine_membership, Distribution, Membership};
pub use marginals::{marginal_extremes, ns_pr_marginal_extremes, MarginalLp, PrConstraint};
pub use value::{game_value_exact, GameValueResult};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("search space too large for {game} with {reps} repetition(s)")]
    SearchSpaceExceeded { game: String, reps: usize },
    #[error("malformed distribution: {0}")]
    BadDistribution(String),
    #[error("too many deterministic vertices ({0} > 10^4)")]
    TooManyVertices(u128),
    #[error("{0}")]
    Lp(String),
    #[error(transparent)]
    Games(#[from] crate::games::GamesError),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Serde adapters writing rationals as `"p/q"` strings.
pub mod ratio {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Zero;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn to_string(r: &BigRational) -> String {
        format!("{}/{}", r.numer(), r.denom())
    }

    pub fn parse(s: &str) -> Result<BigRational, String> {
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: BigInt = p.parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let q: BigInt = q.parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if q.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        Ok(BigRational::new(p, q))
    }

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&super::to_string(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter().map(|s| super::parse(s).map_err(de::Error::custom)).collect()
        }
    }

}

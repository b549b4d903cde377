//! `"p/q"` text encoding of exact rationals used by every file format.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serializer};

use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational `{0}`")]
pub struct ParseRationalError(pub String);

/// Always emits both parts, e.g. `"3/1"`, `"-1/2"`.
pub fn to_pq(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Accepts `"p/q"` or a bare integer `"p"`.
pub fn parse_pq(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| err())?;
    let d: BigInt = d.parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(n, d))
}

pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Serde adapter: `#[serde(with = "fillvol::rational::pq")]`.
pub mod pq {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_pq(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_pq(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for row-major matrices of `"p/q"` strings.
pub mod pq_rows {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(rows: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for r in rows {
            let strs: Vec<String> = r.iter().map(to_pq).collect();
            seq.serialize_element(&strs)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        rows.iter().map(|r| r.iter().map(|x| parse_pq(x).map_err(serde::de::Error::custom)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats() {
        assert_eq!(to_pq(&rational(2, 4)), "1/2");
        assert_eq!(to_pq(&int(3)), "3/1");
        assert_eq!(to_pq(&rational(-1, 4)), "-1/4");
        assert_eq!(parse_pq(" 7 ").unwrap(), int(7));
        assert!(parse_pq("1/0").is_err());
        assert!(parse_pq("a/b").is_err());
    }

    proptest! {
        #[test]
        fn pq_roundtrip(n in -10_000i64..10_000, d in 1i64..10_000) {
            let q = rational(n, d);
            prop_assert_eq!(parse_pq(&to_pq(&q)).unwrap(), q);
        }
    }
}

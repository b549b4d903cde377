//! Subrings of ℚ: the integers, the rationals, and localizations ℤ_S.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::matrix::DenseMatrix;
use crate::{Int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RingError {
    #[error("NotPrime({0})")]
    NotPrime(u64),
    #[error("NotScalable: denominator prime {0} is not a unit in the ring")]
    NotScalable(BigInt),
    #[error("bad ring spec `{0}` (expected z, q or zs:<p>,<p>,...)")]
    BadSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CoefficientRing {
    Integers,
    Rationals,
    /// ℤ_S for a finite, sorted set of distinct primes.
    Localization(Vec<u64>),
}

/// Deterministic trial division.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factors of `|n|`, ascending and without multiplicity.
pub fn prime_support(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::from(2);
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            out.push(d.clone());
            while (&n % &d).is_zero() {
                n /= &d;
            }
        }
        d += 1;
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

pub fn make_localization(primes: &[u64]) -> Result<CoefficientRing, RingError> {
    if let Some(&bad) = primes.iter().find(|&&p| !is_prime(p)) {
        return Err(RingError::NotPrime(bad));
    }
    let mut ps = primes.to_vec();
    ps.sort_unstable();
    ps.dedup();
    Ok(CoefficientRing::Localization(ps))
}

impl CoefficientRing {
    /// Primes that are inverted; `None` for ℚ, where every prime is.
    pub fn inverted_primes(&self) -> Option<&[u64]> {
        match self {
            CoefficientRing::Integers => Some(&[]),
            CoefficientRing::Rationals => None,
            CoefficientRing::Localization(ps) => Some(ps),
        }
    }

    /// `true` iff the positive integer `m` is a unit of the ring.
    pub fn is_unit_integer(&self, m: &BigInt) -> bool {
        if m.is_zero() {
            return false;
        }
        match self.inverted_primes() {
            None => true,
            Some(ps) => {
                let mut rest = m.abs();
                for &p in ps {
                    let p = BigInt::from(p);
                    while (&rest % &p).is_zero() {
                        rest /= &p;
                    }
                }
                rest.is_one()
            }
        }
    }

    pub fn contains(&self, q: &Rational) -> bool {
        self.is_unit_integer(q.denom())
    }

    /// The absolute-value norm.
    pub fn norm(&self, q: &Rational) -> Rational {
        q.abs()
    }

    /// Positive integer units of the ring up to `bound`, ascending.
    ///
    /// For ℚ every positive integer is a unit; for ℤ only 1.
    pub fn units_up_to(&self, bound: u64) -> Vec<u64> {
        match self.inverted_primes() {
            None => (1..=bound).collect(),
            Some(ps) => {
                let mut out = vec![];
                if bound >= 1 {
                    out.push(1u64);
                }
                let mut frontier = vec![1u64];
                while let Some(m) = frontier.pop() {
                    for &p in ps {
                        // only extend by primes >= the largest factor to avoid repeats
                        if m > 1 && p < largest_factor_in(m, ps) {
                            continue;
                        }
                        if let Some(next) = m.checked_mul(p) {
                            if next <= bound {
                                out.push(next);
                                frontier.push(next);
                            }
                        }
                    }
                }
                out.sort_unstable();
                out
            }
        }
    }

    /// Least positive unit `m` with `m·M` integral.
    pub fn scaling_denominator(&self, m: &DenseMatrix<Rational>) -> Result<Int, RingError> {
        let mut l = BigInt::one();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                l = l.lcm(m[(i, j)].denom());
            }
        }
        if self.is_unit_integer(&l) {
            return Ok(l);
        }
        let ps = self.inverted_primes().unwrap_or(&[]);
        let bad = prime_support(&l)
            .into_iter()
            .find(|p| p.to_u64().is_none_or(|p| !ps.contains(&p)))
            .expect("a non-unit has a non-inverted prime factor");
        Err(RingError::NotScalable(bad))
    }
}

fn largest_factor_in(m: u64, ps: &[u64]) -> u64 {
    ps.iter().copied().filter(|&p| m.is_multiple_of(p)).max().unwrap_or(1)
}

impl fmt::Display for CoefficientRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientRing::Integers => write!(f, "z"),
            CoefficientRing::Rationals => write!(f, "q"),
            CoefficientRing::Localization(ps) => {
                let s: Vec<String> = ps.iter().map(u64::to_string).collect();
                write!(f, "zs:{}", s.join(","))
            }
        }
    }
}

impl FromStr for CoefficientRing {
    type Err = RingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "z" | "Z" => return Ok(CoefficientRing::Integers),
            "q" | "Q" => return Ok(CoefficientRing::Rationals),
            _ => {}
        }
        let Some(list) = t.strip_prefix("zs:").or_else(|| t.strip_prefix("ZS:")) else {
            return Err(RingError::BadSpec(s.to_string()));
        };
        let primes = if list.trim().is_empty() {
            vec![]
        } else {
            list.split(',')
                .map(|p| p.trim().parse::<u64>().map_err(|_| RingError::BadSpec(s.to_string())))
                .collect::<Result<Vec<_>, _>>()?
        };
        make_localization(&primes)
    }
}

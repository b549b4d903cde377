//! Scalar traits the linear-algebra and optimisation code is generic over.
//!
//! Everything that pivots or compares values needs a total order and exact
//! arithmetic, so `Field` requires `Ord`. That admits `Ratio<BigInt>` and
//! `Ratio<i64>` and rules out the IEEE float types.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// An ordered field with exact arithmetic.
pub trait Field: Clone + Debug + Display + Ord + Num + Signed + FromPrimitive + Send + Sync + 'static {
    /// Embeds a machine integer.
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("every i64 embeds in an exact field")
    }

    /// `true` when the value has denominator one.
    fn is_integral(&self) -> bool;
}

impl<T> Field for Ratio<T>
where
    T: Clone + Debug + Display + Integer + Signed + FromPrimitive + Send + Sync + 'static,
    Ratio<T>: FromPrimitive,
{
    fn is_integral(&self) -> bool {
        self.is_integer()
    }
}

/// A Euclidean domain of integers (Smith/Hermite reductions run over these).
pub trait IntLike:
    Clone + Debug + Display + Ord + Integer + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("every i64 embeds")
    }
}

impl IntLike for i64 {}
impl IntLike for i128 {}
impl IntLike for BigInt {}

/// Extended gcd: returns `(g, s, t)` with `s*a + t*b = g` and `g >= 0`.
pub fn ext_gcd<T: IntLike>(a: &T, b: &T) -> (T, T, T) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Lifts an integer into its fraction field.
pub fn int_to_ratio<T: IntLike>(v: &T) -> Ratio<T> {
    Ratio::from_integer(v.clone())
}

/// Sum of absolute values.
pub fn l1_norm<T: Signed + Zero + Clone>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + x.abs())
}

/// `true` iff every entry is zero.
pub fn all_zero<T: Zero>(v: &[T]) -> bool {
    v.iter().all(Zero::is_zero)
}

/// The multiplicative identity, spelled out for generic call sites.
pub fn one<T: One>() -> T {
    T::one()
}

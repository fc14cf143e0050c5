//! Integer coefficients for the sparse kernels.
//!
//! Elimination runs on `i128` first and restarts on `BigInt` if any step overflows, so
//! the common case stays allocation-free while results remain exact.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Raised by a checked `i128` operation that would overflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Overflow;

pub(crate) trait Coeff: Clone + Debug + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn from_i64(x: i64) -> Self;
    fn from_big(x: &BigInt) -> Result<Self, Overflow>;
    fn to_big(&self) -> BigInt;
    fn is_zero(&self) -> bool;
    /// `+1` or `-1`.
    fn is_unit(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn add(&self, o: &Self) -> Result<Self, Overflow>;
    fn mul(&self, o: &Self) -> Result<Self, Overflow>;
    fn neg(&self) -> Result<Self, Overflow>;
    /// Floor division.
    fn div_floor(&self, o: &Self) -> Result<Self, Overflow>;
    fn divides(&self, o: &Self) -> bool;
    /// `(g, x, y)` with `g = gcd(a, b) > 0` and `x*a + y*b = g`.
    fn ext_gcd(a: &Self, b: &Self) -> Result<(Self, Self, Self), Overflow>;
}

impl Coeff for i128 {
    fn zero() -> Self {
        0
    }
    fn from_i64(x: i64) -> Self {
        x as i128
    }
    fn from_big(x: &BigInt) -> Result<Self, Overflow> {
        x.to_i128().ok_or(Overflow)
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_unit(&self) -> bool {
        *self == 1 || *self == -1
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn add(&self, o: &Self) -> Result<Self, Overflow> {
        self.checked_add(*o).ok_or(Overflow)
    }
    fn mul(&self, o: &Self) -> Result<Self, Overflow> {
        self.checked_mul(*o).ok_or(Overflow)
    }
    fn neg(&self) -> Result<Self, Overflow> {
        self.checked_neg().ok_or(Overflow)
    }
    fn div_floor(&self, o: &Self) -> Result<Self, Overflow> {
        if *self == i128::MIN || *o == i128::MIN {
            return Err(Overflow);
        }
        Ok(Integer::div_floor(self, o))
    }
    fn divides(&self, o: &Self) -> bool {
        *self != 0 && o % self == 0
    }
    fn ext_gcd(a: &Self, b: &Self) -> Result<(Self, Self, Self), Overflow> {
        if *a == i128::MIN || *b == i128::MIN {
            return Err(Overflow);
        }
        let e = a.extended_gcd(b);
        if e.gcd < 0 {
            Ok((-e.gcd, -e.x, -e.y))
        } else {
            Ok((e.gcd, e.x, e.y))
        }
    }
}

impl Coeff for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(x: i64) -> Self {
        BigInt::from(x)
    }
    fn from_big(x: &BigInt) -> Result<Self, Overflow> {
        Ok(x.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_unit(&self) -> bool {
        self.abs().is_one()
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self + o)
    }
    fn mul(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self * o)
    }
    fn neg(&self) -> Result<Self, Overflow> {
        Ok(-self)
    }
    fn div_floor(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(Integer::div_floor(self, o))
    }
    fn divides(&self, o: &Self) -> bool {
        !Zero::is_zero(self) && Zero::is_zero(&(o % self))
    }
    fn ext_gcd(a: &Self, b: &Self) -> Result<(Self, Self, Self), Overflow> {
        let e = a.extended_gcd(b);
        if Signed::is_negative(&e.gcd) {
            Ok((-e.gcd, -e.x, -e.y))
        } else {
            Ok((e.gcd, e.x, e.y))
        }
    }
}

/// Runs `f` on `i128`, then on `BigInt` if it overflowed.
pub(crate) fn with_fallback<T, E>(
    f: impl Fn(Precision) -> Result<Result<T, Overflow>, E>,
) -> Result<T, E> {
    match f(Precision::Machine)? {
        Ok(v) => Ok(v),
        Err(Overflow) => match f(Precision::Big)? {
            Ok(v) => Ok(v),
            Err(Overflow) => unreachable!("BigInt arithmetic does not overflow"),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Precision {
    Machine,
    Big,
}

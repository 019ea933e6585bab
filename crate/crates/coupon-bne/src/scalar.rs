//! Scalar abstraction, extended reals and bracketing root finders.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{BneError, Result};

/// Floating-point type the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Requested tolerance, widened to a few ulps for narrow types.
    fn tol(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(requested).max(floor)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Absolute tolerance used when validating probabilities.
pub const PROB_TOL: f64 = 1e-12;

/// A real number extended with both infinities.
///
/// Finite payloads are never NaN, so the ordering is total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended<T> {
    NegInf,
    Finite(T),
    PosInf,
}

impl<T: Scalar> Extended<T> {
    /// Wraps a float, mapping infinities onto the sentinel variants.
    ///
    /// # Panics
    /// Panics on NaN.
    pub fn from_float(x: T) -> Self {
        assert!(!x.is_nan(), "NaN cannot be represented as an extended real");
        if x == T::infinity() {
            Extended::PosInf
        } else if x == T::neg_infinity() {
            Extended::NegInf
        } else {
            Extended::Finite(x)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            Extended::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Lossy conversion to a float with IEEE infinities.
    pub fn to_float(self) -> T {
        match self {
            Extended::NegInf => T::neg_infinity(),
            Extended::Finite(x) => x,
            Extended::PosInf => T::infinity(),
        }
    }

    /// Natural log of a nonnegative extended real (`ln 0 = -inf`).
    pub fn ln(self) -> Self {
        match self {
            Extended::PosInf => Extended::PosInf,
            Extended::Finite(x) if x > T::zero() => Extended::Finite(x.ln()),
            _ => Extended::NegInf,
        }
    }

    /// `a + k * self` with the convention `k * inf = inf` for `k > 0`.
    pub fn scale_add(self, a: T, k: T) -> Self {
        match self {
            Extended::Finite(x) => Extended::Finite(a + k * x),
            Extended::PosInf if k > T::zero() => Extended::PosInf,
            Extended::NegInf if k > T::zero() => Extended::NegInf,
            Extended::PosInf if k < T::zero() => Extended::NegInf,
            Extended::NegInf if k < T::zero() => Extended::PosInf,
            _ => Extended::Finite(a),
        }
    }

    pub fn to_f64(self) -> Extended<f64> {
        match self {
            Extended::NegInf => Extended::NegInf,
            Extended::Finite(x) => Extended::Finite(x.as_f64()),
            Extended::PosInf => Extended::PosInf,
        }
    }
}

impl<T: Scalar> Eq for Extended<T> {}

impl<T: Scalar> PartialOrd for Extended<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Extended<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        use Extended::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.partial_cmp(b).expect("finite payloads are never NaN"),
        }
    }
}

impl<T: Scalar> fmt::Display for Extended<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInf => f.write_str("-inf"),
            Extended::PosInf => f.write_str("inf"),
            Extended::Finite(x) => fmt::Display::fmt(x, f),
        }
    }
}

impl Serialize for Extended<f64> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(x) => s.serialize_f64(*x),
            Extended::PosInf => s.serialize_str("inf"),
            Extended::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended<f64> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Extended::Finite(x)),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(Extended::PosInf),
                "-inf" => Ok(Extended::NegInf),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}

/// Finds a root of `f` on `[lo, hi]` by bisection, given a sign change.
///
/// Iterates until the bracket stops shrinking, so the result is accurate to
/// the last representable digit of `T`.
pub fn bisect<T: Scalar, F: Fn(T) -> T>(f: F, lo: T, hi: T, what: &str) -> Result<T> {
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || (flo > T::zero()) == (fhi > T::zero()) {
        return Err(BneError::NoRoot { what: what.to_string() });
    }
    let lo_positive = flo > T::zero();
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) / T::lit(2.0))
}

/// Smallest `x` in `[lo, hi]` with `f(x) >= target` for nondecreasing `f`.
///
/// Returns `None` when `f(hi) < target`.
pub fn first_reaching<T: Scalar, F: Fn(T) -> T>(f: F, target: T, lo: T, hi: T) -> Option<T> {
    if f(hi) < target {
        return None;
    }
    if f(lo) >= target {
        return Some(lo);
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Largest `x` in `[lo, hi]` with `f(x) <= target` for nondecreasing `f`.
pub fn last_not_exceeding<T: Scalar, F: Fn(T) -> T>(f: F, target: T, lo: T, hi: T) -> Option<T> {
    if f(lo) > target {
        return None;
    }
    if f(hi) <= target {
        return Some(hi);
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

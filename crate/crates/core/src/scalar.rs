//! Numeric backends shared by the geometric predicates.
//!
//! Two backends are supported: `f64` for solver and benchmark runs, and
//! exact big-rational arithmetic (`Rat`) for reduction instances and
//! correctness oracles, whose coordinate separations shrink polynomially in
//! the instance size and fall below `f64` resolution at moderate `n`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Ring operations plus a total order, the full interface the predicates
/// need. Every predicate in this crate stays inside this interface, so a
/// predicate evaluated on `Rat` inputs is exact.
pub trait Scalar: Clone + PartialEq + fmt::Debug {
    fn from_i64(v: i64) -> Self;
    fn cmp_s(&self, other: &Self) -> Ordering;
    fn add_s(&self, other: &Self) -> Self;
    fn sub_s(&self, other: &Self) -> Self;
    fn mul_s(&self, other: &Self) -> Self;
    fn neg_s(&self) -> Self;
    /// Largest integer `k` with `k <= self`. Used for unit-grid bucketing.
    fn floor_i64(&self) -> i64;
    fn is_finite_s(&self) -> bool;
    fn to_f64_lossy(&self) -> f64;

    fn zero() -> Self {
        Self::from_i64(0)
    }
    fn one() -> Self {
        Self::from_i64(1)
    }
    /// Exactly 1/2. Representable in both backends (0.5 is dyadic).
    fn half() -> Self;

    fn le_s(&self, other: &Self) -> bool {
        self.cmp_s(other) != Ordering::Greater
    }
    fn lt_s(&self, other: &Self) -> bool {
        self.cmp_s(other) == Ordering::Less
    }
    fn sq(&self) -> Self {
        self.mul_s(self)
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn cmp_s(&self, other: &Self) -> Ordering {
        self.partial_cmp(other)
            .expect("non-finite value in geometric predicate")
    }
    fn add_s(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_s(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_s(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_s(&self) -> Self {
        -self
    }
    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }
    fn is_finite_s(&self) -> bool {
        self.is_finite()
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
    fn half() -> Self {
        0.5
    }
}

/// Arbitrary-precision rational. Thin wrapper so `Scalar` and the
/// `"num/den"` text form live next to each other.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(pub BigRational);

impl Rat {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
    pub fn int(v: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(v)))
    }
    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|e| format!("bad numerator: {e}"))?;
                let d: BigInt = d.trim().parse().map_err(|e| format!("bad denominator: {e}"))?;
                if d.is_zero() {
                    return Err("zero denominator".into());
                }
                Ok(Rat(BigRational::new(n, d)))
            }
            None => {
                let n: BigInt = s.parse().map_err(|e| format!("bad integer: {e}"))?;
                Ok(Rat(BigRational::from_integer(n)))
            }
        }
    }
}

impl Scalar for Rat {
    fn from_i64(v: i64) -> Self {
        Rat::int(v)
    }
    fn cmp_s(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
    fn add_s(&self, other: &Self) -> Self {
        Rat(&self.0 + &other.0)
    }
    fn sub_s(&self, other: &Self) -> Self {
        Rat(&self.0 - &other.0)
    }
    fn mul_s(&self, other: &Self) -> Self {
        Rat(&self.0 * &other.0)
    }
    fn neg_s(&self) -> Self {
        Rat(-self.0.clone())
    }
    fn floor_i64(&self) -> i64 {
        self.0
            .floor()
            .to_integer()
            .to_i64()
            .expect("rational floor out of i64 range")
    }
    fn is_finite_s(&self) -> bool {
        true
    }
    fn to_f64_lossy(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
    fn half() -> Self {
        Rat::new(1, 2)
    }
}

/// `f64` extended with symbolic infinity tiers.
///
/// The solvers encode "no witness exists" and "a sufficiently small/large
/// shifted coordinate" as order symbols instead of finite magic constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtVal {
    NegInf,
    Fin(f64),
    PosInf,
}

impl ExtVal {
    pub fn neg(self) -> ExtVal {
        match self {
            ExtVal::NegInf => ExtVal::PosInf,
            ExtVal::Fin(v) => ExtVal::Fin(-v),
            ExtVal::PosInf => ExtVal::NegInf,
        }
    }
    pub fn max(self, other: ExtVal) -> ExtVal {
        if self.cmp_e(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }
    pub fn min(self, other: ExtVal) -> ExtVal {
        if self.cmp_e(&other) == Ordering::Greater {
            other
        } else {
            self
        }
    }
    pub fn cmp_e(&self, other: &ExtVal) -> Ordering {
        use ExtVal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Fin(a), Fin(b)) => a.partial_cmp(b).expect("non-finite ExtVal payload"),
        }
    }
    pub fn lt(&self, other: &ExtVal) -> bool {
        self.cmp_e(other) == Ordering::Less
    }
    pub fn ge(&self, other: &ExtVal) -> bool {
        self.cmp_e(other) != Ordering::Less
    }
}

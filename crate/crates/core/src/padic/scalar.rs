//! Capped-relative-precision elements of `Q_p`.
//!
//! A nonzero element is stored as `p^val * unit` with `unit` a p-adic unit known
//! modulo `p^(abs - val)`. An inexact zero only records `abs`, the power of `p`
//! it is known to be divisible by. Exact zero is a separate state so that
//! structure constants and padding coordinates never cost precision.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of base-p digits carried relative to the valuation.
pub const DEFAULT_PRECISION: u32 = 64;

const EXACT: i64 = i64::MAX / 4;

pub(crate) fn pow_p(p: u64, k: i64) -> BigInt {
    debug_assert!(k >= 0);
    num_traits::pow(BigInt::from(p), k as usize)
}

/// p-adic valuation of a nonzero integer.
pub(crate) fn int_valuation(p: u64, n: &BigInt) -> (i64, BigInt) {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut n = n.clone();
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return (v, n);
        }
        n = q;
        v += 1;
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Padic {
    p: u64,
    prec: u32,
    val: i64,
    unit: BigInt,
    abs: i64,
}

impl Padic {
    pub fn zero(p: u64, prec: u32) -> Self {
        Padic { p, prec, val: EXACT, unit: BigInt::zero(), abs: EXACT }
    }

    /// The zero known only modulo `p^abs`.
    pub fn zero_mod(p: u64, prec: u32, abs: i64) -> Self {
        Padic { p, prec, val: abs, unit: BigInt::zero(), abs }
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_int(p, prec, 1)
    }

    pub fn from_int(p: u64, prec: u32, n: impl Into<BigInt>) -> Self {
        let n: BigInt = n.into();
        if n.is_zero() {
            return Self::zero(p, prec);
        }
        let (v, u) = int_valuation(p, &n);
        normalize(p, prec, v, u, v + prec as i64)
    }

    /// `n / p^k` for an integer `n`.
    pub fn from_scaled_int(p: u64, prec: u32, n: impl Into<BigInt>, k: i64) -> Self {
        Self::from_int(p, prec, n).shift(-k)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision_cap(&self) -> u32 {
        self.prec
    }

    pub fn is_exact_zero(&self) -> bool {
        self.abs == EXACT
    }

    /// True when the element is zero modulo its absolute precision.
    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// Valuation, or `None` for an element that is zero at its precision.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Lower bound on the valuation: exact for nonzero elements.
    pub fn valuation_bound(&self) -> i64 {
        self.val
    }

    /// The element is known modulo `p^absolute_precision()`.
    pub fn absolute_precision(&self) -> i64 {
        self.abs
    }

    pub fn relative_precision(&self) -> i64 {
        if self.is_zero() {
            0
        } else {
            self.abs - self.val
        }
    }

    pub fn unit_part(&self) -> &BigInt {
        &self.unit
    }

    /// Multiplication by `p^k`, exact.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_exact_zero() {
            return self.clone();
        }
        Padic { val: self.val + k, abs: self.abs + k, ..self.clone() }
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let m = pow_p(self.p, self.abs - self.val);
        Padic { unit: (&m - &self.unit).mod_floor(&m), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        if self.is_exact_zero() {
            return other.clone();
        }
        if other.is_exact_zero() {
            return self.clone();
        }
        let vmin = self.val.min(other.val);
        let abs = self.abs.min(other.abs);
        let mut s = BigInt::zero();
        for x in [self, other] {
            if !x.is_zero() && x.val < abs {
                s += &x.unit * pow_p(x.p, x.val - vmin);
            }
        }
        normalize(self.p, self.prec.min(other.prec), vmin, s, abs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        let prec = self.prec.min(other.prec);
        if self.is_exact_zero() || other.is_exact_zero() {
            return Self::zero(self.p, prec);
        }
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero_mod(self.p, prec, self.abs + other.abs),
            (true, false) => Self::zero_mod(self.p, prec, self.abs + other.val),
            (false, true) => Self::zero_mod(self.p, prec, other.abs + self.val),
            (false, false) => {
                let rel = (self.abs - self.val).min(other.abs - other.val);
                let val = self.val + other.val;
                normalize(self.p, prec, val, &self.unit * &other.unit, val + rel)
            }
        }
    }

    pub fn mul_int(&self, n: i64) -> Self {
        self.mul(&Self::from_int(self.p, self.prec, n))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let rel = self.abs - self.val;
        let m = pow_p(self.p, rel);
        let g = self.unit.extended_gcd(&m);
        debug_assert!(g.gcd.is_one());
        let val = -self.val;
        Ok(normalize(self.p, self.prec, val, g.x, val + rel))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// Lower the absolute precision to at most `abs`.
    pub fn truncate(&self, abs: i64) -> Self {
        if abs >= self.abs {
            return self.clone();
        }
        if self.is_zero() || self.val >= abs {
            return Self::zero_mod(self.p, self.prec, abs);
        }
        normalize(self.p, self.prec, self.val, self.unit.clone(), abs)
    }

    /// Fractional part as `(numerator, k)` meaning `numerator / p^k`, with
    /// `0 <= numerator < p^k` and `k = max(0, -valuation)`.
    pub fn fractional_part(&self) -> Result<(BigInt, i64)> {
        if self.is_zero() || self.val >= 0 {
            if self.abs < 0 {
                return Err(Error::PrecisionExhausted(format!(
                    "fractional part needs absolute precision >= 0, have {}",
                    self.abs
                )));
            }
            return Ok((BigInt::zero(), 0));
        }
        if self.abs < 0 {
            return Err(Error::PrecisionExhausted(format!(
                "fractional part needs absolute precision >= 0, have {}",
                self.abs
            )));
        }
        let k = -self.val;
        let m = pow_p(self.p, k);
        Ok((self.unit.mod_floor(&m), k))
    }

    /// Fractional part as a float in `[0, 1)`.
    pub fn fractional_f64(&self) -> Result<f64> {
        let (n, k) = self.fractional_part()?;
        if k == 0 {
            return Ok(0.0);
        }
        // n / p^k with n < p^k; ratio of big integers computed in f64 after scaling
        let den = pow_p(self.p, k);
        Ok(ratio_f64(&n, &den))
    }

    /// `self * p^scale mod p^modulus_exp` as a machine integer.
    ///
    /// Requires `self * p^scale` to be integral and known modulo `p^modulus_exp`.
    pub fn scaled_residue(&self, scale: i64, modulus_exp: i64) -> Result<u128> {
        if self.is_exact_zero() {
            return Ok(0);
        }
        let x = self.shift(scale);
        if x.abs < modulus_exp {
            return Err(Error::PrecisionExhausted(format!(
                "need residue mod p^{modulus_exp}, element known mod p^{}",
                x.abs
            )));
        }
        if x.is_zero() || x.val >= modulus_exp {
            return Ok(0);
        }
        if x.val < 0 {
            return Err(Error::Precondition(format!(
                "scaled element has negative valuation {}",
                x.val
            )));
        }
        let m = pow_p(self.p, modulus_exp);
        let r = (&x.unit * pow_p(self.p, x.val)).mod_floor(&m);
        r.to_u128()
            .ok_or_else(|| Error::Precondition("residue does not fit in 128 bits".into()))
    }

    /// Rational approximation `self ≈ n / p^k` valid modulo `p^abs`; mostly for display.
    pub fn to_rational_parts(&self) -> (BigInt, i64) {
        if self.is_zero() {
            return (BigInt::zero(), 0);
        }
        if self.val >= 0 {
            (&self.unit * pow_p(self.p, self.val), 0)
        } else {
            (self.unit.clone(), -self.val)
        }
    }

    /// Base-p digits of the unit part, least significant first.
    pub fn unit_digits(&self) -> Vec<u64> {
        let mut out = Vec::new();
        if self.is_zero() {
            return out;
        }
        let pb = BigInt::from(self.p);
        let mut u = self.unit.clone();
        for _ in 0..(self.abs - self.val) {
            let (q, r) = u.div_rem(&pb);
            out.push(r.to_u64().unwrap_or(0));
            u = q;
        }
        out
    }

    /// Equality of the two elements modulo the smaller of their precisions.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

pub(crate) fn ratio_f64(n: &BigInt, d: &BigInt) -> f64 {
    let shift = d.bits().saturating_sub(60);
    let ns: BigInt = n >> shift;
    let ds: BigInt = d >> shift;
    ns.to_f64().unwrap_or(0.0) / ds.to_f64().unwrap_or(1.0)
}

fn normalize(p: u64, prec: u32, mut val: i64, s: BigInt, mut abs: i64) -> Padic {
    if abs <= val {
        return Padic::zero_mod(p, prec, abs);
    }
    let m = pow_p(p, abs - val);
    let mut s = s.mod_floor(&m);
    if s.is_zero() {
        return Padic::zero_mod(p, prec, abs);
    }
    let pb = BigInt::from(p);
    loop {
        let (q, r) = s.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        s = q;
        val += 1;
    }
    if abs - val > prec as i64 {
        abs = val + prec as i64;
        s = s.mod_floor(&pow_p(p, prec as i64));
    }
    Padic { p, prec, val, unit: s, abs }
}

impl fmt::Debug for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact_zero() {
            return write!(f, "0");
        }
        if self.is_zero() {
            return write!(f, "O({}^{})", self.p, self.abs);
        }
        write!(f, "{}^{}*{} + O({}^{})", self.p, self.val, self.unit, self.p, self.abs)
    }
}

/// Fixture form: decimal unit, valuation and absolute precision.
#[derive(Serialize, Deserialize)]
struct PadicRepr {
    p: u64,
    valuation: Option<i64>,
    unit: String,
    precision: Option<i64>,
    cap: u32,
}

impl Serialize for Padic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PadicRepr {
            p: self.p,
            valuation: if self.is_exact_zero() { None } else { Some(self.val) },
            unit: self.unit.to_string(),
            precision: if self.is_exact_zero() { None } else { Some(self.abs) },
            cap: self.prec,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Padic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PadicRepr::deserialize(d)?;
        let unit: BigInt = r.unit.parse().map_err(serde::de::Error::custom)?;
        if unit.sign() == Sign::Minus {
            return Err(serde::de::Error::custom("unit must be nonnegative"));
        }
        match (r.valuation, r.precision) {
            (None, _) => Ok(Padic::zero(r.p, r.cap)),
            (Some(v), Some(a)) => Ok(normalize(r.p, r.cap, v, unit, a)),
            (Some(_), None) => Err(serde::de::Error::custom("missing precision")),
        }
    }
}

//! Arbitrary-precision phases `alpha` with an explicit bit-precision contract.
//!
//! A [`PhaseReal`] is a rational centre value plus a flag saying whether the
//! centre *is* the number (exact inputs such as `a/q` or a finite decimal) or
//! an approximation with `|alpha - centre| <= 2^-bits` (irrationals).

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Headroom above `k * log2(n)` demanded by the precision contract.
pub const GUARD_BITS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseReal {
    value: BigRational,
    exact: bool,
    bits: u32,
}

/// Bits needed to evaluate `frac(n^k alpha)` for all `n <= n_max`.
pub fn required_bits(k: u32, n_max: u64) -> u32 {
    let log2n = (n_max.max(2) as f64).log2();
    (k as f64 * log2n).ceil() as u32 + GUARD_BITS
}

impl PhaseReal {
    pub fn zero() -> Self {
        Self::from_rational(BigRational::zero(), GUARD_BITS)
    }

    /// Exact rational `num/den`.
    pub fn from_ratio(num: i64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_rational(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            GUARD_BITS,
        )
    }

    /// Exact rational with a nominal precision used when it has to be
    /// materialized as a fixed-point number.
    pub fn from_rational(value: BigRational, bits: u32) -> Self {
        Self {
            value,
            exact: true,
            bits,
        }
    }

    /// Approximate value `mantissa / 2^bits`, accurate to `2^-bits`.
    pub fn from_fixed(mantissa: BigInt, bits: u32) -> Self {
        let den = BigInt::one() << bits as usize;
        Self {
            value: BigRational::new(mantissa, den),
            exact: false,
            bits,
        }
    }

    /// The exact binary value of a double.
    pub fn from_f64_exact(v: f64) -> Result<Self> {
        let value = BigRational::from_float(v)
            .ok_or_else(|| Error::Argument(format!("non-finite alpha {v}")))?;
        Ok(Self::from_rational(value, GUARD_BITS))
    }

    /// `frac(sqrt(n))` truncated to `bits` fractional bits.
    pub fn sqrt_frac(n: u64, bits: u32) -> Self {
        let scaled = BigUint::from(n) << (2 * bits as usize);
        let root = scaled.sqrt();
        let int_part = BigUint::from(crate::arith::isqrt(n)) << bits as usize;
        Self::from_fixed(BigInt::from(root - int_part), bits)
    }

    /// Fractional part of the golden ratio, `(sqrt(5) - 1) / 2`.
    pub fn golden_frac(bits: u32) -> Self {
        let root = (BigUint::from(5u32) << (2 * bits as usize)).sqrt();
        let m = (root - (BigUint::one() << bits as usize)) >> 1usize;
        Self::from_fixed(BigInt::from(m), bits)
    }

    /// Parse `a/q` (exact fraction) or a decimal such as `0.125`, `-3e-4`.
    /// Decimals are taken at their exact decimal value.
    pub fn parse(s: &str, bits: u32) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Argument(format!("cannot parse alpha {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Self::from_rational(BigRational::new(n, d), bits));
        }
        let (mant, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (neg, mant) = match mant.strip_prefix('-') {
            Some(m) => (true, m),
            None => (false, mant.strip_prefix('+').unwrap_or(mant)),
        };
        let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
            .map_err(|_| bad())?;
        if neg {
            num = -num;
        }
        let scale = exp - frac_part.len() as i64;
        let ten = BigInt::from(10u32);
        let value = if scale >= 0 {
            BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Self::from_rational(value, bits))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// The rational centre value.
    pub fn value(&self) -> &BigRational {
        &self.value
    }

    /// Upper bound on `|alpha - value()|`.
    pub fn radius(&self) -> BigRational {
        if self.exact {
            BigRational::zero()
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << self.bits as usize)
        }
    }

    pub fn with_bits(mut self, bits: u32) -> Self {
        if self.exact {
            self.bits = bits;
        } else if bits < self.bits {
            // Rounding down the stored precision keeps the value but widens the radius.
            self.bits = bits;
        }
        self
    }

    /// Whether the contract `bits >= k log2(n_max) + 64` holds. Exact values
    /// can always be materialized at any precision.
    pub fn meets_contract(&self, k: u32, n_max: u64) -> bool {
        self.exact || self.bits >= required_bits(k, n_max)
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }

    /// Reduce into `[0, 1)`.
    pub fn fract(&self) -> Self {
        let fl = self.value.floor();
        Self {
            value: &self.value - fl,
            ..self.clone()
        }
    }

    /// `1 - alpha`.
    pub fn one_minus(&self) -> Self {
        Self {
            value: BigRational::one() - &self.value,
            ..self.clone()
        }
    }

    /// `alpha + delta` for an exact rational shift.
    pub fn shifted(&self, delta: &BigRational) -> Self {
        Self {
            value: &self.value + delta,
            ..self.clone()
        }
    }

    /// `factor * alpha` for a positive integer factor; an approximate value
    /// loses `log2(factor)` bits of absolute precision.
    pub fn scaled(&self, factor: &BigInt) -> Self {
        let lost = if self.exact { 0 } else { factor.bits() as u32 };
        Self {
            value: &self.value * BigRational::from_integer(factor.clone()),
            exact: self.exact,
            bits: self.bits.saturating_sub(lost),
        }
    }

    /// `alpha - a/q`, keeping exactness and precision.
    pub fn minus_ratio(&self, a: &BigInt, q: u64) -> Self {
        self.shifted(&-BigRational::new(a.clone(), BigInt::from(q)))
    }

    /// Fractional part as a fixed-point integer with `frac_bits` bits,
    /// rounded to nearest. Returns the integer and the rounding error bound
    /// in units of `2^-frac_bits` (0 or 1/2).
    pub(crate) fn fixed_fraction(&self, frac_bits: u32) -> (BigUint, bool) {
        let f = self.fract();
        let scaled = f.value * BigRational::from_integer(BigInt::one() << frac_bits as usize);
        let exact = scaled.is_integer();
        let rounded = (scaled + BigRational::new(BigInt::one(), BigInt::from(2))).floor();
        let mut m = rounded.to_integer().to_biguint().unwrap_or_default();
        // Rounding may carry to exactly 1.0.
        if m.bits() > frac_bits as u64 {
            m = BigUint::zero();
        }
        (m, exact)
    }

    /// If exact with denominator below `limit`, return `(a mod q, q)`.
    pub(crate) fn small_rational(&self, limit: u64) -> Option<(u64, u64)> {
        if !self.exact {
            return None;
        }
        let q = self.value.denom().to_u64()?;
        if q >= limit {
            return None;
        }
        let a = self.value.numer().mod_floor(&BigInt::from(q)).to_u64()?;
        Some((a, q))
    }
}

impl Default for PhaseReal {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Display for PhaseReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact && self.value.denom().bits() <= 64 {
            if self.value.is_integer() {
                write!(f, "{}", self.value.numer())
            } else {
                write!(f, "{}/{}", self.value.numer(), self.value.denom())
            }
        } else {
            write!(f, "{:.17e}", self.to_f64())
        }
    }
}

/// Correctly-scaled conversion of a big rational to the nearest-ish double.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 2f64.powi(53) && d < 2f64.powi(53) {
            return n / d;
        }
    }
    // Scale so the quotient carries ~64 significant bits.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = 64 - (nb - db);
    let (num, den) = if shift >= 0 {
        (r.numer().abs() << shift as usize, r.denom().clone())
    } else {
        (r.numer().abs(), r.denom() << (-shift) as usize)
    };
    let q = (num / den).to_f64().unwrap_or(f64::INFINITY);
    let v = q * 2f64.powi(-(shift as i32));
    if r.numer().sign() == Sign::Minus {
        -v
    } else {
        v
    }
}

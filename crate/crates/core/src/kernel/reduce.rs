//! Argument reduction for `frac(n^k alpha)`.
//!
//! Exact rationals with a word-sized denominator take the modular route
//! `(a n^k mod q) / q`. Everything else is materialized as a fixed-point
//! fraction of `64 * W` bits; `n^k` is formed exactly in limbs and only the low
//! `W` limbs of the product are kept, which is the fractional part.

use num_complex::Complex64;

use crate::arith::{mul_mod, pow_mod};
use crate::error::{Error, Result};
use crate::phase::{required_bits, PhaseReal};

const MAX_LIMBS: usize = 16;
const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Debug)]
enum Repr {
    Modular { a: u64, q: u64 },
    Fixed { limbs: [u64; MAX_LIMBS], width: usize },
}

/// Prepared evaluator for `n -> frac(n^k alpha)` over `n <= n_max`.
#[derive(Clone, Debug)]
pub struct PhaseReducer {
    repr: Repr,
    k: u32,
    max_error: f64,
}

impl PhaseReducer {
    pub fn new(alpha: &PhaseReal, k: u32, n_max: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("k must be positive".into()));
        }
        if let Some((a, q)) = alpha.small_rational(1 << 63) {
            return Ok(Self {
                repr: Repr::Modular { a, q },
                k,
                max_error: TWO_POW_M53,
            });
        }
        let need = required_bits(k, n_max);
        if !alpha.meets_contract(k, n_max) {
            return Err(Error::Precision(format!(
                "alpha carries {} bits; n^k alpha with n <= {n_max}, k = {k} needs {need}",
                alpha.bits()
            )));
        }
        let frac_bits = need.max(alpha.bits());
        let width = frac_bits.div_ceil(64) as usize;
        let power_limbs = ((k as f64) * (n_max.max(2) as f64).log2() / 64.0).floor() as usize + 1;
        if width > MAX_LIMBS || power_limbs > MAX_LIMBS {
            return Err(Error::Resource(format!(
                "phase needs {width} limbs (limit {MAX_LIMBS})"
            )));
        }
        let (m, exact_repr) = alpha.fixed_fraction(64 * width as u32);
        let mut limbs = [0u64; MAX_LIMBS];
        for (i, d) in m.to_u64_digits().into_iter().enumerate() {
            limbs[i] = d;
        }
        // |error| <= n^k (radius + rounding of the fixed-point copy) + output rounding.
        let log2_nk = k as f64 * (n_max.max(1) as f64).log2();
        let repr_err = if exact_repr { 0.0 } else { 2f64.powf(-(64.0 * width as f64) - 1.0) };
        let radius = if alpha.is_exact() { 0.0 } else { 2f64.powi(-(alpha.bits() as i32)) };
        let max_error = 2f64.powf(log2_nk) * (radius + repr_err) + TWO_POW_M53;
        Ok(Self {
            repr: Repr::Fixed { limbs, width },
            k,
            max_error,
        })
    }

    /// Bound on `|frac(n^k alpha) - self.frac(n)|` (mod 1).
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `frac(n^k alpha)` in `[0, 1)`.
    #[inline]
    pub fn frac(&self, n: u64) -> f64 {
        match &self.repr {
            Repr::Modular { a, q } => {
                let r = mul_mod(*a, pow_mod(n % q, self.k as u64, *q), *q);
                r as f64 / *q as f64
            }
            Repr::Fixed { limbs, width } => fixed_frac(limbs, *width, n, self.k),
        }
    }

    /// `e(n^k alpha) = exp(2 pi i n^k alpha)`.
    #[inline]
    pub fn unit(&self, n: u64) -> Complex64 {
        unit_from_frac(self.frac(n))
    }
}

/// `exp(2 pi i t)` for `t` in `[0, 1)`. The nearest quarter turn is split
/// off exactly, so multiples of `1/4` give exact units.
#[inline]
pub fn unit_from_frac(t: f64) -> Complex64 {
    let u = 4.0 * t;
    let j = u.round();
    let r = (u - j) * 0.25;
    let (s, c) = (std::f64::consts::TAU * r).sin_cos();
    match (j as i64).rem_euclid(4) {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

#[inline]
fn fixed_frac(frac: &[u64; MAX_LIMBS], width: usize, n: u64, k: u32) -> f64 {
    // n^k, exactly, little-endian limbs.
    let mut pow = [0u64; MAX_LIMBS];
    pow[0] = n;
    let mut plen = 1usize;
    for _ in 1..k {
        let mut carry = 0u128;
        for limb in pow.iter_mut().take(plen) {
            let t = *limb as u128 * n as u128 + carry;
            *limb = t as u64;
            carry = t >> 64;
        }
        if carry != 0 {
            pow[plen] = carry as u64;
            plen += 1;
        }
    }
    // Low `width` limbs of pow * frac.
    let mut out = [0u64; MAX_LIMBS];
    for (j, &pj) in pow.iter().enumerate().take(plen.min(width)) {
        if pj == 0 {
            continue;
        }
        let mut carry = 0u128;
        for l in 0..(width - j) {
            let t = pj as u128 * frac[l] as u128 + out[j + l] as u128 + carry;
            out[j + l] = t as u64;
            carry = t >> 64;
        }
    }
    (out[width - 1] >> 11) as f64 * TWO_POW_M53
}

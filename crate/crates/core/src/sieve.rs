//! Segmented sieve for `mu(n)`, `Lambda(n)` and `tau(n)` on `(x, x + y]`.
//!
//! Only primes up to `sqrt(x + y)` are needed. Each entry keeps a running
//! cofactor; whatever survives division by all small primes is 1 or a single
//! prime above the square root.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{isqrt, primes_up_to};
use crate::error::{Error, Result};

bitflags::bitflags! {
    /// Which arrays [`sieve_segment`] should populate.
    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub struct Fields: u8 {
        const MU = 1;
        const LAMBDA = 2;
        const TAU = 4;
    }
}

/// Arithmetic functions over `(x, x + y]`; entry `i` belongs to `n = x + 1 + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArithSegment {
    pub x: u64,
    pub y: u64,
    pub mu: Option<Vec<i8>>,
    pub lambda_vals: Option<Vec<f64>>,
    pub tau: Option<Vec<u32>>,
}

impl ArithSegment {
    pub fn n_at(&self, i: usize) -> u64 {
        self.x + 1 + i as u64
    }

    pub fn mu_at(&self, n: u64) -> Option<i8> {
        self.index(n).and_then(|i| self.mu.as_ref().map(|m| m[i]))
    }

    pub fn tau_at(&self, n: u64) -> Option<u32> {
        self.index(n).and_then(|i| self.tau.as_ref().map(|t| t[i]))
    }

    pub fn lambda_at(&self, n: u64) -> Option<f64> {
        self.index(n).and_then(|i| self.lambda_vals.as_ref().map(|l| l[i]))
    }

    fn index(&self, n: u64) -> Option<usize> {
        (n > self.x && n <= self.x + self.y).then(|| (n - self.x - 1) as usize)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SieveConfig {
    /// Entries processed per work unit.
    pub segment_size: usize,
    /// Largest `y` accepted in one call.
    pub max_entries: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            segment_size: 1 << 20,
            max_entries: 1 << 28,
        }
    }
}

/// Largest sieving prime bound we are willing to materialize.
const MAX_PRIME_BOUND: u64 = 100_000_000;

fn prime_cache(limit: u64) -> Arc<Vec<u64>> {
    static CACHE: Mutex<Option<(u64, Arc<Vec<u64>>)>> = Mutex::new(None);
    let mut guard = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((have, primes)) = guard.as_ref() {
        if *have >= limit {
            return Arc::clone(primes);
        }
    }
    let bound = limit.max(1 << 16);
    let primes = Arc::new(primes_up_to(bound));
    *guard = Some((bound, Arc::clone(&primes)));
    primes
}

pub fn sieve_segment(x: u64, y: u64, want: Fields) -> Result<ArithSegment> {
    sieve_segment_with(x, y, want, &SieveConfig::default())
}

pub fn sieve_segment_with(x: u64, y: u64, want: Fields, config: &SieveConfig) -> Result<ArithSegment> {
    if y == 0 {
        return Err(Error::Argument("segment length must be at least 1".into()));
    }
    if y > config.max_entries {
        return Err(Error::Resource(format!(
            "segment of {y} entries exceeds the limit of {}; stream sub-segments",
            config.max_entries
        )));
    }
    let hi = x
        .checked_add(y)
        .filter(|&h| h <= 1 << 63)
        .ok_or_else(|| Error::Resource("x + y exceeds 2^63".into()))?;
    let root = isqrt(hi);
    if root > MAX_PRIME_BOUND {
        return Err(Error::Resource(format!("sqrt(x + y) = {root} beyond sieving range")));
    }
    let all_primes = prime_cache(root);
    let primes = &all_primes[..all_primes.partition_point(|&p| p <= root)];

    let seg = config.segment_size.max(1) as u64;
    let chunks = y.div_ceil(seg);
    let parts: Vec<Part> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = x + 1 + c * seg;
            let end = (start + seg - 1).min(hi);
            sieve_block(start, end, primes, want)
        })
        .collect();

    let mut out = ArithSegment {
        x,
        y,
        mu: want.contains(Fields::MU).then(|| Vec::with_capacity(y as usize)),
        lambda_vals: want.contains(Fields::LAMBDA).then(|| Vec::with_capacity(y as usize)),
        tau: want.contains(Fields::TAU).then(|| Vec::with_capacity(y as usize)),
    };
    for p in parts {
        if let Some(v) = out.mu.as_mut() {
            v.extend(p.mu);
        }
        if let Some(v) = out.lambda_vals.as_mut() {
            v.extend(p.lambda);
        }
        if let Some(v) = out.tau.as_mut() {
            v.extend(p.tau);
        }
    }
    Ok(out)
}

struct Part {
    mu: Vec<i8>,
    lambda: Vec<f64>,
    tau: Vec<u32>,
}

fn sieve_block(start: u64, end: u64, primes: &[u64], want: Fields) -> Part {
    let len = (end - start + 1) as usize;
    let mut rem: Vec<u64> = (start..=end).collect();
    let mut mu = vec![1i8; len];
    let mut tau = vec![1u32; len];
    let mut distinct = vec![0u8; len];
    let mut last_prime = vec![0u64; len];

    for &p in primes {
        let first = start.div_ceil(p) * p;
        let mut m = first;
        while m <= end {
            let i = (m - start) as usize;
            let mut e = 0u32;
            while rem[i].is_multiple_of(p) {
                rem[i] /= p;
                e += 1;
            }
            tau[i] *= e + 1;
            mu[i] = if e > 1 { 0 } else { -mu[i] };
            distinct[i] = distinct[i].saturating_add(1);
            last_prime[i] = p;
            m += p;
        }
    }
    for i in 0..len {
        if rem[i] > 1 {
            tau[i] *= 2;
            mu[i] = -mu[i];
            distinct[i] = distinct[i].saturating_add(1);
            last_prime[i] = rem[i];
        }
    }
    let lambda = if want.contains(Fields::LAMBDA) {
        (0..len)
            .map(|i| if distinct[i] == 1 { (last_prime[i] as f64).ln() } else { 0.0 })
            .collect()
    } else {
        Vec::new()
    };
    Part {
        mu: if want.contains(Fields::MU) { mu } else { Vec::new() },
        lambda,
        tau: if want.contains(Fields::TAU) { tau } else { Vec::new() },
    }
}

/// `sum_{x < n <= x+y} tau(n)^c`, summed exactly in integers while it fits.
pub fn divisor_power_sum(x: u64, y: u64, c: u32) -> Result<f64> {
    if y == 0 {
        return Ok(0.0);
    }
    let seg = sieve_segment(x, y, Fields::TAU)?;
    let tau = seg.tau.unwrap_or_default();
    let exact = tau.iter().try_fold(0u128, |acc, &t| {
        (t as u128).checked_pow(c).and_then(|v| acc.checked_add(v))
    });
    Ok(match exact {
        Some(s) => s as f64,
        None => tau.iter().map(|&t| (t as f64).powi(c as i32)).sum(),
    })
}

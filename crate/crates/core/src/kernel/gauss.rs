//! Complete sums `S(q, a) = sum_{1 <= x <= q} e(a x^k / q)`, the weight
//! `w_k(q)`, and the major-arc comparison quantities built from them.

use std::collections::HashMap;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::accum::CompensatedSum;
use super::reduce::unit_from_frac;
use super::budget_terms;
use crate::arith::{divisors, factorize, gcd, mul_mod, pow_mod};
use crate::error::{Error, Result};
use crate::phase::{rational_to_f64, PhaseReal};
use crate::sieve::{sieve_segment, Fields};

/// Above this modulus `gauss_sum` splits `q` into prime powers.
pub const GAUSS_DIRECT_LIMIT: u64 = 100_000;

/// Largest modulus for which a root-of-unity table is allocated.
const ROOT_TABLE_LIMIT: u64 = 1 << 24;

fn reduce_unit(a: i64, q: u64) -> Result<u64> {
    let a = a.rem_euclid(q as i64) as u64;
    if gcd(a, q) != 1 {
        return Err(Error::Argument(format!("gcd({a}, {q}) != 1")));
    }
    Ok(a)
}

/// `S(q, a)` for `k >= 3` and `gcd(a, q) = 1`.
///
/// Each term uses the exact residue `a x^k mod q`. Moduli above
/// [`GAUSS_DIRECT_LIMIT`] are split via
/// `S(q1 q2, a) = S(q1, a q2^(k-1)) S(q2, a q1^(k-1))` for coprime `q1, q2`.
pub fn gauss_sum(q: u64, a: i64, k: u32) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::Argument("q must be positive".into()));
    }
    if k < 3 {
        return Err(Error::Argument("k must be at least 3".into()));
    }
    let a = reduce_unit(a, q)?;
    if q <= GAUSS_DIRECT_LIMIT {
        return Ok(gauss_direct(q, a, k));
    }
    gauss_by_prime_powers(q, a, k)
}

pub(crate) fn gauss_by_prime_powers(q: u64, a: u64, k: u32) -> Result<Complex64> {
    let mut result = Complex64::new(1.0, 0.0);
    for (p, e) in factorize(q) {
        let qi = p.pow(e);
        let rest = q / qi;
        if qi > budget_terms() {
            return Err(Error::Resource(format!("prime power {qi} too large")));
        }
        // a * rest^(k-1) mod qi
        let ai = mul_mod(a % qi, pow_mod(rest % qi, k as u64 - 1, qi), qi);
        result *= gauss_direct(qi, ai, k);
    }
    Ok(result)
}

fn gauss_direct(q: u64, a: u64, k: u32) -> Complex64 {
    let mut acc = CompensatedSum::new();
    if q <= ROOT_TABLE_LIMIT {
        let roots = root_table(q);
        for x in 1..=q {
            let r = mul_mod(a, pow_mod(x, k as u64, q), q);
            acc.add(roots[r as usize]);
        }
    } else {
        for x in 1..=q {
            let r = mul_mod(a, pow_mod(x, k as u64, q), q);
            acc.add(unit_from_frac(r as f64 / q as f64));
        }
    }
    acc.value()
}

fn root_table(q: u64) -> Vec<Complex64> {
    (0..q).map(|j| unit_from_frac(j as f64 / q as f64)).collect()
}

/// All `S(q, a)` for one `(q, k)`: the `k`-th power residues are tabulated once
/// with multiplicities, so each `a` costs one pass over the distinct residues.
#[derive(Clone, Debug)]
pub struct GaussSumTable {
    q: u64,
    residues: Vec<(u64, f64)>,
    roots: Vec<Complex64>,
}

impl GaussSumTable {
    pub fn new(q: u64, k: u32) -> Result<Self> {
        if q == 0 || q > ROOT_TABLE_LIMIT {
            return Err(Error::Argument(format!("modulus {q} outside table range")));
        }
        let mut counts = vec![0u64; q as usize];
        for x in 1..=q {
            counts[pow_mod(x, k as u64, q) as usize] += 1;
        }
        let residues = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(r, &c)| (r as u64, c as f64))
            .collect();
        Ok(Self {
            q,
            residues,
            roots: root_table(q),
        })
    }

    pub fn eval(&self, a: i64) -> Result<Complex64> {
        let a = reduce_unit(a, self.q)?;
        let mut acc = CompensatedSum::new();
        for &(r, c) in &self.residues {
            acc.add(self.roots[mul_mod(a, r, self.q) as usize] * c);
        }
        Ok(acc.value())
    }
}

/// The multiplicative weight `w_k(q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WkWeight {
    pub q: u64,
    pub k: u32,
    pub value: f64,
}

/// `w_k(q)`: on `p^e` with `e = k u + v`, `1 <= v <= k`, the value is
/// `k p^(-u - 1/2)` when `v = 1` and `p^(-u - 1)` otherwise.
pub fn w_k(q: u64, k: u32) -> Result<WkWeight> {
    if q == 0 {
        return Err(Error::Argument("q must be positive".into()));
    }
    if k < 3 {
        return Err(Error::Argument("k must be at least 3".into()));
    }
    let value = factorize(q)
        .into_iter()
        .map(|(p, e)| local_weight(p, e, k))
        .product();
    Ok(WkWeight { q, k, value })
}

fn local_weight(p: u64, e: u32, k: u32) -> f64 {
    let u = (e - 1) / k;
    let v = e - k * u;
    let p = p as f64;
    if v == 1 {
        k as f64 * p.powf(-(u as f64) - 0.5)
    } else {
        p.powi(-(u as i32) - 1)
    }
}

/// `w_k(q) y / (1 + y x^(k-1) |alpha - a/q|)`.
pub fn major_arc_term(q: u64, a: i64, alpha: &PhaseReal, x: f64, y: f64, k: u32) -> Result<f64> {
    let w = w_k(q, k)?.value;
    let lambda = alpha.minus_ratio(&a.into(), q);
    let lam = rational_to_f64(lambda.value()).abs();
    Ok(w * y / (1.0 + y * x.powi(k as i32 - 1) * lam))
}

/// `R(n, h) = ((n + h)^k - n^k) / h = sum_{j<k} C(k, j) n^j h^(k-1-j)`.
pub fn r_poly(n: u64, h: u64, k: u32) -> Result<u128> {
    if h == 0 {
        return Err(Error::Argument("h must be at least 1".into()));
    }
    let overflow = || Error::Resource(format!("R({n}, {h}) with k = {k} overflows 128 bits"));
    let mut total: u128 = 0;
    let mut binom: u128 = 1; // C(k, j)
    for j in 0..k {
        let term = binom
            .checked_mul((n as u128).checked_pow(j).ok_or_else(overflow)?)
            .and_then(|t| t.checked_mul((h as u128).checked_pow(k - 1 - j)?))
            .ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
        binom = binom * (k - j) as u128 / (j + 1) as u128;
    }
    Ok(total)
}

fn r_poly_mod(n: u64, h: u64, k: u32, q: u64) -> u64 {
    let mut total = 0u64;
    let mut binom: u128 = 1;
    for j in 0..k {
        let t = mul_mod(
            (binom % q as u128) as u64,
            mul_mod(pow_mod(n, j as u64, q), pow_mod(h, (k - 1 - j) as u64, q), q),
            q,
        );
        total = (total + t) % q;
        binom = binom * (k - j) as u128 / (j + 1) as u128;
    }
    total
}

fn weights_for_divisors(q: u64, k: u32) -> Result<HashMap<u64, f64>> {
    divisors(q)
        .into_iter()
        .map(|d| Ok((d, w_k(d, k)?.value)))
        .collect()
}

/// `sum_{N < n <= 2N} tau(n)^c w_k(q / (q, n^j))`, exactly term by term.
pub fn wk_sum_lemma37(n_scale: u64, q: u64, j: u32, k: u32, c: u32) -> Result<f64> {
    if j == 0 || j > k {
        return Err(Error::Argument(format!("need 1 <= j <= k, got j = {j}")));
    }
    if q == 0 {
        return Err(Error::Argument("q must be positive".into()));
    }
    if n_scale == 0 {
        return Ok(0.0);
    }
    let w = weights_for_divisors(q, k)?;
    let seg = sieve_segment(n_scale, n_scale, Fields::TAU)?;
    let tau = seg.tau.as_deref().unwrap_or(&[]);
    let mut total = 0.0;
    for (i, &t) in tau.iter().enumerate() {
        let n = n_scale + 1 + i as u64;
        let g = gcd(q, pow_mod(n, j as u64, q));
        total += (t as f64).powi(c as i32) * w[&(q / g)];
    }
    Ok(total)
}

/// `sum_{N < n <= 2N, (n,h)=1} tau(n)^c tau(n+h)^c w_k(q / (q, R(n,h)))`.
pub fn wk_shift_sum_lemma37(n_scale: u64, h: u64, q: u64, k: u32, c: u32) -> Result<f64> {
    if h == 0 || q == 0 {
        return Err(Error::Argument("h and q must be positive".into()));
    }
    if n_scale == 0 {
        return Ok(0.0);
    }
    let w = weights_for_divisors(q, k)?;
    let seg = sieve_segment(n_scale, n_scale + h, Fields::TAU)?;
    let tau = seg.tau.as_deref().unwrap_or(&[]);
    let mut total = 0.0;
    for i in 0..n_scale {
        let n = n_scale + 1 + i;
        if n.gcd(&h) != 1 {
            continue;
        }
        let g = gcd(q, r_poly_mod(n, h, k, q));
        let tn = tau[i as usize] as f64;
        let tnh = tau[(i + h) as usize] as f64;
        total += tn.powi(c as i32) * tnh.powi(c as i32) * w[&(q / g)];
    }
    Ok(total)
}

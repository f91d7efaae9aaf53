//! Exponential sums over short intervals.
//!
//! Every sum here runs over the integers `n` with `x < n <= x + y`, evaluates
//! `e(n^k alpha)` through [`PhaseReducer`], and accumulates with compensated
//! summation in fixed blocks (see [`accum`]).

pub mod accum;
pub mod gauss;
pub mod reduce;

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::PhaseReal;
use crate::sieve::ArithSegment;

pub use accum::{block_sum, CompensatedSum};
pub use gauss::{
    gauss_sum, major_arc_term, r_poly, w_k, wk_shift_sum_lemma37, wk_sum_lemma37, GaussSumTable,
    WkWeight,
};
pub use reduce::{unit_from_frac, PhaseReducer};

/// Default cap on the number of terms a single sum may touch.
pub const DEFAULT_BUDGET_TERMS: u64 = 1_000_000_000;

static BUDGET_TERMS: AtomicU64 = AtomicU64::new(DEFAULT_BUDGET_TERMS);

/// Current per-call term budget.
pub fn budget_terms() -> u64 {
    BUDGET_TERMS.load(Ordering::Relaxed)
}

/// Replace the per-call term budget for the whole process.
pub fn set_budget_terms(n: u64) {
    BUDGET_TERMS.store(n.max(1), Ordering::Relaxed);
}

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// The integers `first..=last` lying in a half-open real interval `(x, x+y]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub first: u64,
    pub last: u64,
}

impl Interval {
    /// Exact integer endpoints of `(x, x + y]` (no floating rounding of `x + y`).
    pub fn from_real(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return Err(Error::Argument(format!("interval ({x}, {x}+{y}] not admissible")));
        }
        let rx = BigRational::from_float(x).unwrap_or_else(BigRational::zero);
        let ry = BigRational::from_float(y).unwrap_or_else(BigRational::zero);
        let lo = floor_u64(&rx)?;
        let hi = floor_u64(&(rx + ry))?;
        if hi >= 1 << 63 {
            return Err(Error::Resource("x + y exceeds 2^63".into()));
        }
        Ok(Self { first: lo + 1, last: hi })
    }

    /// `(x, x + y]` for integer endpoints.
    pub fn from_int(x: u64, y: u64) -> Self {
        Self {
            first: x + 1,
            last: x + y,
        }
    }

    /// Integers `m` with `d m` in this interval.
    pub fn divided(&self, d: u64) -> Self {
        assert!(d > 0);
        Self {
            first: (self.first - 1) / d + 1,
            last: self.last / d,
        }
    }

    pub fn len(&self) -> u64 {
        (self.last + 1).saturating_sub(self.first)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, n: u64) -> bool {
        self.first <= n && n <= self.last
    }
}

fn floor_u64(r: &BigRational) -> Result<u64> {
    r.floor()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::Resource("interval endpoint out of 64-bit range".into()))
}

/// Value of an exponential sum together with its error budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpSumResult {
    pub sum: Complex64,
    pub n_terms: u64,
    /// Bound on the per-term error of `frac(n^k alpha)`.
    pub max_phase_error: f64,
    /// Bound on `|sum - exact value|`.
    pub err_bound: f64,
}

impl ExpSumResult {
    pub fn abs(&self) -> f64 {
        self.sum.norm()
    }
}

/// `frac(n^k alpha)` in `[0, 1)`.
pub fn frac_nk_alpha(n: u64, k: u32, alpha: &PhaseReal) -> Result<f64> {
    Ok(PhaseReducer::new(alpha, k, n)?.frac(n))
}

fn check_budget(iv: &Interval, budget: u64) -> Result<()> {
    if iv.len() > budget {
        return Err(Error::Resource(format!(
            "{} terms exceed the budget of {budget}",
            iv.len()
        )));
    }
    Ok(())
}

/// `sum_{n in iv} weight(n) e(n^k alpha)` over an explicit integer interval.
pub fn expsum_by<W>(iv: Interval, k: u32, alpha: &PhaseReal, weight: W) -> Result<ExpSumResult>
where
    W: Fn(u64) -> Complex64 + Sync,
{
    check_budget(&iv, budget_terms())?;
    if iv.is_empty() {
        return Ok(ExpSumResult {
            sum: Complex64::zero(),
            n_terms: 0,
            max_phase_error: 0.0,
            err_bound: 0.0,
        });
    }
    let reducer = PhaseReducer::new(alpha, k, iv.last)?;
    let acc = block_sum(iv.first, iv.last, |n| {
        let w = weight(n);
        if w.is_zero() {
            Complex64::zero()
        } else {
            w * reducer.unit(n)
        }
    });
    Ok(finish(acc, iv.len(), reducer.max_error()))
}

fn finish(acc: CompensatedSum, n_terms: u64, phase_err: f64) -> ExpSumResult {
    let per_term = std::f64::consts::TAU * phase_err + 4.0 * UNIT_ROUNDOFF;
    ExpSumResult {
        sum: acc.value(),
        n_terms,
        max_phase_error: phase_err,
        err_bound: acc.abs_total() * per_term + acc.rounding_bound(),
    }
}

/// `sum_{x < n <= x+y} e(n^k alpha)`.
pub fn weyl_sum(x: f64, y: f64, k: u32, alpha: &PhaseReal) -> Result<ExpSumResult> {
    expsum_by(Interval::from_real(x, y)?, k, alpha, |_| Complex64::new(1.0, 0.0))
}

/// `S_k(x, y; alpha) = sum_{x < n <= x+y} mu(n) e(n^k alpha)`, with `mu`
/// read from a sieved segment covering the interval.
pub fn mobius_expsum(
    x: f64,
    y: f64,
    k: u32,
    alpha: &PhaseReal,
    segment: &ArithSegment,
) -> Result<ExpSumResult> {
    let iv = Interval::from_real(x, y)?;
    let mu = segment
        .mu
        .as_deref()
        .ok_or_else(|| Error::Argument("segment has no mu values".into()))?;
    if !iv.is_empty() && (segment.x >= iv.first || segment.x + segment.y < iv.last) {
        return Err(Error::Argument(format!(
            "segment ({}, {}] does not cover ({}, {}]",
            segment.x,
            segment.x + segment.y,
            iv.first - 1,
            iv.last
        )));
    }
    let base = segment.x + 1;
    expsum_by(iv, k, alpha, |n| {
        Complex64::new(mu[(n - base) as usize] as f64, 0.0)
    })
}

/// `sum_{x < n <= x+y} c(n) e(n^k alpha)` with `weights[i] = c(floor(x) + 1 + i)`.
pub fn twisted_expsum(
    x: f64,
    y: f64,
    k: u32,
    alpha: &PhaseReal,
    weights: &[Complex64],
) -> Result<ExpSumResult> {
    let iv = Interval::from_real(x, y)?;
    if weights.len() as u64 != iv.len() {
        return Err(Error::Argument(format!(
            "{} weights for an interval of {} integers",
            weights.len(),
            iv.len()
        )));
    }
    let base = iv.first;
    expsum_by(iv, k, alpha, |n| weights[(n - base) as usize])
}

/// Precomputed `e(n^k alpha)` for every `n` of an interval.
///
/// Bilinear sums over `x < mn <= x + y` revisit each `n` about `log x` times;
/// the table evaluates each phase once.
#[derive(Clone, Debug)]
pub struct IntervalPhases {
    interval: Interval,
    values: Vec<Complex64>,
    max_phase_error: f64,
}

impl IntervalPhases {
    pub fn new(interval: Interval, k: u32, alpha: &PhaseReal) -> Result<Self> {
        check_budget(&interval, budget_terms())?;
        let reducer = PhaseReducer::new(alpha, k, interval.last.max(1))?;
        let mut values = vec![Complex64::zero(); interval.len() as usize];
        values
            .par_chunks_mut(accum::BLOCK as usize)
            .enumerate()
            .for_each(|(b, chunk)| {
                let start = interval.first + b as u64 * accum::BLOCK;
                for (i, v) in chunk.iter_mut().enumerate() {
                    *v = reducer.unit(start + i as u64);
                }
            });
        Ok(Self {
            interval,
            values,
            max_phase_error: reducer.max_error(),
        })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn max_phase_error(&self) -> f64 {
        self.max_phase_error
    }

    /// `e(n^k alpha)`; `n` must lie in the interval.
    #[inline]
    pub fn get(&self, n: u64) -> Complex64 {
        self.values[(n - self.interval.first) as usize]
    }
}

/// Convenience for tests and reports: `e(t)` for an exact rational `t`.
pub fn unit_of_rational(t: &BigRational) -> Complex64 {
    let f = t - t.floor();
    unit_from_frac(crate::phase::rational_to_f64(&f))
}

/// Helper used by several modules: the exact rational `a / q`.
pub fn ratio(a: i64, q: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::{sieve_segment, Fields};

    fn c_close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn interval_endpoints_are_exact() {
        assert_eq!(Interval::from_real(10.0, 6.0).unwrap(), Interval { first: 11, last: 16 });
        assert_eq!(Interval::from_real(10.5, 0.4).unwrap().len(), 0);
        assert_eq!(Interval::from_real(10.5, 0.5).unwrap(), Interval { first: 11, last: 11 });
        assert!(Interval::from_real(-1.0, 3.0).is_err());
    }

    #[test]
    fn frac_examples() {
        assert_eq!(frac_nk_alpha(2, 3, &PhaseReal::from_ratio(1, 8)).unwrap(), 0.0);
        let f = frac_nk_alpha(10, 3, &PhaseReal::from_ratio(1, 7)).unwrap();
        assert!((f - 6.0 / 7.0).abs() < 2f64.powi(-52));
        let h = frac_nk_alpha(3, 4, &PhaseReal::parse("0.5", 64).unwrap()).unwrap();
        assert_eq!(h, 0.5);
    }

    #[test]
    fn weyl_sum_alpha_zero_counts_integers() {
        let r = weyl_sum(100.5, 49.7, 5, &PhaseReal::zero()).unwrap();
        assert_eq!(r.sum, Complex64::new(50.0, 0.0));
        assert_eq!(r.n_terms, 50);
    }

    #[test]
    fn weyl_sum_residue_example() {
        // n in 101..=150: n = 0 and n = 2 (mod 3) occur 17 times, n = 1 16 times,
        // and n^3 = n (mod 3).
        let r = weyl_sum(100.0, 50.0, 3, &PhaseReal::from_ratio(1, 3)).unwrap();
        let e = |t: f64| Complex64::from_polar(1.0, std::f64::consts::TAU * t);
        let want = e(1.0 / 3.0) * 16.0 + e(2.0 / 3.0) * 17.0 + Complex64::new(17.0, 0.0);
        let direct: Complex64 = (101u64..=150).map(|n| e((n.pow(3) % 3) as f64 / 3.0)).sum();
        assert!(c_close(direct, want, 1e-12));
        assert!(c_close(r.sum, want, 1e-12));
        assert!(r.err_bound < 1e-10);
    }

    #[test]
    fn mobius_expsum_examples() {
        let seg = sieve_segment(10, 6, Fields::MU).unwrap();
        let z = mobius_expsum(10.0, 6.0, 3, &PhaseReal::zero(), &seg).unwrap();
        assert_eq!(z.sum, Complex64::new(0.0, 0.0));
        let h = mobius_expsum(10.0, 6.0, 3, &PhaseReal::from_ratio(1, 2), &seg).unwrap();
        assert!(c_close(h.sum, Complex64::new(2.0, 0.0), 1e-14));
    }

    #[test]
    fn mobius_expsum_rejects_short_segment() {
        let seg = sieve_segment(10, 5, Fields::MU).unwrap();
        assert!(matches!(
            mobius_expsum(10.0, 6.0, 3, &PhaseReal::zero(), &seg),
            Err(Error::Argument(_))
        ));
        let no_mu = sieve_segment(10, 6, Fields::TAU).unwrap();
        assert!(mobius_expsum(10.0, 6.0, 3, &PhaseReal::zero(), &no_mu).is_err());
    }

    #[test]
    fn twisted_reductions() {
        let alpha = PhaseReal::golden_frac(192);
        let seg = sieve_segment(1000, 300, Fields::all()).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); 300];
        let w = weyl_sum(1000.0, 300.0, 3, &alpha).unwrap();
        assert_eq!(twisted_expsum(1000.0, 300.0, 3, &alpha, &ones).unwrap().sum, w.sum);
        let mu: Vec<Complex64> = seg.mu.as_ref().unwrap().iter().map(|&m| Complex64::new(m as f64, 0.0)).collect();
        let m = mobius_expsum(1000.0, 300.0, 3, &alpha, &seg).unwrap();
        assert_eq!(twisted_expsum(1000.0, 300.0, 3, &alpha, &mu).unwrap().sum, m.sum);
        assert!(twisted_expsum(1000.0, 300.0, 3, &alpha, &mu[1..]).is_err());
    }

    #[test]
    fn twisted_lambda_at_zero() {
        let seg = sieve_segment(10, 6, Fields::LAMBDA).unwrap();
        let w: Vec<Complex64> = seg.lambda_vals.as_ref().unwrap().iter().map(|&l| Complex64::new(l, 0.0)).collect();
        let r = twisted_expsum(10.0, 6.0, 3, &PhaseReal::zero(), &w).unwrap();
        let want = 11f64.ln() + 13f64.ln() + 2f64.ln();
        assert!((r.sum.re - want).abs() < 1e-13 && r.sum.im == 0.0);
    }

    #[test]
    fn phase_table_agrees_with_reducer() {
        let alpha = PhaseReal::sqrt_frac(3, 256);
        let iv = Interval::from_int(123_456, 10_000);
        let t = IntervalPhases::new(iv, 4, &alpha).unwrap();
        let r = PhaseReducer::new(&alpha, 4, iv.last).unwrap();
        for n in [iv.first, iv.first + 4097, iv.last] {
            assert_eq!(t.get(n), r.unit(n));
        }
    }
}

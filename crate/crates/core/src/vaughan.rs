//! Vaughan's identity for `mu`, parameter plans `(U, V)`, type I / type II
//! bilinear sums, and reconstruction of `S_k` as `-S_1 + S_2`.
//!
//! `U` and `V` are real thresholds; integers are compared against them with
//! the inequalities of the identity (`d <= V`, `m <= U`, `d > V`, `m > U`).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::approx::default_c1;
use crate::arith::{divisors, isqrt, mobius, mobius_table};
use crate::error::{Error, Result};
use crate::kernel::{block_sum, mobius_expsum, Interval, IntervalPhases, PhaseReducer};
use crate::phase::{rational_to_f64, PhaseReal};
use crate::sieve::{sieve_segment, Fields};

fn as_string<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// One exponent-level inequality `lhs <= rhs` (powers of `x`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideCondition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VaughanPlan {
    pub x: f64,
    pub y: f64,
    pub k: u32,
    pub theta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub sigma_k: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub c1: f64,
    #[serde(serialize_with = "as_string")]
    pub theta_exact: BigRational,
    #[serde(serialize_with = "as_string")]
    pub gamma_exact: BigRational,
    #[serde(serialize_with = "as_string")]
    pub rho_exact: BigRational,
    #[serde(serialize_with = "as_string")]
    pub sigma_exact: BigRational,
    pub side_conditions: Vec<SideCondition>,
}

impl VaughanPlan {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds { u: self.u, v: self.v }
    }
}

/// Real thresholds `(U, V)` for the identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: f64,
}

impl Thresholds {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(u >= 1.0 && v >= 1.0 && u.is_finite() && v.is_finite()) {
            return Err(Error::Argument(format!("need U, V >= 1, got U = {u}, V = {v}")));
        }
        Ok(Self { u, v })
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Plan for `y = x^theta` with `theta = log y / log x` taken at its exact
/// double value.
pub fn make_plan(x: f64, y: f64, k: u32) -> Result<VaughanPlan> {
    if !(x > 1.0 && y > 1.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::Argument(format!("need x, y > 1, got x = {x}, y = {y}")));
    }
    let theta = if y == x { 1.0 } else { y.ln() / x.ln() };
    let theta = BigRational::from_float(theta).expect("finite");
    make_plan_theta(x, &theta, k)
}

/// Plan with `y = x^theta` for an exact `theta`.
pub fn make_plan_theta(x: f64, theta: &BigRational, k: u32) -> Result<VaughanPlan> {
    if k < 3 {
        return Err(Error::Argument(format!("k = {k} must be at least 3")));
    }
    if !(x > 1.0 && x.is_finite()) {
        return Err(Error::Argument(format!("x = {x} must exceed 1")));
    }
    if *theta <= rat(3, 4) {
        return Err(Error::OutOfRange(format!(
            "theta must exceed 3/4 (theta = {:.6})",
            rational_to_f64(theta)
        )));
    }
    if *theta > BigRational::one() {
        return Err(Error::OutOfRange(format!(
            "theta = {:.6} exceeds 1 (y > x)",
            rational_to_f64(theta)
        )));
    }
    let kk = k as i64;
    let sigma = rat(1, 2 * kk * (kk - 1));
    let gamma = (theta - rat(3, 4)).recip();
    let r1 = &sigma / (&gamma * rat(8, 1));
    let r2 = (theta - rat(2, 3)) / rat(2, 1);
    let rho = r1.min(r2) / rat(2, 1);
    let one = BigRational::one();

    let u_exp = theta / rat(2, 1) - &rho;
    let v_exp = &one - theta + &rho * rat(2, 1);
    let uv_exp = &u_exp + &v_exp;
    let mut conds = Vec::new();
    let mut check = |name: &str, lhs: BigRational, rhs: BigRational| {
        let slack = &rhs - &lhs;
        conds.push(SideCondition {
            name: name.to_string(),
            lhs: rational_to_f64(&lhs),
            rhs: rational_to_f64(&rhs),
            slack: rational_to_f64(&slack),
            holds: !slack.is_negative(),
        });
    };
    // Exponents of x on both sides of each requirement.
    let g1 = &gamma - &sigma - &one;
    check(
        "V << y (y/x)^((gamma+1)/(gamma-sigma-1))",
        v_exp.clone(),
        theta + (theta - &one) * (&gamma + &one) / &g1,
    );
    check(
        "V << y x^(-gamma rho/sigma)",
        v_exp.clone(),
        theta - &gamma * &rho / &sigma,
    );
    check(
        "V^(2k) << y x^(k-1-2k rho)",
        &v_exp * rat(2 * kk, 1),
        theta + rat(kk - 1, 1) - &rho * rat(2 * kk, 1),
    );
    check("x^(1/2) <= UV", rat(1, 2), uv_exp.clone());
    check("UV <= x^(theta-2 rho)", uv_exp.clone(), theta - &rho * rat(2, 1));
    check(
        "theta >= (3gamma-sigma-1)/(2(2gamma-sigma-1)(1-2rho))",
        (&gamma * rat(3, 1) - &sigma - &one)
            / ((&gamma * rat(2, 1) - &sigma - &one) * rat(2, 1) * (&one - &rho * rat(2, 1))),
        theta.clone(),
    );
    check("UV <= x", uv_exp.clone(), one.clone());

    let u = x.powf(rational_to_f64(&u_exp));
    let v = x.powf(rational_to_f64(&v_exp));
    if !(u > 1.0 && v > 1.0) {
        return Err(Error::Parameter(format!("x = {x} too small: U = {u}, V = {v}")));
    }
    if let Some(c) = conds.iter().find(|c| !c.holds) {
        return Err(Error::Parameter(format!(
            "side condition {} fails: {} > {}",
            c.name, c.lhs, c.rhs
        )));
    }
    let th = rational_to_f64(theta);
    Ok(VaughanPlan {
        x,
        y: x.powf(th),
        k,
        theta: th,
        gamma: rational_to_f64(&gamma),
        rho: rational_to_f64(&rho),
        sigma_k: rational_to_f64(&sigma),
        u,
        v,
        c1: default_c1(k),
        theta_exact: theta.clone(),
        gamma_exact: gamma,
        rho_exact: rho,
        sigma_exact: sigma,
        side_conditions: conds,
    })
}

/// `lambda_0(v) = sum_{m d = v, d <= V, m <= U} mu(d) mu(m)`.
pub fn lambda0(v: u64, u_thr: f64, v_thr: f64) -> i64 {
    divisors(v)
        .into_iter()
        .filter(|&d| d as f64 <= v_thr && (v / d) as f64 <= u_thr)
        .map(|d| mobius(d) as i64 * mobius(v / d) as i64)
        .sum()
}

/// `lambda_1(u) = sum_{d | u, d > V} mu(d)`.
pub fn lambda1(u: u64, v_thr: f64) -> i64 {
    divisors(u)
        .into_iter()
        .filter(|&d| d as f64 > v_thr)
        .map(|d| mobius(d) as i64)
        .sum()
}

/// Whether `mu(n) = -sum_{lmd=n, d<=V, m<=U} mu(d)mu(m) + sum_{lmd=n, d>V, m>U} mu(d)mu(m)`.
pub fn vaughan_identity_check(n: u64, u_thr: f64, v_thr: f64) -> Result<bool> {
    if n as f64 <= u_thr.max(v_thr) {
        return Err(Error::Argument(format!(
            "n = {n} must exceed max(U, V) = {}",
            u_thr.max(v_thr)
        )));
    }
    let mut low = 0i64;
    let mut high = 0i64;
    for d in divisors(n) {
        let mu_d = mobius(d) as i64;
        if mu_d == 0 {
            continue;
        }
        for m in divisors(n / d) {
            let mu_m = mobius(m) as i64;
            if d as f64 <= v_thr && m as f64 <= u_thr {
                low += mu_d * mu_m;
            }
            if d as f64 > v_thr && m as f64 > u_thr {
                high += mu_d * mu_m;
            }
        }
    }
    Ok(mobius(n) as i64 == -low + high)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoefficientKind {
    Lambda0,
    Lambda1,
}

/// Coefficients on `first..=last`; `values[i]` belongs to `first + i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoefficientTable {
    pub kind: CoefficientKind,
    pub first: u64,
    pub last: u64,
    pub values: Vec<i64>,
}

impl CoefficientTable {
    pub fn get(&self, n: u64) -> i64 {
        if n < self.first || n > self.last {
            0
        } else {
            self.values[(n - self.first) as usize]
        }
    }

    /// `lambda_0` on `1..=limit` by convolving `mu` over `d <= V`, `m <= U`.
    pub fn lambda0(limit: u64, th: Thresholds) -> Self {
        let d_max = (th.v.floor() as u64).min(limit);
        let m_max = (th.u.floor() as u64).min(limit);
        let mu = mobius_table(d_max.max(m_max) as usize);
        let mut values = vec![0i64; limit as usize];
        for d in 1..=d_max {
            if mu[d as usize] == 0 {
                continue;
            }
            for m in 1..=m_max.min(limit / d) {
                values[(d * m - 1) as usize] += mu[d as usize] as i64 * mu[m as usize] as i64;
            }
        }
        Self {
            kind: CoefficientKind::Lambda0,
            first: 1,
            last: limit,
            values,
        }
    }

    /// `lambda_1` on `first..=last` via `sum_{d | u, d > V} mu(d) = [u = 1] - sum_{d | u, d <= V} mu(d)`.
    pub fn lambda1(first: u64, last: u64, th: Thresholds) -> Self {
        let first = first.max(1);
        let len = (last + 1).saturating_sub(first) as usize;
        let mut values = vec![0i64; len];
        if len > 0 {
            if first == 1 {
                values[0] = 1;
            }
            let d_max = (th.v.floor() as u64).min(last);
            let mu = mobius_table(d_max as usize);
            for d in 1..=d_max {
                let md = mu[d as usize] as i64;
                if md == 0 {
                    continue;
                }
                let mut u = first.div_ceil(d) * d;
                while u <= last {
                    values[(u - first) as usize] -= md;
                    u += d;
                }
            }
        }
        Self {
            kind: CoefficientKind::Lambda1,
            first,
            last,
            values,
        }
    }
}

/// A dyadic block `(lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DyadicRange {
    pub lo: f64,
    pub hi: f64,
}

/// Split `(lo, hi]` at powers of two.
pub fn dyadic_cover(lo: f64, hi: f64) -> Result<Vec<DyadicRange>> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Argument(format!("need 0 < lo < hi, got ({lo}, {hi}]")));
    }
    // smallest power of two above lo
    let mut p = 2f64.powi(lo.log2().floor() as i32);
    while p <= lo {
        p *= 2.0;
    }
    while p / 2.0 > lo {
        p /= 2.0;
    }
    let mut out = Vec::new();
    let mut a = lo;
    while a < hi {
        let b = p.min(hi);
        out.push(DyadicRange { lo: a, hi: b });
        a = b;
        p *= 2.0;
    }
    Ok(out)
}

/// Integers in `(M, 2M]`.
fn dyadic_integers(m_scale: f64) -> (u64, u64) {
    (m_scale.floor() as u64 + 1, (2.0 * m_scale).floor() as u64)
}

/// `sum_{M < m <= 2M} a(m) sum_{x < mn <= x+y} e((mn)^k alpha)`.
pub fn type_i_sum<A>(m_scale: f64, a: A, x: f64, y: f64, k: u32, alpha: &PhaseReal) -> Result<Complex64>
where
    A: Fn(u64) -> f64 + Sync,
{
    type_ii_sum(m_scale, a, |_| 1.0, x, y, k, alpha)
}

/// `sum_{M < m <= 2M} a(m) sum_{x < mn <= x+y} b(n) e((mn)^k alpha)`.
pub fn type_ii_sum<A, B>(
    m_scale: f64,
    a: A,
    b: B,
    x: f64,
    y: f64,
    k: u32,
    alpha: &PhaseReal,
) -> Result<Complex64>
where
    A: Fn(u64) -> f64 + Sync,
    B: Fn(u64) -> f64 + Sync,
{
    if !(m_scale > 0.0 && m_scale.is_finite()) {
        return Err(Error::Argument(format!("M = {m_scale} must be positive")));
    }
    let iv = Interval::from_real(x, y)?;
    let (m_lo, m_hi) = dyadic_integers(m_scale);
    let m_hi = m_hi.min(iv.last);
    if iv.is_empty() || m_lo > m_hi {
        return Ok(Complex64::zero());
    }
    let reducer = PhaseReducer::new(alpha, k, iv.last)?;
    let acc = block_sum(m_lo, m_hi, |m| {
        let am = a(m);
        if am == 0.0 {
            return Complex64::zero();
        }
        let inner = iv.divided(m);
        let mut s = Complex64::zero();
        for n in inner.first..=inner.last {
            let bn = b(n);
            if bn != 0.0 {
                s += reducer.unit(m * n) * bn;
            }
        }
        s * am
    });
    Ok(acc.value())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reconstruction {
    pub thresholds: Thresholds,
    pub s1: Complex64,
    pub s2: Complex64,
    /// `S_3(0, V)` and `S_3(V, UV)`, the two parts of `S_1`.
    pub s3_low: Complex64,
    pub s3_high: Complex64,
    /// `u >= x^(1/2)` and `u < x^(1/2)` parts of `S_2`.
    pub s21: Complex64,
    pub s22: Complex64,
    pub sk_direct: Complex64,
    pub residual: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Tolerance for `|(-S_1 + S_2) - S_k|`: `y 2^-30`.
pub fn reconstruction_tolerance(y: f64) -> f64 {
    y * 2f64.powi(-30)
}

/// Evaluate `S_1`, `S_2` and `S_k` directly and compare.
pub fn reconstruct(x: f64, y: f64, k: u32, alpha: &PhaseReal, th: Thresholds) -> Result<Reconstruction> {
    let iv = Interval::from_real(x, y)?;
    if iv.is_empty() {
        return Err(Error::Argument(format!("({x}, {x}+{y}] contains no integers")));
    }
    if iv.first as f64 <= th.u.max(th.v) {
        return Err(Error::Argument(format!(
            "every n must exceed max(U, V) = {}; the interval starts at {}",
            th.u.max(th.v),
            iv.first
        )));
    }
    let n_max = iv.last;
    let phases = IntervalPhases::new(iv, k, alpha)?;
    let sum_multiples = |v: u64, lo_factor: u64| -> Complex64 {
        let first = iv.first.div_ceil(v).max(lo_factor);
        let last = n_max / v;
        let mut s = Complex64::zero();
        for l in first..=last {
            s += phases.get(l * v);
        }
        s
    };

    // S_1 over v <= UV (terms with v > n_max vanish)
    let uv = th.u * th.v;
    let v_lim = (uv.floor() as u64).min(n_max);
    let lam0 = CoefficientTable::lambda0(v_lim, th);
    let v_split = (th.v.floor() as u64).min(v_lim);
    let s1_part = |lo: u64, hi: u64| {
        if lo > hi {
            return Complex64::zero();
        }
        block_sum(lo, hi, |v| {
            let c = lam0.get(v);
            if c == 0 {
                Complex64::zero()
            } else {
                sum_multiples(v, 1) * c as f64
            }
        })
        .value()
    };
    let s3_low = s1_part(1, v_split);
    let s3_high = s1_part(v_split + 1, v_lim);

    // S_2 over V < u <= (x+y)/U, m > U
    let u_first = th.v.floor() as u64 + 1;
    // larger u leave no m > U with m u <= x + y, so the cutoff need not be exact
    let u_last = (n_max as f64 / th.u).floor() as u64;
    let m_first = th.u.floor() as u64 + 1;
    let (s21, s22) = if u_first > u_last {
        (Complex64::zero(), Complex64::zero())
    } else {
        let lam1 = CoefficientTable::lambda1(u_first, u_last, th);
        let mu = mobius_table((n_max / u_first) as usize);
        let term = |u: u64| {
            let c = lam1.get(u);
            if c == 0 {
                return Complex64::zero();
            }
            let first = iv.first.div_ceil(u).max(m_first);
            let last = n_max / u;
            let mut s = Complex64::zero();
            for m in first..=last {
                let mm = mu[m as usize];
                if mm != 0 {
                    s += phases.get(m * u) * mm as f64;
                }
            }
            s * c as f64
        };
        // first u with u^2 >= x
        let mut root = isqrt(x.ceil() as u64);
        while (root as f64) * (root as f64) < x {
            root += 1;
        }
        let split = root.clamp(u_first, u_last + 1);
        let s22 = if split > u_first { block_sum(u_first, split - 1, term).value() } else { Complex64::zero() };
        let s21 = if split <= u_last { block_sum(split, u_last, term).value() } else { Complex64::zero() };
        (s21, s22)
    };

    let seg = sieve_segment(iv.first - 1, iv.len(), Fields::MU)?;
    let direct = mobius_expsum(x, y, k, alpha, &seg)?.sum;
    let s1 = s3_low + s3_high;
    let s2 = s21 + s22;
    let residual = (-s1 + s2 - direct).norm();
    let tolerance = reconstruction_tolerance(y);
    Ok(Reconstruction {
        thresholds: th,
        s1,
        s2,
        s3_low,
        s3_high,
        s21,
        s22,
        sk_direct: direct,
        residual,
        tolerance,
        within_tolerance: residual <= tolerance,
    })
}

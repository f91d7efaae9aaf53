//! Continued-fraction approximation of `alpha` and the three-way arc split
//! `A` / `B` / `C` driven by `P = L^c1`, `Q = x^(k-2) y^2 / P`, `R = x^(k-1) y`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{rational_to_f64, PhaseReal};

/// `alpha = a/q + lambda` with `gcd(a, q) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletApprox {
    pub a: BigInt,
    pub q: BigInt,
    /// `alpha - a/q`, computed from the centre value of `alpha`.
    pub lambda: BigRational,
    pub alpha: PhaseReal,
}

impl DirichletApprox {
    pub fn q_u64(&self) -> Option<u64> {
        self.q.to_u64()
    }

    pub fn a_i64(&self) -> Option<i64> {
        self.a.to_i64()
    }

    pub fn lambda_f64(&self) -> f64 {
        rational_to_f64(&self.lambda)
    }

    /// `lambda` as a phase with the precision of `alpha`.
    pub fn lambda_phase(&self) -> PhaseReal {
        self.alpha.shifted(&(&self.lambda - self.alpha.value()))
    }
}

struct Expansion {
    rem: Option<BigRational>,
}

impl Expansion {
    fn new(x: BigRational) -> Self {
        Self { rem: Some(x) }
    }

    /// Current partial quotient; `None` once the expansion has terminated.
    fn quotient(&self) -> Option<BigInt> {
        self.rem.as_ref().map(|r| r.floor().to_integer())
    }

    fn advance(&mut self, a: &BigInt) {
        if let Some(r) = self.rem.take() {
            let f = r - BigRational::from_integer(a.clone());
            if !f.is_zero() {
                self.rem = Some(f.recip());
            }
        }
    }
}

/// Continued-fraction convergents `a/q` of `alpha` with `q <= q_max`, in
/// order of increasing `q`.
///
/// For an approximate `alpha` the expansion is run on both ends of its
/// uncertainty interval; every reported convergent is shared by all reals in
/// that interval, and the list is certified complete up to `q_max`.
pub fn convergents(alpha: &PhaseReal, q_max: &BigInt) -> Result<Vec<(BigInt, BigInt)>> {
    if *q_max < BigInt::one() {
        return Err(Error::Argument("q_max must be at least 1".into()));
    }
    let radius = alpha.radius();
    let mut lo = Expansion::new(alpha.value() - &radius);
    let mut hi = Expansion::new(alpha.value() + &radius);
    let exact = radius.is_zero();

    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
    let mut out = Vec::new();
    loop {
        let (a_lo, a_hi) = (lo.quotient(), hi.quotient());
        let agreed = match (&a_lo, &a_hi) {
            (None, None) => return Ok(out),
            (Some(a), Some(b)) if a == b => Some(a.clone()),
            _ if exact => unreachable!("exact expansions agree"),
            _ => None,
        };
        match agreed {
            Some(a) => {
                let p = &a * &p1 + &p2;
                let q = &a * &q1 + &q2;
                if &q > q_max {
                    return Ok(out);
                }
                out.push((p.clone(), q.clone()));
                p2 = std::mem::replace(&mut p1, p);
                q2 = std::mem::replace(&mut q1, q);
                lo.advance(&a);
                hi.advance(&a);
            }
            None => {
                // Reals between the ends have this partial quotient somewhere
                // between the two; the next denominator is at least a_min q1 + q2.
                let a_min = match (a_lo, a_hi) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) => unreachable!(),
                };
                if &a_min * &q1 + &q2 > *q_max {
                    return Ok(out);
                }
                return Err(Error::Precision(format!(
                    "{} bits cannot certify convergents up to q = {q_max}",
                    alpha.bits()
                )));
            }
        }
    }
}

/// Canonical Dirichlet approximation: the convergent with the smallest `q`
/// such that `|q alpha - a| <= 1/bound`. Then `q <= bound` and
/// `|lambda| <= 1/(q bound)`.
pub fn dirichlet_approx(alpha: &PhaseReal, bound: &BigRational) -> Result<DirichletApprox> {
    if *bound < BigRational::one() {
        return Err(Error::Argument("bound must be at least 1".into()));
    }
    let q_max = bound.floor().to_integer();
    let centre = alpha.value();
    for (_, q) in convergents(alpha, &q_max)? {
        let qa = centre * BigRational::from_integer(q.clone());
        let mut a = qa.floor().to_integer();
        if &qa - BigRational::from_integer(a.clone()) > BigRational::new(1.into(), 2.into()) {
            a += 1;
        }
        let err = (&qa - BigRational::from_integer(a.clone())).abs();
        if err * bound <= BigRational::one() {
            debug_assert!(a.gcd(&q).is_one());
            let lambda = centre - BigRational::new(a.clone(), q.clone());
            return Ok(DirichletApprox {
                a,
                q,
                lambda,
                alpha: alpha.clone(),
            });
        }
    }
    Err(Error::Classification(
        "no convergent below the bound meets Dirichlet's inequality".into(),
    ))
}

/// Arc parameters. `P`, `Q`, `R` are exact rationals: `x`, `y` are taken at
/// their exact binary values and `P` at the double nearest `(log x)^c1`
/// (exactly 1 when `c1 = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct ArcParams {
    pub x: f64,
    pub y: f64,
    pub k: u32,
    pub c1: f64,
    pub log_x: f64,
    p: BigRational,
    q: BigRational,
    r: BigRational,
}

/// Default `c1 = 8 (k + 1)`.
pub fn default_c1(k: u32) -> f64 {
    8.0 * (k as f64 + 1.0)
}

pub fn arc_params(x: f64, y: f64, k: u32, c1: f64) -> Result<ArcParams> {
    if k < 3 {
        return Err(Error::Argument(format!("k = {k} must be at least 3")));
    }
    if !(x.is_finite() && y.is_finite()) || !(2.0..=x).contains(&y) {
        return Err(Error::Argument(format!("need 2 <= y <= x, got x = {x}, y = {y}")));
    }
    if !(c1 >= 0.0 && c1.is_finite()) {
        return Err(Error::Argument(format!("c1 = {c1} must be a nonnegative real")));
    }
    let log_x = x.ln();
    let p = if c1 == 0.0 {
        BigRational::one()
    } else {
        BigRational::from_float(log_x.powf(c1))
            .ok_or_else(|| Error::Parameter("P is not finite".into()))?
    };
    let xr = BigRational::from_float(x).expect("finite");
    let yr = BigRational::from_float(y).expect("finite");
    let q = num_traits::pow(xr.clone(), k as usize - 2) * &yr * &yr / &p;
    let r = num_traits::pow(xr, k as usize - 1) * yr;
    if p >= q {
        return Err(Error::Parameter(format!(
            "P = {:.6e} is not below Q = {:.6e}; interval too short or c1 too large",
            rational_to_f64(&p),
            rational_to_f64(&q)
        )));
    }
    Ok(ArcParams {
        x,
        y,
        k,
        c1,
        log_x,
        p,
        q,
        r,
    })
}

impl ArcParams {
    pub fn p(&self) -> &BigRational {
        &self.p
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn r(&self) -> &BigRational {
        &self.r
    }

    pub fn p_f64(&self) -> f64 {
        rational_to_f64(&self.p)
    }

    pub fn q_f64(&self) -> f64 {
        rational_to_f64(&self.q)
    }

    pub fn r_f64(&self) -> f64 {
        rational_to_f64(&self.r)
    }

    /// The three arc conditions for a witness, in order `(a)`, `(b)`, `(c)`.
    pub fn conditions(&self, w: &DirichletApprox) -> [bool; 3] {
        let q = BigRational::from_integer(w.q.clone());
        let lam = w.lambda.abs();
        let one = BigRational::one();
        let q_le_p = q <= self.p;
        let within_r = &lam * &self.r <= one;
        let within_qq = &lam * &q * &self.q <= one;
        [
            q_le_p && within_r,
            q_le_p && !within_r && within_qq,
            !q_le_p && q <= self.q && within_qq,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArcLabel {
    A,
    B,
    C,
}

impl ArcLabel {
    pub const ALL: [ArcLabel; 3] = [ArcLabel::A, ArcLabel::B, ArcLabel::C];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ArcLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcLabel::A => "A",
            ArcLabel::B => "B",
            ArcLabel::C => "C",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArcClass {
    pub label: ArcLabel,
    pub witness: DirichletApprox,
}

/// Assign `alpha` in `[0, 1]` to exactly one of `A`, `B`, `C` using the
/// canonical witness `dirichlet_approx(alpha, Q)`.
pub fn classify(alpha: &PhaseReal, params: &ArcParams) -> Result<ArcClass> {
    let v = alpha.value();
    if v.is_negative() || *v > BigRational::one() {
        return Err(Error::OutOfRange(format!("alpha = {alpha} outside [0, 1]")));
    }
    let witness = dirichlet_approx(alpha, &params.q)?;
    let conds = params.conditions(&witness);
    let label = match conds {
        [true, false, false] => ArcLabel::A,
        [false, true, false] => ArcLabel::B,
        [false, false, true] => ArcLabel::C,
        _ => {
            return Err(Error::Classification(format!(
                "witness {}/{} with lambda = {:e} satisfies {:?}",
                witness.a,
                witness.q,
                witness.lambda_f64(),
                conds
            )))
        }
    };
    Ok(ArcClass { label, witness })
}

/// Flat, serializable view of a classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcReport {
    pub label: ArcLabel,
    pub a: String,
    pub q: String,
    pub lambda: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Q")]
    pub big_q: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl ArcReport {
    pub fn new(class: &ArcClass, params: &ArcParams) -> Self {
        Self {
            label: class.label,
            a: class.witness.a.to_string(),
            q: class.witness.q.to_string(),
            lambda: class.witness.lambda_f64(),
            p: params.p_f64(),
            big_q: params.q_f64(),
            r: params.r_f64(),
        }
    }
}

//! Recorded regression constants and the probes that produce them.
//!
//! The constants are measured once by `examples/record_baselines.rs` and
//! committed as `baselines.json`; later runs must reproduce or respect them.

use std::collections::BTreeMap;
use std::path::Path;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::ArcLabel;
use crate::characters::lemma31_rhs;
use crate::error::{Error, Result};
use crate::kernel::{gauss::w_k, mobius_expsum, ratio, GaussSumTable, Interval};
use crate::phase::PhaseReal;
use crate::sieve::{sieve_segment, Fields};
use crate::sweep::{run_sweep, AlphaGrid, SweepSpec};

/// Path of the committed baseline file inside this crate.
pub fn default_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines.json")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMaxima {
    pub x: u64,
    pub theta: f64,
    pub k: u32,
    pub max_sk_over_y: BTreeMap<ArcLabel, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    /// `max |S(q, a)| / (q w_k(q))` over `q <= gauss_q_max`, keyed by `k`.
    pub gauss_q_max: u64,
    pub gauss_ratio_max: BTreeMap<u32, f64>,
    /// `max |S_k| / lemma31_rhs` over [`lemma31_probe`].
    pub lemma31_constant: f64,
    /// `max |S_k|/y` over [`uniform_spec`].
    pub uniform_max_sk_over_y: f64,
    /// Per-class maxima over [`decay_spec`].
    pub decay: ClassMaxima,
}

impl Baselines {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    /// Measure everything from scratch.
    pub fn record() -> Result<Self> {
        let gauss_q_max = 2000;
        let gauss_ratio_max = [3u32, 4]
            .into_iter()
            .map(|k| Ok((k, gauss_ratio_max(k, gauss_q_max)?)))
            .collect::<Result<_>>()?;
        let lemma31_constant = lemma31_probe()?
            .iter()
            .filter(|p| p.rhs > 0.0)
            .map(|p| p.sk_abs / p.rhs)
            .fold(0.0, f64::max);
        let uniform = run_sweep(&uniform_spec())?;
        let uniform_max_sk_over_y = uniform.rows.iter().map(|r| r.sk_over_y).fold(0.0, f64::max);
        Ok(Self {
            gauss_q_max,
            gauss_ratio_max,
            lemma31_constant,
            uniform_max_sk_over_y,
            decay: decay_maxima()?,
        })
    }
}

/// `max_{q <= q_max, (a, q) = 1} |S(q, a)| / (q w_k(q))`.
pub fn gauss_ratio_max(k: u32, q_max: u64) -> Result<f64> {
    let per_q: Vec<f64> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let table = GaussSumTable::new(q, k)?;
            let scale = q as f64 * w_k(q, k)?.value;
            let mut best = 0f64;
            for a in 1..=q {
                if a.gcd(&q) == 1 {
                    best = best.max(table.eval(a as i64)?.norm() / scale);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(per_q.into_iter().fold(0.0, f64::max))
}

/// Uniform-grid regression: `x = 10^5`, `theta = 0.8`, `k = 3`, 100 points, seed 0.
pub fn uniform_spec() -> SweepSpec {
    let mut s = SweepSpec::new(100_000, vec![0.8], vec![3]);
    s.alpha_grid = AlphaGrid {
        uniform: 100,
        q_max: 0,
        deltas: vec![],
    };
    s
}

/// Default grid at `x = 10^6`, `theta = 0.85`, `k = 3`.
pub fn decay_spec() -> SweepSpec {
    SweepSpec::new(1_000_000, vec![0.85], vec![3])
}

pub fn decay_maxima() -> Result<ClassMaxima> {
    let spec = decay_spec();
    let rep = run_sweep(&spec)?;
    let s = rep
        .summary
        .first()
        .ok_or_else(|| Error::Argument("empty sweep".into()))?;
    Ok(ClassMaxima {
        x: spec.x,
        theta: spec.theta_list[0],
        k: spec.k_list[0],
        max_sk_over_y: s.max_sk_over_y.clone(),
    })
}

/// One point of the character-bound probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Point {
    pub q: u64,
    pub a: i64,
    /// `lambda` in units of `1 / (x^(k-1) y)`.
    pub lambda_units: i64,
    pub sk_abs: f64,
    pub rhs: f64,
}

/// `x = 10^4`, `y = 2000`, `k = 3`, `q <= 50`, `a in {1, q-1}`,
/// `lambda in {0, 1/(x^2 y)}`.
pub fn lemma31_probe() -> Result<Vec<Lemma31Point>> {
    let (x, y, k) = (10_000u64, 2000u64, 3u32);
    let iv = Interval::from_int(x, y);
    let seg = sieve_segment(x, y, Fields::MU)?;
    let unit = crate::kernel::ratio(1, x * x * y);
    let mut pts = Vec::new();
    for q in 1..=50u64 {
        let mut a_list = vec![if q == 1 { 0 } else { 1 }];
        if q > 2 {
            a_list.push(q as i64 - 1);
        }
        for a in a_list {
            for units in [0i64, 1] {
                pts.push((q, a, units));
            }
        }
    }
    pts.par_iter()
        .map(|&(q, a, units)| {
            let lam = &unit * num_rational::BigRational::from_integer(units.into());
            let alpha = PhaseReal::from_rational(ratio(a, q) + &lam, 128);
            let sk = mobius_expsum(x as f64, y as f64, k, &alpha, &seg)?.abs();
            let lam_phase = PhaseReal::from_rational(lam, 128);
            let rhs = lemma31_rhs(x as f64, y as f64, k, q, a, &lam_phase, crate::config::DEFAULT_EPS)?;
            debug_assert!(iv.len() == y);
            Ok(Lemma31Point {
                q,
                a,
                lambda_units: units,
                sk_abs: sk,
                rhs,
            })
        })
        .collect()
}

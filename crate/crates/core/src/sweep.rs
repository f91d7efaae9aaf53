//! Sweeps of `S_k(x, y; alpha)` over grids of `alpha`, with per-class maxima,
//! observed constants, and CSV / JSON reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{arc_params, classify, convergents, ArcLabel, ArcParams};
use crate::characters::lemma31_rhs;
use crate::config::{default_prec_bits, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::kernel::{gauss::w_k, major_arc_term, mobius_expsum, weyl_sum, Interval};
use crate::kernel::{wk_shift_sum_lemma37, wk_sum_lemma37, DEFAULT_BUDGET_TERMS};
use crate::phase::{rational_to_f64, PhaseReal};
use crate::sieve::{sieve_segment, ArithSegment, Fields};

/// Shift added to `a/q`, scaled by `1/R` or `1/(qQ)` of the current arc parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta {
    PerR(f64),
    PerQq(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaGrid {
    /// Random points `m / 2^64`.
    pub uniform: usize,
    /// Reduced fractions `a/q` in `[0, 1)` with `q <= q_max`; 0 disables them.
    pub q_max: u64,
    pub deltas: Vec<Delta>,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self {
            uniform: 100,
            q_max: 20,
            deltas: vec![
                Delta::PerR(1.0),
                Delta::PerR(-1.0),
                Delta::PerQq(1.0),
                Delta::PerQq(-1.0),
            ],
        }
    }
}

fn default_c1() -> f64 {
    1.0
}

fn default_lemma31_q_max() -> u64 {
    6
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET_TERMS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub x: u64,
    pub theta_list: Vec<f64>,
    pub k_list: Vec<u32>,
    #[serde(default)]
    pub alpha_grid: AlphaGrid,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default)]
    pub seed: u64,
    /// Bits carried by each `alpha`; `None` derives them per `(theta, k)`.
    #[serde(default)]
    pub prec_bits: Option<u32>,
    /// Upper limit on the estimated number of terms.
    #[serde(default = "default_budget")]
    pub budget_terms: u64,
    /// Rows whose witness has `q` at most this also get the character bound.
    #[serde(default = "default_lemma31_q_max")]
    pub lemma31_q_max: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl SweepSpec {
    pub fn new(x: u64, theta_list: Vec<f64>, k_list: Vec<u32>) -> Self {
        Self {
            x,
            theta_list,
            k_list,
            alpha_grid: AlphaGrid::default(),
            c1: default_c1(),
            seed: 0,
            prec_bits: None,
            budget_terms: default_budget(),
            lemma31_q_max: default_lemma31_q_max(),
            eps: default_eps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x < 2 {
            return Err(Error::Argument("x must be at least 2".into()));
        }
        if self.theta_list.is_empty() || self.k_list.is_empty() {
            return Err(Error::Argument("theta_list and k_list must be nonempty".into()));
        }
        if let Some(t) = self.theta_list.iter().find(|&&t| !(t > 0.75 && t <= 1.0)) {
            return Err(Error::OutOfRange(format!("theta = {t} must lie in (3/4, 1]")));
        }
        if let Some(k) = self.k_list.iter().find(|&&k| k < 3) {
            return Err(Error::Argument(format!("k = {k} must be at least 3")));
        }
        let g = &self.alpha_grid;
        if g.uniform == 0 && g.q_max == 0 {
            return Err(Error::Argument("alpha grid is empty".into()));
        }
        if let Some(b) = self.prec_bits {
            if b < 64 {
                return Err(Error::Argument(format!("prec_bits = {b} must be at least 64")));
            }
        }
        Ok(())
    }

    pub fn y_for(&self, theta: f64) -> f64 {
        (self.x as f64).powf(theta)
    }
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub k: u32,
    pub y: f64,
    pub descriptor: String,
    pub alpha: f64,
    pub label: ArcLabel,
    pub a: String,
    pub q: String,
    pub lambda: f64,
    pub sk_re: f64,
    pub sk_im: f64,
    pub sk_abs: f64,
    pub sk_over_y: f64,
    pub major_arc_term: Option<f64>,
    pub lemma31_rhs: Option<f64>,
    pub weyl_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    #[serde(rename = "A")]
    pub a: u32,
    /// `max |S_k|/y` times `(log y)^A`.
    pub scaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub theta: f64,
    pub k: u32,
    pub y: f64,
    pub rows: usize,
    pub count: BTreeMap<ArcLabel, usize>,
    pub max_sk_over_y: BTreeMap<ArcLabel, f64>,
    /// Largest `|S_k| / lemma31_rhs` over rows where the bound was computed.
    pub lemma31_constant: Option<f64>,
    /// Largest `|S_k| / major_arc_term` over rows labelled `A` or `B`.
    pub major_arc_constant: Option<f64>,
    pub decay: Vec<DecayPoint>,
    /// Whether `|S_k|/y <= 1 + 2^-30` on every row.
    pub trivial_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<GroupSummary>,
}

/// A grid point before evaluation.
#[derive(Clone, Debug)]
pub struct AlphaPoint {
    pub descriptor: String,
    pub alpha: PhaseReal,
}

/// Grid for one `(theta, k)`: fractions, then perturbed fractions, then uniform points.
pub fn alpha_points(spec: &SweepSpec, params: &ArcParams, bits: u32) -> Vec<AlphaPoint> {
    let g = &spec.alpha_grid;
    let mut fracs = Vec::new();
    for q in 1..=g.q_max {
        for a in 0..q {
            if a.gcd(&q) == 1 {
                fracs.push((a, q));
            }
        }
    }
    let mut out: Vec<AlphaPoint> = fracs
        .iter()
        .map(|&(a, q)| AlphaPoint {
            descriptor: format!("{a}/{q}"),
            alpha: PhaseReal::from_rational(ratio(a, q), bits),
        })
        .collect();
    for &(a, q) in &fracs {
        for d in &g.deltas {
            let (delta, tag) = match d {
                Delta::PerR(f) => (exact(*f) / params.r(), format!("{f}/R")),
                Delta::PerQq(f) => (
                    exact(*f) / (params.q() * BigRational::from_integer(q.into())),
                    format!("{f}/(qQ)"),
                ),
            };
            let v = ratio(a, q) + delta;
            let v = &v - v.floor();
            out.push(AlphaPoint {
                descriptor: format!("{a}/{q}{}{tag}", if d_sign(d) { "+" } else { "" }),
                alpha: PhaseReal::from_rational(v, bits),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in 0..g.uniform {
        let m: u64 = rng.gen();
        let v = BigRational::new(BigInt::from(m), BigInt::one() << 64usize);
        out.push(AlphaPoint {
            descriptor: format!("u{i}"),
            alpha: PhaseReal::from_rational(v, bits),
        });
    }
    out
}

fn d_sign(d: &Delta) -> bool {
    match d {
        Delta::PerR(f) | Delta::PerQq(f) => *f >= 0.0,
    }
}

fn exact(f: f64) -> BigRational {
    BigRational::from_float(f).unwrap_or_else(BigRational::zero)
}

fn ratio(a: u64, q: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(q))
}

struct Group {
    theta: f64,
    k: u32,
    y: f64,
    params: ArcParams,
    points: Vec<AlphaPoint>,
}

fn plan_groups(spec: &SweepSpec) -> Result<Vec<Group>> {
    let mut groups = Vec::new();
    for &theta in &spec.theta_list {
        let y = spec.y_for(theta);
        for &k in &spec.k_list {
            let params = arc_params(spec.x as f64, y, k, spec.c1)?;
            let iv = Interval::from_real(spec.x as f64, y)?;
            let bits = spec
                .prec_bits
                .unwrap_or_else(|| default_prec_bits(k, iv.last, params.q_f64()));
            let points = alpha_points(spec, &params, bits);
            groups.push(Group { theta, k, y, params, points });
        }
    }
    Ok(groups)
}

/// Estimated number of term evaluations: `2 y` per row, plus the character
/// sums for rows that may receive the bound.
pub fn estimate_cost(spec: &SweepSpec) -> Result<u64> {
    spec.validate()?;
    let mut total = 0f64;
    for &theta in &spec.theta_list {
        let y = spec.y_for(theta);
        let per_k = {
            let g = &spec.alpha_grid;
            let fracs: f64 = (1..=g.q_max).map(|q| crate::arith::euler_phi(q) as f64).sum();
            let rows = fracs * (1 + g.deltas.len()) as f64 + g.uniform as f64;
            let small = (1..=g.q_max.min(spec.lemma31_q_max))
                .map(|q| crate::arith::euler_phi(q) as f64 * q as f64 * crate::arith::tau(q) as f64)
                .sum::<f64>()
                * (1 + g.deltas.len()) as f64;
            (2.0 * rows + small) * (y + 1.0)
        };
        total += per_k * spec.k_list.len() as f64;
    }
    Ok(total.min(u64::MAX as f64) as u64)
}

/// Evaluate every `(theta, k, alpha)`; rows come out in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    let cost = estimate_cost(spec)?;
    if cost > spec.budget_terms {
        return Err(Error::Resource(format!(
            "sweep needs about {cost} terms, above the budget of {}",
            spec.budget_terms
        )));
    }
    let groups = plan_groups(spec)?;
    let mut segments: BTreeMap<u64, ArithSegment> = BTreeMap::new();
    for g in &groups {
        let iv = Interval::from_real(spec.x as f64, g.y)?;
        if let std::collections::btree_map::Entry::Vacant(e) = segments.entry(g.theta.to_bits()) {
            e.insert(sieve_segment(iv.first - 1, iv.len(), Fields::MU)?);
        }
    }
    let jobs: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(gi, g)| (0..g.points.len()).map(move |pi| (gi, pi)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(gi, pi)| {
            let g = &groups[gi];
            evaluate_row(spec, g, &g.points[pi], &segments[&g.theta.to_bits()])
        })
        .collect::<Result<_>>()?;
    let summary = groups
        .iter()
        .map(|g| summarize(g, rows.iter().filter(|r| r.theta == g.theta && r.k == g.k)))
        .collect();
    Ok(SweepReport {
        spec: spec.clone(),
        rows,
        summary,
    })
}

fn evaluate_row(spec: &SweepSpec, g: &Group, p: &AlphaPoint, seg: &ArithSegment) -> Result<SweepRow> {
    let x = spec.x as f64;
    let class = classify(&p.alpha, &g.params)?;
    let sk = mobius_expsum(x, g.y, g.k, &p.alpha, seg)?.sum;
    let weyl = weyl_sum(x, g.y, g.k, &p.alpha)?;
    let w = &class.witness;
    let small = match (w.q_u64(), w.a_i64()) {
        (Some(q), Some(a)) => Some((q, a)),
        _ => None,
    };
    let major = match small {
        Some((q, a)) => Some(major_arc_term(q, a, &p.alpha, x, g.y, g.k)?),
        None => None,
    };
    let l31 = match small {
        Some((q, a)) if q <= spec.lemma31_q_max => {
            Some(lemma31_rhs(x, g.y, g.k, q, a, &w.lambda_phase(), spec.eps)?)
        }
        _ => None,
    };
    let sk_abs = sk.norm();
    Ok(SweepRow {
        theta: g.theta,
        k: g.k,
        y: g.y,
        descriptor: p.descriptor.clone(),
        alpha: p.alpha.to_f64(),
        label: class.label,
        a: w.a.to_string(),
        q: w.q.to_string(),
        lambda: w.lambda_f64(),
        sk_re: sk.re,
        sk_im: sk.im,
        sk_abs,
        sk_over_y: sk_abs / g.y,
        major_arc_term: major,
        lemma31_rhs: l31,
        weyl_abs: weyl.abs(),
    })
}

fn summarize<'a>(g: &Group, rows: impl Iterator<Item = &'a SweepRow>) -> GroupSummary {
    let mut count = BTreeMap::new();
    let mut max_ratio: BTreeMap<ArcLabel, f64> = BTreeMap::new();
    let mut l31: Option<f64> = None;
    let mut major: Option<f64> = None;
    let mut overall = 0f64;
    let mut n = 0;
    let mut trivial = true;
    let upd = |slot: &mut Option<f64>, v: f64| {
        if slot.is_none_or(|s| v > s) {
            *slot = Some(v);
        }
    };
    for r in rows {
        n += 1;
        *count.entry(r.label).or_insert(0) += 1;
        let m = max_ratio.entry(r.label).or_insert(0.0);
        if r.sk_over_y > *m {
            *m = r.sk_over_y;
        }
        overall = overall.max(r.sk_over_y);
        trivial &= r.sk_over_y <= 1.0 + 2f64.powi(-30);
        if let Some(b) = r.lemma31_rhs.filter(|&b| b > 0.0) {
            upd(&mut l31, r.sk_abs / b);
        }
        if r.label != ArcLabel::C {
            if let Some(t) = r.major_arc_term.filter(|&t| t > 0.0) {
                upd(&mut major, r.sk_abs / t);
            }
        }
    }
    let ly = g.y.ln();
    GroupSummary {
        theta: g.theta,
        k: g.k,
        y: g.y,
        rows: n,
        count,
        max_sk_over_y: max_ratio,
        lemma31_constant: l31,
        major_arc_constant: major,
        decay: (1..=3)
            .map(|a| DecayPoint {
                a,
                scaled: overall * ly.powi(a as i32),
            })
            .collect(),
        trivial_bound_holds: trivial,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            _ => Err(Error::Argument(format!(
                "cannot infer report format from {}; use .csv or .json",
                path.display()
            ))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 16] = [
    "theta",
    "k",
    "y",
    "descriptor",
    "alpha",
    "label",
    "a",
    "q",
    "lambda",
    "sk_re",
    "sk_im",
    "sk_abs",
    "sk_over_y",
    "major_arc_term",
    "lemma31_rhs",
    "weyl_abs",
];

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            fmt_f64(r.theta),
            r.k.to_string(),
            fmt_f64(r.y),
            r.descriptor.clone(),
            fmt_f64(r.alpha),
            r.label.to_string(),
            r.a.clone(),
            r.q.clone(),
            fmt_f64(r.lambda),
            fmt_f64(r.sk_re),
            fmt_f64(r.sk_im),
            fmt_f64(r.sk_abs),
            fmt_f64(r.sk_over_y),
            fmt_opt(r.major_arc_term),
            fmt_opt(r.lemma31_rhs),
            fmt_f64(r.weyl_abs),
        ])
        .map_err(csv_err)?;
    }
    for s in &report.summary {
        let head = |name: &str| vec!["#summary".to_string(), fmt_f64(s.theta), s.k.to_string(), name.to_string()];
        for label in ArcLabel::ALL {
            let mut rec = head(&format!("max_sk_over_y_{label}"));
            rec.push(fmt_opt(s.max_sk_over_y.get(&label).copied()));
            w.write_record(rec).map_err(csv_err)?;
            let mut rec = head(&format!("count_{label}"));
            rec.push(s.count.get(&label).copied().unwrap_or(0).to_string());
            w.write_record(rec).map_err(csv_err)?;
        }
        let mut rec = head("lemma31_constant");
        rec.push(fmt_opt(s.lemma31_constant));
        w.write_record(rec).map_err(csv_err)?;
        let mut rec = head("major_arc_constant");
        rec.push(fmt_opt(s.major_arc_constant));
        w.write_record(rec).map_err(csv_err)?;
        for d in &s.decay {
            let mut rec = head(&format!("decay_A{}", d.a));
            rec.push(fmt_f64(d.scaled));
            w.write_record(rec).map_err(csv_err)?;
        }
        let mut rec = head("trivial_bound_holds");
        rec.push(s.trivial_bound_holds.to_string());
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse the data rows of a CSV report (trailer rows are skipped).
pub fn read_csv_rows<R: std::io::Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let bad = |what: &str| Error::Argument(format!("malformed report field {what}"));
    let f = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
    let opt = |s: &str, what: &str| if s.is_empty() { Ok(None) } else { f(s, what).map(Some) };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Io(std::io::Error::other(e)))?;
        if rec.get(0).is_some_and(|c| c.starts_with('#')) {
            continue;
        }
        if rec.len() != CSV_COLUMNS.len() {
            return Err(bad("count"));
        }
        let label = match &rec[5] {
            "A" => ArcLabel::A,
            "B" => ArcLabel::B,
            "C" => ArcLabel::C,
            _ => return Err(bad("label")),
        };
        rows.push(SweepRow {
            theta: f(&rec[0], "theta")?,
            k: rec[1].parse().map_err(|_| bad("k"))?,
            y: f(&rec[2], "y")?,
            descriptor: rec[3].to_string(),
            alpha: f(&rec[4], "alpha")?,
            label,
            a: rec[6].to_string(),
            q: rec[7].to_string(),
            lambda: f(&rec[8], "lambda")?,
            sk_re: f(&rec[9], "sk_re")?,
            sk_im: f(&rec[10], "sk_im")?,
            sk_abs: f(&rec[11], "sk_abs")?,
            sk_over_y: f(&rec[12], "sk_over_y")?,
            major_arc_term: opt(&rec[13], "major_arc_term")?,
            lemma31_rhs: opt(&rec[14], "lemma31_rhs")?,
            weyl_abs: f(&rec[15], "weyl_abs")?,
        });
    }
    Ok(rows)
}

pub fn write_json<W: Write>(report: &SweepReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Write `report` to `path` as CSV or JSON.
pub fn emit(report: &SweepReport, format: Format, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        Format::Csv => write_csv(report, file),
        Format::Json => write_json(report, file),
    }
}

/// Which side of the minor / major dichotomy a Weyl sum sits on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma38Record {
    pub x: f64,
    pub y: f64,
    pub k: u32,
    pub gamma: f64,
    pub rho: f64,
    pub sigma_k: f64,
    /// `0 < rho <= sigma_k / gamma`.
    pub rho_ok: bool,
    /// `y >= x^(gamma / (2 gamma - sigma_k - 1))`.
    pub range_ok: bool,
    pub weyl_abs: f64,
    /// `y^(1 - rho)`.
    pub minor_reference: f64,
    /// `(a, q)` with `1 <= q <= y^(k rho)`, `|q alpha - a| <= x^(1-k) y^(k rho - 1)`.
    pub window_a: Option<String>,
    pub window_q: Option<String>,
    /// `w_k(q) y / (1 + y x^(k-1) |alpha - a/q|)` for the window fraction.
    pub major_term: Option<f64>,
    pub branch: String,
    /// `|weyl| / (reference of the dominant branch)`.
    pub ratio: f64,
}

pub fn lemma38_dichotomy_report(
    x: f64,
    y: f64,
    k: u32,
    alpha: &PhaseReal,
    gamma: f64,
    rho: f64,
) -> Result<Lemma38Record> {
    if k < 3 {
        return Err(Error::Argument(format!("k = {k} must be at least 3")));
    }
    let sigma = 1.0 / (2.0 * k as f64 * (k as f64 - 1.0));
    let rho_ok = rho > 0.0 && rho <= sigma / gamma;
    let range_ok = y >= x.powf(gamma / (2.0 * gamma - sigma - 1.0));
    let weyl = weyl_sum(x, y, k, alpha)?.abs();
    let minor_reference = y.powf(1.0 - rho);

    let q_lim = y.powf(k as f64 * rho).floor();
    let tol = x.powf(1.0 - k as f64) * y.powf(k as f64 * rho - 1.0);
    let mut window = None;
    if q_lim >= 1.0 {
        let tol_r = exact(tol);
        let v = alpha.value();
        for (_, q) in convergents(alpha, &BigInt::from(q_lim as u64))? {
            let qa = v * BigRational::from_integer(q.clone());
            let a = (&qa + BigRational::new(1.into(), 2.into())).floor().to_integer();
            if (qa - BigRational::from_integer(a.clone())).abs() <= tol_r {
                window = Some((a, q));
                break;
            }
        }
    }
    let (window_a, window_q, major_term) = match &window {
        Some((a, q)) => {
            let qq = q.to_u64().ok_or_else(|| Error::Resource("window q beyond 64 bits".into()))?;
            let w = w_k(qq, k)?.value;
            let lam = rational_to_f64(&(alpha.value() - BigRational::new(a.clone(), q.clone()))).abs();
            let t = w * y / (1.0 + y * x.powi(k as i32 - 1) * lam);
            (Some(a.to_string()), Some(q.to_string()), Some(t))
        }
        None => (None, None, None),
    };
    let (branch, reference) = match major_term {
        Some(t) if t >= minor_reference => ("major", t),
        _ => ("minor", minor_reference),
    };
    Ok(Lemma38Record {
        x,
        y,
        k,
        gamma,
        rho,
        sigma_k: sigma,
        rho_ok,
        range_ok,
        weyl_abs: weyl,
        minor_reference,
        window_a,
        window_q,
        major_term,
        branch: branch.to_string(),
        ratio: weyl / reference,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma37Record {
    #[serde(rename = "N")]
    pub n: u64,
    pub q: u64,
    /// Shift `h` for the second sum; `None` for the first.
    pub h: Option<u64>,
    pub lhs: f64,
    pub wk: f64,
    /// `lhs / (w_k(q) N)`.
    pub ratio: f64,
    pub log_n: f64,
}

/// `sum_{n ~ N} tau^c(n) w_k(q / (q, n^j))` against `w_k(q) N`.
pub fn lemma37_ratio_report(n_list: &[u64], q_list: &[u64], j: u32, k: u32, c: u32) -> Result<Vec<Lemma37Record>> {
    let mut out = Vec::new();
    for &q in q_list {
        let wk = w_k(q, k)?.value;
        for &n in n_list {
            let lhs = wk_sum_lemma37(n, q, j, k, c)?;
            out.push(record37(n, q, None, lhs, wk));
        }
    }
    Ok(out)
}

/// The shifted sum with `w_k(q / (q, R(n, h)))` against `w_k(q) N`.
pub fn lemma37_shift_ratio_report(
    n_list: &[u64],
    h: u64,
    q_list: &[u64],
    k: u32,
    c: u32,
) -> Result<Vec<Lemma37Record>> {
    let mut out = Vec::new();
    for &q in q_list {
        let wk = w_k(q, k)?.value;
        for &n in n_list {
            let lhs = wk_shift_sum_lemma37(n, h, q, k, c)?;
            out.push(record37(n, q, Some(h), lhs, wk));
        }
    }
    Ok(out)
}

fn record37(n: u64, q: u64, h: Option<u64>, lhs: f64, wk: f64) -> Lemma37Record {
    Lemma37Record {
        n,
        q,
        h,
        lhs,
        wk,
        ratio: if n == 0 { 0.0 } else { lhs / (wk * n as f64) },
        log_n: (n.max(1) as f64).ln(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::tau;

    fn tiny_spec() -> SweepSpec {
        let mut s = SweepSpec::new(10_000, vec![0.9], vec![3]);
        s.alpha_grid = AlphaGrid {
            uniform: 5,
            q_max: 3,
            deltas: vec![Delta::PerR(1.0), Delta::PerQq(-1.0)],
        };
        s
    }

    #[test]
    fn zero_only_grid() {
        let mut s = SweepSpec::new(10_000, vec![0.9], vec![3]);
        s.alpha_grid = AlphaGrid {
            uniform: 0,
            q_max: 1,
            deltas: vec![],
        };
        let r = run_sweep(&s).unwrap();
        assert_eq!(r.rows.len(), 1);
        let row = &r.rows[0];
        assert_eq!(row.label, ArcLabel::A);
        let iv = Interval::from_real(10_000.0, s.y_for(0.9)).unwrap();
        let seg = sieve_segment(iv.first - 1, iv.len(), Fields::MU).unwrap();
        let m: i64 = seg.mu.unwrap().iter().map(|&v| v as i64).sum();
        assert_eq!(row.sk_abs, (m as f64).abs());
        assert_eq!(row.weyl_abs, iv.len() as f64);
    }

    #[test]
    fn rows_match_direct_evaluation() {
        let s = tiny_spec();
        let r = run_sweep(&s).unwrap();
        // 4 fractions, 2 deltas each, 5 uniform
        assert_eq!(r.rows.len(), 4 + 8 + 5);
        let y = s.y_for(0.9);
        let params = arc_params(10_000.0, y, 3, s.c1).unwrap();
        let iv = Interval::from_real(10_000.0, y).unwrap();
        let seg = sieve_segment(iv.first - 1, iv.len(), Fields::MU).unwrap();
        let bits = default_prec_bits(3, iv.last, params.q_f64());
        let pts = alpha_points(&s, &params, bits);
        for (row, p) in r.rows.iter().zip(&pts) {
            assert_eq!(row.descriptor, p.descriptor);
            let direct = mobius_expsum(10_000.0, y, 3, &p.alpha, &seg).unwrap();
            assert_eq!(row.sk_abs, direct.abs());
            assert_eq!(row.label, classify(&p.alpha, &params).unwrap().label);
            assert!(row.sk_over_y <= 1.0 + 2f64.powi(-30));
        }
        assert_eq!(r.rows[2].descriptor, "1/3");
        assert!(r.rows[2].lemma31_rhs.is_some());
        assert!(r.summary[0].trivial_bound_holds);
    }

    #[test]
    fn deterministic_bytes() {
        let s = tiny_spec();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&run_sweep(&s).unwrap(), &mut a).unwrap();
        write_csv(&run_sweep(&s).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let mut ja = Vec::new();
        write_json(&run_sweep(&s).unwrap(), &mut ja).unwrap();
        let back: SweepReport = serde_json::from_slice(&ja).unwrap();
        assert_eq!(back, run_sweep(&s).unwrap());
    }

    #[test]
    fn csv_round_trip_and_empty() {
        let s = tiny_spec();
        let rep = run_sweep(&s).unwrap();
        let one = SweepReport {
            spec: s.clone(),
            rows: rep.rows[..1].to_vec(),
            summary: vec![],
        };
        let mut buf = Vec::new();
        write_csv(&one, &mut buf).unwrap();
        assert_eq!(read_csv_rows(&buf[..]).unwrap(), one.rows);

        let empty = SweepReport {
            spec: s,
            rows: vec![],
            summary: vec![],
        };
        let mut buf = Vec::new();
        write_csv(&empty, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn budget_checked_first() {
        let mut s = tiny_spec();
        s.budget_terms = 1000;
        assert!(matches!(run_sweep(&s), Err(Error::Resource(_))));
        s.theta_list = vec![0.7];
        assert!(matches!(run_sweep(&s), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn spec_json_defaults() {
        let s: SweepSpec = serde_json::from_str(r#"{"x": 100000, "theta_list": [0.8], "k_list": [3]}"#).unwrap();
        assert_eq!(s.alpha_grid, AlphaGrid::default());
        assert_eq!(s.c1, 1.0);
        let s: SweepSpec = serde_json::from_str(
            r#"{"x": 1000, "theta_list": [0.9], "k_list": [3],
                "alpha_grid": {"uniform": 2, "q_max": 2, "deltas": [{"per_r": -2.0}]}}"#,
        )
        .unwrap();
        assert_eq!(s.alpha_grid.deltas, vec![Delta::PerR(-2.0)]);
    }

    #[test]
    fn lemma38_examples() {
        let r = lemma38_dichotomy_report(10_000.0, 3000.0, 3, &PhaseReal::zero(), 4.0, 1.0 / 48.0).unwrap();
        assert_eq!(r.branch, "major");
        assert_eq!(r.window_q.as_deref(), Some("1"));
        assert_eq!(r.major_term, Some(3000.0));
        assert_eq!(r.ratio, 1.0);
        assert!(r.rho_ok);

        // 3000^(3/48) = 1.65: only q = 1 is admissible, so 1/3 has no window
        let r = lemma38_dichotomy_report(10_000.0, 3000.0, 3, &PhaseReal::from_ratio(1, 3), 4.0, 1.0 / 48.0)
            .unwrap();
        assert_eq!(r.branch, "minor");
        assert!(r.window_q.is_none());

        // larger rho widens the window to q = 3
        let r = lemma38_dichotomy_report(10_000.0, 3000.0, 3, &PhaseReal::from_ratio(1, 3), 1.0, 0.2).unwrap();
        assert_eq!(r.window_q.as_deref(), Some("3"));
        assert!(!r.rho_ok);
        let w = w_k(3, 3).unwrap().value;
        assert_eq!(r.major_term, Some(w * 3000.0));

        let g = PhaseReal::golden_frac(192);
        let r = lemma38_dichotomy_report(10_000.0, 3000.0, 3, &g, 4.0, 1.0 / 48.0).unwrap();
        assert_eq!(r.branch, "minor");
        assert!((r.ratio - r.weyl_abs / 3000f64.powf(1.0 - 1.0 / 48.0)).abs() < 1e-15);
    }

    #[test]
    fn lemma37_examples() {
        let r = lemma37_ratio_report(&[100], &[1], 1, 3, 1).unwrap();
        let want: u64 = (101..=200).map(tau).sum();
        assert_eq!(r[0].ratio, want as f64 / 100.0);

        let r = lemma37_ratio_report(&[100, 1000, 10_000], &[8], 3, 3, 1).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r[0].ratio < r[1].ratio && r[1].ratio < r[2].ratio, "{r:?}");

        let r = lemma37_shift_ratio_report(&[100, 1000], 2, &[8], 3, 1).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].h, Some(2));
        assert!(r.iter().all(|x| x.lhs > 0.0));
    }
}

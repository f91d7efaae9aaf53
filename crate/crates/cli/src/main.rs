//! `moblab`: command-line front end for the moblab-core kernels.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use moblab_core::approx::{arc_params, classify, default_c1, ArcReport};
use moblab_core::baseline::Baselines;
use moblab_core::characters::{characters_mod, lemma31_report};
use moblab_core::config::GlobalConfig;
use moblab_core::kernel::{
    gauss_sum, mobius_expsum, set_budget_terms, w_k, weyl_sum, ExpSumResult, Interval,
};
use moblab_core::sieve::{sieve_segment, Fields};
use moblab_core::sweep::{emit, run_sweep, Format as ReportFormat, SweepSpec};
use moblab_core::vaughan::{make_plan, reconstruct, Thresholds};
use moblab_core::{Error, PhaseReal};

#[derive(Parser, Debug)]
#[command(name = "moblab", version, about = "Möbius-twisted exponential sums in short intervals")]
struct Cli {
    /// GlobalConfig file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Emit {
    Mu,
    Lambda,
    Tau,
}

#[derive(Args, Debug)]
struct SumArgs {
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long)]
    k: u32,
    /// Decimal (taken exactly) or a fraction `a/q`.
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long)]
    prec_bits: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// mu, Lambda or tau on (x, x + y].
    Sieve {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        y: u64,
        #[arg(long, value_enum, default_value_t = Emit::Mu)]
        emit: Emit,
    },
    /// Arc label and Dirichlet witness of alpha.
    Classify {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        prec_bits: Option<u32>,
    },
    /// sum e(n^k alpha) over x < n <= x + y.
    Weyl(SumArgs),
    /// sum mu(n) e(n^k alpha) over x < n <= x + y.
    MobiusSum(SumArgs),
    /// Complete sum S(q, a) = sum_{x mod q} e(a x^k / q).
    Gauss {
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long)]
        k: u32,
    },
    /// The multiplicative weight w_k(q).
    Wk {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        k: u32,
    },
    /// Dirichlet characters modulo q.
    Characters {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        list_primitive: bool,
    },
    /// Character-sum bound for alpha = a/q + lambda.
    Lemma31 {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        lambda: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        prec_bits: Option<u32>,
    },
    /// Exponents and thresholds U, V of the decomposition.
    Plan {
        #[arg(long)]
        x: f64,
        #[arg(long, conflicts_with = "y_theta", required_unless_present = "y_theta")]
        y: Option<f64>,
        /// Take y = x^theta.
        #[arg(long)]
        y_theta: Option<f64>,
        #[arg(long)]
        k: u32,
    },
    /// Evaluate -S_1 + S_2 and compare with the direct sum.
    Reconstruct {
        #[command(flatten)]
        sum: SumArgs,
        #[arg(long = "U")]
        u: Option<f64>,
        #[arg(long = "V")]
        v: Option<f64>,
    },
    /// Run a sweep described by a JSON spec.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Report path; `.csv` or `.json`.
        #[arg(long)]
        out: PathBuf,
        /// Compare per-class maxima with a baseline file.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Resource(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("moblab: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<GlobalConfig, Error> {
    let cfg = match path {
        Some(p) => GlobalConfig::load(p)?,
        None => GlobalConfig::default(),
    };
    let cfg = cfg.with_env()?;
    set_budget_terms(cfg.budget_terms);
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String, Error> {
    let cfg = load_config(cli.config.as_ref())?;
    let value = match cli.command {
        Command::Sieve { x, y, emit } => return sieve(x, y, emit, cli.format),
        Command::Classify { x, y, k, c1, alpha, prec_bits } => {
            let c1 = c1.or(cfg.c1).unwrap_or_else(|| default_c1(k));
            let params = arc_params(x, y, k, c1)?;
            let iv = Interval::from_real(x, y)?;
            let bits = prec_bits.unwrap_or_else(|| cfg.prec_for(k, iv.last, params.q_f64()));
            let alpha = PhaseReal::parse(&alpha, bits)?;
            to_value(&ArcReport::new(&classify(&alpha, &params)?, &params))?
        }
        Command::Weyl(a) => {
            let alpha = sum_alpha(&a, &cfg)?;
            sum_value(weyl_sum(a.x, a.y, a.k, &alpha)?)
        }
        Command::MobiusSum(a) => {
            let alpha = sum_alpha(&a, &cfg)?;
            let iv = Interval::from_real(a.x, a.y)?;
            if iv.is_empty() {
                sum_value(weyl_sum(a.x, a.y, a.k, &alpha)?)
            } else {
                let seg = sieve_segment(iv.first - 1, iv.len(), Fields::MU)?;
                sum_value(mobius_expsum(a.x, a.y, a.k, &alpha, &seg)?)
            }
        }
        Command::Gauss { q, a, k } => {
            let s = gauss_sum(q, a, k)?;
            json!({"re": s.re, "im": s.im, "abs": s.norm(), "q": q, "a": a, "k": k})
        }
        Command::Wk { q, k } => to_value(&w_k(q, k)?)?,
        Command::Characters { q, list_primitive } => {
            let t = characters_mod(q)?;
            let chars: Vec<_> = if list_primitive {
                t.primitive().map(|c| c.info()).collect()
            } else {
                t.info()
            };
            json!({
                "q": q,
                "count": t.len(),
                "primitive_count": t.primitive().count(),
                "exponent": t.exponent(),
                "generator_orders": t.generator_orders(),
                "characters": chars,
            })
        }
        Command::Lemma31 { x, y, k, q, a, lambda, eps, prec_bits } => {
            let iv = Interval::from_real(x, y)?;
            let bits = prec_bits.unwrap_or_else(|| cfg.prec_for(k, iv.last, 2.0));
            let lambda = PhaseReal::parse(&lambda, bits)?;
            to_value(&lemma31_report(x, y, k, q, a, &lambda, eps.unwrap_or(cfg.eps))?)?
        }
        Command::Plan { x, y, y_theta, k } => {
            let y = match (y, y_theta) {
                (Some(y), _) => y,
                (None, Some(t)) => x.powf(t),
                (None, None) => unreachable!("clap requires --y or --y-theta"),
            };
            to_value(&make_plan(x, y, k)?)?
        }
        Command::Reconstruct { sum, u, v } => {
            let alpha = sum_alpha(&sum, &cfg)?;
            let th = match (u, v) {
                (Some(u), Some(v)) => Thresholds::new(u, v)?,
                (None, None) => make_plan(sum.x, sum.y, sum.k)?.thresholds(),
                _ => return Err(Error::Argument("give both --U and --V, or neither".into())),
            };
            to_value(&reconstruct(sum.x, sum.y, sum.k, &alpha, th)?)?
        }
        Command::Sweep { spec, out, baseline } => {
            let text = std::fs::read_to_string(&spec)?;
            let mut spec: SweepSpec = serde_json::from_str(&text)?;
            if spec.prec_bits.is_none() {
                spec.prec_bits = cfg.prec_bits;
            }
            let fmt = ReportFormat::from_path(&out)?;
            let report = run_sweep(&spec)?;
            emit(&report, fmt, &out)?;
            let mut v = json!({
                "out": out.display().to_string(),
                "rows": report.rows.len(),
                "summary": report.summary,
            });
            if let Some(path) = baseline {
                v["baseline"] = compare_baseline(&report, &Baselines::load(&path)?);
            }
            v
        }
    };
    render(&value, cli.format)
}

fn compare_baseline(report: &moblab_core::sweep::SweepReport, base: &Baselines) -> Value {
    let d = &base.decay;
    let group = report
        .summary
        .iter()
        .find(|g| report.spec.x == d.x && g.theta == d.theta && g.k == d.k);
    match group {
        None => json!({"compared": false}),
        Some(g) => {
            let diffs: Map<String, Value> = d
                .max_sk_over_y
                .iter()
                .map(|(l, want)| {
                    let got = g.max_sk_over_y.get(l).copied();
                    (l.to_string(), json!({"baseline": want, "observed": got}))
                })
                .collect();
            let matches = g.max_sk_over_y.len() == d.max_sk_over_y.len()
                && d.max_sk_over_y
                    .iter()
                    .all(|(l, w)| g.max_sk_over_y.get(l).is_some_and(|v| (v - w).abs() <= 1e-12));
            json!({"compared": true, "matches": matches, "max_sk_over_y": diffs})
        }
    }
}

fn sum_alpha(a: &SumArgs, cfg: &GlobalConfig) -> Result<PhaseReal, Error> {
    let iv = Interval::from_real(a.x, a.y)?;
    let bits = a.prec_bits.unwrap_or_else(|| cfg.prec_for(a.k, iv.last.max(1), 2.0));
    PhaseReal::parse(&a.alpha, bits)
}

fn sum_value(r: ExpSumResult) -> Value {
    json!({
        "re": r.sum.re,
        "im": r.sum.im,
        "abs": r.abs(),
        "n_terms": r.n_terms,
        "err_bound": r.err_bound,
    })
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, Error> {
    Ok(serde_json::to_value(v)?)
}

fn render(v: &Value, format: OutFormat) -> Result<String, Error> {
    match format {
        OutFormat::Json => Ok(format!("{}\n", serde_json::to_string_pretty(v)?)),
        OutFormat::Csv => {
            // top-level scalars as a header line and a value line
            let Value::Object(map) = v else {
                return Err(Error::Argument("output is not a record".into()));
            };
            let fields: Vec<(&String, String)> = map
                .iter()
                .filter_map(|(k, v)| match v {
                    Value::String(s) => Some((k, s.clone())),
                    Value::Number(_) | Value::Bool(_) => Some((k, v.to_string())),
                    Value::Null => Some((k, String::new())),
                    _ => None,
                })
                .collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(fields.iter().map(|f| f.0.as_str())).map_err(csv_err)?;
            w.write_record(fields.iter().map(|f| f.1.as_str())).map_err(csv_err)?;
            finish_csv(w)
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Argument(format!("csv: {e}"))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, Error> {
    let bytes = w.into_inner().map_err(|e| Error::Argument(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Argument(e.to_string()))
}

fn sieve(x: u64, y: u64, emit: Emit, format: OutFormat) -> Result<String, Error> {
    let field = match emit {
        Emit::Mu => Fields::MU,
        Emit::Lambda => Fields::LAMBDA,
        Emit::Tau => Fields::TAU,
    };
    let seg = sieve_segment(x, y, field)?;
    let values: Vec<Value> = (0..y as usize)
        .map(|i| match emit {
            Emit::Mu => json!(seg.mu.as_ref().unwrap()[i]),
            Emit::Lambda => json!(seg.lambda_vals.as_ref().unwrap()[i]),
            Emit::Tau => json!(seg.tau.as_ref().unwrap()[i]),
        })
        .collect();
    match format {
        OutFormat::Json => {
            let rows: Vec<Value> = values
                .iter()
                .enumerate()
                .map(|(i, v)| json!({"n": seg.n_at(i), "value": v}))
                .collect();
            let name = format!("{emit:?}").to_lowercase();
            Ok(format!(
                "{}\n",
                serde_json::to_string_pretty(&json!({"x": x, "y": y, "emit": name, "values": rows}))?
            ))
        }
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["n", "value"]).map_err(csv_err)?;
            for (i, v) in values.iter().enumerate() {
                w.write_record([seg.n_at(i).to_string(), v.to_string()]).map_err(csv_err)?;
            }
            finish_csv(w)
        }
    }
}

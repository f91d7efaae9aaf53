//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any criterion fails.
//!
//! `cargo test -p moblab-core --test acceptance`

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use moblab_core::approx::{arc_params, classify, ArcLabel, ArcParams};
use moblab_core::baseline::{decay_spec, default_path, Baselines};
use moblab_core::characters::characters_mod;
use moblab_core::kernel::{gauss_sum, w_k, weyl_sum, GaussSumTable};
use moblab_core::sieve::{sieve_segment, Fields};
use moblab_core::sweep::run_sweep;
use moblab_core::vaughan::{
    make_plan, reconstruct, reconstruction_tolerance, vaughan_identity_check,
};
use moblab_core::PhaseReal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ratio(a: i64, q: i64) -> BigRational {
    BigRational::new(a.into(), q.into())
}

fn e(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * t)
}

// 1. Vaughan identity, integer arithmetic, n in (max(U, V), 10^4].
fn vaughan_lattice() -> Outcome {
    let grid = [1.0f64, 2.0, 5.0, 10.0, 30.0];
    let mut checked = 0u64;
    let mut bad = Vec::new();
    for &u in &grid {
        for &v in &grid {
            let start = u.max(v) as u64 + 1;
            for n in start..=10_000 {
                checked += 1;
                match vaughan_identity_check(n, u, v) {
                    Ok(true) => {}
                    other => bad.push(format!("n={n} U={u} V={v}: {other:?}")),
                }
            }
        }
    }
    ok(bad.is_empty(), format!("{checked} (n, U, V) checked, {} failures {:?}", bad.len(), bad.first()))
}

// 2. -S_1 + S_2 = S_k within y 2^-30.
fn reconstruction() -> Outcome {
    let bits = 256;
    let alphas: Vec<(&str, PhaseReal)> = vec![
        ("0", PhaseReal::zero()),
        ("1/3", PhaseReal::from_ratio(1, 3)),
        ("5/17", PhaseReal::from_ratio(5, 17)),
        ("sqrt2-1", PhaseReal::sqrt_frac(2, bits)),
        ("golden", PhaseReal::golden_frac(bits)),
    ];
    let mut configs = Vec::new();
    for &x in &[1e3, 1e4, 1e6] {
        for &theta in &[0.8, 0.9, 1.0] {
            for &k in &[3u32, 4, 5] {
                configs.push((x, theta, k));
            }
        }
    }
    let jobs: Vec<_> = configs
        .iter()
        .flat_map(|c| alphas.iter().map(move |a| (*c, a)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&((x, theta, k), (name, alpha))| {
            let y = if theta == 1.0 { x } else { f64::powf(x, theta).floor() };
            let res = make_plan(x, y, k).and_then(|p| reconstruct(x, y, k, alpha, p.thresholds()));
            match res {
                Ok(r) => {
                    let pass = r.residual <= reconstruction_tolerance(y);
                    (pass, r.residual / y, format!("x={x} theta={theta} k={k} alpha={name}"))
                }
                Err(err) => (false, f64::INFINITY, format!("x={x} theta={theta} k={k} alpha={name}: {err}")),
            }
        })
        .collect();
    let failures: Vec<_> = results.iter().filter(|r| !r.0).map(|r| r.2.clone()).collect();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    ok(
        failures.is_empty(),
        format!(
            "{} configurations x {} alphas, max residual/y = {worst:.3e} (tol 2^-30 = {:.3e}) {:?}",
            configs.len(),
            alphas.len(),
            2f64.powi(-30),
            failures.first()
        ),
    )
}

/// The arc inequalities, written out again from the witness.
fn label_holds(label: ArcLabel, q: &BigInt, lambda: &BigRational, p: &ArcParams) -> bool {
    let q = BigRational::from_integer(q.clone());
    let lam = lambda.abs();
    let a = q <= *p.p() && &lam * p.r() <= BigRational::one();
    let b = q <= *p.p() && !a && &lam * &q * p.q() <= BigRational::one();
    let c = q > *p.p() && q <= *p.q() && &lam * &q * p.q() <= BigRational::one();
    match label {
        ArcLabel::A => a && !b && !c,
        ArcLabel::B => b && !a && !c,
        ArcLabel::C => c && !a && !b,
    }
}

// 3. Every test alpha gets exactly one label whose inequalities hold.
fn arc_partition() -> Outcome {
    let params = match arc_params(1e6, 1e5, 3, 1.0) {
        Ok(p) => p,
        Err(err) => return ok(false, err.to_string()),
    };
    let bits = 192;
    let mut alphas: Vec<PhaseReal> = Vec::new();
    for q in 1..=50i64 {
        for a in 0..=q {
            if a.gcd(&q) == 1 {
                alphas.push(PhaseReal::from_rational(ratio(a, q), bits));
            }
        }
    }
    let n_rational = alphas.len();
    // boundary straddlers around small-denominator rationals
    let r = params.r().clone();
    let big_q = params.q().clone();
    let mut i = 0i64;
    'outer: for q in 1..=12i64 {
        for a in 1..q {
            if a.gcd(&q) != 1 {
                continue;
            }
            let base = ratio(a, q);
            let qq = &big_q * BigRational::from_integer(q.into());
            let edges = [r.recip(), qq.recip()];
            for edge in &edges {
                for scale in [ratio(1, 1), ratio(99, 100), ratio(101, 100), ratio(1, 2), ratio(2, 1)] {
                    for sign in [1i64, -1] {
                        let v = &base + edge * &scale * BigRational::from_integer(sign.into());
                        if v.is_negative() || v > BigRational::one() {
                            continue;
                        }
                        alphas.push(PhaseReal::from_rational(v, bits));
                        i += 1;
                        if i >= 2000 {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    while alphas.len() < 10_000 {
        let m: u64 = rng.gen();
        alphas.push(PhaseReal::from_rational(
            BigRational::new(m.into(), BigInt::one() << 64),
            bits,
        ));
    }
    let mut counts = [0usize; 3];
    let mut bad = Vec::new();
    for alpha in &alphas {
        match classify(alpha, &params) {
            Ok(c) => {
                counts[c.label.index()] += 1;
                if !label_holds(c.label, &c.witness.q, &c.witness.lambda, &params)
                    || (alpha.value() - &c.witness.lambda) * BigRational::from_integer(c.witness.q.clone())
                        != BigRational::from_integer(c.witness.a.clone())
                {
                    bad.push(format!("alpha={alpha}: {:?}", c.label));
                }
            }
            Err(err) => bad.push(format!("alpha={alpha}: {err}")),
        }
    }
    ok(
        bad.is_empty() && alphas.len() == 10_000,
        format!(
            "{} alphas ({n_rational} rationals q<=50), A/B/C = {:?}, {} violations {:?}",
            alphas.len(),
            counts,
            bad.len(),
            bad.first()
        ),
    )
}

// 4. Full-period Weyl sums equal Gauss sums; Gauss ratio under the baseline.
fn gauss_identities(baselines: &Baselines) -> Outcome {
    let worst: Vec<(f64, u64, u32)> = (1..=500u64)
        .into_par_iter()
        .flat_map_iter(|q| [3u32, 4].into_iter().map(move |k| (q, k)))
        .map(|(q, k)| {
            let mut worst = 0f64;
            for a in 0..q {
                if a.gcd(&q) != 1 {
                    continue;
                }
                let alpha = PhaseReal::from_ratio(a as i64, q);
                let w = weyl_sum(0.0, q as f64, k, &alpha).map(|r| r.sum);
                let g = gauss_sum(q, a as i64, k);
                let d = match (w, g) {
                    (Ok(w), Ok(g)) => (w - g).norm() / q as f64,
                    _ => f64::INFINITY,
                };
                worst = worst.max(d);
            }
            (worst, q, k)
        })
        .collect();
    let max_diff = worst.iter().map(|w| w.0).fold(0.0, f64::max);
    let identity = max_diff <= 1e-9;

    let q_max = 2000u64;
    let over: Vec<(u64, u32, f64)> = (1..=q_max)
        .into_par_iter()
        .flat_map_iter(|q| [3u32, 4].into_iter().map(move |k| (q, k)))
        .filter_map(|(q, k)| {
            let limit = *baselines.gauss_ratio_max.get(&k)?;
            let table = GaussSumTable::new(q, k).ok()?;
            let scale = q as f64 * w_k(q, k).ok()?.value;
            (1..=q)
                .filter(|a| a.gcd(&q) == 1)
                .map(|a| table.eval(a as i64).map(|s| s.norm()).unwrap_or(f64::INFINITY))
                .find(|s| *s > limit * scale)
                .map(|s| (q, k, s / scale))
        })
        .collect();
    let have_baseline = [3, 4].iter().all(|k| baselines.gauss_ratio_max.contains_key(k))
        && baselines.gauss_q_max >= q_max;
    ok(
        identity && over.is_empty() && have_baseline,
        format!(
            "max |weyl - gauss|/q = {max_diff:.3e} (tol 1e-9) over q<=500; ratio bound {:?} for q<=2000, {} exceedances {:?}",
            baselines.gauss_ratio_max,
            over.len(),
            over.first()
        ),
    )
}

/// Exact value of `sum_t e(t / order)` over a histogram of exponents, when the
/// histogram is uniform on a subgroup (the only shape a character sum takes).
fn subgroup_sum(hist: &[u64]) -> Option<u64> {
    let n: u64 = hist.iter().sum();
    if hist[0] == n {
        return Some(n);
    }
    let e = hist.len();
    let step = (1..e).find(|&t| hist[t] > 0)?.gcd(&e);
    let uniform = (0..e).all(|t| hist[t] == if t % step == 0 { hist[0] } else { 0 });
    uniform.then_some(0)
}

// 5. Orthogonality in both directions and the primitive count.
fn character_orthogonality() -> Outcome {
    let failures: Vec<String> = (1..=200u64)
        .into_par_iter()
        .filter_map(|q| {
            let t = match characters_mod(q) {
                Ok(t) => t,
                Err(err) => return Some(format!("q={q}: {err}")),
            };
            let order = t.exponent() as usize;
            let units: Vec<u64> = (1..=q).filter(|n| n.gcd(&q) == 1).collect();
            let phi = units.len() as u64;
            let exps: Vec<Vec<usize>> = (0..t.len())
                .map(|i| units.iter().map(|&n| t.exponent_at(i, n).unwrap() as usize).collect())
                .collect();
            if t.len() as u64 != phi {
                return Some(format!("q={q}: {} characters, phi = {phi}", t.len()));
            }
            let mut hist = vec![0u64; order];
            // sum_n chi(n) conj(psi(n)) = phi [chi = psi]
            for i in 0..exps.len() {
                for j in 0..exps.len() {
                    hist.iter_mut().for_each(|h| *h = 0);
                    for (a, b) in exps[i].iter().zip(&exps[j]) {
                        hist[(a + order - b) % order] += 1;
                    }
                    let want = if i == j { phi } else { 0 };
                    if subgroup_sum(&hist) != Some(want) {
                        return Some(format!("q={q}: rows {i}, {j}"));
                    }
                }
            }
            // sum_chi chi(m) conj(chi(n)) = phi [m = n]
            for m in 0..units.len() {
                for n in 0..units.len() {
                    hist.iter_mut().for_each(|h| *h = 0);
                    for row in &exps {
                        hist[(row[m] + order - row[n]) % order] += 1;
                    }
                    let want = if m == n { phi } else { 0 };
                    if subgroup_sum(&hist) != Some(want) {
                        return Some(format!("q={q}: columns {}, {}", units[m], units[n]));
                    }
                }
            }
            let expected: i64 = (1..=q)
                .filter(|d| q % d == 0)
                .map(|d| mobius(d) * totient(q / d) as i64)
                .sum();
            let got = t.primitive().count() as i64;
            (got != expected).then(|| format!("q={q}: {got} primitive, expected {expected}"))
        })
        .collect();
    ok(
        failures.is_empty(),
        format!("q<=200, {} failures {:?}", failures.len(), failures.first()),
    )
}

fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn mobius(n: u64) -> i64 {
    let f = trial_factor(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn totient(n: u64) -> u64 {
    trial_factor(n).iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

// 6. Sieve against trial division; square-free density.
fn sieve_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ns: Vec<u64> = (0..10_000).map(|_| rng.gen_range(1..=1_000_000_000u64)).collect();
    let want = Fields::MU | Fields::LAMBDA | Fields::TAU;
    let bad: Vec<String> = ns
        .par_iter()
        .filter_map(|&n| {
            let seg = match sieve_segment(n - 1, 1, want) {
                Ok(s) => s,
                Err(err) => return Some(format!("n={n}: {err}")),
            };
            let f = trial_factor(n);
            let mu = mobius(n) as i8;
            let tau: u32 = f.iter().map(|&(_, e)| e + 1).product();
            let lam = if f.len() == 1 { (f[0].0 as f64).ln() } else { 0.0 };
            let got_lam = seg.lambda_at(n).unwrap_or(f64::NAN);
            let same = seg.mu_at(n) == Some(mu)
                && seg.tau_at(n) == Some(tau)
                && (got_lam - lam).abs() <= 1e-12 * lam.max(1.0);
            (!same).then(|| format!("n={n}"))
        })
        .collect();
    let (density, dens_ok) = match sieve_segment(0, 1_000_000, Fields::MU) {
        Ok(seg) => {
            let sf = seg.mu.as_ref().unwrap().iter().filter(|&&m| m != 0).count();
            let d = sf as f64 / 1e6;
            (d, (d - 6.0 / (PI * PI)).abs() <= 0.002)
        }
        Err(_) => (f64::NAN, false),
    };
    ok(
        bad.is_empty() && dens_ok,
        format!(
            "10^4 random n<=10^9, {} mismatches {:?}; square-free density {density:.6} vs 6/pi^2 = {:.6} (tol 0.002)",
            bad.len(),
            bad.first(),
            6.0 / (PI * PI)
        ),
    )
}

// 7. Weyl sums at a/q as residue-class sums.
fn residue_classes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0f64;
    let mut bad = Vec::new();
    for _ in 0..100 {
        let x = rng.gen_range(0..=10_000u64);
        let y = rng.gen_range(1..=10_000u64);
        let q = rng.gen_range(1..=30u64);
        let a = loop {
            let a = rng.gen_range(0..q);
            if a.gcd(&q) == 1 {
                break a;
            }
        };
        let count = |r: u64| {
            // #{x < n <= x + y : n = r mod q}
            let upto = |m: u64| if m >= r { (m - r) / q + 1 } else { 0 };
            upto(x + y) - upto(x)
        };
        let by_class: Complex64 = (0..q)
            .map(|r| {
                let t = (a * (r * r % q) % q * r) % q;
                e(t as f64 / q as f64) * count(r) as f64
            })
            .sum();
        match weyl_sum(x as f64, y as f64, 3, &PhaseReal::from_ratio(a as i64, q)) {
            Ok(w) => {
                let d = (w.sum - by_class).norm() / y as f64;
                worst = worst.max(d);
                if d > 1e-8 {
                    bad.push(format!("x={x} y={y} a/q={a}/{q}"));
                }
            }
            Err(err) => bad.push(err.to_string()),
        }
    }
    ok(
        bad.is_empty(),
        format!("100 tuples, max |diff|/y = {worst:.3e} (tol 1e-8) {:?}", bad.first()),
    )
}

// 8. Per-class maxima reproduce the committed values.
fn decay_regression(baselines: &Baselines) -> Outcome {
    let spec = decay_spec();
    let report = match run_sweep(&spec) {
        Ok(r) => r,
        Err(err) => return ok(false, err.to_string()),
    };
    let Some(group) = report.summary.first() else {
        return ok(false, "empty summary");
    };
    let base = &baselines.decay;
    let same_config = base.x == spec.x && base.theta == spec.theta_list[0] && base.k == spec.k_list[0];
    let same_classes = group.max_sk_over_y.keys().eq(base.max_sk_over_y.keys());
    let diffs: Vec<(ArcLabel, f64)> = group
        .max_sk_over_y
        .iter()
        .map(|(l, v)| (*l, (v - base.max_sk_over_y.get(l).copied().unwrap_or(f64::NAN)).abs()))
        .collect();
    let close = diffs.iter().all(|(_, d)| *d <= 1e-12);
    ok(
        same_config && same_classes && close,
        format!(
            "{} rows, maxima {:?}, baseline {:?}, |diff| {:?} (tol 1e-12)",
            group.rows, group.max_sk_over_y, base.max_sk_over_y, diffs
        ),
    )
}

// 9. (sigma_3, gamma, rho) at theta = 1.
fn plan_arithmetic() -> Outcome {
    match make_plan(1e6, 1e6, 3) {
        Ok(p) => {
            let got = (p.sigma_exact.clone(), p.gamma_exact.clone(), p.rho_exact.clone());
            let want = (ratio(1, 12), ratio(4, 1), ratio(1, 768));
            ok(
                got == want && p.theta_exact.is_one(),
                format!("sigma = {}, gamma = {}, rho = {}", got.0, got.1, got.2),
            )
        }
        Err(err) => ok(false, err.to_string()),
    }
}

fn main() {
    let baselines = Baselines::load(&default_path());
    type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("vaughan identity lattice", Duration::from_secs(30), Box::new(vaughan_lattice)),
        ("reconstruction -S1 + S2 = S_k", Duration::from_secs(300), Box::new(reconstruction)),
        ("arc partition", Duration::from_secs(10), Box::new(arc_partition)),
        (
            "gauss sum identities",
            Duration::from_secs(120),
            Box::new(|| match &baselines {
                Ok(b) => gauss_identities(b),
                Err(err) => ok(false, format!("baselines: {err}")),
            }),
        ),
        ("character orthogonality", Duration::from_secs(30), Box::new(character_orthogonality)),
        ("sieve oracle equivalence", Duration::from_secs(60), Box::new(sieve_oracle)),
        ("residue-class weyl decomposition", Duration::from_secs(60), Box::new(residue_classes)),
        (
            "decay regression",
            Duration::from_secs(600),
            Box::new(|| match &baselines {
                Ok(b) => decay_regression(b),
                Err(err) => ok(false, format!("baselines: {err}")),
            }),
        ),
        ("plan arithmetic", Duration::from_secs(1), Box::new(plan_arithmetic)),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} [{:.2}s / {}s] {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            out.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

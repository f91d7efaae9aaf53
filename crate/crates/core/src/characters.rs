//! Dirichlet characters mod `q` as exponent vectors over generators of
//! `(Z/qZ)^*`, the twisted Möbius sums `S_k(chi)`, and the bound obtained by
//! summing, over `d | q`, the largest twisted sum over primitive characters
//! mod `q/d`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, factorize, gcd, primitive_root};
use crate::error::{Error, Result};
use crate::kernel::{accum::CompensatedSum, expsum_by, ExpSumResult, Interval, IntervalPhases};
use crate::phase::PhaseReal;
use crate::sieve::{sieve_segment, Fields};

/// Largest modulus accepted by [`characters_mod`].
pub const MAX_CHARACTER_MODULUS: u64 = 1_000_000;

const NOT_UNIT: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Generator {
    /// Modulus of the prime-power component this generator lives in.
    component: u64,
    order: u64,
    /// Discrete logarithm of each residue mod `component`.
    log: Arc<Vec<u32>>,
}

#[derive(Clone, Debug)]
struct Component {
    p: u64,
    e: u32,
    /// Indices into the generator list.
    gens: Vec<usize>,
}

/// All `phi(q)` characters mod `q`.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    modulus: u64,
    gens: Vec<Generator>,
    components: Vec<Component>,
    /// Exponent of the unit group; character values are `e(t / exponent)`.
    exponent: u64,
    roots: Vec<Complex64>,
    conductors: Vec<u64>,
    orders: Vec<u64>,
}

/// One character of a table.
#[derive(Clone, Copy, Debug)]
pub struct Character<'a> {
    table: &'a CharacterTable,
    index: usize,
}

/// Serializable description of a character.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterInfo {
    pub index: usize,
    pub exponents: Vec<u64>,
    pub order: u64,
    pub conductor: u64,
    pub primitive: bool,
}

pub fn characters_mod(q: u64) -> Result<CharacterTable> {
    if q == 0 {
        return Err(Error::Argument("modulus must be at least 1".into()));
    }
    if q > MAX_CHARACTER_MODULUS {
        return Err(Error::Resource(format!(
            "modulus {q} exceeds the character table limit {MAX_CHARACTER_MODULUS}"
        )));
    }
    let mut gens = Vec::new();
    let mut components = Vec::new();
    for (p, e) in factorize(q) {
        let m = p.pow(e);
        let start = gens.len();
        if p == 2 {
            match e {
                1 => {}
                2 => {
                    let mut log = vec![NOT_UNIT; 4];
                    log[1] = 0;
                    log[3] = 1;
                    gens.push(Generator { component: 4, order: 2, log: Arc::new(log) });
                }
                _ => {
                    // n = (-1)^s 5^j
                    let half = m / 4;
                    let mut log_sign = vec![NOT_UNIT; m as usize];
                    let mut log_five = vec![NOT_UNIT; m as usize];
                    let mut r = 1u64;
                    for j in 0..half {
                        log_sign[r as usize] = 0;
                        log_five[r as usize] = j as u32;
                        log_sign[(m - r) as usize] = 1;
                        log_five[(m - r) as usize] = j as u32;
                        r = r * 5 % m;
                    }
                    gens.push(Generator { component: m, order: 2, log: Arc::new(log_sign) });
                    gens.push(Generator { component: m, order: half, log: Arc::new(log_five) });
                }
            }
        } else {
            let g = primitive_root(p, e);
            let order = m / p * (p - 1);
            let mut log = vec![NOT_UNIT; m as usize];
            let mut r = 1u64;
            for j in 0..order {
                log[r as usize] = j as u32;
                r = r * g % m;
            }
            gens.push(Generator { component: m, order, log: Arc::new(log) });
        }
        components.push(Component { p, e, gens: (start..gens.len()).collect() });
    }
    let exponent = gens.iter().fold(1u64, |acc, g| acc.lcm(&g.order));
    let roots = (0..exponent)
        .map(|t| crate::kernel::unit_from_frac(t as f64 / exponent as f64))
        .collect();
    let mut table = CharacterTable {
        modulus: q,
        gens,
        components,
        exponent,
        roots,
        conductors: Vec::new(),
        orders: Vec::new(),
    };
    let count = table.len();
    let (conductors, orders): (Vec<u64>, Vec<u64>) = (0..count)
        .map(|i| {
            let c = table.exponents(i);
            (table.conductor_of(&c), table.order_of(&c))
        })
        .unzip();
    table.conductors = conductors;
    table.orders = orders;
    Ok(table)
}

impl CharacterTable {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Number of characters, `phi(q)`.
    pub fn len(&self) -> usize {
        self.gens.iter().map(|g| g.order as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exponent of the unit group.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// Orders of the generators, in the order used by [`Self::exponents`].
    pub fn generator_orders(&self) -> Vec<u64> {
        self.gens.iter().map(|g| g.order).collect()
    }

    /// Exponent vector of character `index` (mixed radix, first generator
    /// least significant). Index 0 is the principal character.
    pub fn exponents(&self, mut index: usize) -> Vec<u64> {
        self.gens
            .iter()
            .map(|g| {
                let c = index as u64 % g.order;
                index /= g.order as usize;
                c
            })
            .collect()
    }

    pub fn get(&self, index: usize) -> Character<'_> {
        assert!(index < self.len(), "character index out of range");
        Character { table: self, index }
    }

    pub fn iter(&self) -> impl Iterator<Item = Character<'_>> {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn primitive(&self) -> impl Iterator<Item = Character<'_>> {
        self.iter().filter(|c| c.is_primitive())
    }

    pub fn conductors(&self) -> &[u64] {
        &self.conductors
    }

    pub fn primitive_flags(&self) -> Vec<bool> {
        self.conductors.iter().map(|&f| f == self.modulus).collect()
    }

    pub fn info(&self) -> Vec<CharacterInfo> {
        self.iter().map(|c| c.info()).collect()
    }

    /// `t` with `chi_index(n) = e(t / exponent)`, or `None` if `gcd(n, q) > 1`.
    pub fn exponent_at(&self, index: usize, n: u64) -> Option<u64> {
        self.exponent_with(&self.exponents(index), n)
    }

    fn exponent_with(&self, c: &[u64], n: u64) -> Option<u64> {
        let mut t: u128 = 0;
        for (g, &cg) in self.gens.iter().zip(c) {
            let l = g.log[(n % g.component) as usize];
            if l == NOT_UNIT {
                return None;
            }
            t += cg as u128 * l as u128 * (self.exponent / g.order) as u128;
        }
        if self.modulus > 1 && gcd(n, self.modulus) != 1 {
            // only reachable for even n mod 2, which has no generator
            return None;
        }
        Some((t % self.exponent as u128) as u64)
    }

    fn conductor_of(&self, c: &[u64]) -> u64 {
        let mut f = 1u64;
        for comp in &self.components {
            let cs: Vec<u64> = comp.gens.iter().map(|&i| c[i]).collect();
            let pe = |x: u32| comp.p.pow(x);
            f *= match (comp.p, comp.e) {
                (2, 1) => 1,
                (2, 2) => {
                    if cs[0] == 0 {
                        1
                    } else {
                        4
                    }
                }
                (2, e) => {
                    if cs[1] != 0 {
                        pe(e - cs[1].trailing_zeros())
                    } else if cs[0] != 0 {
                        4
                    } else {
                        1
                    }
                }
                (p, e) => {
                    if cs[0] == 0 {
                        1
                    } else {
                        let v = crate::arith::valuation(cs[0], p).min(e - 1);
                        pe(e - v)
                    }
                }
            };
        }
        f
    }

    fn order_of(&self, c: &[u64]) -> u64 {
        self.gens
            .iter()
            .zip(c)
            .fold(1u64, |acc, (g, &cg)| acc.lcm(&(g.order / g.order.gcd(&cg))))
    }
}

impl<'a> Character<'a> {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn modulus(&self) -> u64 {
        self.table.modulus
    }

    pub fn exponents(&self) -> Vec<u64> {
        self.table.exponents(self.index)
    }

    pub fn conductor(&self) -> u64 {
        self.table.conductors[self.index]
    }

    pub fn order(&self) -> u64 {
        self.table.orders[self.index]
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.table.modulus
    }

    pub fn is_principal(&self) -> bool {
        self.index == 0
    }

    /// `t` with `chi(n) = e(t / E)`, `None` off the units.
    pub fn exponent_at(&self, n: u64) -> Option<u64> {
        self.table.exponent_at(self.index, n)
    }

    pub fn value(&self, n: u64) -> Complex64 {
        match self.exponent_at(n) {
            Some(t) => self.table.roots[t as usize],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Values on `first..=last`, computed with one exponent vector.
    pub fn values(&self, first: u64, last: u64) -> Vec<Complex64> {
        let c = self.exponents();
        (first..=last)
            .map(|n| match self.table.exponent_with(&c, n) {
                Some(t) => self.table.roots[t as usize],
                None => Complex64::new(0.0, 0.0),
            })
            .collect()
    }

    pub fn info(&self) -> CharacterInfo {
        CharacterInfo {
            index: self.index,
            exponents: self.exponents(),
            order: self.order(),
            conductor: self.conductor(),
            primitive: self.is_primitive(),
        }
    }
}

/// `S_k(chi) = sum_{x/d < m <= (x+y)/d, gcd(m, q) = 1} mu(m) chi(m) e((m d)^k lambda)`.
pub fn twisted_mobius_sum(
    x: f64,
    y: f64,
    q: u64,
    d: u64,
    chi: &Character<'_>,
    k: u32,
    lambda: &PhaseReal,
) -> Result<ExpSumResult> {
    if d == 0 || q == 0 || !q.is_multiple_of(d) {
        return Err(Error::Argument(format!("d = {d} does not divide q = {q}")));
    }
    if !q.is_multiple_of(chi.modulus()) {
        return Err(Error::Argument(format!(
            "character modulus {} does not divide q = {q}",
            chi.modulus()
        )));
    }
    let iv = Interval::from_real(x, y)?.divided(d);
    let alpha = lambda.scaled(&BigInt::from(d).pow(k));
    if iv.is_empty() {
        return expsum_by(iv, k, &alpha, |_| Complex64::new(0.0, 0.0));
    }
    let weights = twisted_weights(iv, q, chi)?;
    let base = iv.first;
    expsum_by(iv, k, &alpha, |m| weights[(m - base) as usize])
}

fn twisted_weights(iv: Interval, q: u64, chi: &Character<'_>) -> Result<Vec<Complex64>> {
    let seg = sieve_segment(iv.first - 1, iv.len(), Fields::MU)?;
    let mu = seg.mu.expect("requested mu");
    let vals = chi.values(iv.first, iv.last);
    Ok((iv.first..=iv.last)
        .zip(mu.iter().zip(vals))
        .map(|(m, (&u, v))| {
            if u == 0 || gcd(m, q) != 1 {
                Complex64::new(0.0, 0.0)
            } else {
                v * u as f64
            }
        })
        .collect())
}

/// One divisor's contribution to [`lemma31_rhs`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorTerm {
    pub d: u64,
    /// Index of the maximizing primitive character mod `q/d`; `None` when
    /// there is no primitive character (the term is then 0).
    pub best_character: Option<usize>,
    pub max_abs: f64,
    pub n_primitive: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Report {
    pub q: u64,
    pub k: u32,
    pub eps: f64,
    pub prefactor: f64,
    pub terms: Vec<DivisorTerm>,
    pub rhs: f64,
}

/// `q^(1 - 1/k + eps) * sum_{d | q} max_{chi primitive mod q/d} |S_k(chi)|`
/// with `(m d)^k lambda` in the phase. An empty maximum counts as 0.
pub fn lemma31_rhs(
    x: f64,
    y: f64,
    k: u32,
    q: u64,
    a: i64,
    lambda: &PhaseReal,
    eps: f64,
) -> Result<f64> {
    Ok(lemma31_report(x, y, k, q, a, lambda, eps)?.rhs)
}

pub fn lemma31_report(
    x: f64,
    y: f64,
    k: u32,
    q: u64,
    a: i64,
    lambda: &PhaseReal,
    eps: f64,
) -> Result<Lemma31Report> {
    if q == 0 || k == 0 {
        return Err(Error::Argument("q and k must be positive".into()));
    }
    if gcd(a.unsigned_abs(), q) != 1 {
        return Err(Error::Argument(format!("gcd({a}, {q}) != 1")));
    }
    let base = Interval::from_real(x, y)?;
    let divs = divisors(q);
    let tables: HashMap<u64, CharacterTable> = divs
        .iter()
        .map(|&d| characters_mod(q / d).map(|t| (q / d, t)))
        .collect::<Result<_>>()?;

    // Per divisor: the sieve, gcd mask and phases are shared by all characters.
    struct Prepared {
        iv: Interval,
        mu_masked: Vec<f64>,
        phases: Option<IntervalPhases>,
    }
    let prepared: Vec<Prepared> = divs
        .iter()
        .map(|&d| {
            let iv = base.divided(d);
            if iv.is_empty() {
                return Ok(Prepared { iv, mu_masked: Vec::new(), phases: None });
            }
            let seg = sieve_segment(iv.first - 1, iv.len(), Fields::MU)?;
            let mu = seg.mu.expect("requested mu");
            let mu_masked = (iv.first..=iv.last)
                .zip(mu)
                .map(|(m, u)| if gcd(m, q) == 1 { u as f64 } else { 0.0 })
                .collect();
            let alpha = lambda.scaled(&BigInt::from(d).pow(k));
            let phases = IntervalPhases::new(iv, k, &alpha)?;
            Ok(Prepared { iv, mu_masked, phases: Some(phases) })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = divs
        .iter()
        .enumerate()
        .flat_map(|(di, &d)| {
            let t = &tables[&(q / d)];
            t.primitive().map(move |c| (di, c.index())).collect::<Vec<_>>()
        })
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(di, ci)| {
            let p = &prepared[di];
            let Some(phases) = &p.phases else { return 0.0 };
            let chi = tables[&(q / divs[di])].get(ci);
            let vals = chi.values(p.iv.first, p.iv.last);
            let mut acc = CompensatedSum::new();
            for (i, m) in (p.iv.first..=p.iv.last).enumerate() {
                let w = p.mu_masked[i];
                if w != 0.0 {
                    acc.add(vals[i] * phases.get(m) * w);
                }
            }
            acc.value().norm()
        })
        .collect();

    let mut terms: Vec<DivisorTerm> = divs
        .iter()
        .map(|&d| DivisorTerm {
            d,
            best_character: None,
            max_abs: 0.0,
            n_primitive: 0,
        })
        .collect();
    // jobs are ordered by (divisor, character index): strict `>` keeps the lowest index on ties
    for (&(di, ci), &v) in jobs.iter().zip(&values) {
        let t = &mut terms[di];
        t.n_primitive += 1;
        if t.best_character.is_none() || v > t.max_abs {
            t.best_character = Some(ci);
            t.max_abs = v;
        }
    }
    let prefactor = (q as f64).powf(1.0 - 1.0 / k as f64 + eps);
    let total: f64 = terms.iter().map(|t| t.max_abs).sum();
    Ok(Lemma31Report {
        q,
        k,
        eps,
        prefactor,
        terms,
        rhs: prefactor * total,
    })
}

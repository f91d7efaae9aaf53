//! Compensated accumulation of complex terms with a fixed-block parallel
//! reduction, so results are bit-identical regardless of thread count.

use num_complex::Complex64;
use rayon::prelude::*;

/// Indices per reduction block. Block boundaries are fixed relative to the
/// first index, which is what makes the parallel result bit-stable.
pub const BLOCK: u64 = 1 << 12;

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

#[inline]
fn neumaier(sum: &mut f64, c: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *c += (*sum - t) + v;
    } else {
        *c += (v - t) + *sum;
    }
    *sum = t;
}

/// Neumaier summation applied componentwise to complex terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
    abs_total: f64,
    count: u64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
        self.abs_total += z.re.abs() + z.im.abs();
        self.count += 1;
    }

    /// Fold another partial sum into this one (sum and compensation both).
    pub fn merge(&mut self, other: &CompensatedSum) {
        neumaier(&mut self.re, &mut self.re_c, other.re);
        neumaier(&mut self.re, &mut self.re_c, other.re_c);
        neumaier(&mut self.im, &mut self.im_c, other.im);
        neumaier(&mut self.im, &mut self.im_c, other.im_c);
        self.abs_total += other.abs_total;
        self.count += other.count + 2;
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }

    /// Sum of `|re| + |im|` over all terms added.
    pub fn abs_total(&self) -> f64 {
        self.abs_total
    }

    /// Rounding error bound of the compensated sum itself:
    /// `2u|S| + 2 n u^2 sum|x_i|` per component.
    pub fn rounding_bound(&self) -> f64 {
        let s = self.value();
        let u = UNIT_ROUNDOFF;
        2.0 * u * (s.re.abs() + s.im.abs()) + 2.0 * self.count as f64 * u * u * self.abs_total
    }
}

/// Deterministic parallel sum of `f(n)` for `n` in `first..=last`.
/// Each fixed block is summed sequentially; block partials are merged in order.
pub fn block_sum<F>(first: u64, last: u64, f: F) -> CompensatedSum
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if last < first {
        return CompensatedSum::new();
    }
    let len = last - first + 1;
    let blocks = len.div_ceil(BLOCK);
    let partials: Vec<CompensatedSum> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = first + b * BLOCK;
            let end = (start + BLOCK - 1).min(last);
            let mut acc = CompensatedSum::new();
            for n in start..=end {
                acc.add(f(n));
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total
}

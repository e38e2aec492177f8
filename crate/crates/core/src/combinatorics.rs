//! Cyclic binary sequences and the generating functions built from them.
//!
//! A cyclic sequence of length `l` assigns 0/1 to `l` labeled positions
//! arranged on a cycle; rotations are distinct sequences. `a(l, k, r)`
//! counts sequences with `k` ones of which `r` are followed (cyclically) by a
//! zero, and `b(l, s)` counts sequences with `s` ones, no two adjacent. These
//! feed `a_l(x, y, z) = Σ a(l,k,r) x^k y^(l-k) z^r`, whose product over the
//! cycles of a lifted permutation is the generating function of
//! `Δ(G, G∘σ)/2` for `G ~ ER(n, x)`.

use crate::error::{Error, Result};
use crate::model::JointEdgeDistribution;

/// Largest cycle length accepted by the `2^l` enumerations.
pub const MAX_BRUTE_LEN: usize = 20;

/// Cycle type `c_l` of a permutation acting on pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleType {
    /// `counts[l]` is the number of cycles of length `l`; index 0 is unused.
    counts: Vec<u64>,
}

impl CycleType {
    pub fn from_counts(mut counts: Vec<u64>) -> Self {
        if counts.is_empty() {
            counts.push(0);
        }
        counts[0] = 0;
        while counts.len() > 1 && *counts.last().unwrap() == 0 {
            counts.pop();
        }
        Self { counts }
    }

    /// Builds a cycle type from a list of cycle lengths.
    pub fn from_lengths(lengths: &[usize]) -> Self {
        let max = lengths.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0u64; max + 1];
        for &l in lengths {
            counts[l] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn count(&self, l: usize) -> u64 {
        self.counts.get(l).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Σ l·c_l.
    pub fn total(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(l, &c)| l as u64 * c)
            .sum()
    }

    pub fn fixed(&self) -> u64 {
        self.count(1)
    }

    /// `N - c_1`.
    pub fn non_fixed(&self) -> u64 {
        self.total() - self.fixed()
    }

    /// `(length, count)` for every length with a nonzero count.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(l, &c)| (l, c))
    }
}

/// `C(n, k)`, zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> u128 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn check_len(l: usize) -> Result<()> {
    if l > MAX_BRUTE_LEN {
        return Err(Error::CapacityExceeded {
            what: "cyclic sequence enumeration",
            size: l,
            limit: MAX_BRUTE_LEN,
        });
    }
    Ok(())
}

fn rotate_left(mask: u32, l: usize) -> u32 {
    let full = if l == 32 { u32::MAX } else { (1u32 << l) - 1 };
    ((mask >> 1) | (mask << (l - 1))) & full
}

/// `table[k][r] = a(l, k, r)` by enumerating all `2^l` sequences.
pub fn a_table(l: usize) -> Result<Vec<Vec<u128>>> {
    check_len(l)?;
    let mut table = vec![vec![0u128; l + 1]; l + 1];
    if l == 0 {
        table[0][0] = 1;
        return Ok(table);
    }
    for mask in 0u32..(1 << l) {
        let ones = mask.count_ones() as usize;
        // bit e of `next` is the symbol at position e+1 (mod l)
        let next = rotate_left(mask, l);
        let boundaries = (mask & !next).count_ones() as usize;
        table[ones][boundaries] += 1;
    }
    Ok(table)
}

/// Number of cyclic sequences of length `l` with `k` ones, exactly `r` of
/// which are followed by a zero.
pub fn a_count_brute(l: usize, k: usize, r: usize) -> Result<u128> {
    let table = a_table(l)?;
    Ok(table.get(k).and_then(|row| row.get(r)).copied().unwrap_or(0))
}

/// Number of cyclic sequences of length `l` with `s` ones, no two cyclically
/// adjacent. A lone position is not its own neighbour.
pub fn b_count_brute(l: usize, s: usize) -> Result<u128> {
    check_len(l)?;
    if l == 0 {
        return Ok(u128::from(s == 0));
    }
    let mut count = 0u128;
    for mask in 0u32..(1 << l) {
        if mask.count_ones() as usize != s {
            continue;
        }
        let adjacent = l > 1 && mask & rotate_left(mask, l) != 0;
        if !adjacent {
            count += 1;
        }
    }
    Ok(count)
}

/// `Σ_{k,r} a(l,k,r) x^k y^(l-k) z^r` by direct summation over the table.
pub fn a_poly_brute(l: usize, x: f64, y: f64, z: f64) -> Result<f64> {
    let table = a_table(l)?;
    let mut sum = 0.0;
    for (k, row) in table.iter().enumerate() {
        for (r, &count) in row.iter().enumerate() {
            if count > 0 {
                sum += count as f64 * x.powi(k as i32) * y.powi((l - k) as i32) * z.powi(r as i32);
            }
        }
    }
    Ok(sum)
}

/// `2^(1-l) Σ_i C(l, 2i) w^i`.
///
/// Summed term by term for `l <= 64`. Longer cycles use the factored form
/// `((1+g)/2)^l + ((1-g)/2)^l` with `g = sqrt(w)` for `w >= 0`, or its
/// polar equivalent for `w < 0`; the term-by-term sum loses all precision
/// there.
pub fn even_power_sum(l: usize, w: f64) -> f64 {
    if l == 0 {
        return 2.0;
    }
    if l <= 64 {
        let mut term = 2f64.powi(1 - l as i32);
        let mut sum = term;
        let mut i = 0usize;
        while 2 * i + 2 <= l {
            let a = (l - 2 * i) as f64;
            term *= a * (a - 1.0) / ((2 * i + 1) as f64 * (2 * i + 2) as f64) * w;
            sum += term;
            i += 1;
        }
        return sum;
    }
    if w >= 0.0 {
        let g = w.sqrt();
        ((1.0 + g) / 2.0).powi(l as i32) + ((1.0 - g) / 2.0).powi(l as i32)
    } else {
        let h = (-w).sqrt();
        let modulus = (1.0 + h * h).sqrt() / 2.0;
        let angle = h.atan();
        2.0 * modulus.powi(l as i32) * (l as f64 * angle).cos()
    }
}

/// Closed form `2^(1-l) (x+y)^l Σ_i C(l,2i) (1 + 4xy(z-1)/(x+y)^2)^i`.
///
/// The closed form divides by `x + y`; when that vanishes the value comes
/// from the enumeration instead, so `l` must be within [`MAX_BRUTE_LEN`].
pub fn a_poly_closed(l: usize, x: f64, y: f64, z: f64) -> Result<f64> {
    let s = x + y;
    if s == 0.0 {
        return a_poly_brute(l, x, y, z);
    }
    let w = 1.0 + 4.0 * x * y * (z - 1.0) / (s * s);
    Ok(s.powi(l as i32) * even_power_sum(l, w))
}

fn check_marginals(p: &JointEdgeDistribution) -> Result<(f64, f64)> {
    let (p1s, p0s) = (p.p1s(), p.p0s());
    if p1s <= 0.0 || p0s <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "degenerate marginal: p1* = {p1s}, p0* = {p0s}"
        )));
    }
    Ok((p1s, p0s))
}

/// Conditional generating function of `d(π)` given `r` boundary pairs:
/// `((p00 z + p01/z)/p0*)^r ((p10/z + p11 z)/p1*)^r`.
pub fn d_gen_eval(r: u64, p: &JointEdgeDistribution, z: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidInput(format!("z = {z} must be positive")));
    }
    let (p1s, p0s) = check_marginals(p)?;
    let up = (p.p00 * z + p.p01 / z) / p0s;
    let down = (p.p10 / z + p.p11 * z) / p1s;
    Ok((up * down).powi(r as i32))
}

/// Coefficients of `D_r(z)` as a distribution over `d`; entry `j` is
/// `P[d = 2j - 2r]` (`d` only takes even values).
pub fn d_gen_coefficients(r: u64, p: &JointEdgeDistribution) -> Result<Vec<f64>> {
    let (p1s, p0s) = check_marginals(p)?;
    // One factor pair: up-step d=+1 w.p. p00/p0*, d=-1 w.p. p01/p0*; then
    // d=+1 w.p. p11/p1*, d=-1 w.p. p10/p1*.
    let factor = [
        (p.p01 / p0s) * (p.p10 / p1s),
        (p.p00 / p0s) * (p.p10 / p1s) + (p.p01 / p0s) * (p.p11 / p1s),
        (p.p00 / p0s) * (p.p11 / p1s),
    ];
    let mut coeffs = vec![1.0];
    for _ in 0..r {
        let mut next = vec![0.0; coeffs.len() + 2];
        for (i, c) in coeffs.iter().enumerate() {
            for (j, f) in factor.iter().enumerate() {
                next[i + j] += c * f;
            }
        }
        coeffs = next;
    }
    Ok(coeffs)
}

/// `R_π(z) = Π_l a_l(p1*, p0*, z)^{c_l}`.
pub fn r_pi_eval(ct: &CycleType, p1s: f64, p0s: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p1s) || !(0.0..=1.0).contains(&p0s) || (p1s + p0s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbability(format!(
            "marginals p1* = {p1s}, p0* = {p0s} must sum to 1"
        )));
    }
    let mut value = 1.0;
    for (l, c) in ct.iter() {
        let a = a_poly_closed(l, p1s, p0s, z)?;
        value *= a.powi(c as i32);
    }
    Ok(value)
}

/// Which tail `tail_bound` controls: `P[d <= 0]` when the mean of `d` is
/// nonnegative, `P[d >= 0]` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailEvent {
    NonPositive,
    NonNegative,
}

impl TailEvent {
    pub fn contains(self, d: i64) -> bool {
        match self {
            TailEvent::NonPositive => d <= 0,
            TailEvent::NonNegative => d >= 0,
        }
    }
}

pub fn tail_event(p: &JointEdgeDistribution) -> TailEvent {
    if p.p11 * p.p00 >= p.p01 * p.p10 {
        TailEvent::NonPositive
    } else {
        TailEvent::NonNegative
    }
}

/// `R_π(1 - q/(p1* p0*))`, an upper bound on the tail of `d(π)` selected by
/// [`tail_event`].
pub fn tail_bound(ct: &CycleType, p: &JointEdgeDistribution) -> Result<f64> {
    let (p1s, p0s) = check_marginals(p)?;
    let z = 1.0 - p.q() / (p1s * p0s);
    if z < -1e-12 {
        return Err(Error::InvalidInput(format!(
            "1 - q/(p1* p0*) = {z} is negative"
        )));
    }
    let value = r_pi_eval(ct, p1s, p0s, z.max(0.0))?;
    Ok(value.clamp(0.0, 1.0))
}

/// `(1 - 2q)^((N - c_1)/2)`.
pub fn moved_pairs_tail_bound(ct: &CycleType, q: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::InvalidInput(format!("q = {q} outside [0, 1/2]")));
    }
    Ok((1.0 - 2.0 * q).powf(ct.non_fixed() as f64 / 2.0))
}

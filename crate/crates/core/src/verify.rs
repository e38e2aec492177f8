//! Machine-checkable identities and properties at desk scale.
//!
//! Every row pits a library routine against brute-force enumeration or an
//! exact structural argument. The routines under test are held in
//! [`Implementations`] so a deliberately corrupted routine can be swapped
//! in to confirm the row notices.

use std::collections::HashSet;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::bounds::expected_d;
use crate::combinatorics::{self, binomial, CycleType};
use crate::error::Result;
use crate::matching::{self, MapResult, ObjectiveSense, PosteriorWeight};
use crate::model::{
    self, pair_count, pair_index, pairs, Graph, JointEdgeDistribution, LiftedAction, Permutation,
};
use crate::rng::stream;
use crate::structure::{self, difference, intersect};

/// Routines exercised by the suite.
#[derive(Clone, Copy)]
pub struct Implementations {
    pub a_table: fn(usize) -> Result<Vec<Vec<u128>>>,
    pub b_count: fn(usize, usize) -> Result<u128>,
    pub a_poly_closed: fn(usize, f64, f64, f64) -> Result<f64>,
    pub d_gen_coefficients: fn(u64, &JointEdgeDistribution) -> Result<Vec<f64>>,
    pub r_pi_eval: fn(&CycleType, f64, f64, f64) -> Result<f64>,
    pub tail_bound: fn(&CycleType, &JointEdgeDistribution) -> Result<f64>,
    pub lift: fn(&Permutation) -> LiftedAction,
    pub d_stat: fn(&Permutation, &Graph, &Graph) -> Result<i64>,
    pub log_posterior_weight:
        fn(&Permutation, &Graph, &Graph, &JointEdgeDistribution) -> Result<PosteriorWeight>,
    pub map_estimate: fn(&Graph, &Graph, &JointEdgeDistribution, usize) -> Result<MapResult>,
    pub automorphism_list: fn(&Graph, usize) -> Result<Vec<Permutation>>,
    pub blocking_pairs: fn(&Graph, &Graph) -> Result<Vec<(usize, usize)>>,
}

impl Default for Implementations {
    fn default() -> Self {
        Self {
            a_table: combinatorics::a_table,
            b_count: combinatorics::b_count_brute,
            a_poly_closed: combinatorics::a_poly_closed,
            d_gen_coefficients: combinatorics::d_gen_coefficients,
            r_pi_eval: combinatorics::r_pi_eval,
            tail_bound: combinatorics::tail_bound,
            lift: model::lift,
            d_stat: matching::d_stat,
            log_posterior_weight: matching::log_posterior_weight,
            map_estimate: matching::map_estimate,
            automorphism_list: structure::automorphism_list,
            blocking_pairs: structure::blocking_pairs,
        }
    }
}

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub key: &'static str,
    pub claim: &'static str,
    pub cases: u64,
    pub passed: bool,
    /// First counterexample found, or the error that stopped the check.
    pub witness: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn row(&self, key: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.key == key)
    }

    /// Fixed-width pass/fail table.
    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.key.len()).max().unwrap_or(3).max(3);
        let mut out = format!("{:<width$}  {:<4}  {:>9}  {:>8}  claim\n", "key", "ok", "cases", "secs");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:<4}  {:>9}  {:>8.2}  {}\n",
                r.key,
                if r.passed { "PASS" } else { "FAIL" },
                r.cases,
                r.seconds,
                r.claim
            ));
            if let Some(w) = &r.witness {
                out.push_str(&format!("{:<width$}  witness: {w}\n", ""));
            }
        }
        out
    }
}

/// Cases examined and the first counterexample, if any.
struct Outcome {
    cases: u64,
    witness: Option<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            cases: 0,
            witness: None,
        }
    }

    /// Records one case; returns `false` once a counterexample is held.
    fn check(&mut self, ok: bool, witness: impl FnOnce() -> String) -> bool {
        self.cases += 1;
        if !ok && self.witness.is_none() {
            self.witness = Some(witness());
        }
        self.witness.is_none()
    }

    fn failed(&self) -> bool {
        self.witness.is_some()
    }
}

type CheckFn = fn(&Implementations) -> Result<Outcome>;

struct Check {
    key: &'static str,
    claim: &'static str,
    run: CheckFn,
}

const CHECKS: &[Check] = &[
    Check {
        key: "boundary-binomial",
        claim: "sum_r a(l,k,r) C(r,s) = b(l,s) C(l-2s,k-s) for l <= 12",
        run: check_boundary_binomial,
    },
    Check {
        key: "nonadjacent-count",
        claim: "2^(l-2s) b(l,s) = 2 sum_i C(l,2i) C(i,s) for l <= 12",
        run: check_nonadjacent_count,
    },
    Check {
        key: "cycle-gf-closed-form",
        claim: "closed form of a_l(x,y,z) matches enumeration, l <= 12, 100 points each, rel err <= 1e-9",
        run: check_cycle_gf_closed_form,
    },
    Check {
        key: "single-cycle-bound",
        claim: "a_l(p1*,p0*,1-q/(p1* p0*)) <= (1-2q)^(l/2) for l in 2..=20",
        run: check_single_cycle_bound,
    },
    Check {
        key: "conditional-d-gf",
        claim: "conditional law of d on a single cycle (l <= 8) equals the coefficients of D_r(z)",
        run: check_conditional_d_gf,
    },
    Check {
        key: "r-pi-distribution",
        claim: "R_pi is the generating function of Delta(G, G o sigma)/2 for n <= 5",
        run: check_r_pi_distribution,
    },
    Check {
        key: "tail-bound-chain",
        claim: "tail_bound <= (1-2q)^((N-c1)/2) for every cycle type of S_n, n <= 9",
        run: check_tail_bound_chain,
    },
    Check {
        key: "lifted-cycle-type",
        claim: "sum l c_l = N and C(n-m,2) <= c1 <= C(n-m,2) + m/2, n <= 9",
        run: check_lifted_cycle_type,
    },
    Check {
        key: "moved-pairs-lower-bound",
        claim: "N - c1 >= m(2n-m-2)/2 for every permutation, n <= 9",
        run: check_moved_pairs_lower_bound,
    },
    Check {
        key: "posterior-oracle",
        claim: "normalized posterior weights equal the exhaustive Bayes posterior at n = 3 within 1e-12",
        run: check_posterior_oracle,
    },
    Check {
        key: "d-versus-k",
        claim: "d(pi) = 2 (k(pi^-1) - k(id)) for every permutation, n <= 6",
        run: check_d_versus_k,
    },
    Check {
        key: "mean-of-d",
        claim: "exact mean of d over all graph pairs at n = 4 equals 2(N-c1)(p00 p11 - p01 p10)",
        run: check_mean_of_d,
    },
    Check {
        key: "involution-decomposition",
        claim: "d of an involution is the sum of +-2 two-cycle terms, n = 4 exhaustive",
        run: check_involution_decomposition,
    },
    Check {
        key: "relabel-equivariance",
        claim: "MAP ties on (gc o l(rho), gb) are the base ties composed with rho",
        run: check_relabel_equivariance,
    },
    Check {
        key: "intersection-automorphisms",
        claim: "every automorphism of ga & gb has d <= 0, n <= 5",
        run: check_intersection_automorphisms,
    },
    Check {
        key: "map-ties-cover-automorphisms",
        claim: "under positive correlation at least |Aut(ga & gb)| permutations are no worse than the truth, and the MAP tie set is at least |Aut| of the optimal alignment, n = 5",
        run: check_map_ties_cover_automorphisms,
    },
    Check {
        key: "difference-involutions",
        claim: "involutions with d(pi, ga\\gb, gb\\ga) = 0 have d(pi, ga, gb) >= 0, n <= 5",
        run: check_difference_involutions,
    },
    Check {
        key: "blocking-swaps",
        claim: "with p11 = 0, swapping a blocking pair leaves d = 0, n <= 7",
        run: check_blocking_swaps,
    },
];

/// Runs every row against the library's own routines.
pub fn verify_suite() -> VerifyReport {
    verify_with(&Implementations::default())
}

pub fn verify_with(imp: &Implementations) -> VerifyReport {
    let rows = CHECKS.iter().map(|c| run_check(c, imp)).collect();
    VerifyReport { rows }
}

/// Runs only the rows whose key is listed.
pub fn verify_selected(imp: &Implementations, keys: &[&str]) -> VerifyReport {
    let rows = CHECKS
        .iter()
        .filter(|c| keys.contains(&c.key))
        .map(|c| run_check(c, imp))
        .collect();
    VerifyReport { rows }
}

pub fn check_keys() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.key).collect()
}

fn run_check(check: &Check, imp: &Implementations) -> CheckRow {
    let start = Instant::now();
    let (cases, passed, witness) = match (check.run)(imp) {
        Ok(o) => (o.cases, o.witness.is_none(), o.witness),
        Err(e) => (0, false, Some(format!("error: {e}"))),
    };
    CheckRow {
        key: check.key,
        claim: check.claim,
        cases,
        passed,
        witness,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn c(n: i64, k: i64) -> u128 {
    binomial(n, k)
}

fn check_boundary_binomial(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    for l in 1..=12usize {
        let table = (imp.a_table)(l)?;
        for k in 0..=l {
            for s in 0..=l {
                let lhs: u128 = (0..=l).map(|r| table[k][r] * c(r as i64, s as i64)).sum();
                let rhs = (imp.b_count)(l, s)? * c(l as i64 - 2 * s as i64, k as i64 - s as i64);
                if !out.check(lhs == rhs, || format!("l={l} k={k} s={s}: {lhs} != {rhs}")) {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

fn check_nonadjacent_count(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    for l in 1..=12usize {
        for s in 0..=l / 2 {
            let lhs = (1u128 << (l - 2 * s)) * (imp.b_count)(l, s)?;
            let rhs: u128 = 2 * (0..=l / 2)
                .map(|i| c(l as i64, 2 * i as i64) * c(i as i64, s as i64))
                .sum::<u128>();
            if !out.check(lhs == rhs, || format!("l={l} s={s}: {lhs} != {rhs}")) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// `Σ_{k,r} a(l,k,r) x^k y^(l-k) z^r` straight from the count table.
fn poly_from_table(table: &[Vec<u128>], l: usize, x: f64, y: f64, z: f64) -> f64 {
    let mut total = 0.0;
    for (k, row) in table.iter().enumerate() {
        for (r, &count) in row.iter().enumerate() {
            if count > 0 {
                total += count as f64 * x.powi(k as i32) * y.powi((l - k) as i32) * z.powi(r as i32);
            }
        }
    }
    total
}

fn check_cycle_gf_closed_form(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let mut rng = stream(0x5eed_0008, 0, 0);
    for l in 1..=12usize {
        let table = combinatorics::a_table(l)?;
        for _ in 0..100 {
            // rationals with denominator 64
            let x = rng.gen_range(1..=64) as f64 / 64.0;
            let y = rng.gen_range(1..=64) as f64 / 64.0;
            let z = rng.gen_range(0..=128) as f64 / 64.0;
            let brute = poly_from_table(&table, l, x, y, z);
            let closed = (imp.a_poly_closed)(l, x, y, z)?;
            let rel = (closed - brute).abs() / brute.abs().max(f64::MIN_POSITIVE);
            if !out.check(rel <= 1e-9, || {
                format!("l={l} x={x} y={y} z={z}: closed {closed} vs enumerated {brute}")
            }) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// Fifty laws spread over the simplex, including the corners of the
/// positive and negative regimes.
pub fn law_grid() -> Vec<JointEdgeDistribution> {
    let mut laws = vec![
        JointEdgeDistribution::new(0.5, 0.0, 0.0, 0.5).unwrap(),
        JointEdgeDistribution::new(0.0, 0.5, 0.5, 0.0).unwrap(),
        JointEdgeDistribution::new(0.25, 0.25, 0.25, 0.25).unwrap(),
        JointEdgeDistribution::new(0.3, 0.1, 0.1, 0.5).unwrap(),
        JointEdgeDistribution::new(0.02, 0.01, 0.01, 0.96).unwrap(),
        JointEdgeDistribution::new(0.0, 0.3, 0.3, 0.4).unwrap(),
    ];
    let mut rng = stream(0x5eed_0004, 0, 0);
    while laws.len() < 50 {
        let w: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0f64).powi(2));
        if let Ok(p) = JointEdgeDistribution::normalized(w[0], w[1], w[2], w[3]) {
            laws.push(p);
        }
    }
    laws
}

fn check_single_cycle_bound(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    for p in law_grid() {
        let (x, y) = (p.p1s(), p.p0s());
        let q = p.q();
        let z = 1.0 - q / (x * y);
        for l in 2..=20usize {
            let lhs = (imp.a_poly_closed)(l, x, y, z)?;
            let rhs = (1.0 - 2.0 * q).powf(l as f64 / 2.0);
            if !out.check(lhs <= rhs + 1e-12, || format!("p={:?} l={l}: {lhs} > {rhs}", p.as_array())) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

fn check_conditional_d_gf(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let laws = [
        [0.3, 0.1, 0.2, 0.4],
        [0.05, 0.4, 0.35, 0.2],
        [0.25, 0.25, 0.25, 0.25],
        [0.5, 0.1, 0.0, 0.4],
    ];
    for law in laws {
        let p = JointEdgeDistribution::new(law[0], law[1], law[2], law[3])?;
        let joint = [[p.p00, p.p01], [p.p10, p.p11]];
        let marg = [p.p0s(), p.p1s()];
        for l in 1..=8usize {
            // conditional law of d, keyed by r, from enumerating (G_a, G_b) on the cycle e -> e+1
            let mut by_r: Vec<Vec<f64>> = vec![vec![0.0; 2 * l + 1]; l + 1];
            let mut weight_r = vec![0.0; l + 1];
            for ga in 0u32..(1 << l) {
                let a = |e: usize| ((ga >> (e % l)) & 1) as usize;
                let r = (0..l).filter(|&e| a(e) == 0 && a(e + 1) == 1).count();
                let pa: f64 = (0..l).map(|e| marg[a(e)]).product();
                weight_r[r] += pa;
                for gb in 0u32..(1 << l) {
                    let b = |e: usize| ((gb >> e) & 1) as usize;
                    let cond: f64 = (0..l).map(|e| joint[a(e)][b(e)] / marg[a(e)]).product();
                    if cond == 0.0 {
                        continue;
                    }
                    let d: i64 = (0..l)
                        .map(|e| (a(e + 1) as i64 - b(e) as i64).abs() - (a(e) as i64 - b(e) as i64).abs())
                        .sum();
                    by_r[r][(d + l as i64) as usize] += pa * cond;
                }
            }
            for r in 0..=l {
                if weight_r[r] == 0.0 {
                    continue;
                }
                let coeffs = (imp.d_gen_coefficients)(r as u64, &p)?;
                for (idx, mass) in by_r[r].iter().enumerate() {
                    let d = idx as i64 - l as i64;
                    let predicted = if (d + 2 * r as i64) % 2 == 0 && d.abs() <= 2 * r as i64 {
                        coeffs[((d + 2 * r as i64) / 2) as usize]
                    } else {
                        0.0
                    };
                    let observed = mass / weight_r[r];
                    if !out.check((observed - predicted).abs() <= 1e-12, || {
                        format!("p={law:?} l={l} r={r} d={d}: enumerated {observed} vs {predicted}")
                    }) {
                        return Ok(out);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_r_pi_distribution(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    for n in 2..=5usize {
        let total = pair_count(n);
        let mut seen = HashSet::new();
        for pi in Permutation::all(n) {
            let mut lengths = pi.cycle_lengths();
            lengths.sort_unstable();
            if !seen.insert(lengths) {
                continue;
            }
            let lifted = (imp.lift)(&pi);
            for p1s in [0.5f64, 0.3, 0.85] {
                let mut dist = vec![0.0f64; total + 1];
                for bits in 0u32..(1 << total) {
                    let g = |e: usize| (bits >> e) & 1;
                    let ones = bits.count_ones() as i32;
                    let prob = p1s.powi(ones) * (1.0 - p1s).powi(total as i32 - ones);
                    let delta = (0..total).filter(|&e| g(e) != g(lifted.pair_image[e])).count();
                    dist[delta / 2] += prob;
                }
                let sum: f64 = dist.iter().sum();
                if !out.check((sum - 1.0).abs() < 1e-12 && dist.iter().all(|&v| v >= 0.0), || {
                    format!("n={n} pi={:?}: coefficients sum to {sum}", pi.image())
                }) {
                    return Ok(out);
                }
                for z in [0.0f64, 0.37, 1.0, 1.8] {
                    let direct: f64 = dist.iter().enumerate().map(|(r, m)| m * z.powi(r as i32)).sum();
                    let value = (imp.r_pi_eval)(&lifted.cycle_type, p1s, 1.0 - p1s, z)?;
                    if !out.check((value - direct).abs() <= 1e-12 * direct.max(1.0), || {
                        format!("n={n} pi={:?} p1*={p1s} z={z}: R = {value} vs {direct}", pi.image())
                    }) {
                        return Ok(out);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One representative per cycle type of `S_n`.
fn cycle_type_representatives(n: usize) -> Vec<Permutation> {
    let mut seen = HashSet::new();
    Permutation::all(n)
        .filter(|pi| {
            let mut lengths = pi.cycle_lengths();
            lengths.sort_unstable();
            seen.insert(lengths)
        })
        .collect()
}

fn check_tail_bound_chain(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let laws = law_grid();
    for n in 2..=9usize {
        for pi in cycle_type_representatives(n) {
            let ct = (imp.lift)(&pi).cycle_type;
            for p in &laws {
                if p.p1s() * p.p0s() == 0.0 {
                    continue;
                }
                let lhs = (imp.tail_bound)(&ct, p)?;
                let rhs = combinatorics::moved_pairs_tail_bound(&ct, p.q())?;
                if !out.check(lhs <= rhs + 1e-12, || {
                    format!("n={n} pi={:?} p={:?}: {lhs} > {rhs}", pi.image(), p.as_array())
                }) {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

fn check_lifted_cycle_type(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    for n in 1..=9usize {
        let total = pair_count(n) as u64;
        for pi in Permutation::all(n) {
            let lifted = (imp.lift)(&pi);
            let m = lifted.moved_vertices;
            let base = pair_count(n - m) as u64;
            let c1 = lifted.cycle_type.count(1);
            let ok = lifted.cycle_type.total() == total && base <= c1 && 2 * c1 <= 2 * base + m as u64;
            if !out.check(ok, || format!("pi={:?}: c1={c1}, m={m}", pi.image())) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

fn check_moved_pairs_lower_bound(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    for n in 1..=9usize {
        let total = pair_count(n) as i64;
        for pi in Permutation::all(n) {
            let lifted = (imp.lift)(&pi);
            let m = lifted.moved_vertices as i64;
            let moved = total - lifted.cycle_type.count(1) as i64;
            if !out.check(2 * moved >= m * (2 * n as i64 - m - 2), || {
                format!("pi={:?}: N-c1={moved}, m={m}", pi.image())
            }) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

fn graph_from_mask(n: usize, mask: u64) -> Graph {
    let mut g = Graph::empty(n);
    for (idx, (i, j)) in pairs(n).enumerate() {
        if (mask >> idx) & 1 == 1 {
            g.set_edge(i, j, true);
        }
    }
    g
}

fn check_posterior_oracle(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let n = 3;
    let perms: Vec<Permutation> = Permutation::all(n).collect();
    let laws = [
        [0.3, 0.1, 0.2, 0.4],
        [0.05, 0.45, 0.35, 0.15],
        [0.0, 0.5, 0.25, 0.25],
        [0.6, 0.1, 0.1, 0.2],
    ];
    for law in laws {
        let p = JointEdgeDistribution::new(law[0], law[1], law[2], law[3])?;
        let prob = [[p.p00, p.p01], [p.p10, p.p11]];
        for c_mask in 0..8u64 {
            for b_mask in 0..8u64 {
                let gc = graph_from_mask(n, c_mask);
                let gb = graph_from_mask(n, b_mask);
                // gc = ga o l(pi), so ga{i,j} = gc{pi^-1(i), pi^-1(j)}
                let likelihood: Vec<f64> = perms
                    .iter()
                    .map(|pi| {
                        let inv = pi.inverse();
                        pairs(n)
                            .map(|(i, j)| {
                                let a = gc.has_edge(inv.apply(i), inv.apply(j)) as usize;
                                let b = gb.has_edge(i, j) as usize;
                                prob[a][b]
                            })
                            .product()
                    })
                    .collect();
                let evidence: f64 = likelihood.iter().sum();
                if evidence == 0.0 {
                    continue;
                }
                let weights = perms
                    .iter()
                    .map(|pi| (imp.log_posterior_weight)(pi, &gc, &gb, &p).map(|w| w.log_weight))
                    .collect::<Result<Vec<f64>>>()?;
                let top = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let scaled: Vec<f64> = weights.iter().map(|w| (w - top).exp()).collect();
                let norm: f64 = scaled.iter().sum();
                for (idx, pi) in perms.iter().enumerate() {
                    let oracle = likelihood[idx] / evidence;
                    let got = scaled[idx] / norm;
                    if !out.check((got - oracle).abs() <= 1e-12, || {
                        format!(
                            "p={law:?} gc={c_mask:03b} gb={b_mask:03b} pi={:?}: {got} vs {oracle}",
                            pi.image()
                        )
                    }) {
                        return Ok(out);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_d_versus_k(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let law = JointEdgeDistribution::new(0.3, 0.15, 0.1, 0.45)?;
    let mut rng = stream(0x5eed_0001, 0, 0);
    for n in 2..=6usize {
        for _ in 0..8 {
            let (ga, gb) = model::sample_pair_with(n, &law, &mut rng);
            let id = Permutation::identity(n);
            let k_id = (imp.log_posterior_weight)(&id, &ga, &gb, &law)?.k;
            for pi in Permutation::all(n) {
                let d = (imp.d_stat)(&pi, &ga, &gb)?;
                let k_inv = (imp.log_posterior_weight)(&pi.inverse(), &ga, &gb, &law)?.k;
                if !out.check(d as f64 == 2.0 * (k_inv - k_id), || {
                    format!("n={n} pi={:?}: d={d}, k(pi^-1)={k_inv}, k(id)={k_id}", pi.image())
                }) {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

fn check_mean_of_d(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let n = 4;
    let total = pair_count(n);
    let laws = [[0.3, 0.1, 0.2, 0.4], [0.05, 0.45, 0.35, 0.15]];
    let reps = cycle_type_representatives(n);
    for law in laws {
        let p = JointEdgeDistribution::new(law[0], law[1], law[2], law[3])?;
        let prob = [[p.p00, p.p01], [p.p10, p.p11]];
        for pi in &reps {
            let mut mean = 0.0;
            for a_mask in 0..(1u64 << total) {
                let ga = graph_from_mask(n, a_mask);
                for b_mask in 0..(1u64 << total) {
                    let w: f64 = (0..total)
                        .map(|e| prob[((a_mask >> e) & 1) as usize][((b_mask >> e) & 1) as usize])
                        .product();
                    if w > 0.0 {
                        mean += w * (imp.d_stat)(pi, &ga, &graph_from_mask(n, b_mask))? as f64;
                    }
                }
            }
            let predicted = expected_d(&(imp.lift)(pi).cycle_type, &p);
            if !out.check((mean - predicted).abs() <= 1e-12, || {
                format!("p={law:?} pi={:?}: E[d]={mean} vs {predicted}", pi.image())
            }) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

fn check_involution_decomposition(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let n = 4;
    let total = pair_count(n);
    let involutions: Vec<Permutation> = Permutation::all(n).filter(|p| p.is_involution()).collect();
    let graphs: Vec<Graph> = (0..(1u64 << total)).map(|m| graph_from_mask(n, m)).collect();
    for pi in &involutions {
        let image: Vec<usize> = pairs(n)
            .map(|(i, j)| pair_index(n, pi.apply(i), pi.apply(j)))
            .collect();
        for ga in &graphs {
            for gb in &graphs {
                let kind = |e: usize| (ga.edge_at(e), gb.edge_at(e));
                let mut predicted = 0i64;
                for e in 0..total {
                    let f = image[e];
                    if f <= e {
                        continue;
                    }
                    let pair = [kind(e), kind(f)];
                    if pair.contains(&(true, true)) && pair.contains(&(false, false)) {
                        predicted += 2;
                    } else if pair.contains(&(true, false)) && pair.contains(&(false, true)) {
                        predicted -= 2;
                    }
                }
                let d = (imp.d_stat)(pi, ga, gb)?;
                if !out.check(d == predicted, || {
                    format!("pi={:?} ga={:?} gb={:?}: d={d}, two-cycle sum {predicted}", pi.image(), ga.edges(), gb.edges())
                }) {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

fn check_relabel_equivariance(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let laws = [
        JointEdgeDistribution::new(0.3, 0.1, 0.1, 0.5)?,
        JointEdgeDistribution::new(0.05, 0.45, 0.35, 0.15)?,
    ];
    let mut rng = stream(0x5eed_0002, 0, 0);
    for law in &laws {
        for _ in 0..30 {
            let n = rng.gen_range(3..=6);
            let (ga, gb) = model::sample_pair_with(n, law, &mut rng);
            let truth = Permutation::random(n, &mut rng);
            let gc = model::apply_permutation(&ga, &truth)?;
            let rho = Permutation::random(n, &mut rng);
            let base = (imp.map_estimate)(&gc, &gb, law, n)?;
            let moved = (imp.map_estimate)(&model::apply_permutation(&gc, &rho)?, &gb, law, n)?;
            let mut expected: Vec<Vec<usize>> =
                base.minimizers.iter().map(|p| p.compose(&rho).image().to_vec()).collect();
            expected.sort();
            let got: Vec<Vec<usize>> = moved.minimizers.iter().map(|p| p.image().to_vec()).collect();
            if !out.check(got == expected && moved.optimum_value == base.optimum_value, || {
                format!("n={n} gc={:?} gb={:?} rho={:?}", gc.edges(), gb.edges(), rho.image())
            }) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

fn check_intersection_automorphisms(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let law = JointEdgeDistribution::new(0.3, 0.15, 0.15, 0.4)?;
    let mut rng = stream(0x5eed_0009, 0, 0);
    for t in 0..1000 {
        let n = 2 + t % 4;
        let (ga, gb) = model::sample_pair_with(n, &law, &mut rng);
        for pi in (imp.automorphism_list)(&intersect(&ga, &gb)?, n)? {
            let d = (imp.d_stat)(&pi, &ga, &gb)?;
            if !out.check(d <= 0, || {
                format!("ga={:?} gb={:?} pi={:?}: d={d}", ga.edges(), gb.edges(), pi.image())
            }) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

fn check_map_ties_cover_automorphisms(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let law = JointEdgeDistribution::new(0.3, 0.15, 0.15, 0.4)?;
    let mut rng = stream(0x5eed_000a, 0, 0);
    let n = 5;
    for _ in 0..1000 {
        let (ga, gb) = model::sample_pair_with(n, &law, &mut rng);
        let aut = (imp.automorphism_list)(&intersect(&ga, &gb)?, n)?.len();
        let base = matching::delta(&ga, &gb)?;
        let mut no_worse = 0;
        for pi in Permutation::all(n) {
            if matching::delta(&model::apply_permutation(&ga, &pi)?, &gb)? <= base {
                no_worse += 1;
            }
        }
        let map = (imp.map_estimate)(&ga, &gb, &law, n)?;
        let best = map.minimizers.get(0);
        let aligned = model::apply_permutation(&ga, &best.inverse())?;
        let aut_best = (imp.automorphism_list)(&intersect(&aligned, &gb)?, n)?.len();
        let ok = map.objective_sense == ObjectiveSense::Minimize
            && no_worse >= aut
            && map.tie_count() >= aut_best
            && (!map.minimizers.contains(&Permutation::identity(n)) || map.tie_count() >= aut);
        if !out.check(ok, || {
            format!(
                "ga={:?} gb={:?}: {no_worse} no worse than truth, {} ties, |Aut|={aut}, |Aut at optimum|={aut_best}",
                ga.edges(),
                gb.edges(),
                map.tie_count()
            )
        }) {
            return Ok(out);
        }
    }
    Ok(out)
}

fn check_difference_involutions(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let laws = [
        JointEdgeDistribution::new(0.1, 0.35, 0.35, 0.2)?,
        JointEdgeDistribution::new(0.3, 0.2, 0.2, 0.3)?,
    ];
    let mut rng = stream(0x5eed_000b, 0, 0);
    for t in 0..1000 {
        let n = 2 + t % 4;
        let law = &laws[t % 2];
        let (ga, gb) = model::sample_pair_with(n, law, &mut rng);
        let da = difference(&ga, &gb)?;
        let db = difference(&gb, &ga)?;
        for pi in Permutation::all(n).filter(|p| p.is_involution()) {
            if (imp.d_stat)(&pi, &da, &db)? != 0 {
                continue;
            }
            let d = (imp.d_stat)(&pi, &ga, &gb)?;
            if !out.check(d >= 0, || {
                format!("ga={:?} gb={:?} pi={:?}: d={d}", ga.edges(), gb.edges(), pi.image())
            }) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

fn check_blocking_swaps(imp: &Implementations) -> Result<Outcome> {
    let mut out = Outcome::new();
    let law = JointEdgeDistribution::new(0.0, 0.3, 0.3, 0.4)?;
    let mut rng = stream(0x5eed_000c, 0, 0);
    for t in 0..1000 {
        let n = 2 + t % 6;
        let (ga, gb) = model::sample_pair_with(n, &law, &mut rng);
        for (u, v) in (imp.blocking_pairs)(&ga, &gb)? {
            let swap = Permutation::transposition(n, u, v)?;
            let d = (imp.d_stat)(&swap, &ga, &gb)?;
            if !out.check(d == 0, || {
                format!("ga={:?} gb={:?} swap ({u} {v}): d={d}", ga.edges(), gb.edges())
            }) {
                return Ok(out);
            }
        }
        if out.failed() {
            break;
        }
    }
    Ok(out)
}

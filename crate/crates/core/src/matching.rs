//! Matching statistics, posterior weights and the exact MAP matcher.
//!
//! For an observed pair `(g_c, g_b)` where `g_c = g_a ∘ l(Π)` for a uniform
//! hidden `Π`, the posterior of `π` depends on `π` only through
//! `k(π) = Δ(g_c ∘ l(π)^-1, g_b) / 2`, and is monotone in it. The MAP set is
//! therefore the set of permutations minimising (or, for negatively
//! correlated laws, maximising) that Hamming distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{apply_permutation, pair_count, Graph, JointEdgeDistribution, Permutation};

/// Default bound on `n` for exhaustive search over `S_n`.
pub const DEFAULT_MATCH_LIMIT: usize = 10;
/// Hard ceiling regardless of the requested limit; `12!` leaves is already
/// far past desk scale.
pub const MAX_MATCH_N: usize = 12;

/// Hamming distance between edge indicator vectors.
pub fn delta(g: &Graph, h: &Graph) -> Result<usize> {
    g.check_same_size(h)?;
    Ok(g.bits().xor_count(h.bits()))
}

/// Edge-type counts of a graph pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchStatistics {
    pub delta: usize,
    pub n11: usize,
    pub n10: usize,
    pub n01: usize,
    pub n00: usize,
    pub m_a: usize,
    pub m_b: usize,
}

impl MatchStatistics {
    /// `Δ / 2`, a half-integer.
    pub fn k(&self) -> f64 {
        self.delta as f64 / 2.0
    }

    pub fn pair_count(&self) -> usize {
        self.n11 + self.n10 + self.n01 + self.n00
    }
}

pub fn edge_type_counts(ga: &Graph, gb: &Graph) -> Result<MatchStatistics> {
    ga.check_same_size(gb)?;
    let total = ga.pair_count();
    let m_a = ga.edge_count();
    let m_b = gb.edge_count();
    let n11 = ga.bits().and_count(gb.bits());
    let n10 = m_a - n11;
    let n01 = m_b - n11;
    Ok(MatchStatistics {
        delta: n10 + n01,
        n11,
        n10,
        n01,
        n00: total - n11 - n10 - n01,
        m_a,
        m_b,
    })
}

/// `d(π) = Δ(G_a ∘ l(π), G_b) - Δ(G_a, G_b)`.
pub fn d_stat(pi: &Permutation, ga: &Graph, gb: &Graph) -> Result<i64> {
    ga.check_same_size(gb)?;
    let moved = apply_permutation(ga, pi)?;
    Ok(delta(&moved, gb)? as i64 - delta(ga, gb)? as i64)
}

/// Unnormalised log posterior of one candidate permutation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorWeight {
    pub log_weight: f64,
    /// `Δ(g_c ∘ l(π)^-1, g_b) / 2`.
    pub k: f64,
    /// Both `p10 p01` and `p11 p00` vanish: every permutation is equally likely.
    pub flat: bool,
}

/// `k · log(p10 p01 / (p11 p00))` with `k = Δ(g_c ∘ l(π)^-1, g_b) / 2`.
///
/// When exactly one of the two products is zero the ratio form is
/// meaningless, and the weight is the exact log-likelihood
/// `Σ n_t log p_t` of the implied `(g_a, g_b)` instead (`-inf` for
/// impossible configurations). Either way, differences between two
/// permutations are exact log posterior ratios.
pub fn log_posterior_weight(
    pi: &Permutation,
    gc: &Graph,
    gb: &Graph,
    p: &JointEdgeDistribution,
) -> Result<PosteriorWeight> {
    gc.check_same_size(gb)?;
    let ga = apply_permutation(gc, &pi.inverse())?;
    let stats = edge_type_counts(&ga, gb)?;
    let k = stats.k();
    let against = p.p10 * p.p01;
    let toward = p.p11 * p.p00;
    if against == 0.0 && toward == 0.0 {
        return Ok(PosteriorWeight {
            log_weight: 0.0,
            k,
            flat: true,
        });
    }
    let log_weight = if against > 0.0 && toward > 0.0 {
        k * (p.p10.ln() + p.p01.ln() - p.p11.ln() - p.p00.ln())
    } else {
        [
            (stats.n11, p.p11),
            (stats.n10, p.p10),
            (stats.n01, p.p01),
            (stats.n00, p.p00),
        ]
        .iter()
        .filter(|(count, _)| *count > 0)
        .map(|&(count, prob)| count as f64 * prob.ln())
        .sum()
    };
    Ok(PosteriorWeight {
        log_weight,
        k,
        flat: false,
    })
}

/// Direction in which the posterior favours `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSense {
    /// `p10 p01 < p11 p00`: smaller `Δ` is more likely.
    Minimize,
    /// `p10 p01 > p11 p00`: larger `Δ` is more likely.
    Maximize,
    /// The posterior does not depend on `π`.
    Flat,
}

impl ObjectiveSense {
    /// Products equal up to rounding count as flat.
    pub fn of(p: &JointEdgeDistribution) -> Self {
        let against = p.p10 * p.p01;
        let toward = p.p11 * p.p00;
        if (against - toward).abs() <= f64::EPSILON * against.max(toward) {
            ObjectiveSense::Flat
        } else if against < toward {
            ObjectiveSense::Minimize
        } else {
            ObjectiveSense::Maximize
        }
    }
}

/// Whether the permutation scan may prune branches. Both give identical
/// results; exhaustive is the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    Exhaustive,
    BranchAndBound,
}

/// Set of tied permutations, packed one byte per image entry and sorted
/// lexicographically.
#[derive(Clone, PartialEq, Eq)]
pub struct TieSet {
    n: usize,
    rows: Vec<u8>,
}

impl TieSet {
    fn from_rows(n: usize, mut rows: Vec<Vec<u8>>) -> Self {
        rows.sort_unstable();
        Self {
            n,
            rows: rows.concat(),
        }
    }

    pub fn len(&self) -> usize {
        // S_0 has exactly one element; `rows` is empty then.
        self.rows.len().checked_div(self.n).unwrap_or(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, idx: usize) -> Permutation {
        let row = &self.rows[idx * self.n..(idx + 1) * self.n];
        Permutation::from_image(row.iter().map(|&v| v as usize).collect()).expect("stored rows are permutations")
    }

    pub fn iter(&self) -> impl Iterator<Item = Permutation> + '_ {
        (0..self.len()).map(|idx| self.get(idx))
    }

    pub fn contains(&self, pi: &Permutation) -> bool {
        if pi.n() != self.n {
            return false;
        }
        if self.n == 0 {
            return true;
        }
        let key: Vec<u8> = pi.image().iter().map(|&v| v as u8).collect();
        let mut lo = 0;
        let mut hi = self.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.rows[mid * self.n..(mid + 1) * self.n].cmp(&key[..]) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

impl std::fmt::Debug for TieSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.iter().take(16)).finish()?;
        if self.len() > 16 {
            write!(f, " (+{} more)", self.len() - 16)?;
        }
        Ok(())
    }
}

/// Exact MAP estimate with its full tie set.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    /// Best `Δ(g_c ∘ l(π)^-1, g_b)` in the objective's direction; for a flat
    /// posterior, the smallest value over all permutations.
    pub optimum_value: usize,
    pub minimizers: TieSet,
    pub objective_sense: ObjectiveSense,
    pub unique: bool,
}

impl MapResult {
    pub fn tie_count(&self) -> usize {
        self.minimizers.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.objective_sense == ObjectiveSense::Flat
    }

    /// Tie set is exactly `{truth}`.
    pub fn strict_success(&self, truth: &Permutation) -> bool {
        self.unique && self.minimizers.contains(truth)
    }

    /// `1/|ties|` when the truth is among the ties, else 0.
    pub fn uniform_success(&self, truth: &Permutation) -> f64 {
        if self.minimizers.contains(truth) {
            1.0 / self.tie_count() as f64
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Min,
    Max,
    All,
}

struct Scan<'a> {
    n: usize,
    gc: &'a [Vec<bool>],
    gb: &'a [Vec<bool>],
    mode: Mode,
    prune: bool,
    /// Pairs `{i, j}` with `j > pos`, i.e. not yet scored once `pos` is placed.
    remaining_after: Vec<usize>,
}

#[derive(Default)]
struct Branch {
    best: Option<usize>,
    min_seen: Option<usize>,
    ties: Vec<Vec<u8>>,
}

impl Scan<'_> {
    fn run(&self, first: usize) -> Branch {
        let mut tau = vec![0u8; self.n];
        tau[0] = first as u8;
        let mut branch = Branch::default();
        self.descend(&mut tau, 1u64 << first, 1, 0, &mut branch);
        branch
    }

    fn descend(&self, tau: &mut [u8], used: u64, pos: usize, cost: usize, out: &mut Branch) {
        if self.prune {
            if let Some(best) = out.best {
                let hopeless = match self.mode {
                    Mode::Min => cost > best,
                    Mode::Max => cost + self.remaining_after[pos - 1] < best,
                    Mode::All => false,
                };
                if hopeless {
                    return;
                }
            }
        }
        if pos == self.n {
            self.record(tau, cost, out);
            return;
        }
        for v in 0..self.n {
            if used >> v & 1 == 1 {
                continue;
            }
            let row = &self.gc[v];
            let added = (0..pos)
                .filter(|&i| row[tau[i] as usize] != self.gb[i][pos])
                .count();
            tau[pos] = v as u8;
            self.descend(tau, used | 1 << v, pos + 1, cost + added, out);
        }
    }

    fn record(&self, tau: &[u8], cost: usize, out: &mut Branch) {
        out.min_seen = Some(out.min_seen.map_or(cost, |m| m.min(cost)));
        let better = match (self.mode, out.best) {
            (Mode::All, _) => {
                out.ties.push(tau.to_vec());
                return;
            }
            (_, None) => true,
            (Mode::Min, Some(b)) => cost < b,
            (Mode::Max, Some(b)) => cost > b,
        };
        if better {
            out.best = Some(cost);
            out.ties.clear();
            out.ties.push(tau.to_vec());
        } else if out.best == Some(cost) {
            out.ties.push(tau.to_vec());
        }
    }
}

/// Exact MAP estimate over all `n!` permutations (branch-and-bound scan).
pub fn map_estimate(
    gc: &Graph,
    gb: &Graph,
    p: &JointEdgeDistribution,
    limit: usize,
) -> Result<MapResult> {
    map_estimate_with(gc, gb, p, limit, SearchStrategy::BranchAndBound)
}

pub fn map_estimate_with(
    gc: &Graph,
    gb: &Graph,
    p: &JointEdgeDistribution,
    limit: usize,
    strategy: SearchStrategy,
) -> Result<MapResult> {
    gc.check_same_size(gb)?;
    let n = gc.n();
    let cap = limit.min(MAX_MATCH_N);
    if n > cap {
        return Err(Error::CapacityExceeded {
            what: "exhaustive MAP search",
            size: n,
            limit: cap,
        });
    }
    let sense = ObjectiveSense::of(p);
    if n == 0 {
        return Ok(MapResult {
            optimum_value: 0,
            minimizers: TieSet { n: 0, rows: Vec::new() },
            objective_sense: sense,
            unique: true,
        });
    }

    let gc_adj = gc.adjacency();
    let gb_adj = gb.adjacency();
    let total = pair_count(n);
    let scan = Scan {
        n,
        gc: &gc_adj,
        gb: &gb_adj,
        mode: match sense {
            ObjectiveSense::Minimize => Mode::Min,
            ObjectiveSense::Maximize => Mode::Max,
            ObjectiveSense::Flat => Mode::All,
        },
        prune: strategy == SearchStrategy::BranchAndBound,
        remaining_after: (0..n).map(|pos| total - pair_count(pos + 1)).collect(),
    };

    let branches: Vec<Branch> = (0..n).into_par_iter().map(|first| scan.run(first)).collect();

    let (optimum_value, rows) = match scan.mode {
        Mode::All => {
            let min = branches.iter().filter_map(|b| b.min_seen).min().expect("n >= 1");
            (min, branches.into_iter().flat_map(|b| b.ties).collect::<Vec<_>>())
        }
        Mode::Min | Mode::Max => {
            let bests = branches.iter().filter_map(|b| b.best);
            let best = if scan.mode == Mode::Min { bests.min() } else { bests.max() }.expect("n >= 1");
            let rows = branches
                .into_iter()
                .filter(|b| b.best == Some(best))
                .flat_map(|b| b.ties)
                .collect::<Vec<_>>();
            (best, rows)
        }
    };

    // Rows hold τ = π^-1; report π.
    let rows: Vec<Vec<u8>> = rows
        .into_iter()
        .map(|tau| {
            let mut pi = vec![0u8; n];
            for (i, &v) in tau.iter().enumerate() {
                pi[v as usize] = i as u8;
            }
            pi
        })
        .collect();
    let minimizers = TieSet::from_rows(n, rows);
    let unique = minimizers.len() == 1;
    Ok(MapResult {
        optimum_value,
        minimizers,
        objective_sense: sense,
        unique,
    })
}

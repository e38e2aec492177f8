//! Correlated Erdős–Rényi pairs: edge distributions, graphs, permutations
//! and sampling.

mod distribution;
mod graph;
mod permutation;

use rand::Rng;

pub use distribution::{
    channel_to_joint, derive_params, joint_to_subsample, subsample_to_joint, Channel,
    DerivedParams, JointEdgeDistribution, SubsampleParams, PROB_TOL,
};
pub(crate) use distribution::format_ratio;
pub use graph::{pair_count, pair_index, pairs, BitVec, Graph};
pub use permutation::{lift, LiftedAction, Permutation};

use crate::error::{ensure_same_size, Result};
use crate::rng;

/// Draws `(G_a, G_b)` with independent per-pair outcomes from `p`.
pub fn sample_pair_with<R: Rng + ?Sized>(
    n: usize,
    p: &JointEdgeDistribution,
    rng: &mut R,
) -> (Graph, Graph) {
    let total = pair_count(n);
    let c11 = p.p11;
    let c10 = c11 + p.p10;
    let c01 = c10 + p.p01;
    let mut ga = BitVec::zeros(total);
    let mut gb = BitVec::zeros(total);
    for idx in 0..total {
        let u: f64 = rng.gen();
        if u < c11 {
            ga.set(idx, true);
            gb.set(idx, true);
        } else if u < c10 {
            ga.set(idx, true);
        } else if u < c01 {
            gb.set(idx, true);
        }
    }
    (
        Graph::from_bits(n, ga).expect("length matches"),
        Graph::from_bits(n, gb).expect("length matches"),
    )
}

/// Deterministic pair sample for an explicit seed.
pub fn sample_pair(n: usize, p: &JointEdgeDistribution, seed: u64) -> (Graph, Graph) {
    sample_pair_with(n, p, &mut rng::from_seed(seed))
}

/// Single `ER(n, p)` graph.
pub fn sample_graph_with<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut bits = BitVec::zeros(pair_count(n));
    for idx in 0..bits.len() {
        if rng.gen::<f64>() < p {
            bits.set(idx, true);
        }
    }
    Graph::from_bits(n, bits).expect("length matches")
}

/// `G ∘ l(π)`: the result has an edge at `e` iff `g` has one at `l(π)(e)`.
pub fn apply_permutation(g: &Graph, pi: &Permutation) -> Result<Graph> {
    ensure_same_size(g.n(), pi.n())?;
    let n = g.n();
    let mut out = Graph::empty(n);
    for (idx, (i, j)) in pairs(n).enumerate() {
        if g.has_edge(pi.apply(i), pi.apply(j)) {
            out.set_at(idx, true);
        }
    }
    Ok(out)
}

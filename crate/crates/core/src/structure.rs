//! Converse diagnostics: intersection and difference graphs, automorphism
//! counts, isolated vertices and blocking vertex pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pair_count, Graph, JointEdgeDistribution, Permutation, PROB_TOL};

/// Default bound on `n` for exact automorphism enumeration.
pub const DEFAULT_AUTOMORPHISM_LIMIT: usize = 10;

/// Graph with edge set `E(ga) ∩ E(gb)`.
pub fn intersect(ga: &Graph, gb: &Graph) -> Result<Graph> {
    ga.check_same_size(gb)?;
    Graph::from_bits(ga.n(), ga.bits().and(gb.bits()))
}

/// Graph with edge set `E(ga) \ E(gb)`.
pub fn difference(ga: &Graph, gb: &Graph) -> Result<Graph> {
    ga.check_same_size(gb)?;
    Graph::from_bits(ga.n(), ga.bits().and_not(gb.bits()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomorphismReport {
    /// `|Aut(G)|`.
    pub count: u128,
    /// Isolated vertices `X`; any permutation of them is an automorphism.
    pub isolated: usize,
    /// `X!`, saturating at `u128::MAX`.
    pub factorial_lower_bound: u128,
}

pub fn factorial_saturating(k: usize) -> u128 {
    (2..=k as u128).fold(1u128, |acc, i| acc.saturating_mul(i))
}

/// Depth-first search for automorphisms; vertex `i` may only map to a
/// vertex of equal degree, and every placed pair must keep its adjacency.
struct AutSearch<'a> {
    adj: &'a [Vec<bool>],
    degrees: &'a [usize],
}

impl AutSearch<'_> {
    fn visit(&self, image: &mut Vec<usize>, used: &mut [bool], found: &mut dyn FnMut(&[usize])) {
        let n = self.adj.len();
        let pos = image.len();
        if pos == n {
            found(image);
            return;
        }
        for v in 0..n {
            if used[v] || self.degrees[v] != self.degrees[pos] {
                continue;
            }
            if (0..pos).any(|i| self.adj[image[i]][v] != self.adj[i][pos]) {
                continue;
            }
            used[v] = true;
            image.push(v);
            self.visit(image, used, found);
            image.pop();
            used[v] = false;
        }
    }
}

fn check_limit(g: &Graph, limit: usize) -> Result<()> {
    if g.n() > limit {
        return Err(Error::AutomorphismCapacity {
            n: g.n(),
            limit,
            isolated: g.isolated_vertices(),
        });
    }
    Ok(())
}

fn for_each_automorphism(g: &Graph, found: &mut dyn FnMut(&[usize])) {
    let adj = g.adjacency();
    let degrees = g.degrees();
    let search = AutSearch {
        adj: &adj,
        degrees: &degrees,
    };
    let mut used = vec![false; g.n()];
    search.visit(&mut Vec::with_capacity(g.n()), &mut used, found);
}

/// Exact `|Aut(g)|` for `n <= limit`, with the isolated-vertex lower bound.
/// Beyond the limit the error still carries the isolated-vertex count.
pub fn automorphisms(g: &Graph, limit: usize) -> Result<AutomorphismReport> {
    check_limit(g, limit)?;
    let mut count = 0u128;
    for_each_automorphism(g, &mut |_| count += 1);
    let isolated = g.isolated_vertices();
    Ok(AutomorphismReport {
        count,
        isolated,
        factorial_lower_bound: factorial_saturating(isolated),
    })
}

/// All automorphisms of `g` in lexicographic order.
pub fn automorphism_list(g: &Graph, limit: usize) -> Result<Vec<Permutation>> {
    check_limit(g, limit)?;
    let mut out = Vec::new();
    for_each_automorphism(g, &mut |image| {
        out.push(Permutation::from_image(image.to_vec()).expect("search yields bijections"))
    });
    Ok(out)
}

/// Unordered pairs `{u, v}` (with `u < v`, sorted) such that
/// `N_a(u) ∩ N_b(v) = ∅` and `N_a(v) ∩ N_b(u) = ∅`.
pub fn blocking_pairs(ga: &Graph, gb: &Graph) -> Result<Vec<(usize, usize)>> {
    ga.check_same_size(gb)?;
    let n = ga.n();
    let na = ga.neighbourhoods();
    let nb = gb.neighbourhoods();
    let pairs = (0..n)
        .into_par_iter()
        .map(|u| {
            (u + 1..n)
                .filter(|&v| !na[u].intersects(&nb[v]) && !na[v].intersects(&nb[u]))
                .map(|v| (u, v))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    Ok(pairs)
}

/// `C(n,2) (1 - 2 p10 p01)^(n-2)`, the mean number of blocking pairs when
/// `p11 = 0`.
pub fn expected_blocking_pairs(n: usize, p: &JointEdgeDistribution) -> Result<f64> {
    if p.p11 > PROB_TOL {
        return Err(Error::InvalidInput(format!(
            "blocking-pair mean needs p11 = 0, got {}",
            p.p11
        )));
    }
    if n < 2 {
        return Ok(0.0);
    }
    Ok(pair_count(n) as f64 * (1.0 - 2.0 * p.p10 * p.p01).powi(n as i32 - 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::d_stat;
    use crate::model::{apply_permutation, sample_pair_with};
    use crate::rng::stream;

    fn g(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn intersect_and_difference_examples() {
        let a = g(5, &[(0, 1), (1, 2), (3, 4)]);
        assert_eq!(intersect(&a, &a).unwrap(), a);
        assert_eq!(difference(&a, &a).unwrap(), Graph::empty(5));
        assert_eq!(intersect(&Graph::complete(5), &Graph::empty(5)).unwrap(), Graph::empty(5));
        let x = intersect(&g(3, &[(0, 1), (0, 2)]), &g(3, &[(0, 2), (1, 2)])).unwrap();
        assert_eq!(x.edges(), vec![(0, 2)]);
        assert!(intersect(&a, &Graph::empty(4)).is_err());
    }

    #[test]
    fn automorphism_examples() {
        for n in 0..=7 {
            let r = automorphisms(&Graph::empty(n), 10).unwrap();
            assert_eq!(r.count, factorial_saturating(n));
            assert_eq!(r.isolated, n);
        }
        let path = automorphisms(&g(3, &[(0, 1), (1, 2)]), 10).unwrap();
        assert_eq!(path.count, 2);
        assert_eq!(automorphisms(&Graph::complete(3), 10).unwrap().count, 6);

        match automorphisms(&Graph::empty(12), 10) {
            Err(Error::AutomorphismCapacity { isolated, .. }) => assert_eq!(isolated, 12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn automorphism_list_matches_brute_force() {
        let mut rng = stream(41, 0, 0);
        for _ in 0..40 {
            let (a, _) = sample_pair_with(6, &JointEdgeDistribution::independent(0.4, 0.5).unwrap(), &mut rng);
            let brute: Vec<Permutation> = Permutation::all(6)
                .filter(|pi| apply_permutation(&a, pi).unwrap() == a)
                .collect();
            assert_eq!(automorphism_list(&a, 10).unwrap(), brute);
            let report = automorphisms(&a, 10).unwrap();
            assert_eq!(report.count, brute.len() as u128);
            assert!(report.count >= report.factorial_lower_bound);
        }
    }

    #[test]
    fn blocking_pair_examples() {
        let e = Graph::empty(6);
        assert_eq!(blocking_pairs(&e, &e).unwrap().len(), 15);

        let star = g(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let pairs = blocking_pairs(&star, &star).unwrap();
        assert!(pairs.iter().all(|&(u, v)| u == 0 || v == 0));
        assert!(!pairs.contains(&(1, 2)));
    }

    #[test]
    fn blocking_swaps_keep_d_zero() {
        let law = JointEdgeDistribution::new(0.0, 0.3, 0.3, 0.4).unwrap();
        let mut rng = stream(42, 0, 0);
        for _ in 0..200 {
            let (a, b) = sample_pair_with(7, &law, &mut rng);
            for (u, v) in blocking_pairs(&a, &b).unwrap() {
                let swap = Permutation::transposition(7, u, v).unwrap();
                assert_eq!(d_stat(&swap, &a, &b).unwrap(), 0);
            }
        }
    }

    #[test]
    fn expected_blocking_examples() {
        let free = JointEdgeDistribution::new(0.0, 0.0, 0.3, 0.7).unwrap();
        assert_eq!(expected_blocking_pairs(9, &free).unwrap(), 36.0);
        let half = JointEdgeDistribution::new(0.0, 0.5, 0.5, 0.0).unwrap();
        assert!((expected_blocking_pairs(4, &half).unwrap() - 1.5).abs() < 1e-15);
        assert!(expected_blocking_pairs(4, &JointEdgeDistribution::new(0.1, 0.4, 0.4, 0.1).unwrap()).is_err());
    }
}

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::combinatorics::CycleType;
use crate::error::{Error, Result};
use crate::model::graph::{pair_count, pair_index, pairs};

/// Bijection on `[n]`, stored as its image array.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n || seen[v] {
                return Err(Error::InvalidInput(format!("{image:?} is not a permutation of [{n}]")));
            }
            seen[v] = true;
        }
        Ok(Self { image })
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        Self::from_cycles(n, &[&[a, b]])
    }

    /// Builds a permutation from disjoint cycles; each cycle maps
    /// `c[k] -> c[k+1]` and the last element back to the first.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut image: Vec<usize> = (0..n).collect();
        let mut touched = vec![false; n];
        for cycle in cycles {
            for (k, &v) in cycle.iter().enumerate() {
                if v >= n || touched[v] {
                    return Err(Error::InvalidInput(format!("bad cycle {cycle:?} for n={n}")));
                }
                touched[v] = true;
                image[v] = cycle[(k + 1) % cycle.len()];
            }
        }
        Self::from_image(image)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut image: Vec<usize> = (0..n).collect();
        image.shuffle(rng);
        Self { image }
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.n()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v] = i;
        }
        Self { image: inv }
    }

    /// `self ∘ other`, i.e. `x -> self(other(x))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            image: other.image.iter().map(|&v| self.image[v]).collect(),
        }
    }

    /// Number of points not fixed.
    pub fn moved_points(&self) -> usize {
        self.image.iter().enumerate().filter(|(i, v)| i != *v).count()
    }

    pub fn is_involution(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| self.image[v] == i)
    }

    /// Cycle lengths of the vertex permutation, sorted descending.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n()];
        let mut lengths = Vec::new();
        for start in 0..self.n() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                v = self.image[v];
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }

    /// Advances to the next permutation in lexicographic order of the image
    /// array; returns `false` (leaving `self` unchanged) at the last one.
    pub fn next_lexicographic(&mut self) -> bool {
        let a = &mut self.image;
        if a.len() < 2 {
            return false;
        }
        let Some(i) = (0..a.len() - 1).rev().find(|&i| a[i] < a[i + 1]) else {
            return false;
        };
        let j = (i + 1..a.len()).rev().find(|&j| a[j] > a[i]).expect("successor exists");
        a.swap(i, j);
        a[i + 1..].reverse();
        true
    }

    /// All permutations of `[n]` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        let mut next = Some(Self::identity(n));
        std::iter::from_fn(move || {
            let current = next.take()?;
            let mut succ = current.clone();
            if succ.next_lexicographic() {
                next = Some(succ);
            }
            Some(current)
        })
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.image)
    }
}

/// Action `{i, j} -> {π(i), π(j)}` of a vertex permutation on pair indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedAction {
    pub pair_image: Vec<usize>,
    pub cycle_type: CycleType,
    /// Number of vertices moved by the underlying permutation.
    pub moved_vertices: usize,
}

impl LiftedAction {
    pub fn pair_count(&self) -> usize {
        self.pair_image.len()
    }

    pub fn fixed_pairs(&self) -> u64 {
        self.cycle_type.count(1)
    }

    /// `c_l` for `l = 1..=N` (index 0 unused).
    pub fn cycle_counts(&self) -> &[u64] {
        self.cycle_type.counts()
    }
}

pub fn lift(pi: &Permutation) -> LiftedAction {
    let n = pi.n();
    let total = pair_count(n);
    let pair_image: Vec<usize> = pairs(n)
        .map(|(i, j)| pair_index(n, pi.apply(i), pi.apply(j)))
        .collect();

    let mut counts = vec![0u64; total + 1];
    let mut seen = vec![false; total];
    for start in 0..total {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            e = pair_image[e];
            len += 1;
        }
        counts[len] += 1;
    }

    LiftedAction {
        pair_image,
        cycle_type: CycleType::from_counts(counts),
        moved_vertices: pi.moved_points(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_examples() {
        let id = lift(&Permutation::identity(5));
        assert_eq!(id.fixed_pairs(), 10);
        assert_eq!(id.cycle_type.total(), 10);
        assert!(id.cycle_counts()[2..].iter().all(|&c| c == 0));

        let t = lift(&Permutation::transposition(4, 0, 1).unwrap());
        assert_eq!(t.pair_count(), 6);
        assert_eq!(t.fixed_pairs(), 2);
        assert_eq!(t.cycle_type.count(2), 2);

        let c3 = lift(&Permutation::from_cycles(3, &[&[0, 1, 2]]).unwrap());
        assert_eq!(c3.fixed_pairs(), 0);
        assert_eq!(c3.cycle_type.count(3), 1);
    }

    #[test]
    fn lexicographic_enumeration() {
        let all: Vec<_> = Permutation::all(4).collect();
        assert_eq!(all.len(), 24);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Permutation::all(0).count(), 1);
        assert_eq!(Permutation::all(1).count(), 1);
    }

    #[test]
    fn from_image_rejects_non_bijections() {
        assert!(Permutation::from_image(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_image(vec![0, 3, 1]).is_err());
        assert!(Permutation::from_cycles(3, &[&[0, 1], &[1, 2]]).is_err());
    }

    #[test]
    fn compose_and_inverse() {
        let p = Permutation::from_cycles(5, &[&[0, 2, 4], &[1, 3]]).unwrap();
        assert!(p.compose(&p.inverse()).is_identity());
        assert_eq!(p.cycle_lengths(), vec![3, 2]);
        assert!(!p.is_involution());
        assert!(Permutation::transposition(5, 1, 3).unwrap().is_involution());
    }
}

use std::fmt;

use crate::error::{ensure_same_size, Error, Result};

/// Number of unordered pairs `C(n, 2)`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Canonical 0-based index of the pair `{i, j}`: lexicographic over `(i, j)`
/// with `i < j`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairs of `[n]` in canonical order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Fixed-length bit vector. Bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.trim();
        v
    }

    fn trim(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        debug_assert!(idx < self.len);
        self.words[idx / WORD] >> (idx % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, idx: usize, value: bool) {
        debug_assert!(idx < self.len);
        let mask = 1u64 << (idx % WORD);
        if value {
            self.words[idx / WORD] |= mask;
        } else {
            self.words[idx / WORD] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Hamming distance; lengths must agree.
    pub fn xor_count(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn and_count(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        let mut out = Self {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| f(*a, *b)).collect(),
        };
        out.trim();
        out
    }

    pub fn and(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn and_not(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * WORD + tz)
            })
        })
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Simple graph on vertex set `[n]`, stored as its edge indicator over the
/// `C(n, 2)` pairs in canonical order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BitVec,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: BitVec::zeros(pair_count(n)),
        }
    }

    pub fn complete(n: usize) -> Self {
        Self {
            n,
            edges: BitVec::ones(pair_count(n)),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidInput(format!("bad edge ({i},{j}) for n={n}")));
            }
            g.set_edge(i, j, true);
        }
        Ok(g)
    }

    pub fn from_bits(n: usize, edges: BitVec) -> Result<Self> {
        if edges.len() != pair_count(n) {
            return Err(Error::InvalidInput(format!(
                "edge vector has length {}, expected C({n},2) = {}",
                edges.len(),
                pair_count(n)
            )));
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pair_count(&self) -> usize {
        self.edges.len()
    }

    pub fn bits(&self) -> &BitVec {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.count_ones()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.get(pair_index(self.n, i, j))
    }

    #[inline]
    pub fn edge_at(&self, idx: usize) -> bool {
        self.edges.get(idx)
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        let idx = pair_index(self.n, i, j);
        self.edges.set(idx, present);
    }

    pub(crate) fn set_at(&mut self, idx: usize, present: bool) {
        self.edges.set(idx, present);
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        pairs(self.n).filter(|&(i, j)| self.has_edge(i, j)).collect()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for (i, j) in pairs(self.n) {
            if self.has_edge(i, j) {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        deg
    }

    /// Per-vertex neighbourhood bitsets.
    pub fn neighbourhoods(&self) -> Vec<BitVec> {
        let mut rows = vec![BitVec::zeros(self.n); self.n];
        for (i, j) in pairs(self.n) {
            if self.has_edge(i, j) {
                rows[i].set(j, true);
                rows[j].set(i, true);
            }
        }
        rows
    }

    /// Dense adjacency matrix, for inner loops that index `(i, j)` directly.
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let mut adj = vec![vec![false; self.n]; self.n];
        for (i, j) in pairs(self.n) {
            if self.has_edge(i, j) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
        adj
    }

    pub fn complement(&self) -> Self {
        let full = BitVec::ones(self.edges.len());
        Self {
            n: self.n,
            edges: full.and_not(&self.edges),
        }
    }

    pub fn isolated_vertices(&self) -> usize {
        self.degrees().iter().filter(|&&d| d == 0).count()
    }

    /// Two-line text form: `n`, then the `C(n,2)` edge bits in canonical order.
    pub fn to_text(&self) -> String {
        format!("{}\n{:?}\n", self.n, self.edges)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing vertex count line".into()))?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("vertex count {header:?}: {e}")))?;
        let body = lines.next().unwrap_or("").trim();
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Parse("unexpected trailing lines".into()));
        }
        let expected = pair_count(n);
        if body.len() != expected {
            return Err(Error::Parse(format!(
                "edge string has {} characters, expected {expected}",
                body.len()
            )));
        }
        let mut bits = BitVec::zeros(expected);
        for (idx, ch) in body.bytes().enumerate() {
            match ch {
                b'0' => {}
                b'1' => bits.set(idx, true),
                other => {
                    return Err(Error::Parse(format!(
                        "invalid character {:?} at position {idx}",
                        other as char
                    )))
                }
            }
        }
        Self::from_bits(n, bits)
    }

    pub(crate) fn check_same_size(&self, other: &Self) -> Result<()> {
        ensure_same_size(self.n, other.n)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, {:?})", self.n, self.edges())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_is_lexicographic() {
        for n in 1..9 {
            let listed: Vec<usize> = pairs(n).map(|(i, j)| pair_index(n, i, j)).collect();
            assert_eq!(listed, (0..pair_count(n)).collect::<Vec<_>>());
        }
        assert_eq!(pair_index(4, 2, 1), pair_index(4, 1, 2));
    }

    #[test]
    fn text_format() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.to_text(), "4\n100001\n");
        assert_eq!(Graph::from_text(&g.to_text()).unwrap(), g);
        assert_eq!(Graph::from_text("1\n\n").unwrap(), Graph::empty(1));
        assert_eq!(Graph::from_text("1").unwrap(), Graph::empty(1));
        assert!(Graph::from_text("3\n10").is_err());
        assert!(Graph::from_text("3\n1x0").is_err());
        assert!(Graph::from_text("three\n100").is_err());
    }

    #[test]
    fn bit_ops_respect_length() {
        let g = Graph::complete(12);
        assert_eq!(g.edge_count(), 66);
        assert_eq!(g.complement().edge_count(), 0);
        assert_eq!(Graph::empty(12).complement(), g);
        let ones: Vec<usize> = g.bits().iter_ones().collect();
        assert_eq!(ones, (0..66).collect::<Vec<_>>());
    }

    #[test]
    fn degrees_and_isolated() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.degrees(), vec![1, 2, 1, 0, 0]);
        assert_eq!(g.isolated_vertices(), 2);
        let nb = g.neighbourhoods();
        assert_eq!(nb[1].iter_ones().collect::<Vec<_>>(), vec![0, 2]);
    }
}

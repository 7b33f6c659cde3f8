//! Indexed collections of k-subsets of `{0, .., n-1}` with incidence counts.
//!
//! Indices are 0-based in the API and 1-based in the text format.

use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;
use rand::seq::index;
use rand::Rng;

use super::binom::binomial;
use crate::error::{invalid, Error, Result};
use crate::rng::seeded;

pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

/// Above this ambient size pair counts are kept in a hash map instead of a
/// dense triangular table.
const DENSE_PAIR_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    AllTuples,
    Subsampled {
        seed: u64,
    },
    /// `floor(n/k)` consecutive blocks; indices past the last block are unused.
    Disjoint,
    Explicit,
}

#[derive(Debug, Clone)]
enum PairCounts {
    /// Every pair has the same count (all-tuples families).
    Constant(u64),
    /// Row-major strict upper triangle.
    Dense(Vec<u32>),
    Sparse(HashMap<(u32, u32), u32>),
}

#[derive(Debug, Clone)]
pub struct SubsetFamily {
    n: usize,
    k: usize,
    kind: FamilyKind,
    /// Flattened sorted subsets, `k` entries each.
    members: Vec<u32>,
    index_counts: Vec<u64>,
    pairs: PairCounts,
}

/// First condition of the regularity check that fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyIndex {
        index: usize,
    },
    /// `M_i / M > 3k/n`.
    IndexShare {
        index: usize,
        count: u64,
        total: u64,
    },
    /// `M_ij / M_i > 3k/n`.
    PairShare {
        i: usize,
        j: usize,
        count: u64,
        index_count: u64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyIndex { index } => write!(f, "index {} is in no subset", index + 1),
            Violation::IndexShare { index, count, total } => {
                write!(f, "index {} is in {count} of {total} subsets", index + 1)
            }
            Violation::PairShare { i, j, count, index_count } => write!(
                f,
                "pair ({}, {}) shares {count} of the {index_count} subsets containing {}",
                i + 1,
                j + 1,
                i + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Regularity {
    Regular,
    Irregular(Violation),
}

impl Regularity {
    pub fn is_regular(&self) -> bool {
        matches!(self, Regularity::Regular)
    }
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if n > u32::MAX as usize {
        return Err(invalid("ambient size does not fit in 32 bits"));
    }
    Ok(())
}

pub fn all_tuples(n: usize, k: usize) -> Result<SubsetFamily> {
    all_tuples_with_cap(n, k, DEFAULT_ENUMERATION_CAP)
}

/// Every k-subset, in lexicographic order.
pub fn all_tuples_with_cap(n: usize, k: usize, cap: u128) -> Result<SubsetFamily> {
    check_shape(n, k)?;
    let total = binomial(n as u64, k as u64).filter(|&m| m <= cap).ok_or(Error::CombinatorialOverflow { n, k, cap })?;
    let total = total as usize;
    let mut members = Vec::with_capacity(total * k);
    let mut cur: Vec<u32> = (0..k as u32).collect();
    loop {
        members.extend_from_slice(&cur);
        // Advance the rightmost position that still has room.
        let mut p = k;
        while p > 0 && cur[p - 1] as usize == n - k + p - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        cur[p - 1] += 1;
        for q in p..k {
            cur[q] = cur[q - 1] + 1;
        }
    }
    debug_assert_eq!(members.len(), total * k);
    let per_index = binomial(n as u64 - 1, k as u64 - 1).unwrap() as u64;
    let per_pair = if k >= 2 && n >= 2 { binomial(n as u64 - 2, k as u64 - 2).unwrap() as u64 } else { 0 };
    Ok(SubsetFamily {
        n,
        k,
        kind: FamilyKind::AllTuples,
        members,
        index_counts: vec![per_index; n],
        pairs: PairCounts::Constant(per_pair),
    })
}

/// `m` subsets drawn independently and uniformly from all k-subsets.
pub fn subsample_family(n: usize, k: usize, m: usize, seed: u64) -> Result<SubsetFamily> {
    check_shape(n, k)?;
    if m == 0 {
        return Err(invalid("a subsampled family needs at least one subset"));
    }
    let mut rng = seeded(seed);
    let mut members = Vec::with_capacity(m * k);
    let mut buf = Vec::with_capacity(k);
    for _ in 0..m {
        draw_subset(&mut rng, n, k, &mut buf);
        members.extend_from_slice(&buf);
    }
    Ok(SubsetFamily::from_members(n, k, FamilyKind::Subsampled { seed }, members))
}

fn draw_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, out: &mut Vec<u32>) {
    out.clear();
    out.extend(index::sample(rng, n, k).into_iter().map(|i| i as u32));
    out.sort_unstable();
}

/// The blocks `{0..k}, {k..2k}, ...`: each point enters at most one subset.
pub fn disjoint_chunks(n: usize, k: usize) -> Result<SubsetFamily> {
    check_shape(n, k)?;
    let members = (0..(n / k * k) as u32).collect();
    Ok(SubsetFamily::from_members(n, k, FamilyKind::Disjoint, members))
}

pub fn check_family_regularity(f: &SubsetFamily) -> Regularity {
    f.regularity()
}

impl SubsetFamily {
    fn from_members(n: usize, k: usize, kind: FamilyKind, members: Vec<u32>) -> Self {
        let mut index_counts = vec![0u64; n];
        for &i in &members {
            index_counts[i as usize] += 1;
        }
        let pairs = count_pairs(n, k, &members);
        Self { n, k, kind, members, index_counts, pairs }
    }

    /// Family from explicit 0-based subsets; repeats are allowed.
    pub fn from_subsets(n: usize, k: usize, subsets: &[Vec<usize>]) -> Result<Self> {
        check_shape(n, k)?;
        if subsets.is_empty() {
            return Err(invalid("a family needs at least one subset"));
        }
        let mut members = Vec::with_capacity(subsets.len() * k);
        for s in subsets {
            let mut s: Vec<u32> = s.iter().map(|&i| i as u32).collect();
            s.sort_unstable();
            s.dedup();
            if s.len() != k || s.last().is_some_and(|&i| i as usize >= n) {
                return Err(Error::ShapeMismatch(format!("subset {s:?} is not a {k}-subset of [0, {n})")));
            }
            members.extend_from_slice(&s);
        }
        Ok(Self::from_members(n, k, FamilyKind::Explicit, members))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Number of subsets `M`.
    pub fn len(&self) -> usize {
        self.members.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn subset(&self, s: usize) -> &[u32] {
        &self.members[s * self.k..(s + 1) * self.k]
    }

    pub fn subsets(&self) -> std::slice::ChunksExact<'_, u32> {
        self.members.chunks_exact(self.k)
    }

    pub(crate) fn members(&self) -> &[u32] {
        &self.members
    }

    /// `M_i`.
    pub fn index_count(&self, i: usize) -> u64 {
        self.index_counts[i]
    }

    pub fn index_counts(&self) -> &[u64] {
        &self.index_counts
    }

    /// `M_ij` for `i != j`.
    pub fn pair_count(&self, i: usize, j: usize) -> u64 {
        assert!(i != j, "pair count needs distinct indices");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        match &self.pairs {
            PairCounts::Constant(c) => *c,
            PairCounts::Dense(t) => t[tri_index(self.n, a, b)] as u64,
            PairCounts::Sparse(m) => m.get(&(a as u32, b as u32)).copied().unwrap_or(0) as u64,
        }
    }

    /// Largest `M_ij` over `j != i`, with the `j` that attains it.
    fn max_pair(&self, i: usize) -> Option<(usize, u64)> {
        if self.n < 2 {
            return None;
        }
        match &self.pairs {
            PairCounts::Constant(c) => Some((if i == 0 { 1 } else { 0 }, *c)),
            _ => (0..self.n).filter(|&j| j != i).map(|j| (j, self.pair_count(i, j))).fold(
                None,
                |best: Option<(usize, u64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                },
            ),
        }
    }

    /// Maximal dependence fraction `max_i M_i / M`, exactly.
    pub fn dep(&self) -> Ratio<u64> {
        let max = self.index_counts.iter().copied().max().unwrap_or(0);
        Ratio::new(max, self.len() as u64)
    }

    pub fn dep_f64(&self) -> f64 {
        let d = self.dep();
        *d.numer() as f64 / *d.denom() as f64
    }

    /// Checks, in this order and with exact integer arithmetic: every index
    /// is used; `M_i / M <= 3k/n`; `M_ij / M_i <= 3k/n`.
    pub fn regularity(&self) -> Regularity {
        let n = self.n as u128;
        let bound = 3 * self.k as u128;
        let total = self.len() as u64;
        if let Some(index) = self.index_counts.iter().position(|&c| c == 0) {
            return Regularity::Irregular(Violation::EmptyIndex { index });
        }
        for (index, &count) in self.index_counts.iter().enumerate() {
            if count as u128 * n > bound * total as u128 {
                return Regularity::Irregular(Violation::IndexShare { index, count, total });
            }
        }
        for i in 0..self.n {
            let index_count = self.index_counts[i];
            if let Some((j, count)) = self.max_pair(i) {
                if count as u128 * n > bound * index_count as u128 {
                    return Regularity::Irregular(Violation::PairShare { i, j, count, index_count });
                }
            }
        }
        Regularity::Regular
    }

    /// One subset per line, space separated, 1-based.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for s in self.subsets() {
            let line: Vec<String> = s.iter().map(|i| (i + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Inverse of [`to_lines`](Self::to_lines); `k` is taken from the first line.
    pub fn parse_lines(n: usize, text: &str) -> Result<Self> {
        let mut subsets = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let s = line
                .split_whitespace()
                .map(|t| match t.parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(Error::Parse { line: no + 1, message: format!("bad index {t:?}") }),
                })
                .collect::<Result<Vec<_>>>()?;
            subsets.push(s);
        }
        let k = subsets.first().map(Vec::len).ok_or_else(|| invalid("empty family file"))?;
        Self::from_subsets(n, k, &subsets)
    }
}

fn tri_index(n: usize, a: usize, b: usize) -> usize {
    // Offset of row a in the strict upper triangle, then column.
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

fn count_pairs(n: usize, k: usize, members: &[u32]) -> PairCounts {
    if k < 2 {
        return PairCounts::Constant(0);
    }
    if n <= DENSE_PAIR_LIMIT {
        let mut t = vec![0u32; n * (n - 1) / 2];
        for s in members.chunks_exact(k) {
            for x in 0..k {
                for y in x + 1..k {
                    t[tri_index(n, s[x] as usize, s[y] as usize)] += 1;
                }
            }
        }
        PairCounts::Dense(t)
    } else {
        let mut m = HashMap::new();
        for s in members.chunks_exact(k) {
            for x in 0..k {
                for y in x + 1..k {
                    *m.entry((s[x], s[y])).or_insert(0) += 1;
                }
            }
        }
        PairCounts::Sparse(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recount(f: &SubsetFamily) -> (Vec<u64>, HashMap<(usize, usize), u64>) {
        let mut idx = vec![0u64; f.n()];
        let mut pairs = HashMap::new();
        for s in f.subsets() {
            for &i in s {
                idx[i as usize] += 1;
            }
            for &i in s {
                for &j in s {
                    if i != j {
                        *pairs.entry((i as usize, j as usize)).or_insert(0) += 1;
                    }
                }
            }
        }
        (idx, pairs)
    }

    fn assert_counts_consistent(f: &SubsetFamily) {
        let (idx, pairs) = recount(f);
        assert_eq!(idx, f.index_counts());
        for i in 0..f.n() {
            for j in 0..f.n() {
                if i != j {
                    assert_eq!(f.pair_count(i, j), pairs.get(&(i, j)).copied().unwrap_or(0));
                }
            }
        }
    }

    #[test]
    fn four_choose_two() {
        let f = all_tuples(4, 2).unwrap();
        let got: Vec<Vec<u32>> = f.subsets().map(|s| s.to_vec()).collect();
        assert_eq!(got, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert!(f.index_counts().iter().all(|&c| c == 3));
        assert_eq!(f.dep(), Ratio::new(1, 2));
        assert_counts_consistent(&f);
    }

    #[test]
    fn dependence_of_all_pairs_is_k_over_n() {
        assert_eq!(all_tuples(6, 2).unwrap().dep(), Ratio::new(1, 3));
    }

    #[test]
    fn full_subset() {
        let f = all_tuples(5, 5).unwrap();
        assert_eq!(f.len(), 1);
        assert!(f.index_counts().iter().all(|&c| c == 1));
        assert_eq!(f.dep(), Ratio::from_integer(1));
        assert!(f.regularity().is_regular());
    }

    #[test]
    fn cap_is_enforced() {
        let e = all_tuples_with_cap(30, 10, 1000).unwrap_err();
        assert!(matches!(e, Error::CombinatorialOverflow { n: 30, k: 10, .. }));
        assert!(all_tuples(200, 100).is_err());
        assert!(all_tuples(3, 4).is_err());
        assert!(all_tuples(3, 0).is_err());
    }

    #[test]
    fn subsampling_is_deterministic() {
        let a = subsample_family(10, 2, 1000, 42).unwrap();
        let b = subsample_family(10, 2, 1000, 42).unwrap();
        assert_eq!(a.members, b.members);
        assert_eq!(a.kind(), FamilyKind::Subsampled { seed: 42 });
        assert_counts_consistent(&a);
    }

    #[test]
    fn subsampling_the_only_subset() {
        let f = subsample_family(4, 4, 7, 1).unwrap();
        assert_eq!(f.len(), 7);
        assert!(f.subsets().all(|s| s == [0, 1, 2, 3]));
    }

    #[test]
    fn missing_index_is_irregular() {
        let f = SubsetFamily::from_subsets(4, 2, &[vec![0, 1], vec![0, 1], vec![0, 2]]).unwrap();
        assert_eq!(f.regularity(), Regularity::Irregular(Violation::EmptyIndex { index: 3 }));
    }

    #[test]
    fn boundary_ties_pass() {
        // n = 6, k = 1: 3k/n = 1/2. Index 0 appears in exactly half of the subsets.
        let f = SubsetFamily::from_subsets(
            6,
            1,
            &[vec![0], vec![0], vec![0], vec![1], vec![2], vec![3], vec![4], vec![5], vec![0], vec![0]],
        )
        .unwrap();
        assert_eq!(f.index_count(0), 5);
        assert_eq!(f.len(), 10);
        assert!(f.regularity().is_regular());
        let g = SubsetFamily::from_subsets(
            6,
            1,
            &[vec![0], vec![0], vec![0], vec![1], vec![2], vec![3], vec![4], vec![5], vec![0], vec![0], vec![0]],
        )
        .unwrap();
        assert!(matches!(g.regularity(), Regularity::Irregular(Violation::IndexShare { index: 0, .. })));
    }

    #[test]
    fn disjoint_blocks() {
        let f = disjoint_chunks(7, 2).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.subset(2), &[4, 5]);
        assert_eq!(f.index_count(6), 0);
        assert_eq!(f.dep(), Ratio::new(1, 3));
        assert_counts_consistent(&f);
    }

    #[test]
    fn text_round_trip() {
        let f = subsample_family(9, 3, 20, 5).unwrap();
        let g = SubsetFamily::parse_lines(9, &f.to_lines()).unwrap();
        assert_eq!(f.members, g.members);
        assert!(SubsetFamily::parse_lines(3, "1 2\n0 1\n").is_err());
        assert!(SubsetFamily::parse_lines(3, "1 4\n").is_err());
    }

    #[test]
    fn sparse_pairs_match_dense() {
        let f = subsample_family(DENSE_PAIR_LIMIT + 10, 3, 2000, 9).unwrap();
        assert!(matches!(f.pairs, PairCounts::Sparse(_)));
        let s = f.subset(0).to_vec();
        assert!(f.pair_count(s[0] as usize, s[2] as usize) >= 1);
        let (_, pairs) = recount(&f);
        for (&(i, j), &c) in &pairs {
            assert_eq!(f.pair_count(i, j), c);
        }
    }

    proptest! {
        #[test]
        fn all_tuples_incidence_is_exact(n in 1usize..12, k in 1usize..6) {
            prop_assume!(k <= n);
            let f = all_tuples(n, k).unwrap();
            prop_assert_eq!(f.len() as u128, binomial(n as u64, k as u64).unwrap());
            assert_counts_consistent(&f);
            for &c in f.index_counts() {
                // M_i / M == k / n
                prop_assert_eq!(c as u128 * n as u128, (k * f.len()) as u128);
            }
            if n >= 2 && k >= 2 {
                // M_ij / M_i == (k-1)/(n-1)
                prop_assert_eq!(
                    f.pair_count(0, n - 1) as u128 * (n - 1) as u128,
                    (k - 1) as u128 * f.index_count(0) as u128
                );
            }
            prop_assert!(f.regularity().is_regular());
        }

        #[test]
        fn subsampled_incidence_is_exact(n in 2usize..15, k in 1usize..5, m in 1usize..200, seed: u64) {
            prop_assume!(k <= n);
            let f = subsample_family(n, k, m, seed).unwrap();
            assert_counts_consistent(&f);
            for s in f.subsets() {
                prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}

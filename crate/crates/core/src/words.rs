//! Words over the generators `a_1..a_n` of the Chinese monoid, the defining
//! relations `a_j a_k a_i = a_k a_j a_i = a_k a_i a_j` (`i ≤ j ≤ k`), the
//! canonical-form pattern and growth counting.
//!
//! The rewriting-based routines (`equiv_class`, `canonical_oracle`,
//! `growth_oracle`) enumerate whole equivalence classes and are meant for
//! desk-scale cross-checks only.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default bound on the number of words an oracle may explore.
pub const DEFAULT_CLASS_CAP: usize = 1_000_000;

/// The generator `a_index`, with `index` starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator(pub usize);

impl Generator {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// A word of `Ch_rank`. The empty word is the identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    rank: usize,
    letters: Vec<Generator>,
}

impl Word {
    pub fn new(rank: usize, letters: Vec<Generator>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidRank { rank, reason: "rank must be at least 1" });
        }
        for g in &letters {
            if g.0 == 0 || g.0 > rank {
                return Err(Error::IndexOutOfRange { index: g.0, max: rank });
            }
        }
        Ok(Word { rank, letters })
    }

    /// Builds a word from 1-based generator indices.
    pub fn from_indices(rank: usize, indices: &[usize]) -> Result<Self> {
        Word::new(rank, indices.iter().copied().map(Generator).collect())
    }

    pub fn empty(rank: usize) -> Self {
        Word { rank, letters: Vec::new() }
    }

    /// Parses `"a2 a3 a1"` (tokens `a<index>`, separators optional) or, for
    /// ranks up to 9, the compact digit form `"231"`.
    pub fn parse(rank: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        if !text.contains('a') && !text.is_empty() {
            if rank > 9 {
                return Err(Error::Parse("compact digit form is only accepted for rank <= 9".into()));
            }
            let mut idx = Vec::new();
            for ch in text.chars().filter(|c| !c.is_whitespace()) {
                let d =
                    ch.to_digit(10).ok_or_else(|| Error::Parse(format!("unexpected character {ch:?}")))?;
                idx.push(d as usize);
            }
            return Word::from_indices(rank, &idx);
        }

        let mut idx = Vec::new();
        let mut chars = text.chars().peekable();
        while let Some(ch) = chars.next() {
            if ch.is_whitespace() {
                continue;
            }
            if ch != 'a' {
                return Err(Error::Parse(format!("expected `a<index>`, found {ch:?}")));
            }
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            if digits.is_empty() {
                return Err(Error::Parse("generator `a` without an index".into()));
            }
            let i: usize = digits.parse().map_err(|_| Error::Parse(format!("bad index {digits}")))?;
            idx.push(i);
        }
        Word::from_indices(rank, &idx)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[Generator] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: other.rank });
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(Word { rank: self.rank, letters })
    }

    /// The same letters read in a larger rank.
    pub fn embed(&self, rank: usize) -> Result<Word> {
        Word::new(rank, self.letters.clone())
    }

    /// Relabels `a_j ↦ a_{j−1}` for `j > ell`, giving a word of rank
    /// `rank − 1`. Requires `1 ≤ ell < rank`.
    pub fn merge(&self, ell: usize) -> Result<Word> {
        if self.rank < 2 || ell == 0 || ell >= self.rank {
            return Err(Error::IndexOutOfRange { index: ell, max: self.rank.saturating_sub(1) });
        }
        let letters = self.letters.iter().map(|g| if g.0 > ell { Generator(g.0 - 1) } else { *g }).collect();
        Ok(Word { rank: self.rank - 1, letters })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, g) in self.letters.iter().enumerate() {
            if p > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Number of exponents `k_{ji}` (`1 ≤ i ≤ j ≤ n`) of a rank-`n` canonical form.
pub fn tuple_len(rank: usize) -> usize {
    rank * (rank + 1) / 2
}

/// Position of `k_{ji}` in the canonical listing
/// `k11, k21, k22, k31, k32, k33, ...`.
pub fn coord(j: usize, i: usize) -> usize {
    debug_assert!(1 <= i && i <= j);
    j * (j - 1) / 2 + (i - 1)
}

/// All index pairs `(j, i)` of rank `n` in canonical listing order.
pub fn coords(rank: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=rank).flat_map(|j| (1..=j).map(move |i| (j, i)))
}

/// The exponents `k_{ji}` of a canonical form
/// `b_1 ⋯ b_n`, `b_j = (a_j a_1)^{k_{j1}} ⋯ (a_j a_{j−1})^{k_{j(j−1)}} a_j^{k_{jj}}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExponentTuple {
    rank: usize,
    k: Vec<u64>,
}

impl ExponentTuple {
    pub fn zero(rank: usize) -> Self {
        ExponentTuple { rank, k: vec![0; tuple_len(rank)] }
    }

    /// Builds a tuple from values in canonical listing order.
    pub fn from_vec(rank: usize, k: Vec<u64>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidRank { rank, reason: "rank must be at least 1" });
        }
        if k.len() != tuple_len(rank) {
            return Err(Error::Malformed(format!(
                "rank {rank} needs {} exponents, got {}",
                tuple_len(rank),
                k.len()
            )));
        }
        Ok(ExponentTuple { rank, k })
    }

    /// Builds a tuple from `(j, i, value)` triples; unlisted entries are 0.
    pub fn from_entries(rank: usize, entries: &[(usize, usize, u64)]) -> Result<Self> {
        let mut t = ExponentTuple::zero(rank);
        for &(j, i, v) in entries {
            t.set(j, i, v)?;
        }
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.k
    }

    pub fn get(&self, j: usize, i: usize) -> u64 {
        assert!(1 <= i && i <= j && j <= self.rank, "k[{j},{i}] out of range for rank {}", self.rank);
        self.k[coord(j, i)]
    }

    pub fn set(&mut self, j: usize, i: usize, value: u64) -> Result<()> {
        if j == 0 || j > self.rank {
            return Err(Error::IndexOutOfRange { index: j, max: self.rank });
        }
        if i == 0 || i > j {
            return Err(Error::IndexOutOfRange { index: i, max: j });
        }
        self.k[coord(j, i)] = value;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.k.iter().all(|&v| v == 0)
    }

    /// Letter length of the canonical word: diagonal exponents count once,
    /// off-diagonal ones twice.
    pub fn weight(&self) -> u64 {
        coords(self.rank).map(|(j, i)| if i == j { self.get(j, i) } else { 2 * self.get(j, i) }).sum()
    }

    /// Nonzero entries as `(j, i, value)` in listing order.
    pub fn nonzero(&self) -> Vec<(usize, usize, u64)> {
        coords(self.rank)
            .filter_map(|(j, i)| {
                let v = self.get(j, i);
                (v != 0).then_some((j, i, v))
            })
            .collect()
    }

    /// The same element viewed in rank `rank`, padding with zeros or
    /// dropping trailing rows that must be zero.
    pub fn with_rank(&self, rank: usize) -> Result<Self> {
        let len = tuple_len(rank);
        if len >= self.k.len() {
            let mut k = self.k.clone();
            k.resize(len, 0);
            return ExponentTuple::from_vec(rank, k);
        }
        if self.k[len..].iter().any(|&v| v != 0) {
            return Err(Error::Malformed(format!("tuple uses generators beyond rank {rank}")));
        }
        ExponentTuple::from_vec(rank, self.k[..len].to_vec())
    }
}

impl fmt::Display for ExponentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nz = self.nonzero();
        if nz.is_empty() {
            return f.write_str("(all zero)");
        }
        for (p, (j, i, v)) in nz.into_iter().enumerate() {
            if p > 0 {
                f.write_str(" ")?;
            }
            write!(f, "k[{j},{i}]={v}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TupleRepr {
    rank: usize,
    k: Vec<(usize, usize, u64)>,
}

impl Serialize for ExponentTuple {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TupleRepr { rank: self.rank, k: self.nonzero() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExponentTuple {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = TupleRepr::deserialize(deserializer)?;
        ExponentTuple::from_entries(raw.rank.max(1), &raw.k)
            .and_then(|t| {
                if raw.rank == 0 {
                    Err(Error::InvalidRank { rank: 0, reason: "rank must be at least 1" })
                } else {
                    Ok(t)
                }
            })
            .map_err(serde::de::Error::custom)
    }
}

/// The relation class `{a_j a_k a_i, a_k a_j a_i, a_k a_i a_j}` of `i ≤ j ≤ k`.
fn relation_class(i: usize, j: usize, k: usize) -> [[usize; 3]; 3] {
    [[j, k, i], [k, j, i], [k, i, j]]
}

/// Relation classes containing the factor `(x, y, z)`.
fn classes_of(x: usize, y: usize, z: usize) -> Vec<[[usize; 3]; 3]> {
    let mut out = Vec::with_capacity(3);
    // x y z = a_j a_k a_i
    if z <= x && x <= y {
        out.push(relation_class(z, x, y));
    }
    // x y z = a_k a_j a_i
    if z <= y && y <= x {
        out.push(relation_class(z, y, x));
    }
    // x y z = a_k a_i a_j
    if y <= z && z <= x {
        out.push(relation_class(y, z, x));
    }
    out
}

/// Words reachable from `w` by one application of a defining relation.
pub fn rewrite_neighbors(w: &Word) -> HashSet<Word> {
    let mut out = HashSet::new();
    let idx: Vec<usize> = w.letters.iter().map(|g| g.0).collect();
    for p in 0..idx.len().saturating_sub(2) {
        let (x, y, z) = (idx[p], idx[p + 1], idx[p + 2]);
        for class in classes_of(x, y, z) {
            for member in class {
                if member == [x, y, z] {
                    continue;
                }
                let mut letters = w.letters.clone();
                for (q, &m) in member.iter().enumerate() {
                    letters[p + q] = Generator(m);
                }
                out.insert(Word { rank: w.rank, letters });
            }
        }
    }
    out
}

/// Breadth-first closure of `rewrite_neighbors`: the full equivalence class
/// of `w`. Fails if more than `cap` words are discovered.
pub fn equiv_class(w: &Word, cap: usize) -> Result<HashSet<Word>> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(w.clone());
    queue.push_back(w.clone());
    while let Some(u) = queue.pop_front() {
        for v in rewrite_neighbors(&u) {
            if !seen.contains(&v) {
                if seen.len() >= cap {
                    return Err(Error::CapExceeded { cap });
                }
                seen.insert(v.clone());
                queue.push_back(v);
            }
        }
    }
    Ok(seen)
}

/// Returns the exponent tuple if `w` is literally a canonical word.
pub fn is_canonical(w: &Word) -> Option<ExponentTuple> {
    let n = w.rank;
    let letters: Vec<usize> = w.letters.iter().map(|g| g.0).collect();
    let mut k = ExponentTuple::zero(n);
    let mut block = 0usize; // current block index j; 0 before the first letter
    let mut last_pair = 0usize; // smallest i allowed for the next pair (a_j a_i)
    let mut in_tail = false;
    let mut p = 0;
    while p < letters.len() {
        let x = letters[p];
        if x > block {
            block = x;
            last_pair = 1;
            in_tail = false;
        } else if x < block {
            return None;
        }
        // x == block here
        match letters.get(p + 1) {
            Some(&y) if y < block => {
                if in_tail || y < last_pair {
                    return None;
                }
                last_pair = y;
                k.k[coord(block, y)] += 1;
                p += 2;
            }
            _ => {
                in_tail = true;
                k.k[coord(block, block)] += 1;
                p += 1;
            }
        }
    }
    Some(k)
}

/// The canonical word `b_1 ⋯ b_n` with exponents `k`.
pub fn expand(k: &ExponentTuple) -> Word {
    let mut letters = Vec::with_capacity(k.weight() as usize);
    for j in 1..=k.rank {
        for i in 1..j {
            for _ in 0..k.get(j, i) {
                letters.push(Generator(j));
                letters.push(Generator(i));
            }
        }
        letters.extend(std::iter::repeat_n(Generator(j), k.get(j, j) as usize));
    }
    Word { rank: k.rank, letters }
}

/// Canonical form by exhaustive rewriting: the unique canonical member of the
/// equivalence class of `w`.
pub fn canonical_oracle(w: &Word, cap: usize) -> Result<ExponentTuple> {
    let class = equiv_class(w, cap)?;
    let mut found: Vec<ExponentTuple> = class.iter().filter_map(is_canonical).collect();
    if found.len() != 1 {
        return Err(Error::CrossSection { word: w.to_string(), count: found.len() });
    }
    Ok(found.pop().unwrap())
}

/// Number of elements of `Ch_n` of length `m`: the number of exponent tuples
/// of weight `m`, counted by a coin-change recurrence with `n` parts of
/// weight 1 and `n(n−1)/2` parts of weight 2.
pub fn growth_count(n: usize, m: usize) -> BigUint {
    let ones = n;
    let twos = n * n.saturating_sub(1) / 2;
    let mut ways = vec![BigUint::zero(); m + 1];
    ways[0] = BigUint::one();
    let parts = std::iter::repeat_n(1usize, ones).chain(std::iter::repeat_n(2usize, twos));
    for w in parts {
        for total in w..=m {
            let add = ways[total - w].clone();
            ways[total] += add;
        }
    }
    ways.swap_remove(m)
}

/// Number of equivalence classes of length-`m` words over `n` generators, by
/// enumerating all `n^m` words. Every class is checked to contain exactly
/// one canonical word.
pub fn growth_oracle(n: usize, m: usize, cap: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidRank { rank: n, reason: "rank must be at least 1" });
    }
    let total = (n as u128).checked_pow(m as u32).filter(|&t| t <= cap as u128);
    let total = total.ok_or(Error::CapExceeded { cap })? as usize;

    let mut seen: HashSet<Word> = HashSet::new();
    let mut classes = 0u64;
    let mut digits = vec![1usize; m];
    for step in 0..total {
        if step > 0 {
            // odometer increment
            let mut p = m;
            while p > 0 {
                p -= 1;
                if digits[p] < n {
                    digits[p] += 1;
                    break;
                }
                digits[p] = 1;
            }
        }
        let w = Word::from_indices(n, &digits)?;
        if seen.contains(&w) {
            continue;
        }
        let class = equiv_class(&w, cap)?;
        let canon = class.iter().filter(|u| is_canonical(u).is_some()).count();
        if canon != 1 {
            return Err(Error::CrossSection { word: w.to_string(), count: canon });
        }
        classes += 1;
        seen.extend(class);
    }
    Ok(classes)
}

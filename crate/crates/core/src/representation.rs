//! The block-diagonal tropical representation of `Ch_n`.
//!
//! Rank 3 is served by three 2×2 representations stacked as three blocks.
//! Rank `n + 1` is built from rank `n` by stacking three lifted copies
//! `ρ_ℓ` (`a_j ↦ ρ(a_j)` for `j ≤ ℓ`, `ρ(a_{j−1})` otherwise) with
//! `ℓ = 1, 2, n`, so `build_rep(n)` has `3^{n−2}` blocks.
//!
//! Alongside the matrices, [`AffineExponentMap`] tracks the entries of the
//! image of a canonical word as an affine function of its exponents.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::trop::{block_mul, BlockDiagMatrix, TropMatrix, TropScalar};
use crate::words::{coord, coords, tuple_len, ExponentTuple, Word};

/// Which lifted copy a block group comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiftIndex {
    Fixed(usize),
    /// `ℓ = n − 1`, the last generator of the smaller rank.
    Last,
}

impl LiftIndex {
    pub fn resolve(self, prev_rank: usize) -> usize {
        match self {
            LiftIndex::Fixed(l) => l,
            LiftIndex::Last => prev_rank,
        }
    }
}

impl Serialize for LiftIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LiftIndex::Fixed(l) => serializer.serialize_u64(*l as u64),
            LiftIndex::Last => serializer.serialize_str("n-1"),
        }
    }
}

impl<'de> Deserialize<'de> for LiftIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(l) => Ok(LiftIndex::Fixed(l)),
            Raw::Str(s) if s == "n-1" => Ok(LiftIndex::Last),
            Raw::Str(s) => Err(D::Error::custom(format!("unknown lift index {s:?}"))),
        }
    }
}

/// The lift order used by [`build_rep`].
pub const LIFT_ORDER: [LiftIndex; 3] = [LiftIndex::Fixed(1), LiftIndex::Fixed(2), LiftIndex::Last];

/// Generator images of a representation of `Ch_rank` by block-diagonal
/// matrices with a common block structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representation {
    rank: usize,
    gens: Vec<BlockDiagMatrix>,
    lift_order: Vec<LiftIndex>,
}

impl Representation {
    pub fn new(rank: usize, gens: Vec<BlockDiagMatrix>, lift_order: Vec<LiftIndex>) -> Result<Self> {
        if rank == 0 || gens.len() != rank {
            return Err(Error::Malformed(format!(
                "rank {rank} needs {rank} generator images, got {}",
                gens.len()
            )));
        }
        let shape: Vec<usize> = gens[0].blocks().iter().map(TropMatrix::dim).collect();
        for g in &gens[1..] {
            let other: Vec<usize> = g.blocks().iter().map(TropMatrix::dim).collect();
            if other != shape {
                return Err(Error::Malformed("generator images differ in block structure".into()));
            }
        }
        Ok(Representation { rank, gens, lift_order })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn block_count(&self) -> usize {
        self.gens[0].block_count()
    }

    /// Size of the assembled square matrices.
    pub fn total_dim(&self) -> usize {
        self.gens[0].total_dim()
    }

    pub fn lift_order(&self) -> &[LiftIndex] {
        &self.lift_order
    }

    /// Image of `a_index` (1-based).
    pub fn image(&self, index: usize) -> &BlockDiagMatrix {
        &self.gens[index - 1]
    }

    pub fn images(&self) -> &[BlockDiagMatrix] {
        &self.gens
    }

    /// The representation keeping only the listed blocks, in the given order.
    pub fn restrict(&self, blocks: &[usize]) -> Result<Representation> {
        let count = self.block_count();
        if let Some(&b) = blocks.iter().find(|&&b| b >= count) {
            return Err(Error::IndexOutOfRange { index: b, max: count.saturating_sub(1) });
        }
        let gens = self
            .gens
            .iter()
            .map(|g| BlockDiagMatrix::new(blocks.iter().map(|&b| g.blocks()[b].clone()).collect()))
            .collect();
        Ok(Representation { rank: self.rank, gens, lift_order: Vec::new() })
    }
}

impl Serialize for Representation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Gens<'a>(&'a [BlockDiagMatrix]);
        impl Serialize for Gens<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (p, g) in self.0.iter().enumerate() {
                    map.serialize_entry(&format!("a{}", p + 1), g)?;
                }
                map.end()
            }
        }
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("rank", &self.rank)?;
        map.serialize_entry("generators", &Gens(&self.gens))?;
        map.serialize_entry("lift_order", &self.lift_order)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for Representation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rank: usize,
            generators: BTreeMap<String, BlockDiagMatrix>,
            #[serde(default)]
            lift_order: Vec<LiftIndex>,
        }
        let mut raw = Raw::deserialize(deserializer)?;
        if raw.generators.len() != raw.rank {
            return Err(D::Error::custom("generator count does not match rank"));
        }
        let gens = (1..=raw.rank)
            .map(|j| {
                raw.generators
                    .remove(&format!("a{j}"))
                    .ok_or_else(|| D::Error::custom(format!("missing generator a{j}")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Representation::new(raw.rank, gens, raw.lift_order).map_err(D::Error::custom)
    }
}

/// The three 2×2 images of `(a, b, c)` for each of the rank-3 building
/// blocks, as `(a11, a12, a22)`.
const BASE_IMAGES: [[(i64, i64, i64); 3]; 3] =
    [[(1, 0, 0), (0, 0, 1), (0, 0, 1)], [(1, 0, 0), (1, 0, 0), (0, 0, 1)], [(1, 1, 0), (0, 0, 0), (0, 1, 1)]];

/// The faithful rank-3 representation with three 2×2 blocks.
pub fn base_rep_ch3() -> Representation {
    let gens = (0..3)
        .map(|g| {
            BlockDiagMatrix::new(
                BASE_IMAGES
                    .iter()
                    .map(|imgs| {
                        let (a, b, d) = imgs[g];
                        TropMatrix::upper2(a, b, d)
                    })
                    .collect(),
            )
        })
        .collect();
    Representation { rank: 3, gens, lift_order: Vec::new() }
}

/// The representation of `Ch_{n+1}` sending `a_j` to `ρ(a_j)` for `j ≤ ell`
/// and to `ρ(a_{j−1})` otherwise.
pub fn lift(rep: &Representation, ell: usize) -> Result<Representation> {
    if ell == 0 || ell > rep.rank {
        return Err(Error::IndexOutOfRange { index: ell, max: rep.rank });
    }
    let gens = (1..=rep.rank + 1).map(|j| rep.image(if j <= ell { j } else { j - 1 }).clone()).collect();
    Ok(Representation { rank: rep.rank + 1, gens, lift_order: Vec::new() })
}

fn stack(parts: &[Representation], lift_order: Vec<LiftIndex>) -> Representation {
    let rank = parts[0].rank;
    let gens = (0..rank)
        .map(|g| {
            BlockDiagMatrix::new(parts.iter().flat_map(|p| p.gens[g].blocks().iter().cloned()).collect())
        })
        .collect();
    Representation { rank, gens, lift_order }
}

fn build_with(n: usize, order: [LiftIndex; 3]) -> Result<Representation> {
    if n < 3 {
        return Err(Error::InvalidRank { rank: n, reason: "the representation is built for rank >= 3" });
    }
    let mut rep = base_rep_ch3();
    for prev in 3..n {
        let ells = order.map(|l| l.resolve(prev));
        let parts = ells.iter().map(|&l| lift(&rep, l)).collect::<Result<Vec<_>>>()?;
        rep = stack(&parts, order.to_vec());
    }
    Ok(rep)
}

/// The faithful representation of `Ch_n`, `n ≥ 3`, with `3^{n−2}` blocks.
///
/// Blocks are grouped by the lift they come from, in the order
/// `ℓ = 1, 2, n−1`; each group is itself the rank-`(n−1)` layout.
pub fn build_rep(n: usize) -> Result<Representation> {
    build_with(n, LIFT_ORDER)
}

/// Representations stacked from an arbitrary lifting triple `r < s < t`.
/// Only `(1, 2, n−1)` is known to be faithful.
#[cfg(feature = "experimental")]
pub mod experimental {
    use super::*;

    pub fn build_rep_with_lifts(n: usize, order: [LiftIndex; 3]) -> Result<Representation> {
        for prev in 3..n {
            let [r, s, t] = order.map(|l| l.resolve(prev));
            if !(1 <= r && r < s && s < t && t <= prev) {
                return Err(Error::Malformed(format!(
                    "lift triple ({r}, {s}, {t}) is not strictly increasing within 1..={prev}"
                )));
            }
        }
        build_with(n, order)
    }
}

/// Image of a word: the ordered product of generator images. The empty word
/// maps to the tropical identity.
pub fn eval_word(rep: &Representation, w: &Word) -> Result<BlockDiagMatrix> {
    if w.rank() != rep.rank {
        return Err(Error::RankMismatch { expected: rep.rank, found: w.rank() });
    }
    let mut acc: Option<BlockDiagMatrix> = None;
    for g in w.letters() {
        let img = rep.image(g.index());
        acc = Some(match acc {
            None => img.clone(),
            Some(m) => block_mul(&m, img)?,
        });
    }
    Ok(acc.unwrap_or_else(|| {
        BlockDiagMatrix::new(rep.gens[0].blocks().iter().map(|b| TropMatrix::identity(b.dim())).collect())
    }))
}

/// One of the tracked entries `(1,1)`, `(1,2)`, `(2,2)` of a 2×2 block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryPos {
    P11,
    P12,
    P22,
}

impl EntryPos {
    pub const ALL: [EntryPos; 3] = [EntryPos::P11, EntryPos::P12, EntryPos::P22];

    pub fn row_col(self) -> (usize, usize) {
        match self {
            EntryPos::P11 => (0, 0),
            EntryPos::P12 => (0, 1),
            EntryPos::P22 => (1, 1),
        }
    }
}

impl Serialize for EntryPos {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (r, c) = self.row_col();
        [r + 1, c + 1].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EntryPos {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match <[usize; 2]>::deserialize(deserializer)? {
            [1, 1] => Ok(EntryPos::P11),
            [1, 2] => Ok(EntryPos::P12),
            [2, 2] => Ok(EntryPos::P22),
            other => Err(D::Error::custom(format!("untracked position {other:?}"))),
        }
    }
}

/// One tracked matrix entry as an affine function of the exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineRow {
    pub block: usize,
    pub position: EntryPos,
    /// Coefficients in canonical listing order of the exponents.
    pub coeffs: Vec<i64>,
    pub constant: i64,
}

impl AffineRow {
    pub fn eval(&self, k: &ExponentTuple) -> Result<i64> {
        let mut acc = self.constant;
        for (&c, &v) in self.coeffs.iter().zip(k.as_slice()) {
            let v = i64::try_from(v).map_err(|_| Error::Overflow)?;
            let term = c.checked_mul(v).ok_or(Error::Overflow)?;
            acc = acc.checked_add(term).ok_or(Error::Overflow)?;
        }
        Ok(acc)
    }
}

/// Entries of the image of the canonical word with exponents `k`, three
/// rows per block, as affine functions of `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineExponentMap {
    rank: usize,
    rows: Vec<AffineRow>,
}

impl AffineExponentMap {
    pub fn new(rank: usize, rows: Vec<AffineRow>) -> Result<Self> {
        let width = tuple_len(rank);
        if rows.iter().any(|r| r.coeffs.len() != width) {
            return Err(Error::Malformed(format!("every row needs {width} coefficients")));
        }
        Ok(AffineExponentMap { rank, rows })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rows(&self) -> &[AffineRow] {
        &self.rows
    }

    pub fn block_count(&self) -> usize {
        self.rows.iter().map(|r| r.block + 1).max().unwrap_or(0)
    }

    /// Row index of `(block, position)`.
    pub fn row_index(&self, block: usize, position: EntryPos) -> Option<usize> {
        self.rows.iter().position(|r| r.block == block && r.position == position)
    }

    /// Integer matrix of coefficients, one row per tracked entry.
    pub fn linear_part(&self) -> Vec<Vec<i64>> {
        self.rows.iter().map(|r| r.coeffs.clone()).collect()
    }

    /// Every row evaluated at `k`.
    pub fn eval_entries(&self, k: &ExponentTuple) -> Result<Vec<i64>> {
        if k.rank() != self.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: k.rank() });
        }
        self.rows.iter().map(|r| r.eval(k)).collect()
    }
}

fn coeff_key(rank: usize, j: usize, i: usize) -> String {
    if rank <= 9 {
        format!("k_{j}{i}")
    } else {
        format!("k_{j},{i}")
    }
}

fn parse_coeff_key(key: &str) -> Option<(usize, usize)> {
    let body = key.strip_prefix("k_")?;
    if let Some((j, i)) = body.split_once(',') {
        return Some((j.parse().ok()?, i.parse().ok()?));
    }
    let mut ch = body.chars();
    let j = ch.next()?.to_digit(10)? as usize;
    let i = ch.next()?.to_digit(10)? as usize;
    ch.next().is_none().then_some((j, i))
}

#[derive(Serialize, Deserialize)]
struct RowRepr {
    block: usize,
    position: EntryPos,
    coeffs: BTreeMap<String, i64>,
    constant: i64,
}

#[derive(Serialize, Deserialize)]
struct AffineRepr {
    rank: usize,
    rows: Vec<RowRepr>,
}

impl Serialize for AffineExponentMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = self
            .rows
            .iter()
            .map(|r| RowRepr {
                block: r.block,
                position: r.position,
                coeffs: coords(self.rank)
                    .zip(&r.coeffs)
                    .filter(|(_, &c)| c != 0)
                    .map(|((j, i), &c)| (coeff_key(self.rank, j, i), c))
                    .collect(),
                constant: r.constant,
            })
            .collect();
        AffineRepr { rank: self.rank, rows }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AffineExponentMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = AffineRepr::deserialize(deserializer)?;
        let width = tuple_len(raw.rank);
        let mut rows = Vec::with_capacity(raw.rows.len());
        for r in raw.rows {
            let mut coeffs = vec![0; width];
            for (key, c) in r.coeffs {
                let (j, i) = parse_coeff_key(&key)
                    .filter(|&(j, i)| 1 <= i && i <= j && j <= raw.rank)
                    .ok_or_else(|| D::Error::custom(format!("bad coefficient key {key:?}")))?;
                coeffs[coord(j, i)] = c;
            }
            rows.push(AffineRow { block: r.block, position: r.position, coeffs, constant: r.constant });
        }
        AffineExponentMap::new(raw.rank, rows).map_err(D::Error::custom)
    }
}

impl fmt::Display for AffineExponentMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let (pr, pc) = r.position.row_col();
            write!(f, "block {} ({},{}) =", r.block, pr + 1, pc + 1)?;
            for ((j, i), &c) in coords(self.rank).zip(&r.coeffs) {
                if c != 0 {
                    write!(f, " {c:+}*k[{j},{i}]")?;
                }
            }
            writeln!(f, " {:+}", r.constant)?;
        }
        Ok(())
    }
}

/// Rank-3 rows: closed forms of the three blocks of the image of
/// `a^{k11} (ba)^{k21} b^{k22} (ca)^{k31} (cb)^{k32} c^{k33}`, coefficients
/// over `(k11, k21, k22, k31, k32, k33)`.
const BASE_ROWS: [([i64; 6], i64); 9] = [
    ([1, 1, 0, 1, 0, 0], 0),
    ([1, 1, 1, 1, 2, 1], -1),
    ([0, 1, 1, 1, 2, 1], 0),
    ([1, 2, 1, 1, 1, 0], 0),
    ([1, 2, 1, 1, 1, 1], -1),
    ([0, 0, 0, 1, 1, 1], 0),
    ([1, 1, 0, 1, 0, 0], 0),
    ([1, 1, 0, 1, 1, 1], 0),
    ([0, 0, 0, 1, 1, 1], 0),
];

/// The linear substitution `k̃ ↦ k` induced on canonical forms by identifying
/// `a_{ℓ+1}` with `a_ℓ` (a rank-`(n+1)` tuple becomes a rank-`n` tuple).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstMap {
    rank: usize,
    ell: usize,
    /// For each target coordinate: `(source coordinate, coefficient)` terms.
    terms: Vec<Vec<(usize, u64)>>,
}

impl SubstMap {
    /// Target rank `n`; the source rank is `n + 1`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn terms(&self) -> &[Vec<(usize, u64)>] {
        &self.terms
    }

    pub fn apply(&self, source: &ExponentTuple) -> Result<ExponentTuple> {
        if source.rank() != self.rank + 1 {
            return Err(Error::RankMismatch { expected: self.rank + 1, found: source.rank() });
        }
        let s = source.as_slice();
        let k = self.terms.iter().map(|t| t.iter().map(|&(c, m)| m * s[c]).sum()).collect();
        ExponentTuple::from_vec(self.rank, k)
    }

    /// `row ∘ self`: pulls a coefficient row over rank-`n` exponents back to
    /// rank `n + 1`.
    pub fn pull_back(&self, row: &[i64]) -> Vec<i64> {
        let mut out = vec![0; tuple_len(self.rank + 1)];
        for (t, &c) in self.terms.iter().zip(row) {
            for &(src, m) in t {
                out[src] += c * m as i64;
            }
        }
        out
    }
}

/// The substitution for `Ch_{n+1} → Ch_n` merging `a_{ℓ+1}` into `a_ℓ`.
pub fn subst_map(n: usize, ell: usize) -> Result<SubstMap> {
    if ell == 0 || ell > n {
        return Err(Error::IndexOutOfRange { index: ell, max: n });
    }
    let l = ell;
    let terms = coords(n)
        .map(|(j, i)| {
            if j < l {
                vec![(coord(j, i), 1)]
            } else if j == l && l > i {
                vec![(coord(l, i), 1), (coord(l + 1, i), 1)]
            } else if j == l && i == l {
                vec![(coord(l, l), 1), (coord(l + 1, l), 2), (coord(l + 1, l + 1), 1)]
            } else if i < l {
                // j > ℓ > i
                vec![(coord(j + 1, i), 1)]
            } else if i == l {
                // j > i = ℓ
                vec![(coord(j + 1, l), 1), (coord(j + 1, l + 1), 1)]
            } else {
                // j, i > ℓ
                vec![(coord(j + 1, i + 1), 1)]
            }
        })
        .collect();
    Ok(SubstMap { rank: n, ell, terms })
}

/// The affine exponent map of [`build_rep`]`(n)`: rows are ordered by block,
/// then by position `(1,1), (1,2), (2,2)`.
pub fn affine_of_rep(n: usize) -> Result<AffineExponentMap> {
    if n < 3 {
        return Err(Error::InvalidRank { rank: n, reason: "the representation is built for rank >= 3" });
    }
    let mut rows: Vec<AffineRow> = BASE_ROWS
        .iter()
        .enumerate()
        .map(|(p, (coeffs, constant))| AffineRow {
            block: p / 3,
            position: EntryPos::ALL[p % 3],
            coeffs: coeffs.to_vec(),
            constant: *constant,
        })
        .collect();
    let mut blocks = 3;
    for prev in 3..n {
        let mut next = Vec::with_capacity(rows.len() * 3);
        for (group, lift) in LIFT_ORDER.iter().enumerate() {
            let s = subst_map(prev, lift.resolve(prev))?;
            next.extend(rows.iter().map(|r| AffineRow {
                block: group * blocks + r.block,
                position: r.position,
                coeffs: s.pull_back(&r.coeffs),
                constant: r.constant,
            }));
        }
        rows = next;
        blocks *= 3;
    }
    AffineExponentMap::new(n, rows)
}

/// Evaluates the affine map at `k` and assembles the 2×2 blocks.
///
/// At `k = 0` this gives the blocks' semigroup identities (for example
/// `[[0, −1], [−∞, 0]]`) rather than the tropical identity; the two
/// conventions agree on every nonempty word.
pub fn eval_affine(map: &AffineExponentMap, k: &ExponentTuple) -> Result<BlockDiagMatrix> {
    let entries = map.eval_entries(k)?;
    let count = map.block_count();
    let mut cells = vec![[0i64; 3]; count];
    for (row, v) in map.rows.iter().zip(entries) {
        cells[row.block][row.position as usize] = v;
    }
    Ok(BlockDiagMatrix::new(cells.into_iter().map(|[a, b, d]| TropMatrix::upper2(a, b, d)).collect()))
}

/// Reads the tracked entries `(1,1), (1,2), (2,2)` of a 2×2 upper-triangular
/// block, which must all be finite.
pub fn block_entries(m: &TropMatrix) -> Result<[i64; 3]> {
    if m.dim() != 2 || !m.get(1, 0).is_bottom() {
        return Err(Error::NotInImage(format!("{m} is not a 2x2 upper-triangular block")));
    }
    let fin = |s: TropScalar| s.finite().ok_or_else(|| Error::NotInImage(format!("{m} has a -inf entry")));
    Ok([fin(m.get(0, 0))?, fin(m.get(0, 1))?, fin(m.get(1, 1))?])
}

//! Exact max-plus arithmetic over ℤ ∪ {−∞}.
//!
//! Tropical addition is `max`, tropical multiplication is integer `+`.
//! `Bottom` (−∞) is neutral for addition and absorbing for multiplication.
//! Finite arithmetic is checked: an overflow is reported as
//! [`Error::Overflow`] rather than wrapping.
//!
//! Matrices are dense, square and row-major. Block-diagonal matrices are an
//! ordered list of square blocks multiplied blockwise.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An element of the integer max-plus semiring.
///
/// The derived order puts `Bottom` below every finite value, so `max` on
/// the derived order is tropical addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TropScalar {
    Bottom,
    Fin(i64),
}

impl TropScalar {
    pub const ZERO: TropScalar = TropScalar::Bottom;
    pub const ONE: TropScalar = TropScalar::Fin(0);

    pub fn is_bottom(self) -> bool {
        matches!(self, TropScalar::Bottom)
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            TropScalar::Bottom => None,
            TropScalar::Fin(v) => Some(v),
        }
    }
}

impl From<i64> for TropScalar {
    fn from(v: i64) -> Self {
        TropScalar::Fin(v)
    }
}

impl fmt::Display for TropScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TropScalar::Bottom => f.write_str("-inf"),
            TropScalar::Fin(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for TropScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TropScalar::Bottom => serializer.serialize_str("-inf"),
            TropScalar::Fin(v) => serializer.serialize_i64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for TropScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(v) => Ok(TropScalar::Fin(v)),
            Raw::Str(s) if s == "-inf" => Ok(TropScalar::Bottom),
            Raw::Str(s) => {
                Err(serde::de::Error::custom(format!("expected an integer or \"-inf\", got {s:?}")))
            }
        }
    }
}

/// Tropical addition: `max(x, y)`.
pub fn trop_add(x: TropScalar, y: TropScalar) -> TropScalar {
    x.max(y)
}

/// Tropical multiplication: `x + y`, with `Bottom` absorbing.
pub fn trop_mul(x: TropScalar, y: TropScalar) -> Result<TropScalar> {
    match (x, y) {
        (TropScalar::Fin(a), TropScalar::Fin(b)) => {
            a.checked_add(b).map(TropScalar::Fin).ok_or(Error::Overflow)
        }
        _ => Ok(TropScalar::Bottom),
    }
}

/// A square max-plus matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TropMatrix {
    dim: usize,
    entries: Vec<TropScalar>,
    triangular: bool,
}

impl TropMatrix {
    /// Builds a matrix from its rows. The triangular flag is set when every
    /// entry strictly below the diagonal is `Bottom`.
    pub fn new(rows: Vec<Vec<TropScalar>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Malformed("matrix dimension must be positive".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: row.len() });
            }
            entries.extend(row);
        }
        Ok(Self::from_entries(dim, entries))
    }

    fn from_entries(dim: usize, entries: Vec<TropScalar>) -> Self {
        let triangular = (0..dim).all(|r| (0..r).all(|c| entries[r * dim + c].is_bottom()));
        TropMatrix { dim, entries, triangular }
    }

    /// The 2×2 upper-triangular matrix `[[a, b], [−∞, d]]`.
    pub fn upper2(a: impl Into<TropScalar>, b: impl Into<TropScalar>, d: impl Into<TropScalar>) -> Self {
        TropMatrix {
            dim: 2,
            entries: vec![a.into(), b.into(), TropScalar::Bottom, d.into()],
            triangular: true,
        }
    }

    /// The tropical identity: `0` on the diagonal, `Bottom` elsewhere.
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![TropScalar::Bottom; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = TropScalar::ONE;
        }
        TropMatrix { dim, entries, triangular: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_triangular(&self) -> bool {
        self.triangular
    }

    /// Entry at zero-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> TropScalar {
        self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<TropScalar>> {
        self.entries.chunks(self.dim).map(<[_]>::to_vec).collect()
    }

    pub fn mul(&self, other: &TropMatrix) -> Result<TropMatrix> {
        mat_mul(self, other)
    }

    pub fn pow(&self, k: u64) -> Result<TropMatrix> {
        mat_pow(self, k)
    }
}

impl fmt::Display for TropMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (r, row) in self.entries.chunks(self.dim).enumerate() {
            if r > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (c, e) in row.iter().enumerate() {
                if c > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dim: usize,
    entries: Vec<Vec<TropScalar>>,
}

impl Serialize for TropMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr { dim: self.dim, entries: self.rows() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TropMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixRepr::deserialize(deserializer)?;
        if raw.entries.len() != raw.dim {
            return Err(serde::de::Error::custom(format!(
                "\"dim\" is {} but {} rows were given",
                raw.dim,
                raw.entries.len()
            )));
        }
        TropMatrix::new(raw.entries).map_err(serde::de::Error::custom)
    }
}

/// Max-plus matrix product: `(AB)[p][q] = max_r A[p][r] + B[r][q]`.
pub fn mat_mul(a: &TropMatrix, b: &TropMatrix) -> Result<TropMatrix> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { left: a.dim, right: b.dim });
    }
    let n = a.dim;
    let both_tri = a.triangular && b.triangular;
    let mut entries = vec![TropScalar::Bottom; n * n];
    for p in 0..n {
        // Upper-triangular operands only contribute for p <= r <= q.
        let q_start = if both_tri { p } else { 0 };
        for q in q_start..n {
            let (r_lo, r_hi) = if both_tri { (p, q + 1) } else { (0, n) };
            let mut acc = TropScalar::Bottom;
            for r in r_lo..r_hi {
                acc = trop_add(acc, trop_mul(a.entries[p * n + r], b.entries[r * n + q])?);
            }
            entries[p * n + q] = acc;
        }
    }
    if both_tri {
        Ok(TropMatrix { dim: n, entries, triangular: true })
    } else {
        Ok(TropMatrix::from_entries(n, entries))
    }
}

/// `k`-fold tropical product of `m` by square-and-multiply; `m⁰` is the
/// tropical identity.
pub fn mat_pow(m: &TropMatrix, k: u64) -> Result<TropMatrix> {
    let mut result = TropMatrix::identity(m.dim);
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = mat_mul(&result, &base)?;
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base)?;
        }
    }
    Ok(result)
}

/// A block-diagonal matrix stored as its ordered list of diagonal blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockDiagMatrix {
    blocks: Vec<TropMatrix>,
}

impl BlockDiagMatrix {
    pub fn new(blocks: Vec<TropMatrix>) -> Self {
        BlockDiagMatrix { blocks }
    }

    /// `count` identity blocks of size `block_dim`.
    pub fn identity(count: usize, block_dim: usize) -> Self {
        BlockDiagMatrix { blocks: vec![TropMatrix::identity(block_dim); count] }
    }

    pub fn blocks(&self) -> &[TropMatrix] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<TropMatrix> {
        self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Total size of the assembled square matrix.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(TropMatrix::dim).sum()
    }

    pub fn mul(&self, other: &BlockDiagMatrix) -> Result<BlockDiagMatrix> {
        block_mul(self, other)
    }

    /// The assembled dense matrix with `Bottom` off the blocks.
    pub fn to_dense(&self) -> Result<TropMatrix> {
        let n = self.total_dim();
        let mut rows = vec![vec![TropScalar::Bottom; n]; n];
        let mut offset = 0;
        for block in &self.blocks {
            for r in 0..block.dim() {
                for c in 0..block.dim() {
                    rows[offset + r][offset + c] = block.get(r, c);
                }
            }
            offset += block.dim();
        }
        TropMatrix::new(rows)
    }
}

/// Blockwise product.
pub fn block_mul(x: &BlockDiagMatrix, y: &BlockDiagMatrix) -> Result<BlockDiagMatrix> {
    if x.blocks.len() != y.blocks.len() {
        return Err(Error::BlockCountMismatch { left: x.blocks.len(), right: y.blocks.len() });
    }
    let blocks = x.blocks.iter().zip(&y.blocks).map(|(a, b)| mat_mul(a, b)).collect::<Result<Vec<_>>>()?;
    Ok(BlockDiagMatrix { blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use TropScalar::{Bottom, Fin};

    const NEG: TropScalar = Bottom;

    #[test]
    fn scalar_examples() {
        assert_eq!(trop_add(Fin(3), Fin(5)), Fin(5));
        assert_eq!(trop_add(Bottom, Fin(7)), Fin(7));
        assert_eq!(trop_add(Fin(-2), Fin(-2)), Fin(-2));
        assert_eq!(trop_mul(Fin(3), Fin(5)), Ok(Fin(8)));
        assert_eq!(trop_mul(Bottom, Fin(7)), Ok(Bottom));
        assert_eq!(trop_mul(Fin(0), Fin(-11)), Ok(Fin(-11)));
    }

    #[test]
    fn overflow_is_an_error() {
        assert_eq!(trop_mul(Fin(i64::MAX), Fin(1)), Err(Error::Overflow));
        assert_eq!(trop_mul(Fin(i64::MIN), Fin(-1)), Err(Error::Overflow));
        assert_eq!(trop_mul(Fin(i64::MAX), Bottom), Ok(Bottom));
        let m = TropMatrix::upper2(i64::MAX / 2, 0, 0);
        assert_eq!(mat_pow(&m, 3), Err(Error::Overflow));
    }

    #[test]
    fn small_products() {
        let a = TropMatrix::upper2(1, 0, 0);
        let b = TropMatrix::upper2(0, 0, 1);
        let c = TropMatrix::upper2(0, 0, 1);
        assert_eq!(mat_mul(&b, &a).unwrap(), TropMatrix::upper2(1, 0, 1));
        let cba = mat_mul(&mat_mul(&c, &b).unwrap(), &a).unwrap();
        assert_eq!(cba, TropMatrix::upper2(1, 1, 2));
        let i = TropMatrix::identity(2);
        assert_eq!(mat_mul(&i, &cba).unwrap(), cba);
    }

    #[test]
    fn powers() {
        let a = TropMatrix::upper2(1, 0, 0);
        assert_eq!(mat_pow(&a, 2).unwrap(), TropMatrix::upper2(2, 1, 0));
        let cb = TropMatrix::upper2(0, 1, 2);
        assert_eq!(mat_pow(&cb, 2).unwrap(), TropMatrix::upper2(0, 3, 4));
        assert_eq!(mat_pow(&cb, 0).unwrap(), TropMatrix::identity(2));
    }

    #[test]
    fn dimension_mismatch() {
        let err = mat_mul(&TropMatrix::identity(2), &TropMatrix::identity(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { left: 2, right: 3 });
        let x = BlockDiagMatrix::identity(2, 2);
        let y = BlockDiagMatrix::identity(3, 2);
        assert!(matches!(block_mul(&x, &y), Err(Error::BlockCountMismatch { .. })));
    }

    #[test]
    fn non_triangular_product() {
        let m = TropMatrix::new(vec![vec![Fin(0), NEG], vec![Fin(1), Fin(0)]]).unwrap();
        assert!(!m.is_triangular());
        let sq = mat_mul(&m, &m).unwrap();
        assert_eq!(sq.rows(), vec![vec![Fin(0), NEG], vec![Fin(1), Fin(0)]]);
        assert!(!sq.is_triangular());
    }

    #[test]
    fn block_degenerate_cases() {
        let a = TropMatrix::upper2(1, 0, 0);
        let b = TropMatrix::upper2(0, 3, -1);
        let single =
            block_mul(&BlockDiagMatrix::new(vec![a.clone()]), &BlockDiagMatrix::new(vec![b.clone()]))
                .unwrap();
        assert_eq!(single.blocks(), &[mat_mul(&a, &b).unwrap()]);
        let id = BlockDiagMatrix::identity(3, 2);
        assert_eq!(block_mul(&id, &id).unwrap(), id);
    }

    #[test]
    fn dense_assembly() {
        let x = BlockDiagMatrix::new(vec![TropMatrix::upper2(1, 2, 3), TropMatrix::upper2(4, 5, 6)]);
        let d = x.to_dense().unwrap();
        assert_eq!(d.dim(), 4);
        assert!(d.is_triangular());
        assert_eq!(d.get(2, 3), Fin(5));
        assert_eq!(d.get(1, 2), Bottom);
    }

    #[test]
    fn json_format() {
        let m = TropMatrix::upper2(1, -1, 2);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"dim":2,"entries":[[1,-1],["-inf",2]]}"#);
        let back: TropMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let x = BlockDiagMatrix::new(vec![m]);
        assert_eq!(
            serde_json::to_string(&x).unwrap(),
            r#"{"blocks":[{"dim":2,"entries":[[1,-1],["-inf",2]]}]}"#
        );
        assert!(serde_json::from_str::<TropMatrix>(r#"{"dim":2,"entries":[[1,"inf"],[0,0]]}"#).is_err());
        assert!(serde_json::from_str::<TropMatrix>(r#"{"dim":3,"entries":[[1,0],[0,0]]}"#).is_err());
    }

    fn all_small_triangular() -> Vec<TropMatrix> {
        let vals: Vec<TropScalar> = std::iter::once(Bottom).chain((-2..=2).map(Fin)).collect();
        let mut out = Vec::new();
        for &a in &vals {
            for &b in &vals {
                for &d in &vals {
                    out.push(TropMatrix::upper2(a, b, d));
                }
            }
        }
        out
    }

    #[test]
    fn associativity_exhaustive_small() {
        let ms = all_small_triangular();
        let prods: Vec<Vec<TropMatrix>> =
            ms.iter().map(|x| ms.iter().map(|y| mat_mul(x, y).unwrap()).collect()).collect();
        for (i, x) in ms.iter().enumerate() {
            for (j, y) in ms.iter().enumerate() {
                let xy = &prods[i][j];
                for (k, z) in ms.iter().enumerate() {
                    let left = mat_mul(xy, z).unwrap();
                    let right = mat_mul(x, &prods[j][k]).unwrap();
                    assert_eq!(left, right, "({x})({y})({z})");
                    assert!(left.is_triangular());
                }
            }
        }
    }

    fn scalar() -> impl Strategy<Value = TropScalar> {
        prop_oneof![1 => Just(Bottom), 6 => (-1000i64..1000).prop_map(Fin)]
    }

    fn matrix(dim: usize) -> impl Strategy<Value = TropMatrix> {
        proptest::collection::vec(proptest::collection::vec(scalar(), dim), dim)
            .prop_map(|rows| TropMatrix::new(rows).unwrap())
    }

    proptest! {
        #[test]
        fn semiring_laws(x in scalar(), y in scalar(), z in scalar()) {
            prop_assert_eq!(trop_add(trop_add(x, y), z), trop_add(x, trop_add(y, z)));
            prop_assert_eq!(trop_add(x, y), trop_add(y, x));
            prop_assert_eq!(trop_mul(trop_mul(x, y)?, z)?, trop_mul(x, trop_mul(y, z)?)?);
            prop_assert_eq!(trop_mul(x, y)?, trop_mul(y, x)?);
            prop_assert_eq!(
                trop_mul(x, trop_add(y, z))?,
                trop_add(trop_mul(x, y)?, trop_mul(x, z)?)
            );
            prop_assert_eq!(trop_add(x, Bottom), x);
            prop_assert_eq!(trop_mul(x, Bottom)?, Bottom);
            prop_assert_eq!(trop_mul(x, TropScalar::ONE)?, x);
        }

        #[test]
        fn power_splits(m in matrix(3), j in 0u64..=8, k in 0u64..=8) {
            let lhs = mat_pow(&m, j + k)?;
            let rhs = mat_mul(&mat_pow(&m, j)?, &mat_pow(&m, k)?)?;
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn triangularity_preserved(a in -50i64..50, b in -50i64..50, d in -50i64..50,
                                   e in -50i64..50, f in -50i64..50, g in -50i64..50,
                                   k in 0u64..12) {
            let x = TropMatrix::upper2(a, b, d);
            let y = TropMatrix::upper2(e, f, g);
            prop_assert!(mat_mul(&x, &y)?.is_triangular());
            prop_assert!(mat_pow(&x, k)?.is_triangular());
            let dense = TropMatrix::new(x.rows())?;
            prop_assert_eq!(mat_mul(&dense, &y)?, mat_mul(&x, &y)?);
        }

        #[test]
        fn matrix_json_round_trip(m in matrix(3)) {
            let s = serde_json::to_string(&m).unwrap();
            let back: TropMatrix = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}

//! Inverting the representation: exponent tuples from block images, and
//! canonical forms of arbitrary words in time linear in the word length
//! (times `3^{n−3}`).

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::representation::{
    affine_of_rep, base_rep_ch3, block_entries, eval_word, subst_map, AffineExponentMap, Representation,
    LIFT_ORDER,
};
use crate::trop::{BlockDiagMatrix, TropMatrix};
use crate::words::{ExponentTuple, Word};

fn base_rep() -> &'static Representation {
    static REP: OnceLock<Representation> = OnceLock::new();
    REP.get_or_init(base_rep_ch3)
}

fn base_affine() -> &'static AffineExponentMap {
    static MAP: OnceLock<AffineExponentMap> = OnceLock::new();
    MAP.get_or_init(|| affine_of_rep(3).expect("rank 3 affine map"))
}

fn non_negative(name: &str, v: i64) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::NotInImage(format!("{name} would be {v}")))
}

/// Solves the nine affine equations of the rank-3 blocks `x`, `y`, `z` for
/// `(k11, k21, k22, k31, k32, k33)`.
///
/// Expects the affine convention, in which the empty word has blocks
/// `[[0,−1],[−∞,0]]`, `[[0,−1],[−∞,0]]`, `[[0,0],[−∞,0]]`.
pub fn recover_ch3(x: &TropMatrix, y: &TropMatrix, z: &TropMatrix) -> Result<ExponentTuple> {
    let [x11, x12, x22] = block_entries(x)?;
    let [y11, y12, y22] = block_entries(y)?;
    let [_, z12, _] = block_entries(z)?;
    let over = |e: Option<i64>| e.ok_or(Error::Overflow);

    let k31 = over(x11.checked_add(y22).and_then(|s| s.checked_sub(z12)))?;
    let k33 = over(y12.checked_sub(y11).and_then(|s| s.checked_add(1)))?;
    let k32 = over(y22.checked_sub(k33).and_then(|s| s.checked_sub(k31)))?;
    let k21 = over(
        x11.checked_add(x22)
            .and_then(|s| s.checked_sub(x12))
            .and_then(|s| s.checked_sub(1))
            .and_then(|s| s.checked_sub(k31)),
    )?;
    let k11 = over(x11.checked_sub(k21).and_then(|s| s.checked_sub(k31)))?;
    let k22 = over(
        x22.checked_sub(k21)
            .and_then(|s| s.checked_sub(k33))
            .and_then(|s| s.checked_sub(k31))
            .and_then(|s| s.checked_sub(k32.checked_mul(2)?)),
    )?;

    let k = ExponentTuple::from_vec(
        3,
        vec![
            non_negative("k11", k11)?,
            non_negative("k21", k21)?,
            non_negative("k22", k22)?,
            non_negative("k31", k31)?,
            non_negative("k32", k32)?,
            non_negative("k33", k33)?,
        ],
    )?;

    let given = [x, y, z].into_iter().map(block_entries).collect::<Result<Vec<_>>>()?.concat();
    if base_affine().eval_entries(&k)? != given {
        return Err(Error::NotInImage(format!("blocks {x}, {y}, {z} fail re-substitution")));
    }
    Ok(k)
}

fn put(out: &mut ExponentTuple, j: usize, i: usize, v: i64) -> Result<()> {
    out.set(j, i, non_negative(&format!("k[{j},{i}]"), v)?)
}

/// Reconstructs a rank-`n` tuple `k̃` (`n ≥ 4`) from its three images under
/// the merges `ℓ = 1`, `ℓ = 2` and `ℓ = n−1`.
pub fn recover(
    n: usize,
    first: &ExponentTuple,
    second: &ExponentTuple,
    last: &ExponentTuple,
) -> Result<ExponentTuple> {
    if n < 4 {
        return Err(Error::InvalidRank { rank: n, reason: "use recover_ch3 for rank 3" });
    }
    let m = n - 1;
    for t in [first, second, last] {
        if t.rank() != m {
            return Err(Error::RankMismatch { expected: m, found: t.rank() });
        }
    }
    let mut out = ExponentTuple::zero(n);
    let val = |t: &ExponentTuple, j, i| t.get(j, i) as i64;

    // Merging a_n into a_{n−1} keeps every row below n−1.
    for j in 1..m {
        for i in 1..=j {
            put(&mut out, j, i, val(last, j, i))?;
        }
    }
    // Merging a_2 into a_1 keeps every k̃_{ji} with i ≥ 3, shifted down by one.
    for j in 3..=n {
        for i in 3..=j {
            put(&mut out, j, i, val(first, j - 1, i - 1))?;
        }
    }
    // Four entries remain: k̃_{(n−1)1}, k̃_{(n−1)2}, k̃_{n1}, k̃_{n2}.
    // From ℓ = 2: k_{(n−1)2} = k̃_{n2} + k̃_{n3}.
    let kn3 = out.get(n, 3) as i64;
    let kn2 = val(second, m, 2) - kn3;
    // From ℓ = n−1: k_{(n−1)2} = k̃_{(n−1)2} + k̃_{n2}, k_{(n−1)1} = k̃_{(n−1)1} + k̃_{n1}.
    let km2 = val(last, m, 2) - kn2;
    // From ℓ = 1: k_{(n−1)1} = k̃_{n1} + k̃_{n2}.
    let kn1 = val(first, m, 1) - kn2;
    let km1 = val(last, m, 1) - kn1;
    put(&mut out, n, 2, kn2)?;
    put(&mut out, m, 2, km2)?;
    put(&mut out, n, 1, kn1)?;
    put(&mut out, m, 1, km1)?;

    for (lift, given) in LIFT_ORDER.iter().zip([first, second, last]) {
        let ell = lift.resolve(m);
        if &subst_map(m, ell)?.apply(&out)? != given {
            return Err(Error::NotInImage(format!(
                "rank-{m} tuples have no common preimage (merge {ell} disagrees)"
            )));
        }
    }
    Ok(out)
}

/// Recovers the exponent tuple from an image of [`build_rep`](crate::build_rep)`(n)`.
///
/// The tropical identity (image of the empty word) gives the zero tuple;
/// every other input must follow the affine convention block by block.
pub fn recover_from_image(n: usize, image: &BlockDiagMatrix) -> Result<ExponentTuple> {
    if n < 3 {
        return Err(Error::InvalidRank { rank: n, reason: "the representation is built for rank >= 3" });
    }
    let expected = 3usize.pow((n - 2) as u32);
    if image.block_count() != expected {
        return Err(Error::BlockCountMismatch { left: expected, right: image.block_count() });
    }
    if image.blocks().iter().all(|b| *b == TropMatrix::identity(2)) {
        return Ok(ExponentTuple::zero(n));
    }
    recover_blocks(n, image.blocks())
}

fn recover_blocks(n: usize, blocks: &[TropMatrix]) -> Result<ExponentTuple> {
    if n == 3 {
        return recover_ch3(&blocks[0], &blocks[1], &blocks[2]);
    }
    let third = blocks.len() / 3;
    let parts = (0..3)
        .map(|g| recover_blocks(n - 1, &blocks[g * third..(g + 1) * third]))
        .collect::<Result<Vec<_>>>()?;
    recover(n, &parts[0], &parts[1], &parts[2])
}

/// Canonical form of `w` computed through the representation.
///
/// Ranks 1 and 2 are embedded into rank 3. Rank 3 evaluates the three base
/// blocks and solves for the exponents. Higher ranks recurse on the three
/// merged words and combine with [`recover`].
pub fn canonical_via_rep(w: &Word) -> Result<ExponentTuple> {
    let n = w.rank();
    if n < 3 {
        return canonical_via_rep(&w.embed(3)?)?.with_rank(n);
    }
    if w.is_empty() {
        return Ok(ExponentTuple::zero(n));
    }
    if n == 3 {
        let img = eval_word(base_rep(), w)?;
        let b = img.blocks();
        return recover_ch3(&b[0], &b[1], &b[2]);
    }
    let parts = LIFT_ORDER
        .iter()
        .map(|lift| canonical_via_rep(&w.merge(lift.resolve(n - 1))?))
        .collect::<Result<Vec<_>>>()?;
    recover(n, &parts[0], &parts[1], &parts[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::{build_rep, eval_affine};
    use crate::words::{canonical_oracle, equiv_class, expand, tuple_len, DEFAULT_CLASS_CAP};
    use proptest::prelude::*;

    fn t(rank: usize, e: &[(usize, usize, u64)]) -> ExponentTuple {
        ExponentTuple::from_entries(rank, e).unwrap()
    }

    #[test]
    fn ch3_examples() {
        let x = TropMatrix::upper2(1, 1, 2);
        let y = TropMatrix::upper2(2, 1, 1);
        let z = TropMatrix::upper2(1, 1, 1);
        assert_eq!(recover_ch3(&x, &y, &z).unwrap(), t(3, &[(2, 2, 1), (3, 1, 1)]));

        let zero = eval_affine(base_affine(), &ExponentTuple::zero(3)).unwrap();
        let b = zero.blocks();
        assert_eq!(recover_ch3(&b[0], &b[1], &b[2]).unwrap(), ExponentTuple::zero(3));

        let k = t(3, &[(1, 1, 1), (3, 2, 2)]);
        let img = eval_affine(base_affine(), &k).unwrap();
        let b = img.blocks();
        assert_eq!(recover_ch3(&b[0], &b[1], &b[2]).unwrap(), k);
    }

    #[test]
    fn ch3_rejects_foreign_blocks() {
        let id = TropMatrix::identity(2);
        assert!(matches!(recover_ch3(&id, &id, &id), Err(Error::NotInImage(_))));
        // consistent first six equations, broken z11
        let x = TropMatrix::upper2(1, 1, 2);
        let y = TropMatrix::upper2(2, 1, 1);
        let z = TropMatrix::upper2(5, 1, 1);
        assert!(matches!(recover_ch3(&x, &y, &z), Err(Error::NotInImage(_))));
        // negative exponent
        let x = TropMatrix::upper2(0, 5, 0);
        assert!(matches!(recover_ch3(&x, &y, &z), Err(Error::NotInImage(_))));
    }

    #[test]
    fn rank4_example() {
        let k = t(4, &[(4, 1, 1), (2, 2, 1)]);
        let parts: Vec<_> = [1, 2, 3].iter().map(|&l| subst_map(3, l).unwrap().apply(&k).unwrap()).collect();
        assert_eq!(recover(4, &parts[0], &parts[1], &parts[2]).unwrap(), k);
        let z = ExponentTuple::zero(3);
        assert_eq!(recover(4, &z, &z, &z).unwrap(), ExponentTuple::zero(4));
    }

    #[test]
    fn recover_rejects_bad_inputs() {
        let z = ExponentTuple::zero(3);
        assert!(matches!(recover(3, &z, &z, &z), Err(Error::InvalidRank { .. })));
        assert!(matches!(recover(5, &z, &z, &z), Err(Error::RankMismatch { .. })));
        let one = t(3, &[(1, 1, 1)]);
        assert!(matches!(recover(4, &one, &z, &z), Err(Error::NotInImage(_))));
    }

    #[test]
    fn via_rep_examples() {
        let w = |r, s| Word::parse(r, s).unwrap();
        assert_eq!(canonical_via_rep(&w(3, "312")).unwrap(), t(3, &[(2, 2, 1), (3, 1, 1)]));
        assert_eq!(canonical_via_rep(&w(2, "211")).unwrap(), t(2, &[(1, 1, 1), (2, 1, 1)]));
        assert_eq!(canonical_via_rep(&w(1, "111")).unwrap(), t(1, &[(1, 1, 3)]));
        assert_eq!(canonical_via_rep(&w(4, "")).unwrap(), ExponentTuple::zero(4));
        let u = w(4, "4123");
        assert_eq!(canonical_via_rep(&u).unwrap(), canonical_oracle(&u, DEFAULT_CLASS_CAP).unwrap());
    }

    #[test]
    fn image_round_trip_rank5() {
        let rep = build_rep(5).unwrap();
        let k = t(5, &[(5, 2, 3), (4, 1, 1), (3, 3, 2), (1, 1, 1)]);
        let img = eval_word(&rep, &expand(&k)).unwrap();
        assert_eq!(recover_from_image(5, &img).unwrap(), k);
        let id = eval_word(&rep, &Word::empty(5)).unwrap();
        assert_eq!(recover_from_image(5, &id).unwrap(), ExponentTuple::zero(5));
        assert!(recover_from_image(4, &img).is_err());
    }

    fn tuple(rank: usize, max: u64) -> impl Strategy<Value = ExponentTuple> {
        proptest::collection::vec(0..=max, tuple_len(rank))
            .prop_map(move |k| ExponentTuple::from_vec(rank, k).unwrap())
    }

    fn word(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec(1..=rank, 0..=max_len)
            .prop_map(move |idx| Word::from_indices(rank, &idx).unwrap())
    }

    proptest! {
        #[test]
        fn round_trip(k in (1usize..=6).prop_flat_map(|r| tuple(r, 10))) {
            prop_assert_eq!(canonical_via_rep(&expand(&k))?, k);
        }

        #[test]
        fn recover_inverts_substitutions(k in (4usize..=6).prop_flat_map(|r| tuple(r, 6))) {
            let n = k.rank();
            let parts = LIFT_ORDER
                .iter()
                .map(|l| subst_map(n - 1, l.resolve(n - 1))?.apply(&k))
                .collect::<Result<Vec<_>>>()?;
            prop_assert_eq!(recover(n, &parts[0], &parts[1], &parts[2])?, k);
        }

        #[test]
        fn class_invariant(u in word(4, 7), pick in any::<prop::sample::Index>()) {
            let class: Vec<Word> = equiv_class(&u, DEFAULT_CLASS_CAP)?.into_iter().collect();
            let v = &class[pick.index(class.len())];
            let k = canonical_via_rep(&u)?;
            prop_assert_eq!(&k, &canonical_via_rep(v)?);
            prop_assert_eq!(k.weight(), u.len() as u64);
        }
    }
}

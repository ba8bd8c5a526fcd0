//! Semigroup identities `u = v`: randomized checking in `Ch_n` through
//! canonical forms, and randomized or exhaustive refutation over
//! upper-triangular tropical matrices.
//!
//! Sampling never proves an identity. A counterexample is a proof of failure;
//! "holds" only means no sample refuted it.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recovery::canonical_via_rep;
use crate::representation::{build_rep, eval_word};
use crate::trop::{mat_mul, TropMatrix, TropScalar};
use crate::words::{ExponentTuple, Word};

/// A pair of nonempty words over a finite alphabet of named letters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    letters: Vec<char>,
    lhs: Vec<usize>,
    rhs: Vec<usize>,
}

impl Identity {
    /// Builds an identity from letter indices into `letters`.
    pub fn new(letters: Vec<char>, lhs: Vec<usize>, rhs: Vec<usize>) -> Result<Self> {
        if lhs.is_empty() || rhs.is_empty() {
            return Err(Error::Parse("both sides of an identity must be nonempty".into()));
        }
        if let Some(&bad) = lhs.iter().chain(&rhs).find(|&&x| x >= letters.len()) {
            return Err(Error::IndexOutOfRange { index: bad, max: letters.len().saturating_sub(1) });
        }
        Ok(Identity { letters, lhs, rhs })
    }

    /// Parses `"x y y x = x y x y"`. Letters are single lowercase characters;
    /// whitespace between them is optional.
    pub fn parse(text: &str) -> Result<Self> {
        let (l, r) =
            text.split_once('=').ok_or_else(|| Error::Parse("identity must have the form `u = v`".into()))?;
        if r.contains('=') {
            return Err(Error::Parse("identity has more than one `=`".into()));
        }
        let mut letters = Vec::new();
        let mut side = |s: &str| -> Result<Vec<usize>> {
            s.chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| {
                    if !c.is_ascii_lowercase() {
                        return Err(Error::Parse(format!("unexpected character {c:?} in identity")));
                    }
                    Ok(letters.iter().position(|&x| x == c).unwrap_or_else(|| {
                        letters.push(c);
                        letters.len() - 1
                    }))
                })
                .collect()
        };
        let lhs = side(l)?;
        let rhs = side(r)?;
        Identity::new(letters, lhs, rhs)
    }

    pub fn alphabet_size(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn lhs(&self) -> &[usize] {
        &self.lhs
    }

    pub fn rhs(&self) -> &[usize] {
        &self.rhs
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &[usize]| s.iter().map(|&x| self.letters[x].to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "{} = {}", side(&self.lhs), side(&self.rhs))
    }
}

/// `a b² a · a b · a b² a = a b² a · b a · a b² a`.
pub fn adjan() -> Identity {
    Identity::parse("abba ab abba = abba ba abba").expect("well-formed identity")
}

/// Outcome of [`check_in_chn`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ChnVerdict {
    Holds { samples: usize },
    Counterexample(ChnCounterexample),
}

/// A substitution separating the two sides in `Ch_n`, together with a block
/// of the faithful representation whose images already differ.
///
/// `witness_substitution` sends each letter to the image of its word in that
/// block, which refutes the identity in 2×2 upper-triangular matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChnCounterexample {
    pub sample: usize,
    pub substitution: Vec<String>,
    pub lhs: ExponentTuple,
    pub rhs: ExponentTuple,
    pub witness_block: usize,
    pub witness_lhs: TropMatrix,
    pub witness_rhs: TropMatrix,
    pub witness_substitution: Vec<TropMatrix>,
}

fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

fn random_word<R: Rng>(rng: &mut R, rank: usize, maxlen: usize) -> Word {
    let len = rng.gen_range(1..=maxlen.max(1));
    let idx: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=rank)).collect();
    Word::from_indices(rank, &idx).expect("indices within rank")
}

fn substitute(side: &[usize], subst: &[Word]) -> Result<Word> {
    let mut w = Word::empty(subst[0].rank());
    for &x in side {
        w = w.concat(&subst[x])?;
    }
    Ok(w)
}

/// Checks `id` in `Ch_n` on `samples` random substitutions of nonempty words
/// of length `1..=maxlen`. Sample `s` draws from a generator seeded by
/// `(seed, s)`, so verdicts are reproducible.
///
/// Every counterexample is transferred to the faithful representation: some
/// 2×2 block must separate the two sides, and the letters' images in that
/// block must refute the identity in `U_2`. Otherwise the call fails.
pub fn check_in_chn(id: &Identity, n: usize, samples: usize, maxlen: usize, seed: u64) -> Result<ChnVerdict> {
    if n == 0 {
        return Err(Error::InvalidRank { rank: n, reason: "rank must be at least 1" });
    }
    for s in 0..samples {
        let mut rng = sample_rng(seed, s);
        let subst: Vec<Word> = (0..id.alphabet_size()).map(|_| random_word(&mut rng, n, maxlen)).collect();
        let u = substitute(&id.lhs, &subst)?;
        let v = substitute(&id.rhs, &subst)?;
        let ku = canonical_via_rep(&u)?;
        let kv = canonical_via_rep(&v)?;
        if ku != kv {
            let (block, wl, wr) = separating_block(&u, &v)?;
            let witness_substitution = block_images(&subst, block)?;
            if eval_side(&id.lhs, &witness_substitution)? != wl
                || eval_side(&id.rhs, &witness_substitution)? != wr
            {
                return Err(Error::Malformed("witness block is not multiplicative".into()));
            }
            return Ok(ChnVerdict::Counterexample(ChnCounterexample {
                sample: s,
                substitution: subst.iter().map(Word::to_string).collect(),
                lhs: ku,
                rhs: kv,
                witness_block: block,
                witness_lhs: wl,
                witness_rhs: wr,
                witness_substitution,
            }));
        }
    }
    Ok(ChnVerdict::Holds { samples })
}

fn separating_block(u: &Word, v: &Word) -> Result<(usize, TropMatrix, TropMatrix)> {
    let rank = u.rank().max(3);
    let rep = build_rep(rank)?;
    let iu = eval_word(&rep, &u.embed(rank)?)?;
    let iv = eval_word(&rep, &v.embed(rank)?)?;
    iu.blocks()
        .iter()
        .zip(iv.blocks())
        .enumerate()
        .find(|(_, (a, b))| a != b)
        .map(|(i, (a, b))| (i, a.clone(), b.clone()))
        .ok_or_else(|| Error::NotInImage(format!("`{u}` and `{v}` differ in Ch_{rank} but share an image")))
}

fn block_images(subst: &[Word], block: usize) -> Result<Vec<TropMatrix>> {
    let rank = subst[0].rank().max(3);
    let rep = build_rep(rank)?;
    subst.iter().map(|w| Ok(eval_word(&rep, &w.embed(rank)?)?.blocks()[block].clone())).collect()
}

/// Outcome of a tropical refutation attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TropVerdict {
    NoCounterexample { samples: usize },
    Counterexample { sample: usize, substitution: Vec<TropMatrix>, lhs: TropMatrix, rhs: TropMatrix },
}

fn eval_side(side: &[usize], subst: &[TropMatrix]) -> Result<TropMatrix> {
    let mut acc = subst[side[0]].clone();
    for &x in &side[1..] {
        acc = mat_mul(&acc, &subst[x])?;
    }
    Ok(acc)
}

fn random_upper<R: Rng>(rng: &mut R, dim: usize, lo: i64, hi: i64) -> TropMatrix {
    let choices = (hi - lo + 2) as u64;
    let rows = (0..dim)
        .map(|r| {
            (0..dim)
                .map(|c| {
                    if c < r {
                        return TropScalar::Bottom;
                    }
                    let pick = rng.gen_range(0..choices);
                    if pick == 0 {
                        TropScalar::Bottom
                    } else {
                        TropScalar::Fin(lo + pick as i64 - 1)
                    }
                })
                .collect()
        })
        .collect();
    TropMatrix::new(rows).expect("square rows")
}

/// Tries to refute `id` over `dim × dim` upper-triangular tropical matrices
/// with entries drawn uniformly from `entry_range ∪ {−∞}`.
pub fn check_in_tropical(
    id: &Identity,
    dim: usize,
    samples: usize,
    entry_range: (i64, i64),
    seed: u64,
) -> Result<TropVerdict> {
    let (lo, hi) = entry_range;
    if dim == 0 {
        return Err(Error::Malformed("matrix dimension must be positive".into()));
    }
    if lo > hi {
        return Err(Error::Malformed(format!("empty entry range {lo}..={hi}")));
    }
    for s in 0..samples {
        let mut rng = sample_rng(seed, s);
        let subst: Vec<TropMatrix> =
            (0..id.alphabet_size()).map(|_| random_upper(&mut rng, dim, lo, hi)).collect();
        let l = eval_side(&id.lhs, &subst)?;
        let r = eval_side(&id.rhs, &subst)?;
        if l != r {
            return Ok(TropVerdict::Counterexample { sample: s, substitution: subst, lhs: l, rhs: r });
        }
    }
    Ok(TropVerdict::NoCounterexample { samples })
}

/// Tries every substitution of 2×2 upper-triangular matrices with entries in
/// `values`. Returns the first refuting substitution, if any.
pub fn refute_in_u2_exhaustive(
    id: &Identity,
    values: &[TropScalar],
    cap: usize,
) -> Result<Option<Vec<TropMatrix>>> {
    let mut mats = Vec::new();
    for &a in values {
        for &b in values {
            for &d in values {
                mats.push(TropMatrix::upper2(a, b, d));
            }
        }
    }
    let k = id.alphabet_size();
    let total = (mats.len() as u128).checked_pow(k as u32).filter(|&t| t <= cap as u128);
    let total = total.ok_or(Error::CapExceeded { cap })? as usize;
    let mut choice = vec![0usize; k];
    for step in 0..total {
        if step > 0 {
            for c in choice.iter_mut() {
                *c += 1;
                if *c < mats.len() {
                    break;
                }
                *c = 0;
            }
        }
        let subst: Vec<TropMatrix> = choice.iter().map(|&c| mats[c].clone()).collect();
        if eval_side(&id.lhs, &subst)? != eval_side(&id.rhs, &subst)? {
            return Ok(Some(subst));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TropScalar::{Bottom, Fin};

    #[test]
    fn adjan_shape() {
        let id = adjan();
        assert_eq!(id.lhs().len(), 10);
        assert_eq!(id.rhs().len(), 10);
        assert_eq!(id.alphabet_size(), 2);
        assert_eq!(id.to_string(), "a b b a a b a b b a = a b b a b a a b b a");
        assert_eq!(Identity::parse("x y y x x y x y y x = x y y x y x x y y x").unwrap().lhs(), id.lhs());
    }

    #[test]
    fn adjan_with_equal_letters() {
        // a = b collapses both sides to a^10
        let id = adjan();
        let collapse = |s: &[usize]| s.iter().map(|_| 0).collect::<Vec<_>>();
        assert_eq!(collapse(id.lhs()), collapse(id.rhs()));
        let a = Word::parse(2, "a1").unwrap();
        let u = substitute(id.lhs(), &[a.clone(), a.clone()]).unwrap();
        let v = substitute(id.rhs(), &[a.clone(), a]).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn adjan_generators_in_ch2() {
        let id = adjan();
        let subst = [Word::parse(2, "a1").unwrap(), Word::parse(2, "a2").unwrap()];
        let u = substitute(id.lhs(), &subst).unwrap();
        let v = substitute(id.rhs(), &subst).unwrap();
        assert_eq!(canonical_via_rep(&u).unwrap(), canonical_via_rep(&v).unwrap());
    }

    #[test]
    fn parse_errors() {
        assert!(Identity::parse("x y").is_err());
        assert!(Identity::parse("x = ").is_err());
        assert!(Identity::parse("x = y = z").is_err());
        assert!(Identity::parse("X = x").is_err());
    }

    #[test]
    fn chn_verdicts() {
        let v = check_in_chn(&adjan(), 3, 200, 8, 7).unwrap();
        assert_eq!(v, ChnVerdict::Holds { samples: 200 });
        let trivial = Identity::parse("x = x").unwrap();
        assert_eq!(check_in_chn(&trivial, 4, 20, 8, 1).unwrap(), ChnVerdict::Holds { samples: 20 });
    }

    #[test]
    fn commutativity_fails_in_ch2() {
        let id = Identity::parse("x y = y x").unwrap();
        let ChnVerdict::Counterexample(c) = check_in_chn(&id, 2, 10, 8, 0).unwrap() else {
            panic!("xy = yx must be refuted");
        };
        assert_ne!(c.lhs, c.rhs);
        assert_ne!(c.witness_lhs, c.witness_rhs);
        // the generators themselves separate the sides
        let k12 = canonical_via_rep(&Word::parse(2, "a1 a2").unwrap()).unwrap();
        let k21 = canonical_via_rep(&Word::parse(2, "a2 a1").unwrap()).unwrap();
        assert_eq!(k12, ExponentTuple::from_entries(2, &[(1, 1, 1), (2, 2, 1)]).unwrap());
        assert_eq!(k21, ExponentTuple::from_entries(2, &[(2, 1, 1)]).unwrap());
    }

    #[test]
    fn same_seed_same_verdict() {
        let id = Identity::parse("x y x = y x y").unwrap();
        let a = check_in_chn(&id, 3, 50, 5, 99).unwrap();
        let b = check_in_chn(&id, 3, 50, 5, 99).unwrap();
        assert_eq!(a, b);
        let t1 = check_in_tropical(&id, 3, 50, (-2, 2), 5).unwrap();
        let t2 = check_in_tropical(&id, 3, 50, (-2, 2), 5).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn tropical_verdicts() {
        assert_eq!(
            check_in_tropical(&adjan(), 2, 500, (-3, 3), 11).unwrap(),
            TropVerdict::NoCounterexample { samples: 500 }
        );
        let comm = Identity::parse("x y = y x").unwrap();
        assert!(matches!(
            check_in_tropical(&comm, 2, 50, (-3, 3), 0).unwrap(),
            TropVerdict::Counterexample { .. }
        ));
        let trivial = Identity::parse("x = x").unwrap();
        for dim in 1..=4 {
            assert!(matches!(
                check_in_tropical(&trivial, dim, 20, (-3, 3), 0).unwrap(),
                TropVerdict::NoCounterexample { .. }
            ));
        }
        assert!(check_in_tropical(&trivial, 0, 1, (0, 1), 0).is_err());
        assert!(check_in_tropical(&trivial, 2, 1, (1, 0), 0).is_err());
    }

    #[test]
    fn chn_counterexamples_transfer_to_u2() {
        let candidates = [
            "x y = y x",
            "x x y = x y x",
            "x y x = y x y",
            "x y y x = y x x y",
            "x y x y = y x y x",
            "x y x x y x y x = x y x y x x y x",
        ];
        for text in candidates {
            let id = Identity::parse(text).unwrap();
            for n in 2..=4 {
                let ChnVerdict::Counterexample(cx) = check_in_chn(&id, n, 100, 6, 3).unwrap() else {
                    panic!("{text} not refuted in Ch_{n}");
                };
                let l = eval_side(id.lhs(), &cx.witness_substitution).unwrap();
                let r = eval_side(id.rhs(), &cx.witness_substitution).unwrap();
                assert_eq!((&l, &r), (&cx.witness_lhs, &cx.witness_rhs));
                assert_ne!(l, r);
            }
        }
    }

    #[test]
    fn small_grid() {
        let grid = [Bottom, Fin(-1), Fin(0), Fin(1)];
        assert!(refute_in_u2_exhaustive(&adjan(), &grid, 1 << 20).unwrap().is_none());
        assert!(refute_in_u2_exhaustive(&Identity::parse("x y = y x").unwrap(), &grid, 1 << 20)
            .unwrap()
            .is_some());
        // refutable in U2, but not with entries this small
        let id = Identity::parse("x y x x y x y x = x y x y x x y x").unwrap();
        assert!(refute_in_u2_exhaustive(&id, &grid, 1 << 20).unwrap().is_none());
        assert!(matches!(
            check_in_tropical(&id, 2, 2000, (-6, 6), 0).unwrap(),
            TropVerdict::Counterexample { .. }
        ));
    }

    #[test]
    fn verdict_json() {
        let v = serde_json::to_value(ChnVerdict::Holds { samples: 3 }).unwrap();
        assert_eq!(v, serde_json::json!({"verdict": "holds", "samples": 3}));
        let t = serde_json::to_value(TropVerdict::NoCounterexample { samples: 2 }).unwrap();
        assert_eq!(t, serde_json::json!({"verdict": "no_counterexample", "samples": 2}));
    }
}

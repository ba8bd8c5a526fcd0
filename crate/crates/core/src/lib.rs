//! A faithful representation of the Chinese monoid `Ch_n` by block-diagonal
//! tropical (max-plus) matrices with 2×2 upper-triangular blocks.
//!
//! - [`trop`]: exact integer max-plus scalars, matrices and block-diagonal matrices.
//! - [`words`]: words, the defining relations, canonical forms, growth.
//! - [`representation`]: the rank-3 base representation, lifting, the
//!   inductive construction and its affine exponent map.
//! - [`recovery`]: exponents from images; canonical forms via the representation.
//! - [`minimizer`]: exact rank computations and block selection.
//! - [`identities`]: semigroup identity checking.
//! - [`rewriting`]: a complete rewriting system deciding equality in `Ch_n`.

pub mod error;
pub mod identities;
pub mod minimizer;
pub mod recovery;
pub mod representation;
pub mod rewriting;
pub mod trop;
pub mod words;

pub use error::{Error, Result};
pub use identities::{adjan, check_in_chn, check_in_tropical, ChnVerdict, Identity, TropVerdict};
pub use minimizer::{linear_rank, minimized_rep, recover_from_selected, select_blocks, BlockSelection};
pub use recovery::{canonical_via_rep, recover, recover_ch3, recover_from_image};
pub use representation::{
    affine_of_rep, base_rep_ch3, build_rep, eval_affine, eval_word, lift, subst_map, AffineExponentMap,
    Representation,
};
pub use rewriting::RewritingSystem;
pub use trop::{block_mul, mat_mul, mat_pow, trop_add, trop_mul, BlockDiagMatrix, TropMatrix, TropScalar};
pub use words::{
    canonical_oracle, equiv_class, expand, growth_count, growth_oracle, is_canonical, rewrite_neighbors,
    ExponentTuple, Generator, Word,
};

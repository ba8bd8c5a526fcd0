//! A complete (terminating and confluent) string rewriting system for `Ch_n`,
//! obtained by Knuth–Bendix completion of the defining relations under the
//! shortlex order with `a_1 < a_2 < ⋯ < a_n`.
//!
//! Two words are equal in `Ch_n` iff their normal forms coincide. This
//! decides equivalence for words far too long for class enumeration, and
//! depends only on the relations, not on any representation.

use crate::error::{Error, Result};
use crate::words::{Generator, Word};

type Letters = Vec<usize>;

/// Bound on the number of rules completion may create.
const MAX_RULES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub lhs: Letters,
    pub rhs: Letters,
}

/// The completed system for one rank.
#[derive(Debug, Clone)]
pub struct RewritingSystem {
    rank: usize,
    rules: Vec<Rule>,
}

fn shortlex_greater(u: &[usize], v: &[usize]) -> bool {
    (u.len(), u) > (v.len(), v)
}

fn orient(x: Letters, y: Letters) -> Rule {
    if shortlex_greater(&x, &y) {
        Rule { lhs: x, rhs: y }
    } else {
        Rule { lhs: y, rhs: x }
    }
}

fn find(hay: &[usize], needle: &[usize]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

fn reduce_with(rules: &[Rule], mut w: Letters) -> Letters {
    let back = rules.iter().map(|r| r.lhs.len()).max().unwrap_or(1) - 1;
    let mut p = 0;
    'scan: while p < w.len() {
        for r in rules {
            let l = r.lhs.len();
            if p + l <= w.len() && w[p..p + l] == r.lhs[..] {
                w.splice(p..p + l, r.rhs.iter().copied());
                // a new redex must overlap the replaced span
                p = p.saturating_sub(back);
                continue 'scan;
            }
        }
        p += 1;
    }
    w
}

/// Critical pairs of `a` against `b`: overlaps of a suffix of `a.lhs` with a
/// prefix of `b.lhs`, and `b.lhs` strictly inside `a.lhs`.
fn critical_pairs(a: &Rule, b: &Rule, same: bool) -> Vec<(Letters, Letters)> {
    let mut out = Vec::new();
    let (l1, l2) = (&a.lhs, &b.lhs);
    for o in 1..l1.len().min(l2.len()) {
        if l1[l1.len() - o..] == l2[..o] {
            let mut x = a.rhs.clone();
            x.extend_from_slice(&l2[o..]);
            let mut y = l1[..l1.len() - o].to_vec();
            y.extend_from_slice(&b.rhs);
            out.push((x, y));
        }
    }
    if !same && l2.len() < l1.len() {
        if let Some(p) = find(l1, l2) {
            let mut y = l1[..p].to_vec();
            y.extend_from_slice(&b.rhs);
            y.extend_from_slice(&l1[p + l2.len()..]);
            out.push((a.rhs.clone(), y));
        }
    }
    out
}

impl RewritingSystem {
    /// Completes the relations `a_j a_k a_i = a_k a_j a_i = a_k a_i a_j`
    /// (`i ≤ j ≤ k ≤ n`), then checks that every critical pair of the final
    /// rule set is joinable.
    pub fn complete(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidRank { rank, reason: "rank must be at least 1" });
        }
        let mut rules: Vec<Rule> = Vec::new();
        for i in 1..=rank {
            for j in i..=rank {
                for k in j..=rank {
                    let mut class = vec![vec![j, k, i], vec![k, j, i], vec![k, i, j]];
                    class.sort();
                    class.dedup();
                    let min = class[0].clone();
                    for u in class.into_iter().skip(1) {
                        rules.push(Rule { lhs: u, rhs: min.clone() });
                    }
                }
            }
        }

        let mut checked = 0; // pairs (a, b) with both < checked are done
        loop {
            let mut fresh = Vec::new();
            let n = rules.len();
            for a in 0..n {
                for b in 0..n {
                    if a < checked && b < checked {
                        continue;
                    }
                    for (x, y) in critical_pairs(&rules[a], &rules[b], a == b) {
                        let x = reduce_with(&rules, x);
                        let y = reduce_with(&rules, y);
                        if x != y {
                            fresh.push((x, y));
                        }
                    }
                }
            }
            checked = n;
            if fresh.is_empty() {
                break;
            }
            for (x, y) in fresh {
                let x = reduce_with(&rules, x);
                let y = reduce_with(&rules, y);
                if x != y {
                    rules.push(orient(x, y));
                }
            }
            if rules.len() > MAX_RULES {
                return Err(Error::CapExceeded { cap: MAX_RULES });
            }
        }

        let sys = RewritingSystem { rank, rules: interreduce(rules) };
        sys.check_confluence()?;
        Ok(sys)
    }

    fn check_confluence(&self) -> Result<()> {
        for (ai, a) in self.rules.iter().enumerate() {
            for (bi, b) in self.rules.iter().enumerate() {
                for (x, y) in critical_pairs(a, b, ai == bi) {
                    if reduce_with(&self.rules, x) != reduce_with(&self.rules, y) {
                        return Err(Error::Malformed("completed system is not confluent".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// The shortlex-least word equal to `w` in `Ch_n`.
    pub fn normal_form(&self, w: &Word) -> Result<Word> {
        if w.rank() != self.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: w.rank() });
        }
        let letters = w.letters().iter().map(|g| g.index()).collect();
        Word::new(self.rank, reduce_with(&self.rules, letters).into_iter().map(Generator).collect())
    }

    pub fn equivalent(&self, u: &Word, v: &Word) -> Result<bool> {
        Ok(self.normal_form(u)? == self.normal_form(v)?)
    }
}

/// Drops rules whose left side contains another rule's left side and
/// normalizes right sides.
fn interreduce(mut rules: Vec<Rule>) -> Vec<Rule> {
    rules.sort_by(|a, b| (a.lhs.len(), &a.lhs).cmp(&(b.lhs.len(), &b.lhs)));
    rules.dedup_by(|a, b| a.lhs == b.lhs);
    let mut kept: Vec<Rule> = Vec::new();
    for r in rules {
        if kept.iter().any(|k| find(&r.lhs, &k.lhs).is_some()) {
            continue;
        }
        kept.push(r);
    }
    let snapshot = kept.clone();
    for r in kept.iter_mut() {
        r.rhs = reduce_with(&snapshot, std::mem::take(&mut r.rhs));
    }
    kept
}

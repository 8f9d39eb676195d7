//! Decision procedures for membership in ray stabilisers, and the
//! brute-force language oracle used for cross-validation.
//!
//! For an eventually periodic ray `a·b^ω` membership is decided by the
//! pigeonhole bound: a word stabilises the ray iff it fixes the vertex
//! `a·b^(K+1)` where `K` is the number of states of its minimized machine.
//! For arbitrary computable rays the procedure is a promise problem and a
//! depth cap guards against violated promises.

use std::collections::HashMap;

use thiserror::Error;

use crate::classify::is_bounded;
use crate::par;
use crate::tree::{Automorphism, GenId, GeneratingSet, Ray, TreeError, Vertex, Word};

#[derive(Debug, Error)]
pub enum StabError {
    #[error("the period word must be nonempty")]
    EmptyPeriod,
    #[error("generator `{0}` is not bounded")]
    UnboundedGenerator(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Supplies prefixes of a computable ray; `prefix(n)` must be a prefix of
/// `prefix(n+1)`.
pub trait RayOracle {
    fn prefix(&self, n: usize) -> Vertex;
}

impl RayOracle for Ray {
    fn prefix(&self, n: usize) -> Vertex {
        Ray::prefix(self, n)
    }
}

/// Ray oracle backed by a letter function.
pub struct FnRayOracle<F: Fn(usize) -> u8>(pub F);

impl<F: Fn(usize) -> u8> RayOracle for FnRayOracle<F> {
    fn prefix(&self, n: usize) -> Vertex {
        Vertex::from_letters((0..n).map(|i| (self.0)(i)).collect())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MembershipVerdict {
    Member,
    /// Least prefix length of the ray on which the action differs.
    NonMember { witness_depth: usize },
    /// The walk hit the depth cap with a nontrivial section; the promise
    /// (non-eventually-periodic input ray) may have been violated.
    DepthExceeded { cap: usize },
}

/// Decides `w ∈ Stab(a·b^ω)` for the group generated by `gens`.
pub fn member_periodic(
    gens: &GeneratingSet,
    w: &Word,
    a: &Vertex,
    b: &Vertex,
) -> Result<bool, StabError> {
    if b.is_empty() {
        return Err(StabError::EmptyPeriod);
    }
    let machine = gens.word_automorphism(w);
    Ok(element_stabilizes(&machine, a, b))
}

/// The pigeonhole test on an already-projected element.
pub fn element_stabilizes(machine: &Automorphism, a: &Vertex, b: &Vertex) -> bool {
    let k = machine.state_count();
    let test = a.concat(&b.repeat(k + 1));
    machine.apply(&test) == test
}

/// Decides membership along an arbitrary computable ray, given the promise
/// that the ray is not eventually periodic. Walks the word's machine down the
/// ray; a verdict is reached as soon as the action differs on a prefix or the
/// section becomes trivial.
pub fn member_promise(
    gens: &GeneratingSet,
    w: &Word,
    ray: &dyn RayOracle,
    depth_cap: usize,
) -> Result<MembershipVerdict, StabError> {
    for id in gens.ids() {
        if !is_bounded(gens.machine(id)) {
            return Err(StabError::UnboundedGenerator(gens.name(id).to_string()));
        }
    }
    let machine = gens.word_automorphism(w);
    let mut state = machine.root_state();
    if state == 0 {
        return Ok(MembershipVerdict::Member);
    }
    for depth in 0..depth_cap {
        let prefix = ray.prefix(depth + 1);
        let c = prefix.letters()[depth];
        if machine.perm_at(state, c) != c {
            return Ok(MembershipVerdict::NonMember { witness_depth: depth + 1 });
        }
        state = machine.succ_at(state, c);
        if state == 0 {
            return Ok(MembershipVerdict::Member);
        }
    }
    Ok(MembershipVerdict::DepthExceeded { cap: depth_cap })
}

/// The exact language `WP(⟨X⟩, X, Stab(a·b^ω)) ∩ X^{≤ max_len}` together with
/// count vectors, enumerated in (length, lexicographic) order.
#[derive(Clone, Debug)]
pub struct WpEnumeration {
    pub words: Vec<Word>,
    /// members by length, `0..=max_len`
    pub counts_by_length: Vec<u64>,
    /// all words by length (`|X|^m`)
    pub totals_by_length: Vec<u64>,
}

impl WpEnumeration {
    pub fn complement_counts(&self) -> Vec<u64> {
        self.totals_by_length
            .iter()
            .zip(&self.counts_by_length)
            .map(|(t, c)| t - c)
            .collect()
    }
}

pub fn enumerate_wp(
    gens: &GeneratingSet,
    a: &Vertex,
    b: &Vertex,
    max_len: usize,
) -> Result<WpEnumeration, StabError> {
    enumerate_wp_with(gens, a, b, max_len, par::parallel_available())
}

/// As [`enumerate_wp`], with explicit parallelism choice (benchmark hook).
///
/// Words are grouped by the group element they project to: the element ball
/// of radius `max_len` is explored once (BFS over minimized machines), each
/// element is tested once with its own pigeonhole bound, and the word tree is
/// then walked over element ids only.
pub fn enumerate_wp_with(
    gens: &GeneratingSet,
    a: &Vertex,
    b: &Vertex,
    max_len: usize,
    parallel: bool,
) -> Result<WpEnumeration, StabError> {
    if b.is_empty() {
        return Err(StabError::EmptyPeriod);
    }
    let ngens = gens.len();

    // element ball with transition table
    let mut elements: Vec<Automorphism> = vec![Automorphism::identity(gens.alphabet())];
    let mut index: HashMap<Automorphism, usize> = HashMap::new();
    index.insert(elements[0].clone(), 0);
    let mut trans: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<usize> = vec![0];
    for _ in 0..max_len {
        let mut next_frontier = Vec::new();
        let rows = par::map_slice(parallel, &frontier, |&e| {
            let src = &elements[e];
            gens.ids()
                .map(|g| src.compose(gens.machine(g)).expect("same alphabet"))
                .collect::<Vec<_>>()
        });
        for (&e, row) in frontier.iter().zip(rows) {
            let mut ids = Vec::with_capacity(ngens);
            for m in row {
                let id = match index.get(&m) {
                    Some(&id) => id,
                    None => {
                        let id = elements.len();
                        index.insert(m.clone(), id);
                        elements.push(m);
                        trans.push(Vec::new());
                        next_frontier.push(id);
                        id
                    }
                };
                ids.push(id);
            }
            trans[e] = ids;
        }
        frontier = next_frontier;
        if frontier.is_empty() {
            break;
        }
    }
    // elements first seen at the deepest level never need their row

    let member: Vec<bool> =
        par::map_slice(parallel, &elements, |m| element_stabilizes(m, a, b));

    // walk the word tree over element ids, in (length, lex) order
    let mut words = Vec::new();
    let mut counts = vec![0u64; max_len + 1];
    let mut totals = vec![0u64; max_len + 1];
    let mut level: Vec<(Word, usize)> = vec![(Word::empty(), 0)];
    for len in 0..=max_len {
        totals[len] = level.len() as u64;
        for (w, e) in &level {
            if member[*e] {
                counts[len] += 1;
                words.push(w.clone());
            }
        }
        if len == max_len {
            break;
        }
        let mut next = Vec::with_capacity(level.len() * ngens);
        for (w, e) in &level {
            for (g, &target) in trans[*e].iter().enumerate() {
                let mut letters = w.0.clone();
                letters.push(g as GenId);
                next.push((Word(letters), target));
            }
        }
        level = next;
    }
    Ok(WpEnumeration { words, counts_by_length: counts, totals_by_length: totals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fixtures::dihedral;
    use crate::tree::Alphabet;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s, Alphabet::new(2).unwrap()).unwrap()
    }

    #[test]
    fn member_periodic_dihedral() {
        let gens = dihedral();
        let b = v("1");
        assert!(member_periodic(&gens, &gens.parse_word("b").unwrap(), &v(""), &b).unwrap());
        assert!(!member_periodic(&gens, &gens.parse_word("a").unwrap(), &v(""), &b).unwrap());
        assert!(member_periodic(&gens, &Word::empty(), &v(""), &b).unwrap());
        assert!(matches!(
            member_periodic(&gens, &Word::empty(), &v(""), &v("")),
            Err(StabError::EmptyPeriod)
        ));
    }

    /// The ray 1 0 1 1 0 1 1 1 0 ... (runs of 1s of growing length), which is
    /// not eventually periodic.
    fn sturmian_like() -> impl RayOracle {
        FnRayOracle(|i| {
            let mut pos = 0usize;
            for run in 1.. {
                if i < pos + run {
                    return 1;
                }
                if i == pos + run {
                    return 0;
                }
                pos += run + 1;
            }
            unreachable!()
        })
    }

    #[test]
    fn member_promise_verdicts() {
        let gens = dihedral();
        let ray = sturmian_like();
        // prefix is 1 0 1 1 0 ...; walking b along "101" ends with a mismatch
        assert_eq!(ray.prefix(5), v("10110"));
        let vb = member_promise(&gens, &gens.parse_word("b").unwrap(), &ray, 64).unwrap();
        assert_eq!(vb, MembershipVerdict::NonMember { witness_depth: 3 });
        let ve = member_promise(&gens, &Word::empty(), &ray, 64).unwrap();
        assert_eq!(ve, MembershipVerdict::Member);
        let vaa = member_promise(&gens, &gens.parse_word("aa").unwrap(), &ray, 64).unwrap();
        assert_eq!(vaa, MembershipVerdict::Member);
        // cap of zero cannot resolve a nontrivial word
        let vcap = member_promise(&gens, &gens.parse_word("b").unwrap(), &ray, 0).unwrap();
        assert_eq!(vcap, MembershipVerdict::DepthExceeded { cap: 0 });
    }

    #[test]
    fn enumerate_wp_dihedral_counts() {
        let gens = dihedral();
        let out = enumerate_wp(&gens, &v(""), &v("1"), 3).unwrap();
        assert_eq!(out.counts_by_length, vec![1, 1, 2, 3]);
        assert_eq!(out.totals_by_length, vec![1, 2, 4, 8]);
        assert_eq!(out.complement_counts(), vec![0, 1, 2, 5]);
        let rendered: Vec<String> = out.words.iter().map(|w| gens.format_word(w)).collect();
        assert_eq!(rendered, vec!["", "b", "aa", "bb", "aab", "baa", "bbb"]);

        let out0 = enumerate_wp(&gens, &v(""), &v("1"), 0).unwrap();
        assert_eq!(out0.words, vec![Word::empty()]);
    }

    #[test]
    fn enumerate_matches_per_word_membership() {
        let gens = dihedral();
        let a = v("0");
        let b = v("01");
        let out = enumerate_wp(&gens, &a, &b, 6).unwrap();
        let mut expect = Vec::new();
        let mut level = vec![Word::empty()];
        for len in 0..=6 {
            for w in &level {
                if member_periodic(&gens, w, &a, &b).unwrap() {
                    expect.push(w.clone());
                }
            }
            if len < 6 {
                level = level
                    .iter()
                    .flat_map(|w| {
                        (0..gens.len() as GenId).map(move |g| {
                            let mut l = w.0.clone();
                            l.push(g);
                            Word(l)
                        })
                    })
                    .collect();
            }
        }
        assert_eq!(out.words, expect);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let gens = dihedral();
        let s = enumerate_wp_with(&gens, &v(""), &v("1"), 7, false).unwrap();
        let p = enumerate_wp_with(&gens, &v(""), &v("1"), 7, true).unwrap();
        assert_eq!(s.words, p.words);
        assert_eq!(s.counts_by_length, p.counts_by_length);
    }
}

//! Standalone property suites: randomized invariants over the tree algebra,
//! the decision procedures, the grammar machinery and the series arithmetic.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::One;
use proptest::prelude::*;

use raystab::automaton::Nfa;
use raystab::classify::{decorate, directional_depth_vertex, Track};
use raystab::et0l::text::parse_grammar;
use raystab::et0l::{apply_table, count_derivations, LimitingGrammar};
use raystab::schreier::{green_coeffs, level_graph_component};
use raystab::series::MultiSeries;
use raystab::stab::{enumerate_wp, member_periodic, member_promise, MembershipVerdict};
use raystab::transducer::{decoding_automaton, PrefixCode};
use raystab::tree::{parse_group_file, Alphabet, Automorphism, GeneratingSet, Ray, Vertex, Word};

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("cannot read {path}: {e}"))
}

fn dihedral() -> GeneratingSet {
    parse_group_file(&fixture("dihedral.group")).unwrap()
}

fn img() -> GeneratingSet {
    parse_group_file(&fixture("img_z2i.group")).unwrap()
}

fn alphabet2() -> Alphabet {
    Alphabet::new(2).unwrap()
}

fn v(s: &str) -> Vertex {
    Vertex::parse(s, alphabet2()).unwrap()
}

prop_compose! {
    fn arb_machine()(n in 1..=3usize)(
        perms in proptest::collection::vec(prop::bool::ANY, n),
        succs in proptest::collection::vec(0..=n as u32, 2 * n),
        n in Just(n),
    ) -> Automorphism {
        let states: Vec<(Vec<u8>, Vec<u32>)> = (0..n)
            .map(|i| {
                let perm = if perms[i] { vec![1, 0] } else { vec![0, 1] };
                (perm, vec![succs[2 * i], succs[2 * i + 1]])
            })
            .collect();
        Automorphism::from_states(alphabet2(), states, 0).unwrap()
    }
}

prop_compose! {
    fn arb_vertex(max: usize)(letters in proptest::collection::vec(0..2u8, 0..=max)) -> Vertex {
        Vertex::from_letters(letters)
    }
}

prop_compose! {
    fn arb_ray()(
        initial in proptest::collection::vec(0..2u8, 0..4),
        period in proptest::collection::vec(0..2u8, 1..4),
    ) -> Ray {
        Ray::new(Vertex::from_letters(initial), Vertex::from_letters(period))
    }
}

proptest! {
    #[test]
    fn group_axioms(g in arb_machine(), h in arb_machine(), k in arb_machine()) {
        let l = g.compose(&h).unwrap().compose(&k).unwrap();
        let r = g.compose(&h.compose(&k).unwrap()).unwrap();
        prop_assert_eq!(l, r);
        prop_assert!(g.compose(&g.inverse()).unwrap().is_identity());
        prop_assert_eq!(g.is_identity(), g.minimize() == Automorphism::identity(alphabet2()));
        // the two equality routes agree
        prop_assert_eq!(g == h, g.equals_via_inverse(&h).unwrap());
    }

    #[test]
    fn section_cocycle(g in arb_machine(), h in arb_machine(), vert in arb_vertex(4)) {
        let gh = g.compose(&h).unwrap();
        let lhs = gh.section(&vert);
        let rhs = g.section(&vert).compose(&h.section(&g.apply(&vert))).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(gh.apply(&vert), h.apply(&g.apply(&vert)));
    }

    #[test]
    fn ray_action_agrees_with_vertex_action(g in arb_machine(), r in arb_ray()) {
        let image = g.apply_ray(&r);
        let bound = 3 * g.state_count() * r.period().len();
        for k in 0..=bound {
            prop_assert_eq!(image.prefix(k), g.apply(&r.prefix(k)));
        }
    }

    #[test]
    fn identity_action_is_normalization(r in arb_ray()) {
        let id = Automorphism::identity(alphabet2());
        prop_assert_eq!(id.apply_ray(&r), r);
    }

    #[test]
    fn minimization_is_idempotent_and_canonical(g in arb_machine()) {
        prop_assert_eq!(g.minimize(), g.clone());
        prop_assert_eq!(g.inverse().inverse(), g);
    }

    #[test]
    fn directional_depth_matches_section_triviality(g in arb_machine(), vert in arb_vertex(6)) {
        let d = directional_depth_vertex(&g, &vert);
        for k in 0..=vert.len() {
            let trivial = g.walk_state(&vert.prefix(k)) == 0;
            prop_assert_eq!(d.le(k), trivial);
        }
    }

    /// Truncation commutes with substitution when every replacement has
    /// minimal degree at least the weight of its variable (here: one), which
    /// is the regime the recurrence runs in.
    #[test]
    fn substitution_respects_truncation(
        exps in proptest::collection::vec((0..4u16, 0..4u16), 1..5),
        cap in 2..6usize,
    ) {
        let mut g = MultiSeries::zero(2, cap);
        for (i, (e1, e2)) in exps.iter().enumerate() {
            g.add_term(vec![*e1, *e2], BigUint::from(i as u64 + 1));
        }
        let rep_at = |c: usize| vec![
            MultiSeries::var(2, c, 0).add(&MultiSeries::var(2, c, 1)),
            MultiSeries::var(2, c, 1),
        ];
        let small = cap - 1;
        let a = g.substitute(&rep_at(cap)).unwrap().truncate(small);
        let b = g.truncate(small).substitute(&rep_at(small)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn section_monotonicity_on_fixtures() {
    // if the section dies at v it stays dead below v
    for gens in [dihedral(), img()] {
        for id in gens.ids() {
            let g = gens.machine(id);
            for vert in gens.alphabet().level(8) {
                let mut dead = false;
                let mut state = g.root_state();
                for &c in vert.letters() {
                    state = g.succ_at(state, c);
                    if dead {
                        assert_eq!(state, 0);
                    }
                    dead = state == 0;
                }
            }
        }
    }
}

#[test]
fn promise_procedure_agrees_with_periodic_decision() {
    let gens = dihedral();
    let rays = [Ray::new(v(""), v("1")), Ray::new(v("0"), v("01")), Ray::new(v("10"), v("110"))];
    let mut words = vec![Word::empty()];
    for _ in 0..6 {
        words = words
            .iter()
            .flat_map(|w| {
                (0..2u16).map(move |g| {
                    let mut l = w.0.clone();
                    l.push(g);
                    Word(l)
                })
            })
            .collect();
        for ray in &rays {
            for w in &words {
                let direct = member_periodic(&gens, w, ray.initial(), ray.period()).unwrap();
                match member_promise(&gens, w, ray, 256).unwrap() {
                    MembershipVerdict::Member => assert!(direct),
                    MembershipVerdict::NonMember { .. } => assert!(!direct),
                    MembershipVerdict::DepthExceeded { .. } => {
                        // an eventually periodic input may legitimately hit the
                        // cap; the promise procedure makes no claim then
                    }
                }
            }
        }
    }
}

#[test]
fn membership_language_is_closed_under_concatenation() {
    let gens = dihedral();
    let wp = enumerate_wp(&gens, &v(""), &v("1"), 4).unwrap();
    let set: BTreeSet<&Word> = wp.words.iter().collect();
    for w1 in &wp.words {
        for w2 in &wp.words {
            if w1.len() + w2.len() <= 4 {
                let cat = w1.concat(w2);
                assert!(set.contains(&cat), "concatenation escaped the language");
            }
        }
    }
}

#[test]
fn apply_table_distributes_over_concatenation() {
    let g = parse_grammar(&fixture("anbn.et0l")).unwrap();
    let alpha = &g.tables[0];
    let s = g.symbols.id_of("S").unwrap();
    let a = g.symbols.id_of("A").unwrap();
    let b = g.symbols.id_of("B").unwrap();
    let u = vec![s, a];
    let w = vec![b, s];
    let cap = 10;
    let uw: Vec<u32> = u.iter().chain(&w).copied().collect();
    let direct = apply_table(&uw, alpha, cap).unwrap();
    let mut glued = BTreeSet::new();
    for x in apply_table(&u, alpha, cap).unwrap() {
        for y in apply_table(&w, alpha, cap).unwrap() {
            let mut xy = x.clone();
            xy.extend(&y);
            if xy.len() <= cap {
                glued.insert(xy);
            }
        }
    }
    assert_eq!(direct, glued);
}

#[test]
fn limiting_generation_equals_union_of_rounds() {
    let astar = LimitingGrammar::new(parse_grammar(&fixture("astar.et0l")).unwrap()).unwrap();
    let run = astar.generate_limiting(5).unwrap();
    let mut union: BTreeSet<Vec<u32>> = BTreeSet::new();
    for set in &run.per_round {
        union.extend(set.iter().cloned());
    }
    let words: BTreeSet<Vec<u32>> = run.words.iter().cloned().collect();
    assert_eq!(words, union);
    // derivability matches round membership
    let (alpha, beta, gamma) = astar.table_roles();
    for (n, set) in run.per_round.iter().enumerate().take(4) {
        let mut labels = vec![alpha];
        labels.extend(std::iter::repeat_n(beta, n));
        labels.push(gamma);
        for w in &words {
            let count = count_derivations(astar.grammar(), w, &labels).unwrap();
            assert_eq!(count >= 1, set.contains(w), "round {n}, word {w:?}");
        }
    }
}

#[test]
fn green_coefficients_are_probabilities() {
    for (gens, base) in [(dihedral(), v("11111111")), (img(), v("10101010"))] {
        let graph = level_graph_component(&gens, 8, &base).unwrap();
        let green = green_coeffs(&gens, &graph, 8).unwrap();
        for p in green {
            assert!(p <= num_rational::BigRational::one());
        }
    }
}

#[test]
fn decoding_is_defined_exactly_on_code_star() {
    let code = PrefixCode::new(
        vec!["a".into(), "b".into()],
        vec!["x".into(), "y".into()],
        vec![(vec![0, 1], vec![0]), (vec![1], vec![1])],
    )
    .unwrap();
    let gsm = decoding_automaton(&code);
    // enumerate all inputs up to length 6 and compare against direct
    // factorization over the code
    let mut level: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..=6 {
        for w in &level {
            let decoded = gsm.apply(w);
            let direct = factorize(w, &[(vec![0, 1], 0), (vec![1], 1)]);
            assert_eq!(decoded, direct, "word {w:?}");
        }
        level = level
            .iter()
            .flat_map(|w| {
                (0..2u32).map(move |s| {
                    let mut w2 = w.clone();
                    w2.push(s);
                    w2
                })
            })
            .collect();
    }
}

fn factorize(w: &[u32], code: &[(Vec<u32>, u32)]) -> Option<Vec<u32>> {
    if w.is_empty() {
        return Some(Vec::new());
    }
    for (cw, out) in code {
        if w.len() >= cw.len() && w[..cw.len()] == cw[..] {
            if let Some(mut rest) = factorize(&w[cw.len()..], code) {
                rest.insert(0, *out);
                return Some(rest);
            }
        }
    }
    None
}

#[test]
fn vertex_decoration_chains_advance_consistently() {
    let gens = dihedral();
    let w = gens.parse_word("aabbab").unwrap();
    for vert in [v("11111111"), v("01010101"), v("0011")] {
        let dec = decorate(&Track::Vertex(vert.clone()), &w, &gens);
        let mut cur = vert;
        for (g, d) in dec.0 {
            let m = gens.machine(g);
            assert_eq!(directional_depth_vertex(m, &cur), d);
            cur = m.apply(&cur);
        }
    }
}

#[test]
fn word_problem_containment_in_every_tested_stabiliser() {
    // identity words stabilise every eventually periodic ray
    let gens = img();
    let mut identities = Vec::new();
    let mut level = vec![Word::empty()];
    for _ in 0..4 {
        level = level
            .iter()
            .flat_map(|w| {
                (0..3u16).map(move |g| {
                    let mut l = w.0.clone();
                    l.push(g);
                    Word(l)
                })
            })
            .collect();
        for w in &level {
            if gens.word_automorphism(w).is_identity() {
                identities.push(w.clone());
            }
        }
    }
    assert!(!identities.is_empty());
    for (a, b) in [(v(""), v("10")), (v("1"), v("0")), (v("01"), v("11"))] {
        for w in &identities {
            assert!(member_periodic(&gens, w, &a, &b).unwrap());
        }
    }
}

#[test]
fn table_languages_enumerate_deterministically() {
    let g = parse_grammar(&fixture("partitions.et0l")).unwrap();
    let s = g.symbols.id_of("S").unwrap();
    let lang: Nfa = g.tables[0].language(s);
    let w1 = lang.enumerate_by_length(6, 1024).unwrap();
    let w2 = lang.enumerate_by_length(6, 1024).unwrap();
    assert_eq!(w1, w2);
}

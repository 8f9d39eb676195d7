//! Acceptance suite: each test prints one PASS line per criterion and every
//! tolerance is pinned exactly (all arithmetic is exact, so "tolerance" means
//! equality throughout).

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use raystab::classify::{classify, decorate, directional_depth_ray, Classification, Depth, Track};
use raystab::et0l::text::parse_grammar;
use raystab::et0l::{
    count_derivations, generate, generate_limiting_counts, validate_limiting,
};
use raystab::schreier::{green_coeffs, level_graph_component, stabilized_walk_counts};
use raystab::series::{gfun_recurrence, green_from_f};
use raystab::stab::{enumerate_wp, member_periodic};
use raystab::transducer::{restrict_to_subgroup, transform_grammar, Gsm};
use raystab::tree::{parse_group_file, GeneratingSet, Ray, Vertex, Word};
use raystab::wp_grammar::{build_grammars, build_index_set, build_step_relation};

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

fn v(s: &str) -> Vertex {
    Vertex::parse(s, raystab::tree::Alphabet::new(2).unwrap()).unwrap()
}

fn report(criterion: &str, ok: bool, detail: &str) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion} failed: {detail}");
}

/// Criterion 1: the three independently computed dihedral count vectors agree
/// for lengths 0..8, with the hand-derived prefix, and the complement grammar
/// partitions the word space.
#[test]
fn criterion_1_dihedral_end_to_end() {
    let gens = dihedral();
    let (a, b) = (v(""), v("1"));
    let max_len = 8;

    let wp = enumerate_wp(&gens, &a, &b, max_len).unwrap();
    let (e, eprime) = build_grammars(&gens, &a, &b).unwrap();
    let grammar_counts = generate_limiting_counts(&e, max_len).unwrap();
    let (walks, _) = stabilized_walk_counts(&gens, &a, &b, max_len).unwrap();
    let walk_counts = walks.as_u64().unwrap();

    report(
        "criterion 1a (oracle = grammar)",
        wp.counts_by_length == grammar_counts,
        &format!("{:?} vs {:?}", wp.counts_by_length, grammar_counts),
    );
    report(
        "criterion 1b (oracle = walks)",
        wp.counts_by_length == walk_counts,
        &format!("{:?} vs {:?}", wp.counts_by_length, walk_counts),
    );
    report(
        "criterion 1c (prefix 1,1,2,3)",
        wp.counts_by_length[..4] == [1, 1, 2, 3],
        &format!("{:?}", &wp.counts_by_length[..4]),
    );
    let co_counts = generate_limiting_counts(&eprime, max_len).unwrap();
    let expectation: Vec<u64> = (0..=max_len)
        .map(|m| 2u64.pow(m as u32) - wp.counts_by_length[m])
        .collect();
    report(
        "criterion 1d (complement partition)",
        co_counts == expectation,
        &format!("{co_counts:?} vs {expectation:?}"),
    );
}

/// Criterion 2: the generating-function recurrence reproduces the counts of
/// criterion 1 exactly, with the same stabilization index as exact
/// generation.
#[test]
fn criterion_2_gfun() {
    let gens = dihedral();
    let (e, _) = build_grammars(&gens, &v(""), &v("1")).unwrap();
    let run = gfun_recurrence(&e, 8).unwrap();
    let generated = e.generate_limiting(8).unwrap();
    let counts = generated.counts_by_length(8);
    report(
        "criterion 2a (coefficients)",
        run.series.as_u64().unwrap() == counts,
        &format!("{:?}", run.series.as_u64().unwrap()),
    );
    report(
        "criterion 2b (stabilization index)",
        run.stabilization == generated.stabilization,
        &format!("gfun {} vs generation {}", run.stabilization, generated.stabilization),
    );
}

/// Criterion 3: Green-function coefficients from the series route equal the
/// Schreier-graph route exactly, with the hand-derived prefix.
#[test]
fn criterion_3_green_function() {
    let gens = dihedral();
    let (a, b) = (v(""), v("1"));
    let (e, _) = build_grammars(&gens, &a, &b).unwrap();
    let f = gfun_recurrence(&e, 8).unwrap().series;
    let via_series = green_from_f(&f, 2);

    let (_, level) = stabilized_walk_counts(&gens, &a, &b, 8).unwrap();
    let graph = level_graph_component(&gens, level, &Ray::new(a, b).prefix(level)).unwrap();
    let via_graph = green_coeffs(&gens, &graph, 8).unwrap();
    report(
        "criterion 3a (series = graph)",
        via_series == via_graph,
        &format!("{} coefficients", via_series.len()),
    );
    let rational = |n: u32, d: u32| {
        BigRational::new(BigUint::from(n).into(), BigUint::from(d).into())
    };
    let expect = [rational(1, 1), rational(1, 2), rational(1, 2), rational(3, 8)];
    report(
        "criterion 3b (prefix 1, 1/2, 1/2, 3/8)",
        via_series[..4] == expect,
        &format!("{:?}", &via_series[..4]),
    );
}

/// Criterion 4: the decision procedure on the dihedral facts, plus agreement
/// with the direct prefix-fixing definition on 200 random words.
#[test]
fn criterion_4_member_periodic() {
    let gens = dihedral();
    let (a, b) = (v(""), v("1"));
    let wb = gens.parse_word("b").unwrap();
    let wa = gens.parse_word("a").unwrap();
    report(
        "criterion 4a (b stabilises 1^w, a does not)",
        member_periodic(&gens, &wb, &a, &b).unwrap()
            && !member_periodic(&gens, &wa, &a, &b).unwrap(),
        "b -> member, a -> non-member",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checked = 0;
    for _ in 0..200 {
        let len = rng.gen_range(0..=10);
        let w = Word((0..len).map(|_| rng.gen_range(0..2u16)).collect());
        let member = member_periodic(&gens, &w, &a, &b).unwrap();
        let machine = gens.word_automorphism(&w);
        let depth = (machine.state_count() + 1) * b.len() + a.len() + 4;
        let prefix = Ray::new(a.clone(), b.clone()).prefix(depth);
        let direct = machine.apply(&prefix) == prefix;
        assert_eq!(member, direct, "disagreement on word {:?}", gens.format_word(&w));
        checked += 1;
    }
    report("criterion 4b (200 random words)", checked == 200, "agreement with prefix fixing");
}

/// Criterion 5: IMG(z²+i) classification and grammar-vs-oracle equality at
/// length 6 for η = (10)^ω.
#[test]
fn criterion_5_img() {
    let gens = img();
    let b_class = classify(gens.machine(gens.id_of("b").unwrap()));
    report(
        "criterion 5a (b finitary depth 1)",
        b_class == Classification::Finitary { depth: 1 },
        &format!("{b_class:?}"),
    );
    for (name, period) in [("a", "10"), ("c", "01")] {
        let c = classify(gens.machine(gens.id_of(name).unwrap()));
        let ok = matches!(
            &c,
            Classification::Directed { spine }
                if spine.initial.is_empty() && spine.period == v(period)
        );
        report(
            &format!("criterion 5b ({name} directed)"),
            ok,
            &format!("spine period {period}"),
        );
    }
    let (a, b) = (v(""), v("10"));
    let (e, _) = build_grammars(&gens, &a, &b).unwrap();
    let counts = generate_limiting_counts(&e, 6).unwrap();
    let wp = enumerate_wp(&gens, &a, &b, 6).unwrap();
    report(
        "criterion 5c (grammar = oracle at length 6)",
        counts == wp.counts_by_length,
        &format!("{counts:?}"),
    );
}

/// Criterion 6: the two fixture grammars behave exactly as documented.
#[test]
fn criterion_6_fixture_grammars() {
    let anbn = parse_grammar(&fixture("anbn.et0l")).unwrap();
    let words = generate(&anbn, 6, 12).unwrap();
    let rendered: Vec<String> = words.iter().map(|w| anbn.symbols.render_word(w)).collect();
    let expect = ["", "ab", "aabb", "abab", "aaabbb", "ababab"];
    report(
        "criterion 6a ((a^n b^n)^m words at length <= 6)",
        rendered == expect,
        &format!("{rendered:?}"),
    );

    let partitions = parse_grammar(&fixture("partitions.et0l")).unwrap();
    let target: Vec<u32> = "aababab"
        .chars()
        .map(|c| partitions.symbols.id_of(&c.to_string()).unwrap())
        .collect();
    let alpha = partitions.table_id("alpha").unwrap();
    let beta = partitions.table_id("beta").unwrap();
    let gamma = partitions.table_id("gamma").unwrap();
    let n = count_derivations(&partitions, &target, &[alpha, beta, alpha, alpha, gamma]).unwrap();
    report("criterion 6b (partitions derivation count)", n == 1, &format!("count {n}"));
}

/// Criterion 7: validators accept the constructed grammars and the toy, and
/// reject the corrupted fixtures with witnesses.
#[test]
fn criterion_7_validators() {
    let gens = dihedral();
    let (e, eprime) = build_grammars(&gens, &v(""), &v("1")).unwrap();
    for (name, lim) in [("E", &e), ("E'", &eprime)] {
        let report_out = validate_limiting(lim.grammar(), 4, 5).unwrap();
        report(
            &format!("criterion 7a (validator passes {name})"),
            report_out.is_ok(),
            &format!("{report_out:?}"),
        );
    }
    let astar = parse_grammar(&fixture("astar.et0l")).unwrap();
    let report_astar = validate_limiting(&astar, 5, 7).unwrap();
    report("criterion 7b (validator passes a*)", report_astar.is_ok(), "no violations");

    let bad_beta = parse_grammar(&fixture("bad_eps_beta.et0l")).unwrap();
    let rep = validate_limiting(&bad_beta, 4, 4).unwrap();
    report(
        "criterion 7c (rejects eps in beta)",
        rep.structural.iter().any(|m| m.contains("beta")),
        &format!("{:?}", rep.structural),
    );
    let bad_gamma = parse_grammar(&fixture("bad_empty_gamma.et0l")).unwrap();
    let rep = validate_limiting(&bad_gamma, 4, 4).unwrap();
    report(
        "criterion 7d (rejects empty gamma)",
        rep.structural.iter().any(|m| m.contains("gamma")),
        &format!("{:?}", rep.structural),
    );
    let ambiguous = parse_grammar(&fixture("ambiguous.et0l")).unwrap();
    let rep = validate_limiting(&ambiguous, 4, 6).unwrap();
    report(
        "criterion 7e (flags the ambiguous toy)",
        rep.ambiguity.iter().any(|(w, _, c)| w == "a" && *c >= 2),
        &format!("{:?}", rep.ambiguity),
    );
}

/// Criterion 8: closure constructions preserve languages as stated.
#[test]
fn criterion_8_closure_constructions() {
    let gens = dihedral();
    let (e, _) = build_grammars(&gens, &v(""), &v("1")).unwrap();

    let names: Vec<String> = gens.names().to_vec();
    let identity_gsm = Gsm {
        input_names: names.clone(),
        output_names: names,
        n_states: 1,
        initial: 0,
        accept: vec![true],
        delta: vec![(0..gens.len() as u32).map(|s| Some((vec![s], 0))).collect()],
    };
    let transformed = transform_grammar(&e, &identity_gsm, 6).unwrap();
    let before = generate_limiting_counts(&e, 8).unwrap();
    let after = generate_limiting_counts(&transformed, 8).unwrap();
    report(
        "criterion 8a (identity transduction preserves the language)",
        before == after,
        &format!("{before:?} vs {after:?}"),
    );

    let sub = vec![("b".to_string(), gens.parse_word("b").unwrap())];
    let restricted = restrict_to_subgroup(&e, &gens, &sub, 16, 8).unwrap();
    let counts = generate_limiting_counts(&restricted, 8).unwrap();
    report(
        "criterion 8b (restriction to {b} gives b*)",
        counts == vec![1; 9],
        &format!("{counts:?}"),
    );
}

/// Criterion 9: the property suites (also runnable standalone in the
/// `properties` test target) hold with zero violations.
#[test]
fn criterion_9_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // group axioms on random small machines
    let alphabet = raystab::tree::Alphabet::new(2).unwrap();
    let random_machine = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(1..=3usize);
        let states: Vec<(Vec<u8>, Vec<u32>)> = (0..n)
            .map(|_| {
                let perm = if rng.gen_bool(0.5) { vec![0, 1] } else { vec![1, 0] };
                let succ = (0..2).map(|_| rng.gen_range(0..=n as u32)).collect();
                (perm, succ)
            })
            .collect();
        raystab::tree::Automorphism::from_states(alphabet, states, 0).unwrap()
    };
    for _ in 0..200 {
        let g = random_machine(&mut rng);
        let h = random_machine(&mut rng);
        let k = random_machine(&mut rng);
        let assoc_l = g.compose(&h).unwrap().compose(&k).unwrap();
        let assoc_r = g.compose(&h.compose(&k).unwrap()).unwrap();
        assert_eq!(assoc_l, assoc_r);
        assert!(g.compose(&g.inverse()).unwrap().is_identity());
        assert_eq!(g.is_identity(), g == raystab::tree::Automorphism::identity(alphabet));
        assert_eq!(g == h, g.equals_via_inverse(&h).unwrap());
    }
    report("criterion 9a (group axioms)", true, "200 random machine triples");

    // section cocycle and action compatibility
    for _ in 0..200 {
        let g = random_machine(&mut rng);
        let h = random_machine(&mut rng);
        let len = rng.gen_range(0..=4);
        let vert = Vertex::from_letters((0..len).map(|_| rng.gen_range(0..2u8)).collect());
        let gh = g.compose(&h).unwrap();
        let lhs = gh.section(&vert);
        let rhs = g.section(&vert).compose(&h.section(&g.apply(&vert))).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(gh.apply(&vert), h.apply(&g.apply(&vert)));
    }
    report("criterion 9b (section cocycle)", true, "200 random instances");

    // decoration chain consistency on both fixture groups
    for gens in [dihedral(), img()] {
        let eta = if gens.len() == 2 { Ray::new(v(""), v("1")) } else { Ray::new(v(""), v("10")) };
        for _ in 0..100 {
            let len = rng.gen_range(0..=6);
            let w = Word((0..len).map(|_| rng.gen_range(0..gens.len() as u16)).collect());
            let dec = decorate(&Track::Ray(eta.clone()), &w, &gens);
            let mut ray = eta.clone();
            for (g, d) in dec.0 {
                let m = gens.machine(g);
                assert_eq!(directional_depth_ray(m, &ray), d);
                ray = m.apply_ray(&ray);
            }
        }
    }
    report("criterion 9c (decoration chains)", true, "both fixture groups");

    // step relation periodicity sweep, m <= 3
    for (gens, b) in [(dihedral(), v("1")), (img(), v("10"))] {
        let idx = build_index_set(&gens, &v(""), &b).unwrap();
        let step = build_step_relation(&gens, &idx);
        let mut entries = 0usize;
        for (&g, map) in &step.per_gen {
            let m = gens.machine(g);
            let (from, to) = idx.spine_pairs[&g];
            let (u, vv) = &idx.pairs[from];
            let (u2, vv2) = &idx.pairs[to];
            for ((q, y), (q2, y2)) in map {
                for reps in 1..=3usize {
                    let src = u.concat(&vv.repeat(reps)).concat(q).concat(y);
                    let dst = u2.concat(&vv2.repeat(reps)).concat(q2).concat(y2);
                    assert_eq!(m.apply(&src), dst);
                    assert_ne!(m.walk_state(&u.concat(&vv.repeat(reps)).concat(q)), 0);
                    assert_eq!(m.walk_state(&src), 0);
                }
                entries += 1;
            }
        }
        assert!(entries > 0);
    }
    report("criterion 9d (step relation periodicity)", true, "m = 1..3 on both groups");

    // containment: identity words stabilise every tested ray
    let gens = dihedral();
    let rays = [(v(""), v("1")), (v("0"), v("01")), (v("1"), v("10"))];
    for _ in 0..100 {
        let len = rng.gen_range(0..=5);
        let half = Word((0..len).map(|_| rng.gen_range(0..2u16)).collect());
        // w · reverse(w) is the identity since both generators are involutions
        let mut letters = half.0.clone();
        letters.extend(half.0.iter().rev());
        let w = Word(letters);
        assert!(gens.word_automorphism(&w).is_identity());
        for (a, b) in &rays {
            assert!(member_periodic(&gens, &w, a, b).unwrap());
        }
    }
    report("criterion 9e (word problem containment)", true, "100 identity words, 3 rays");

    // depth of the identity along anything is zero
    let id = raystab::tree::Automorphism::identity(alphabet);
    assert_eq!(directional_depth_ray(&id, &Ray::new(v(""), v("1"))), Depth::Finite(0));
}

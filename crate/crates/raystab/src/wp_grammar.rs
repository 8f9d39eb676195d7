//! Construction of the unambiguous limiting ET0L grammars for the stabiliser
//! membership language of an eventually periodic ray, and for its complement.
//!
//! Given a symmetric generating set whose elements are each finitary or
//! directed, and a ray `η = a·b^ω`, the builder produces two grammars sharing
//! all three tables and differing only in the start symbol. Nonterminals
//! track how a factor of a word moves one ray window onto another; the three
//! tables fill in letters by decreasing directional depth: the init table
//! places the letters of infinite depth, each processing round places the
//! letters within one window-width of the current depth, and the finish table
//! generates everything that acts inside the remaining window.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::automaton::{Nfa, NfaBuilder};
use crate::classify::{classify, Classification, SpineData};
use crate::et0l::{Et0lError, Et0lGrammar, LimitingGrammar, SymbolSpace, Table};
use crate::par;
use crate::tree::{GenId, GeneratingSet, Ray, TreeError, Vertex};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("generator `{0}` is neither finitary nor directed ({1})")]
    NotFinDirGenerator(String, &'static str),
    #[error("generating set is not symmetric; add inverses first")]
    NotSymmetric,
    #[error("the period word must be nonempty")]
    EmptyPeriod,
    #[error("nonterminal universe exceeded cap {0}")]
    NonterminalCap(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Et0l(#[from] Et0lError),
}

pub type PairId = usize;

/// The finite set of ray windows underlying the nonterminals: pairs `(u, v)`
/// of equal length `ell` with distinct initials, covering `η`, every spine,
/// and every translate of a spine by a directed generator. For each directed
/// generator the designated pair carries the section-periodicity witness
/// `x@u = x@uv`.
#[derive(Clone, Debug)]
pub struct IndexSet {
    pub ell: usize,
    pub pairs: Vec<(Vertex, Vertex)>,
    pub eta: PairId,
    /// per directed generator: (pair of its spine, pair of spine · generator)
    pub spine_pairs: BTreeMap<GenId, (PairId, PairId)>,
    /// classification witness per directed generator
    pub spine_data: BTreeMap<GenId, SpineData>,
    /// finitary depths of the remaining generators
    pub finitary_depths: BTreeMap<GenId, usize>,
}

impl IndexSet {
    pub fn ray(&self, id: PairId) -> Ray {
        let (u, v) = &self.pairs[id];
        Ray::new(u.clone(), v.clone())
    }

    pub fn directed(&self) -> impl Iterator<Item = GenId> + '_ {
        self.spine_pairs.keys().copied()
    }
}

/// Builds the index set exactly along the four normalization steps: equalize
/// lengths, force distinct initials by doubling, record spine witnesses, and
/// re-cut to a common multiple of the witness lengths and finitary depths.
pub fn build_index_set(
    gens: &GeneratingSet,
    a: &Vertex,
    b: &Vertex,
) -> Result<IndexSet, BuildError> {
    if b.is_empty() {
        return Err(BuildError::EmptyPeriod);
    }
    let mut spine_data = BTreeMap::new();
    let mut finitary_depths = BTreeMap::new();
    for g in gens.ids() {
        match classify(gens.machine(g)) {
            Classification::Finitary { depth } => {
                finitary_depths.insert(g, depth);
            }
            Classification::Directed { spine } => {
                spine_data.insert(g, spine);
            }
            Classification::BoundedOther => {
                return Err(BuildError::NotFinDirGenerator(
                    gens.name(g).to_string(),
                    "bounded but not directed",
                ))
            }
            Classification::Unbounded => {
                return Err(BuildError::NotFinDirGenerator(gens.name(g).to_string(), "unbounded"))
            }
        }
    }

    // seed rays: η, the spines, and every translate spine(x)·y
    let eta = Ray::new(a.clone(), b.clone());
    let mut seeds: BTreeSet<Ray> = BTreeSet::new();
    seeds.insert(eta.clone());
    for spine in spine_data.values() {
        let ray = spine.ray();
        for y in spine_data.keys() {
            seeds.insert(gens.machine(*y).apply_ray(&ray));
        }
        seeds.insert(ray);
    }

    // step 1: common length for initial and period
    let mut ell = seeds.iter().map(|r| r.period().len()).fold(1, num_integer::lcm);
    let m = seeds.iter().map(|r| r.initial().len()).max().unwrap_or(0);
    if m > 0 {
        ell = num_integer::lcm(ell, m);
    }
    let mut pairs: BTreeSet<(Vertex, Vertex)> = seeds
        .iter()
        .map(|r| {
            let two = r.prefix(2 * ell);
            (two.prefix(ell), two.slice(ell, 2 * ell))
        })
        .collect();

    // step 2: distinct initials via (uv, vv)
    pairs = pairs.into_iter().map(|(u, v)| (u.concat(&v), v.repeat(2))).collect();
    ell *= 2;

    // step 4: stretch so every spine witness and finitary depth divides ell
    let mut target = ell;
    for spine in spine_data.values() {
        if !spine.initial.is_empty() {
            target = num_integer::lcm(target, spine.initial.len());
        }
        target = num_integer::lcm(target, spine.period.len());
    }
    for &depth in finitary_depths.values() {
        if depth > 0 {
            target = num_integer::lcm(target, depth);
        }
    }
    if target > ell {
        let k = target / ell;
        pairs = pairs
            .into_iter()
            .map(|(u, v)| (u.concat(&v.repeat(k - 1)), v.repeat(k)))
            .collect();
        ell = target;
    }

    let pairs: Vec<(Vertex, Vertex)> = pairs.into_iter().collect();
    let by_ray: HashMap<Ray, PairId> = pairs
        .iter()
        .enumerate()
        .map(|(i, (u, v))| (Ray::new(u.clone(), v.clone()), i))
        .collect();

    let eta_id = by_ray[&eta];
    let mut spine_pairs = BTreeMap::new();
    for (&g, spine) in &spine_data {
        let ray = spine.ray();
        let from = by_ray[&ray];
        let to = by_ray[&gens.machine(g).apply_ray(&ray)];
        spine_pairs.insert(g, (from, to));
    }

    let idx = IndexSet { ell, pairs, eta: eta_id, spine_pairs, spine_data, finitary_depths };
    debug_assert!(idx.check_invariants(gens));
    Ok(idx)
}

impl IndexSet {
    /// Re-checks the defining properties; used by tests and debug builds.
    pub fn check_invariants(&self, gens: &GeneratingSet) -> bool {
        let ell = self.ell;
        // equal lengths and distinct initials
        if !self.pairs.iter().all(|(u, v)| u.len() == ell && v.len() == ell) {
            return false;
        }
        let initials: BTreeSet<&Vertex> = self.pairs.iter().map(|(u, _)| u).collect();
        if initials.len() != self.pairs.len() {
            return false;
        }
        // witness: x@u = x@uv for the designated spine pair
        for (&g, &(from, _)) in &self.spine_pairs {
            let (u, v) = &self.pairs[from];
            let m = gens.machine(g);
            if m.section(u) != m.section(&u.concat(v)) {
                return false;
            }
            if Ray::new(u.clone(), v.clone()) != self.spine_data[&g].ray() {
                return false;
            }
        }
        // depth bound for finitary generators
        if !self.finitary_depths.values().all(|&d| ell >= d) {
            return false;
        }
        true
    }
}

/// For each directed generator, the window-action table: `(q, y) ↦ (q', y')`
/// such that `(u v q y)·x = u' v' q' y'` with the directional depth of `x`
/// along `u v q y` in `(4ℓ, 5ℓ]`, where `(u,v)` and `(u',v')` are the spine
/// pairs of `x` and of `spine(x)·x`.
/// `(q, y) ↦ (q', y')` entries of one generator.
pub type StepMap = BTreeMap<(Vertex, Vertex), (Vertex, Vertex)>;

#[derive(Clone, Debug, Default)]
pub struct StepRelation {
    pub per_gen: BTreeMap<GenId, StepMap>,
}

impl StepRelation {
    pub fn lookup(&self, g: GenId, q: &Vertex, y: &Vertex) -> Option<&(Vertex, Vertex)> {
        self.per_gen.get(&g)?.get(&(q.clone(), y.clone()))
    }

    pub fn entry_count(&self) -> usize {
        self.per_gen.values().map(|m| m.len()).sum()
    }
}

pub fn build_step_relation(gens: &GeneratingSet, idx: &IndexSet) -> StepRelation {
    build_step_relation_with(gens, idx, par::parallel_available())
}

/// As [`build_step_relation`], with explicit parallelism (benchmark hook).
/// The sweep enumerates all `(q, y)` with `q ∈ C^{2ℓ}`, `y ∈ C^ℓ`.
pub fn build_step_relation_with(
    gens: &GeneratingSet,
    idx: &IndexSet,
    parallel: bool,
) -> StepRelation {
    let ell = idx.ell;
    let alphabet = gens.alphabet();
    let qs = alphabet.level(2 * ell);
    let ys = alphabet.level(ell);
    let mut per_gen = BTreeMap::new();
    for (&g, &(from, to)) in &idx.spine_pairs {
        let machine = gens.machine(g);
        let (u, v) = &idx.pairs[from];
        let (u2, v2) = &idx.pairs[to];
        let uv = u.concat(v);
        let expect_prefix = u2.concat(v2);
        let rows = par::map_slice(parallel, &qs, |q| {
            let mut entries = Vec::new();
            let head = uv.concat(q);
            let head_state = machine.walk_state(&head);
            if head_state == 0 {
                return entries; // depth would be ≤ 4ℓ for every y
            }
            for y in &ys {
                let full = head.concat(y);
                if machine.walk_state(&full) != 0 {
                    continue; // depth > 5ℓ
                }
                let image = machine.apply(&full);
                debug_assert!(expect_prefix.is_prefix_of(&image));
                let q_img = image.slice(2 * ell, 4 * ell);
                let y_img = image.slice(4 * ell, 5 * ell);
                entries.push(((q.clone(), y.clone()), (q_img, y_img)));
            }
            entries
        });
        let map: StepMap = rows.into_iter().flatten().collect();
        per_gen.insert(g, map);
    }
    StepRelation { per_gen }
}

/// A window: an index pair together with a path hanging below it.
type Window = (PairId, Vertex);

/// Nonterminal identities of the constructed grammars.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum NtKey {
    /// start symbol of the stabiliser grammar
    Start,
    /// start symbol of the complement grammar
    StartCo,
    /// placeholder for words moving one window onto a goal
    Track { from: Window, goal: Goal },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Goal {
    /// end exactly on this window
    Window(PairId, Vertex),
    /// end anywhere except the η window
    AvoidEta,
    /// end anywhere
    Free,
}

const NT_CAP: usize = 100_000;

/// Builder holding the shared context of the two grammars.
pub struct GrammarBuilder<'a> {
    gens: &'a GeneratingSet,
    pub idx: IndexSet,
    pub step: StepRelation,
    symbols: SymbolSpace,
    terminal_of_gen: Vec<crate::automaton::Sym>,
    nt_ids: HashMap<NtKey, crate::automaton::Sym>,
    worklist: Vec<NtKey>,
    /// finish-table orbit skeletons, keyed by the window vertex they start
    /// from; placeholders sharing a source window share the whole automaton
    /// up to accept marks
    finish_orbits: HashMap<Vertex, FinishOrbit>,
}

/// Reachable window vertices under section-trivial moves, with the labeled
/// edge structure. State 0 is the starting vertex.
struct FinishOrbit {
    index: HashMap<Vertex, u32>,
    edges: Vec<Vec<(crate::automaton::Sym, u32)>>,
}

impl<'a> GrammarBuilder<'a> {
    pub fn new(gens: &'a GeneratingSet, a: &Vertex, b: &Vertex) -> Result<Self, BuildError> {
        if !gens.is_symmetric() {
            return Err(BuildError::NotSymmetric);
        }
        let idx = build_index_set(gens, a, b)?;
        let step = build_step_relation(gens, &idx);
        let mut symbols = SymbolSpace::new();
        let terminal_of_gen =
            gens.names().iter().map(|n| symbols.add_terminal(n)).collect();
        Ok(GrammarBuilder {
            gens,
            idx,
            step,
            symbols,
            terminal_of_gen,
            nt_ids: HashMap::new(),
            worklist: Vec::new(),
            finish_orbits: HashMap::new(),
        })
    }

    fn ensure_finish_orbit(&mut self, up: &Vertex) {
        let gens = self.gens;
        let terminal_of_gen = &self.terminal_of_gen;
        self.finish_orbits.entry(up.clone()).or_insert_with(|| {
            let mut index = HashMap::new();
            index.insert(up.clone(), 0u32);
            let mut verts = vec![up.clone()];
            let mut edges: Vec<Vec<(crate::automaton::Sym, u32)>> = Vec::new();
            let mut i = 0usize;
            while i < verts.len() {
                let t = verts[i].clone();
                let mut row = Vec::new();
                for g in gens.ids() {
                    let m = gens.machine(g);
                    if m.walk_state(&t) != 0 {
                        continue; // directional depth would exceed the window
                    }
                    let img = m.apply(&t);
                    let dst = match index.get(&img) {
                        Some(&d) => d,
                        None => {
                            let d = verts.len() as u32;
                            index.insert(img.clone(), d);
                            verts.push(img);
                            d
                        }
                    };
                    row.push((terminal_of_gen[g as usize], dst));
                }
                edges.push(row);
                i += 1;
            }
            FinishOrbit { index, edges }
        });
    }

    fn nt_name(&self, key: &NtKey) -> String {
        let window = |w: &Window| {
            let (u, v) = &self.idx.pairs[w.0];
            format!("{u}.{v}:{}", w.1)
        };
        match key {
            NtKey::Start => "S".to_string(),
            NtKey::StartCo => "Sc".to_string(),
            NtKey::Track { from, goal } => match goal {
                Goal::Window(p, path) => {
                    format!("[{};{}]", window(from), window(&(*p, path.clone())))
                }
                Goal::AvoidEta => format!("[{};!eta]", window(from)),
                Goal::Free => format!("[{};any]", window(from)),
            },
        }
    }

    fn intern(&mut self, key: NtKey) -> Result<crate::automaton::Sym, BuildError> {
        if let Some(&id) = self.nt_ids.get(&key) {
            return Ok(id);
        }
        if self.nt_ids.len() >= NT_CAP {
            return Err(BuildError::NonterminalCap(NT_CAP));
        }
        let name = self.nt_name(&key);
        let id = self.symbols.add_nonterminal(&name);
        self.nt_ids.insert(key.clone(), id);
        if matches!(key, NtKey::Track { .. }) {
            self.worklist.push(key);
        }
        Ok(id)
    }

    fn eta_window(&self) -> Window {
        let (_, b) = &self.idx.pairs[self.idx.eta];
        (self.idx.eta, b.repeat(2))
    }

    /// Directed generators whose spine pair is `p`.
    fn directed_with_spine(&self, p: PairId) -> Vec<GenId> {
        self.idx
            .spine_pairs
            .iter()
            .filter(|&(_, &(from, _))| from == p)
            .map(|(&g, _)| g)
            .collect()
    }

    /// The init table language for one start symbol. Words alternate
    /// placeholders and directed letters; every placeholder carries
    /// period-squared paths with matching periods on both sides, consecutive
    /// symbols chain through the spine pairs, and the final placeholder
    /// closes on the η window (stabiliser variant) or on the complement
    /// goals.
    pub fn tau_init(&mut self, complement: bool) -> Result<Nfa, BuildError> {
        let eta_w = self.eta_window();
        let eta_period = self.idx.pairs[self.idx.eta].1.clone();
        let mut b = NfaBuilder::new();
        let init = b.state();
        // states keyed by the pair that the next letter must have as spine
        let mut after_p: HashMap<PairId, u32> = HashMap::new();
        let mut after_x: HashMap<PairId, u32> = HashMap::new();
        let mut accept_state: Option<u32> = None;

        // collect the left windows from which a placeholder may start
        // (η itself, or any spine-image pair after a letter)
        let mut left_pairs: BTreeSet<PairId> = BTreeSet::new();
        left_pairs.insert(self.idx.eta);
        let mut right_pairs: BTreeSet<PairId> = BTreeSet::new();
        right_pairs.insert(self.idx.eta);
        for &(from, to) in self.idx.spine_pairs.values() {
            left_pairs.insert(to);
            right_pairs.insert(from);
        }

        // seed automaton states
        for &p in &right_pairs {
            after_p.entry(p).or_insert_with(|| b.state());
        }
        for &p in &left_pairs {
            after_x.entry(p).or_insert_with(|| b.state());
        }

        // a placeholder read from `src` must have left window `left`;
        // its right window decides the next state
        let mut placeholder_edges: Vec<(u32, Window)> = vec![(init, eta_w.clone())];
        for &p in &left_pairs {
            let (_, v) = &self.idx.pairs[p];
            placeholder_edges.push((after_x[&p], (p, v.repeat(2))));
        }
        for (src, left) in placeholder_edges {
            let left_period = self.idx.pairs[left.0].1.clone();
            for &rp in &right_pairs {
                let (_, rv) = self.idx.pairs[rp].clone();
                if rv != left_period {
                    continue; // periods must chain
                }
                let key = NtKey::Track {
                    from: left.clone(),
                    goal: Goal::Window(rp, rv.repeat(2)),
                };
                let sym = self.intern(key)?;
                b.edge(src, sym, after_p[&rp]);
            }
            if complement {
                // final placeholder of the complement variant
                let acc = *accept_state.get_or_insert_with(|| b.state());
                let goal = if left_period == eta_period { Goal::AvoidEta } else { Goal::Free };
                let sym = self.intern(NtKey::Track { from: left.clone(), goal })?;
                b.edge(src, sym, acc);
            }
        }
        // letters between placeholders
        for &rp in &right_pairs {
            for g in self.directed_with_spine(rp) {
                let to = self.idx.spine_pairs[&g].1;
                b.edge(after_p[&rp], self.terminal_of_gen[g as usize], after_x[&to]);
            }
        }
        if complement {
            if let Some(acc) = accept_state {
                b.accept(acc);
            }
        } else {
            b.accept(after_p[&self.idx.eta]);
        }
        Ok(b.build(init))
    }

    /// The processing table language for one placeholder: the window slides
    /// one period deeper, letters of directional depth in the topmost period
    /// band are emitted, linked through the step relation.
    fn tau_up(&mut self, key: &NtKey) -> Result<Nfa, BuildError> {
        let NtKey::Track { from, goal } = key.clone() else {
            panic!("tau_up is only defined on placeholders")
        };
        let ell = self.idx.ell;
        let (_, v) = self.idx.pairs[from.0].clone();
        let vp1 = v.concat(&from.1).prefix(2 * ell);
        let child_left: Window = (from.0, vp1);
        let y0 = from.1.suffix(ell);
        let eta_period = self.idx.pairs[self.idx.eta].1.clone();

        // goal data for acceptance
        let case1 = match &goal {
            Goal::Window(p, path) => {
                let (_, gv) = self.idx.pairs[*p].clone();
                let gvp1 = gv.concat(path).prefix(2 * ell);
                Some(((*p, gvp1), path.suffix(ell)))
            }
            _ => None,
        };

        let mut b = NfaBuilder::new();
        // expect states: (left window, carried y); read states: (right window, y)
        let mut expects: HashMap<(Window, Vertex), u32> = HashMap::new();
        let mut reads: HashMap<(Window, Vertex), u32> = HashMap::new();
        let mut accept: Option<u32> = None;
        let init = b.state();
        expects.insert((child_left.clone(), y0.clone()), init);
        let mut queue: Vec<(Window, Vertex)> = vec![(child_left.clone(), y0.clone())];

        while let Some((left, y)) = queue.pop() {
            let src = expects[&(left.clone(), y.clone())];
            // final placeholder options
            match &goal {
                Goal::Window(_, _) => {}
                Goal::AvoidEta => {
                    let acc = *accept.get_or_insert_with(|| b.state());
                    let g = if y == eta_period { Goal::AvoidEta } else { Goal::Free };
                    let sym = self.intern(NtKey::Track { from: left.clone(), goal: g })?;
                    b.edge(src, sym, acc);
                }
                Goal::Free => {
                    let acc = *accept.get_or_insert_with(|| b.state());
                    let sym =
                        self.intern(NtKey::Track { from: left.clone(), goal: Goal::Free })?;
                    b.edge(src, sym, acc);
                }
            }
            // mid placeholders: right window feeds a step-relation letter
            let mut rights: BTreeSet<Window> = BTreeSet::new();
            for (&g, entries) in &self.step.per_gen {
                let (spine_from, _) = self.idx.spine_pairs[&g];
                for (q, ey) in entries.keys() {
                    if *ey == y {
                        rights.insert((spine_from, q.clone()));
                    }
                }
            }
            // case 1 also closes on the goal window
            if let Some((goal_right, goal_y)) = &case1 {
                if y == *goal_y {
                    rights.insert(goal_right.clone());
                }
            }
            for right in rights {
                let sym = self.intern(NtKey::Track {
                    from: left.clone(),
                    goal: Goal::Window(right.0, right.1.clone()),
                })?;
                let read_key = (right.clone(), y.clone());
                let dst = match reads.get(&read_key) {
                    Some(&d) => d,
                    None => {
                        let d = b.state();
                        reads.insert(read_key.clone(), d);
                        // acceptance for case 1
                        if let Some((goal_right, goal_y)) = &case1 {
                            if right == *goal_right && y == *goal_y {
                                b.accept(d);
                            }
                        }
                        // letter transitions out of the read state
                        let per_gen = std::mem::take(&mut self.step.per_gen);
                        for (&g, entries) in &per_gen {
                            let (spine_from, spine_to) = self.idx.spine_pairs[&g];
                            if spine_from != right.0 {
                                continue;
                            }
                            if let Some((q2, y2)) = entries.get(&(right.1.clone(), y.clone())) {
                                let next_left: Window = (spine_to, q2.clone());
                                let ekey = (next_left.clone(), y2.clone());
                                let e = match expects.get(&ekey) {
                                    Some(&e) => e,
                                    None => {
                                        let e = b.state();
                                        expects.insert(ekey.clone(), e);
                                        queue.push(ekey);
                                        e
                                    }
                                };
                                b.edge(d, self.terminal_of_gen[g as usize], e);
                            }
                        }
                        self.step.per_gen = per_gen;
                        d
                    }
                };
                b.edge(src, sym, dst);
            }
        }
        if let Some(acc) = accept {
            b.accept(acc);
        }
        Ok(b.build(init))
    }

    /// The finish table language for one placeholder: all words over the full
    /// generator alphabet whose action moves the window vertex onto the goal
    /// with all directional depths inside the window; the placeholder itself
    /// is always an alternative, so γ images are never empty.
    fn tau_finish(&mut self, key: &NtKey) -> Result<Nfa, BuildError> {
        let NtKey::Track { from, goal } = key.clone() else {
            panic!("tau_finish is only defined on placeholders")
        };
        let (u, _) = self.idx.pairs[from.0].clone();
        let up = u.concat(&from.1);
        let sym = self.intern(key.clone())?;
        self.ensure_finish_orbit(&up);
        let orbit = &self.finish_orbits[&up];
        let n = orbit.edges.len();
        let d = self.gens.alphabet().degree() as usize;
        let bound = (0..3 * self.idx.ell).fold(1usize, |acc, _| acc.saturating_mul(d));
        debug_assert!(n <= bound, "finish DFA has {n} states");
        let mut accept = vec![false; n + 1];
        match &goal {
            Goal::Window(p, path) => {
                let (gu, _) = &self.idx.pairs[*p];
                let target = gu.concat(path);
                if let Some(&q) = orbit.index.get(&target) {
                    accept[q as usize] = true;
                }
            }
            Goal::AvoidEta => {
                let (ea, eb) = &self.idx.pairs[self.idx.eta];
                let forbidden = ea.concat(&eb.repeat(2));
                for (t, &q) in &orbit.index {
                    accept[q as usize] = *t != forbidden;
                }
            }
            Goal::Free => {
                accept[..n].fill(true);
            }
        }
        // the unchanged-placeholder alternative lives in one extra state
        let mut edges = orbit.edges.clone();
        let self_acc = n as u32;
        accept[self_acc as usize] = true;
        edges.push(Vec::new());
        edges[0].push((sym, self_acc));
        Ok(Nfa::from_parts(0, accept, edges))
    }

    /// Assembles the two grammars. They share symbols and tables; only the
    /// start symbol differs.
    pub fn build(mut self) -> Result<(LimitingGrammar, LimitingGrammar), BuildError> {
        let start = self.intern(NtKey::Start)?;
        let start_co = self.intern(NtKey::StartCo)?;
        let mut alpha = Table::new("alpha");
        let mut beta = Table::new("beta");
        let mut gamma = Table::new("gamma");
        let init_e = self.tau_init(false)?;
        let init_co = self.tau_init(true)?;
        alpha.set(start, init_e);
        alpha.set(start_co, init_co);
        let mut done = 0usize;
        while done < self.worklist.len() {
            let key = self.worklist[done].clone();
            done += 1;
            let sym = self.nt_ids[&key];
            let up = self.tau_up(&key)?;
            beta.set(sym, up);
            let fin = self.tau_finish(&key)?;
            gamma.set(sym, fin);
        }
        let table_names = ["alpha", "beta", "gamma"];
        let control = crate::automaton::regex_to_nfa("alpha beta* gamma", &|n| {
            table_names.iter().position(|t| *t == n).map(|i| i as u32)
        })
        .expect("fixed control expression");
        let grammar = Et0lGrammar {
            symbols: self.symbols,
            tables: vec![alpha, beta, gamma],
            control,
            control_expr: "alpha beta* gamma".to_string(),
            start,
        };
        let mut co = grammar.clone();
        co.start = start_co;
        Ok((LimitingGrammar::new(grammar)?, LimitingGrammar::new(co)?))
    }
}

/// Builds the stabiliser-language grammar and its complement for
/// `η = a·b^ω` over the given symmetric generating set.
pub fn build_grammars(
    gens: &GeneratingSet,
    a: &Vertex,
    b: &Vertex,
) -> Result<(LimitingGrammar, LimitingGrammar), BuildError> {
    GrammarBuilder::new(gens, a, b)?.build()
}

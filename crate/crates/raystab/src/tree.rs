//! Exact algebra of automaton automorphisms of the d-regular rooted tree.
//!
//! Vertices are words over the letters `0..d-1`; boundary points that are
//! eventually periodic are stored as [`Ray`] values in a normal form that
//! makes structural equality coincide with equality in the boundary.
//! An [`Automorphism`] is a finite-state machine (per-state root permutation
//! plus one successor state per letter); every public value is kept in a
//! canonical minimized form, so `==` decides equality of automorphisms.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub type Letter = u8;
pub type StateId = u32;
pub type GenId = u16;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("degree must be at least 2, got {0}")]
    DegreeTooSmall(u8),
    #[error("alphabet mismatch: degree {0} vs {1}")]
    AlphabetMismatch(u8, u8),
    #[error("letter {letter} out of range for degree {degree}")]
    LetterOutOfRange { letter: u8, degree: u8 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
}

fn parse_err(line: usize, msg: impl Into<String>) -> TreeError {
    TreeError::Parse { line, msg: msg.into() }
}

/// The tree alphabet: letters are canonically `0..d-1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Alphabet {
    d: u8,
}

impl Alphabet {
    pub fn new(d: u8) -> Result<Self, TreeError> {
        if d < 2 {
            return Err(TreeError::DegreeTooSmall(d));
        }
        Ok(Alphabet { d })
    }

    pub fn degree(&self) -> u8 {
        self.d
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        0..self.d
    }

    /// All vertices of the given length, in lexicographic order.
    pub fn level(&self, n: usize) -> Vec<Vertex> {
        let mut out = vec![Vertex::root()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * self.d as usize);
            for v in &out {
                for c in self.letters() {
                    next.push(v.child(c));
                }
            }
            out = next;
        }
        out
    }
}

/// A vertex of the tree: a finite word over the letters.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Vertex(Vec<Letter>);

impl Vertex {
    pub fn root() -> Self {
        Vertex(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Vertex(letters)
    }

    /// Parses a digit string such as `"0110"`; empty input is the root.
    pub fn parse(s: &str, alphabet: Alphabet) -> Result<Self, TreeError> {
        let mut letters = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let letter = ch
                .to_digit(10)
                .ok_or_else(|| parse_err(0, format!("invalid letter `{ch}` in vertex `{s}`")))?
                as u8;
            if letter >= alphabet.degree() {
                return Err(TreeError::LetterOutOfRange { letter, degree: alphabet.degree() });
            }
            letters.push(letter);
        }
        Ok(Vertex(letters))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, c: Letter) -> Vertex {
        let mut v = self.0.clone();
        v.push(c);
        Vertex(v)
    }

    pub fn concat(&self, other: &Vertex) -> Vertex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Vertex(v)
    }

    pub fn repeat(&self, times: usize) -> Vertex {
        let mut v = Vec::with_capacity(self.0.len() * times);
        for _ in 0..times {
            v.extend_from_slice(&self.0);
        }
        Vertex(v)
    }

    pub fn prefix(&self, n: usize) -> Vertex {
        Vertex(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn suffix(&self, n: usize) -> Vertex {
        Vertex(self.0[self.0.len() - n.min(self.0.len())..].to_vec())
    }

    pub fn slice(&self, from: usize, to: usize) -> Vertex {
        Vertex(self.0[from..to].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

/// An eventually periodic boundary ray `initial · period^ω`, kept in normal
/// form: the period is primitive and the initial segment is as short as
/// possible. Two normalized rays are structurally equal iff they denote the
/// same boundary point.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ray {
    initial: Vertex,
    period: Vertex,
}

impl Ray {
    pub fn new(initial: Vertex, period: Vertex) -> Self {
        assert!(!period.is_empty(), "ray period must be nonempty");
        let mut init = initial.0;
        let mut per = primitive_root(&period.0);
        // Absorb matching trailing letters of the initial segment into the
        // period phase; rotations of a primitive word stay primitive.
        while let Some(&last) = init.last() {
            if last == *per.last().unwrap() {
                init.pop();
                let l = per.pop().unwrap();
                per.insert(0, l);
            } else {
                break;
            }
        }
        Ray { initial: Vertex(init), period: Vertex(per) }
    }

    pub fn initial(&self) -> &Vertex {
        &self.initial
    }

    pub fn period(&self) -> &Vertex {
        &self.period
    }

    /// The length-`n` prefix of the ray.
    pub fn prefix(&self, n: usize) -> Vertex {
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(&self.initial.0[..n.min(self.initial.len())]);
        let mut i = 0;
        while v.len() < n {
            v.push(self.period.0[i % self.period.len()]);
            i += 1;
        }
        Vertex(v)
    }

    pub fn letter_at(&self, i: usize) -> Letter {
        if i < self.initial.len() {
            self.initial.0[i]
        } else {
            self.period.0[(i - self.initial.len()) % self.period.len()]
        }
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^w", self.initial, self.period)
    }
}

impl fmt::Debug for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn primitive_root(word: &[Letter]) -> Vec<Letter> {
    let n = word.len();
    for p in 1..=n {
        if n.is_multiple_of(p) && word.iter().enumerate().all(|(i, &c)| c == word[i % p]) {
            return word[..p].to_vec();
        }
    }
    word.to_vec()
}

/// A tree automorphism with finitely many distinct sections, stored as a
/// finite-state machine. State 0 is always the shared identity state; values
/// are canonical (accessible, bisimulation-minimal, deterministically
/// numbered), so derived equality decides equality of automorphisms and
/// `root == 0` decides triviality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Automorphism {
    d: u8,
    perms: Vec<Vec<Letter>>,
    succs: Vec<Vec<StateId>>,
    root: StateId,
}

impl Automorphism {
    pub fn identity(alphabet: Alphabet) -> Self {
        let d = alphabet.degree();
        Automorphism {
            d,
            perms: vec![(0..d).collect()],
            succs: vec![vec![0; d as usize]],
            root: 0,
        }
    }

    /// Builds a machine from raw state data and canonicalizes it. Successor
    /// id `states.len()` may be used to reference the identity.
    pub fn from_states(
        alphabet: Alphabet,
        states: Vec<(Vec<Letter>, Vec<StateId>)>,
        root: StateId,
    ) -> Result<Self, TreeError> {
        let d = alphabet.degree() as usize;
        let n = states.len();
        for (perm, succ) in &states {
            if perm.len() != d || succ.len() != d {
                return Err(TreeError::AlphabetMismatch(alphabet.degree(), perm.len() as u8));
            }
            let mut seen = vec![false; d];
            for &p in perm {
                if p as usize >= d || seen[p as usize] {
                    return Err(TreeError::LetterOutOfRange { letter: p, degree: alphabet.degree() });
                }
                seen[p as usize] = true;
            }
            for &s in succ {
                if s as usize > n {
                    return Err(parse_err(0, format!("successor state {s} out of range")));
                }
            }
        }
        if root as usize > n {
            return Err(parse_err(0, format!("root state {root} out of range")));
        }
        let (perms, succs): (Vec<_>, Vec<_>) = states.into_iter().unzip();
        Ok(canonicalize(alphabet.degree(), &perms, &succs, root))
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet { d: self.d }
    }

    pub fn degree(&self) -> u8 {
        self.d
    }

    /// Number of states of the canonical machine (the identity state is
    /// always counted, so this is an upper bound for the number of distinct
    /// sections).
    pub fn state_count(&self) -> usize {
        self.perms.len()
    }

    pub fn root_state(&self) -> StateId {
        self.root
    }

    pub fn perm_at(&self, state: StateId, c: Letter) -> Letter {
        self.perms[state as usize][c as usize]
    }

    pub fn succ_at(&self, state: StateId, c: Letter) -> StateId {
        self.succs[state as usize][c as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.root == 0
    }

    /// Canonical minimized form. Public values are already canonical, so this
    /// is the identity on them; it is exposed for raw-machine tooling and as
    /// the second route of the equality cross-check.
    pub fn minimize(&self) -> Automorphism {
        canonicalize(self.d, &self.perms, &self.succs, self.root)
    }

    /// `self` then `other` (right-action convention).
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism, TreeError> {
        if self.d != other.d {
            return Err(TreeError::AlphabetMismatch(self.d, other.d));
        }
        let d = self.d as usize;
        let mut index: HashMap<(StateId, StateId), StateId> = HashMap::new();
        let mut pairs = vec![(self.root, other.root)];
        index.insert((self.root, other.root), 0);
        let mut perms = Vec::new();
        let mut succs = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (s, t) = pairs[i];
            let mut perm = Vec::with_capacity(d);
            let mut succ = Vec::with_capacity(d);
            for c in 0..d as u8 {
                let mid = self.perms[s as usize][c as usize];
                perm.push(other.perms[t as usize][mid as usize]);
                let pair = (self.succs[s as usize][c as usize], other.succs[t as usize][mid as usize]);
                let id = *index.entry(pair).or_insert_with(|| {
                    pairs.push(pair);
                    (pairs.len() - 1) as StateId
                });
                succ.push(id);
            }
            perms.push(perm);
            succs.push(succ);
            i += 1;
        }
        Ok(canonicalize(self.d, &perms, &succs, 0))
    }

    pub fn inverse(&self) -> Automorphism {
        let d = self.d as usize;
        let mut perms = Vec::with_capacity(self.perms.len());
        let mut succs = Vec::with_capacity(self.succs.len());
        for (perm, succ) in self.perms.iter().zip(&self.succs) {
            let mut inv_perm = vec![0u8; d];
            let mut inv_succ = vec![0u32; d];
            for c in 0..d {
                inv_perm[perm[c] as usize] = c as u8;
                inv_succ[perm[c] as usize] = succ[c];
            }
            perms.push(inv_perm);
            succs.push(inv_succ);
        }
        canonicalize(self.d, &perms, &succs, self.root)
    }

    /// The section `self @ v`.
    pub fn section(&self, v: &Vertex) -> Automorphism {
        let state = self.walk_state(v);
        canonicalize(self.d, &self.perms, &self.succs, state)
    }

    /// State reached by walking `v` from the root state; the section at `v`
    /// is trivial iff this is state 0.
    pub fn walk_state(&self, v: &Vertex) -> StateId {
        let mut s = self.root;
        for &c in v.letters() {
            s = self.succs[s as usize][c as usize];
        }
        s
    }

    /// Image of the vertex under the automorphism (length preserving).
    pub fn apply(&self, v: &Vertex) -> Vertex {
        self.apply_from(self.root, v).0
    }

    /// Applies the machine starting at `state`; returns image and end state.
    pub fn apply_from(&self, state: StateId, v: &Vertex) -> (Vertex, StateId) {
        let mut s = state;
        let mut out = Vec::with_capacity(v.len());
        for &c in v.letters() {
            out.push(self.perms[s as usize][c as usize]);
            s = self.succs[s as usize][c as usize];
        }
        (Vertex(out), s)
    }

    /// Image of an eventually periodic ray, in normal form. Walks the machine
    /// along the ray until a state repeats at a period boundary.
    pub fn apply_ray(&self, r: &Ray) -> Ray {
        let (img_init, s0) = self.apply_from(self.root, r.initial());
        let mut seen: HashMap<StateId, usize> = HashMap::new();
        let mut period_imgs: Vec<Vertex> = Vec::new();
        let mut s = s0;
        loop {
            if let Some(&first) = seen.get(&s) {
                let mut initial = img_init.clone();
                for img in &period_imgs[..first] {
                    initial = initial.concat(img);
                }
                let mut period = Vertex::root();
                for img in &period_imgs[first..] {
                    period = period.concat(img);
                }
                return Ray::new(initial, period);
            }
            seen.insert(s, period_imgs.len());
            let (img, next) = self.apply_from(s, r.period());
            period_imgs.push(img);
            s = next;
        }
    }

    /// Equality via the identity test on `self · other⁻¹`; cross-checks the
    /// canonical-form fast path used by `==`.
    pub fn equals_via_inverse(&self, other: &Automorphism) -> Result<bool, TreeError> {
        Ok(self.compose(&other.inverse())?.is_identity())
    }
}

impl fmt::Debug for Automorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Automorphism(d={}, root={})", self.d, self.root)?;
        for (i, (perm, succ)) in self.perms.iter().zip(&self.succs).enumerate() {
            writeln!(f, "  state {i}: perm={perm:?} succ={succ:?}")?;
        }
        Ok(())
    }
}

/// Accessible-prune, bisimulation-collapse and renumber a raw machine.
///
/// A virtual identity state is adjoined before refinement, so every state
/// that acts trivially on its whole subtree collapses into the canonical
/// identity state 0. Remaining states are numbered in BFS order from the
/// root, visiting letters in increasing order; the result depends only on
/// the automorphism, not on the input presentation.
fn canonicalize(d: u8, perms: &[Vec<Letter>], succs: &[Vec<StateId>], root: StateId) -> Automorphism {
    let dl = d as usize;
    let n = perms.len();
    let total = n + 1; // raw states plus virtual identity at index n
    let id_perm: Vec<Letter> = (0..d).collect();
    let perm_of = |s: usize| -> &[Letter] { if s == n { &id_perm } else { &perms[s] } };
    let succ_of = |s: usize, c: usize| -> usize {
        if s == n {
            n
        } else {
            succs[s][c] as usize
        }
    };

    let mut block: Vec<usize> = vec![0; total];
    {
        let mut key_to_block: HashMap<&[Letter], usize> = HashMap::new();
        #[allow(clippy::needless_range_loop)] // s also feeds the virtual-state accessors
        for s in 0..total {
            let next = key_to_block.len();
            let b = *key_to_block.entry(perm_of(s)).or_insert(next);
            block[s] = b;
        }
    }
    loop {
        let mut key_to_block: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut next_block = vec![0; total];
        #[allow(clippy::needless_range_loop)] // s also feeds the virtual-state accessors
        for s in 0..total {
            let key = (block[s], (0..dl).map(|c| block[succ_of(s, c)]).collect::<Vec<_>>());
            let next = key_to_block.len();
            next_block[s] = *key_to_block.entry(key).or_insert(next);
        }
        let stable = key_to_block.len() == block.iter().collect::<std::collections::HashSet<_>>().len()
            && (0..total).all(|s| {
                (0..total).all(|t| (block[s] == block[t]) == (next_block[s] == next_block[t]))
            });
        block = next_block;
        if stable {
            break;
        }
    }

    let id_block = block[n];
    // representative raw state per block
    let mut rep: HashMap<usize, usize> = HashMap::new();
    for (s, &b) in block.iter().enumerate() {
        rep.entry(b).or_insert(s);
    }

    let root_block = block[root as usize];
    let mut new_id: HashMap<usize, StateId> = HashMap::new();
    new_id.insert(id_block, 0);
    let mut order: Vec<usize> = vec![id_block];
    if root_block != id_block {
        let mut queue = VecDeque::new();
        new_id.insert(root_block, 1);
        order.push(root_block);
        queue.push_back(root_block);
        while let Some(b) = queue.pop_front() {
            let s = rep[&b];
            for c in 0..dl {
                let nb = block[succ_of(s, c)];
                if let std::collections::hash_map::Entry::Vacant(e) = new_id.entry(nb) {
                    e.insert(order.len() as StateId);
                    order.push(nb);
                    queue.push_back(nb);
                }
            }
        }
    }

    let mut out_perms = Vec::with_capacity(order.len());
    let mut out_succs = Vec::with_capacity(order.len());
    for &b in &order {
        let s = rep[&b];
        out_perms.push(perm_of(s).to_vec());
        out_succs.push((0..dl).map(|c| new_id[&block[succ_of(s, c)]]).collect());
    }
    Automorphism { d, perms: out_perms, succs: out_succs, root: new_id[&root_block] }
}

/// A word over the generator alphabet of a [`GeneratingSet`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct Word(pub Vec<GenId>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

/// A named set of generators over a common alphabet. The declaration order
/// of the names is the canonical order of the word alphabet X.
#[derive(Clone)]
pub struct GeneratingSet {
    alphabet: Alphabet,
    names: Vec<String>,
    machines: Vec<Automorphism>,
    index: HashMap<String, GenId>,
}

impl GeneratingSet {
    pub fn new(alphabet: Alphabet) -> Self {
        GeneratingSet { alphabet, names: Vec::new(), machines: Vec::new(), index: HashMap::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, machine: Automorphism) -> Result<GenId, TreeError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(TreeError::DuplicateGenerator(name));
        }
        if machine.degree() != self.alphabet.degree() {
            return Err(TreeError::AlphabetMismatch(self.alphabet.degree(), machine.degree()));
        }
        let id = self.names.len() as GenId;
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.machines.push(machine);
        Ok(id)
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: GenId) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn machine(&self, id: GenId) -> &Automorphism {
        &self.machines[id as usize]
    }

    pub fn id_of(&self, name: &str) -> Option<GenId> {
        self.index.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = GenId> {
        0..self.names.len() as GenId
    }

    /// True iff for every generator the set contains an element equal to its
    /// inverse.
    pub fn is_symmetric(&self) -> bool {
        self.machines.iter().all(|m| {
            let inv = m.inverse();
            self.machines.contains(&inv)
        })
    }

    /// Id of some generator whose machine equals the inverse of `id`.
    pub fn inverse_of(&self, id: GenId) -> Option<GenId> {
        let inv = self.machines[id as usize].inverse();
        self.machines.iter().position(|m| *m == inv).map(|i| i as GenId)
    }

    /// Adds `name^-1` generators for every generator whose inverse is not
    /// already present.
    pub fn symmetrized(&self) -> GeneratingSet {
        let mut out = self.clone();
        for id in self.ids() {
            if out.inverse_of(id).is_none() {
                let name = format!("{}^-1", self.name(id));
                let inv = self.machine(id).inverse();
                out.add(name, inv).expect("inverse names are fresh");
            }
        }
        out
    }

    /// Projection of a word to the group: the minimized product machine.
    pub fn word_automorphism(&self, w: &Word) -> Automorphism {
        let mut acc = Automorphism::identity(self.alphabet);
        for &g in &w.0 {
            acc = acc
                .compose(&self.machines[g as usize])
                .expect("generators share one alphabet");
        }
        acc
    }

    /// Parses a word: whitespace-separated generator names, or a bare string
    /// of single-character names when that is unambiguous.
    pub fn parse_word(&self, s: &str) -> Result<Word, TreeError> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        if s.split_whitespace().count() > 1 {
            let mut ids = Vec::new();
            for tok in s.split_whitespace() {
                ids.push(self.id_of(tok).ok_or_else(|| TreeError::UnknownGenerator(tok.to_string()))?);
            }
            return Ok(Word(ids));
        }
        if let Some(id) = self.id_of(s) {
            return Ok(Word(vec![id]));
        }
        let mut ids = Vec::new();
        for ch in s.chars() {
            let tok = ch.to_string();
            ids.push(self.id_of(&tok).ok_or_else(|| TreeError::UnknownGenerator(tok.clone()))?);
        }
        Ok(Word(ids))
    }

    /// Renders a word: names concatenated when all are single characters,
    /// space-separated otherwise.
    pub fn format_word(&self, w: &Word) -> String {
        if self.names.iter().all(|n| n.chars().count() == 1) {
            w.0.iter().map(|&g| self.name(g)).collect()
        } else {
            w.0.iter().map(|&g| self.name(g)).collect::<Vec<_>>().join(" ")
        }
    }
}

impl fmt::Debug for GeneratingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneratingSet(d={}, gens={:?})", self.alphabet.degree(), self.names)
    }
}

/// Parses the line-oriented group definition format:
///
/// ```text
/// # comment
/// alphabet 2
/// gen a perm=1,0 sections=1,1
/// gen b perm=0,1 sections=a,b
/// state q perm=... sections=...   # auxiliary, not a generator
/// ```
///
/// Section entries name a `gen`/`state` line or `1` for the identity.
pub fn parse_group_file(text: &str) -> Result<GeneratingSet, TreeError> {
    struct RawState {
        line: usize,
        perm: Vec<u8>,
        sections: Vec<String>,
        is_gen: bool,
        name: String,
    }

    let mut alphabet: Option<(Alphabet, usize)> = None;
    let mut raw: Vec<RawState> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap();
        match head {
            "alphabet" => {
                if alphabet.is_some() {
                    return Err(parse_err(line_no, "duplicate alphabet line"));
                }
                let d: u8 = parts
                    .next()
                    .ok_or_else(|| parse_err(line_no, "alphabet needs a degree"))?
                    .parse()
                    .map_err(|_| parse_err(line_no, "alphabet degree must be an integer"))?;
                if parts.next().is_some() {
                    return Err(parse_err(line_no, "trailing tokens after alphabet degree"));
                }
                let a = Alphabet::new(d).map_err(|e| parse_err(line_no, e.to_string()))?;
                alphabet = Some((a, line_no));
            }
            "gen" | "state" => {
                let (a, _) = alphabet
                    .ok_or_else(|| parse_err(line_no, "alphabet line must come first"))?;
                let d = a.degree() as usize;
                let name = parts
                    .next()
                    .ok_or_else(|| parse_err(line_no, format!("{head} needs a name")))?
                    .to_string();
                if name == "1" || name.contains("^-1") {
                    return Err(parse_err(line_no, format!("name `{name}` is reserved")));
                }
                if !name.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false)
                    || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    return Err(parse_err(line_no, format!("`{name}` is not an ASCII identifier")));
                }
                if by_name.contains_key(&name) {
                    return Err(parse_err(line_no, format!("duplicate state name `{name}`")));
                }
                let mut perm: Option<Vec<u8>> = None;
                let mut sections: Option<Vec<String>> = None;
                for tok in parts {
                    if let Some(rest) = tok.strip_prefix("perm=") {
                        let vals: Result<Vec<u8>, _> = rest.split(',').map(|t| t.parse()).collect();
                        perm = Some(vals.map_err(|_| parse_err(line_no, "perm entries must be letters"))?);
                    } else if let Some(rest) = tok.strip_prefix("sections=") {
                        sections = Some(rest.split(',').map(|t| t.to_string()).collect());
                    } else {
                        return Err(parse_err(line_no, format!("unexpected token `{tok}`")));
                    }
                }
                let perm = perm.ok_or_else(|| parse_err(line_no, "missing perm="))?;
                let sections = sections.ok_or_else(|| parse_err(line_no, "missing sections="))?;
                if perm.len() != d || sections.len() != d {
                    return Err(parse_err(
                        line_no,
                        format!("expected {d} perm entries and {d} sections"),
                    ));
                }
                let mut seen = vec![false; d];
                for &p in &perm {
                    if p as usize >= d || seen[p as usize] {
                        return Err(parse_err(line_no, "perm is not a permutation of the letters"));
                    }
                    seen[p as usize] = true;
                }
                by_name.insert(name.clone(), raw.len());
                raw.push(RawState { line: line_no, perm, sections, is_gen: head == "gen", name });
            }
            _ => return Err(parse_err(line_no, format!("unknown directive `{head}`"))),
        }
    }

    let (alphabet, _) = alphabet.ok_or_else(|| parse_err(0, "missing alphabet line"))?;
    let identity_id = raw.len() as StateId;
    let mut states = Vec::with_capacity(raw.len());
    for st in &raw {
        let mut succ = Vec::with_capacity(st.sections.len());
        for sec in &st.sections {
            if sec == "1" {
                succ.push(identity_id);
            } else {
                let &i = by_name
                    .get(sec)
                    .ok_or_else(|| parse_err(st.line, format!("unknown section state `{sec}`")))?;
                succ.push(i as StateId);
            }
        }
        states.push((st.perm.clone(), succ));
    }

    let mut gens = GeneratingSet::new(alphabet);
    for (i, st) in raw.iter().enumerate() {
        if st.is_gen {
            let machine = Automorphism::from_states(alphabet, states.clone(), i as StateId)?;
            gens.add(st.name.clone(), machine)?;
        }
    }
    if gens.is_empty() {
        return Err(parse_err(0, "no generators defined"));
    }
    Ok(gens)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const DIHEDRAL: &str = "\
alphabet 2
gen a perm=1,0 sections=1,1
gen b perm=0,1 sections=a,b
";

    pub const IMG_Z2I: &str = "\
alphabet 2
gen a perm=0,1 sections=b,c
gen b perm=1,0 sections=1,1
gen c perm=0,1 sections=a,1
";

    pub fn dihedral() -> GeneratingSet {
        parse_group_file(DIHEDRAL).unwrap()
    }

    pub fn img_z2i() -> GeneratingSet {
        parse_group_file(IMG_Z2I).unwrap()
    }
}

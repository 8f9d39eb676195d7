//! Finite automata over u32 symbol ids: construction (word sets, regexes,
//! programmatic builders), bounded enumeration, determinization with a size
//! cap, and language equivalence.
//!
//! The ids are opaque here; callers attach meaning (grammar symbols, table
//! names, generator letters) through their own symbol tables.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

pub type Sym = u32;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("determinization exceeded the state cap {cap} (reached {reached})")]
    DeterminizationCap { cap: usize, reached: usize },
    #[error("enumeration exceeded the word cap {0}")]
    EnumerationCap(usize),
    #[error("regex parse error at token {at}: {msg}")]
    Regex { at: usize, msg: String },
}

/// Nondeterministic finite automaton without epsilon transitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    n_states: u32,
    initial: u32,
    accept: Vec<bool>,
    /// outgoing edges per state, sorted by (symbol, target)
    edges: Vec<Vec<(Sym, u32)>>,
}

impl Nfa {
    /// The empty language.
    pub fn empty() -> Nfa {
        Nfa { n_states: 1, initial: 0, accept: vec![false], edges: vec![Vec::new()] }
    }

    /// Assembles an automaton from raw parts; edge rows are normalized.
    pub fn from_parts(initial: u32, accept: Vec<bool>, mut edges: Vec<Vec<(Sym, u32)>>) -> Nfa {
        assert_eq!(accept.len(), edges.len());
        assert!((initial as usize) < accept.len());
        for row in &mut edges {
            row.sort_unstable();
            row.dedup();
        }
        Nfa { n_states: accept.len() as u32, initial, accept, edges }
    }

    /// The language containing exactly the given words.
    pub fn from_words<I, W>(words: I) -> Nfa
    where
        I: IntoIterator<Item = W>,
        W: AsRef<[Sym]>,
    {
        let mut b = NfaBuilder::new();
        let init = b.state();
        for w in words {
            let mut cur = init;
            for &s in w.as_ref() {
                let next = b.state();
                b.edge(cur, s, next);
                cur = next;
            }
            b.accept(cur);
        }
        b.build(init)
    }

    pub fn n_states(&self) -> usize {
        self.n_states as usize
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn is_accepting(&self, s: u32) -> bool {
        self.accept[s as usize]
    }

    pub fn edges_from(&self, s: u32) -> &[(Sym, u32)] {
        &self.edges[s as usize]
    }

    pub fn accepts(&self, word: &[Sym]) -> bool {
        let mut cur: BTreeSet<u32> = BTreeSet::new();
        cur.insert(self.initial);
        for &s in word {
            let mut next = BTreeSet::new();
            for &q in &cur {
                for &(sym, t) in &self.edges[q as usize] {
                    if sym == s {
                        next.insert(t);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            cur = next;
        }
        cur.iter().any(|&q| self.accept[q as usize])
    }

    pub fn accepts_empty_word(&self) -> bool {
        self.accept[self.initial as usize]
    }

    /// True iff the language is empty (no accepting state reachable).
    pub fn is_empty_language(&self) -> bool {
        let mut seen = vec![false; self.n_states()];
        let mut stack = vec![self.initial];
        seen[self.initial as usize] = true;
        while let Some(q) = stack.pop() {
            if self.accept[q as usize] {
                return false;
            }
            for &(_, t) in &self.edges[q as usize] {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    stack.push(t);
                }
            }
        }
        true
    }

    /// All accepted words `w` with `Σ weight(w_i) <= budget`, sorted. Symbols
    /// may weigh zero; `word_cap` guards against zero-weight cycles.
    pub fn enumerate_weighted(
        &self,
        weight: &dyn Fn(Sym) -> Option<usize>,
        budget: usize,
        word_cap: usize,
    ) -> Result<BTreeSet<Vec<Sym>>, AutomatonError> {
        let mut out = BTreeSet::new();
        // DFS over (state, word, used); dedup via visited multiset is not
        // possible in general, so we rely on the cap for pathological inputs.
        let mut stack: Vec<(u32, Vec<Sym>, usize)> = vec![(self.initial, Vec::new(), 0)];
        let mut visited: BTreeSet<(u32, Vec<Sym>)> = BTreeSet::new();
        while let Some((q, w, used)) = stack.pop() {
            if !visited.insert((q, w.clone())) {
                continue;
            }
            if self.accept[q as usize] {
                out.insert(w.clone());
                if out.len() > word_cap {
                    return Err(AutomatonError::EnumerationCap(word_cap));
                }
            }
            for &(sym, t) in &self.edges[q as usize] {
                if let Some(wt) = weight(sym) {
                    if used + wt <= budget {
                        let mut w2 = w.clone();
                        w2.push(sym);
                        stack.push((t, w2, used + wt));
                    }
                }
            }
            if visited.len() > word_cap.saturating_mul(64) + 4096 {
                return Err(AutomatonError::EnumerationCap(word_cap));
            }
        }
        Ok(out)
    }

    /// All accepted words of length at most `max_len`.
    pub fn enumerate_by_length(
        &self,
        max_len: usize,
        word_cap: usize,
    ) -> Result<BTreeSet<Vec<Sym>>, AutomatonError> {
        self.enumerate_weighted(&|_| Some(1), max_len, word_cap)
    }

    /// Least total weight of an accepted word, or `None` for the empty
    /// language. Dijkstra over states.
    pub fn shortest_weight(&self, weight: &dyn Fn(Sym) -> Option<usize>) -> Option<usize> {
        let n = self.n_states();
        let mut dist = vec![usize::MAX; n];
        dist[self.initial as usize] = 0;
        let mut heap = std::collections::BinaryHeap::new();
        heap.push(std::cmp::Reverse((0usize, self.initial)));
        while let Some(std::cmp::Reverse((d, q))) = heap.pop() {
            if d > dist[q as usize] {
                continue;
            }
            for &(sym, t) in &self.edges[q as usize] {
                if let Some(wt) = weight(sym) {
                    let nd = d.saturating_add(wt);
                    if nd < dist[t as usize] {
                        dist[t as usize] = nd;
                        heap.push(std::cmp::Reverse((nd, t)));
                    }
                }
            }
        }
        (0..n).filter(|&q| self.accept[q]).map(|q| dist[q]).min().filter(|&d| d != usize::MAX)
    }

    /// Subset construction. Fails if more than `cap` subset states appear.
    pub fn determinize(&self, cap: usize) -> Result<Dfa, AutomatonError> {
        let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
        let start: Vec<u32> = vec![self.initial];
        index.insert(start.clone(), 0);
        let mut subsets = vec![start];
        let mut accept = Vec::new();
        let mut edges: Vec<BTreeMap<Sym, u32>> = Vec::new();
        let mut i = 0;
        while i < subsets.len() {
            let subset = subsets[i].clone();
            accept.push(subset.iter().any(|&q| self.accept[q as usize]));
            let mut by_sym: BTreeMap<Sym, BTreeSet<u32>> = BTreeMap::new();
            for &q in &subset {
                for &(sym, t) in &self.edges[q as usize] {
                    by_sym.entry(sym).or_default().insert(t);
                }
            }
            let mut row = BTreeMap::new();
            for (sym, set) in by_sym {
                let key: Vec<u32> = set.into_iter().collect();
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = subsets.len() as u32;
                        if subsets.len() >= cap {
                            return Err(AutomatonError::DeterminizationCap {
                                cap,
                                reached: subsets.len() + 1,
                            });
                        }
                        index.insert(key.clone(), id);
                        subsets.push(key);
                        id
                    }
                };
                row.insert(sym, id);
            }
            edges.push(row);
            i += 1;
        }
        Ok(Dfa { accept, edges })
    }

    /// Language equality, via breadth-first product of the determinized
    /// automata (partial transitions compared against an implicit sink).
    pub fn equivalent(&self, other: &Nfa, cap: usize) -> Result<bool, AutomatonError> {
        let a = self.determinize(cap)?;
        let b = other.determinize(cap)?;
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        queue.push_back((Some(0u32), Some(0u32)));
        seen.insert((Some(0u32), Some(0u32)));
        while let Some((x, y)) = queue.pop_front() {
            let ax = x.map(|q| a.accept[q as usize]).unwrap_or(false);
            let ay = y.map(|q| b.accept[q as usize]).unwrap_or(false);
            if ax != ay {
                return Ok(false);
            }
            let mut syms: BTreeSet<Sym> = BTreeSet::new();
            if let Some(q) = x {
                syms.extend(a.edges[q as usize].keys());
            }
            if let Some(q) = y {
                syms.extend(b.edges[q as usize].keys());
            }
            for sym in syms {
                let nx = x.and_then(|q| a.edges[q as usize].get(&sym).copied());
                let ny = y.and_then(|q| b.edges[q as usize].get(&sym).copied());
                if ((nx.is_none() && ny.is_none()) || seen.insert((nx, ny)))
                    && (nx.is_some() || ny.is_some())
                {
                    queue.push_back((nx, ny));
                }
            }
        }
        Ok(true)
    }

    /// The set of symbols appearing on any edge.
    pub fn symbols(&self) -> BTreeSet<Sym> {
        self.edges.iter().flatten().map(|&(s, _)| s).collect()
    }

    /// Applies a map to every edge symbol.
    pub fn map_symbols(&self, f: &dyn Fn(Sym) -> Sym) -> Nfa {
        Nfa {
            n_states: self.n_states,
            initial: self.initial,
            accept: self.accept.clone(),
            edges: self
                .edges
                .iter()
                .map(|row| {
                    let mut r: Vec<(Sym, u32)> = row.iter().map(|&(s, t)| (f(s), t)).collect();
                    r.sort_unstable();
                    r.dedup();
                    r
                })
                .collect(),
        }
    }
}

/// Deterministic automaton produced by subset construction; state 0 initial.
#[derive(Clone, Debug)]
pub struct Dfa {
    pub accept: Vec<bool>,
    pub edges: Vec<BTreeMap<Sym, u32>>,
}

/// Incremental NFA constructor; supports epsilon edges which are eliminated
/// at `build`.
#[derive(Clone, Debug, Default)]
pub struct NfaBuilder {
    accept: Vec<bool>,
    edges: Vec<Vec<(Sym, u32)>>,
    eps: Vec<Vec<u32>>,
}

impl NfaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> u32 {
        self.accept.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.accept.is_empty()
    }

    pub fn state(&mut self) -> u32 {
        self.accept.push(false);
        self.edges.push(Vec::new());
        self.eps.push(Vec::new());
        (self.accept.len() - 1) as u32
    }

    /// Copies another automaton into this builder; returns the state offset.
    pub fn embed(&mut self, nfa: &Nfa) -> u32 {
        let offset = self.len();
        for _ in 0..nfa.n_states() {
            self.state();
        }
        for s in 0..nfa.n_states() as u32 {
            for &(sym, t) in nfa.edges_from(s) {
                self.edge(offset + s, sym, offset + t);
            }
            if nfa.is_accepting(s) {
                self.accept(offset + s);
            }
        }
        offset
    }

    pub fn accept(&mut self, s: u32) {
        self.accept[s as usize] = true;
    }

    pub fn edge(&mut self, from: u32, sym: Sym, to: u32) {
        self.edges[from as usize].push((sym, to));
    }

    /// Adds a path spelling `word` from `from` to `to` (epsilon if empty).
    pub fn word_edge(&mut self, from: u32, word: &[Sym], to: u32) {
        if word.is_empty() {
            self.eps_edge(from, to);
            return;
        }
        let mut cur = from;
        for (i, &s) in word.iter().enumerate() {
            let next = if i + 1 == word.len() { to } else { self.state() };
            self.edge(cur, s, next);
            cur = next;
        }
    }

    pub fn eps_edge(&mut self, from: u32, to: u32) {
        self.eps[from as usize].push(to);
    }

    /// Epsilon closure elimination and edge normalization.
    pub fn build(mut self, initial: u32) -> Nfa {
        let n = self.accept.len();
        if self.eps.iter().all(|e| e.is_empty()) {
            for row in &mut self.edges {
                row.sort_unstable();
                row.dedup();
            }
            return Nfa { n_states: n as u32, initial, accept: self.accept, edges: self.edges };
        }
        // transitive closure of epsilon edges, per state
        let mut closure: Vec<BTreeSet<u32>> = Vec::with_capacity(n);
        for s in 0..n as u32 {
            let mut seen = BTreeSet::new();
            let mut stack = vec![s];
            seen.insert(s);
            while let Some(q) = stack.pop() {
                for &t in &self.eps[q as usize] {
                    if seen.insert(t) {
                        stack.push(t);
                    }
                }
            }
            closure.push(seen);
        }
        let mut accept = vec![false; n];
        let mut edges: Vec<Vec<(Sym, u32)>> = vec![Vec::new(); n];
        for s in 0..n {
            for &q in &closure[s] {
                if self.accept[q as usize] {
                    accept[s] = true;
                }
                for &(sym, t) in &self.edges[q as usize] {
                    edges[s].push((sym, t));
                }
            }
        }
        for row in &mut edges {
            row.sort_unstable();
            row.dedup();
        }
        self.eps.clear();
        Nfa { n_states: n as u32, initial, accept, edges }
    }
}

/// Tokens of the tiny regex language used for rational controls and table
/// productions: identifiers, `(`, `)`, `|`, `*`, `eps`, `empty`.
#[derive(Clone, Debug, PartialEq)]
enum RegexToken {
    Ident(String),
    LParen,
    RParen,
    Pipe,
    Star,
    Eps,
    Empty,
}

fn tokenize_regex(input: &str) -> Vec<RegexToken> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<RegexToken>| {
        if !cur.is_empty() {
            out.push(match cur.as_str() {
                "eps" => RegexToken::Eps,
                "empty" => RegexToken::Empty,
                _ => RegexToken::Ident(std::mem::take(cur)),
            });
            cur.clear();
        }
    };
    for ch in input.chars() {
        match ch {
            '(' | ')' | '|' | '*' => {
                flush(&mut cur, &mut out);
                out.push(match ch {
                    '(' => RegexToken::LParen,
                    ')' => RegexToken::RParen,
                    '|' => RegexToken::Pipe,
                    _ => RegexToken::Star,
                });
            }
            c if c.is_whitespace() => flush(&mut cur, &mut out),
            c => cur.push(c),
        }
    }
    flush(&mut cur, &mut out);
    out
}

/// Parses a regex over named symbols into an NFA; `resolve` maps identifiers
/// to symbol ids.
pub fn regex_to_nfa(
    input: &str,
    resolve: &dyn Fn(&str) -> Option<Sym>,
) -> Result<Nfa, AutomatonError> {
    let tokens = tokenize_regex(input);
    let mut b = NfaBuilder::new();
    let mut pos = 0usize;
    let (start, end) = parse_alt(&tokens, &mut pos, &mut b, resolve)?;
    if pos != tokens.len() {
        return Err(AutomatonError::Regex { at: pos, msg: "trailing tokens".into() });
    }
    b.accept(end);
    Ok(b.build(start))
}

type Frag = (u32, u32);

fn parse_alt(
    tokens: &[RegexToken],
    pos: &mut usize,
    b: &mut NfaBuilder,
    resolve: &dyn Fn(&str) -> Option<Sym>,
) -> Result<Frag, AutomatonError> {
    let first = parse_cat(tokens, pos, b, resolve)?;
    let mut branches = vec![first];
    while *pos < tokens.len() && tokens[*pos] == RegexToken::Pipe {
        *pos += 1;
        branches.push(parse_cat(tokens, pos, b, resolve)?);
    }
    if branches.len() == 1 {
        return Ok(branches.pop().unwrap());
    }
    let start = b.state();
    let end = b.state();
    for (s, e) in branches {
        b.eps_edge(start, s);
        b.eps_edge(e, end);
    }
    Ok((start, end))
}

fn parse_cat(
    tokens: &[RegexToken],
    pos: &mut usize,
    b: &mut NfaBuilder,
    resolve: &dyn Fn(&str) -> Option<Sym>,
) -> Result<Frag, AutomatonError> {
    let mut frags: Vec<Frag> = Vec::new();
    while let Some(
        RegexToken::Ident(_) | RegexToken::LParen | RegexToken::Eps | RegexToken::Empty,
    ) = tokens.get(*pos)
    {
        frags.push(parse_rep(tokens, pos, b, resolve)?);
    }
    if frags.is_empty() {
        // empty concatenation = epsilon
        let s = b.state();
        return Ok((s, s));
    }
    let mut iter = frags.into_iter();
    let (start, mut end) = iter.next().unwrap();
    for (s, e) in iter {
        b.eps_edge(end, s);
        end = e;
    }
    Ok((start, end))
}

fn parse_rep(
    tokens: &[RegexToken],
    pos: &mut usize,
    b: &mut NfaBuilder,
    resolve: &dyn Fn(&str) -> Option<Sym>,
) -> Result<Frag, AutomatonError> {
    let (start, end) = parse_atom(tokens, pos, b, resolve)?;
    if tokens.get(*pos) == Some(&RegexToken::Star) {
        *pos += 1;
        let s = b.state();
        b.eps_edge(s, start);
        b.eps_edge(end, s);
        return Ok((s, s));
    }
    Ok((start, end))
}

fn parse_atom(
    tokens: &[RegexToken],
    pos: &mut usize,
    b: &mut NfaBuilder,
    resolve: &dyn Fn(&str) -> Option<Sym>,
) -> Result<Frag, AutomatonError> {
    match tokens.get(*pos) {
        Some(RegexToken::Ident(name)) => {
            let sym = resolve(name).ok_or_else(|| AutomatonError::Regex {
                at: *pos,
                msg: format!("unknown symbol `{name}`"),
            })?;
            *pos += 1;
            let s = b.state();
            let e = b.state();
            b.edge(s, sym, e);
            Ok((s, e))
        }
        Some(RegexToken::Eps) => {
            *pos += 1;
            let s = b.state();
            Ok((s, s))
        }
        Some(RegexToken::Empty) => {
            *pos += 1;
            // a fragment that can never be completed
            let s = b.state();
            let e = b.state();
            Ok((s, e))
        }
        Some(RegexToken::LParen) => {
            *pos += 1;
            let frag = parse_alt(tokens, pos, b, resolve)?;
            if tokens.get(*pos) != Some(&RegexToken::RParen) {
                return Err(AutomatonError::Regex { at: *pos, msg: "expected `)`".into() });
            }
            *pos += 1;
            Ok(frag)
        }
        other => Err(AutomatonError::Regex { at: *pos, msg: format!("unexpected token {other:?}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_abc(name: &str) -> Option<Sym> {
        match name {
            "a" => Some(0),
            "b" => Some(1),
            "c" => Some(2),
            _ => None,
        }
    }

    #[test]
    fn word_set_construction_and_acceptance() {
        let nfa = Nfa::from_words([vec![0u32, 1], vec![1]]);
        assert!(nfa.accepts(&[0, 1]));
        assert!(nfa.accepts(&[1]));
        assert!(!nfa.accepts(&[0]));
        assert!(!nfa.accepts(&[]));
        assert!(!nfa.is_empty_language());
        assert!(Nfa::empty().is_empty_language());
    }

    #[test]
    fn regex_basics() {
        let star = regex_to_nfa("a*", &resolve_abc).unwrap();
        assert!(star.accepts(&[]));
        assert!(star.accepts(&[0, 0, 0]));
        assert!(!star.accepts(&[1]));

        let control = regex_to_nfa("a b* c", &resolve_abc).unwrap();
        assert!(control.accepts(&[0, 2]));
        assert!(control.accepts(&[0, 1, 1, 2]));
        assert!(!control.accepts(&[0, 1]));

        let alt = regex_to_nfa("(a | b c)*", &resolve_abc).unwrap();
        assert!(alt.accepts(&[]));
        assert!(alt.accepts(&[0, 1, 2, 0]));
        assert!(!alt.accepts(&[1]));

        let eps = regex_to_nfa("eps | a", &resolve_abc).unwrap();
        assert!(eps.accepts(&[]));
        assert!(eps.accepts(&[0]));

        let empty = regex_to_nfa("empty", &resolve_abc).unwrap();
        assert!(empty.is_empty_language());

        assert!(regex_to_nfa("a d", &resolve_abc).is_err());
        assert!(regex_to_nfa("a )", &resolve_abc).is_err());
    }

    #[test]
    fn enumeration_by_length_and_weight() {
        let nfa = regex_to_nfa("(a b | b)*", &resolve_abc).unwrap();
        let words = nfa.enumerate_by_length(3, 1024).unwrap();
        let counts: Vec<usize> =
            (0..=3).map(|l| words.iter().filter(|w| w.len() == l).count()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3]);

        // a zero-weight loop admits unboundedly many words in budget: the cap
        // must fire instead of looping forever
        let res = nfa.enumerate_weighted(&|s| Some(if s == 1 { 0 } else { 1 }), 1, 64);
        assert!(matches!(res, Err(AutomatonError::EnumerationCap(_))));

        // zero weights without cycles stay exact
        let fin = Nfa::from_words([vec![0u32, 1], vec![1, 1]]);
        let weighted = fin.enumerate_weighted(&|s| Some(if s == 1 { 0 } else { 1 }), 0, 64).unwrap();
        assert_eq!(weighted, BTreeSet::from([vec![1, 1]]));
    }

    #[test]
    fn shortest_weight_dijkstra() {
        let nfa = regex_to_nfa("a a a | b c", &resolve_abc).unwrap();
        assert_eq!(nfa.shortest_weight(&|_| Some(1)), Some(2));
        assert_eq!(nfa.shortest_weight(&|s| if s == 1 { None } else { Some(1) }), Some(3));
        assert_eq!(Nfa::empty().shortest_weight(&|_| Some(1)), None);
    }

    #[test]
    fn determinize_counts_words_not_paths() {
        // ambiguous NFA for a: two parallel paths
        let nfa = regex_to_nfa("a | a", &resolve_abc).unwrap();
        let dfa = nfa.determinize(64).unwrap();
        // one accepting path for "a"
        let mut q = 0u32;
        q = dfa.edges[q as usize][&0];
        assert!(dfa.accept[q as usize]);
        assert_eq!(dfa.edges[q as usize].get(&0), None);
    }

    #[test]
    fn equivalence_check() {
        let x = regex_to_nfa("a b* c", &resolve_abc).unwrap();
        let y = regex_to_nfa("a c | a b b* c", &resolve_abc).unwrap();
        assert!(x.equivalent(&y, 256).unwrap());
        let z = regex_to_nfa("a b* c | b", &resolve_abc).unwrap();
        assert!(!x.equivalent(&z, 256).unwrap());
    }
}

//! ET0L grammars: tables as regular-language-valued maps, rational control,
//! bounded generation, derivation counting, and the limiting-grammar
//! machinery with its validators.
//!
//! Tables store automata, never materialized word sets; languages are sliced
//! against length or yield budgets on demand. Word sets are returned in
//! deterministic (length, lexicographic) order.

pub mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::automaton::{AutomatonError, Nfa, Sym};

#[derive(Debug, Error)]
pub enum Et0lError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("grammar is not limiting: {0}")]
    NotLimiting(String),
    #[error("limiting property violated: word `{word}` generated at round {present} vanishes at round {absent}")]
    NonLimitingDetected { word: String, present: usize, absent: usize },
    #[error("no stabilization within {0} rounds")]
    RoundCapExceeded(usize),
    #[error("{what} exceeded cap {cap}")]
    CapExceeded { what: &'static str, cap: usize },
}

/// Terminals and nonterminals over a shared id space; insertion order is the
/// canonical total order used for deterministic output.
#[derive(Clone, Debug, Default)]
pub struct SymbolSpace {
    names: Vec<String>,
    terminal: Vec<bool>,
    index: HashMap<String, Sym>,
}

impl SymbolSpace {
    pub fn new() -> Self {
        Self::default()
    }

    fn add(&mut self, name: &str, terminal: bool) -> Sym {
        if let Some(&id) = self.index.get(name) {
            assert_eq!(self.terminal[id as usize], terminal, "symbol `{name}` changed kind");
            return id;
        }
        let id = self.names.len() as Sym;
        self.names.push(name.to_string());
        self.terminal.push(terminal);
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn add_terminal(&mut self, name: &str) -> Sym {
        self.add(name, true)
    }

    pub fn add_nonterminal(&mut self, name: &str) -> Sym {
        self.add(name, false)
    }

    pub fn id_of(&self, name: &str) -> Option<Sym> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: Sym) -> &str {
        &self.names[id as usize]
    }

    pub fn is_terminal(&self, id: Sym) -> bool {
        self.terminal[id as usize]
    }

    pub fn count(&self) -> usize {
        self.names.len()
    }

    pub fn terminals(&self) -> impl Iterator<Item = Sym> + '_ {
        (0..self.count() as Sym).filter(|&s| self.terminal[s as usize])
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = Sym> + '_ {
        (0..self.count() as Sym).filter(|&s| !self.terminal[s as usize])
    }

    pub fn render_word(&self, w: &[Sym]) -> String {
        if w.is_empty() {
            return String::new();
        }
        let each_single = w.iter().all(|&s| self.name(s).chars().count() == 1);
        if each_single {
            w.iter().map(|&s| self.name(s)).collect()
        } else {
            w.iter().map(|&s| self.name(s)).collect::<Vec<_>>().join(" ")
        }
    }
}

/// A table: a map from nonterminals to regular languages over the full symbol
/// alphabet. Unmapped symbols (and all terminals) are fixed, `τ(s) = {s}`.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    productions: BTreeMap<Sym, Nfa>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Table { name: name.into(), productions: BTreeMap::new() }
    }

    pub fn set(&mut self, symbol: Sym, language: Nfa) {
        self.productions.insert(symbol, language);
    }

    pub fn explicit(&self, symbol: Sym) -> Option<&Nfa> {
        self.productions.get(&symbol)
    }

    pub fn mapped_symbols(&self) -> impl Iterator<Item = Sym> + '_ {
        self.productions.keys().copied()
    }

    /// The language τ(symbol), materializing the `{symbol}` default.
    pub fn language(&self, symbol: Sym) -> Nfa {
        self.language_ref(symbol).into_owned()
    }

    /// As [`Table::language`], without cloning stored automata.
    pub fn language_ref(&self, symbol: Sym) -> std::borrow::Cow<'_, Nfa> {
        match self.productions.get(&symbol) {
            Some(nfa) => std::borrow::Cow::Borrowed(nfa),
            None => std::borrow::Cow::Owned(Nfa::from_words([[symbol]])),
        }
    }
}

/// An ET0L grammar with rational control.
#[derive(Clone, Debug)]
pub struct Et0lGrammar {
    pub symbols: SymbolSpace,
    pub tables: Vec<Table>,
    /// control automaton over table indices
    pub control: Nfa,
    /// the control as written, for display and round-tripping
    pub control_expr: String,
    pub start: Sym,
}

impl Et0lGrammar {
    pub fn table_id(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }
}

const WORD_CAP: usize = 200_000;
const FORM_CAP: usize = 200_000;

fn sort_words(set: BTreeSet<Vec<Sym>>) -> Vec<Vec<Sym>> {
    let mut v: Vec<Vec<Sym>> = set.into_iter().collect();
    v.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    v
}

/// All words reachable from `w` in one application of the table, up to
/// length `len_cap`: the positionwise product of the per-symbol languages.
pub fn apply_table(
    w: &[Sym],
    table: &Table,
    len_cap: usize,
) -> Result<BTreeSet<Vec<Sym>>, Et0lError> {
    let mut per_position: Vec<Vec<Vec<Sym>>> = Vec::with_capacity(w.len());
    for &s in w {
        let words = table.language_ref(s).enumerate_by_length(len_cap, WORD_CAP)?;
        per_position.push(words.into_iter().collect());
    }
    product_with_budget(&per_position, len_cap, |u| u.len())
}

/// Positionwise product of candidate lists under a total budget; `cost`
/// weighs one candidate word.
fn product_with_budget(
    per_position: &[Vec<Vec<Sym>>],
    budget: usize,
    cost: impl Fn(&[Sym]) -> usize,
) -> Result<BTreeSet<Vec<Sym>>, Et0lError> {
    // minimal completion cost per suffix of positions
    let n = per_position.len();
    let mut min_suffix = vec![0usize; n + 1];
    for i in (0..n).rev() {
        let m = per_position[i].iter().map(|u| cost(u)).min();
        match m {
            Some(m) => min_suffix[i] = min_suffix[i + 1].saturating_add(m),
            None => return Ok(BTreeSet::new()), // some position has no candidates
        }
    }
    let mut out = BTreeSet::new();
    let mut acc: Vec<Sym> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        used: usize,
        acc: &mut Vec<Sym>,
        per_position: &[Vec<Vec<Sym>>],
        min_suffix: &[usize],
        budget: usize,
        cost: &impl Fn(&[Sym]) -> usize,
        out: &mut BTreeSet<Vec<Sym>>,
    ) -> Result<(), Et0lError> {
        if i == per_position.len() {
            out.insert(acc.clone());
            if out.len() > FORM_CAP {
                return Err(Et0lError::CapExceeded { what: "product forms", cap: FORM_CAP });
            }
            return Ok(());
        }
        for u in &per_position[i] {
            let c = cost(u);
            if used + c + min_suffix[i + 1] > budget {
                continue;
            }
            let len_before = acc.len();
            acc.extend_from_slice(u);
            rec(i + 1, used + c, acc, per_position, min_suffix, budget, cost, out)?;
            acc.truncate(len_before);
        }
        Ok(())
    }
    rec(0, 0, &mut acc, per_position, &min_suffix, budget, &cost, &mut out)?;
    Ok(out)
}

/// Bounded exploration of a general grammar: all terminal words of length
/// `≤ len_cap` derivable under a control word of length `≤ control_cap`,
/// with sentential forms capped at `form_len_cap` symbols. Complete only when
/// the caps dominate the grammar; the limiting pipeline has the exact
/// counterpart [`LimitingGrammar::generate_limiting`].
pub fn generate(
    grammar: &Et0lGrammar,
    len_cap: usize,
    control_cap: usize,
) -> Result<Vec<Vec<Sym>>, Et0lError> {
    generate_with_form_cap(grammar, len_cap, control_cap, 2 * len_cap + 4)
}

pub fn generate_with_form_cap(
    grammar: &Et0lGrammar,
    len_cap: usize,
    control_cap: usize,
    form_len_cap: usize,
) -> Result<Vec<Vec<Sym>>, Et0lError> {
    // BFS over (control state, sentential form) pairs; each pair expands
    // once, so the exploration is exact whenever the form cap dominates.
    let mut words: BTreeSet<Vec<Sym>> = BTreeSet::new();
    let mut visited: BTreeSet<(u32, Vec<Sym>)> = BTreeSet::new();
    let mut image_cache: HashMap<(usize, Vec<Sym>), Vec<Vec<Sym>>> = HashMap::new();
    let mut level: Vec<(u32, Vec<Sym>)> = vec![(grammar.control.initial(), vec![grammar.start])];
    visited.insert(level[0].clone());
    let harvest = |q: u32, form: &[Sym], words: &mut BTreeSet<Vec<Sym>>| {
        if grammar.control.is_accepting(q)
            && form.len() <= len_cap
            && form.iter().all(|&s| grammar.symbols.is_terminal(s))
        {
            words.insert(form.to_vec());
        }
    };
    for (q, form) in &level {
        harvest(*q, form, &mut words);
    }
    for _ in 0..control_cap {
        let mut next = Vec::new();
        for (q, form) in &level {
            let terminal_count = form.iter().filter(|&&s| grammar.symbols.is_terminal(s)).count();
            if terminal_count > len_cap {
                continue;
            }
            for &(table_sym, q2) in grammar.control.edges_from(*q) {
                let key = (table_sym as usize, form.clone());
                if !image_cache.contains_key(&key) {
                    let images =
                        apply_table(form, &grammar.tables[table_sym as usize], form_len_cap)?;
                    image_cache.insert(key.clone(), images.into_iter().collect());
                }
                for img in &image_cache[&key] {
                    let pair = (q2, img.clone());
                    if visited.insert(pair.clone()) {
                        harvest(q2, img, &mut words);
                        next.push(pair);
                    }
                }
            }
            if visited.len() > FORM_CAP {
                return Err(Et0lError::CapExceeded { what: "sentential forms", cap: FORM_CAP });
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(sort_words(words))
}

/// Number of distinct derivation trees of `target` labeled by the control
/// word `labels` (table indices). Dynamic programming over sentential forms
/// with per-level minimal-yield pruning; exact for the explored window.
pub fn count_derivations(
    grammar: &Et0lGrammar,
    target: &[Sym],
    labels: &[usize],
) -> Result<u64, Et0lError> {
    let budget = target.len();
    let nsym = grammar.symbols.count();
    // min_yield[i][s]: least final-form length reachable from s via labels[i..]
    let mut min_yield: Vec<Vec<Option<usize>>> = vec![vec![None; nsym]; labels.len() + 1];
    min_yield[labels.len()].fill(Some(1));
    for i in (0..labels.len()).rev() {
        let table = &grammar.tables[labels[i]];
        let row: Vec<Option<usize>> = (0..nsym as Sym)
            .map(|s| {
                let next = &min_yield[i + 1];
                table.language_ref(s).shortest_weight(&|sym| next[sym as usize])
            })
            .collect();
        min_yield[i] = row;
    }

    let form_cost = |form: &[Sym], level: usize| -> Option<usize> {
        form.iter().try_fold(0usize, |acc, &s| min_yield[level][s as usize].map(|m| acc + m))
    };

    let mut counts: HashMap<Vec<Sym>, u64> = HashMap::new();
    if form_cost(&[grammar.start], 0).map(|c| c <= budget) == Some(true) {
        counts.insert(vec![grammar.start], 1);
    }
    for (i, &t) in labels.iter().enumerate() {
        let table = &grammar.tables[t];
        let mut candidates: HashMap<Sym, Vec<Vec<Sym>>> = HashMap::new();
        let mut next_counts: HashMap<Vec<Sym>, u64> = HashMap::new();
        for (form, count) in &counts {
            let mut per_position = Vec::with_capacity(form.len());
            for &s in form {
                let cands = candidates.entry(s).or_insert_with(|| {
                    let next = &min_yield[i + 1];
                    table
                        .language_ref(s)
                        .enumerate_weighted(&|sym| next[sym as usize], budget, WORD_CAP)
                        .map(|set| set.into_iter().collect::<Vec<_>>())
                        .unwrap_or_default()
                });
                per_position.push(cands.clone());
            }
            let images = product_with_budget(&per_position, budget, |u| {
                u.iter().map(|&s| min_yield[i + 1][s as usize].unwrap_or(usize::MAX)).sum()
            })?;
            for img in images {
                *next_counts.entry(img).or_insert(0) += count;
            }
        }
        counts = next_counts;
        if counts.len() > FORM_CAP {
            return Err(Et0lError::CapExceeded { what: "derivation forms", cap: FORM_CAP });
        }
    }
    Ok(counts.get(target).copied().unwrap_or(0))
}

/// One concrete derivation tree: per-level table labels and the branching
/// structure; leaves may be nonterminals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationTree {
    pub labels: Vec<usize>,
    pub root: DerivationNode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationNode {
    pub symbol: Sym,
    /// children per level below this node; empty at the final level
    pub children: Vec<DerivationNode>,
}

impl DerivationTree {
    /// Reads the leaves left to right.
    pub fn leaf_word(&self) -> Vec<Sym> {
        fn walk(node: &DerivationNode, depth: usize, max_depth: usize, out: &mut Vec<Sym>) {
            if depth == max_depth || node.children.is_empty() && depth < max_depth {
                // a node without children at an inner level contributes itself
                // only if it was never expanded, which does not happen in
                // trees built by find_derivation
            }
            if depth == max_depth {
                out.push(node.symbol);
                return;
            }
            for c in &node.children {
                walk(c, depth + 1, max_depth, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, 0, self.labels.len(), &mut out);
        out
    }
}

/// Finds one derivation tree of `target` labeled by `labels`, if any.
pub fn find_derivation(
    grammar: &Et0lGrammar,
    target: &[Sym],
    labels: &[usize],
) -> Result<Option<DerivationTree>, Et0lError> {
    // forward chains of sentential forms, then a backward reconstruction
    let budget = target.len();
    let mut levels: Vec<Vec<Vec<Sym>>> = vec![vec![vec![grammar.start]]];
    for &t in labels {
        let table = &grammar.tables[t];
        let mut next: BTreeSet<Vec<Sym>> = BTreeSet::new();
        for form in levels.last().unwrap() {
            for img in apply_table(form, table, budget.max(form.len() * 4))? {
                next.insert(img);
            }
        }
        levels.push(next.into_iter().collect());
    }
    if !levels.last().unwrap().iter().any(|f| f == target) {
        return Ok(None);
    }
    // rebuild one chain ending at target
    let mut chain: Vec<Vec<Sym>> = vec![target.to_vec()];
    for i in (0..labels.len()).rev() {
        let table = &grammar.tables[labels[i]];
        let want = chain.last().unwrap().clone();
        let prev = levels[i]
            .iter()
            .find(|form| {
                apply_table(form, table, want.len().max(form.len() * 4))
                    .map(|set| set.contains(&want))
                    .unwrap_or(false)
            })
            .expect("forward pass guarantees a predecessor");
        chain.push(prev.clone());
    }
    chain.reverse();
    // decompose each step into per-symbol factor words
    fn split_step(table: &Table, from: &[Sym], to: &[Sym]) -> Option<Vec<Vec<Sym>>> {
        fn rec(table: &Table, from: &[Sym], to: &[Sym], acc: &mut Vec<Vec<Sym>>) -> bool {
            if from.is_empty() {
                return to.is_empty();
            }
            let lang = table.language(from[0]);
            let words = match lang.enumerate_by_length(to.len(), 1 << 16) {
                Ok(w) => w,
                Err(_) => return false,
            };
            for u in words {
                if to.len() >= u.len() && to[..u.len()] == u[..] {
                    acc.push(u.clone());
                    if rec(table, &from[1..], &to[u.len()..], acc) {
                        return true;
                    }
                    acc.pop();
                }
            }
            false
        }
        let mut acc = Vec::new();
        if rec(table, from, to, &mut acc) {
            Some(acc)
        } else {
            None
        }
    }
    // build nodes level by level from the bottom
    let depth = labels.len();
    let mut nodes: Vec<DerivationNode> =
        chain[depth].iter().map(|&s| DerivationNode { symbol: s, children: vec![] }).collect();
    for i in (0..depth).rev() {
        let factors = split_step(&grammar.tables[labels[i]], &chain[i], &chain[i + 1])
            .expect("chain steps are table applications");
        let mut new_nodes = Vec::with_capacity(chain[i].len());
        let mut consumed = 0usize;
        for (&s, factor) in chain[i].iter().zip(&factors) {
            let children: Vec<DerivationNode> = nodes[consumed..consumed + factor.len()].to_vec();
            consumed += factor.len();
            new_nodes.push(DerivationNode { symbol: s, children });
        }
        nodes = new_nodes;
    }
    Ok(Some(DerivationTree { labels: labels.to_vec(), root: nodes.pop().unwrap() }))
}

/// A grammar in limiting shape: three tables α, β, γ, control `α β* γ`,
/// ε-free β and nonempty γ images. The semantic limiting property is checked
/// separately by [`validate_limiting`].
#[derive(Clone, Debug)]
pub struct LimitingGrammar {
    grammar: Et0lGrammar,
    alpha: usize,
    beta: usize,
    gamma: usize,
}

/// Structural check of the limiting shape; returns table roles.
fn limiting_roles(grammar: &Et0lGrammar) -> Result<(usize, usize, usize), Et0lError> {
    if grammar.tables.len() != 3 {
        return Err(Et0lError::NotLimiting(format!(
            "expected exactly 3 tables, found {}",
            grammar.tables.len()
        )));
    }
    let alpha = grammar.table_id("alpha").ok_or_else(|| Et0lError::NotLimiting("missing table `alpha`".into()))?;
    let beta = grammar.table_id("beta").ok_or_else(|| Et0lError::NotLimiting("missing table `beta`".into()))?;
    let gamma = grammar.table_id("gamma").ok_or_else(|| Et0lError::NotLimiting("missing table `gamma`".into()))?;
    let canonical = {
        use crate::automaton::NfaBuilder;
        let mut b = NfaBuilder::new();
        let s0 = b.state();
        let s1 = b.state();
        let s2 = b.state();
        b.edge(s0, alpha as Sym, s1);
        b.edge(s1, beta as Sym, s1);
        b.edge(s1, gamma as Sym, s2);
        b.accept(s2);
        b.build(s0)
    };
    if !grammar.control.equivalent(&canonical, 1 << 12)? {
        return Err(Et0lError::NotLimiting("control is not alpha beta* gamma".into()));
    }
    Ok((alpha, beta, gamma))
}

impl LimitingGrammar {
    pub fn new(grammar: Et0lGrammar) -> Result<Self, Et0lError> {
        let (alpha, beta, gamma) = limiting_roles(&grammar)?;
        for v in grammar.symbols.nonterminals() {
            if grammar.tables[beta].language_ref(v).accepts_empty_word() {
                return Err(Et0lError::NotLimiting(format!(
                    "beta admits the empty word at `{}`",
                    grammar.symbols.name(v)
                )));
            }
            if grammar.tables[gamma].language_ref(v).is_empty_language() {
                return Err(Et0lError::NotLimiting(format!(
                    "gamma is empty at `{}`",
                    grammar.symbols.name(v)
                )));
            }
        }
        Ok(LimitingGrammar { grammar, alpha, beta, gamma })
    }

    pub fn grammar(&self) -> &Et0lGrammar {
        &self.grammar
    }

    pub fn into_grammar(self) -> Et0lGrammar {
        self.grammar
    }

    pub fn symbols(&self) -> &SymbolSpace {
        &self.grammar.symbols
    }

    pub fn alpha(&self) -> &Table {
        &self.grammar.tables[self.alpha]
    }

    pub fn beta(&self) -> &Table {
        &self.grammar.tables[self.beta]
    }

    pub fn gamma(&self) -> &Table {
        &self.grammar.tables[self.gamma]
    }

    pub fn table_roles(&self) -> (usize, usize, usize) {
        (self.alpha, self.beta, self.gamma)
    }

    /// Control word `α βⁿ γ` as table indices.
    pub fn control_word(&self, n: usize) -> Vec<usize> {
        let mut r = vec![self.alpha];
        r.extend(std::iter::repeat_n(self.beta, n));
        r.push(self.gamma);
        r
    }

    /// Minimal eventual terminal yield per symbol: the least length of a
    /// terminal word derivable from the symbol under some `β^k γ`. `None`
    /// when the symbol can never terminalize.
    pub fn min_terminal_yield(&self) -> Vec<Option<usize>> {
        let nsym = self.grammar.symbols.count();
        let mut mu: Vec<Option<usize>> = (0..nsym as Sym)
            .map(|s| if self.grammar.symbols.is_terminal(s) { Some(1) } else { None })
            .collect();
        // shortest all-terminal γ-word per nonterminal; independent of μ
        let via_gamma: Vec<Option<usize>> = (0..nsym as Sym)
            .map(|v| {
                if self.grammar.symbols.is_terminal(v) {
                    return Some(1);
                }
                self.gamma().language_ref(v).shortest_weight(&|s| {
                    if self.grammar.symbols.is_terminal(s) {
                        Some(1)
                    } else {
                        None
                    }
                })
            })
            .collect();
        loop {
            let mut changed = false;
            for v in self.grammar.symbols.nonterminals() {
                // finish now, or run one more β round under current estimates
                let mu_snapshot = mu.clone();
                let via_beta =
                    self.beta().language_ref(v).shortest_weight(&|s| mu_snapshot[s as usize]);
                let best = match (via_gamma[v as usize], via_beta) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                if best.is_some() && (mu[v as usize].is_none() || best < mu[v as usize]) {
                    mu[v as usize] = best;
                    changed = true;
                }
            }
            if !changed {
                return mu;
            }
        }
    }

    /// Exact generation: the words of the language with length `≤ max_len`,
    /// the per-round word sets, and the stabilization index (first `n` with
    /// equal consecutive round sets). The sentential frontier is iterated
    /// until it repeats, which certifies that no new short word can appear.
    pub fn generate_limiting(&self, max_len: usize) -> Result<LimitingRun, Et0lError> {
        self.generate_limiting_capped(max_len, 4 * max_len + 64)
    }

    pub fn generate_limiting_capped(
        &self,
        max_len: usize,
        round_cap: usize,
    ) -> Result<LimitingRun, Et0lError> {
        let mu = self.min_terminal_yield();
        let weight = |s: Sym| mu[s as usize];
        let symbols = &self.grammar.symbols;

        // round 0 frontier: α applied to the start symbol
        let alpha_words = self
            .alpha()
            .language_ref(self.grammar.start)
            .enumerate_weighted(&weight, max_len, WORD_CAP)?;
        let mut frontier: BTreeSet<Vec<Sym>> = alpha_words;

        let mut beta_candidates: HashMap<Sym, Vec<Vec<Sym>>> = HashMap::new();
        let mut gamma_candidates: HashMap<Sym, Vec<Vec<Sym>>> = HashMap::new();
        let mut seen_frontiers: HashMap<Vec<Vec<Sym>>, usize> = HashMap::new();
        let mut per_round: Vec<BTreeSet<Vec<Sym>>> = Vec::new();
        let cycle; // (start round, first repeat round)

        loop {
            let n = per_round.len();
            if n > round_cap {
                return Err(Et0lError::RoundCapExceeded(round_cap));
            }
            let key: Vec<Vec<Sym>> = frontier.iter().cloned().collect();
            if let Some(&start) = seen_frontiers.get(&key) {
                cycle = (start, n);
                break;
            }
            seen_frontiers.insert(key, n);

            // words of this round: all-terminal γ-images within the length cap
            let mut words = BTreeSet::new();
            for form in &frontier {
                let mut per_position = Vec::with_capacity(form.len());
                for &s in form {
                    let cands = gamma_candidates.entry(s).or_insert_with(|| {
                        self.gamma()
                            .language_ref(s)
                            .enumerate_weighted(
                                &|t| if symbols.is_terminal(t) { Some(1) } else { None },
                                max_len,
                                WORD_CAP,
                            )
                            .map(|set| set.into_iter().collect::<Vec<_>>())
                            .unwrap_or_default()
                    });
                    per_position.push(cands.clone());
                }
                for w in product_with_budget(&per_position, max_len, |u| u.len())? {
                    words.insert(w);
                }
            }
            per_round.push(words);

            // next frontier: β-images within the yield budget
            let mut next: BTreeSet<Vec<Sym>> = BTreeSet::new();
            for form in &frontier {
                let mut per_position = Vec::with_capacity(form.len());
                for &s in form {
                    let cands = beta_candidates.entry(s).or_insert_with(|| {
                        self.beta()
                            .language_ref(s)
                            .enumerate_weighted(&weight, max_len, WORD_CAP)
                            .map(|set| set.into_iter().collect::<Vec<_>>())
                            .unwrap_or_default()
                    });
                    per_position.push(cands.clone());
                }
                let images = product_with_budget(&per_position, max_len, |u| {
                    u.iter().map(|&s| mu[s as usize].unwrap_or(usize::MAX)).sum()
                })?;
                next.extend(images);
            }
            if next.len() > FORM_CAP {
                return Err(Et0lError::CapExceeded { what: "frontier forms", cap: FORM_CAP });
            }
            frontier = next;
        }

        let (cycle_start, cycle_end) = cycle;
        let mut all: BTreeSet<Vec<Sym>> = BTreeSet::new();
        for set in &per_round {
            all.extend(set.iter().cloned());
        }
        // every word must be present throughout the repeating cycle,
        // otherwise it keeps vanishing forever
        for w in &all {
            for n in cycle_start..cycle_end {
                if !per_round[n].contains(w) {
                    let present = per_round.iter().position(|s| s.contains(w)).unwrap();
                    return Err(Et0lError::NonLimitingDetected {
                        word: symbols.render_word(w),
                        present,
                        absent: n,
                    });
                }
            }
        }
        let stabilization = (0..per_round.len() - 1)
            .find(|&n| per_round[n] == per_round[n + 1])
            .unwrap_or(cycle_start);
        Ok(LimitingRun { words: sort_words(all), per_round, stabilization })
    }
}

/// Count vector of the language of a limiting grammar by length.
pub fn generate_limiting_counts(
    lim: &LimitingGrammar,
    max_len: usize,
) -> Result<Vec<u64>, Et0lError> {
    Ok(lim.generate_limiting(max_len)?.counts_by_length(max_len))
}

/// Result of exact limiting generation.
#[derive(Clone, Debug)]
pub struct LimitingRun {
    /// all words of length ≤ the cap, in (length, lex) order
    pub words: Vec<Vec<Sym>>,
    /// words of `S · α βⁿ γ` for each explored round `n`
    pub per_round: Vec<BTreeSet<Vec<Sym>>>,
    /// first `n` with `W(n) == W(n+1)`
    pub stabilization: usize,
}

impl LimitingRun {
    pub fn counts_by_length(&self, max_len: usize) -> Vec<u64> {
        let mut counts = vec![0u64; max_len + 1];
        for w in &self.words {
            if w.len() <= max_len {
                counts[w.len()] += 1;
            }
        }
        counts
    }
}

/// Validation report for the limiting shape and the desk-scale semantic
/// checks (persistence of generated words, unambiguity of derivations).
#[derive(Clone, Debug, Default)]
pub struct LimitingReport {
    pub structural: Vec<String>,
    /// (word, first round seen, round where it is missing)
    pub persistence: Vec<(String, usize, usize)>,
    /// (word, round exponent, derivation count)
    pub ambiguity: Vec<(String, usize, u64)>,
}

impl LimitingReport {
    pub fn is_ok(&self) -> bool {
        self.structural.is_empty() && self.persistence.is_empty() && self.ambiguity.is_empty()
    }
}

/// Checks Def-limiting items 1–4 structurally and items 5 / unambiguity
/// empirically for words of length `≤ max_len` over rounds `≤ rounds`.
pub fn validate_limiting(
    grammar: &Et0lGrammar,
    max_len: usize,
    rounds: usize,
) -> Result<LimitingReport, Et0lError> {
    let mut report = LimitingReport::default();
    let roles = match limiting_roles(grammar) {
        Ok(r) => Some(r),
        Err(Et0lError::NotLimiting(msg)) => {
            report.structural.push(msg);
            None
        }
        Err(e) => return Err(e),
    };
    let Some((_, beta, gamma)) = roles else {
        return Ok(report);
    };
    for v in grammar.symbols.nonterminals() {
        if grammar.tables[beta].language(v).accepts_empty_word() {
            report
                .structural
                .push(format!("beta admits the empty word at `{}`", grammar.symbols.name(v)));
        }
        if grammar.tables[gamma].language(v).is_empty_language() {
            report.structural.push(format!("gamma is empty at `{}`", grammar.symbols.name(v)));
        }
    }
    if !report.structural.is_empty() {
        return Ok(report);
    }

    let lim = LimitingGrammar::new(grammar.clone())?;
    let run = lim.generate_limiting_capped(max_len, (4 * max_len + 64).max(rounds))?;
    let explored = run.per_round.len().min(rounds + 1);

    // persistence: once a word appears it must stay, within the window
    let mut first_seen: BTreeMap<Vec<Sym>, usize> = BTreeMap::new();
    for (n, set) in run.per_round.iter().take(explored).enumerate() {
        for w in set {
            first_seen.entry(w.clone()).or_insert(n);
        }
    }
    for (w, &first) in &first_seen {
        for (n, set) in run.per_round.iter().enumerate().take(explored).skip(first + 1) {
            if !set.contains(w) {
                report.persistence.push((grammar.symbols.render_word(w), first, n));
            }
        }
    }

    // unambiguity: one derivation tree per generated word and sentential
    // form, for each control word α βⁿ γ in the window
    for n in 0..explored {
        let labels = lim.control_word(n);
        // sentential yields of this round: γ-images of the frontier with
        // nonterminals allowed, capped at the word length budget
        let mut targets: BTreeSet<Vec<Sym>> = run.per_round[n].clone();
        for w in sentential_yields(&lim, n, max_len)? {
            targets.insert(w);
        }
        for t in targets {
            let c = count_derivations(grammar, &t, &labels)?;
            if c > 1 {
                report.ambiguity.push((grammar.symbols.render_word(&t), n, c));
            }
        }
    }
    Ok(report)
}

/// Yields (over terminals and nonterminals) of `S·αβⁿγ` up to the length cap.
fn sentential_yields(
    lim: &LimitingGrammar,
    n: usize,
    max_len: usize,
) -> Result<BTreeSet<Vec<Sym>>, Et0lError> {
    let mu = lim.min_terminal_yield();
    let weight = |s: Sym| mu[s as usize];
    let mut frontier = lim
        .alpha()
        .language_ref(lim.grammar.start)
        .enumerate_weighted(&weight, max_len, WORD_CAP)?;
    for _ in 0..n {
        let mut next = BTreeSet::new();
        for form in &frontier {
            let mut per_position = Vec::with_capacity(form.len());
            for &s in form {
                let cands: Vec<Vec<Sym>> = lim
                    .beta()
                    .language(s)
                    .enumerate_weighted(&weight, max_len, WORD_CAP)?
                    .into_iter()
                    .collect();
                per_position.push(cands);
            }
            next.extend(product_with_budget(&per_position, max_len, |u| {
                u.iter().map(|&s| mu[s as usize].unwrap_or(usize::MAX)).sum()
            })?);
        }
        frontier = next;
    }
    let mut out = BTreeSet::new();
    for form in &frontier {
        let mut per_position = Vec::with_capacity(form.len());
        for &s in form {
            let cands: Vec<Vec<Sym>> = lim
                .gamma()
                .language(s)
                .enumerate_by_length(max_len, WORD_CAP)?
                .into_iter()
                .collect();
            per_position.push(cands);
        }
        out.extend(product_with_budget(&per_position, max_len, |u| u.len())?);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod test_grammars {
    use super::*;
    use crate::automaton::regex_to_nfa;

    /// Builds a grammar from (terminals, nonterminals, start, tables as
    /// (name, [(symbol, regex)]), control regex).
    pub fn build(
        terminals: &[&str],
        nonterminals: &[&str],
        start: &str,
        tables: &[(&str, &[(&str, &str)])],
        control: &str,
    ) -> Et0lGrammar {
        let mut symbols = SymbolSpace::new();
        for t in terminals {
            symbols.add_terminal(t);
        }
        for v in nonterminals {
            symbols.add_nonterminal(v);
        }
        let mut built = Vec::new();
        for (name, prods) in tables {
            let mut table = Table::new(*name);
            for (sym, regex) in prods.iter() {
                let id = symbols.id_of(sym).unwrap();
                let nfa = regex_to_nfa(regex, &|n| symbols.id_of(n)).unwrap();
                table.set(id, nfa);
            }
            built.push(table);
        }
        let names: Vec<String> = built.iter().map(|t| t.name.clone()).collect();
        let control_nfa =
            regex_to_nfa(control, &|n| names.iter().position(|t| t == n).map(|i| i as Sym))
                .unwrap();
        Et0lGrammar {
            symbols: symbols.clone(),
            tables: built,
            control: control_nfa,
            control_expr: control.to_string(),
            start: symbols.id_of(start).unwrap(),
        }
    }

    /// The (aⁿbⁿ)ᵐ grammar with control α* β* γ.
    pub fn anbn() -> Et0lGrammar {
        build(
            &["a", "b"],
            &["S", "A", "B"],
            "S",
            &[
                ("alpha", &[("S", "S S | S | A B")]),
                ("beta", &[("S", "S"), ("A", "a A"), ("B", "b B")]),
                ("gamma", &[("S", "S"), ("A", "eps"), ("B", "eps")]),
            ],
            "alpha* beta* gamma",
        )
    }

    /// The partitions grammar with control {α, β, γ}*.
    pub fn partitions() -> Et0lGrammar {
        build(
            &["a", "b"],
            &["S", "A"],
            "S",
            &[
                ("alpha", &[("S", "a A b S"), ("A", "A")]),
                ("beta", &[("S", "S"), ("A", "a A")]),
                ("gamma", &[("S", "eps"), ("A", "eps")]),
            ],
            "(alpha | beta | gamma)*",
        )
    }

    /// Limiting toy grammar for a*.
    pub fn astar() -> Et0lGrammar {
        build(
            &["a"],
            &["S", "A", "B"],
            "S",
            &[
                ("alpha", &[("S", "A")]),
                ("beta", &[("A", "a A | B"), ("B", "B")]),
                ("gamma", &[("A", "eps"), ("B", "eps"), ("S", "S")]),
            ],
            "alpha beta* gamma",
        )
    }

    /// Deliberately ambiguous limiting grammar: "a" has two trees under αββγ.
    pub fn ambiguous() -> Et0lGrammar {
        build(
            &["a"],
            &["S", "A"],
            "S",
            &[
                ("alpha", &[("S", "A")]),
                ("beta", &[("A", "a A | A")]),
                ("gamma", &[("A", "eps"), ("S", "S")]),
            ],
            "alpha beta* gamma",
        )
    }
}

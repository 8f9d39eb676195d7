//! Deterministic string transducers, decoding automata for prefix codes,
//! antichain construction over a group, and the closure of unambiguous
//! limiting grammars under injective transduction.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::automaton::{Nfa, NfaBuilder, Sym};
use crate::et0l::{Et0lError, Et0lGrammar, LimitingGrammar, SymbolSpace, Table};
use crate::tree::{GeneratingSet, Word};

#[derive(Debug, Error)]
pub enum TransducerError {
    #[error("code words must form a prefix antichain: `{0}` is a prefix of `{1}`")]
    NotAntichain(String, String),
    #[error("transducer is not injective on inputs up to length {len}: `{w1}` and `{w2}` map to the same output")]
    InjectivityViolation { len: usize, w1: String, w2: String },
    #[error("geodesic search exhausted at radius {0}")]
    GeodesicSearchExhausted(usize),
    #[error("grammar terminal `{0}` is not an input symbol of the transducer")]
    AlphabetMismatch(String),
    #[error(transparent)]
    Et0l(#[from] Et0lError),
}

/// One output-word/target entry per input symbol; `None` is the fail sink.
pub type GsmRow = Vec<Option<(Vec<Sym>, u32)>>;

/// A deterministic string transducer (gsm). The transition function is total
/// via an implicit fail state; acceptance is checked at the end of input.
#[derive(Clone, Debug)]
pub struct Gsm {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub n_states: u32,
    pub initial: u32,
    pub accept: Vec<bool>,
    /// `delta[state][input]` = (output word, next state)
    pub delta: Vec<GsmRow>,
}

impl Gsm {
    pub fn input_id(&self, name: &str) -> Option<Sym> {
        self.input_names.iter().position(|n| n == name).map(|i| i as Sym)
    }

    /// The rewritten word, if the unique run ends in an accepting state.
    pub fn apply(&self, w: &[Sym]) -> Option<Vec<Sym>> {
        let mut q = self.initial;
        let mut out = Vec::new();
        for &s in w {
            match &self.delta[q as usize][s as usize] {
                Some((word, next)) => {
                    out.extend_from_slice(word);
                    q = *next;
                }
                None => return None,
            }
        }
        if self.accept[q as usize] {
            Some(out)
        } else {
            None
        }
    }

    /// Exhaustive injectivity check on inputs up to `max_len`.
    pub fn check_injective(&self, max_len: usize) -> Result<(), TransducerError> {
        let mut seen: HashMap<Vec<Sym>, Vec<Sym>> = HashMap::new();
        let mut level: Vec<Vec<Sym>> = vec![Vec::new()];
        for _ in 0..=max_len {
            for w in &level {
                if let Some(out) = self.apply(w) {
                    if let Some(prev) = seen.get(&out) {
                        return Err(TransducerError::InjectivityViolation {
                            len: max_len,
                            w1: render(&self.input_names, prev),
                            w2: render(&self.input_names, w),
                        });
                    }
                    seen.insert(out, w.clone());
                }
            }
            level = level
                .iter()
                .flat_map(|w| {
                    (0..self.input_names.len() as Sym).map(move |s| {
                        let mut w2 = w.clone();
                        w2.push(s);
                        w2
                    })
                })
                .collect();
        }
        Ok(())
    }
}

fn render(names: &[String], w: &[Sym]) -> String {
    if w.is_empty() {
        return String::new();
    }
    if names.iter().all(|n| n.chars().count() == 1) {
        w.iter().map(|&s| names[s as usize].as_str()).collect()
    } else {
        w.iter().map(|&s| names[s as usize].as_str()).collect::<Vec<_>>().join(" ")
    }
}

/// A finite prefix antichain of input words with their output words.
#[derive(Clone, Debug)]
pub struct PrefixCode {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// (code word, output word) pairs
    pub words: Vec<(Vec<Sym>, Vec<Sym>)>,
}

impl PrefixCode {
    pub fn new(
        input_names: Vec<String>,
        output_names: Vec<String>,
        words: Vec<(Vec<Sym>, Vec<Sym>)>,
    ) -> Result<Self, TransducerError> {
        for (i, (w1, _)) in words.iter().enumerate() {
            for (w2, _) in words.iter().skip(i + 1) {
                let (short, long) = if w1.len() < w2.len() { (w1, w2) } else { (w2, w1) };
                if long[..short.len()] == short[..] {
                    return Err(TransducerError::NotAntichain(
                        render(&input_names, short),
                        render(&input_names, long),
                    ));
                }
            }
        }
        Ok(PrefixCode { input_names, output_names, words })
    }
}

/// The decoding automaton of a prefix code: states are the proper prefixes of
/// code words plus a fail sink; a full code word emits its output and returns
/// to the root, so `M(L) = f(L ∩ W*)`.
pub fn decoding_automaton(code: &PrefixCode) -> Gsm {
    let n_inputs = code.input_names.len();
    let mut prefix_ids: BTreeMap<Vec<Sym>, u32> = BTreeMap::new();
    prefix_ids.insert(Vec::new(), 0);
    for (w, _) in &code.words {
        for k in 1..w.len() {
            let p = w[..k].to_vec();
            let next = prefix_ids.len() as u32;
            prefix_ids.entry(p).or_insert(next);
        }
    }
    let n_states = prefix_ids.len() as u32;
    let mut delta: Vec<GsmRow> = vec![vec![None; n_inputs]; n_states as usize];
    for (prefix, &id) in &prefix_ids {
        for g in 0..n_inputs as Sym {
            let mut ext = prefix.clone();
            ext.push(g);
            if let Some((_, out)) = code.words.iter().find(|(w, _)| *w == ext) {
                delta[id as usize][g as usize] = Some((out.clone(), 0));
            } else if let Some(&next) = prefix_ids.get(&ext) {
                delta[id as usize][g as usize] = Some((Vec::new(), next));
            }
            // otherwise: fail sink, left as None
        }
    }
    let mut accept = vec![false; n_states as usize];
    if !code.words.is_empty() {
        accept[0] = true;
    }
    Gsm {
        input_names: code.input_names.clone(),
        output_names: code.output_names.clone(),
        n_states,
        initial: 0,
        accept,
        delta,
    }
}

/// Identity-word padding for a list of suffixes: returns words `w_i` with
/// trivial projection such that `{w_i · u_i}` is a prefix antichain. Follows
/// the geodesic construction: each padding starts with a geodesic strictly
/// longer than the whole previous padded word.
pub fn build_antichain(
    gens: &GeneratingSet,
    suffixes: &[Word],
    radius_cap: usize,
) -> Result<Vec<Word>, TransducerError> {
    // geodesic ball: shortest word length per group element, by BFS
    let first_nontrivial = gens
        .ids()
        .find(|&g| !gens.machine(g).is_identity())
        .ok_or(TransducerError::GeodesicSearchExhausted(0))?;

    let mut out: Vec<Word> = Vec::new();
    let mut prev_len = 0usize;
    for (i, _) in suffixes.iter().enumerate() {
        let (alpha, beta) = if i == 0 {
            let alpha = Word(vec![first_nontrivial]);
            let beta = inverse_word(gens, &alpha);
            (alpha, beta)
        } else {
            let alpha = geodesic_of_length(gens, prev_len + 1, radius_cap)?;
            let beta = inverse_word(gens, &alpha);
            (alpha, beta)
        };
        let w = alpha.concat(&beta);
        debug_assert!(gens.word_automorphism(&w).is_identity());
        prev_len = w.len();
        out.push(w);
    }
    Ok(out)
}

fn inverse_word(gens: &GeneratingSet, w: &Word) -> Word {
    Word(
        w.0.iter()
            .rev()
            .map(|&g| gens.inverse_of(g).expect("symmetric generating set"))
            .collect(),
    )
}

/// Lexicographically first word of the given length whose projection has that
/// word length as its geodesic length.
fn geodesic_of_length(
    gens: &GeneratingSet,
    len: usize,
    radius_cap: usize,
) -> Result<Word, TransducerError> {
    if len > radius_cap {
        return Err(TransducerError::GeodesicSearchExhausted(radius_cap));
    }
    // distance table over elements within the ball of the target radius
    let mut dist: HashMap<crate::tree::Automorphism, usize> = HashMap::new();
    let identity = gens.word_automorphism(&Word::empty());
    dist.insert(identity.clone(), 0);
    let mut frontier: Vec<(Word, crate::tree::Automorphism)> = vec![(Word::empty(), identity)];
    for d in 1..=len {
        let mut next = Vec::new();
        for (w, m) in &frontier {
            for g in gens.ids() {
                let m2 = m.compose(gens.machine(g)).expect("same alphabet");
                if !dist.contains_key(&m2) {
                    dist.insert(m2.clone(), d);
                    let mut w2 = w.clone();
                    w2.0.push(g);
                    next.push((w2, m2));
                }
            }
        }
        if next.is_empty() {
            return Err(TransducerError::GeodesicSearchExhausted(d));
        }
        next.sort_by(|a, b| a.0.cmp(&b.0));
        frontier = next;
    }
    Ok(frontier.into_iter().next().expect("nonempty frontier").0)
}

/// Transforms a limiting grammar by an injective transducer: the result
/// generates `{ M(w) : w ∈ L(E) }` over the output alphabet. Nonterminals of
/// the new grammar annotate the old symbols with transducer state pairs; the
/// init table guesses an accepting path, and the final table applies the
/// edge outputs, folded into α and γ respectively.
pub fn transform_grammar(
    lim: &LimitingGrammar,
    gsm: &Gsm,
    injectivity_check_len: usize,
) -> Result<LimitingGrammar, TransducerError> {
    gsm.check_injective(injectivity_check_len)?;
    let old = lim.grammar();
    let old_syms = &old.symbols;

    // old terminal id -> gsm input id
    let mut input_of: HashMap<Sym, Sym> = HashMap::new();
    for t in old_syms.terminals() {
        let name = old_syms.name(t);
        let id = gsm
            .input_id(name)
            .ok_or_else(|| TransducerError::AlphabetMismatch(name.to_string()))?;
        input_of.insert(t, id);
    }

    let mut ctx = AnnotateCtx {
        old_syms,
        symbols: SymbolSpace::new(),
        annotated: HashMap::new(),
        worklist: Vec::new(),
        gsm_states: gsm.n_states,
    };
    let out_terms: Vec<Sym> =
        gsm.output_names.iter().map(|n| ctx.symbols.add_terminal(n)).collect();
    let start = ctx.symbols.add_nonterminal("S");

    let (alpha_old, beta_old, gamma_old) = {
        let roles = lim.table_roles();
        (&old.tables[roles.0], &old.tables[roles.1], &old.tables[roles.2])
    };

    let mut alpha = Table::new("alpha");
    let mut beta = Table::new("beta");
    let mut gamma = Table::new("gamma");

    // α'' on the new start: union over accepting states of the annotated
    // α-language of the old start, glued with epsilon edges
    {
        let lang = alpha_old.language(old.start);
        let mut parts = Vec::new();
        for qacc in 0..gsm.n_states {
            if gsm.accept[qacc as usize] {
                parts.push(ctx.annotate(&lang, gsm.initial, qacc));
            }
        }
        let mut builder = NfaBuilder::new();
        let root = builder.state();
        for part in parts {
            let offset = builder.embed(&part);
            builder.eps_edge(root, offset + part.initial());
        }
        alpha.set(start, builder.build(root));
    }

    // β'' and γ'' per annotated nonterminal, built as the worklist grows
    let mut done = 0usize;
    while done < ctx.worklist.len() {
        let key = ctx.worklist[done];
        done += 1;
        let (s, q, q2) = key;
        let id = ctx.annotated[&key];
        if old_syms.is_terminal(s) {
            // β keeps the annotation; γ applies the transducer edge
            beta.set(id, Nfa::from_words([[id]]));
            let input = input_of[&s];
            let lang = match &gsm.delta[q as usize][input as usize] {
                Some((out_word, next)) if *next == q2 => {
                    let mapped: Vec<Sym> =
                        out_word.iter().map(|&o| out_terms[o as usize]).collect();
                    Nfa::from_words([mapped])
                }
                _ => Nfa::from_words([[id]]), // inconsistent annotation stays
            };
            gamma.set(id, lang);
        } else {
            let bl = ctx.annotate(&beta_old.language(s), q, q2);
            beta.set(id, bl);
            // γ'' composes the annotated γ-language with the output map:
            // valid terminal annotations are replaced by their output words
            let gl = ctx.annotate(&gamma_old.language(s), q, q2);
            let gl = ctx.apply_outputs(&gl, gsm, &input_of, &out_terms);
            // keep γ nonempty even when no annotated path exists
            let gl = if gl.is_empty_language() {
                Nfa::from_words([[id]])
            } else {
                union_with_word(&gl, &[id])
            };
            gamma.set(id, gl);
        }
    }
    let symbols = ctx.symbols;
    // α on other symbols and β/γ on the new start default to identity; the
    // start never reappears after α, but γ(start) must be nonempty
    let table_names = ["alpha", "beta", "gamma"];
    let control = crate::automaton::regex_to_nfa("alpha beta* gamma", &|n| {
        table_names.iter().position(|t| *t == n).map(|i| i as u32)
    })
    .expect("fixed control expression");
    let grammar = Et0lGrammar {
        symbols,
        tables: vec![alpha, beta, gamma],
        control,
        control_expr: "alpha beta* gamma".to_string(),
        start,
    };
    Ok(LimitingGrammar::new(grammar)?)
}

/// Annotation context: interns `(old symbol, state, state)` nonterminals and
/// lifts old table languages to words of annotated symbols along transducer
/// state paths.
struct AnnotateCtx<'a> {
    old_syms: &'a SymbolSpace,
    symbols: SymbolSpace,
    annotated: HashMap<(Sym, u32, u32), Sym>,
    worklist: Vec<(Sym, u32, u32)>,
    gsm_states: u32,
}

impl AnnotateCtx<'_> {
    fn intern(&mut self, key: (Sym, u32, u32)) -> Sym {
        if let Some(&id) = self.annotated.get(&key) {
            return id;
        }
        let (s, q, q2) = key;
        let name = format!("<{}:{}-{}>", self.old_syms.name(s), q, q2);
        let id = self.symbols.add_nonterminal(&name);
        self.annotated.insert(key, id);
        self.worklist.push(key);
        id
    }

    /// Words of `lang` annotated along state paths from `q` to `q2`:
    /// adjacent letters share states, only the endpoints are pinned.
    fn annotate(&mut self, lang: &Nfa, q: u32, q2: u32) -> Nfa {
        let mut b = NfaBuilder::new();
        let nfa_states = lang.n_states() as u32;
        let gn = self.gsm_states;
        let idx = |s: u32, p: u32| s * gn + p;
        for _ in 0..nfa_states * gn {
            b.state();
        }
        for s in 0..nfa_states {
            for p in 0..gn {
                for &(sym, t) in lang.edges_from(s) {
                    for p2 in 0..gn {
                        let ann = self.intern((sym, p, p2));
                        b.edge(idx(s, p), ann, idx(t, p2));
                    }
                }
                if lang.is_accepting(s) && p == q2 {
                    b.accept(idx(s, p));
                }
            }
        }
        b.build(idx(lang.initial(), q))
    }

    /// The final-table composition: edges labeled by a terminal annotation
    /// with a matching transducer transition are respelled as the transition
    /// output; everything else is kept verbatim.
    fn apply_outputs(
        &self,
        nfa: &Nfa,
        gsm: &Gsm,
        input_of: &HashMap<Sym, Sym>,
        out_terms: &[Sym],
    ) -> Nfa {
        let rev: HashMap<Sym, (Sym, u32, u32)> =
            self.annotated.iter().map(|(&k, &id)| (id, k)).collect();
        let mut b = NfaBuilder::new();
        for _ in 0..nfa.n_states() {
            b.state();
        }
        for s in 0..nfa.n_states() as u32 {
            if nfa.is_accepting(s) {
                b.accept(s);
            }
            for &(sym, t) in nfa.edges_from(s) {
                let rewritten = rev.get(&sym).and_then(|&(old_sym, q, q2)| {
                    let input = input_of.get(&old_sym)?;
                    match &gsm.delta[q as usize][*input as usize] {
                        Some((out, next)) if *next == q2 => Some(
                            out.iter().map(|&o| out_terms[o as usize]).collect::<Vec<_>>(),
                        ),
                        _ => None,
                    }
                });
                match rewritten {
                    Some(word) => b.word_edge(s, &word, t),
                    None => b.edge(s, sym, t),
                }
            }
        }
        b.build(nfa.initial())
    }
}

fn union_with_word(nfa: &Nfa, word: &[Sym]) -> Nfa {
    let mut b = NfaBuilder::new();
    let root = b.state();
    let offset = b.embed(nfa);
    b.eps_edge(root, offset + nfa.initial());
    let end = b.state();
    b.accept(end);
    b.word_edge(root, word, end);
    b.build(root)
}

/// Restriction of a membership grammar to a finitely generated subgroup:
/// given sub-generators `y_i` with words `u_i` over the original alphabet,
/// the language `{ y-words whose expansion lies in L(E) }` is obtained by
/// padding the `u_i` into a prefix antichain, decoding, and transforming.
pub fn restrict_to_subgroup(
    lim: &LimitingGrammar,
    gens: &GeneratingSet,
    sub: &[(String, Word)],
    radius_cap: usize,
    injectivity_check_len: usize,
) -> Result<LimitingGrammar, TransducerError> {
    let suffixes: Vec<Word> = sub.iter().map(|(_, u)| u.clone()).collect();
    let paddings = build_antichain(gens, &suffixes, radius_cap)?;
    let input_names: Vec<String> = gens.names().to_vec();
    let output_names: Vec<String> = sub.iter().map(|(n, _)| n.clone()).collect();
    let words: Vec<(Vec<Sym>, Vec<Sym>)> = paddings
        .iter()
        .zip(sub.iter().enumerate())
        .map(|(w, (i, (_, u)))| {
            let full = w.concat(u);
            (full.0.iter().map(|&g| g as Sym).collect(), vec![i as Sym])
        })
        .collect();
    let code = PrefixCode::new(input_names, output_names, words)?;
    let gsm = decoding_automaton(&code);
    transform_grammar(lim, &gsm, injectivity_check_len)
}

/// Parses the gsm text format:
///
/// ```text
/// input: a b
/// output: x y
/// state q0
/// state q1
/// accept q0
/// edge q0 a q1 out x y
/// edge q1 b q0
/// ```
///
/// The first declared state is initial; `out` is optional (empty output).
/// Unspecified (state, input) pairs go to the fail sink.
pub fn parse_gsm(text: &str) -> Result<Gsm, Et0lError> {
    let perr = |line: usize, msg: String| Et0lError::Parse { line, msg };
    let mut input_names: Option<Vec<String>> = None;
    let mut output_names: Option<Vec<String>> = None;
    let mut state_ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut accept_names: Vec<(usize, String)> = Vec::new();
    let mut edges: Vec<(usize, String, String, Vec<String>, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("input:") {
            input_names = Some(rest.split_whitespace().map(|s| s.to_string()).collect());
        } else if let Some(rest) = line.strip_prefix("output:") {
            output_names = Some(rest.split_whitespace().map(|s| s.to_string()).collect());
        } else {
            let mut parts = line.split_whitespace();
            match parts.next().unwrap() {
                "state" => {
                    let name = parts
                        .next()
                        .ok_or_else(|| perr(line_no, "state needs a name".into()))?;
                    let id = state_ids.len() as u32;
                    if state_ids.insert(name.to_string(), id).is_some() {
                        return Err(perr(line_no, format!("duplicate state `{name}`")));
                    }
                }
                "accept" => {
                    let name = parts
                        .next()
                        .ok_or_else(|| perr(line_no, "accept needs a state".into()))?;
                    accept_names.push((line_no, name.to_string()));
                }
                "edge" => {
                    let from = parts.next();
                    let sym = parts.next();
                    let to = parts.next();
                    let (Some(from), Some(sym), Some(to)) = (from, sym, to) else {
                        return Err(perr(line_no, "edge needs: from input to [out w...]".into()));
                    };
                    let rest: Vec<String> = parts.map(|s| s.to_string()).collect();
                    let out = match rest.first().map(|s| s.as_str()) {
                        Some("out") => rest[1..].to_vec(),
                        None => Vec::new(),
                        Some(other) => {
                            return Err(perr(line_no, format!("unexpected token `{other}`")))
                        }
                    };
                    edges.push((line_no, from.to_string(), sym.to_string(), out, to.to_string()));
                }
                other => return Err(perr(line_no, format!("unknown directive `{other}`"))),
            }
        }
    }
    let input_names = input_names.ok_or_else(|| perr(0, "missing input: line".into()))?;
    let output_names = output_names.ok_or_else(|| perr(0, "missing output: line".into()))?;
    if state_ids.is_empty() {
        return Err(perr(0, "gsm needs at least one state".into()));
    }
    // first declared state is initial: ids were assigned in declaration order
    let n_states = state_ids.len() as u32;
    let mut accept = vec![false; n_states as usize];
    for (line_no, name) in accept_names {
        let &q = state_ids
            .get(&name)
            .ok_or_else(|| perr(line_no, format!("unknown state `{name}`")))?;
        accept[q as usize] = true;
    }
    let mut delta: Vec<GsmRow> = vec![vec![None; input_names.len()]; n_states as usize];
    for (line_no, from, sym, out, to) in edges {
        let &q = state_ids
            .get(&from)
            .ok_or_else(|| perr(line_no, format!("unknown state `{from}`")))?;
        let &r = state_ids
            .get(&to)
            .ok_or_else(|| perr(line_no, format!("unknown state `{to}`")))?;
        let s = input_names
            .iter()
            .position(|n| *n == sym)
            .ok_or_else(|| perr(line_no, format!("unknown input symbol `{sym}`")))?;
        let mut out_ids = Vec::with_capacity(out.len());
        for o in &out {
            let id = output_names
                .iter()
                .position(|n| n == o)
                .ok_or_else(|| perr(line_no, format!("unknown output symbol `{o}`")))?;
            out_ids.push(id as Sym);
        }
        if delta[q as usize][s].is_some() {
            return Err(perr(line_no, format!("duplicate transition from `{from}` on `{sym}`")));
        }
        delta[q as usize][s] = Some((out_ids, r));
    }
    Ok(Gsm { input_names, output_names, n_states, initial: 0, accept, delta })
}

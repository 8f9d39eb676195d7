//! Classification of automaton automorphisms: finitary depth, boundedness,
//! spines of directed automorphisms, directional depth and decorated words.
//!
//! All procedures work on the state graph of the canonical machine restricted
//! to non-identity states. Boundedness is the standard cycle criterion: every
//! state lies on at most one directed cycle and no path connects two distinct
//! cycles; it is validated against direct per-level section counts in tests.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::tree::{Automorphism, GenId, GeneratingSet, Ray, StateId, TreeError, Vertex, Word};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("automorphism is not directed: {0}")]
    NotDirected(&'static str),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Directional depth: least prefix length of a word at which the section
/// becomes trivial, or `Infinite` if no prefix works.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Depth {
    Finite(usize),
    Infinite,
}

impl Depth {
    pub fn is_finite(&self) -> bool {
        matches!(self, Depth::Finite(_))
    }

    pub fn le(&self, bound: usize) -> bool {
        match self {
            Depth::Finite(k) => *k <= bound,
            Depth::Infinite => false,
        }
    }

    pub fn finite(&self) -> Option<usize> {
        match self {
            Depth::Finite(k) => Some(*k),
            Depth::Infinite => None,
        }
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(k) => write!(f, "{k}"),
            Depth::Infinite => write!(f, "inf"),
        }
    }
}

/// Spine of a directed automorphism: `spine = initial · period^ω` together
/// with the section at the initial segment. The data is a witness for the
/// section periodicity `g@(initial·period^k·w) = g@(initial·w)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpineData {
    pub initial: Vertex,
    pub period: Vertex,
    pub section_at_initial: Automorphism,
}

impl SpineData {
    pub fn ray(&self) -> Ray {
        Ray::new(self.initial.clone(), self.period.clone())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Classification {
    Finitary { depth: usize },
    Directed { spine: SpineData },
    BoundedOther,
    Unbounded,
}

impl Classification {
    pub fn tag(&self) -> &'static str {
        match self {
            Classification::Finitary { .. } => "finitary",
            Classification::Directed { .. } => "directed",
            Classification::BoundedOther => "bounded",
            Classification::Unbounded => "unbounded",
        }
    }
}

/// Non-identity states reachable from the root, with the sub-graph of
/// transitions that stay on non-identity states.
struct ActiveGraph {
    states: Vec<StateId>,
    /// edges[i] = (letter, target index) pairs
    edges: Vec<Vec<(u8, usize)>>,
}

fn active_graph(g: &Automorphism) -> ActiveGraph {
    let mut states = Vec::new();
    let mut index = HashMap::new();
    if g.root_state() != 0 {
        index.insert(g.root_state(), 0);
        states.push(g.root_state());
    }
    let mut i = 0;
    while i < states.len() {
        let s = states[i];
        for c in g.alphabet().letters() {
            let t = g.succ_at(s, c);
            if t != 0 && !index.contains_key(&t) {
                index.insert(t, states.len());
                states.push(t);
            }
        }
        i += 1;
    }
    let edges = states
        .iter()
        .map(|&s| {
            g.alphabet()
                .letters()
                .filter_map(|c| {
                    let t = g.succ_at(s, c);
                    index.get(&t).map(|&j| (c, j))
                })
                .collect()
        })
        .collect();
    ActiveGraph { states, edges }
}

/// Tarjan strongly connected components; returns component id per node.
fn sccs(edges: &[Vec<(u8, usize)>]) -> (Vec<usize>, usize) {
    let n = edges.len();
    let mut comp = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut num = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut on_stack = vec![false; n];
    let mut counter = 0usize;
    let mut ncomp = 0usize;

    enum Frame {
        Enter(usize),
        Resume(usize, usize),
    }
    for start in 0..n {
        if num[start] != usize::MAX {
            continue;
        }
        let mut frames = vec![Frame::Enter(start)];
        while let Some(frame) = frames.pop() {
            match frame {
                Frame::Enter(v) => {
                    num[v] = counter;
                    low[v] = counter;
                    counter += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    frames.push(Frame::Resume(v, 0));
                }
                Frame::Resume(v, mut ei) => {
                    let mut descend = None;
                    while ei < edges[v].len() {
                        let (_, w) = edges[v][ei];
                        ei += 1;
                        if num[w] == usize::MAX {
                            descend = Some(w);
                            break;
                        } else if on_stack[w] {
                            low[v] = low[v].min(num[w]);
                        }
                    }
                    if let Some(w) = descend {
                        frames.push(Frame::Resume(v, ei));
                        frames.push(Frame::Enter(w));
                        continue;
                    }
                    if low[v] == num[v] {
                        while let Some(w) = stack.pop() {
                            on_stack[w] = false;
                            comp[w] = ncomp;
                            if w == v {
                                break;
                            }
                        }
                        ncomp += 1;
                    } else if let Some(Frame::Resume(parent, _)) = frames.last() {
                        let p = *parent;
                        low[p] = low[p].min(low[v]);
                    }
                }
            }
        }
    }
    (comp, ncomp)
}

struct CycleInfo {
    comp: Vec<usize>,
    /// component is a cycle (nontrivial SCC or self-loop)
    cyclic: Vec<bool>,
    /// every cyclic component is a simple cycle (one in-component out-edge per node)
    simple: bool,
    /// node can reach some cyclic component
    live: Vec<bool>,
}

fn cycle_info(graph: &ActiveGraph) -> CycleInfo {
    let n = graph.edges.len();
    let (comp, ncomp) = sccs(&graph.edges);
    let mut size = vec![0usize; ncomp];
    for &c in &comp {
        size[c] += 1;
    }
    let mut cyclic = vec![false; ncomp];
    let mut simple = true;
    for v in 0..n {
        let internal: Vec<_> = graph.edges[v].iter().filter(|&&(_, w)| comp[w] == comp[v]).collect();
        if size[comp[v]] > 1 || internal.iter().any(|&&(_, w)| w == v) {
            cyclic[comp[v]] = true;
            if internal.len() != 1 {
                simple = false;
            }
        }
    }
    let mut live = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| cyclic[comp[v]]).collect();
    for &v in &stack {
        live[v] = true;
    }
    let mut rev = vec![Vec::new(); n];
    for v in 0..n {
        for &(_, w) in &graph.edges[v] {
            rev[w].push(v);
        }
    }
    while let Some(v) = stack.pop() {
        for &u in &rev[v] {
            if !live[u] {
                live[u] = true;
                stack.push(u);
            }
        }
    }
    CycleInfo { comp, cyclic, simple, live }
}

/// `Some(depth)` iff the automorphism is finitary: all sections at levels
/// `>= depth` are trivial, and `depth` is smallest with that property.
pub fn finitary_depth(g: &Automorphism) -> Option<usize> {
    let graph = active_graph(g);
    if graph.states.is_empty() {
        return Some(0); // identity
    }
    let info = cycle_info(&graph);
    if info.live[0] {
        return None;
    }
    // longest path from the root through non-identity states, plus one
    let mut memo = vec![None::<usize>; graph.edges.len()];
    fn longest(v: usize, edges: &[Vec<(u8, usize)>], memo: &mut Vec<Option<usize>>) -> usize {
        if let Some(d) = memo[v] {
            return d;
        }
        let d = 1 + edges[v].iter().map(|&(_, w)| longest(w, edges, memo)).max().unwrap_or(0);
        memo[v] = Some(d);
        d
    }
    Some(longest(0, &graph.edges, &mut memo))
}

/// Exact number of nontrivial sections at each level `0..=max_level`; the
/// brute-force growth oracle for the boundedness criterion.
pub fn nontrivial_section_counts(g: &Automorphism, max_level: usize) -> Vec<u64> {
    let graph = active_graph(g);
    let n = graph.edges.len();
    if n == 0 {
        return vec![0; max_level + 1];
    }
    let mut counts = Vec::with_capacity(max_level + 1);
    let mut cur = vec![0u64; n];
    cur[0] = 1;
    counts.push(1);
    for _ in 0..max_level {
        let mut next = vec![0u64; n];
        for (count, edges) in cur.iter().zip(&graph.edges) {
            if *count > 0 {
                for &(_, w) in edges {
                    next[w] = next[w].saturating_add(*count);
                }
            }
        }
        counts.push(next.iter().sum());
        cur = next;
    }
    counts
}

/// The cycle criterion for boundedness.
pub fn is_bounded(g: &Automorphism) -> bool {
    let graph = active_graph(g);
    if graph.states.is_empty() {
        return true;
    }
    let info = cycle_info(&graph);
    if !info.simple {
        return false;
    }
    // no path from one cycle to a different cycle
    let ncomp = info.cyclic.len();
    let mut comp_edges = vec![Vec::new(); ncomp];
    for v in 0..graph.edges.len() {
        for &(_, w) in &graph.edges[v] {
            if info.comp[v] != info.comp[w] {
                comp_edges[info.comp[v]].push(info.comp[w]);
            }
        }
    }
    for start in 0..ncomp {
        if !info.cyclic[start] {
            continue;
        }
        let mut seen = vec![false; ncomp];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(c) = stack.pop() {
            for &d in &comp_edges[c] {
                if !seen[d] {
                    if info.cyclic[d] {
                        return false;
                    }
                    seen[d] = true;
                    stack.push(d);
                }
            }
        }
    }
    true
}

/// Spine of a bounded non-finitary automorphism with a unique all-nontrivial
/// ray. Returns the minimal witness: `initial` ends where the forced walk
/// first enters the state cycle, `period` reads once around the cycle, so
/// `g@initial == g@(initial·period)` holds on the nose.
pub fn spine(g: &Automorphism) -> Result<SpineData, ClassifyError> {
    let graph = active_graph(g);
    if graph.states.is_empty() {
        return Err(ClassifyError::NotDirected("the identity has no nontrivial ray"));
    }
    let info = cycle_info(&graph);
    if !info.live[0] {
        return Err(ClassifyError::NotDirected("finitary: no infinite nontrivial ray"));
    }
    if !info.simple {
        return Err(ClassifyError::NotDirected("a state lies on two cycles"));
    }
    let mut path_letters: Vec<u8> = Vec::new();
    let mut visited_at: HashMap<usize, usize> = HashMap::new();
    let mut v = 0usize;
    loop {
        if let Some(&start) = visited_at.get(&v) {
            let initial = Vertex::from_letters(path_letters[..start].to_vec());
            let period = Vertex::from_letters(path_letters[start..].to_vec());
            let section_at_initial = g.section(&initial);
            return Ok(SpineData { initial, period, section_at_initial });
        }
        visited_at.insert(v, path_letters.len());
        let live_edges: Vec<_> = graph.edges[v].iter().filter(|&&(_, w)| info.live[w]).collect();
        match live_edges.len() {
            0 => return Err(ClassifyError::NotDirected("walk died before reaching a cycle")),
            1 => {
                let &&(c, w) = live_edges.first().unwrap();
                path_letters.push(c);
                v = w;
            }
            _ => return Err(ClassifyError::NotDirected("multiple all-nontrivial rays")),
        }
    }
}

/// Directional depth along a finite vertex; `Infinite` when no prefix
/// (including the full vertex) has a trivial section.
pub fn directional_depth_vertex(g: &Automorphism, v: &Vertex) -> Depth {
    let mut s = g.root_state();
    if s == 0 {
        return Depth::Finite(0);
    }
    for (i, &c) in v.letters().iter().enumerate() {
        s = g.succ_at(s, c);
        if s == 0 {
            return Depth::Finite(i + 1);
        }
    }
    Depth::Infinite
}

/// Directional depth along a ray; infinity is detected by repetition of the
/// (state, position-in-period) pair.
pub fn directional_depth_ray(g: &Automorphism, r: &Ray) -> Depth {
    let mut s = g.root_state();
    if s == 0 {
        return Depth::Finite(0);
    }
    for (i, &c) in r.initial().letters().iter().enumerate() {
        s = g.succ_at(s, c);
        if s == 0 {
            return Depth::Finite(i + 1);
        }
    }
    let mut seen: HashMap<(StateId, usize), ()> = HashMap::new();
    let mut depth = r.initial().len();
    let mut pos = 0usize;
    loop {
        if seen.insert((s, pos), ()).is_some() {
            return Depth::Infinite;
        }
        for _ in 0..r.period().len() {
            let c = r.period().letters()[pos];
            s = g.succ_at(s, c);
            depth += 1;
            pos = (pos + 1) % r.period().len();
            if s == 0 {
                return Depth::Finite(depth);
            }
        }
    }
}

/// A boundary point or a vertex: the two kinds of track a decoration may
/// follow.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Track {
    Ray(Ray),
    Vertex(Vertex),
}

impl Track {
    pub fn depth(&self, g: &Automorphism) -> Depth {
        match self {
            Track::Ray(r) => directional_depth_ray(g, r),
            Track::Vertex(v) => directional_depth_vertex(g, v),
        }
    }

    pub fn advance(&self, g: &Automorphism) -> Track {
        match self {
            Track::Ray(r) => Track::Ray(g.apply_ray(r)),
            Track::Vertex(v) => Track::Vertex(g.apply(v)),
        }
    }
}

/// A word whose letters carry their directional depth along the evolving
/// track.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DecoratedWord(pub Vec<(GenId, Depth)>);

impl DecoratedWord {
    pub fn max_finite(&self) -> Option<usize> {
        self.0.iter().filter_map(|(_, d)| d.finite()).max()
    }

    pub fn has_infinite(&self) -> bool {
        self.0.iter().any(|(_, d)| !d.is_finite())
    }
}

/// Decorates `w` with respect to the track: `a_i` is the directional depth of
/// the i-th letter along the track as moved by the previous letters.
pub fn decorate(track: &Track, w: &Word, gens: &GeneratingSet) -> DecoratedWord {
    let mut cur = track.clone();
    let mut out = Vec::with_capacity(w.len());
    for &g in &w.0 {
        let m = gens.machine(g);
        out.push((g, cur.depth(m)));
        cur = cur.advance(m);
    }
    DecoratedWord(out)
}

/// Dispatcher over the classification procedures.
pub fn classify(g: &Automorphism) -> Classification {
    if let Some(depth) = finitary_depth(g) {
        return Classification::Finitary { depth };
    }
    if !is_bounded(g) {
        return Classification::Unbounded;
    }
    match spine(g) {
        Ok(spine) => Classification::Directed { spine },
        Err(_) => Classification::BoundedOther,
    }
}

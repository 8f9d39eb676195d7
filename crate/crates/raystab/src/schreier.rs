//! Finite-level Schreier graphs, closed-walk counting, Green-function
//! coefficients and stabilized rooted balls.
//!
//! Walk counts use big-integer vectors over a labeled adjacency structure;
//! nothing here is floating point. The level graphs double as the independent
//! combinatorial oracle for the language and series pipelines.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::par;
use crate::tree::{GeneratingSet, Ray, TreeError, Vertex};

#[derive(Debug, Error)]
pub enum SchreierError {
    #[error("base vertex has length {got}, expected level {level}")]
    BaseLengthMismatch { level: usize, got: usize },
    #[error("generating set is not symmetric")]
    NotSymmetric,
    #[error("walk counts did not stabilize below level {0}")]
    NoStabilization(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// The level-`n` Schreier graph: vertices are level-`n` words, with one
/// labeled edge `v -> v·x` per generator `x`. A full graph carries all `d^n`
/// vertices; a component graph only the orbit of the base.
#[derive(Clone, Debug)]
pub struct LevelGraph {
    pub level: usize,
    pub gen_names: Vec<String>,
    pub vertices: Vec<Vertex>,
    /// `targets[g][i]` = local index of `vertices[i] · gens[g]`, if materialized
    pub targets: Vec<Vec<Option<u32>>>,
    pub base: u32,
}

impl LevelGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn base_vertex(&self) -> &Vertex {
        &self.vertices[self.base as usize]
    }

    fn edges_sorted(&self) -> Vec<(String, String, &str)> {
        let mut edges = Vec::new();
        for (g, row) in self.targets.iter().enumerate() {
            for (i, tgt) in row.iter().enumerate() {
                if let Some(t) = tgt {
                    edges.push((
                        vertex_label(&self.vertices[i]),
                        vertex_label(&self.vertices[*t as usize]),
                        self.gen_names[g].as_str(),
                    ));
                }
            }
        }
        edges.sort();
        edges
    }
}

fn vertex_label(v: &Vertex) -> String {
    if v.is_empty() {
        "eps".to_string()
    } else {
        v.to_string()
    }
}

/// Builds the complete level graph on all `d^n` vertices.
pub fn level_graph(gens: &GeneratingSet, n: usize, base: &Vertex) -> Result<LevelGraph, SchreierError> {
    if base.len() != n {
        return Err(SchreierError::BaseLengthMismatch { level: n, got: base.len() });
    }
    let d = gens.alphabet().degree() as usize;
    let vertices = gens.alphabet().level(n);
    let size = vertices.len();

    // per generator: image index of every vertex, computed level by level by
    // carrying (image index, machine state) down the tree
    let parallel = par::parallel_available();
    let targets = par::map_indices(parallel, gens.len(), |g| {
        let m = gens.machine(g as u16);
        let mut img: Vec<u32> = vec![0];
        let mut state: Vec<u32> = vec![m.root_state()];
        for _ in 0..n {
            let mut img2 = vec![0u32; img.len() * d];
            let mut state2 = vec![0u32; img.len() * d];
            for (i, (&iv, &sv)) in img.iter().zip(&state).enumerate() {
                for c in 0..d as u8 {
                    let child = i * d + c as usize;
                    img2[child] = iv * d as u32 + m.perm_at(sv, c) as u32;
                    state2[child] = m.succ_at(sv, c);
                }
            }
            img = img2;
            state = state2;
        }
        img.into_iter().map(Some).collect::<Vec<_>>()
    });

    let base_idx = vertex_index(base, d);
    debug_assert!((base_idx as usize) < size);
    Ok(LevelGraph {
        level: n,
        gen_names: gens.names().to_vec(),
        vertices,
        targets,
        base: base_idx,
    })
}

fn vertex_index(v: &Vertex, d: usize) -> u32 {
    v.letters().iter().fold(0u32, |acc, &c| acc * d as u32 + c as u32)
}

/// Builds only the connected component of the base (orbit under the
/// generators), for levels where the full graph would be too large.
pub fn level_graph_component(
    gens: &GeneratingSet,
    n: usize,
    base: &Vertex,
) -> Result<LevelGraph, SchreierError> {
    if base.len() != n {
        return Err(SchreierError::BaseLengthMismatch { level: n, got: base.len() });
    }
    let mut vertices = vec![base.clone()];
    let mut index: HashMap<Vertex, u32> = HashMap::new();
    index.insert(base.clone(), 0);
    let mut targets: Vec<Vec<Option<u32>>> = vec![Vec::new(); gens.len()];
    let mut i = 0usize;
    while i < vertices.len() {
        let v = vertices[i].clone();
        for g in gens.ids() {
            let img = gens.machine(g).apply(&v);
            let id = *index.entry(img.clone()).or_insert_with(|| {
                vertices.push(img);
                (vertices.len() - 1) as u32
            });
            let row = &mut targets[g as usize];
            debug_assert_eq!(row.len(), i);
            row.push(Some(id));
        }
        i += 1;
    }
    Ok(LevelGraph { level: n, gen_names: gens.names().to_vec(), vertices, targets, base: 0 })
}

/// Exact closed-walk counts at the base, by length `0..=max_len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkCounts(pub Vec<BigUint>);

impl WalkCounts {
    pub fn as_u64(&self) -> Option<Vec<u64>> {
        self.0.iter().map(|c| u64::try_from(c).ok()).collect()
    }
}

pub fn closed_walk_counts(graph: &LevelGraph, max_len: usize) -> WalkCounts {
    closed_walk_counts_with(graph, max_len, par::parallel_available())
}

/// As [`closed_walk_counts`], with explicit parallelism choice (benchmark
/// hook). One labeled-adjacency application per length, pushing the count
/// vector forward from the base indicator.
pub fn closed_walk_counts_with(graph: &LevelGraph, max_len: usize, parallel: bool) -> WalkCounts {
    let size = graph.vertex_count();
    // reverse adjacency: incoming[v] = list of sources with an edge into v
    let mut incoming: Vec<Vec<u32>> = vec![Vec::new(); size];
    for row in &graph.targets {
        for (src, tgt) in row.iter().enumerate() {
            if let Some(t) = tgt {
                incoming[*t as usize].push(src as u32);
            }
        }
    }
    let mut counts = Vec::with_capacity(max_len + 1);
    let mut vec: Vec<BigUint> = vec![BigUint::zero(); size];
    vec[graph.base as usize] = BigUint::one();
    counts.push(BigUint::one());
    for _ in 0..max_len {
        let next = par::map_indices(parallel, size, |v| {
            let mut acc = BigUint::zero();
            for &src in &incoming[v] {
                acc += &vec[src as usize];
            }
            acc
        });
        vec = next;
        counts.push(vec[graph.base as usize].clone());
    }
    WalkCounts(counts)
}

/// Return probabilities of the simple random walk: `p^(m) = c_m / |X|^m`.
pub fn green_coeffs(
    gens: &GeneratingSet,
    graph: &LevelGraph,
    max_len: usize,
) -> Result<Vec<BigRational>, SchreierError> {
    if !gens.is_symmetric() {
        return Err(SchreierError::NotSymmetric);
    }
    let counts = closed_walk_counts(graph, max_len);
    let x = BigUint::from(gens.len());
    let mut denom = BigUint::one();
    let mut out = Vec::with_capacity(max_len + 1);
    for c in counts.0 {
        out.push(BigRational::new(c.into(), denom.clone().into()));
        denom *= &x;
    }
    Ok(out)
}

/// Closed-walk counts at the prefix of `a·b^ω`, with the level chosen
/// automatically: the level doubles until the counts for lengths `<= max_len`
/// are unchanged twice in a row. Returns the counts and the level used.
pub fn stabilized_walk_counts(
    gens: &GeneratingSet,
    a: &Vertex,
    b: &Vertex,
    max_len: usize,
) -> Result<(WalkCounts, usize), SchreierError> {
    let ray = Ray::new(a.clone(), b.clone());
    let mut n = (a.len() + 2 * b.len()).max(2);
    let mut history: Vec<(usize, WalkCounts)> = Vec::new();
    loop {
        let graph = level_graph_component(gens, n, &ray.prefix(n))?;
        let counts = closed_walk_counts(&graph, max_len);
        history.push((n, counts));
        if history.len() >= 3 {
            let k = history.len();
            if history[k - 1].1 == history[k - 2].1 && history[k - 2].1 == history[k - 3].1 {
                let (n0, counts) = history.swap_remove(k - 3);
                return Ok((counts, n0));
            }
        }
        n *= 2;
        if n > 1 << 20 {
            return Err(SchreierError::NoStabilization(n));
        }
    }
}

/// The radius-`r` ball of the boundary Schreier graph at the ray, computed as
/// the stabilized ball of level graphs at growing prefixes. The level is
/// raised until two successive balls are label-isomorphic via the identity on
/// vertex prefixes.
pub fn rooted_ball(
    gens: &GeneratingSet,
    ray: &Ray,
    radius: usize,
) -> Result<LevelGraph, SchreierError> {
    let mut n = (ray.initial().len() + ray.period().len() + radius).max(1);
    let mut prev: Option<(LevelGraph, BallShape)> = None;
    loop {
        let graph = level_graph_component(gens, n, &ray.prefix(n))?;
        let ball = extract_ball(&graph, radius);
        let shape = ball_shape(&ball);
        if let Some((prev_ball, prev_shape)) = prev {
            if project_shape(&shape, n) == Some(prev_shape) {
                return Ok(prev_ball);
            }
        }
        prev = Some((ball, shape));
        n *= 2;
        if n > 1 << 20 {
            return Err(SchreierError::NoStabilization(n));
        }
    }
}

type BallShape = Vec<(Vertex, usize, Vertex)>;

fn ball_shape(ball: &LevelGraph) -> BallShape {
    let mut shape = Vec::new();
    for (g, row) in ball.targets.iter().enumerate() {
        for (i, tgt) in row.iter().enumerate() {
            if let Some(t) = tgt {
                shape.push((ball.vertices[i].clone(), g, ball.vertices[*t as usize].clone()));
            }
        }
    }
    shape.sort();
    shape
}

/// Projects a shape at level n to level n/2 by truncating vertex words;
/// `None` if some endpoint pair collides, which also means not isomorphic.
fn project_shape(shape: &BallShape, n: usize) -> Option<BallShape> {
    let half = n / 2;
    let mut out: BallShape = shape
        .iter()
        .map(|(u, g, v)| (u.prefix(half), *g, v.prefix(half)))
        .collect();
    out.sort();
    out.dedup();
    if out.len() != shape.len() {
        return None;
    }
    Some(out)
}

fn extract_ball(graph: &LevelGraph, radius: usize) -> LevelGraph {
    let size = graph.vertex_count();
    let mut dist = vec![usize::MAX; size];
    dist[graph.base as usize] = 0;
    // undirected BFS over labeled edges
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); size];
    for row in &graph.targets {
        for (src, tgt) in row.iter().enumerate() {
            if let Some(t) = tgt {
                neighbors[src].push(*t);
                neighbors[*t as usize].push(src as u32);
            }
        }
    }
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(graph.base);
    while let Some(v) = queue.pop_front() {
        if dist[v as usize] == radius {
            continue;
        }
        for &w in &neighbors[v as usize] {
            if dist[w as usize] == usize::MAX {
                dist[w as usize] = dist[v as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    let keep: Vec<usize> = (0..size).filter(|&v| dist[v] <= radius).collect();
    let mut local = HashMap::new();
    let mut vertices = Vec::with_capacity(keep.len());
    for (li, &v) in keep.iter().enumerate() {
        local.insert(v as u32, li as u32);
        vertices.push(graph.vertices[v].clone());
    }
    let targets = graph
        .targets
        .iter()
        .map(|row| {
            keep.iter()
                .map(|&v| row[v].and_then(|t| local.get(&t).copied()))
                .collect()
        })
        .collect();
    LevelGraph {
        level: graph.level,
        gen_names: graph.gen_names.clone(),
        vertices,
        targets,
        base: local[&graph.base],
    }
}

/// Deterministic DOT rendering: vertices sorted, edges sorted by
/// (source, label, target), base drawn as a double circle.
pub fn export_dot(graph: &LevelGraph) -> String {
    let mut out = String::new();
    out.push_str("digraph schreier {\n  rankdir=LR;\n");
    let mut names: Vec<String> = graph.vertices.iter().map(vertex_label).collect();
    names.sort();
    let base = vertex_label(graph.base_vertex());
    for name in &names {
        if *name == base {
            let _ = writeln!(out, "  \"{name}\" [shape=doublecircle];");
        } else {
            let _ = writeln!(out, "  \"{name}\";");
        }
    }
    let mut edges = graph.edges_sorted();
    edges.dedup();
    for (src, tgt, label) in edges {
        let _ = writeln!(out, "  \"{src}\" -> \"{tgt}\" [label=\"{label}\"];");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stab::enumerate_wp;
    use crate::tree::fixtures::{dihedral, img_z2i};
    use crate::tree::Alphabet;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s, Alphabet::new(2).unwrap()).unwrap()
    }

    #[test]
    fn level_one_dihedral_edges() {
        let gens = dihedral();
        let g = level_graph(&gens, 1, &v("1")).unwrap();
        assert_eq!(g.vertex_count(), 2);
        // a swaps 0 and 1, b fixes both
        assert_eq!(g.targets[0], vec![Some(1), Some(0)]);
        assert_eq!(g.targets[1], vec![Some(0), Some(1)]);
    }

    #[test]
    fn level_zero_is_a_point_with_loops() {
        let gens = dihedral();
        let g = level_graph(&gens, 0, &Vertex::root()).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.targets[0], vec![Some(0)]);
        assert_eq!(g.targets[1], vec![Some(0)]);
    }

    #[test]
    fn level_three_is_a_path_with_loop_at_the_spine_end() {
        let gens = dihedral();
        let g = level_graph(&gens, 3, &v("111")).unwrap();
        assert_eq!(g.vertex_count(), 8);
        // b-loops at the two ends of the line: 111 and 110
        let bi = 1usize;
        let loops: Vec<usize> = (0..8).filter(|&i| g.targets[bi][i] == Some(i as u32)).collect();
        assert_eq!(loops, vec![6, 7]);
        // a has no fixed points, and undirected degrees form a path: the
        // component of 111 is a line of 8 vertices
        let comp = level_graph_component(&gens, 3, &v("111")).unwrap();
        assert_eq!(comp.vertex_count(), 8);
    }

    #[test]
    fn walk_counts_match_the_word_oracle() {
        let gens = dihedral();
        let g = level_graph_component(&gens, 12, &v("111111111111")).unwrap();
        let counts = closed_walk_counts(&g, 3).as_u64().unwrap();
        assert_eq!(counts, vec![1, 1, 2, 3]);
        assert_eq!(closed_walk_counts(&g, 0).as_u64().unwrap(), vec![1]);

        // based one step off the spine end: the b-loop is still reachable,
        // so an odd closed walk exists at length 3 (a, loop, a)
        let base = v("011111111111");
        let g2 = level_graph_component(&gens, 12, &base).unwrap();
        let counts2 = closed_walk_counts(&g2, 3).as_u64().unwrap();
        assert_eq!(counts2, vec![1, 0, 2, 1]);
        // cross-check against direct word enumeration on the same base ray
        let wp = enumerate_wp(&gens, &v("0"), &v("1"), 3).unwrap();
        assert_eq!(counts2, wp.counts_by_length);
    }

    #[test]
    fn stabilized_counts_agree_with_enumeration() {
        let gens = dihedral();
        let (counts, level) = stabilized_walk_counts(&gens, &v(""), &v("1"), 8).unwrap();
        let wp = enumerate_wp(&gens, &v(""), &v("1"), 8).unwrap();
        assert_eq!(counts.as_u64().unwrap(), wp.counts_by_length);
        assert!(level >= 2);

        let img = img_z2i();
        let (counts, _) = stabilized_walk_counts(&img, &v(""), &v("10"), 6).unwrap();
        let wp = enumerate_wp(&img, &v(""), &v("10"), 6).unwrap();
        assert_eq!(counts.as_u64().unwrap(), wp.counts_by_length);
    }

    #[test]
    fn green_coefficients() {
        let gens = dihedral();
        let g = level_graph_component(&gens, 12, &v("111111111111")).unwrap();
        let green = green_coeffs(&gens, &g, 3).unwrap();
        let expect: Vec<BigRational> = [(1, 1), (1, 2), (1, 2), (3, 8)]
            .iter()
            .map(|&(n, d)| BigRational::new(BigUint::from(n as u32).into(), BigUint::from(d as u32).into()))
            .collect();
        assert_eq!(green, expect);
        assert!(green.iter().all(|p| *p <= BigRational::one()));

        let mut asym = GeneratingSet::new(gens.alphabet());
        let odo = crate::tree::Automorphism::from_states(
            gens.alphabet(),
            vec![(vec![1, 0], vec![1, 0])],
            0,
        )
        .unwrap();
        asym.add("t", odo).unwrap();
        let g = level_graph_component(&asym, 2, &v("11")).unwrap();
        assert!(matches!(green_coeffs(&asym, &g, 2), Err(SchreierError::NotSymmetric)));
    }

    #[test]
    fn walk_counts_parallel_matches_sequential() {
        let gens = dihedral();
        let g = level_graph(&gens, 8, &v("11111111")).unwrap();
        let s = closed_walk_counts_with(&g, 12, false);
        let p = closed_walk_counts_with(&g, 12, true);
        assert_eq!(s, p);
    }

    #[test]
    fn rooted_balls() {
        let gens = dihedral();
        let eta = Ray::new(Vertex::root(), v("1"));
        let ball0 = rooted_ball(&gens, &eta, 0).unwrap();
        assert_eq!(ball0.vertex_count(), 1);
        let ball2 = rooted_ball(&gens, &eta, 2).unwrap();
        // base, a-neighbor, then one more along the line
        assert_eq!(ball2.vertex_count(), 3);
        // b-loop at the base
        let bi = 1usize;
        assert_eq!(ball2.targets[bi][ball2.base as usize], Some(ball2.base));

        let alt = Ray::new(Vertex::root(), v("01"));
        let ball1 = rooted_ball(&gens, &alt, 1).unwrap();
        // no loop at the base: both generators move the base vertex
        for row in &ball1.targets {
            assert_ne!(row[ball1.base as usize], Some(ball1.base));
        }
    }

    #[test]
    fn level_projection_preserves_labeled_edges() {
        // dropping the last letter maps level-(n+1) edges onto level-n edges
        for gens in [dihedral(), img_z2i()] {
            let lo = level_graph(&gens, 3, &gens.alphabet().level(3)[0]).unwrap();
            let hi = level_graph(&gens, 4, &gens.alphabet().level(4)[0]).unwrap();
            let lo_index: HashMap<&Vertex, usize> =
                lo.vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
            for (g, row) in hi.targets.iter().enumerate() {
                for (i, tgt) in row.iter().enumerate() {
                    let src = hi.vertices[i].prefix(3);
                    let dst = hi.vertices[tgt.unwrap() as usize].prefix(3);
                    let li = lo_index[&src];
                    assert_eq!(lo.targets[g][li], Some(lo_index[&dst] as u32));
                }
            }
        }
    }

    #[test]
    fn closed_walks_are_label_reversal_invariant() {
        // with a symmetric generating set, reversing every edge preserves the
        // closed-walk counts at the base
        let gens = dihedral();
        let g = level_graph(&gens, 6, &v("111111")).unwrap();
        let counts = closed_walk_counts(&g, 8);
        let mut reversed = g.clone();
        let size = g.vertex_count();
        for (gi, row) in g.targets.iter().enumerate() {
            let mut rev = vec![None; size];
            for (src, tgt) in row.iter().enumerate() {
                rev[tgt.unwrap() as usize] = Some(src as u32);
            }
            reversed.targets[gi] = rev;
        }
        assert_eq!(closed_walk_counts(&reversed, 8), counts);
    }

    #[test]
    fn dot_export_is_deterministic() {
        let gens = dihedral();
        let g = level_graph(&gens, 1, &v("1")).unwrap();
        let dot = export_dot(&g);
        assert_eq!(dot, export_dot(&g));
        assert!(dot.contains("\"1\" [shape=doublecircle];"));
        assert!(dot.contains("\"0\" -> \"1\" [label=\"a\"];"));
    }
}

//! Moves on graph maps and the train track driver.
//!
//! Every move is a homotopy equivalence `q: G → G'` with homotopy inverse `p: G' → G`.
//! The new map is `[q ∘ f ∘ p]`, the new marking `[q(M)]` and the new labels `L ∘ p`,
//! so marking compatibility is preserved up to one inner automorphism.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{gate_structure, is_train_track, GateStructure};
use crate::graphs::{edge_of, fwd, tighten_dirs, Dir, EdgePath, MarkedGraph, Turn, VertexTag};
use crate::maps::{is_irreducible, rose_representative, transition_matrix, GraphMap, Irreducibility};
use crate::spectral::{
    assign_metric, metric_eigen, perron_vector_any, pf_eigen, spectral_radius, PerronData, DEFAULT_TOL,
};
use crate::words::{Endomorphism, Word};

pub const DEFAULT_BUDGET: usize = 10_000;
const STAGNATION_LIMIT: usize = 50;
const MAX_ROTATIONS: usize = 8;

type StateKey = (Vec<(usize, usize)>, Vec<usize>, Vec<Vec<Dir>>);

fn state_key(f: &GraphMap) -> StateKey {
    (f.graph.ends.clone(), f.vertex_images.clone(), f.edge_images.clone())
}

struct Homotopy {
    graph: MarkedGraph,
    qv: Vec<usize>,
    qe: Vec<Vec<Dir>>,
    pv: Vec<usize>,
    pe: Vec<Vec<Dir>>,
}

fn map_dirs(images: &[Vec<Dir>], dirs: &[Dir]) -> Vec<Dir> {
    let mut out = Vec::new();
    for &d in dirs {
        let img = &images[edge_of(d)];
        if d > 0 {
            out.extend_from_slice(img);
        } else {
            out.extend(img.iter().rev().map(|x| -x));
        }
    }
    out
}

fn apply(f: &GraphMap, h: Homotopy) -> (GraphMap, Vec<usize>) {
    let old = &f.graph;
    let mut g = h.graph;
    g.base = h.qv[old.base];
    g.marking = old
        .marking
        .iter()
        .map(|m| EdgePath::new(g.base, tighten_dirs(&map_dirs(&h.qe, &m.dirs))))
        .collect();
    g.labels = h.pe.iter().map(|p| old.read(p)).collect();
    g.lengths = None;
    let vertex_images = h.pv.iter().map(|&v| h.qv[f.vertex_images[v]]).collect();
    let edge_images = h.pe.iter().map(|p| tighten_dirs(&map_dirs(&h.qe, &f.image_dirs(p)))).collect();
    let out = GraphMap { graph: g, vertex_images, edge_images, endo: f.endo.clone() };
    (out, h.qv)
}

fn blank_graph(tags: Vec<VertexTag>, ends: Vec<(usize, usize)>) -> MarkedGraph {
    MarkedGraph { tags, ends, base: 0, marking: Vec::new(), labels: Vec::new(), lengths: None }
}

fn identity_paths(n: usize) -> Vec<Vec<Dir>> {
    (0..n).map(|e| vec![fwd(e)]).collect()
}

/// Word read around a closed path, transported to the base vertex.
fn loop_word(g: &MarkedGraph, dirs: &[Dir], at: usize) -> Word {
    let parent = g.spanning_tree(g.base, &|_| true);
    let tau = g.tree_path(&parent, g.base, at);
    let mut p = tau.dirs.clone();
    p.extend_from_slice(dirs);
    p.extend(tau.dirs.iter().rev().map(|d| -d));
    g.read(&p)
}

/// Splits edge `edge` at the point mapping to the vertex after `position` edges of its image.
pub fn subdivide(f: &GraphMap, edge: usize, position: usize) -> Result<GraphMap> {
    Ok(subdivide_tracked(f, edge, position)?.0)
}

fn subdivide_tracked(f: &GraphMap, e: usize, pos: usize) -> Result<(GraphMap, Vec<usize>)> {
    let img = f.edge_images.get(e).ok_or(Error::InvalidGraph(format!("no edge {}", e + 1)))?.clone();
    if pos == 0 || pos >= img.len() {
        return Err(Error::NotAVertexImage { edge: e + 1, position: pos });
    }
    let g = &f.graph;
    let (nv, ne) = (g.num_vertices(), g.num_edges());
    let (o, t) = g.ends[e];
    let mut tags = g.tags.clone();
    tags.push(VertexTag::Free);
    let mut ends = g.ends.clone();
    ends[e] = (o, nv);
    ends.push((nv, t));
    let mut qe = identity_paths(ne);
    qe[e] = vec![fwd(e), fwd(ne)];
    let mut pe = identity_paths(ne);
    pe.push(Vec::new());
    let mut pv: Vec<usize> = (0..nv).collect();
    pv.push(t);
    let h = Homotopy { graph: blank_graph(tags, ends), qv: (0..nv).collect(), qe: qe.clone(), pv, pe };
    let (mut out, qv) = apply(f, h);
    out.edge_images[e] = tighten_dirs(&map_dirs(&qe, &img[..pos]));
    out.edge_images[ne] = tighten_dirs(&map_dirs(&qe, &img[pos..]));
    out.vertex_images[nv] = g.terminus(img[pos - 1]);
    Ok((out, qv))
}

/// Identifies two directions with equal images. Returns the map and the vertex map.
fn full_fold(f: &GraphMap, d1: Dir, d2: Dir) -> Result<(GraphMap, Vec<usize>)> {
    let g = &f.graph;
    let (a, b) = (g.terminus(d1), g.terminus(d2));
    if a == b {
        return Err(Error::NotInjective(loop_word(g, &[-d1, d2], a)));
    }
    let e2 = edge_of(d2);
    let (nv, ne) = (g.num_vertices(), g.num_edges());
    let mut vmap = vec![0; nv];
    let mut pv = Vec::new();
    for x in 0..nv {
        if x != b {
            vmap[x] = pv.len();
            pv.push(x);
        }
    }
    vmap[b] = vmap[a];
    let mut emap = vec![usize::MAX; ne];
    let mut kept = Vec::new();
    for x in 0..ne {
        if x != e2 {
            emap[x] = kept.len();
            kept.push(x);
        }
    }
    let q_dir = |d: Dir| -> Dir {
        let n = fwd(emap[edge_of(d)]);
        if d > 0 {
            n
        } else {
            -n
        }
    };
    let mut qe: Vec<Vec<Dir>> = (0..ne).map(|x| if x == e2 { Vec::new() } else { vec![fwd(emap[x])] }).collect();
    qe[e2] = vec![if d2 > 0 { q_dir(d1) } else { -q_dir(d1) }];
    let ends = kept.iter().map(|&x| (vmap[g.ends[x].0], vmap[g.ends[x].1])).collect();
    let pe = kept
        .iter()
        .map(|&x| {
            let (o, t) = g.ends[x];
            let mut p = Vec::new();
            if o == b {
                p.extend([-d1, d2]);
            }
            p.push(fwd(x));
            if t == b {
                p.extend([-d2, d1]);
            }
            p
        })
        .collect();
    let tags = pv.iter().map(|&x| g.tags[x].clone()).collect();
    Ok(apply(f, Homotopy { graph: blank_graph(tags, ends), qv: vmap, qe, pv, pe }))
}

fn compose_vmaps(first: &[usize], second: &[usize]) -> Vec<usize> {
    first.iter().map(|&v| second[v]).collect()
}

/// Folds the maximal common initial segments of the images of a turn, then collapses
/// the pretrivial forest.
pub fn fold(f: &GraphMap, turn: Turn) -> Result<GraphMap> {
    Ok(fold_tracked(f, turn)?.0)
}

fn fold_tracked(f: &GraphMap, turn: Turn) -> Result<(GraphMap, Vec<usize>)> {
    let (raw, vm) = fold_raw(f, turn)?;
    let (out, vm2) = normalize_tracked(&raw)?;
    Ok((out, compose_vmaps(&vm, &vm2)))
}

fn fold_raw(f: &GraphMap, Turn(mut d1, mut d2): Turn) -> Result<(GraphMap, Vec<usize>)> {
    let g = &f.graph;
    if d1 == d2 || g.origin(d1) != g.origin(d2) {
        return Err(Error::IllegalFoldRequest);
    }
    let (i1, i2) = (f.image(d1), f.image(d2));
    let k = i1.iter().zip(&i2).take_while(|(x, y)| x == y).count();
    if k == 0 {
        return Err(Error::IllegalFoldRequest);
    }
    let mut cur = f.clone();
    let mut vm: Vec<usize> = (0..g.num_vertices()).collect();
    for which in 0..2 {
        let d = if which == 0 { d1 } else { d2 };
        let len = cur.image(d).len();
        if k < len {
            let e = edge_of(d);
            let ne = cur.num_edges();
            let pos = if d > 0 { k } else { len - k };
            let (next, qv) = subdivide_tracked(&cur, e, pos)?;
            // `+e` keeps its origin-side half; `-e` now starts along the new edge.
            let remap = |x: Dir| if edge_of(x) == e && x < 0 { -fwd(ne) } else { x };
            d1 = remap(d1);
            d2 = remap(d2);
            vm = compose_vmaps(&vm, &qv);
            cur = next;
        }
    }
    let (out, qv) = full_fold(&cur, d1, d2)?;
    Ok((out, compose_vmaps(&vm, &qv)))
}

/// Collapses a free vertex of valence one together with its edge.
pub fn remove_valence_one(f: &GraphMap, v: usize) -> Result<GraphMap> {
    let (raw, _) = valence_one_raw(f, v)?;
    Ok(normalize_tracked(&raw)?.0)
}

fn valence_one_raw(f: &GraphMap, v: usize) -> Result<(GraphMap, Vec<usize>)> {
    let g = &f.graph;
    if v >= g.num_vertices() || !g.is_free(v) || g.valence(v) != 1 || g.num_vertices() == 1 {
        return Err(Error::NotValenceOne(v));
    }
    let d = g.dirs_at(v)[0];
    let e = edge_of(d);
    let w = g.terminus(d);
    let (nv, ne) = (g.num_vertices(), g.num_edges());
    let mut vmap = vec![0; nv];
    let mut pv = Vec::new();
    for x in 0..nv {
        if x != v {
            vmap[x] = pv.len();
            pv.push(x);
        }
    }
    vmap[v] = vmap[w];
    let kept: Vec<usize> = (0..ne).filter(|&x| x != e).collect();
    let mut emap = vec![usize::MAX; ne];
    for (i, &x) in kept.iter().enumerate() {
        emap[x] = i;
    }
    let qe = (0..ne).map(|x| if x == e { Vec::new() } else { vec![fwd(emap[x])] }).collect();
    let ends = kept.iter().map(|&x| (vmap[g.ends[x].0], vmap[g.ends[x].1])).collect();
    let pe = kept.iter().map(|&x| vec![fwd(x)]).collect();
    let tags = pv.iter().map(|&x| g.tags[x].clone()).collect();
    Ok(apply(f, Homotopy { graph: blank_graph(tags, ends), qv: vmap, qe, pv, pe }))
}

/// Removes a free vertex of valence two by collapsing the incident edge with the larger
/// Perron frequency (ties: the lower index) and stretching the other across it.
pub fn remove_valence_two(f: &GraphMap, v: usize) -> Result<GraphMap> {
    let (raw, _) = valence_two_raw(f, v)?;
    Ok(normalize_tracked(&raw)?.0)
}

/// Right Perron vector of the transition matrix: the asymptotic frequency with which
/// iterated images cross each edge.
fn crossing_frequencies(f: &GraphMap) -> Vec<f64> {
    let m = transition_matrix(f);
    match pf_eigen(&m, DEFAULT_TOL) {
        Ok(pf) => pf.eigenvector,
        Err(_) if !m.is_zero() => perron_vector_any(&m, DEFAULT_TOL),
        Err(_) => vec![1.0; f.num_edges()],
    }
}

fn valence_two_raw(f: &GraphMap, v: usize) -> Result<(GraphMap, Vec<usize>)> {
    let g = &f.graph;
    if v >= g.num_vertices() || !g.is_free(v) || g.valence(v) != 2 {
        return Err(Error::NotValenceTwo(v));
    }
    let at = g.dirs_at(v);
    let (ea, eb) = (edge_of(at[0]), edge_of(at[1]));
    if ea == eb {
        return Err(Error::NotValenceTwo(v));
    }
    let freq = crossing_frequencies(f);
    // Collapsing `c` and stretching `k` over it gives M' ≤ λ on the restricted vector
    // exactly when freq[k] ≤ freq[c].
    let (c, k) = if freq[eb] > freq[ea] + 1e-12 { (eb, ea) } else { (ea, eb) };
    // dk points into v along k; dc leaves v along c.
    let dk = -*at.iter().find(|&&d| edge_of(d) == k).expect("incident edge");
    let dc = *at.iter().find(|&&d| edge_of(d) == c).expect("incident edge");
    let (x, y) = (g.origin(dk), g.terminus(dc));
    let (nv, ne) = (g.num_vertices(), g.num_edges());
    let mut vmap = vec![0; nv];
    let mut pv = Vec::new();
    for z in 0..nv {
        if z != v {
            vmap[z] = pv.len();
            pv.push(z);
        }
    }
    vmap[v] = vmap[y];
    let kept: Vec<usize> = (0..ne).filter(|&z| z != c).collect();
    let mut emap = vec![usize::MAX; ne];
    for (i, &z) in kept.iter().enumerate() {
        emap[z] = i;
    }
    let nk = fwd(emap[k]);
    let qe = (0..ne)
        .map(|z| {
            if z == c {
                Vec::new()
            } else if z == k {
                vec![nk]
            } else {
                vec![fwd(emap[z])]
            }
        })
        .collect();
    let ends = kept
        .iter()
        .map(|&z| {
            if z == k {
                if dk > 0 {
                    (vmap[x], vmap[y])
                } else {
                    (vmap[y], vmap[x])
                }
            } else {
                (vmap[g.ends[z].0], vmap[g.ends[z].1])
            }
        })
        .collect();
    let pe = kept
        .iter()
        .map(|&z| if z == k { if dk > 0 { vec![dk, dc] } else { vec![-dc, -dk] } } else { vec![fwd(z)] })
        .collect();
    let tags = pv.iter().map(|&z| g.tags[z].clone()).collect();
    Ok(apply(f, Homotopy { graph: blank_graph(tags, ends), qv: vmap, qe, pv, pe }))
}

/// Collapses a forest of edges to points. Fails with `InvalidGraph` if `forest` has a cycle.
pub fn collapse_forest(f: &GraphMap, forest: &[usize]) -> Result<GraphMap> {
    Ok(collapse_forest_tracked(f, forest)?.0)
}

/// Closed path inside `forest` through edge `e` when adding `e` closes a cycle.
fn forest_cycle(g: &MarkedGraph, forest: &[usize]) -> Option<(Vec<Dir>, usize)> {
    let mut allowed = vec![false; g.num_edges()];
    for &e in forest {
        let (o, t) = g.ends[e];
        let parent = g.spanning_tree(o, &|x| allowed[x]);
        if o == t || parent[t].is_some() {
            let mut cyc = vec![fwd(e)];
            cyc.extend(g.tree_path(&parent, o, t).reverse(g).dirs);
            return Some((cyc, o));
        }
        allowed[e] = true;
    }
    None
}

fn collapse_forest_tracked(f: &GraphMap, forest: &[usize]) -> Result<(GraphMap, Vec<usize>)> {
    let g = &f.graph;
    if forest_cycle(g, forest).is_some() {
        return Err(Error::InvalidGraph("collapsed edge set contains a cycle".into()));
    }
    let (nv, ne) = (g.num_vertices(), g.num_edges());
    let mut in_forest = vec![false; ne];
    for &e in forest {
        in_forest[e] = true;
    }
    let mut comp = vec![usize::MAX; nv];
    let mut reps = Vec::new();
    let mut parents = Vec::new();
    for v in 0..nv {
        if comp[v] == usize::MAX {
            let parent = g.spanning_tree(v, &|x| in_forest[x]);
            for w in 0..nv {
                if w == v || parent[w].is_some() {
                    comp[w] = reps.len();
                }
            }
            reps.push(v);
            parents.push(parent);
        }
    }
    let kept: Vec<usize> = (0..ne).filter(|&e| !in_forest[e]).collect();
    let mut emap = vec![usize::MAX; ne];
    for (i, &e) in kept.iter().enumerate() {
        emap[e] = i;
    }
    let qe = (0..ne).map(|e| if in_forest[e] { Vec::new() } else { vec![fwd(emap[e])] }).collect();
    let ends = kept.iter().map(|&e| (comp[g.ends[e].0], comp[g.ends[e].1])).collect();
    let pe = kept
        .iter()
        .map(|&e| {
            let (o, t) = g.ends[e];
            let (co, ct) = (comp[o], comp[t]);
            let mut p = g.tree_path(&parents[co], reps[co], o).dirs;
            p.push(fwd(e));
            p.extend(g.tree_path(&parents[ct], reps[ct], t).reverse(g).dirs);
            p
        })
        .collect();
    let tags = reps
        .iter()
        .enumerate()
        .map(|(c, _)| {
            (0..nv)
                .filter(|&v| comp[v] == c)
                .find_map(|v| match &g.tags[v] {
                    VertexTag::NonFree(s) => Some(VertexTag::NonFree(s.clone())),
                    VertexTag::Free => None,
                })
                .unwrap_or(VertexTag::Free)
        })
        .collect();
    Ok(apply(f, Homotopy { graph: blank_graph(tags, ends), qv: comp, qe, pv: reps, pe }))
}

/// Edges some iterate of which is a point: no edge on a cycle of the transition digraph
/// is reachable from them.
pub fn pretrivial_edges(f: &GraphMap) -> Vec<usize> {
    let m = transition_matrix(f);
    let n = m.size();
    let mut cyclic = vec![false; n];
    for c in m.components() {
        if c.len() > 1 || m.get(c[0], c[0]) > 0 {
            for &i in &c {
                cyclic[i] = true;
            }
        }
    }
    (0..n).filter(|&e| m.forward_closure(&[e]).iter().all(|&i| !cyclic[i])).collect()
}

/// Collapses the pretrivial forest; a pretrivial cycle certifies non-injectivity.
pub fn normalize(f: &GraphMap) -> Result<GraphMap> {
    Ok(normalize_tracked(f)?.0)
}

fn normalize_tracked(f: &GraphMap) -> Result<(GraphMap, Vec<usize>)> {
    let mut cur = f.clone();
    let mut vm: Vec<usize> = (0..f.graph.num_vertices()).collect();
    loop {
        let pre = pretrivial_edges(&cur);
        if pre.is_empty() {
            return Ok((cur, vm));
        }
        if let Some((cyc, at)) = forest_cycle(&cur.graph, &pre) {
            return Err(Error::NotInjective(loop_word(&cur.graph, &cyc, at)));
        }
        let (next, qv) = collapse_forest_tracked(&cur, &pre)?;
        vm = compose_vmaps(&vm, &qv);
        cur = next;
    }
}

/// Removes a vertex with a single gate by folding its directions together and then
/// removing the resulting valence-one vertex.
pub fn fix_one_gate_vertex(f: &GraphMap, v: usize) -> Result<GraphMap> {
    let g = &f.graph;
    if v >= g.num_vertices() || !g.is_free(v) || gate_structure(f)?.num_gates(v) != 1 {
        return Err(Error::NotOneGate(v));
    }
    let mut cur = f.clone();
    let mut v = Some(v);
    for _ in 0..4 * (f.num_edges() + 1) {
        let Some(x) = v else { break };
        let gs = gate_structure(&cur)?;
        if gs.num_gates(x) != 1 {
            break;
        }
        let at = cur.graph.dirs_at(x);
        if at.len() == 1 {
            let (next, _) = valence_one_raw(&cur, x)?;
            return normalize(&next);
        }
        let mut pairs = Vec::new();
        for i in 0..at.len() {
            for j in i + 1..at.len() {
                pairs.push(Turn(at[i], at[j]));
            }
        }
        let (next, vm) = if let Some(&t) = pairs.iter().find(|t| gs.df(t.0) == gs.df(t.1)) {
            fold_tracked(&cur, t)?
        } else {
            let t = pairs.into_iter().min_by_key(|&t| gs.depth(t).unwrap_or(usize::MAX)).expect("valence ≥ 2");
            let k = gs.depth(t).expect("one gate") - 1;
            let (n, _) = fold_tracked(&cur, Turn(gs.df_pow(t.0, k), gs.df_pow(t.1, k)))?;
            return Ok(n);
        };
        v = vm.get(x).copied();
        cur = next;
    }
    Ok(cur)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    ForestCollapse,
    ValenceOne,
    ValenceTwo,
    OneGate,
    Fold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub kind: MoveKind,
    pub location: String,
    pub lambda_before: f64,
    pub lambda_after: f64,
    pub edges_after: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveLog {
    pub moves: Vec<MoveRecord>,
}

impl MoveLog {
    /// Stretch factors never increase beyond numerical tolerance.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.moves.iter().all(|m| m.lambda_after <= m.lambda_before + tol)
    }
}

/// Output of the driver: a train track map carrying its Perron–Frobenius metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTrack {
    pub map: GraphMap,
    pub perron: PerronData,
    pub log: MoveLog,
}

impl TrainTrack {
    pub fn lambda(&self) -> f64 {
        self.perron.lambda
    }

    pub fn gates(&self) -> GateStructure {
        gate_structure(&self.map).expect("train track edge images are nonempty")
    }
}

/// Driver options.
#[derive(Clone, Copy, Debug)]
pub struct DriverOptions {
    pub budget: usize,
    pub tol: f64,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions { budget: DEFAULT_BUDGET, tol: DEFAULT_TOL }
    }
}

pub fn train_track_algorithm(phi: &Endomorphism, budget: usize) -> Result<TrainTrack> {
    train_track_with(phi, DriverOptions { budget, ..DriverOptions::default() })
}

pub fn train_track_with(phi: &Endomorphism, opts: DriverOptions) -> Result<TrainTrack> {
    resume_train_track(rose_representative(phi), opts)
}

/// Runs the driver from an arbitrary representative, e.g. the state carried by
/// `BudgetExhausted`.
pub fn resume_train_track(start: GraphMap, opts: DriverOptions) -> Result<TrainTrack> {
    let mut f = start;
    let mut log = MoveLog::default();
    let mut rotation = 0usize;
    let mut neutral = 0usize;
    let radius = |f: &GraphMap| spectral_radius(&transition_matrix(f), opts.tol);
    // Moves are deterministic given the tie-break rotation, so a repeated pair means the
    // run cycles; each repeat advances the rotation until the state has used them all.
    let mut seen: HashMap<StateKey, usize> = HashMap::new();
    loop {
        if log.moves.len() >= opts.budget {
            return Err(Error::BudgetExhausted { budget: opts.budget, state: Box::new(f) });
        }
        let visits = seen.entry(state_key(&f)).or_insert(0);
        *visits += 1;
        if *visits > 1 {
            if *visits > MAX_ROTATIONS {
                return Err(Error::BudgetExhausted { budget: opts.budget, state: Box::new(f) });
            }
            rotation += 1;
            neutral = 0;
        }
        let before = radius(&f);
        let (kind, location, next) = match next_move(&f, rotation, opts.tol)? {
            Step::Done(tt) => {
                return Ok(TrainTrack { log, ..tt });
            }
            Step::Move(kind, location, next) => (kind, location, next),
        };
        let after = radius(&next);
        if (after - before).abs() <= 10.0 * opts.tol {
            neutral += 1;
            if neutral >= STAGNATION_LIMIT {
                rotation += 1;
                neutral = 0;
            }
        } else {
            neutral = 0;
        }
        log.moves.push(MoveRecord {
            kind,
            location,
            lambda_before: before,
            lambda_after: after,
            edges_after: next.num_edges(),
        });
        f = next;
    }
}

enum Step {
    Done(TrainTrack),
    Move(MoveKind, String, GraphMap),
}

fn next_move(f: &GraphMap, rotation: usize, tol: f64) -> Result<Step> {
    let g = &f.graph;
    let pre = pretrivial_edges(f);
    if !pre.is_empty() {
        let next = normalize(f)?;
        return Ok(Step::Move(MoveKind::ForestCollapse, format!("edges {:?}", plus_one(&pre)), next));
    }
    if let Some(v) = (0..g.num_vertices()).find(|&v| g.is_free(v) && g.valence(v) == 1 && g.num_vertices() > 1) {
        return Ok(Step::Move(MoveKind::ValenceOne, format!("vertex {v}"), remove_valence_one(f, v)?));
    }
    let m = transition_matrix(f);
    if m.is_permutation() {
        let perron = PerronData { lambda: 1.0, radius: 0.0, eigenvector: vec![1.0; m.size()], tol };
        let map = assign_metric(f, &perron);
        return Ok(Step::Done(TrainTrack { map, perron, log: MoveLog::default() }));
    }
    if let Irreducibility::Reducible { witness } = is_irreducible(&m)? {
        if forest_cycle(g, &witness).is_none() {
            let next = normalize(&collapse_forest(f, &witness)?)?;
            return Ok(Step::Move(MoveKind::ForestCollapse, format!("edges {:?}", plus_one(&witness)), next));
        }
        return Err(Error::NotIrreducible { witness });
    }
    if let Some(v) = (0..g.num_vertices()).find(|&v| g.is_free(v) && g.valence(v) == 2 && distinct_edges(g, v)) {
        return Ok(Step::Move(MoveKind::ValenceTwo, format!("vertex {v}"), remove_valence_two(f, v)?));
    }
    let gs = gate_structure(f)?;
    if let Some(v) = (0..g.num_vertices()).find(|&v| g.is_free(v) && gs.num_gates(v) == 1) {
        return Ok(Step::Move(MoveKind::OneGate, format!("vertex {v}"), fix_one_gate_vertex(f, v)?));
    }
    if let Some(turn) = choose_fold(f, &gs, rotation) {
        let location = format!("turn ({}, {})", turn.0, turn.1);
        return Ok(Step::Move(MoveKind::Fold, location, fold(f, turn)?));
    }
    let perron = metric_eigen(f, tol)?;
    let map = assign_metric(f, &perron);
    debug_assert!(is_train_track(&map));
    Ok(Step::Done(TrainTrack { map, perron, log: MoveLog::default() }))
}

fn plus_one(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

fn distinct_edges(g: &MarkedGraph, v: usize) -> bool {
    let at = g.dirs_at(v);
    edge_of(at[0]) != edge_of(at[1])
}

/// Among illegal turns crossed by edge images, one of least depth, pushed forward to
/// where the two directions first share an image direction.
fn choose_fold(f: &GraphMap, gs: &GateStructure, rotation: usize) -> Option<Turn> {
    let mut cands: Vec<(usize, Turn)> = Vec::new();
    for img in &f.edge_images {
        for i in gs.illegal_positions(img) {
            let t = Turn(-img[i], img[i + 1]);
            cands.push((gs.depth(t).expect("illegal turn"), t));
        }
    }
    let best = cands.iter().map(|c| c.0).min()?;
    let mut tied: Vec<Turn> = cands.into_iter().filter(|c| c.0 == best).map(|c| c.1.sorted()).collect();
    tied.dedup();
    let t = tied[rotation % tied.len()];
    Some(Turn(gs.df_pow(t.0, best - 1), gs.df_pow(t.1, best - 1)))
}

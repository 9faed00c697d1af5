//! Marked finite graphs, edge paths and turns.
//!
//! An oriented edge (a direction) is a nonzero `Dir`: edge `e` (0-based) traversed
//! forwards is `e + 1`, backwards `-(e + 1)`. On a rose the directions coincide
//! with the letters of the alphabet.

pub mod stallings;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::words::{Alphabet, Word};

pub use stallings::{stallings_core, subgroup_conjugate_into, CoreGraph};

pub type Dir = i32;

#[inline]
pub fn edge_of(d: Dir) -> usize {
    (d.unsigned_abs() - 1) as usize
}

#[inline]
pub fn fwd(e: usize) -> Dir {
    e as Dir + 1
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexTag {
    Free,
    NonFree(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgePath {
    pub start: usize,
    pub dirs: Vec<Dir>,
}

impl EdgePath {
    pub fn trivial(v: usize) -> Self {
        EdgePath { start: v, dirs: Vec::new() }
    }

    pub fn new(start: usize, dirs: Vec<Dir>) -> Self {
        EdgePath { start, dirs }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn end(&self, g: &MarkedGraph) -> usize {
        self.dirs.last().map_or(self.start, |&d| g.terminus(d))
    }

    pub fn reverse(&self, g: &MarkedGraph) -> EdgePath {
        EdgePath { start: self.end(g), dirs: self.dirs.iter().rev().map(|d| -d).collect() }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &EdgePath) -> EdgePath {
        let mut dirs = self.dirs.clone();
        dirs.extend_from_slice(&other.dirs);
        EdgePath { start: self.start, dirs }
    }

    pub fn tighten(&self) -> EdgePath {
        EdgePath { start: self.start, dirs: tighten_dirs(&self.dirs) }
    }

    pub fn is_tight(&self) -> bool {
        self.dirs.windows(2).all(|w| w[1] != -w[0])
    }

    /// Interior turns `(d̄_i, d_{i+1})` as pairs of directions at the junction vertex.
    pub fn turns(&self) -> impl Iterator<Item = Turn> + '_ {
        self.dirs.windows(2).map(|w| Turn(-w[0], w[1]))
    }

    pub fn slice(&self, g: &MarkedGraph, i: usize, j: usize) -> EdgePath {
        let start = if i == 0 { self.start } else { g.terminus(self.dirs[i - 1]) };
        EdgePath { start, dirs: self.dirs[i..j].to_vec() }
    }
}

/// Free reduction of a direction sequence.
pub fn tighten_dirs(dirs: &[Dir]) -> Vec<Dir> {
    let mut out: Vec<Dir> = Vec::with_capacity(dirs.len());
    for &d in dirs {
        if out.last() == Some(&-d) {
            out.pop();
        } else {
            out.push(d);
        }
    }
    out
}

/// Tightens a path.
pub fn tighten(p: &EdgePath) -> EdgePath {
    p.tighten()
}

/// A pair of directions with a common origin. Degenerate iff both are equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Turn(pub Dir, pub Dir);

impl Turn {
    pub fn is_degenerate(&self) -> bool {
        self.0 == self.1
    }

    /// Unordered normal form.
    pub fn sorted(self) -> Turn {
        if self.0 <= self.1 {
            self
        } else {
            Turn(self.1, self.0)
        }
    }
}

/// A finite connected graph with a marking.
///
/// `marking[i]` is a loop at `base` representing generator `i`; `labels[e]` is the
/// word read along `e` by a homotopy inverse of the marking. Reading labels along
/// `marking[i]` yields generator `i` up to one conjugator shared by all generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedGraph {
    pub tags: Vec<VertexTag>,
    pub ends: Vec<(usize, usize)>,
    pub base: usize,
    pub marking: Vec<EdgePath>,
    pub labels: Vec<Word>,
    pub lengths: Option<Vec<f64>>,
}

impl MarkedGraph {
    pub fn num_vertices(&self) -> usize {
        self.tags.len()
    }

    pub fn num_edges(&self) -> usize {
        self.ends.len()
    }

    pub fn rank(&self) -> usize {
        self.marking.len()
    }

    #[inline]
    pub fn origin(&self, d: Dir) -> usize {
        let (o, t) = self.ends[edge_of(d)];
        if d > 0 {
            o
        } else {
            t
        }
    }

    #[inline]
    pub fn terminus(&self, d: Dir) -> usize {
        self.origin(-d)
    }

    /// All directions in the order `1, -1, 2, -2, ...`.
    pub fn all_dirs(&self) -> Vec<Dir> {
        (1..=self.num_edges() as Dir).flat_map(|d| [d, -d]).collect()
    }

    /// Directions originating at `v`, in the order of `all_dirs`.
    pub fn dirs_at(&self, v: usize) -> Vec<Dir> {
        self.all_dirs().into_iter().filter(|&d| self.origin(d) == v).collect()
    }

    pub fn valence(&self, v: usize) -> usize {
        self.ends.iter().map(|&(o, t)| usize::from(o == v) + usize::from(t == v)).sum()
    }

    pub fn is_free(&self, v: usize) -> bool {
        self.tags[v] == VertexTag::Free
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.lengths.as_ref().map_or(1.0, |l| l[e])
    }

    pub fn dir_length(&self, d: Dir) -> f64 {
        self.edge_length(edge_of(d))
    }

    pub fn path_length(&self, p: &EdgePath) -> f64 {
        self.dirs_length(&p.dirs)
    }

    pub fn dirs_length(&self, dirs: &[Dir]) -> f64 {
        dirs.iter().map(|&d| self.dir_length(d)).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.edge_length(e)).fold(f64::INFINITY, f64::min)
    }

    /// Word read along a path.
    pub fn read(&self, dirs: &[Dir]) -> Word {
        let mut raw = Vec::new();
        for &d in dirs {
            let w = &self.labels[edge_of(d)];
            if d > 0 {
                raw.extend_from_slice(w.letters());
            } else {
                raw.extend(w.letters().iter().rev().map(|x| -x));
            }
        }
        Word::reduce(&raw)
    }

    /// Tight loop at `base` representing `w` through the marking.
    pub fn loop_of_word(&self, w: &Word) -> EdgePath {
        let mut dirs = Vec::new();
        for &l in w.letters() {
            let m = &self.marking[(l.unsigned_abs() - 1) as usize];
            if l > 0 {
                dirs.extend_from_slice(&m.dirs);
            } else {
                dirs.extend(m.dirs.iter().rev().map(|d| -d));
            }
        }
        EdgePath { start: self.base, dirs: tighten_dirs(&dirs) }
    }

    /// Cyclically tight loop representing the conjugacy class of `w`.
    pub fn cyclic_loop_of_word(&self, w: &Word) -> EdgePath {
        let p = self.loop_of_word(w);
        self.cyclically_tighten(&p)
    }

    /// Removes cancelling first/last directions of a closed path.
    pub fn cyclically_tighten(&self, p: &EdgePath) -> EdgePath {
        let dirs = tighten_dirs(&p.dirs);
        let n = dirs.len();
        let mut k = 0;
        while 2 * k + 1 < n && dirs[k] == -dirs[n - 1 - k] {
            k += 1;
        }
        let start = if k == 0 { p.start } else { self.terminus(dirs[k - 1]) };
        EdgePath { start, dirs: dirs[k..n - k].to_vec() }
    }

    /// Breadth-first spanning tree: for each vertex, the direction used to reach it from `root`.
    pub fn spanning_tree(&self, root: usize, allowed: &dyn Fn(usize) -> bool) -> Vec<Option<Dir>> {
        let mut parent = vec![None; self.num_vertices()];
        let mut seen = vec![false; self.num_vertices()];
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for d in self.dirs_at(v) {
                if !allowed(edge_of(d)) {
                    continue;
                }
                let w = self.terminus(d);
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(d);
                    queue.push_back(w);
                }
            }
        }
        parent
    }

    /// Path from `root` to `v` along a spanning tree produced by `spanning_tree`.
    pub fn tree_path(&self, parent: &[Option<Dir>], root: usize, v: usize) -> EdgePath {
        let mut dirs = Vec::new();
        let mut x = v;
        while x != root {
            let d = parent[x].expect("vertex not reached by spanning tree");
            dirs.push(d);
            x = self.origin(d);
        }
        dirs.reverse();
        EdgePath { start: root, dirs }
    }

    pub fn is_connected(&self) -> bool {
        if self.num_vertices() == 0 {
            return false;
        }
        let parent = self.spanning_tree(0, &|_| true);
        (1..self.num_vertices()).all(|v| parent[v].is_some())
    }

    /// Structural checks: connectivity, closed marking loops, Euler characteristic, lengths.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGraph(m));
        if self.base >= self.num_vertices() {
            return bad("base vertex out of range".into());
        }
        if self.ends.iter().any(|&(o, t)| o >= self.num_vertices() || t >= self.num_vertices()) {
            return bad("edge endpoint out of range".into());
        }
        if !self.is_connected() {
            return bad("graph is disconnected".into());
        }
        if self.labels.len() != self.num_edges() {
            return bad("label count differs from edge count".into());
        }
        let all_free = self.tags.iter().all(|t| *t == VertexTag::Free);
        if all_free && self.num_edges() + 1 != self.num_vertices() + self.rank() {
            return bad("Euler characteristic does not match rank".into());
        }
        for (i, m) in self.marking.iter().enumerate() {
            if m.start != self.base || m.end(self) != self.base {
                return bad(format!("marking loop {i} is not closed at the base vertex"));
            }
            if m.dirs.windows(2).any(|w| self.terminus(w[0]) != self.origin(w[1])) {
                return bad(format!("marking loop {i} is not an edge path"));
            }
        }
        if let Some(l) = &self.lengths {
            if l.len() != self.num_edges() || l.iter().any(|&x| !(x > 0.0)) {
                return bad("edge lengths must be positive".into());
            }
        }
        Ok(())
    }
}

/// One vertex, one petal per generator, identity marking, unit metric.
pub fn rose(alphabet: &Alphabet) -> MarkedGraph {
    let n = alphabet.rank();
    MarkedGraph {
        tags: vec![VertexTag::Free],
        ends: vec![(0, 0); n],
        base: 0,
        marking: (0..n).map(|e| EdgePath::new(0, vec![fwd(e)])).collect(),
        labels: (0..n).map(Word::generator).collect(),
        lengths: Some(vec![1.0; n]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tighten_examples() {
        assert_eq!(tighten_dirs(&[1, -1, 2]), vec![2]);
        assert_eq!(tighten_dirs(&[1, 2, 3]), vec![1, 2, 3]);
        assert_eq!(tighten_dirs(&[1, 2, -2, -1, 3]), vec![3]);
    }

    #[test]
    fn rose_shapes() {
        for n in [1, 2, 5] {
            let g = rose(&Alphabet::standard(n));
            assert_eq!((g.num_vertices(), g.num_edges()), (1, n));
            assert_eq!(g.num_edges() + 1 - g.num_vertices(), n);
            g.validate().unwrap();
            for i in 0..n {
                assert_eq!(g.read(&g.marking[i].dirs), Word::generator(i));
            }
        }
    }

    #[test]
    fn cyclic_tightening() {
        let g = rose(&Alphabet::standard(2));
        let p = g.cyclic_loop_of_word(&Alphabet::standard(2).parse("a b a^-1").unwrap());
        assert_eq!(p.dirs, vec![2]);
    }
}

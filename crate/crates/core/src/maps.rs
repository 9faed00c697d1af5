//! Graph self-maps representing endomorphisms, and their transition matrices.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{edge_of, rose, tighten_dirs, Dir, EdgePath, MarkedGraph};
use crate::words::{common_conjugator, Endomorphism, Word};

/// A map `f: G → G` given on vertices and forward edges.
///
/// Invariant: each edge image is a tight edge path from `f(o(e))` to `f(t(e))`,
/// possibly empty when both endpoints map to the same vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMap {
    pub graph: MarkedGraph,
    pub vertex_images: Vec<usize>,
    pub edge_images: Vec<Vec<Dir>>,
    pub endo: Endomorphism,
}

impl GraphMap {
    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn image(&self, d: Dir) -> Vec<Dir> {
        let img = &self.edge_images[edge_of(d)];
        if d > 0 {
            img.clone()
        } else {
            img.iter().rev().map(|x| -x).collect()
        }
    }

    /// Untightened image of a direction sequence.
    pub fn image_dirs(&self, dirs: &[Dir]) -> Vec<Dir> {
        let mut out = Vec::new();
        for &d in dirs {
            out.extend(self.image(d));
        }
        out
    }

    /// `[f(p)]`.
    pub fn apply_path(&self, p: &EdgePath) -> EdgePath {
        EdgePath { start: self.vertex_images[p.start], dirs: tighten_dirs(&self.image_dirs(&p.dirs)) }
    }

    /// `[f^n(p)]`.
    pub fn iterate_path(&self, p: &EdgePath, n: usize) -> EdgePath {
        (0..n).fold(p.clone(), |q, _| self.apply_path(&q))
    }

    pub fn is_tight(&self) -> bool {
        self.edge_images.iter().all(|img| img.windows(2).all(|w| w[1] != -w[0]))
    }

    /// Structural checks on the domain graph and edge images.
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        let g = &self.graph;
        if self.vertex_images.len() != g.num_vertices() || self.edge_images.len() != g.num_edges() {
            return Err(Error::InvalidGraph("map size does not match graph".into()));
        }
        for (e, img) in self.edge_images.iter().enumerate() {
            let (o, t) = g.ends[e];
            let p = EdgePath::new(self.vertex_images[o], img.clone());
            if img.iter().any(|&d| edge_of(d) >= g.num_edges())
                || img.windows(2).any(|w| g.terminus(w[0]) != g.origin(w[1]))
                || img.first().is_some_and(|&d| g.origin(d) != p.start)
                || p.end(g) != self.vertex_images[t]
            {
                return Err(Error::InvalidGraph(format!("image of edge {} is not a path", e + 1)));
            }
        }
        Ok(())
    }

    /// Common conjugator witnessing that the map and the marking represent `endo`.
    pub fn marking_witness(&self) -> Option<Word> {
        let g = &self.graph;
        let us: Vec<Word> = g
            .marking
            .iter()
            .map(|m| g.read(&tighten_dirs(&self.image_dirs(&m.dirs))))
            .collect();
        common_conjugator(&us, self.endo.images())
    }

    /// Exact check that the labels are a homotopy inverse of the marking and that the
    /// map represents `endo` up to one inner automorphism.
    pub fn check_marking(&self) -> Result<Word> {
        let g = &self.graph;
        let reads: Vec<Word> = g.marking.iter().map(|m| g.read(&m.dirs)).collect();
        let gens: Vec<Word> = (0..g.rank()).map(Word::generator).collect();
        if common_conjugator(&reads, &gens).is_none() {
            return Err(Error::MarkingMismatch("labels do not invert the marking".into()));
        }
        self.marking_witness()
            .ok_or_else(|| Error::MarkingMismatch("map does not represent the endomorphism".into()))
    }

    /// Endomorphism `φ^k` is carried along with the map.
    pub fn power(&self, k: u32) -> GraphMap {
        assert!(k >= 1, "power must be positive");
        let mut out = self.clone();
        for _ in 1..k {
            out = compose(self, &out);
        }
        out
    }
}

/// `f ∘ g` for maps on the same graph; the carried endomorphism is `φ_f ∘ φ_g`.
pub fn compose(f: &GraphMap, g: &GraphMap) -> GraphMap {
    GraphMap {
        graph: f.graph.clone(),
        vertex_images: g.vertex_images.iter().map(|&v| f.vertex_images[v]).collect(),
        edge_images: g.edge_images.iter().map(|img| tighten_dirs(&f.image_dirs(img))).collect(),
        endo: f.endo.compose(&g.endo),
    }
}

/// Map on the rose sending petal `i` to the path spelling `φ(x_i)`.
pub fn rose_representative(phi: &Endomorphism) -> GraphMap {
    let graph = rose(phi.alphabet());
    GraphMap {
        graph,
        vertex_images: vec![0],
        edge_images: phi.images().iter().map(|w| w.letters().to_vec()).collect(),
        endo: phi.clone(),
    }
}

/// `power(f, k)` as a free function.
pub fn power(f: &GraphMap, k: u32) -> GraphMap {
    f.power(k)
}

/// `a[i][j]` counts crossings of edge `i` in either orientation by the image of edge `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub rows: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<u64>>) -> Self {
        TransitionMatrix { rows }
    }

    pub fn identity(n: usize) -> Self {
        TransitionMatrix { rows: (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect() }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.rows[i][j]
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|&x| x == 0)
    }

    pub fn mul(&self, other: &TransitionMatrix) -> TransitionMatrix {
        let n = self.size();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.rows[i][k] * other.rows[k][j]).sum()).collect())
            .collect();
        TransitionMatrix { rows }
    }

    pub fn pow(&self, k: u32) -> TransitionMatrix {
        (0..k).fold(TransitionMatrix::identity(self.size()), |acc, _| acc.mul(self))
    }

    pub fn transpose(&self) -> TransitionMatrix {
        let n = self.size();
        TransitionMatrix { rows: (0..n).map(|i| (0..n).map(|j| self.rows[j][i]).collect()).collect() }
    }

    /// Permutation matrix: every row and column has a single entry 1.
    pub fn is_permutation(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| {
            self.rows[i].iter().sum::<u64>() == 1 && (0..n).map(|k| self.rows[k][i]).sum::<u64>() == 1
        })
    }

    /// Strongly connected components of the digraph `j → i` for `a[i][j] > 0`,
    /// each sorted, listed in reverse topological order (sinks first).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        for j in 0..n {
            for i in 0..n {
                if self.rows[i][j] > 0 {
                    g.add_edge(nodes[j], nodes[i], ());
                }
            }
        }
        tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    /// Smallest superset of `seeds` closed under `j → i`, sorted.
    pub fn forward_closure(&self, seeds: &[usize]) -> Vec<usize> {
        let n = self.size();
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = seeds.to_vec();
        for &s in seeds {
            seen[s] = true;
        }
        while let Some(j) = stack.pop() {
            for i in 0..n {
                if self.rows[i][j] > 0 && !seen[i] {
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
        (0..n).filter(|&i| seen[i]).collect()
    }
}

pub fn transition_matrix(f: &GraphMap) -> TransitionMatrix {
    let n = f.num_edges();
    let mut rows = vec![vec![0u64; n]; n];
    for (j, img) in f.edge_images.iter().enumerate() {
        for &d in img {
            rows[edge_of(d)][j] += 1;
        }
    }
    TransitionMatrix { rows }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Irreducibility {
    Irreducible,
    /// A proper nonempty set of edges closed under the image relation.
    Reducible { witness: Vec<usize> },
}

impl Irreducibility {
    pub fn is_irreducible(&self) -> bool {
        matches!(self, Irreducibility::Irreducible)
    }
}

/// Strong connectivity of the transition digraph. When reducible, the witness is the
/// sink component containing the lowest index among all sink components.
pub fn is_irreducible(m: &TransitionMatrix) -> Result<Irreducibility> {
    if m.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let comps = m.components();
    if comps.len() == 1 {
        return Ok(Irreducibility::Irreducible);
    }
    let witness = comps
        .into_iter()
        .filter(|c| m.forward_closure(c).len() == c.len())
        .min_by_key(|c| c[0])
        .expect("a finite digraph has a sink component");
    Ok(Irreducibility::Reducible { witness })
}

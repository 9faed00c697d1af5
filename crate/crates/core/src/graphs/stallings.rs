//! Folded labeled graphs immersed in a marked graph. On a rose, labels are letters
//! and a core graph is the Stallings graph of a subgroup.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::words::Word;

use super::Dir;

#[derive(Clone, Debug, PartialEq)]
pub struct CoreGraph {
    /// Ambient vertex of each core vertex (always 0 over a rose).
    pub vertex_image: Vec<usize>,
    /// `(u, label, v)`: traversing forwards reads `label`, backwards reads `-label`.
    pub edges: Vec<(usize, Dir, usize)>,
    pub base: Option<usize>,
    adj: Vec<BTreeMap<Dir, usize>>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let n = self.0[y];
            self.0[y] = r;
            y = n;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.0[hi] = lo;
        true
    }
}

impl CoreGraph {
    fn build(vertex_image: Vec<usize>, edges: Vec<(usize, Dir, usize)>, base: Option<usize>) -> Self {
        let mut adj = vec![BTreeMap::new(); vertex_image.len()];
        for &(u, l, v) in &edges {
            adj[u].insert(l, v);
            adj[v].insert(-l, u);
        }
        CoreGraph { vertex_image, edges, base, adj }
    }

    /// Folds the wedge of `loops` (direction sequences closed at `base_image`).
    /// `terminus` gives the ambient endpoint of a direction.
    pub fn from_loops(loops: &[Vec<Dir>], base_image: usize, terminus: &dyn Fn(Dir) -> usize) -> Self {
        let mut images = vec![base_image];
        let mut edges = Vec::new();
        for lp in loops {
            let mut cur = 0;
            for (i, &d) in lp.iter().enumerate() {
                let next = if i + 1 == lp.len() {
                    0
                } else {
                    images.push(terminus(d));
                    images.len() - 1
                };
                edges.push((cur, d, next));
                cur = next;
            }
        }
        Self::fold(images, edges, 0)
    }

    fn fold(images: Vec<usize>, mut edges: Vec<(usize, Dir, usize)>, base: usize) -> Self {
        let n = images.len();
        let mut dsu = Dsu((0..n).collect());
        loop {
            let mut changed = false;
            let mut seen: BTreeMap<(usize, Dir), usize> = BTreeMap::new();
            for i in 0..edges.len() {
                let (u, l, v) = edges[i];
                let (u, v) = (dsu.find(u), dsu.find(v));
                for (x, lab, y) in [(u, l, v), (v, -l, u)] {
                    let y = dsu.find(y);
                    match seen.get(&(dsu.find(x), lab)) {
                        Some(&t) => changed |= dsu.union(t, y),
                        None => {
                            seen.insert((dsu.find(x), lab), y);
                        }
                    }
                }
            }
            for e in edges.iter_mut() {
                *e = (dsu.find(e.0), e.1, dsu.find(e.2));
            }
            let mut uniq = BTreeSet::new();
            edges.retain(|&(u, l, v)| {
                let key = if uniq.contains(&(v, -l, u)) { (v, -l, u) } else { (u, l, v) };
                uniq.insert(key)
            });
            if !changed {
                break;
            }
        }
        let mut relabel = vec![usize::MAX; n];
        let mut new_images = Vec::new();
        let root = dsu.find(base);
        relabel[root] = 0;
        new_images.push(images[root]);
        for v in 0..n {
            let r = dsu.find(v);
            if relabel[r] == usize::MAX {
                relabel[r] = new_images.len();
                new_images.push(images[r]);
            }
        }
        let edges = edges.into_iter().map(|(u, l, v)| (relabel[u], l, relabel[v])).collect();
        Self::build(new_images, edges, Some(0))
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_image.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Rank of the fundamental group (the graph is connected).
    pub fn rank(&self) -> usize {
        (self.num_edges() + 1).saturating_sub(self.num_vertices())
    }

    pub fn step(&self, v: usize, l: Dir) -> Option<usize> {
        self.adj[v].get(&l).copied()
    }

    /// Labels leaving `v`.
    pub fn out_labels(&self, v: usize) -> impl Iterator<Item = (Dir, usize)> + '_ {
        self.adj[v].iter().map(|(&l, &w)| (l, w))
    }

    pub fn read_from(&self, v: usize, labels: &[Dir]) -> Option<usize> {
        labels.iter().try_fold(v, |x, &l| self.step(x, l))
    }

    /// Membership of a word (over a rose) in the based subgroup.
    pub fn accepts(&self, w: &Word) -> bool {
        match self.base {
            Some(b) => self.read_from(b, w.letters()) == Some(b),
            None => false,
        }
    }

    /// Whether `labels` lifts to a path starting somewhere in this graph.
    pub fn readable(&self, labels: &[Dir]) -> bool {
        (0..self.num_vertices()).any(|v| self.read_from(v, labels).is_some())
    }

    /// Whether `labels` lifts to a closed path.
    pub fn cyclically_readable(&self, labels: &[Dir]) -> bool {
        (0..self.num_vertices()).any(|v| self.read_from(v, labels) == Some(v))
    }

    /// Basepoint-free core together with the label sequence from the old base to it.
    pub fn pruned(&self) -> (CoreGraph, Vec<Dir>) {
        let n = self.num_vertices();
        let mut alive = vec![true; n];
        let mut deg: Vec<usize> = (0..n).map(|v| self.adj[v].len()).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| deg[v] <= 1).collect();
        while let Some(v) = queue.pop_front() {
            if !alive[v] || deg[v] > 1 || alive.iter().filter(|&&a| a).count() == 1 {
                continue;
            }
            alive[v] = false;
            for (_, w) in self.out_labels(v) {
                if alive[w] {
                    deg[w] -= 1;
                    if deg[w] <= 1 {
                        queue.push_back(w);
                    }
                }
            }
        }
        let mut hair = Vec::new();
        if let Some(b) = self.base {
            let mut prev = vec![None; n];
            let mut seen = vec![false; n];
            seen[b] = true;
            let mut q = VecDeque::from([b]);
            let mut target = b;
            while let Some(v) = q.pop_front() {
                if alive[v] {
                    target = v;
                    break;
                }
                for (l, w) in self.out_labels(v) {
                    if !seen[w] {
                        seen[w] = true;
                        prev[w] = Some((v, l));
                        q.push_back(w);
                    }
                }
            }
            let mut x = target;
            while let Some((p, l)) = prev[x] {
                hair.push(l);
                x = p;
            }
            hair.reverse();
        }
        let mut idx = vec![usize::MAX; n];
        let mut images = Vec::new();
        for v in 0..n {
            if alive[v] {
                idx[v] = images.len();
                images.push(self.vertex_image[v]);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, _, v)| alive[u] && alive[v])
            .map(|&(u, l, v)| (idx[u], l, idx[v]))
            .collect();
        let base = self.base.filter(|&b| alive[b]).map(|b| idx[b]);
        (Self::build(images, edges, base), hair)
    }

    /// Shortest label path between two vertices (lexicographically least among shortest).
    pub fn path_between(&self, from: usize, to: usize) -> Option<Vec<Dir>> {
        let n = self.num_vertices();
        let mut prev: Vec<Option<(usize, Dir)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut q = VecDeque::from([from]);
        while let Some(v) = q.pop_front() {
            if v == to {
                break;
            }
            let mut outs: Vec<(Dir, usize)> = self.out_labels(v).collect();
            outs.sort_by_key(|&(l, _)| crate::words::letter_key(l));
            for (l, w) in outs {
                if !seen[w] {
                    seen[w] = true;
                    prev[w] = Some((v, l));
                    q.push_back(w);
                }
            }
        }
        if !seen[to] {
            return None;
        }
        let mut out = Vec::new();
        let mut x = to;
        while let Some((p, l)) = prev[x] {
            out.push(l);
            x = p;
        }
        out.reverse();
        Some(out)
    }

    /// Label-preserving map of `self` into `other` sending `v0 ↦ w0`, if one exists.
    pub fn morphism_into(&self, v0: usize, other: &CoreGraph, w0: usize) -> Option<Vec<usize>> {
        let mut map = vec![usize::MAX; self.num_vertices()];
        map[v0] = w0;
        let mut q = VecDeque::from([v0]);
        while let Some(v) = q.pop_front() {
            for (l, x) in self.out_labels(v) {
                let y = other.step(map[v], l)?;
                if map[x] == usize::MAX {
                    map[x] = y;
                    q.push_back(x);
                } else if map[x] != y {
                    return None;
                }
            }
        }
        Some(map)
    }

    /// Fiber product with `other`: components with a cycle, excluding the diagonal when
    /// `same` is set. Returns a witness loop label sequence for the first such component.
    pub fn nondiagonal_cycle(&self, other: &CoreGraph, same: bool) -> Option<Vec<Dir>> {
        let n = self.num_vertices();
        let m = other.num_vertices();
        let id = |a: usize, b: usize| a * m + b;
        let mut comp = vec![usize::MAX; n * m];
        for start in 0..n * m {
            if comp[start] != usize::MAX {
                continue;
            }
            let (a0, b0) = (start / m, start % m);
            comp[start] = start;
            let mut parent: BTreeMap<usize, (usize, Dir)> = BTreeMap::new();
            let mut verts = vec![start];
            let mut q = VecDeque::from([start]);
            let mut nedges = 0usize;
            let mut diagonal = same && a0 == b0;
            let mut extra: Option<(usize, Dir, usize)> = None;
            while let Some(x) = q.pop_front() {
                let (a, b) = (x / m, x % m);
                for (l, a2) in self.out_labels(a) {
                    if let Some(b2) = other.step(b, l) {
                        let y = id(a2, b2);
                        nedges += 1;
                        if comp[y] == usize::MAX {
                            comp[y] = start;
                            parent.insert(y, (x, l));
                            verts.push(y);
                            q.push_back(y);
                            diagonal |= same && a2 == b2;
                        } else if parent.get(&y) != Some(&(x, l)) && parent.get(&x) != Some(&(y, -l)) && extra.is_none() {
                            extra = Some((x, l, y));
                        }
                    }
                }
            }
            let edges = nedges / 2;
            if edges + 1 > verts.len() && !diagonal {
                let (x, l, y) = extra?;
                let path_to = |mut z: usize| {
                    let mut p = Vec::new();
                    while let Some(&(w, lab)) = parent.get(&z) {
                        p.push(lab);
                        z = w;
                    }
                    p.reverse();
                    p
                };
                let mut lp = path_to(x);
                lp.push(l);
                lp.extend(path_to(y).iter().rev().map(|d| -d));
                return Some(crate::graphs::tighten_dirs(&lp));
            }
        }
        None
    }
}

/// Based Stallings graph of `⟨generators⟩` and its basepoint-free core.
pub fn stallings_core(generators: &[Word]) -> Result<(CoreGraph, CoreGraph)> {
    let loops: Vec<Vec<Dir>> = generators
        .iter()
        .filter(|w| !w.is_empty())
        .map(|w| w.letters().to_vec())
        .collect();
    if loops.is_empty() {
        return Err(Error::EmptyGeneratorSet);
    }
    let based = CoreGraph::from_loops(&loops, 0, &|_| 0);
    let (free, _) = based.pruned();
    Ok((based, free))
}

/// Shortest `g` (then lexicographically least) with `P ≤ g·Q·g⁻¹`, both given as based
/// Stallings graphs over a rose.
pub fn subgroup_conjugate_into(p: &CoreGraph, q: &CoreGraph) -> Option<Word> {
    let (pcore, hair) = p.pruned();
    let (qcore, _) = q.pruned();
    let qb = q.base?;
    let v0 = 0;
    let t = Word::reduce(&hair);
    let mut best: Option<Word> = None;
    for w in 0..q.num_vertices() {
        if pcore.morphism_into(v0, q, w).is_none() {
            continue;
        }
        debug_assert!(qcore.num_vertices() > 0);
        let s = Word::reduce(&q.path_between(qb, w)?);
        let g = t.mul(&s.inverse());
        if best.as_ref().is_none_or(|b| g.shortlex_cmp(b).is_lt()) {
            best = Some(g);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Alphabet;

    fn w(s: &str) -> Word {
        Alphabet::standard(3).parse(s).unwrap()
    }

    #[test]
    fn single_loop() {
        let (b, f) = stallings_core(&[w("a")]).unwrap();
        assert_eq!((b.num_vertices(), b.num_edges()), (1, 1));
        assert_eq!(f.num_edges(), 1);
    }

    #[test]
    fn commutator_circle() {
        let (b, _) = stallings_core(&[w("a b a^-1 b^-1")]).unwrap();
        assert_eq!((b.num_vertices(), b.num_edges()), (4, 4));
        assert!(b.accepts(&w("b a b^-1 a^-1")));
        assert!(!b.accepts(&w("a b")));
    }

    #[test]
    fn wedge_after_folding() {
        let (b, _) = stallings_core(&[w("a a"), w("b")]).unwrap();
        assert_eq!((b.num_vertices(), b.num_edges()), (2, 3));
        assert!(b.accepts(&w("a a b")));
        assert!(!b.accepts(&w("a")));
    }

    #[test]
    fn empty_generators() {
        assert_eq!(stallings_core(&[]).unwrap_err(), Error::EmptyGeneratorSet);
        assert_eq!(stallings_core(&[Word::identity()]).unwrap_err(), Error::EmptyGeneratorSet);
    }

    #[test]
    fn conjugate_into_examples() {
        let core = |g: &[&str]| stallings_core(&g.iter().map(|s| w(s)).collect::<Vec<_>>()).unwrap().0;
        assert_eq!(subgroup_conjugate_into(&core(&["a a"]), &core(&["a"])), Some(Word::identity()));
        assert_eq!(subgroup_conjugate_into(&core(&["b a b^-1"]), &core(&["a"])), Some(w("b")));
        assert_eq!(subgroup_conjugate_into(&core(&["a"]), &core(&["b"])), None);
    }

    #[test]
    fn fiber_products() {
        let a = stallings_core(&[w("a")]).unwrap().1;
        let b = stallings_core(&[w("b")]).unwrap().1;
        assert!(a.nondiagonal_cycle(&a, true).is_none());
        assert!(a.nondiagonal_cycle(&b, false).is_none());
        let a2 = stallings_core(&[w("a a"), w("b")]).unwrap().1;
        assert!(a2.nondiagonal_cycle(&a2, true).is_some());
        assert!(a.nondiagonal_cycle(&a2, false).is_some());
    }
}

//! Exact bounded cancellation.
//!
//! For a direction `x` the words `[f(γ)]`, `γ` a tight path leaving along `x`, form a
//! regular language: read `f(γ)` with an automaton on edge-image positions and add an
//! ε-move wherever a letter and its inverse can be read in succession (Benois). The
//! reduced words accepted by the saturated automaton are exactly the reduced forms of
//! the original language. The cancellation across a turn `(x, y)` is the heaviest
//! common prefix of the two languages.

use std::cell::RefCell;
use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::graphs::{edge_of, Dir};
use crate::maps::GraphMap;

#[inline]
fn slot(d: Dir) -> usize {
    2 * edge_of(d) + usize::from(d < 0)
}

#[derive(Clone)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn insert(&mut self, i: usize) -> bool {
        let had = self.contains(i);
        self.0[i / 64] |= 1 << (i % 64);
        !had
    }

    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn intersection<'a>(&'a self, other: &'a BitSet) -> impl Iterator<Item = usize> + 'a {
        BitSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect()).into_iter_owned()
    }

    fn into_iter_owned(self) -> impl Iterator<Item = usize> {
        self.0.into_iter().enumerate().flat_map(|(w, bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(w * 64 + t)
            })
        })
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(w * 64 + t)
            })
        })
    }
}

/// States are positions in the concatenated edge images. A state reading a letter
/// moves to the next state; states at the end of an image read nothing.
pub(crate) struct ImageAutomaton {
    start: Vec<usize>,
    /// `letter[p]` is read from `p` into `p + 1`.
    letter: Vec<Option<Dir>>,
    /// ε-closure of each state.
    closure: Vec<BitSet>,
    /// Post-letter states from which a reduced continuation reaches acceptance.
    good: Vec<bool>,
    /// Weight of each edge.
    weight: Vec<f64>,
    /// Best continuation from a pair of states, shared by all turns; `None` while the
    /// pair is on the search stack.
    memo: RefCell<HashMap<(usize, usize), Option<Step>>>,
}

type Step = (f64, Option<(usize, usize)>);

/// Reflexive-transitive closure: bitsets combined over the condensation in reverse
/// topological order.
fn closures(eps: &[Vec<usize>]) -> Vec<BitSet> {
    let n = eps.len();
    let mut g = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for (p, out) in eps.iter().enumerate() {
        for &r in out {
            g.add_edge(nodes[p], nodes[r], ());
        }
    }
    // Tarjan lists components sinks first.
    let comps = tarjan_scc(&g);
    let mut comp_of = vec![0; n];
    for (c, members) in comps.iter().enumerate() {
        for v in members {
            comp_of[v.index()] = c;
        }
    }
    let mut reach: Vec<BitSet> = Vec::with_capacity(comps.len());
    for (c, members) in comps.iter().enumerate() {
        let mut set = BitSet::new(n);
        for v in members {
            set.insert(v.index());
            for &r in &eps[v.index()] {
                let rc = comp_of[r];
                if rc != c {
                    set.union_with(&reach[rc]);
                }
            }
        }
        reach.push(set);
    }
    (0..n).map(|p| reach[comp_of[p]].clone()).collect()
}

impl ImageAutomaton {
    pub fn new(f: &GraphMap, weight: Vec<f64>) -> Self {
        let g = &f.graph;
        let dirs = g.all_dirs();
        let mut start = vec![0; dirs.len()];
        let mut letter = Vec::new();
        for &d in &dirs {
            start[slot(d)] = letter.len();
            letter.extend(f.image(d).into_iter().map(Some));
            letter.push(None);
        }
        let n = letter.len();
        let mut eps: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut finals = vec![false; n];
        for &d in &dirs {
            let end = start[slot(d)] + f.image(d).len();
            finals[end] = true;
            for d2 in g.dirs_at(g.terminus(d)) {
                if d2 != -d {
                    eps[end].push(start[slot(d2)]);
                }
            }
        }

        // `readers[slot(a)]`: states reading `a`. Inverse directions have adjacent slots.
        let mut readers = vec![BitSet::new(n); 2 * g.num_edges()];
        for (p, l) in letter.iter().enumerate() {
            if let Some(a) = l {
                readers[slot(*a)].insert(p);
            }
        }
        let mut closure = closures(&eps);
        loop {
            // `p` reads `a` then `a⁻¹` into `r`: add `p → r`. Positions are visited
            // backwards and closures widened at once, so nested cancellations inside one
            // image settle in a single sweep.
            let mut added = false;
            for p in (0..n).rev() {
                loop {
                    // `after[a]`: states reachable from `p` by `ε* a ε*`.
                    let mut after: Vec<Option<BitSet>> = vec![None; readers.len()];
                    for p1 in closure[p].iter() {
                        let Some(a) = letter[p1] else { continue };
                        after[slot(a)].get_or_insert_with(|| BitSet::new(n)).union_with(&closure[p1 + 1]);
                    }
                    let mut new = Vec::new();
                    for (sa, set) in after.iter().enumerate() {
                        let Some(set) = set else { continue };
                        for q in set.intersection(&readers[sa ^ 1]) {
                            if !closure[p].contains(q + 1) {
                                new.push(q + 1);
                            }
                        }
                    }
                    if new.is_empty() {
                        break;
                    }
                    for r in new {
                        if !closure[p].contains(r) {
                            eps[p].push(r);
                            let add = closure[r].clone();
                            closure[p].union_with(&add);
                            added = true;
                        }
                    }
                }
            }
            if !added {
                break;
            }
            closure = closures(&eps);
        }
        let accepting: Vec<bool> = closure.iter().map(|c| c.iter().any(|q| finals[q])).collect();
        // Least fixed point of: `s` is good iff it accepts or reads some letter other
        // than the inverse of the one that led into it, into a good state.
        let mut good = accepting.clone();
        loop {
            let mut changed = false;
            for s in 1..n {
                if good[s] {
                    continue;
                }
                let Some(last) = letter[s - 1] else { continue };
                if closure[s].iter().any(|p| letter[p].is_some_and(|b| b != -last) && good[p + 1]) {
                    good[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        ImageAutomaton { start, letter, closure, good, weight, memo: RefCell::new(HashMap::new()) }
    }

    /// Post-letter states reachable from `s` by reading `a`.
    fn moves(&self, s: usize, last: Option<Dir>) -> impl Iterator<Item = (Dir, usize)> + '_ {
        self.closure[s].iter().filter_map(move |p| {
            let a = self.letter[p]?;
            (Some(-a) != last && self.good[p + 1]).then_some((a, p + 1))
        })
    }

    /// Heaviest common prefix of `[f(γ₁)]` and `[f(γ₂)]` over tight `γ₁` leaving along `x`
    /// and `γ₂` leaving along `y`, with the word realizing it. `None` when unbounded.
    pub fn common_prefix(&self, x: Dir, y: Dir) -> Option<(f64, Vec<Dir>)> {
        let mut memo = self.memo.borrow_mut();
        let root = (self.start[slot(x)], self.start[slot(y)]);
        let (w, _) = self.search(root, &mut memo)?;
        let mut path = Vec::new();
        let mut key = root;
        while let Some(Some((_, Some(next)))) = memo.get(&key) {
            path.push(self.letter[next.0 - 1].expect("post-letter state"));
            key = *next;
        }
        Some((w, path))
    }

    /// Post-letter states follow their letter, so a pair of them fixes the last letter
    /// read; start states have none.
    fn search(&self, root: (usize, usize), memo: &mut HashMap<(usize, usize), Option<Step>>) -> Option<Step> {
        if let Some(v) = memo.get(&root) {
            return *v;
        }
        // Explicit stack: the common prefix can be thousands of letters long.
        let mut stack: Vec<((usize, usize), Vec<(Dir, (usize, usize))>, Step)> = Vec::new();
        let push = |key: (usize, usize), memo: &mut HashMap<(usize, usize), Option<Step>>| {
            memo.insert(key, None);
            let (p, q) = key;
            let last = if p > 0 { self.letter[p - 1] } else { None };
            let mut by_letter: HashMap<Dir, Vec<usize>> = HashMap::new();
            for (b, q2) in self.moves(q, last) {
                by_letter.entry(b).or_default().push(q2);
            }
            let mut succ = Vec::new();
            for (a, p2) in self.moves(p, last) {
                if let Some(targets) = by_letter.get(&a) {
                    succ.extend(targets.iter().map(|&q2| (a, (p2, q2))));
                }
            }
            succ.reverse();
            (key, succ, (0.0, None))
        };
        stack.push(push(root, memo));
        while let Some(top) = stack.last_mut() {
            if let Some(&(a, next)) = top.1.last() {
                match memo.get(&next) {
                    Some(None) => return None,
                    Some(Some((w, _))) => {
                        let total = self.weight[edge_of(a)] + w;
                        if total > top.2 .0 {
                            top.2 = (total, Some(next));
                        }
                        top.1.pop();
                    }
                    None => {
                        let frame = push(next, memo);
                        stack.push(frame);
                    }
                }
            } else {
                let (key, _, best) = stack.pop().expect("nonempty");
                memo.insert(key, Some(best));
            }
        }
        memo.get(&root).copied().flatten()
    }
}

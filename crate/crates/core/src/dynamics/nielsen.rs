//! Periodic indivisible Nielsen paths with endpoints at vertices.

use serde::{Deserialize, Serialize};

use super::require_expanding;
use crate::error::Result;
use crate::gates::{bcc_constant, gate_structure, with_metric, GateStructure, MAX_POWER_LETTERS};
use crate::graphs::{Dir, EdgePath, MarkedGraph, Turn};
use crate::maps::GraphMap;
use crate::spectral::{metric_eigen, DEFAULT_TOL};
use crate::words::Word;

/// Relative slack when comparing a candidate's length with the length bound, which is
/// attained exactly by some paths.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NielsenPath {
    pub path: EdgePath,
    /// Least `N` with `[f^N(ρ)] = ρ`.
    pub period: u32,
    /// Deck translation `g` with `f̃^N(ρ̃) = g·ρ̃` for the lift of `f^N` through the
    /// base tree path of `f^N(base)`, read as a word.
    pub translation: Word,
    pub length: f64,
    /// `2·C_bcl(f^N)/(λ^N − 1)`, which bounds the length of any Nielsen path of period `N`.
    pub bound: f64,
    /// `2·C_bcl(f^N)`.
    pub twice_bcc: f64,
    pub illegal_turn: Turn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NielsenReport {
    pub paths: Vec<NielsenPath>,
    pub period_max: u32,
    /// Largest period actually searched; smaller than `period_max` when `f^N` is too large.
    pub period_searched: u32,
    /// `2·C_bcl(f^N)` for `N = 1..=period_searched`.
    pub twice_bcc: Vec<f64>,
    /// Candidates examined.
    pub candidates: usize,
    /// Longest chain of distinct oriented paths concatenating tightly, plus one.
    pub m_nielsen: usize,
}

/// Length of the longest common prefix.
fn common_prefix(a: &[Dir], b: &[Dir]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Pairs of legal legs `(α, β)` leaving along `x` and `y` with `f^N(α) = τ·α` and
/// `f^N(β) = τ·β`, which is exactly `[f^N(ᾱ·β)] = ᾱ·β`.
///
/// Once `f^N(α)` and `f^N(β)` diverge the prefix `τ` is fixed, and the equations force
/// every further edge of both legs; before that the search branches over legal turns.
fn fixed_leg_pairs(
    fnn: &GraphMap,
    gates: &GateStructure,
    (x, y): (Dir, Dir),
    budget: f64,
    visited: &mut usize,
) -> Vec<(Vec<Dir>, Vec<Dir>)> {
    let g = &fnn.graph;
    let legal_next = |leg: &[Dir]| -> Vec<Dir> {
        let last = *leg.last().expect("legs are nonempty");
        g.dirs_at(g.terminus(last)).into_iter().filter(|&d| d != -last && gates.is_legal_turn(Turn(-last, d))).collect()
    };
    let mut out = Vec::new();
    let mut stack = vec![(vec![x], vec![y])];
    'states: while let Some((mut alpha, mut beta)) = stack.pop() {
        loop {
            *visited += 1;
            if g.dirs_length(&alpha) + g.dirs_length(&beta) > budget {
                continue 'states;
            }
            let a = fnn.image_dirs(&alpha);
            let b = fnn.image_dirs(&beta);
            let t = common_prefix(&a, &b);
            if t == 0 {
                continue 'states;
            }
            if t == a.len().min(b.len()) {
                // Not yet diverged: extend the leg whose image is shorter.
                let grow_alpha = a.len() <= b.len();
                let leg = if grow_alpha { &alpha } else { &beta };
                for d in legal_next(leg) {
                    let mut next = leg.clone();
                    next.push(d);
                    stack.push(if grow_alpha { (next, beta.clone()) } else { (alpha.clone(), next) });
                }
                continue 'states;
            }
            let (ta, tb) = (&a[t..], &b[t..]);
            if ta == alpha.as_slice() && tb == beta.as_slice() {
                out.push((alpha, beta));
                continue 'states;
            }
            let mut forced = false;
            for (leg, tail) in [(&mut alpha, ta), (&mut beta, tb)] {
                let k = common_prefix(leg, tail);
                if k < leg.len().min(tail.len()) {
                    continue 'states;
                }
                if tail.len() > leg.len() {
                    *leg = tail.to_vec();
                    forced = true;
                }
            }
            if !forced {
                // Some leg outruns its image tail; only longer legs can catch up.
                let grow_alpha = ta.len() < alpha.len();
                let leg = if grow_alpha { &alpha } else { &beta };
                for d in legal_next(leg) {
                    let mut next = leg.clone();
                    next.push(d);
                    stack.push(if grow_alpha { (next, beta.clone()) } else { (alpha.clone(), next) });
                }
                continue 'states;
            }
        }
    }
    out
}

/// Finds every tight path `ᾱ·β` with legal legs meeting at an illegal turn, within the
/// length bound, that some `f^N`, `N ≤ period_max`, fixes.
pub fn enumerate_nielsen_paths(f: &GraphMap, period_max: u32) -> Result<NielsenReport> {
    require_expanding(f)?;
    let f = with_metric(f);
    let g = &f.graph;
    let gates = gate_structure(&f)?;
    let lambda = metric_eigen(&f, DEFAULT_TOL)?.lambda;

    let mut powers = Vec::new();
    let mut bounds = Vec::new();
    let mut twice = Vec::new();
    for n in 1..=period_max {
        let fnn = f.power(n);
        if n > 1 && fnn.edge_images.iter().map(Vec::len).sum::<usize>() > MAX_POWER_LETTERS {
            break;
        }
        let c = bcc_constant(&fnn)?;
        twice.push(2.0 * c);
        bounds.push(2.0 * c / (lambda.powi(n as i32) - 1.0));
        powers.push(fnn);
    }
    let parent = g.spanning_tree(g.base, &|_| true);

    let mut paths: Vec<NielsenPath> = Vec::new();
    let mut candidates = 0;
    for (k, fnn) in powers.iter().enumerate() {
        let budget = bounds[k] * (1.0 + BOUND_SLACK);
        for v in 0..g.num_vertices() {
            let at = g.dirs_at(v);
            for (i, &x) in at.iter().enumerate() {
                for &y in &at[i + 1..] {
                    if gates.is_legal_turn(Turn(x, y)) {
                        continue;
                    }
                    for (l, r) in fixed_leg_pairs(fnn, &gates, (x, y), budget, &mut candidates) {
                        let start = g.terminus(*l.last().unwrap());
                        let rho = EdgePath::new(start, EdgePath::new(v, l).reverse(g).dirs.into_iter().chain(r).collect());
                        let end = rho.end(g);
                        // Only the least period is recorded.
                        if paths.iter().any(|p| p.path == rho) {
                            continue;
                        }
                        if fnn.vertex_images[start] != start || fnn.vertex_images[end] != end || fnn.apply_path(&rho).dirs != rho.dirs {
                            continue;
                        }
                        let base_path = g.tree_path(&parent, g.base, fnn.vertex_images[g.base]);
                        let tau = g.tree_path(&parent, g.base, start);
                        let mut loop_dirs = base_path.dirs.clone();
                        loop_dirs.extend(fnn.image_dirs(&tau.dirs));
                        loop_dirs.extend(tau.reverse(g).dirs);
                        paths.push(NielsenPath {
                            length: g.dirs_length(&rho.dirs),
                            path: rho,
                            period: k as u32 + 1,
                            translation: g.read(&loop_dirs),
                            bound: bounds[k],
                            twice_bcc: twice[k],
                            illegal_turn: Turn(x, y),
                        });
                    }
                }
            }
        }
    }
    let m_nielsen = longest_chain(g, &paths) + 1;
    Ok(NielsenReport {
        paths,
        period_max,
        period_searched: powers.len() as u32,
        twice_bcc: twice,
        candidates,
        m_nielsen,
    })
}

/// Longest sequence of distinct oriented Nielsen paths, each ending where the next
/// starts with a tight junction.
fn longest_chain(g: &MarkedGraph, paths: &[NielsenPath]) -> usize {
    let oriented: Vec<EdgePath> = paths.iter().flat_map(|p| [p.path.clone(), p.path.reverse(g)]).collect();
    let joins = |a: &EdgePath, b: &EdgePath| a.end(g) == b.start && a.dirs.last().map(|&d| -d) != b.dirs.first().copied();
    fn extend(i: usize, used: &mut Vec<bool>, oriented: &[EdgePath], joins: &dyn Fn(&EdgePath, &EdgePath) -> bool) -> usize {
        let mut best = 1;
        for j in 0..oriented.len() {
            // A path and its reverse count as one.
            if !used[j / 2] && joins(&oriented[i], &oriented[j]) {
                used[j / 2] = true;
                best = best.max(1 + extend(j, used, oriented, joins));
                used[j / 2] = false;
            }
        }
        best
    }
    let mut best = 0;
    for i in 0..oriented.len() {
        let mut used = vec![false; paths.len()];
        used[i / 2] = true;
        best = best.max(extend(i, &mut used, &oriented, &joins));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::maps::rose_representative;
    use crate::words::{Alphabet, Endomorphism};

    fn rose(images: &[&str]) -> GraphMap {
        rose_representative(&Endomorphism::parse(images).unwrap())
    }

    #[test]
    fn nielsen_examples() {
        let r = enumerate_nielsen_paths(&rose(&["a a"]), 4).unwrap();
        assert!(r.paths.is_empty() && r.m_nielsen == 1);
        let id = rose_representative(&Endomorphism::identity(Alphabet::standard(2)));
        assert_eq!(enumerate_nielsen_paths(&id, 4), Err(Error::NonExpanding));

        // The commutator loop is the only Nielsen path of Fibonacci, of period 2 and
        // length exactly the bound 2φ².
        let fib = rose(&["b", "a b"]);
        let r = enumerate_nielsen_paths(&fib, 4).unwrap();
        assert_eq!(r.paths.len(), 1, "{r:?}");
        let p = &r.paths[0];
        assert_eq!(p.period, 2);
        let w = fib.graph.read(&p.path.dirs);
        assert!(w.is_conjugate(&Alphabet::standard(2).parse("a b a^-1 b^-1").unwrap()) || w.is_conjugate(&Alphabet::standard(2).parse("b a b^-1 a^-1").unwrap()));
        let phi = 1.618_033_988_749_895_f64;
        assert!((p.length - 2.0 * phi * phi).abs() < 1e-8);
        assert!(p.length <= p.twice_bcc);
        assert_eq!(r.m_nielsen, 2);
    }
}

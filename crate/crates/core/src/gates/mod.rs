//! Gate structures and legality.

mod cancellation;
mod constants;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{edge_of, Dir, Turn};
use crate::maps::GraphMap;

pub use constants::{
    bcc_constant, bcc_witness, constants, constants_at_power, leg_fraction, length_illegal_sample, with_metric, Cancellation, Constants, MAX_POWER,
    MAX_POWER_LETTERS,
};

#[inline]
fn slot(d: Dir) -> usize {
    2 * edge_of(d) + usize::from(d < 0)
}

/// Gates of a map: `d ~ d'` iff some iterate of `Df` identifies them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateStructure {
    /// `df[slot(d)]` is the first direction of `f(d)`.
    pub df: Vec<Dir>,
    /// Gates at each vertex, each a sorted list of directions.
    pub gates: Vec<Vec<Vec<Dir>>>,
    /// Exponent after which iterates of `Df` separate exactly the distinct gates.
    pub stable_power: usize,
    stable: Vec<Dir>,
}

impl GateStructure {
    pub fn df(&self, d: Dir) -> Dir {
        self.df[slot(d)]
    }

    pub fn df_pow(&self, d: Dir, k: usize) -> Dir {
        (0..k).fold(d, |x, _| self.df(x))
    }

    /// Representative of the gate containing `d`.
    pub fn gate_key(&self, d: Dir) -> Dir {
        self.stable[slot(d)]
    }

    pub fn same_gate(&self, a: Dir, b: Dir) -> bool {
        self.gate_key(a) == self.gate_key(b)
    }

    pub fn is_legal_turn(&self, t: Turn) -> bool {
        !self.same_gate(t.0, t.1)
    }

    /// Least `k` with `Df^k(a) = Df^k(b)`; `None` for a legal turn, 0 for a degenerate one.
    pub fn depth(&self, t: Turn) -> Option<usize> {
        let (mut a, mut b) = (t.0, t.1);
        for k in 0..=self.stable_power {
            if a == b {
                return Some(k);
            }
            a = self.df(a);
            b = self.df(b);
        }
        None
    }

    pub fn num_gates(&self, v: usize) -> usize {
        self.gates[v].len()
    }

    /// Number of interior turns of a direction sequence lying in one gate.
    pub fn illegal_count(&self, dirs: &[Dir]) -> usize {
        dirs.windows(2).filter(|w| self.same_gate(-w[0], w[1])).count()
    }

    pub fn is_legal(&self, dirs: &[Dir]) -> bool {
        self.illegal_count(dirs) == 0
    }

    /// Positions `i` such that the turn between `dirs[i]` and `dirs[i+1]` is illegal.
    pub fn illegal_positions(&self, dirs: &[Dir]) -> Vec<usize> {
        (0..dirs.len().saturating_sub(1)).filter(|&i| self.same_gate(-dirs[i], dirs[i + 1])).collect()
    }

    /// Maximal legal segments as half-open index ranges covering `dirs`.
    pub fn legal_segments(&self, dirs: &[Dir]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in self.illegal_positions(dirs) {
            out.push((start, i + 1));
            start = i + 1;
        }
        if start < dirs.len() {
            out.push((start, dirs.len()));
        }
        out
    }
}

pub fn gate_structure(f: &GraphMap) -> Result<GateStructure> {
    let g = &f.graph;
    let n = g.num_edges();
    if let Some(e) = f.edge_images.iter().position(|img| img.is_empty()) {
        return Err(Error::CollapsedEdgeImage(e + 1));
    }
    let mut df = vec![0; 2 * n];
    for d in g.all_dirs() {
        df[slot(d)] = f.image(d)[0];
    }
    // Pairs of orbits either meet within (2n)^2 steps or never.
    let stable_power = 4 * n * n + 1;
    let stable: Vec<Dir> = g
        .all_dirs()
        .into_iter()
        .map(|d| (0..stable_power).fold(d, |x, _| df[slot(x)]))
        .collect();
    let mut gates = Vec::with_capacity(g.num_vertices());
    for v in 0..g.num_vertices() {
        let mut by_key: BTreeMap<Dir, Vec<Dir>> = BTreeMap::new();
        for d in g.dirs_at(v) {
            by_key.entry(stable[slot(d)]).or_default().push(d);
        }
        let mut gs: Vec<Vec<Dir>> = by_key.into_values().collect();
        gs.sort_by_key(|x| slot(x[0]));
        gates.push(gs);
    }
    Ok(GateStructure { df, gates, stable_power, stable })
}

/// Number of illegal turns of a path.
pub fn illegal_count(dirs: &[Dir], gates: &GateStructure) -> usize {
    gates.illegal_count(dirs)
}

/// Train track conditions: legal edge images, at least two gates at every vertex and
/// distinct gates at `v` sent to distinct gates at `f(v)`.
pub fn is_train_track(f: &GraphMap) -> bool {
    let Ok(gs) = gate_structure(f) else { return false };
    let g = &f.graph;
    f.edge_images.iter().all(|img| gs.is_legal(img))
        && (0..g.num_vertices()).all(|v| gs.num_gates(v) >= 2 && gates_injective(&gs, v))
}

/// Distinct gates at `v` have images in distinct gates.
pub fn gates_injective(gs: &GateStructure, v: usize) -> bool {
    let keys: Vec<Dir> = gs.gates[v].iter().map(|gate| gs.gate_key(gs.df(gate[0]))).collect();
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len() == keys.len()
}

//! Bounded cancellation, critical and growth constants, with automatic power raising.

use serde::{Deserialize, Serialize};

use super::cancellation::ImageAutomaton;
use super::GateStructure;
use crate::error::{Error, Result};
use crate::graphs::{Dir, EdgePath, Turn};
use crate::maps::{transition_matrix, GraphMap};
use crate::parabolic::{ConedMetric, ParabolicFamily};
use crate::spectral::{assign_metric, metric_eigen, spectral_radius, DEFAULT_TOL};

/// Largest power tried when raising `f` to satisfy `λ > max{C_tr, 2·C_bcl + 1}`.
pub const MAX_POWER: u32 = 8;

/// Raising also stops once the edge images of `f^k` hold more letters than this: the
/// exact cancellation search is cubic in that size.
pub const MAX_POWER_LETTERS: usize = 1500;

/// The bounded cancellation constant together with a turn and a cancelled path attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cancellation {
    pub value: f64,
    pub turn: Option<Turn>,
    pub path: Vec<Dir>,
}

/// Copy of `f` carrying its Perron–Frobenius metric (shortest edge 1). Reducible maps
/// keep their lengths, or get unit lengths if they have none.
pub fn with_metric(f: &GraphMap) -> GraphMap {
    match metric_eigen(f, DEFAULT_TOL) {
        Ok(pf) => assign_metric(f, &pf),
        Err(_) => {
            let mut out = f.clone();
            out.graph.lengths.get_or_insert_with(|| vec![1.0; f.num_edges()]);
            out
        }
    }
}

fn expanding(f: &GraphMap) -> Result<bool> {
    let m = transition_matrix(f);
    if m.is_permutation() {
        return Ok(false);
    }
    if spectral_radius(&m, DEFAULT_TOL) <= 1.0 + 1e-9 {
        return Err(Error::NonExpanding);
    }
    Ok(true)
}

/// Least `C` such that for every tight concatenation `α·β`, the paths `[f(α)]` and
/// `[f(β)]` cancel along a segment of metric length at most `C`.
pub fn bcc_constant(f: &GraphMap) -> Result<f64> {
    Ok(bcc_witness(f)?.value)
}

/// `bcc_constant` with a witness. Maps permuting edges are accepted (the constant is
/// then that of an isometry on edges); other maps with `λ ≤ 1` are `NonExpanding`, as
/// are maps whose cancellation is unbounded.
pub fn bcc_witness(f: &GraphMap) -> Result<Cancellation> {
    expanding(f)?;
    let f = with_metric(f);
    let g = &f.graph;
    let automaton = ImageAutomaton::new(&f, (0..g.num_edges()).map(|e| g.edge_length(e)).collect());
    let mut best = Cancellation { value: 0.0, turn: None, path: Vec::new() };
    for v in 0..g.num_vertices() {
        let at = g.dirs_at(v);
        for (i, &x) in at.iter().enumerate() {
            for &y in &at[i + 1..] {
                let (w, path) = automaton.common_prefix(x, y).ok_or(Error::NonExpanding)?;
                if w > best.value + 1e-12 {
                    best = Cancellation { value: w, turn: Some(Turn(x, y)), path };
                }
            }
        }
    }
    Ok(best)
}

/// Constants of a train track map, computed at the power `f^power` that the growth
/// lemmas require.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Exponent `k` with all constants referring to `f^k`.
    pub power: u32,
    pub lambda: f64,
    pub lambda_radius: f64,
    pub c_bcl: f64,
    pub c_transversality: f64,
    /// `2·C_bcl / (λ/C_tr − 1)`; `None` unless `λ > C_tr`.
    pub critical: Option<f64>,
    /// `1 − 2·C_bcl / (λ/C_tr − 1)`; `None` unless `λ > C_tr`.
    pub nu: Option<f64>,
    /// Legal-segment threshold for which `k_li` is stated.
    pub li_threshold: f64,
    pub k_li: f64,
    /// Filled in from a Nielsen report.
    pub m_nielsen: Option<usize>,
    /// False for maps permuting edges (`λ = 1`).
    pub expanding: bool,
}

impl Constants {
    /// `K = λ / C_tr`.
    pub fn growth_ratio(&self) -> f64 {
        self.lambda / self.c_transversality
    }

    /// `f^power`.
    pub fn raised(&self, f: &GraphMap) -> GraphMap {
        f.power(self.power)
    }

    /// Widens `k_li` until `K⁻¹·i(ρ) ≤ l(ρ) ≤ K·i(ρ)` holds on the samples that satisfy
    /// the hypothesis; returns the number of violations found before widening.
    pub fn tighten_k_li(&mut self, f: &GraphMap, gates: &GateStructure, samples: &[EdgePath]) -> usize {
        let mut violations = 0;
        for rho in samples {
            if let Some((i, l)) = length_illegal_sample(f, gates, rho, self.li_threshold) {
                let need = (l / i).max(i / l);
                if need > self.k_li {
                    violations += 1;
                    self.k_li = need;
                }
            }
        }
        violations
    }
}

/// `(i(ρ), l(ρ))` when every maximal legal segment of `ρ` is shorter than `threshold`
/// and `ρ` has an illegal turn.
pub fn length_illegal_sample(f: &GraphMap, gates: &GateStructure, rho: &EdgePath, threshold: f64) -> Option<(f64, f64)> {
    let g = &f.graph;
    let i = gates.illegal_count(&rho.dirs);
    if i == 0 {
        return None;
    }
    let segs = gates.legal_segments(&rho.dirs);
    if segs.iter().any(|&(a, b)| g.dirs_length(&rho.dirs[a..b]) >= threshold) {
        return None;
    }
    Some((i as f64, g.path_length(rho)))
}

/// Constants of `f^power` without any raising; `critical` and `nu` are `None` unless
/// `λ^power > C_tr`.
pub fn constants_at_power(f: &GraphMap, power: u32, c_tr: f64) -> Result<Constants> {
    let f = with_metric(f);
    let fk = with_metric(&f.power(power));
    let (lambda, lambda_radius, expanding) = if transition_matrix(&fk).is_permutation() {
        (1.0, 0.0, false)
    } else {
        let pf = metric_eigen(&fk, DEFAULT_TOL)?;
        (pf.lambda, pf.radius, true)
    };
    let c_bcl = bcc_constant(&fk)?;
    let k = lambda / c_tr;
    let (critical, nu) = if k > 1.0 {
        let c = 2.0 * c_bcl / (k - 1.0);
        (Some(c), Some(1.0 - c))
    } else {
        (None, None)
    };
    let g = &fk.graph;
    let max_len = (0..g.num_edges()).map(|e| g.edge_length(e)).fold(0.0, f64::max);
    let li_threshold = critical.unwrap_or(0.0).max(2.0 * max_len);
    // i+1 legal segments each shorter than C give l < (i+1)·C ≤ 2i·C, and each has
    // length at least the shortest edge.
    let k_li = (2.0 * li_threshold).max(1.0 / g.min_edge_length()).max(1.0);
    Ok(Constants {
        power,
        lambda,
        lambda_radius,
        c_bcl,
        c_transversality: c_tr,
        critical,
        nu,
        li_threshold,
        k_li,
        m_nielsen: None,
        expanding,
    })
}

/// Constants for a train track map, raising it to the least power `k ≤ 8` with
/// `λ^k > max{C_tr, 2·C_bcl(f^k) + 1}`. Maps with `λ = 1` are reported unraised with
/// `expanding = false` and no critical constant.
///
/// `C_bcl(f^k)` usually grows like `λ^k`, so the critical constant of `f^k` settles
/// rather than shrinking and many maps exhaust the budget. Fibonacci is one: its
/// critical constant is `2φ²` at every power.
pub fn constants(f: &GraphMap, c_tr: f64) -> Result<Constants> {
    let f = with_metric(f);
    let first = constants_at_power(&f, 1, c_tr)?;
    if !first.expanding {
        return Ok(first);
    }
    let ok = |c: &Constants| c.lambda > c_tr && c.lambda > 2.0 * c.c_bcl + 1.0 && c.nu.is_some_and(|n| n > 0.0);
    if ok(&first) {
        return Ok(first);
    }
    for k in 2..=MAX_POWER {
        if f.power(k).edge_images.iter().map(Vec::len).sum::<usize>() > MAX_POWER_LETTERS {
            return Err(Error::PowerBudgetExhausted(k - 1));
        }
        let c = constants_at_power(&f, k, c_tr)?;
        if ok(&c) {
            return Ok(c);
        }
    }
    Err(Error::PowerBudgetExhausted(MAX_POWER))
}

/// Fraction of the coned length of `ρ` carried by maximal legal segments whose coned
/// length is at least the critical constant.
pub fn leg_fraction(
    rho: &EdgePath,
    f: &GraphMap,
    gates: &GateStructure,
    constants: &Constants,
    family: Option<&ParabolicFamily>,
) -> Result<f64> {
    let critical = constants.critical.ok_or(Error::NoCriticalConstant)?;
    let g = &f.graph;
    let coned = family.map(|fam| ConedMetric::new(g, fam));
    let len = |dirs: &[Dir]| match &coned {
        Some(m) => m.length(dirs),
        None => g.dirs_length(dirs),
    };
    let total = len(&rho.dirs);
    if rho.dirs.is_empty() || total <= 0.0 {
        return Err(Error::ZeroLength);
    }
    let leg: f64 = gates
        .legal_segments(&rho.dirs)
        .into_iter()
        .map(|(a, b)| len(&rho.dirs[a..b]))
        .filter(|&l| l >= critical)
        .sum();
    Ok((leg / total).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::gate_structure;
    use crate::graphs::fwd;
    use crate::maps::rose_representative;
    use crate::words::{Alphabet, Endomorphism};

    const PHI: f64 = 1.618_033_988_749_895;

    fn rose(images: &[&str]) -> GraphMap {
        rose_representative(&Endomorphism::parse(images).unwrap())
    }

    #[test]
    fn cancellation_examples() {
        let w = bcc_witness(&rose(&["b", "a b"])).unwrap();
        assert!((w.value - PHI).abs() < 1e-8, "{w:?}");
        assert_eq!(w.turn.map(Turn::sorted), Some(Turn(-1, -2).sorted()));
        assert_eq!(w.path, vec![-2]);
        assert_eq!(bcc_constant(&rose_representative(&Endomorphism::identity(Alphabet::standard(2)))).unwrap(), 0.0);
        assert_eq!(bcc_constant(&rose(&["a a"])).unwrap(), 0.0);
    }

    fn raising_example() -> GraphMap {
        let phi = Endomorphism::parse(&["a^-1 b^-1", "b^-1 a c b^-1 a", "b a^-1 c"]).unwrap();
        crate::moves::train_track_algorithm(&phi, 300).unwrap().map
    }

    #[test]
    fn constants_examples() {
        // Fibonacci: C_bcl(f^k) = φ^(k+2) − φ², so the critical constant is 2φ² at every power.
        let fib = rose(&["b", "a b"]);
        for k in 1..=4 {
            let c = bcc_constant(&fib.power(k)).unwrap();
            assert!((c - (PHI.powi(k as i32 + 2) - PHI * PHI)).abs() < 1e-6, "{k}: {c}");
        }
        assert_eq!(constants(&fib, 1.0), Err(Error::PowerBudgetExhausted(MAX_POWER)));

        let c = constants(&raising_example(), 1.0).unwrap();
        assert_eq!(c.power, 2);
        assert!(c.lambda > 2.0 * c.c_bcl + 1.0 && c.nu.unwrap() > 0.0 && c.critical.unwrap() > 0.0);

        let d = constants(&rose(&["a a"]), 1.0).unwrap();
        assert_eq!((d.power, d.c_bcl, d.critical, d.nu), (1, 0.0, Some(0.0), Some(1.0)));

        let id = constants(&rose_representative(&Endomorphism::identity(Alphabet::standard(2))), 1.0).unwrap();
        assert!(!id.expanding && id.critical.is_none());
    }

    #[test]
    fn leg_fraction_extremes() {
        let f = raising_example();
        let c = constants(&f, 1.0).unwrap();
        let fk = with_metric(&c.raised(&f));
        let gates = gate_structure(&fk).unwrap();
        let e = (0..fk.num_edges()).find(|&e| fk.graph.edge_length(e) >= c.critical.unwrap()).unwrap();
        let long = EdgePath::new(fk.graph.origin(fwd(e)), vec![fwd(e)]);
        assert_eq!(leg_fraction(&long, &fk, &gates, &c, None).unwrap(), 1.0);
        assert_eq!(leg_fraction(&EdgePath::trivial(0), &fk, &gates, &c, None), Err(Error::ZeroLength));
    }
}

//! Bounded flaring evidence: the inequality
//! `λ·l([f^M(ρ)]) ≤ max{l(ρ), l([f^{2M}(ρ)])}` in the coned-off metric, checked over all
//! hyperbolic conjugacy classes up to a length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::growth::{cyclic_illegal_count, cyclic_legal_segments};
use super::nielsen::enumerate_nielsen_paths;
use super::require_expanding;
use crate::error::{Error, Result};
use crate::gates::{constants_at_power, gate_structure, with_metric, GateStructure, MAX_POWER};
use crate::graphs::EdgePath;
use crate::maps::GraphMap;
use crate::parabolic::{transversality_constant, ConedMetric, ParabolicFamily};
use crate::spectral::{metric_eigen, DEFAULT_TOL};
use crate::words::{cyclic_classes, Word};

/// LEG threshold separating the legal-heavy case from the illegal-turn cases.
pub const FLARE_EPSILON: f64 = 0.1;

/// Periods searched for Nielsen paths when bounding concatenations.
const NIELSEN_PERIOD: u32 = 4;

const EVIDENCE: &str = "evidence over a bounded class of conjugacy classes, not a proof of hyperbolicity";

/// Which inequality of the flaring argument covers a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlareCase {
    /// LEG at least `ε`: legal segments longer than the critical constant grow.
    LegalHeavy,
    /// Fewer illegal turns than `M_nielsen`.
    FewIllegalTurns,
    /// Many illegal turns: their number decays and length follows it.
    ManyIllegalTurns,
    /// The inequality holds only through `l(ρ)`.
    Contracting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlareSample {
    pub word: Word,
    pub leg: f64,
    pub illegal_turns: usize,
    /// Coned lengths of `ρ`, `[f^M(ρ)]` and `[f^{2M}(ρ)]`.
    pub lengths: [f64; 3],
    pub holds: bool,
    pub case: FlareCase,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub legal_heavy: usize,
    pub few_illegal_turns: usize,
    pub many_illegal_turns: usize,
    pub contracting: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlareCertificate {
    pub lambda_flare: f64,
    /// Least `M ≤ m_max` for which every sample satisfies the inequality.
    pub m: Option<u32>,
    pub m_max: u32,
    pub max_len: usize,
    pub count: usize,
    /// Power of `f` at which the critical constant is taken.
    pub power: u32,
    pub c_transversality: f64,
    pub critical: f64,
    pub m_nielsen: usize,
    pub epsilon: f64,
    pub case_counts: CaseCounts,
    /// Samples evaluated at `m`, or at `m_max` when no `M` works.
    pub samples: Vec<FlareSample>,
    pub failures: Vec<FlareSample>,
    pub label: String,
}

impl FlareCertificate {
    pub fn is_valid(&self) -> bool {
        self.m.is_some() && self.failures.is_empty()
    }
}

/// Everything needed to evaluate samples.
struct Setup {
    f: GraphMap,
    gates: GateStructure,
    family: ParabolicFamily,
    power: u32,
    c_tr: f64,
    critical: f64,
    m_nielsen: usize,
}

impl Setup {
    fn new(f: &GraphMap, family: &ParabolicFamily, lambda_flare: f64) -> Result<Self> {
        if f.graph.rank() <= 1 {
            return Err(Error::GroupIsZ);
        }
        if !(lambda_flare > 1.0) {
            return Err(Error::InvalidParameter(format!("flaring constant {lambda_flare} must exceed 1")));
        }
        require_expanding(f).map_err(|_| Error::NoCriticalConstant)?;
        let f = with_metric(f);
        let gates = gate_structure(&f)?;
        let c_tr = transversality_constant(&f, family, &gates)?;
        let lambda = metric_eigen(&f, DEFAULT_TOL)?.lambda;
        // As in the flaring argument, pass to a power stretching more than C_tr.
        let power = (1..=MAX_POWER).find(|&k| lambda.powi(k as i32) > c_tr).ok_or(Error::NoCriticalConstant)?;
        let critical = constants_at_power(&f, power, c_tr)?.critical.ok_or(Error::NoCriticalConstant)?;
        let m_nielsen = enumerate_nielsen_paths(&f, NIELSEN_PERIOD)?.m_nielsen;
        Ok(Setup { f, gates, family: family.clone(), power, c_tr, critical, m_nielsen })
    }

    fn is_parabolic(&self, w: &Word) -> bool {
        self.family.cores.iter().any(|c| c.cyclically_readable(w.letters()))
    }
}

/// Iterates of one loop, computed on demand.
struct Orbit {
    word: Word,
    current: EdgePath,
    lengths: Vec<f64>,
    leg: f64,
    illegal_turns: usize,
}

impl Orbit {
    fn new(setup: &Setup, metric: &ConedMetric, word: Word) -> Self {
        let g = &setup.f.graph;
        let rho = g.cyclic_loop_of_word(&word);
        let total = metric.length(&rho.dirs);
        let leg: f64 = cyclic_legal_segments(&setup.gates, &rho.dirs)
            .iter()
            .map(|s| metric.length(s))
            .filter(|&l| l >= setup.critical)
            .sum();
        Orbit {
            word,
            illegal_turns: cyclic_illegal_count(&setup.gates, &rho.dirs),
            leg: if total > 0.0 { (leg / total).min(1.0) } else { 0.0 },
            lengths: vec![total],
            current: rho,
        }
    }

    fn length(&mut self, setup: &Setup, metric: &ConedMetric, n: usize) -> f64 {
        let g = &setup.f.graph;
        while self.lengths.len() <= n {
            self.current = g.cyclically_tighten(&setup.f.apply_path(&self.current));
            self.lengths.push(metric.length(&self.current.dirs));
        }
        self.lengths[n]
    }

    fn evaluate(&mut self, setup: &Setup, metric: &ConedMetric, lambda: f64, m: u32) -> FlareSample {
        let m = m as usize;
        let lengths = [self.lengths[0], self.length(setup, metric, m), self.length(setup, metric, 2 * m)];
        let lhs = lambda * lengths[1];
        let slack = 1e-9 * lhs.max(1.0);
        let holds = lhs <= lengths[0].max(lengths[2]) + slack;
        let case = if holds && lhs > lengths[2] + slack {
            FlareCase::Contracting
        } else if self.leg >= FLARE_EPSILON {
            FlareCase::LegalHeavy
        } else if self.illegal_turns < setup.m_nielsen {
            FlareCase::FewIllegalTurns
        } else {
            FlareCase::ManyIllegalTurns
        };
        FlareSample { word: self.word.clone(), leg: self.leg, illegal_turns: self.illegal_turns, lengths, holds, case }
    }
}

/// Searches the least `M ≤ m_max` such that every cyclically reduced class of length at
/// most `max_len`, not conjugate into the family, satisfies the flaring inequality with
/// constant `lambda_flare`.
pub fn flare_certificate(
    f: &GraphMap,
    family: &ParabolicFamily,
    lambda_flare: f64,
    m_max: u32,
    max_len: usize,
) -> Result<FlareCertificate> {
    let setup = Setup::new(f, family, lambda_flare)?;
    let metric = ConedMetric::new(&setup.f.graph, family);
    let rank = setup.f.graph.rank();
    let words: Vec<Word> = (1..=max_len)
        .flat_map(|len| cyclic_classes(rank, len))
        .filter(|w| !setup.is_parabolic(w))
        .collect();
    let mut orbits: Vec<Orbit> = words.into_par_iter().map(|w| Orbit::new(&setup, &metric, w)).collect();

    let mut found = None;
    let mut samples = Vec::new();
    for m in 1..=m_max {
        samples = orbits.par_iter_mut().map(|o| o.evaluate(&setup, &metric, lambda_flare, m)).collect();
        if samples.iter().all(|s| s.holds) {
            found = Some(m);
            break;
        }
    }
    let failures: Vec<FlareSample> = samples.iter().filter(|s| !s.holds).cloned().collect();
    let mut case_counts = CaseCounts::default();
    for s in &samples {
        *match s.case {
            FlareCase::LegalHeavy => &mut case_counts.legal_heavy,
            FlareCase::FewIllegalTurns => &mut case_counts.few_illegal_turns,
            FlareCase::ManyIllegalTurns => &mut case_counts.many_illegal_turns,
            FlareCase::Contracting => &mut case_counts.contracting,
        } += 1;
    }
    Ok(FlareCertificate {
        lambda_flare,
        m: found,
        m_max,
        max_len,
        count: samples.len(),
        power: setup.power,
        c_transversality: setup.c_tr,
        critical: setup.critical,
        m_nielsen: setup.m_nielsen,
        epsilon: FLARE_EPSILON,
        case_counts,
        samples,
        failures,
        label: EVIDENCE.to_string(),
    })
}

/// Re-checks a certificate's `M` on `count` random reduced words of length at most
/// `max_len`; returns the violations.
pub fn verify_flare(
    cert: &FlareCertificate,
    f: &GraphMap,
    family: &ParabolicFamily,
    count: usize,
    seed: u64,
) -> Result<Vec<FlareSample>> {
    let m = cert.m.ok_or_else(|| Error::InvalidParameter("certificate has no valid M".into()))?;
    let setup = Setup::new(f, family, cert.lambda_flare)?;
    let metric = ConedMetric::new(&setup.f.graph, family);
    let rank = setup.f.graph.rank() as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let len = rng.gen_range(1..=cert.max_len);
        let mut letters: Vec<i32> = Vec::with_capacity(len);
        while letters.len() < len {
            let x = rng.gen_range(1..=rank) * if rng.gen_bool(0.5) { 1 } else { -1 };
            if letters.last() != Some(&-x) {
                letters.push(x);
            }
        }
        let w = Word::reduce(&letters).cyclic_reduce().0;
        if !w.is_empty() && !setup.is_parabolic(&w) {
            words.push(w);
        }
    }
    Ok(words
        .into_par_iter()
        .map(|w| Orbit::new(&setup, &metric, w).evaluate(&setup, &metric, cert.lambda_flare, m))
        .filter(|s| !s.holds)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::rose_representative;
    use crate::words::{Alphabet, Endomorphism};

    #[test]
    fn flare_guards() {
        let id = rose_representative(&Endomorphism::identity(Alphabet::standard(2)));
        let empty = ParabolicFamily::empty(Alphabet::standard(2));
        assert_eq!(flare_certificate(&id, &empty, 2.0, 4, 4), Err(Error::NoCriticalConstant));
        let doubling = rose_representative(&Endomorphism::parse(&["a a"]).unwrap());
        assert_eq!(flare_certificate(&doubling, &ParabolicFamily::empty(Alphabet::standard(1)), 2.0, 4, 4), Err(Error::GroupIsZ));
    }

    #[test]
    fn fibonacci_relative_to_commutator() {
        let fib = rose_representative(&Endomorphism::parse(&["b", "a b"]).unwrap());
        let family = ParabolicFamily::parse(Alphabet::standard(2), &[&["a b a^-1 b^-1"]]).unwrap();
        let cert = flare_certificate(&fib, &family, 2.0, 8, 10).unwrap();
        assert!(cert.is_valid(), "{:?}", (cert.m, cert.failures.len()));
        assert!(cert.m.unwrap() <= 8);
        assert_eq!(verify_flare(&cert, &fib, &family, 500, 7).unwrap(), Vec::new());
    }
}

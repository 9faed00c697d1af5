//! Parabolic families: coned-off lengths, the transversality constant, type preservation
//! and the orbit structure of parabolic subgroups under an endomorphism.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{with_metric, GateStructure};
use crate::graphs::stallings::{stallings_core, subgroup_conjugate_into, CoreGraph};
use crate::graphs::{Dir, EdgePath, MarkedGraph};
use crate::maps::{is_irreducible, rose_representative, transition_matrix, GraphMap, Irreducibility};
use crate::words::{Alphabet, Endomorphism, Word};

/// Finitely generated subgroups `P_1, …, P_q` of a free group, given by generators.
#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicFamily {
    pub alphabet: Alphabet,
    pub names: Vec<String>,
    pub generators: Vec<Vec<Word>>,
    /// Based Stallings graphs over the rose.
    pub based: Vec<CoreGraph>,
    /// Basepoint-free cores over the rose.
    pub cores: Vec<CoreGraph>,
}

impl ParabolicFamily {
    pub fn empty(alphabet: Alphabet) -> Self {
        ParabolicFamily { alphabet, names: Vec::new(), generators: Vec::new(), based: Vec::new(), cores: Vec::new() }
    }

    /// Errors with `EmptyGeneratorSet` if some subgroup is trivial.
    pub fn new(alphabet: Alphabet, generators: Vec<Vec<Word>>) -> Result<Self> {
        let mut based = Vec::new();
        let mut cores = Vec::new();
        for gens in &generators {
            if let Some(w) = gens.iter().find(|w| !alphabet.contains(w)) {
                return Err(Error::UnknownLetter(w.to_string()));
            }
            let (b, c) = stallings_core(gens)?;
            based.push(b);
            cores.push(c);
        }
        let names = (1..=generators.len()).map(|i| format!("P{i}")).collect();
        Ok(ParabolicFamily { alphabet, names, generators, based, cores })
    }

    pub fn parse(alphabet: Alphabet, subgroups: &[&[&str]]) -> Result<Self> {
        let generators = subgroups
            .iter()
            .map(|gens| gens.iter().map(|s| alphabet.parse(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, generators)
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// A loop `w` in some `P_i ∩ g P_j g⁻¹` other than those forced by `i = j, g ∈ P_i`,
    /// as `(i, j, w)`; `None` when the family is malnormal.
    pub fn malnormality_witness(&self) -> Option<(usize, usize, Word)> {
        for i in 0..self.len() {
            for j in i..self.len() {
                if let Some(lp) = self.cores[i].nondiagonal_cycle(&self.cores[j], i == j) {
                    return Some((i, j, Word::reduce(&lp)));
                }
            }
        }
        None
    }

    /// Cores of each `P_i` immersed in `g`, via its marking.
    pub fn cores_in(&self, g: &MarkedGraph) -> Vec<CoreGraph> {
        self.generators
            .iter()
            .map(|gens| {
                let loops: Vec<Vec<Dir>> =
                    gens.iter().map(|w| g.loop_of_word(w).dirs).filter(|d| !d.is_empty()).collect();
                CoreGraph::from_loops(&loops, g.base, &|d| g.terminus(d)).pruned().0
            })
            .collect()
    }
}

/// Coned-off length on a fixed graph: every subpath lifting to a core costs at most 1.
pub struct ConedMetric<'a> {
    graph: &'a MarkedGraph,
    cores: Vec<CoreGraph>,
}

impl<'a> ConedMetric<'a> {
    pub fn new(graph: &'a MarkedGraph, family: &ParabolicFamily) -> Self {
        ConedMetric { graph, cores: family.cores_in(graph) }
    }

    /// End of the longest prefix of `dirs[i..]` lifting to some core.
    fn run_end(&self, dirs: &[Dir], i: usize) -> usize {
        let mut states: Vec<(usize, usize)> = self
            .cores
            .iter()
            .enumerate()
            .flat_map(|(k, c)| (0..c.num_vertices()).map(move |v| (k, v)))
            .collect();
        let mut j = i;
        while j < dirs.len() {
            states = states.into_iter().filter_map(|(k, v)| self.cores[k].step(v, dirs[j]).map(|w| (k, w))).collect();
            if states.is_empty() {
                break;
            }
            j += 1;
        }
        j
    }

    /// Least cost of a parsing into single edges at their length and core-liftable runs
    /// at cost 1.
    pub fn length(&self, dirs: &[Dir]) -> f64 {
        let n = dirs.len();
        let mut best = vec![f64::INFINITY; n + 1];
        best[0] = 0.0;
        for i in 0..n {
            let here = best[i];
            let step = here + self.graph.dir_length(dirs[i]);
            if step < best[i + 1] {
                best[i + 1] = step;
            }
            // Subpaths of a liftable run lift too, so every shorter end is also reachable.
            let end = self.run_end(dirs, i);
            for b in &mut best[i + 1..=end] {
                if here + 1.0 < *b {
                    *b = here + 1.0;
                }
            }
        }
        best[n]
    }
}

/// `l_T̂(ρ̂)`: length of `ρ` with parabolic subpaths coned off.
pub fn coned_length(g: &MarkedGraph, rho: &EdgePath, family: &ParabolicFamily) -> f64 {
    ConedMetric::new(g, family).length(&rho.dirs)
}

/// `1 + L` where `L` is the longest metric length of a legal path inside some core.
/// With this `C`, every legal `ρ` has `l_T̂(ρ̂) ≥ l_T(ρ) / C`.
pub fn transversality_constant(f: &GraphMap, family: &ParabolicFamily, gates: &GateStructure) -> Result<f64> {
    let f = with_metric(f);
    let g = &f.graph;
    let mut longest = 0.0f64;
    for (k, core) in family.cores_in(g).iter().enumerate() {
        // `memo[(v, d)]`: longest legal continuation after arriving at `v` along `d`.
        // `None` marks a state on the current stack.
        let mut memo: HashMap<(usize, Dir), Option<f64>> = HashMap::new();
        for v in 0..core.num_vertices() {
            for (d, w) in core.out_labels(v).collect::<Vec<_>>() {
                let tail = legal_extension(core, g, gates, w, d, &mut memo).ok_or(Error::LegalCycleInParabolic(k))?;
                longest = longest.max(g.dir_length(d) + tail);
            }
        }
    }
    Ok(1.0 + longest)
}

fn legal_extension(
    core: &CoreGraph,
    g: &MarkedGraph,
    gates: &GateStructure,
    v: usize,
    last: Dir,
    memo: &mut HashMap<(usize, Dir), Option<f64>>,
) -> Option<f64> {
    if let Some(x) = memo.get(&(v, last)) {
        return *x;
    }
    memo.insert((v, last), None);
    let mut best = 0.0f64;
    for (d, w) in core.out_labels(v).collect::<Vec<_>>() {
        if d == -last || gates.same_gate(-last, d) {
            continue;
        }
        best = best.max(g.dir_length(d) + legal_extension(core, g, gates, w, d, memo)?);
    }
    memo.insert((v, last), Some(best));
    Some(best)
}

/// Per subgroup, `(j, g)` with `φ(P_i) ≤ g·P_j·g⁻¹` (least `j`, shortest `g`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypePreservation {
    pub targets: Vec<Option<(usize, Word)>>,
}

impl TypePreservation {
    pub fn holds(&self) -> bool {
        self.targets.iter().all(Option::is_some)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.targets.iter().position(Option::is_none)
    }
}

fn image_target(images: &[Word], family: &ParabolicFamily) -> Option<(usize, Word)> {
    let (based, _) = stallings_core(images).ok()?;
    (0..family.len()).find_map(|j| subgroup_conjugate_into(&based, &family.based[j]).map(|g| (j, g)))
}

pub fn check_strictly_type_preserving(phi: &Endomorphism, family: &ParabolicFamily) -> TypePreservation {
    let targets = family
        .generators
        .iter()
        .map(|gens| {
            let images: Vec<Word> = gens.iter().map(|w| phi.apply(w)).collect();
            image_target(&images, family)
        })
        .collect();
    TypePreservation { targets }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OrbitKind {
    /// `φ^period(P) ≤ g·P·g⁻¹`; the HNN extension `⟨P, g⁻¹t^period⟩` is parabolic.
    Periodic { period: usize, conjugator: Word, description: String },
    /// Reaches the periodic subgroup `into` after `steps` applications.
    PrePeriodic { steps: usize, into: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    /// Least common multiple of the periods (1 if there are none).
    pub k: usize,
    pub periodic: Vec<usize>,
    pub kinds: Vec<OrbitKind>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Follows `i ↦ j` for `φ(P_i) ≤ g·P_j·g⁻¹`. Errors with `NotTypePreserving` when some
/// `P_i` has no target and `HorizonExceeded` when a walk does not close within `k_max`.
pub fn parabolic_orbits(phi: &Endomorphism, family: &ParabolicFamily, k_max: usize) -> Result<OrbitReport> {
    let tp = check_strictly_type_preserving(phi, family);
    if let Some(i) = tp.first_failure() {
        return Err(Error::NotTypePreserving(i));
    }
    let next: Vec<usize> = tp.targets.iter().map(|t| t.as_ref().map(|x| x.0).unwrap_or(0)).collect();
    let mut kinds = Vec::new();
    let mut periodic = Vec::new();
    let mut k = 1;
    for i in 0..family.len() {
        let mut first_visit: HashMap<usize, usize> = HashMap::from([(i, 0)]);
        let mut cur = i;
        let mut step = 0;
        let (mu, period) = loop {
            if step >= k_max {
                return Err(Error::HorizonExceeded(k_max));
            }
            cur = next[cur];
            step += 1;
            if let Some(&s) = first_visit.get(&cur) {
                break (s, step - s);
            }
            first_visit.insert(cur, step);
        };
        if mu == 0 {
            let images: Vec<Word> = family.generators[i].iter().map(|w| phi.power(period as u32).apply(w)).collect();
            let (based, _) = stallings_core(&images)?;
            let g = subgroup_conjugate_into(&based, &family.based[i]).ok_or(Error::NotTypePreserving(i))?;
            let gens: Vec<String> = family.generators[i].iter().map(|w| family.alphabet.format(w)).collect();
            let t = if period == 1 { "t".to_string() } else { format!("t^{period}") };
            let stable = if g.is_empty() { t } else { format!("({})^-1 {t}", family.alphabet.format(&g)) };
            let description = format!("<{}, {}>", gens.join(", "), stable);
            k = k / gcd(k, period) * period;
            periodic.push(i);
            kinds.push(OrbitKind::Periodic { period, conjugator: g, description });
        } else {
            let into = (0..mu).fold(i, |x, _| next[x]);
            kinds.push(OrbitKind::PrePeriodic { steps: mu, into });
        }
    }
    Ok(OrbitReport { k, periodic, kinds })
}

/// Generators of the subgroup carried by a set of rose petals.
fn petal_family(edges: &[usize]) -> Vec<Word> {
    edges.iter().map(|&e| Word::generator(e)).collect()
}

/// One step of the invariant factor search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorStep {
    /// Power of `φ` whose rose representative was examined.
    pub power: u32,
    /// Petals of the invariant subgraph (empty while irreducible).
    pub edges: Vec<usize>,
    /// Scott complexity `(free rank, number of factors)` of `G = H * F_k`.
    pub complexity: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorSearch {
    pub family: Option<ParabolicFamily>,
    pub chain: Vec<FactorStep>,
}

/// Looks for a proper invariant free factor among the powers `φ^m`, `m ≤ depth`, then
/// enlarges it while a strictly larger proper invariant factor exists; every
/// enlargement strictly lowers the complexity. Returns the final factor as a one-member
/// family, or `None` if every tested power is irreducible.
pub fn find_invariant_factor_system(phi: &Endomorphism, depth: u32) -> Result<FactorSearch> {
    let rank = phi.rank();
    let mut chain = Vec::new();
    for m in 1..=depth {
        let f = rose_representative(&phi.power(m));
        let mat = transition_matrix(&f);
        let Irreducibility::Reducible { witness } = is_irreducible(&mat)? else {
            chain.push(FactorStep { power: m, edges: Vec::new(), complexity: (rank, 0) });
            continue;
        };
        let n = mat.size();
        let mut current = witness;
        let step = |edges: &[usize]| FactorStep { power: m, edges: edges.to_vec(), complexity: (n - edges.len(), 1) };
        chain.push(step(&current));
        while let Some(bigger) = (0..n)
            .filter(|e| !current.contains(e))
            .map(|e| mat.forward_closure(&[current.clone(), vec![e]].concat()))
            .find(|c| c.len() < n)
        {
            if chain.len() as u32 >= depth {
                let families = chain.iter().map(|s| vec![petal_family(&s.edges)]).collect();
                return Err(Error::DepthExhausted { depth, chain: families });
            }
            current = bigger;
            chain.push(step(&current));
        }
        let family = ParabolicFamily::new(phi.alphabet().clone(), vec![petal_family(&current)])?;
        return Ok(FactorSearch { family: Some(family), chain });
    }
    Ok(FactorSearch { family: None, chain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::gate_structure;

    fn fib() -> Endomorphism {
        Endomorphism::parse(&["b", "a b"]).unwrap()
    }

    #[test]
    fn coned_runs() {
        let a2 = Alphabet::standard(2);
        let fam = ParabolicFamily::parse(a2.clone(), &[&["a"]]).unwrap();
        let f = rose_representative(&Endomorphism::identity(a2.clone()));
        let rho = f.graph.loop_of_word(&a2.parse("a a a b a a").unwrap());
        assert_eq!(coned_length(&f.graph, &rho, &fam), 3.0);
        let triv = ParabolicFamily::empty(a2);
        assert_eq!(coned_length(&f.graph, &rho, &triv), 6.0);
    }

    #[test]
    fn fibonacci_commutator() {
        let fam = ParabolicFamily::parse(Alphabet::standard(2), &[&["a b a^-1 b^-1"]]).unwrap();
        let tp = check_strictly_type_preserving(&fib(), &fam);
        assert_eq!(tp.targets, vec![Some((0, Word::identity()))]);
        let rep = parabolic_orbits(&fib(), &fam, 10).unwrap();
        assert_eq!(rep.k, 1);
        assert!(matches!(&rep.kinds[0], OrbitKind::Periodic { period: 1, conjugator, .. } if conjugator.is_empty()));
        assert!(fam.malnormality_witness().is_none());
        let f = rose_representative(&fib());
        let c = transversality_constant(&f, &fam, &gate_structure(&f).unwrap()).unwrap();
        assert!(c > 1.0 && c.is_finite());
    }

    #[test]
    fn not_preserved() {
        let fam = ParabolicFamily::parse(Alphabet::standard(2), &[&["a"]]).unwrap();
        assert_eq!(check_strictly_type_preserving(&fib(), &fam).first_failure(), Some(0));
    }

    #[test]
    fn malnormality() {
        let fam = ParabolicFamily::parse(Alphabet::standard(2), &[&["a a"]]).unwrap();
        assert!(fam.malnormality_witness().is_some());
    }

    #[test]
    fn invariant_factor() {
        let phi = Endomorphism::parse(&["a", "a b"]).unwrap();
        let search = find_invariant_factor_system(&phi, 3).unwrap();
        assert_eq!(search.family.unwrap().generators, vec![vec![Word::generator(0)]]);
        assert_eq!(search.chain.last().unwrap().complexity, (1, 1));
        assert!(find_invariant_factor_system(&fib(), 6).unwrap().family.is_none());
        assert!(find_invariant_factor_system(&Endomorphism::parse(&["a a"]).unwrap(), 3).unwrap().family.is_none());
    }
}

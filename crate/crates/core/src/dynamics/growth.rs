//! Exponential versus polynomial growth of conjugacy classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{constants_at_power, gate_structure, is_train_track, with_metric, GateStructure};
use crate::graphs::{Dir, Turn};
use crate::maps::{transition_matrix, GraphMap};
use crate::spectral::{spectral_radius, DEFAULT_TOL};
use crate::words::Word;

/// Iteration stops once a loop or word holds more letters than this.
pub const MAX_ITERATE_LETTERS: usize = 1_000_000;

/// Iterates whose maximal legal segment is checked against the certificate's forecast.
const FORECAST_STEPS: usize = 3;

/// A legal segment longer than the critical constant `C`: under iteration its surviving
/// legal part has length at least `λ^i·(s − C) + C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialCertificate {
    pub iterate: usize,
    pub segment: Vec<Dir>,
    pub length: f64,
    pub critical: f64,
    pub lambda: f64,
    /// Lower bounds on the longest legal segment of iterates `iterate + 1 ..`.
    pub forecast: Vec<f64>,
}

impl ExponentialCertificate {
    pub fn bound(&self, i: usize) -> f64 {
        self.lambda.powi(i as i32) * (self.length - self.critical) + self.critical
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GrowthKind {
    Exponential(ExponentialCertificate),
    /// Only a statement about iterates up to `horizon`.
    PolynomialUpToHorizon { horizon: usize, degree: Option<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub kind: GrowthKind,
    /// `‖φⁿ(g)‖`, cyclic word length, for `n` up to the horizon or the letter cap.
    pub lengths: Vec<usize>,
    /// Metric length of the tightened loop `[fⁿ(ρ)]`.
    pub loop_lengths: Vec<f64>,
    /// Longest cyclic maximal legal segment of each loop iterate.
    pub max_legal: Vec<f64>,
    /// Cyclic illegal turn counts; nonincreasing for a train track map.
    pub illegal_counts: Vec<usize>,
}

impl GrowthVerdict {
    pub fn is_exponential(&self) -> bool {
        matches!(self.kind, GrowthKind::Exponential(_))
    }
}

/// Turns of a closed path including the one closing it up.
fn cyclic_turns(dirs: &[Dir]) -> impl Iterator<Item = Turn> + '_ {
    let n = dirs.len();
    (0..n).map(move |i| Turn(-dirs[i], dirs[(i + 1) % n]))
}

pub fn cyclic_illegal_count(gates: &GateStructure, dirs: &[Dir]) -> usize {
    cyclic_turns(dirs).filter(|&t| !gates.is_legal_turn(t)).count()
}

/// Maximal legal segments of a closed path, read cyclically. A legal loop is one segment.
pub fn cyclic_legal_segments(gates: &GateStructure, dirs: &[Dir]) -> Vec<Vec<Dir>> {
    let n = dirs.len();
    let Some(cut) = (0..n).find(|&i| !gates.is_legal_turn(Turn(-dirs[i], dirs[(i + 1) % n]))) else {
        return if n == 0 { Vec::new() } else { vec![dirs.to_vec()] };
    };
    // Rotate to start just after an illegal turn; the wrap-around turn is then illegal.
    let rotated: Vec<Dir> = dirs[cut + 1..].iter().chain(&dirs[..=cut]).copied().collect();
    gates.legal_segments(&rotated).into_iter().map(|(a, b)| rotated[a..b].to_vec()).collect()
}

/// Smallest `d` whose `(d+1)`-st differences end in zeros, else the smallest `d` whose
/// `d`-th differences end within 10% of each other. Tails are the last three terms.
fn fit_degree(seq: &[usize]) -> Option<usize> {
    const TAIL: usize = 3;
    let mut levels = vec![seq.iter().map(|&x| x as f64).collect::<Vec<f64>>()];
    while levels.last().is_some_and(|l| l.len() > TAIL) {
        let next = levels.last().unwrap().windows(2).map(|w| w[1] - w[0]).collect();
        levels.push(next);
    }
    let tail = |l: &Vec<f64>| l[l.len().saturating_sub(TAIL)..].to_vec();
    for d in 0..levels.len() - 1 {
        if levels[d + 1].len() >= TAIL && tail(&levels[d + 1]).iter().all(|&x| x == 0.0) {
            return Some(d);
        }
    }
    levels.iter().position(|l| {
        let t = tail(l);
        let (lo, hi) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        t.len() == TAIL && lo > 0.0 && (hi - lo) <= 0.1 * hi
    })
}

/// Classifies the growth of `[g]` under `f`, using the critical constant of `f` itself.
pub fn classify_growth(f: &GraphMap, g: &Word, horizon: usize) -> Result<GrowthVerdict> {
    let m = transition_matrix(f);
    let critical = if m.is_permutation() || spectral_radius(&m, DEFAULT_TOL) <= 1.0 + 1e-9 {
        None
    } else {
        // Reducible maps have no Perron-Frobenius metric and so no critical constant.
        constants_at_power(f, 1, 1.0).ok().and_then(|c| c.critical)
    };
    classify_growth_with(f, g, horizon, critical)
}

/// `classify_growth` with a given critical constant for `f`; `None` never certifies
/// exponential growth.
pub fn classify_growth_with(f: &GraphMap, g: &Word, horizon: usize, critical: Option<f64>) -> Result<GrowthVerdict> {
    if horizon < 4 {
        return Err(Error::InvalidParameter(format!("growth horizon {horizon} is below 4")));
    }
    let (w0, _) = g.cyclic_reduce();
    if w0.is_empty() {
        return Err(Error::TrivialElement);
    }
    let f = with_metric(f);
    let gates = gate_structure(&f)?;
    let train_track = is_train_track(&f);
    let lambda = spectral_radius(&transition_matrix(&f), DEFAULT_TOL);
    let graph = &f.graph;

    let mut lengths = Vec::new();
    let mut w = w0;
    for _ in 0..=horizon {
        lengths.push(w.len());
        if w.len() > MAX_ITERATE_LETTERS {
            break;
        }
        w = f.endo.apply(&w).cyclic_reduce().0;
    }

    let mut rho = graph.cyclic_loop_of_word(g);
    let mut loop_lengths = Vec::new();
    let mut max_legal = Vec::new();
    let mut illegal_counts = Vec::new();
    let mut certificate: Option<ExponentialCertificate> = None;
    for n in 0..=horizon {
        let segs = cyclic_legal_segments(&gates, &rho.dirs);
        let (best, best_len) = segs
            .iter()
            .map(|s| (s, graph.dirs_length(s)))
            .fold((None, 0.0), |acc, (s, l)| if l > acc.1 { (Some(s), l) } else { acc });
        loop_lengths.push(graph.path_length(&rho));
        max_legal.push(best_len);
        illegal_counts.push(cyclic_illegal_count(&gates, &rho.dirs));
        if let (None, Some(c), Some(seg)) = (&certificate, critical, best) {
            if best_len > c {
                certificate = Some(ExponentialCertificate {
                    iterate: n,
                    segment: seg.clone(),
                    length: best_len,
                    critical: c,
                    lambda,
                    forecast: Vec::new(),
                });
            }
        }
        if let Some(cert) = &certificate {
            if n >= cert.iterate + FORECAST_STEPS {
                break;
            }
        }
        if rho.dirs.len() > MAX_ITERATE_LETTERS {
            break;
        }
        rho = graph.cyclically_tighten(&f.apply_path(&rho));
    }
    debug_assert!(
        !train_track || illegal_counts.windows(2).all(|w| w[1] <= w[0]),
        "illegal turn count increased: {illegal_counts:?}"
    );

    let kind = match certificate {
        Some(mut cert) => {
            cert.forecast = (1..=FORECAST_STEPS).map(|i| cert.bound(i)).collect();
            GrowthKind::Exponential(cert)
        }
        None => GrowthKind::PolynomialUpToHorizon { horizon, degree: fit_degree(&lengths) },
    };
    Ok(GrowthVerdict { kind, lengths, loop_lengths, max_legal, illegal_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::rose_representative;
    use crate::words::Endomorphism;

    fn rose(images: &[&str]) -> GraphMap {
        rose_representative(&Endomorphism::parse(images).unwrap())
    }

    #[test]
    fn degree_fitting() {
        assert_eq!(fit_degree(&[3; 8]), Some(0));
        assert_eq!(fit_degree(&(1..10).collect::<Vec<_>>()), Some(1));
        assert_eq!(fit_degree(&(1..10).map(|n| n * n + 1).collect::<Vec<_>>()), Some(2));
        assert_eq!(fit_degree(&(1..12).map(|n| 1usize << n).collect::<Vec<_>>()), None);
    }

    #[test]
    fn growth_examples() {
        let fib = rose(&["b", "a b"]);
        let v = classify_growth(&fib, &Word::generator(0), 10).unwrap();
        assert_eq!(&v.lengths[..6], &[1, 1, 2, 3, 5, 8]);
        let GrowthKind::Exponential(cert) = &v.kind else { panic!("{v:?}") };
        assert!(cert.length > cert.critical);
        for (i, b) in cert.forecast.iter().enumerate() {
            assert!(v.max_legal[cert.iterate + i + 1] >= b - 1e-9);
        }

        let red = rose(&["a", "a b"]);
        let a = classify_growth(&red, &Word::generator(0), 8).unwrap();
        assert_eq!(a.kind, GrowthKind::PolynomialUpToHorizon { horizon: 8, degree: Some(0) });
        let b = classify_growth(&red, &Word::generator(1), 8).unwrap();
        assert_eq!(b.lengths, (1..=9).collect::<Vec<_>>());
        assert_eq!(b.kind, GrowthKind::PolynomialUpToHorizon { horizon: 8, degree: Some(1) });

        assert_eq!(classify_growth(&fib, &Word::identity(), 8), Err(Error::TrivialElement));
    }
}

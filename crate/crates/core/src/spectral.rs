//! Perron–Frobenius data of irreducible transition matrices and the induced metric.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{is_irreducible, transition_matrix, GraphMap, Irreducibility, TransitionMatrix};

pub const DEFAULT_TOL: f64 = 1e-9;
const MIN_TOL: f64 = 1e-14;
const MAX_ITERS: usize = 1_000_000;
const REPORT_TOL: f64 = 1e-13;
const EXTRA_ITERS: usize = 1_000;

/// `lambda` lies in `[lambda - radius, lambda + radius]`; `eigenvector` is positive
/// with least entry 1 and `‖Mv − λv‖∞ ≤ radius · ‖v‖∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronData {
    pub lambda: f64,
    pub radius: f64,
    pub eigenvector: Vec<f64>,
    pub tol: f64,
}

impl PerronData {
    pub fn lower(&self) -> f64 {
        self.lambda - self.radius
    }

    pub fn upper(&self) -> f64 {
        self.lambda + self.radius
    }

    /// Ordering of enclosures; `None` when they overlap.
    pub fn cmp_enclosure(&self, other: &PerronData) -> Option<Ordering> {
        if self.upper() < other.lower() {
            Some(Ordering::Less)
        } else if self.lower() > other.upper() {
            Some(Ordering::Greater)
        } else {
            None
        }
    }
}

/// Collatz–Wielandt bounds `min_i (Mv)_i / v_i` and `max_i (Mv)_i / v_i`.
pub fn collatz_wielandt(m: &TransitionMatrix, v: &[f64]) -> (f64, f64) {
    let n = m.size();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..n {
        let mv: f64 = (0..n).map(|j| m.get(i, j) as f64 * v[j]).sum();
        let r = mv / v[i];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

/// Perron–Frobenius eigenvalue and right eigenvector of an irreducible matrix.
pub fn pf_eigen(m: &TransitionMatrix, tol: f64) -> Result<PerronData> {
    if let Irreducibility::Reducible { witness } = is_irreducible(m)? {
        return Err(Error::NotIrreducible { witness });
    }
    Ok(power_iteration(m, tol))
}

fn power_iteration(m: &TransitionMatrix, tol: f64) -> PerronData {
    let n = m.size();
    let mut v = vec![1.0f64; n];
    let mut best = (f64::NEG_INFINITY, f64::INFINITY, v.clone());
    let mut extra = 0;
    for _ in 0..MAX_ITERS {
        let (lo, hi) = collatz_wielandt(m, &v);
        if hi - lo < best.1 - best.0 {
            best = (lo, hi, v.clone());
        }
        // Reports print twelve decimals, so iterate a little past `tol`.
        if best.1 - best.0 <= tol {
            extra += 1;
        }
        if hi - lo <= tol.min(REPORT_TOL * hi.max(1.0)) || extra > EXTRA_ITERS {
            break;
        }
        // (M + I) is primitive, so its powers converge to the Perron direction.
        let mut w: Vec<f64> = (0..n).map(|i| v[i] + (0..n).map(|j| m.get(i, j) as f64 * v[j]).sum::<f64>()).collect();
        let s = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        w.iter_mut().for_each(|x| *x /= s);
        v = w;
    }
    let (lo, hi, mut v) = best;
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    v.iter_mut().for_each(|x| *x /= min);
    PerronData { lambda: 0.5 * (lo + hi), radius: 0.5 * (hi - lo), eigenvector: v, tol }
}

/// Nonnegative Perron vector of any nonzero matrix, scaled to maximum 1.
pub fn perron_vector_any(m: &TransitionMatrix, tol: f64) -> Vec<f64> {
    let n = m.size();
    let mut v = vec![1.0f64; n];
    for _ in 0..10_000 {
        let mut w: Vec<f64> = (0..n).map(|i| v[i] + (0..n).map(|j| m.get(i, j) as f64 * v[j]).sum::<f64>()).collect();
        let s = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        w.iter_mut().for_each(|x| *x /= s);
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        if delta <= tol {
            break;
        }
    }
    v
}

/// Largest Perron eigenvalue over the irreducible diagonal blocks (0 for nilpotent matrices).
pub fn spectral_radius(m: &TransitionMatrix, tol: f64) -> f64 {
    m.components()
        .into_iter()
        .map(|c| {
            let sub = TransitionMatrix::new(c.iter().map(|&i| c.iter().map(|&j| m.get(i, j)).collect()).collect());
            if sub.is_zero() {
                0.0
            } else {
                power_iteration(&sub, tol).lambda
            }
        })
        .fold(0.0, f64::max)
}

/// Compares stretch factors, tightening the tolerance tenfold while enclosures overlap.
pub fn compare_lambda(a: &TransitionMatrix, b: &TransitionMatrix, tol: f64) -> Result<Ordering> {
    let mut t = tol;
    loop {
        let (pa, pb) = (pf_eigen(a, t)?, pf_eigen(b, t)?);
        if let Some(o) = pa.cmp_enclosure(&pb) {
            return Ok(o);
        }
        if t <= MIN_TOL {
            return Ok(Ordering::Equal);
        }
        t = (t / 10.0).max(MIN_TOL);
    }
}

/// Eigen-data whose eigenvector gives edge lengths with `l(f(e)) = λ l(e)`:
/// the Perron vector of the transposed transition matrix.
pub fn metric_eigen(f: &GraphMap, tol: f64) -> Result<PerronData> {
    pf_eigen(&transition_matrix(f).transpose(), tol)
}

/// Sets edge lengths to the eigenvector, scaled so the shortest edge has length 1.
pub fn assign_metric(f: &GraphMap, pf: &PerronData) -> GraphMap {
    let min = pf.eigenvector.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = f.clone();
    out.graph.lengths = Some(pf.eigenvector.iter().map(|x| x / min).collect());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::rose_representative;
    use crate::words::Endomorphism;

    const PHI: f64 = 1.618_033_988_749_895;

    #[test]
    fn fibonacci_eigen() {
        let m = TransitionMatrix::new(vec![vec![0, 1], vec![1, 1]]);
        let pf = pf_eigen(&m, DEFAULT_TOL).unwrap();
        assert!((pf.lambda - PHI).abs() < 1e-9);
        assert!((pf.eigenvector[1] / pf.eigenvector[0] - PHI).abs() < 1e-8);
        assert!(pf.radius <= DEFAULT_TOL);
    }

    #[test]
    fn small_eigen() {
        let pf = pf_eigen(&TransitionMatrix::new(vec![vec![2]]), DEFAULT_TOL).unwrap();
        assert!((pf.lambda - 2.0).abs() < 1e-12);
        let pf = pf_eigen(&TransitionMatrix::new(vec![vec![1, 1], vec![1, 1]]), DEFAULT_TOL).unwrap();
        assert!((pf.lambda - 2.0).abs() < 1e-9);
        assert!((pf.eigenvector[0] - pf.eigenvector[1]).abs() < 1e-9);
        let err = pf_eigen(&TransitionMatrix::identity(2), DEFAULT_TOL).unwrap_err();
        assert_eq!(err, Error::NotIrreducible { witness: vec![0] });
    }

    #[test]
    fn metrics() {
        let f = rose_representative(&Endomorphism::parse(&["b", "a b"]).unwrap());
        let g = assign_metric(&f, &metric_eigen(&f, DEFAULT_TOL).unwrap());
        let l = g.graph.lengths.unwrap();
        assert!((l[0] - 1.0).abs() < 1e-12 && (l[1] - PHI).abs() < 1e-8);
        let sapir = rose_representative(&Endomorphism::parse(&["a b", "b a"]).unwrap());
        let l = assign_metric(&sapir, &metric_eigen(&sapir, DEFAULT_TOL).unwrap()).graph.lengths.unwrap();
        assert!((l[0] - 1.0).abs() < 1e-9 && (l[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reducible_radius() {
        let m = TransitionMatrix::new(vec![vec![1, 1], vec![0, 2]]);
        assert!((spectral_radius(&m, DEFAULT_TOL) - 2.0).abs() < 1e-9);
    }
}

//! Exhaustive search for periodic conjugacy classes `φ^k([g]) = [g^d]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::words::{cyclic_classes, Endomorphism, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtoroidalWitness {
    pub g: Word,
    pub k: u32,
    pub d: u32,
    /// `d ≥ 2`: `⟨g, t⟩` is a Baumslag–Solitar subgroup `BS(1, d)` of the mapping torus.
    pub baumslag_solitar: bool,
}

/// First witness in `(‖g‖, k, d)` order, `g` running over cyclically reduced classes up to
/// rotation and inversion. `None` means no witness within the bounds.
pub fn atoroidal_scan(phi: &Endomorphism, k_max: u32, d_max: u32, len_max: usize) -> Option<AtoroidalWitness> {
    let powers: Vec<Endomorphism> = (1..=k_max).map(|k| phi.power(k)).collect();
    for len in 1..=len_max {
        let classes = cyclic_classes(phi.rank(), len);
        for (k, pk) in powers.iter().enumerate() {
            let images: Vec<Word> = classes.par_iter().map(|g| pk.apply(g).cyclic_reduce().0).collect();
            for d in 1..=d_max {
                // ‖g^d‖ = d·‖g‖ for cyclically reduced g.
                let hit = (0..classes.len())
                    .into_par_iter()
                    .find_first(|&i| images[i].len() == d as usize * len && images[i].is_conjugate(&classes[i].pow(d as i64)));
                if let Some(i) = hit {
                    return Some(AtoroidalWitness { g: classes[i].clone(), k: k as u32 + 1, d, baumslag_solitar: d >= 2 });
                }
            }
        }
    }
    None
}

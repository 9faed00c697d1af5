//! Growth of elements, Nielsen paths, atoroidality scans and flaring certificates.

mod atoroidal;
mod flare;
mod growth;
mod nielsen;

pub use atoroidal::{atoroidal_scan, AtoroidalWitness};
pub use flare::{flare_certificate, verify_flare, FlareCase, FlareCertificate, FlareSample, FLARE_EPSILON};
pub use growth::{classify_growth, classify_growth_with, cyclic_illegal_count, cyclic_legal_segments, ExponentialCertificate, GrowthKind, GrowthVerdict};
pub use nielsen::{enumerate_nielsen_paths, NielsenPath, NielsenReport};

use crate::error::{Error, Result};
use crate::maps::{transition_matrix, GraphMap};
use crate::spectral::{spectral_radius, DEFAULT_TOL};

/// `NonExpanding` for maps permuting edges or with spectral radius at most 1.
fn require_expanding(f: &GraphMap) -> Result<()> {
    let m = transition_matrix(f);
    if m.is_permutation() || spectral_radius(&m, DEFAULT_TOL) <= 1.0 + 1e-9 {
        return Err(Error::NonExpanding);
    }
    Ok(())
}

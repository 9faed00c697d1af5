pub mod dynamics;
pub mod error;
pub mod gates;
pub mod graphs;
pub mod io;
pub mod maps;
pub mod moves;
pub mod parabolic;
pub mod spectral;
pub mod words;

pub use error::{Error, Result};
pub use words::{Alphabet, Endomorphism, Letter, Word};

use thiserror::Error;

use crate::maps::GraphMap;
use crate::words::Word;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("subgroup needs at least one nontrivial generator")]
    EmptyGeneratorSet,
    #[error("transition matrix is zero")]
    ZeroMatrix,
    #[error("map is reducible; invariant edge set {witness:?}")]
    NotIrreducible { witness: Vec<usize> },
    #[error("split position {position} is not an interior vertex of the image of edge {edge}")]
    NotAVertexImage { edge: usize, position: usize },
    #[error("the two directions have images with no common initial segment")]
    IllegalFoldRequest,
    #[error("vertex {0} is not a free valence-one vertex")]
    NotValenceOne(usize),
    #[error("vertex {0} is not a free valence-two vertex")]
    NotValenceTwo(usize),
    #[error("vertex {0} does not have exactly one gate")]
    NotOneGate(usize),
    #[error("the endomorphism is not injective: {0} maps to the identity")]
    NotInjective(Word),
    #[error("move budget of {budget} exhausted")]
    BudgetExhausted { budget: usize, state: Box<GraphMap> },
    #[error("edge {0} maps to a vertex; collapse it first")]
    CollapsedEdgeImage(usize),
    #[error("stretch factor is not greater than one")]
    NonExpanding,
    #[error("no power up to {0} satisfies the expansion inequality")]
    PowerBudgetExhausted(u32),
    #[error("path has zero length")]
    ZeroLength,
    #[error("a legal loop lies inside parabolic subgroup {0}")]
    LegalCycleInParabolic(usize),
    #[error("parabolic subgroup {0} has no conjugate of a family member containing its image")]
    NotTypePreserving(usize),
    #[error("parabolic target walk did not close within {0} steps")]
    HorizonExceeded(usize),
    #[error("invariant factor search did not settle within depth {depth}")]
    DepthExhausted { depth: u32, chain: Vec<Vec<Vec<Word>>> },
    #[error("element is trivial")]
    TrivialElement,
    #[error("critical constant undefined: stretch factor does not exceed the transversality constant")]
    NoCriticalConstant,
    #[error("the free group has rank one")]
    GroupIsZ,
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("marking check failed: {0}")]
    MarkingMismatch(String),
}

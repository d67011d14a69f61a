use thiserror::Error;

use crate::subspace::Subspace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("modulus {0} is too large (must be below 2^15)")]
    ModulusTooLarge(u32),
    #[error("0 has no multiplicative inverse")]
    ZeroInverse,
    #[error("operands carry different moduli ({0} vs {1})")]
    MixedModulus(u32, u32),
    #[error("ambient mismatch: {0}")]
    AmbientMismatch(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),
    #[error("budget exceeded: {needed} subspaces to enumerate, budget is {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("every input must be a hyperplane: subspace {index} has dimension {dim}")]
    NotHyperplanes { index: usize, dim: usize },
    #[error("the hyperplanes share the common line {0}")]
    CommonLine(Subspace),
    #[error("point set is empty")]
    EmptySet,
    #[error("the frame is not a basis")]
    NotABasis,
    #[error("family is empty")]
    EmptyFamily,
    #[error("family members must all have dimension {expected}, got {found}")]
    MixedDimension { expected: usize, found: usize },
    #[error("member dimensions {0} + {1} must be below the ambient dimension {2}")]
    DimOverflow(usize, usize, usize),
    #[error("member dimensions {0} + {1} must exceed the ambient dimension {2}")]
    DimUnderflow(usize, usize, usize),
    #[error("subspaces are not transverse")]
    NotTransverse,
    #[error("malformed tower: {0}")]
    MalformedTower(String),
    #[error("bound spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

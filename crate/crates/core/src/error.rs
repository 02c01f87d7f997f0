use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    NotSquare { len: usize },
    NonFinite,
    NotSelfAdjoint { defect: f64 },
    NotProjection,
    NotUnitary { defect: f64 },
    DegenerateRay,
    InvalidState(String),
    NonCommuting { first: usize, second: usize },
    InvalidContext(String),
    NearDuplicate { existing: usize, distance: f64 },
    TooManyAtoms { atoms: usize, limit: usize },
    UnknownNode(usize),
    NotBelow { from: usize, to: usize },
    InvalidMeasure(String),
    InvalidSection(String),
    MissingIndex(String),
    InstanceTooLarge { count: usize, limit: usize },
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Self::NotSquare { len } => write!(f, "{len} entries do not form a square matrix"),
            Self::NonFinite => write!(f, "matrix has non-finite entries"),
            Self::NotSelfAdjoint { defect } => {
                write!(f, "matrix is not self-adjoint (defect {defect:e})")
            }
            Self::NotProjection => write!(f, "matrix is not a projection"),
            Self::NotUnitary { defect } => write!(f, "matrix is not unitary (defect {defect:e})"),
            Self::DegenerateRay => write!(f, "degenerate ray"),
            Self::InvalidState(msg) => write!(f, "invalid state: {msg}"),
            Self::NonCommuting { first, second } => {
                write!(f, "observables {first} and {second} do not commute")
            }
            Self::InvalidContext(msg) => write!(f, "invalid context: {msg}"),
            Self::NearDuplicate { existing, distance } => write!(
                f,
                "projection lies within the canonicalization grid of projection {existing} \
                 (distance {distance:e}) without being equal to it"
            ),
            Self::TooManyAtoms { atoms, limit } => {
                write!(f, "context with {atoms} atoms exceeds the limit of {limit}")
            }
            Self::UnknownNode(id) => write!(f, "unknown node id {id}"),
            Self::NotBelow { from, to } => write!(f, "node {to} is not below node {from}"),
            Self::InvalidMeasure(msg) => write!(f, "invalid measure: {msg}"),
            Self::InvalidSection(msg) => write!(f, "invalid section: {msg}"),
            Self::MissingIndex(msg) => write!(f, "missing index: {msg}"),
            Self::InstanceTooLarge { count, limit } => {
                write!(f, "instance too large: {count} strategies exceed {limit}")
            }
            Self::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

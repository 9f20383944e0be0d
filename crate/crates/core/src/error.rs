use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} is not a triangle ({count} vertices)")]
    NonTriangular { face: usize, count: usize },

    #[error("non-manifold mesh: {0}")]
    NonManifold(String),

    #[error("mesh is not orientable")]
    NonOrientable,

    #[error("mesh is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("unsupported topology: {0}")]
    Topology(String),

    #[error("face {face} is degenerate")]
    Degenerate { face: usize },

    #[error("invalid Beltrami coefficient: {0}")]
    InvalidMu(String),

    #[error("map is locally degenerate on face {face} (f_z = 0)")]
    VanishingDerivative { face: usize },

    #[error("circle fit failed for boundary loop {loop_index}: {message}")]
    CircleFit { loop_index: usize, message: String },

    #[error("invalid conformal module: {0}")]
    Module(String),

    #[error("boundary vertex {vertex} coincides with its circle center")]
    UndefinedTangent { vertex: usize },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("flattening produced {flips} flipped faces")]
    Flattening { flips: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("size mismatch: {0}")]
    Mismatch(String),
}

impl Error {
    /// Stable machine-readable error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::NonTriangular { .. } => "non_triangular",
            Error::NonManifold(_) => "non_manifold",
            Error::NonOrientable => "non_orientable",
            Error::Disconnected { .. } => "disconnected",
            Error::Topology(_) => "topology",
            Error::Degenerate { .. } => "degenerate",
            Error::InvalidMu(_) => "invalid_mu",
            Error::VanishingDerivative { .. } => "degenerate_map",
            Error::CircleFit { .. } => "circle_fit",
            Error::Module(_) => "module",
            Error::UndefinedTangent { .. } => "undefined_tangent",
            Error::Solver(_) => "solver",
            Error::Flattening { .. } => "flattening",
            Error::Config(_) => "config",
            Error::Mismatch(_) => "mismatch",
        }
    }
}

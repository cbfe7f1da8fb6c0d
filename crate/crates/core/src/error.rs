//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors raised by geometry construction, scoring, and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An operation that needs at least one point got an empty cloud.
    EmptyCloud,
    /// A mesh query was built from a mesh with no (non-degenerate) triangles.
    EmptyMesh,
    /// A triangle refers to a vertex index outside the vertex list.
    InvalidTriangleIndex { triangle: usize, index: u32, vertex_count: usize },
    /// A coordinate was NaN or infinite.
    NonFiniteCoordinate,
    /// Surface sampling on a mesh with zero total area.
    ZeroSurfaceArea,
    /// A parameter violated its documented precondition.
    InvalidParameter(&'static str),
    /// Model/section index out of range.
    IndexOutOfRange { index: usize, count: usize },
    /// Normals are required but missing (run normal estimation first).
    MissingNormals,
    /// Per-point attribute length does not match the point count.
    LengthMismatch { expected: usize, actual: usize },
    /// A negative point-to-mesh distance was passed to the distance score.
    NegativeDistance,
    /// A training set ended up with an empty class.
    EmptyTrainingClass { class: &'static str },
    /// The SVM model has no Platt parameters yet.
    Uncalibrated,
    /// A model category is not present in the class registry.
    UnknownCategory(String),
    /// A class name would collide with or shadow the reserved background class.
    ReservedCategory(String),
    /// A label value is outside the registered class range.
    InvalidClassId { label: u16, num_classes: usize },
    /// The evaluation had no valid (labeled) points.
    EmptyEvaluation,
    /// A scene spec generates no points.
    EmptyScene,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyCloud => write!(f, "point cloud is empty"),
            Error::EmptyMesh => write!(f, "mesh has no usable triangles"),
            Error::InvalidTriangleIndex { triangle, index, vertex_count } => write!(
                f,
                "triangle {triangle} refers to vertex {index} but the mesh has {vertex_count} vertices"
            ),
            Error::NonFiniteCoordinate => write!(f, "coordinate is NaN or infinite"),
            Error::ZeroSurfaceArea => write!(f, "mesh surface area is zero"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::IndexOutOfRange { index, count } => {
                write!(f, "index {index} out of range (count {count})")
            }
            Error::MissingNormals => {
                write!(f, "normals are required; run normal estimation first")
            }
            Error::LengthMismatch { expected, actual } => {
                write!(f, "attribute length {actual} does not match point count {expected}")
            }
            Error::NegativeDistance => write!(f, "distances must be non-negative"),
            Error::EmptyTrainingClass { class } => {
                write!(f, "training set has no {class} samples")
            }
            Error::Uncalibrated => write!(f, "SVM model is not Platt-calibrated"),
            Error::UnknownCategory(name) => write!(f, "category {name:?} is not registered"),
            Error::ReservedCategory(name) => {
                write!(f, "category {name:?} collides with the reserved background class")
            }
            Error::InvalidClassId { label, num_classes } => {
                write!(f, "label {label} is outside the {num_classes}-class registry")
            }
            Error::EmptyEvaluation => write!(f, "no labeled points to evaluate"),
            Error::EmptyScene => write!(f, "scene spec generates no points"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

//! Error type shared by all modules.

/// Errors reported by tensor, linear algebra and approximation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A mode index does not exist for the tensor order at hand.
    #[error("mode index {mode} out of range for an order-{order} tensor (valid modes are 0..{order})")]
    ModeIndex { mode: usize, order: usize },

    /// Operand shapes are incompatible.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A constructor received inconsistent dimensions or buffer lengths.
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    /// A triangular factor has an exactly zero diagonal entry.
    #[error("singular triangular factor: r[{index},{index}] is exactly zero")]
    SingularTriangular { index: usize },

    /// A sketch specification is internally inconsistent.
    #[error("invalid sketch spec: {0}")]
    SketchSpec(String),

    /// Rank or oversampling parameters are infeasible for the input.
    #[error("infeasible rank parameters: {0}")]
    Rank(String),

    /// Diagnostics were requested at a scale they refuse to handle.
    #[error("diagnostics require every mode size at most {max}, got {got}")]
    DiagnosticsScale { max: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

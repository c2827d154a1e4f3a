use thiserror::Error;

/// Errors from the magnetostatic field model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid mirror geometry: {0}")]
    InvalidGeometry(String),
    #[error("field model is only valid above the surface, got y = {y} m")]
    BelowSurface { y: f64 },
    #[error("evaluation point ({x} m, {y} m) lies inside the magnetic layer")]
    InsideLayer { x: f64, y: f64 },
    #[error("exact stripe field requires a finite stripe count")]
    InfiniteArray,
    #[error("field direction is undefined at ({x} m, {y} m): in-plane field is zero")]
    UndefinedDirection { x: f64, y: f64 },
    #[error("squared field magnitude is negative ({value}) at y = {y} m")]
    NegativeSquaredField { value: f64, y: f64 },
}

/// Errors from single-atom dynamics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid atom species: {0}")]
    InvalidSpecies(String),
    #[error("invalid propagation request: {0}")]
    InvalidInput(String),
    #[error("atom penetrates the mirror: surface field must exceed {required_b1} T for a {drop_height} m drop")]
    Penetration { drop_height: f64, required_b1: f64 },
    #[error("integration failed at t = {t} s: {reason}")]
    IntegrationFailure { t: f64, reason: String },
    #[error("trajectory contains no bounce")]
    NoBounce,
}

/// Errors from the Monte Carlo ensemble engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble specification: {0}")]
    InvalidSpec(String),
    #[error("atom {index} (seed {seed}) failed: {source}")]
    Atom {
        index: usize,
        seed: u64,
        #[source]
        source: DynamicsError,
    },
    #[error("time {t} s lies outside the series range [{t_min}, {t_max}] s")]
    OutOfRange { t: f64, t_min: f64, t_max: f64 },
    #[error("could not build worker pool: {0}")]
    ThreadPool(String),
}

/// Errors from the specularity analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("fit window [{t_min}, {t_max}) s contains {found} samples, at least 3 required")]
    TooFewFitSamples { t_min: f64, t_max: f64, found: usize },
    #[error("invalid analysis window: {0}")]
    InvalidWindow(String),
    #[error("degenerate fit: all sample times coincide")]
    DegenerateFit,
}

/// Errors reading tabular input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsvError {
    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("no data rows")]
    Empty,
}

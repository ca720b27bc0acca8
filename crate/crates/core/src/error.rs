use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("degenerate geometry: ORU and target positions coincide")]
    DegenerateGeometry,

    #[error("domain error: {0}")]
    Domain(String),

    /// Two serving means are too close for the closed-form survival function.
    #[error(
        "ill-conditioned exponential sum: means {a:e} and {b:e} have relative gap {gap:e} <= 1e-9; \
         perturb one of them before evaluating"
    )]
    IllConditioned { a: f64, b: f64, gap: f64 },

    #[error("input-range violation: {0}")]
    InputRange(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("endpoint {addr} unreachable: {source}")]
    Endpoint {
        addr: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid placement requires a perfect-square node count, got {0}")]
    NonSquareGrid(usize),

    #[error("reuse factor K must be a perfect square for grid coloring, got {0}")]
    NonSquareReuse(usize),

    #[error("caching distribution undefined: M(g_c - 1) = {0} must be at least 1")]
    UndefinedCachingExponent(f64),

    #[error(
        "cache size M = {cache} exceeds the caching support m* = {support}; \
         raise the cluster size g_c or lower M"
    )]
    CacheExceedsSupport { cache: usize, support: usize },

    #[error("cache size M = {cache} must be smaller than library size m = {library}")]
    CacheNotBelowLibrary { cache: f64, library: usize },

    #[error("constant {0} is not given in closed form; supply it explicitly")]
    MissingConstant(&'static str),

    #[error("no pathloss row for {0}")]
    MissingPathlossRow(String),

    #[error("configuration invalid: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: String, expected: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("TOML parse error: {0}")]
    TomlDe(#[from] toml::de::Error),

    #[error("TOML write error: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

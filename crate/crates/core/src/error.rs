use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph size {r}x{c} exceeds the {max_r}x{max_c} limit")]
    SizeLimit {
        r: usize,
        c: usize,
        max_r: usize,
        max_c: usize,
    },

    #[error("edge bit {bit} is out of range for a {r}x{c} graph")]
    EdgeOutOfRange { bit: usize, r: usize, c: usize },

    #[error("node labels must be strictly increasing and match the node counts")]
    BadLabels,

    #[error("label {label} out of range ({limit} {side}s available)")]
    LabelOutOfRange {
        label: usize,
        limit: usize,
        side: &'static str,
    },

    #[error("unknown builtin kernel `{0}`")]
    UnknownKernel(String),

    #[error("kernel expects a {p}x{q} submatrix, got {rows}x{cols}")]
    ShapeMismatch {
        p: usize,
        q: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is {m}x{n} but the kernel needs at least {p}x{q}")]
    DimensionShortfall {
        m: usize,
        n: usize,
        p: usize,
        q: usize,
    },

    #[error("kernel `{0}` is not flagged symmetric; use the ordered path")]
    AsymmetricKernel(String),

    #[error("exact enumeration over {terms:.3e} terms exceeds the {limit:.1e} budget")]
    CombinatorialBudget { terms: f64, limit: f64 },

    #[error("invalid dimensions: m={m}, n={n}")]
    InvalidDimensions { m: usize, n: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("subgraphs must share one labeled index universe: {0}")]
    UniverseMismatch(String),

    #[error("no principal support found up to level {max_level}; kernel is a.s. constant")]
    NoSupportDetected { max_level: usize },

    #[error("variance table has no nonzero entries")]
    EmptyNonzeroPattern,

    #[error("principal degree {d} exceeds kernel level {max}")]
    DegreeOutOfRange { d: usize, max: usize },

    #[error("plug-in variance is degenerate: U^h2 = {0}")]
    DegeneratePlugin(f64),

    #[error("config validation: {0}")]
    Config(String),

    #[error("csv parse error at line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

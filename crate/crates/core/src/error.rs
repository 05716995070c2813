use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode label must be nonempty")]
    EmptyLabel,

    #[error("duplicate mode label `{0}`")]
    DuplicateLabel(String),

    #[error("wiring mismatch at element {element}: {detail}")]
    Wiring { element: usize, detail: String },

    #[error("element {element} has a {rows}x{cols} matrix but wires {inputs} inputs and {outputs} outputs")]
    Shape {
        element: usize,
        rows: usize,
        cols: usize,
        inputs: usize,
        outputs: usize,
    },

    #[error("refusing to apply a non-physical circuit: {0}")]
    NonPhysical(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("packet truncated by grid: {mass:.3e} of the probability lies outside [{r_min}, {r_max}]")]
    Truncated { mass: f64, r_min: f64, r_max: f64 },

    #[error("packets nearly identical (overlap {overlap}); orthogonalization is ill-conditioned")]
    Conditioning { overlap: f64 },

    #[error("window [{a}, {b}] is invalid or outside the grid")]
    Window { a: f64, b: f64 },

    #[error("domain mismatch: {0}")]
    Domain(String),

    #[error("cannot reduce onto `{label}`: probability {probability:.3e} is below the zero-norm threshold")]
    ZeroNormReduction { label: String, probability: f64 },

    #[error("projector set is incomplete: probabilities sum to {total}")]
    Incomplete { total: f64 },

    #[error("projectors `{0}` and `{1}` overlap")]
    NotOrthogonal(String, String),

    #[error("duplicate outcome label `{0}`")]
    DuplicateOutcome(String),

    #[error("calibration failed: best contrast {best} is below {threshold}")]
    Calibration { best: f64, threshold: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

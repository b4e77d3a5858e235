use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by a jet whose constant term {value:e} is below {eps:e}")]
    DivisionBySingular { value: f64, eps: f64 },

    #[error("constant term {re}+{im}i lies on the branch cut of {op}")]
    BranchViolation { op: &'static str, re: f64, im: f64 },

    #[error("jet order {requested} exceeds available order {available}")]
    OrderExceeded { requested: usize, available: usize },

    #[error("constant-term system is singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("strict pseudoconvexity lost at {location}: smallest Levi eigenvalue {eigenvalue:e}")]
    PseudoconvexityLost { location: String, eigenvalue: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("monomial {a:?},{b:?} conflicts with its conjugate partner")]
    SymmetryConflict { a: Vec<u8>, b: Vec<u8> },

    #[error("stage {stage} did not raise the vanishing order (best slope {slope:.3})")]
    OrderStall { stage: usize, slope: f64 },

    #[error("collar too thin: depth {depth:e} on ray {ray} leaves the domain")]
    CollarTooThin { ray: usize, depth: f64 },

    #[error("Gram-Schmidt pivot {pivot:e} is degenerate")]
    DegenerateFrame { pivot: f64 },

    #[error("point is not interior (rho = {rho:e})")]
    NotInterior { rho: f64 },

    #[error("point is not on the boundary (rho = {rho:e})")]
    NotOnBoundary { rho: f64 },

    #[error("approximate solution stage {stage} is below the required {required}")]
    StageTooLow { stage: usize, required: usize },

    #[error("dimension mismatch: expected n = {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },

    #[error("boundary root finding failed at node {node}")]
    NewtonDiverged { node: usize },

    #[error("Richardson extrapolation unstable: successive estimates {first} and {second}")]
    ExtrapolationUnstable { first: f64, second: f64 },

    #[error("quadrature node {node}: {source}")]
    Node {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

use crate::heigen::{HEigenPair, LambdaCurve};
use crate::supmo::{BetaSolveTrace, InnerSolveResult};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("order {0} is odd; this operation requires an even order")]
    OddOrder(usize),

    #[error("dense tensor needs {entries} logical entries, budget is {budget}")]
    SizeBudget { entries: u128, budget: u64 },

    #[error("tensor has non-integer weights or components; exact evaluation unavailable")]
    NotInteger,

    #[error("inner solver hit the iteration limit (grad norm {:.3e})", best.grad_norm)]
    InnerIterationLimit { best: Box<InnerSolveResult> },

    #[error("fixed-point search did not settle after {steps} steps (last beta {beta})")]
    FixedPointLimit { beta: f64, steps: usize },

    #[error("n-schedule exhausted before successive fixed points agreed to {}", trace.epsilon)]
    OuterBudget { trace: Box<BetaSolveTrace> },

    #[error("no estimator run converged (best KKT residual {:.3e})", best.kkt_residual)]
    EstimatorFailure { best: Box<HEigenPair> },

    #[error("lambda_min curve failed at n = {n}: {reason}")]
    CurveFailure {
        partial: Box<LambdaCurve>,
        n: usize,
        reason: String,
    },
}

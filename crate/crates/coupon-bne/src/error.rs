use thiserror::Error;

/// Errors raised by constructors, solvers and the oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BneError {
    #[error("{name} = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("prior does not sum to one: d0 + d1 = {sum}")]
    InvalidPrior { sum: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("signal {signal} is never sent, its posterior is unconstrained")]
    ZeroSignalMass { signal: u8 },

    #[error("no root: {what}")]
    NoRoot { what: String },

    #[error("coupon value {rho} outside (0, inf)")]
    InvalidRange { rho: f64 },

    #[error("scoring rule `{0}` is not symmetric")]
    NonSymmetricRule(String),

    #[error("invalid scoring rule `{name}`: {reason}")]
    InvalidRule { name: String, reason: String },

    #[error("report {x} outside [0, 1]")]
    DomainError { x: f64 },

    #[error("asymmetric system has no interior solution: {0}")]
    NoInteriorSolution(String),

    #[error("invalid valuation distribution: {0}")]
    InvalidDistribution(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("strawman assumption violated: {0}")]
    StrawmanViolated(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("grid budget exceeded: {evaluations} evaluations > {budget}")]
    BudgetExceeded { evaluations: u64, budget: u64 },
}

pub type Result<T> = std::result::Result<T, BneError>;

use thiserror::Error;

use crate::params::{CaseTag, HypothesisCheck};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("parameter {name} = {value} is outside the supported range")]
    OutOfRange { name: &'static str, value: i64 },
    #[error("genus must be at least 2, got {0}")]
    GenusTooSmall(i64),
    #[error("rank must be positive, got {0}")]
    RankNotPositive(i64),
    #[error("degree must be non-negative, got {0}")]
    NegativeDegree(i64),
    #[error("number of sections must be positive, got {0}")]
    NoSections(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("k ≤ r regime not covered (k = {k}, r = {r})")]
    KLeR { k: i64, r: i64 },
    #[error("{case}: {check}")]
    HypothesisFailed {
        case: CaseTag,
        check: Box<HypothesisCheck>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("a chain needs at least two components, got {0}")]
    TooFewComponents(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("component C_{component} {problem}")]
    InternalCoverage {
        component: i64,
        problem: &'static str,
    },
    #[error("twisted summand O({a}P + ({d1}-{a})Q) on C_{component} is outside 0..={d1}")]
    TwistOutOfRange { component: i64, a: i64, d1: i64 },
    #[error("vanishing table of C_{component} at {point} has total multiplicity {total}, expected {expected}")]
    MultiplicityMismatch {
        component: i64,
        point: char,
        total: i64,
        expected: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("no pairing of the P and Q vanishings was supplied")]
    PairingNotGiven,
    #[error("pairing does not use the orders of the table with their multiplicities")]
    PairingMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {size} sections on one side, oracle bound is {bound}")]
    InstanceTooLarge { size: i64, bound: i64 },
    #[error("the two sides have different total multiplicity ({left} vs {right})")]
    UnequalTotals { left: i64, right: i64 },
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {found}, expected {expected}")]
    Schema { found: u64, expected: u64 },
}

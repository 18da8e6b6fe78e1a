//! Exact combinatorial engine for limit linear series skeletons of coherent
//! systems of type `(g, r, d, k)` on chains of elliptic curves.
//!
//! The pipeline is: [`params::classify`] a tuple into one of four cases,
//! [`construct::construct`] the skeleton (bundles, gluings, vanishing tables),
//! [`verify::verify`] it against the limit linear series conditions, and
//! [`ledger::audit_equals_rho`] that the dimension count equals the
//! Brill–Noether number. [`oracle`] is a brute-force matcher used to
//! cross-check the verifier, and [`sweep`] runs all of it over a lattice of
//! tuples.

pub mod chain;
pub mod construct;
pub mod error;
pub mod json;
pub mod ledger;
pub mod oracle;
pub mod params;
pub mod sweep;
pub mod verify;

pub use chain::{
    build_chain, degree_balance, BundleKind, ChainCurve, ComponentBundle, ComponentRole,
    GluingSpec, GluingTag, LimitSeriesSkeleton, OrderMultiset, Summand, VanishingTable,
};
pub use construct::{construct, tail_count, vanishing_tables, BlockIndex};
pub use error::{
    ClassifyError, ConstructError, DocumentError, OracleError, ParamsError, VerifyError,
};
pub use ledger::{audit_equals_rho, ledger, AuditVerdict, DimensionLedger, Reading};
pub use oracle::{cross_validate, exists_feasible_pairing, PairConstraint, PairingInstance};
pub use params::{
    brill_noether_rho, classify, decompose, rho, CaseTag, Classification, Decomposition, Params,
};
pub use verify::{slope_ok, verify, SlopeQuery, VerificationReport};

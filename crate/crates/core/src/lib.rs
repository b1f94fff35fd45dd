//! Pooled-testing design: cost models for square-array, Dorfman, Sterrett
//! and halving schemes, their optimal configurations, robust pool-size
//! choice under unknown prevalence, a numerical verification suite for the
//! array's optimality structure, and simulation oracles.

// `!(a < b)` is used deliberately so that NaN inputs take the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod optimal;
pub mod robust;
pub mod schemes;
pub mod verify;

pub use error::{Error, Result};
pub use montecarlo::{estimate_t, exact_expected_tests, Cohort, Outcome, SimulationReport};
pub use optimal::{
    a2_critical_pair, a2_q5, optimum, CandidateWindow, ContinuousOptimum, CriticalPair,
    EfficiencyInterval, IntegerOptimum, OptimalConfiguration,
};
pub use robust::{bayes_choice, minimax_choice, Criterion, PriorSpec, QGrid, RobustChoice};
pub use schemes::{evaluate, EvaluationPoint, Prevalence, Scale, Scheme, SchemeSize};
pub use verify::{default_suite, VerificationReport};

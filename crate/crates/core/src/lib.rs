//! Covert capacity region of discrete memoryless degraded broadcast channels
//! observed by a warden.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel_model`] holds pmfs, row-stochastic channels and the
//!   two-user-plus-warden model, plus the JSON model file format.
//! * [`info_measures`] implements KL divergence, χ² distances and (conditional)
//!   mutual information, all in nats.
//! * [`lp`] is a small dense simplex used for linear feasibility questions.
//! * [`validation`] certifies non-redundancy, absolute continuity and
//!   stochastic degradedness.
//! * [`covert_rates`] evaluates the superposition rate pair for a fixed choice
//!   of parameters, single-user covert capacities and the time-sharing tests.
//! * [`region_optimizer`] searches the parameter space for Pareto points,
//!   the time-sharing gain γ* and parametric sweeps.
//! * [`taylor_verify`] checks the small-μ expansions behind the computable
//!   region numerically.

pub mod channel_model;
pub mod covert_rates;
pub mod error;
pub mod info_measures;
pub mod lp;
pub mod nelder_mead;
pub mod presets;
pub mod region_optimizer;
pub mod taylor_verify;
pub mod validation;

pub use channel_model::{load_model, save_model, BcWardenModel, Channel, Distribution, ModelFile};
pub use covert_rates::{
    alpha_coefficients, chi2_nu, rate_pair, single_user_capacity, ts_optimality_condition,
    ts_region_bound, RatePair, SingleUserCapacity, SuperpositionParams, TsCondition,
};
pub use error::{CovertError, Result};
pub use info_measures::Nats;
pub use region_optimizer::{
    gamma_star, max_l2_given_l1, maximize_weighted, pareto_boundary, sweep, FamilyFile, GammaStar,
    ModelFamily, OptimizerConfig, ParetoFront, SweepRow, Weight,
};
pub use validation::{
    check_conditions, find_degrading_channel, ConditionsReport, DegradationCertificate,
};

//! Joint keyword selection and matching for sponsored-search campaigns.
//!
//! The pipeline has two stages. First, a conjugate Gibbs sampler imputes
//! each keyword's unobserved performance indices (impressions and CTR)
//! across the three matching types, borrowing strength within an ad-group.
//! Second, a branch-and-bound solver maximizes the expected campaign
//! profit subject to a chance constraint on the budget, evaluated by Monte
//! Carlo simulation over posterior scenario draws, and is benchmarked
//! against seven simpler targeting strategies.

pub mod baselines;
pub mod campaign;
pub mod dataset;
pub mod imputation;
pub mod report;
pub mod solver;
pub mod statcore;

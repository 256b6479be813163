//! Landscape k-complexity of isotropic centered Gaussian random fields on
//! flat high-dimensional domains.
//!
//! The library computes, for a Schoenberg covariance model with spectral
//! moments (λ2, λ4):
//!
//! * the complexity exponent Θ*_k(V, v) governing the exponential growth in
//!   dimension d of the mean number of index-k critical points below the
//!   level v·√(d+1) on domains of volume exponent V, with all of its regime
//!   branches, critical volumes V_c¹ < V_c² and critical levels v_c, v_c^k
//!   ([`complexity`]);
//! * the GOE large-deviation rate functions I and J_k = (k+1)·I(−·) behind
//!   those branches ([`rate`]);
//! * exact finite-dimension mean critical-point counts in log scale via the
//!   Kac-Rice / GOE representation, estimated by reproducible log-domain
//!   Monte Carlo over GOE eigenvalues and cross-checked against small-matrix
//!   quadrature oracles ([`goe`], [`kac_rice`]).
//!
//! Everything is pure and deterministic: estimators derive one independent
//! random substream per sample index, so results are bit-identical for a
//! fixed seed regardless of worker count.

pub mod complexity;
pub mod covariance;
pub mod goe;
pub mod kac_rice;
pub mod rate;

pub use complexity::{
    critical_level_k, critical_level_mid, critical_volume_1, critical_volume_2, domain_scale,
    edges, optimizer_x, theta_dk, theta_dv, theta_k, theta_k_real, theta_total,
    volume_exponent_of_radius, volume_exponent_of_side, LandscapeParams, Regime, ThetaResult,
};
pub use covariance::{
    covariance_value, moments_by_quadrature, spectral_moments, CovarianceModel, SpectralMoments,
};
pub use goe::{
    estimate_exp_phi_term, estimate_exp_term, estimate_indicator_term, log_phi, oracle_small_d,
    sample_goe_eigs, substream, GoeSpec, McEstimate,
};
pub use kac_rice::{
    convergence_study, log_gamma, log_mean_crt, log_mean_crt_below, volume_exponent, DomainSpec,
    MeanCountResult,
};
pub use rate::{rate_i, rate_i_prime, rate_j};

/// Errors surfaced by the toolkit.
///
/// The CLI maps these onto exit codes: invalid configuration (2), numeric
/// failure (3), regime refusal (4).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("moments undefined: {0}")]
    MomentsUndefined(String),
    #[error("not a Schoenberg covariance: lambda4 = {lambda4} < 3*lambda2^2 = {bound}")]
    NotSchoenberg { lambda4: f64, bound: f64 },
    #[error("no functional form available for this model")]
    NoFunctionalForm,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("oracle failure: {0}")]
    OracleFailure(String),
    #[error("decomposition failure: {0}")]
    Decomposition(String),
    #[error("regime not MC-verifiable: {0}")]
    RegimeRefusal(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("mismatched request: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

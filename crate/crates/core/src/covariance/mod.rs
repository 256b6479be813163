//! Schoenberg covariance models and their spectral moments.
//!
//! A Schoenberg covariance is an isotropic covariance valid in every
//! dimension: r(x) = ∫ e^{-xw} G(dw) for a probability measure G on
//! [0, ∞), written as a function of the *squared* distance x. The spectral
//! moments λ2 = -2 r'(0) and λ4 = 12 r''(0) are the variances of the first
//! and second directional derivatives of the field and satisfy the
//! Schoenberg inequality λ4 ≥ 3 λ2², with equality exactly for the
//! Bargmann-Fock covariance e^{-ax}.

mod bessel;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance below which the excess λ4 - 3λ2² is treated as zero.
///
/// Downstream formulas divide by E** - E* ∝ excess and become unstable below
/// double-precision noise, so anything smaller than this is the degenerate
/// (Bargmann-Fock) case.
pub const BF_REL_TOL: f64 = 1.0e-12;

/// A Schoenberg covariance specification.
///
/// All variants have unit variance (r(0) = 1). Arguments are squared
/// distances throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum CovarianceModel {
    /// Matérn covariance with smoothness `nu` (> 2 so both moments exist)
    /// and spatial range `ell`.
    #[serde(rename = "matern")]
    Matern { nu: f64, ell: f64 },
    /// r(x) = e^{-ax}, the Bargmann-Fock field.
    #[serde(rename = "bargmann_fock")]
    SquaredExponential { a: f64 },
    /// Finite mixture r(x) = Σ p_i e^{-x w_i} with Σ p_i = 1.
    #[serde(rename = "mixture")]
    DiscreteSchoenberg { atoms: Vec<(f64, f64)> },
    /// Moments given directly; no functional form.
    #[serde(rename = "moments")]
    ExplicitMoments { lambda2: f64, lambda4: f64 },
}

impl CovarianceModel {
    /// Checks the per-variant invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceModel::Matern { nu, ell } => {
                if !(*nu > 2.0) {
                    return Err(Error::MomentsUndefined(format!(
                        "Matern requires nu > 2 for finite lambda4, got nu = {nu}"
                    )));
                }
                if !(*ell > 0.0) {
                    return Err(Error::InvalidModel(format!("Matern ell must be > 0, got {ell}")));
                }
                Ok(())
            }
            CovarianceModel::SquaredExponential { a } => {
                if !(*a > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "squared-exponential decay rate must be > 0, got {a}"
                    )));
                }
                Ok(())
            }
            CovarianceModel::DiscreteSchoenberg { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidModel("mixture needs at least one atom".into()));
                }
                let mut total = 0.0;
                for &(p, w) in atoms {
                    if !(p > 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "mixture weights must be positive, got {p}"
                        )));
                    }
                    if !(w >= 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "mixture rates must be nonnegative, got {w}"
                        )));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1.0e-12 {
                    return Err(Error::InvalidModel(format!(
                        "mixture weights must sum to 1 within 1e-12, got {total}"
                    )));
                }
                Ok(())
            }
            CovarianceModel::ExplicitMoments { lambda2, lambda4 } => {
                SpectralMoments::new(*lambda2, *lambda4).map(|_| ())
            }
        }
    }

    fn has_functional_form(&self) -> bool {
        !matches!(self, CovarianceModel::ExplicitMoments { .. })
    }
}

/// The pair (λ2, λ4): the single source of truth for E* and E**.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoments {
    /// Variance of a first partial derivative of the field.
    pub lambda2: f64,
    /// Variance of a second partial derivative of the field.
    pub lambda4: f64,
    /// λ4 - 3λ2², clamped to exactly 0 in the degenerate case.
    pub excess: f64,
    /// Whether the excess is zero within [`BF_REL_TOL`].
    pub is_bargmann_fock: bool,
}

impl SpectralMoments {
    /// Validates the Schoenberg inequality and classifies the degenerate case.
    pub fn new(lambda2: f64, lambda4: f64) -> Result<Self> {
        Self::new_with_tol(lambda2, lambda4, BF_REL_TOL)
    }

    /// As [`SpectralMoments::new`] but with a caller-chosen clamping
    /// tolerance; used by the finite-difference oracle whose moment
    /// estimates carry ~1e-7 relative noise.
    pub(crate) fn new_with_tol(lambda2: f64, lambda4: f64, rel_tol: f64) -> Result<Self> {
        if !(lambda2 > 0.0) || !lambda2.is_finite() {
            return Err(Error::InvalidModel(format!("lambda2 must be positive and finite, got {lambda2}")));
        }
        if !(lambda4 > 0.0) || !lambda4.is_finite() {
            return Err(Error::InvalidModel(format!("lambda4 must be positive and finite, got {lambda4}")));
        }
        let excess = lambda4 - 3.0 * lambda2 * lambda2;
        if excess.abs() <= rel_tol * lambda4 {
            return Ok(SpectralMoments { lambda2, lambda4, excess: 0.0, is_bargmann_fock: true });
        }
        if excess < 0.0 {
            return Err(Error::NotSchoenberg { lambda4, bound: 3.0 * lambda2 * lambda2 });
        }
        Ok(SpectralMoments { lambda2, lambda4, excess, is_bargmann_fock: false })
    }
}

/// Closed-form spectral moments (λ2, λ4) of a model.
///
/// λ2 = -2 r'(0) and λ4 = 12 r''(0); for the mixture these are
/// λ2 = 2 Σ p_i w_i and λ4 = 12 Σ p_i w_i².
pub fn spectral_moments(model: &CovarianceModel) -> Result<SpectralMoments> {
    model.validate()?;
    match model {
        CovarianceModel::Matern { nu, ell } => {
            let l2 = ell * ell;
            let lambda2 = nu / ((nu - 1.0) * l2);
            let lambda4 = 3.0 * nu * nu / ((nu - 1.0) * (nu - 2.0) * l2 * l2);
            SpectralMoments::new(lambda2, lambda4)
        }
        CovarianceModel::SquaredExponential { a } => SpectralMoments::new(2.0 * a, 12.0 * a * a),
        CovarianceModel::DiscreteSchoenberg { atoms } => {
            let m1: f64 = atoms.iter().map(|&(p, w)| p * w).sum();
            let m2: f64 = atoms.iter().map(|&(p, w)| p * w * w).sum();
            SpectralMoments::new(2.0 * m1, 12.0 * m2)
        }
        CovarianceModel::ExplicitMoments { lambda2, lambda4 } => {
            SpectralMoments::new(*lambda2, *lambda4)
        }
    }
}

/// Correlation value r(x) at squared distance x ≥ 0.
pub fn covariance_value(model: &CovarianceModel, x: f64) -> Result<f64> {
    model.validate()?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("squared distance must be >= 0, got {x}")));
    }
    if !model.has_functional_form() {
        return Err(Error::NoFunctionalForm);
    }
    if x == 0.0 {
        return Ok(1.0); // unit variance for every functional variant
    }
    match model {
        CovarianceModel::Matern { nu, ell } => {
            let z = (2.0 * nu * x).sqrt() / ell;
            if z > 1400.0 {
                return Ok(0.0); // K_nu underflows; the correlation is ~e^{-z}
            }
            let k = bessel::bessel_k(*nu, z)?;
            let scale = (2.0f64).powf(nu - 1.0) * libm::tgamma(*nu);
            Ok(z.powf(*nu) * k / scale)
        }
        CovarianceModel::SquaredExponential { a } => Ok((-a * x).exp()),
        CovarianceModel::DiscreteSchoenberg { atoms } => {
            Ok(atoms.iter().map(|&(p, w)| p * (-w * x).exp()).sum())
        }
        CovarianceModel::ExplicitMoments { .. } => unreachable!(),
    }
}

/// Independent oracle for [`spectral_moments`]: estimates r'(0), r''(0) by
/// finite differences of the correlation with Richardson extrapolation.
///
/// Works on ρ(t) = r(t²), which is even in the distance t, so central
/// stencils stay in the domain x ≥ 0:
/// λ2 = -ρ''(0) and λ4 = ρ''''(0). The extrapolation ladder carries the
/// error exponents of the covariance class (pure even powers, plus the
/// |t|^{2ν} family for a Matérn model), never its closed-form moments.
pub fn moments_by_quadrature(model: &CovarianceModel) -> Result<SpectralMoments> {
    model.validate()?;
    if !model.has_functional_form() {
        return Err(Error::NoFunctionalForm);
    }
    let rho = |t: f64| covariance_value(model, t * t);

    // Locate the decay scale: h0 with 1 - rho(h0) in [0.02, 0.25].
    let mut h0 = 1.0;
    for _ in 0..400 {
        let drop = 1.0 - rho(h0)?;
        if drop > 0.25 {
            h0 *= 0.5;
        } else if drop < 0.02 {
            h0 *= 2.0;
        } else {
            break;
        }
        if !(1.0e-8..=1.0e8).contains(&h0) {
            return Err(Error::OracleFailure(
                "could not bracket the covariance decay scale".into(),
            ));
        }
    }

    let matern_nu = match model {
        CovarianceModel::Matern { nu, .. } => Some(*nu),
        _ => None,
    };

    // rho''(0) from (2 rho(h) - 2)/h^2, error exponents {2,4,..} u {2nu-2,..}.
    let d2 = |h: f64| -> Result<f64> { Ok((2.0 * rho(h)? - 2.0) / (h * h)) };
    let exps2 = exponent_ladder(matern_nu.map(|nu| 2.0 * nu - 2.0));
    let (rho2, err2) = extrapolate(&d2, h0, 8, &exps2)?;

    // rho''''(0) from (2 rho(2h) - 8 rho(h) + 6)/h^4, exponents {2,..} u {2nu-4,..}.
    let d4 = |h: f64| -> Result<f64> {
        Ok((2.0 * rho(2.0 * h)? - 8.0 * rho(h)? + 6.0) / (h * h * h * h))
    };
    let exps4 = exponent_ladder(matern_nu.map(|nu| 2.0 * nu - 4.0));
    let (rho4, err4) = extrapolate(&d4, 0.5 * h0, 6, &exps4)?;

    let lambda2 = -rho2;
    let lambda4 = rho4;
    if err2 > 5.0e-7 * lambda2.abs() || err4 > 5.0e-7 * lambda4.abs() {
        return Err(Error::OracleFailure(format!(
            "finite-difference extrapolation stalled: rel err lambda2 {:.2e}, lambda4 {:.2e}",
            err2 / lambda2.abs(),
            err4 / lambda4.abs()
        )));
    }
    SpectralMoments::new_with_tol(lambda2, lambda4, 1.0e-5)
}

/// Merged, ascending error-exponent list: even powers 2,4,6,... plus the
/// arithmetic family started by `extra` when present.
fn exponent_ladder(extra: Option<f64>) -> Vec<f64> {
    let mut exps: Vec<f64> = (1..=10).map(|j| 2.0 * j as f64).collect();
    if let Some(p0) = extra {
        for j in 0..6 {
            exps.push(p0 + 2.0 * j as f64);
        }
    }
    exps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    exps.dedup_by(|a, b| (*a - *b).abs() < 1.0e-9);
    exps.retain(|&p| p > 1.0e-9);
    exps.truncate(10);
    exps
}

/// Generalized Richardson / Neville extrapolation of D(h) to h -> 0 on the
/// ladder h0/2^i with the given error exponents. Returns the tableau entry
/// with the smallest self-estimated error.
fn extrapolate(
    d: &dyn Fn(f64) -> Result<f64>,
    h0: f64,
    levels: usize,
    exponents: &[f64],
) -> Result<(f64, f64)> {
    let mut column: Vec<f64> = (0..levels)
        .map(|i| d(h0 / (1u64 << i) as f64))
        .collect::<Result<_>>()?;
    let mut best = *column.last().unwrap();
    let mut best_err = f64::INFINITY;
    for (j, &p) in exponents.iter().enumerate() {
        if column.len() < 2 {
            break;
        }
        let factor = 2.0f64.powf(p);
        let mut next = Vec::with_capacity(column.len() - 1);
        for i in 0..column.len() - 1 {
            let fine = column[i + 1];
            let coarse = column[i];
            let value = fine + (fine - coarse) / (factor - 1.0);
            let err = (value - fine).abs().max((value - coarse).abs() * 1.0e-2);
            if err < best_err {
                best_err = err;
                best = value;
            }
            next.push(value);
        }
        column = next;
        let _ = j;
    }
    Ok((best, best_err))
}

//! GOE large-deviation rate functions.
//!
//! I(x) = ∫_{√2}^{x} √(z²-2) dz for x ≥ √2 (+∞ below the semicircle edge),
//! and J_k(x) = (k+1) I(-x), the cost of the (k+1)-th smallest scaled GOE
//! eigenvalue falling below -√2. The closed form used here,
//! I(x) = x√(x²-2)/2 - log((x + √(x²-2))/√2), is the antiderivative of the
//! defining integrand; the tests check it against adaptive quadrature.

use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Rate function I for the smallest scaled GOE eigenvalue.
///
/// Total on the extended reals: returns +∞ below the support edge √2, so
/// downstream suprema and exp(-d·J) behave without branching. For
/// 0 < x - √2 < 1e-8 the closed form subtracts two nearly equal logarithms,
/// so the edge expansion I(x) ≈ (2^{7/4}/3)(x-√2)^{3/2} is used instead
/// (the coefficient comes from √(z²-2) ≈ (2√2)^{1/2}(z-√2)^{1/2} under the
/// defining integral).
pub fn rate_i(x: f64) -> f64 {
    if x < SQRT_2 {
        return f64::INFINITY;
    }
    let t = x - SQRT_2;
    if t < 1.0e-8 {
        return (2.0f64).powf(1.75) / 3.0 * t.powf(1.5);
    }
    let s = (x * x - 2.0).sqrt();
    0.5 * x * s - ((x + s) / SQRT_2).ln()
}

/// J_k(x) = (k+1)·I(-x); finite iff x ≤ -√2.
///
/// `k` is a nonnegative index, accepted as a real number so the derivative
/// identities can be checked on the real extension.
pub fn rate_j(k: f64, x: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("index k must be nonnegative, got {k}")));
    }
    Ok((k + 1.0) * rate_i(-x))
}

/// I'(x) = √(x²-2) for x > √2.
pub fn rate_i_prime(x: f64) -> Result<f64> {
    if !(x > SQRT_2) {
        return Err(Error::Domain(format!("rate_i_prime needs x > sqrt(2), got {x}")));
    }
    Ok((x * x - 2.0).sqrt())
}

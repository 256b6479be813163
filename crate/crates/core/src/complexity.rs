//! The landscape complexity exponent Θ*_k(V, v) and its critical values.
//!
//! For spectral moments (λ2, λ4) with positive excess λ4 - 3λ2², the scaled
//! spectrum edges are
//!
//!   E*  = -(λ4 + 3λ2²)/(λ2 √(3λ4)),     E** = -2√3 λ2/√λ4,
//!
//! with E* < -2 < E** < 0. The complexity has three branches in the level v:
//! constant above E**, a k-free parabolic correction on [E*, E**), and below
//! E* a branch obtained by maximizing a quadratic-minus-rate-function
//! profile whose interior maximizer x_{k,v} solves a quadratic equation. In
//! the degenerate case (excess = 0, the Bargmann-Fock field) both edges
//! collapse to -2 and only two regimes remain.

use serde::Serialize;

use crate::covariance::SpectralMoments;
use crate::rate::{rate_i, rate_j};
use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Inputs of Θ*_k: the moments and the limiting volume exponent V from
/// (1/d)·log(|T_d|/κ_d) → V.
#[derive(Debug, Clone, Copy)]
pub struct LandscapeParams {
    pub moments: SpectralMoments,
    pub volume_exponent: f64,
}

impl LandscapeParams {
    pub fn new(moments: SpectralMoments, volume_exponent: f64) -> Result<Self> {
        if !volume_exponent.is_finite() {
            return Err(Error::Domain(format!(
                "volume exponent must be finite, got {volume_exponent}"
            )));
        }
        Ok(LandscapeParams { moments, volume_exponent })
    }
}

/// Which branch of Θ*_k produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// v ≥ E**: constant, k-free.
    High,
    /// E* ≤ v < E**: increasing in v, k-free.
    Mid,
    /// v < E*: increasing in v, strictly decreasing in k.
    Low,
    /// Degenerate moments, v ≥ -2.
    BfHigh,
    /// Degenerate moments, v < -2.
    BfLow,
}

/// Value of Θ*_k(V, v) with the active branch and, on the low branch, the
/// interior maximizer x_{k,v}.
#[derive(Debug, Clone, Copy)]
pub struct ThetaResult {
    pub value: f64,
    pub regime: Regime,
    pub optimizer_x: Option<f64>,
}

/// The scaled spectrum edges (E*, E**).
///
/// Exactly (-2, -2) for degenerate moments.
pub fn edges(moments: &SpectralMoments) -> (f64, f64) {
    if moments.is_bargmann_fock {
        return (-2.0, -2.0);
    }
    let l2 = moments.lambda2;
    let l4 = moments.lambda4;
    let e_star = -(l4 + 3.0 * l2 * l2) / (l2 * (3.0 * l4).sqrt());
    let e_star2 = -2.0 * 3.0f64.sqrt() * l2 / l4.sqrt();
    (e_star, e_star2)
}

/// The interior maximizer x_{k,v} of the low branch, for v ≤ E*.
///
/// Root x₊ of ((E*²/Δ²) - (k+1)²)x² + (2√2 v E*/Δ²)x + 2(k+1)² + 2v²/Δ² with
/// Δ = E** - E*, evaluated through the conjugate root q = -(b + √(b²-4ac))/2,
/// x₊ = c/q, which stays finite and cancellation-free as the leading
/// coefficient crosses zero at the degenerate index k+1 = |E*|/Δ.
pub fn optimizer_x(moments: &SpectralMoments, k: f64, v: f64) -> Result<f64> {
    if moments.is_bargmann_fock {
        return Err(Error::Domain("use Bargmann-Fock branch: excess is zero".into()));
    }
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("index k must be nonnegative, got {k}")));
    }
    let (es, ess) = edges(moments);
    if !(v <= es) {
        return Err(Error::Domain(format!("optimizer_x needs v <= E* = {es}, got {v}")));
    }
    let kappa = k + 1.0;
    let delta = ess - es;
    let d2 = delta * delta;
    let es2 = es * es;
    // Degenerate index: the quadratic's leading coefficient vanishes.
    if (es2 - kappa * kappa * d2).abs() <= 1.0e-10 * es2 {
        return Ok((-(es2 + v * v) / (SQRT_2 * v * es)).min(-SQRT_2));
    }
    let b = 2.0 * SQRT_2 * v * es / d2; // > 0 on this domain
    let c = 2.0 * kappa * kappa + 2.0 * v * v / d2;
    // b² - 4ac simplifies to (8κ²/Δ²)(κ²Δ² + v² - E*²), which is ≥ 8κ⁴.
    let disc = 8.0 * kappa * kappa / d2 * (kappa * kappa * d2 + v * v - es2);
    let q = -0.5 * (b + disc.sqrt());
    // x₊ ≤ -√2 on the whole domain; rounding can spill one ulp past the
    // edge at v = E*, where J_k would jump to +∞.
    Ok((c / q).min(-SQRT_2))
}

fn theta_impl(moments: &SpectralMoments, volume_exponent: f64, k: f64, v: f64) -> ThetaResult {
    let big_v = volume_exponent;
    if moments.is_bargmann_fock {
        let half_log_l2 = 0.5 * moments.lambda2.ln();
        if v >= -2.0 {
            return ThetaResult {
                value: big_v + half_log_l2 - 1.0,
                regime: Regime::BfHigh,
                optimizer_x: None,
            };
        }
        let value =
            big_v + half_log_l2 - v * v / 4.0 - (k + 1.0) * rate_i(-v / SQRT_2);
        return ThetaResult { value, regime: Regime::BfLow, optimizer_x: None };
    }
    let (es, ess) = edges(moments);
    let c = 0.5 * (moments.lambda4 / (3.0 * moments.lambda2)).ln();
    if v >= ess {
        return ThetaResult { value: big_v + c - 1.0, regime: Regime::High, optimizer_x: None };
    }
    if v >= es {
        let dv = v - ess;
        let value = big_v + c - 1.0 + dv * dv / (ess * (ess - es));
        return ThetaResult { value, regime: Regime::Mid, optimizer_x: None };
    }
    let x = optimizer_x(moments, k, v).expect("low branch: v < E* and excess > 0");
    let shifted = v + x * ess / SQRT_2;
    let value = big_v + c
        - (x * x / 2.0 - shifted * shifted / (ess * (ess - es)))
        - rate_j(k, x).expect("k >= 0");
    ThetaResult { value, regime: Regime::Low, optimizer_x: Some(x) }
}

/// Θ*_k(V, v) for an integer index k.
pub fn theta_k(params: &LandscapeParams, k: u32, v: f64) -> ThetaResult {
    theta_impl(&params.moments, params.volume_exponent, k as f64, v)
}

/// Θ*_k(V, v) on the real extension of the index, used by the derivative
/// identities; user-facing level computations take integer k.
pub fn theta_k_real(params: &LandscapeParams, k: f64, v: f64) -> Result<ThetaResult> {
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("index k must be nonnegative, got {k}")));
    }
    Ok(theta_impl(&params.moments, params.volume_exponent, k, v))
}

/// Θ*(V) = V + ½ log(λ4/3λ2) - 1, the k-free total-count exponent.
///
/// For degenerate moments λ4/(3λ2) = λ2, so the same expression covers the
/// Bargmann-Fock case.
pub fn theta_total(params: &LandscapeParams) -> f64 {
    params.volume_exponent + 0.5 * (params.moments.lambda4 / (3.0 * params.moments.lambda2)).ln()
        - 1.0
}

/// V_c¹ = log(e·√(3λ2)/√λ4): Θ*(V_c¹) = 0.
pub fn critical_volume_1(moments: &SpectralMoments) -> f64 {
    1.0 + 0.5 * (3.0 * moments.lambda2 / moments.lambda4).ln()
}

/// V_c² = E*/E** + ½ log(3λ2/λ4): Θ*_k(V_c², E*) = 0.
///
/// Collapses to V_c¹ (= 1 - log √λ2) when the excess vanishes.
pub fn critical_volume_2(moments: &SpectralMoments) -> f64 {
    let (es, ess) = edges(moments);
    es / ess + 0.5 * (3.0 * moments.lambda2 / moments.lambda4).ln()
}

/// The k-free critical level v_c on the mid branch, for V_c¹ < V < V_c².
pub fn critical_level_mid(params: &LandscapeParams) -> Result<f64> {
    let m = &params.moments;
    if m.is_bargmann_fock {
        return Err(Error::Domain(
            "mid-branch critical level needs positive excess".into(),
        ));
    }
    let vc1 = critical_volume_1(m);
    let vc2 = critical_volume_2(m);
    let big_v = params.volume_exponent;
    if !(big_v > vc1 && big_v < vc2) {
        return Err(Error::Domain(format!(
            "critical_level_mid needs V in (V_c1, V_c2) = ({vc1}, {vc2}), got {big_v}"
        )));
    }
    let (es, ess) = edges(m);
    Ok(ess - ((vc1 - big_v) * ess * (ess - es)).sqrt())
}

/// The per-index critical level v_c^k: the unique root of v ↦ Θ*_k(V, ·, v)
/// below E* (below -2 in the degenerate case), by bisection after bracket
/// expansion.
pub fn critical_level_k(params: &LandscapeParams, k: u32) -> Result<f64> {
    let m = &params.moments;
    let upper = if m.is_bargmann_fock {
        let vc = critical_volume_1(m);
        if !(params.volume_exponent > vc) {
            return Err(Error::Domain(format!(
                "critical_level_k (degenerate) needs V > V_c = {vc}, got {}",
                params.volume_exponent
            )));
        }
        -2.0
    } else {
        let vc2 = critical_volume_2(m);
        if !(params.volume_exponent > vc2) {
            return Err(Error::Domain(format!(
                "critical_level_k needs V > V_c2 = {vc2}, got {}",
                params.volume_exponent
            )));
        }
        edges(m).0
    };
    let f = |v: f64| theta_k(params, k, v).value;
    let f_upper = f(upper);
    if !(f_upper > 0.0) {
        return Err(Error::NoRoot(format!(
            "theta is nonpositive ({f_upper}) already at the branch edge {upper}"
        )));
    }
    // Expand the bracket to the left until the sign changes.
    let mut width = 1.0;
    let mut lo = upper - width;
    while f(lo) >= 0.0 {
        width *= 2.0;
        lo = upper - width;
        if lo < -1.0e6 {
            return Err(Error::NoRoot(
                "no sign change found down to v = -1e6; parameters out of regime".into(),
            ));
        }
    }
    let mut hi = upper;
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// ∂Θ/∂v = √2(√2 v + x_{k,v} E**)/(E**(E** - E*)) on the low branch.
pub fn theta_dv(params: &LandscapeParams, k: f64, v: f64) -> Result<f64> {
    let m = &params.moments;
    if m.is_bargmann_fock {
        return Err(Error::Domain("derivative identities need positive excess".into()));
    }
    let (es, ess) = edges(m);
    if !(v < es) {
        return Err(Error::Domain(format!("theta_dv is for the low branch v < E* = {es}, got {v}")));
    }
    let x = optimizer_x(m, k, v)?;
    Ok(SQRT_2 * (SQRT_2 * v + x * ess) / (ess * (ess - es)))
}

/// ∂Θ/∂k = -I(-x_{k,v}) on the low branch (real-extended k).
pub fn theta_dk(params: &LandscapeParams, k: f64, v: f64) -> Result<f64> {
    let m = &params.moments;
    if m.is_bargmann_fock {
        return Err(Error::Domain("derivative identities need positive excess".into()));
    }
    let (es, _) = edges(m);
    if !(v < es) {
        return Err(Error::Domain(format!("theta_dk is for the low branch v < E* = {es}, got {v}")));
    }
    let x = optimizer_x(m, k, v)?;
    Ok(-rate_i(-x))
}

/// Domain scales for a volume exponent: ball radius R = e^V and cube side
/// L = √(2π)·e^{V + 1/2} (the cube being [0, L/√d]^d).
pub fn domain_scale(volume_exponent: f64) -> (f64, f64) {
    let r = volume_exponent.exp();
    let l = (2.0 * std::f64::consts::PI).sqrt() * (volume_exponent + 0.5).exp();
    (r, l)
}

/// Inverse of [`domain_scale`] from the ball radius.
pub fn volume_exponent_of_radius(radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    Ok(radius.ln())
}

/// Inverse of [`domain_scale`] from the cube side.
pub fn volume_exponent_of_side(side: f64) -> Result<f64> {
    if !(side > 0.0) {
        return Err(Error::Domain(format!("side must be positive, got {side}")));
    }
    Ok(side.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{spectral_moments, CovarianceModel};

    fn matern41() -> SpectralMoments {
        spectral_moments(&CovarianceModel::Matern { nu: 4.0, ell: 1.0 }).unwrap()
    }

    fn bf(a: f64) -> SpectralMoments {
        spectral_moments(&CovarianceModel::SquaredExponential { a }).unwrap()
    }

    fn params(m: SpectralMoments, v_exp: f64) -> LandscapeParams {
        LandscapeParams::new(m, v_exp).unwrap()
    }

    /// Golden-section maximizer, the spec's independent 1-D oracle.
    fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = f(c);
        let mut fd = f(d);
        while (b - a).abs() > tol {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d);
            }
        }
        let x = 0.5 * (a + b);
        (x, f(x))
    }

    /// Brute maximization of V + c + g~(x) - J_k(x) over the proof interval.
    fn low_branch_oracle(m: &SpectralMoments, big_v: f64, k: f64, v: f64) -> f64 {
        let (es, ess) = edges(m);
        let c = 0.5 * (m.lambda4 / (3.0 * m.lambda2)).ln();
        let kappa_coef = 2.0 / (ess * (es - ess)); // κ in the profile, > 0
        let h = |x: f64| {
            let shifted = v + x * ess / SQRT_2;
            -x * x / 2.0 - 0.5 * kappa_coef * shifted * shifted - rate_j(k, x).unwrap()
        };
        let lo = -SQRT_2 * v / ess;
        let hi = -SQRT_2;
        let n = 20_000;
        let mut best_i: usize = 0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let val = h(x);
            if val > best {
                best = val;
                best_i = i;
            }
        }
        let step = (hi - lo) / n as f64;
        let a = lo + step * (best_i.saturating_sub(1)) as f64;
        let b = (lo + step * (best_i + 1) as f64).min(hi);
        let (_, fmax) = golden_max(&h, a, b, 1e-12);
        big_v + c + fmax.max(best)
    }

    #[test]
    fn edges_matern() {
        let (es, ess) = edges(&matern41());
        assert!((es - (-5.0 / 6.0f64.sqrt())).abs() < 1e-14);
        assert!((ess - (-4.0 / 6.0f64.sqrt())).abs() < 1e-14);
        assert!(es < -2.0 && -2.0 < ess && ess < 0.0);
    }

    #[test]
    fn edges_degenerate() {
        assert_eq!(edges(&bf(5.0)), (-2.0, -2.0));
        let m = SpectralMoments::new(1.0, 3.0).unwrap();
        assert_eq!(edges(&m), (-2.0, -2.0));
    }

    #[test]
    fn optimizer_at_e_star_is_edge() {
        let m = matern41();
        let (es, _) = edges(&m);
        for k in [0.0, 1.0, 4.0, 100.0] {
            let x = optimizer_x(&m, k, es).unwrap();
            assert!((x - (-SQRT_2)).abs() < 1e-12, "k={k}: {x}");
        }
    }

    #[test]
    fn optimizer_degenerate_index_matches_limit() {
        // Matern nu=4 ell=1 has E*/(E**-E*) = -5, so k+1 = 5 is degenerate.
        let m = matern41();
        let (es, _) = edges(&m);
        let v = -2.5;
        let x_deg = optimizer_x(&m, 4.0, v).unwrap();
        let expected = -(es * es + v * v) / (SQRT_2 * v * es);
        assert!((x_deg - expected).abs() < 1e-14);
        for eps in [1e-6, 1e-7] {
            let above = optimizer_x(&m, 4.0 + eps, v).unwrap();
            let below = optimizer_x(&m, 4.0 - eps, v).unwrap();
            assert!((above - x_deg).abs() < 1e-5 && (below - x_deg).abs() < 1e-5);
            assert!((above - x_deg).abs() < 1e-8 || eps > 1e-7);
        }
        // continuity across the switching threshold itself
        let just = optimizer_x(&m, 4.0 + 1e-12, v).unwrap();
        assert!((just - x_deg).abs() < 1e-10);
    }

    #[test]
    fn optimizer_stays_in_proof_interval() {
        let m = matern41();
        let (es, ess) = edges(&m);
        for k in [0.0, 1.0, 3.0, 10.0] {
            for v in [-2.1, -2.5, -4.0, -9.0] {
                if v > es {
                    continue;
                }
                let x = optimizer_x(&m, k, v).unwrap();
                assert!(x <= -SQRT_2 + 1e-12, "k={k} v={v}: x={x}");
                assert!(x >= -SQRT_2 * v / es - 1e-12, "k={k} v={v}: x={x}");
                assert!(x > -SQRT_2 * v / ess, "k={k} v={v}: x={x}");
            }
        }
    }

    #[test]
    fn optimizer_matches_golden_section_argmax() {
        let m = matern41();
        let big_v = 3.0;
        for (k, v) in [(0.0, -2.5), (1.0, -3.0), (2.0, -2.2), (7.0, -5.0)] {
            let direct = theta_impl(&m, big_v, k, v);
            let oracle = low_branch_oracle(&m, big_v, k, v);
            assert!(
                (direct.value - oracle).abs() < 1e-8,
                "k={k} v={v}: {} vs oracle {}",
                direct.value,
                oracle
            );
        }
    }

    #[test]
    fn theta_total_examples() {
        let p = params(matern41(), 3.0);
        assert!((theta_total(&p) - 2.346_573_590_279_972_7).abs() < 1e-12);
        let p = params(matern41(), critical_volume_1(&matern41()));
        assert!(theta_total(&p).abs() < 1e-14);
        let p = params(bf(5.0), 0.0);
        assert!((theta_total(&p) - 0.151_292_546_497_022_84).abs() < 1e-12);
    }

    #[test]
    fn high_branch_is_k_free_and_equals_total() {
        let p = params(matern41(), 1.3);
        for k in [0, 1, 100] {
            for v in [-1.63, -1.0, 0.0, 5.0, f64::INFINITY] {
                let t = theta_k(&p, k, v);
                assert_eq!(t.value, theta_total(&p));
                assert_eq!(t.regime, Regime::High);
            }
        }
    }

    #[test]
    fn critical_volumes_matern() {
        let m = matern41();
        assert!((critical_volume_1(&m) - 0.653_426_409_720_027_3).abs() < 1e-12);
        assert!((critical_volume_2(&m) - 0.903_426_409_720_027_3).abs() < 1e-12);
        // exact forms from the acceptance list
        assert!((critical_volume_1(&m) - (1.0 + 0.5 * (0.5f64).ln())).abs() < 1e-12);
        assert!((critical_volume_2(&m) - (1.25 + 0.5 * (0.5f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn critical_volume_degenerate_collapses() {
        let m = bf(5.0);
        let vc1 = critical_volume_1(&m);
        let vc2 = critical_volume_2(&m);
        assert_eq!(vc1, vc2);
        assert!((vc1 - (-0.151_292_546_497_022_84)).abs() < 1e-12);
    }

    #[test]
    fn vc1_zero_identity() {
        // any moments with 3 lambda2 / lambda4 = e^{-2} give V_c1 = 0
        let lambda2 = 3.0 * (-2.0f64).exp();
        let lambda4 = 3.0 * lambda2 / (-2.0f64).exp();
        let m = SpectralMoments::new(lambda2, lambda4).unwrap();
        assert!(critical_volume_1(&m).abs() < 1e-14);
    }

    #[test]
    fn critical_level_mid_matern() {
        let p = params(matern41(), 0.75);
        let vc = critical_level_mid(&p).unwrap();
        assert!((vc - (-1.886_730_020_667_848_0)).abs() < 1e-12);
        let (es, ess) = edges(&p.moments);
        assert!(es < vc && vc < ess);
        for k in [0, 1, 100] {
            assert!(theta_k(&p, k, vc).value.abs() < 1e-12);
        }
    }

    #[test]
    fn critical_level_mid_limits() {
        let m = matern41();
        let (es, ess) = edges(&m);
        let vc1 = critical_volume_1(&m);
        let vc2 = critical_volume_2(&m);
        let near1 = critical_level_mid(&params(m, vc1 + 1e-12)).unwrap();
        assert!((near1 - ess).abs() < 1e-5);
        let near2 = critical_level_mid(&params(m, vc2 - 1e-10)).unwrap();
        assert!((near2 - es).abs() < 1e-5);
        // exact substitution at V = V_c2 reproduces E* to first order
        let exact = ess - ((vc1 - vc2) * ess * (ess - es)).sqrt();
        assert!((exact - es).abs() < 1e-10);
        assert!(critical_level_mid(&params(m, 0.5)).is_err());
        assert!(critical_level_mid(&params(m, 1.5)).is_err());
    }

    #[test]
    fn critical_level_k_bargmann_fock() {
        let p = params(bf(5.0), 0.0);
        let v0 = critical_level_k(&p, 0).unwrap();
        let v1 = critical_level_k(&p, 1).unwrap();
        assert!((v0 - (-2.119_809_858_786_354_0)).abs() < 1e-10, "{v0}");
        assert!((v1 - (-2.103_720_017_193_651_1)).abs() < 1e-10, "{v1}");
        assert!(theta_k(&p, 0, v0).value.abs() < 1e-12);
        assert!(theta_k(&p, 1, v1).value.abs() < 1e-12);
        // strictly increasing in k and below -2
        let mut prev = f64::NEG_INFINITY;
        for k in 0..6 {
            let vk = critical_level_k(&p, k).unwrap();
            assert!(vk > prev && vk < -2.0);
            prev = vk;
        }
    }

    #[test]
    fn critical_level_k_matern_layered() {
        let p = params(matern41(), 3.0);
        let (es, _) = edges(&p.moments);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..5 {
            let vk = critical_level_k(&p, k).unwrap();
            assert!(theta_k(&p, k, vk).value.abs() < 1e-12);
            assert!(vk > prev && vk < es);
            prev = vk;
        }
        // out of regime: V below V_c2
        assert!(critical_level_k(&params(matern41(), 0.8), 0).is_err());
    }

    /// Richardson-improved finite difference: (4 D(h/2) - D(h)) / 3 on a
    /// central stencil, falling back to a one-sided stencil at a left
    /// domain boundary.
    fn deriv_oracle(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let d = |h: f64| {
            if x - h >= 0.0 || x < 0.0 {
                (f(x + h) - f(x - h)) / (2.0 * h)
            } else {
                (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
            }
        };
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = params(matern41(), 3.0);
        for (k, v) in [(0.0, -2.5), (2.0, -3.5), (5.0, -2.2)] {
            let dv = theta_dv(&p, k, v).unwrap();
            let fd_v = deriv_oracle(&|t| theta_k_real(&p, k, t).unwrap().value, v, 1e-3);
            assert!(((dv - fd_v) / fd_v).abs() < 1e-6, "dv k={k} v={v}: {dv} vs {fd_v}");
            assert!(dv > 0.0);
            let dk = theta_dk(&p, k, v).unwrap();
            let fd_k = deriv_oracle(&|t| theta_k_real(&p, t, v).unwrap().value, k, 1e-3);
            assert!(((dk - fd_k) / fd_k).abs() < 1e-6, "dk k={k} v={v}: {dk} vs {fd_k}");
            assert!(dk < 0.0);
        }
    }

    #[test]
    fn theta_dk_vanishes_at_e_star() {
        let p = params(matern41(), 3.0);
        let (es, _) = edges(&p.moments);
        let dk = theta_dk(&p, 3.0, es - 1e-9).unwrap();
        assert!(dk.abs() < 1e-4);
        assert!(theta_dk(&p, 3.0, es + 0.01).is_err());
    }

    #[test]
    fn continuity_at_branch_points() {
        let models = [
            matern41(),
            spectral_moments(&CovarianceModel::DiscreteSchoenberg {
                atoms: vec![(0.5, 1.0), (0.5, 3.0)],
            })
            .unwrap(),
            spectral_moments(&CovarianceModel::Matern { nu: 2.5, ell: 0.8 }).unwrap(),
        ];
        for m in models {
            let p = params(m, 1.1);
            let (es, ess) = edges(&m);
            for k in [0, 1, 7] {
                // branch formulas evaluated at the shared boundary point
                let high = p.volume_exponent + 0.5 * (m.lambda4 / (3.0 * m.lambda2)).ln() - 1.0;
                let mid_at_ess = theta_k(&p, k, ess).value; // high branch by classification
                assert!((mid_at_ess - high).abs() < 1e-12);
                let mid_formula = |v: f64| {
                    p.volume_exponent + 0.5 * (m.lambda4 / (3.0 * m.lambda2)).ln() - 1.0
                        + (v - ess) * (v - ess) / (ess * (ess - es))
                };
                assert!((mid_formula(ess) - high).abs() < 1e-12);
                // at E*: mid formula vs low-branch evaluation
                let low_at_es = theta_impl(&m, p.volume_exponent, k as f64, es);
                // the classifier labels v = E* as mid; force the low formula
                let x = optimizer_x(&m, k as f64, es).unwrap();
                let shifted = es + x * ess / SQRT_2;
                let c = 0.5 * (m.lambda4 / (3.0 * m.lambda2)).ln();
                let low_formula = p.volume_exponent + c
                    - (x * x / 2.0 - shifted * shifted / (ess * (ess - es)))
                    - rate_j(k as f64, x).unwrap();
                assert!(
                    (low_formula - mid_formula(es)).abs() < 1e-12,
                    "low/mid mismatch at E*: {} vs {}",
                    low_formula,
                    mid_formula(es)
                );
                assert_eq!(low_at_es.regime, Regime::Mid);
            }
        }
    }

    #[test]
    fn monotone_in_v_and_k() {
        let p = params(matern41(), 2.0);
        let (es, ess) = edges(&p.moments);
        // constant above E**
        let t0 = theta_k(&p, 0, ess).value;
        for v in [ess + 0.1, 0.0, 44.0] {
            assert_eq!(theta_k(&p, 0, v).value, t0);
        }
        // strictly increasing on [E*, E**), k-free
        let mut prev = f64::NEG_INFINITY;
        let n = 50;
        for i in 0..n {
            let v = es + (ess - es) * i as f64 / n as f64;
            let a = theta_k(&p, 0, v).value;
            assert_eq!(a, theta_k(&p, 9, v).value);
            assert!(a > prev);
            prev = a;
        }
        // strictly increasing in v, strictly decreasing in k below E*
        let mut prev = f64::NEG_INFINITY;
        for i in 0..40 {
            let v = es - 2.0 + 2.0 * i as f64 / 40.0;
            let a = theta_k(&p, 1, v).value;
            assert!(a > prev);
            prev = a;
        }
        for v in [-2.2, -3.0, -4.5] {
            let mut prev = f64::INFINITY;
            for k in 0..6 {
                let a = theta_k(&p, k, v).value;
                assert!(a < prev);
                prev = a;
            }
        }
    }

    #[test]
    fn volume_shift_is_exact() {
        let m = matern41();
        for (k, v) in [(0, -3.0), (2, -1.8), (5, 0.4)] {
            for delta in [0.25, 1.0, 2.5] {
                let a = theta_k(&params(m, 1.0), k, v).value;
                let b = theta_k(&params(m, 1.0 + delta), k, v).value;
                assert!((b - a - delta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_mixtures_approach_bargmann_fock() {
        // two-atom mixtures shrinking toward a single atom at w0 = 1
        let bf_m = spectral_moments(&CovarianceModel::DiscreteSchoenberg {
            atoms: vec![(1.0, 1.0)],
        })
        .unwrap();
        let p_bf = params(bf_m, 0.5);
        let deltas = [1e-2, 1e-4]; // excess = 12 delta^2 -> 1.2e-3, 1.2e-7
        let mut prev_err = f64::INFINITY;
        for delta in deltas {
            let m = spectral_moments(&CovarianceModel::DiscreteSchoenberg {
                atoms: vec![(0.5, 1.0 - delta), (0.5, 1.0 + delta)],
            })
            .unwrap();
            assert!(!m.is_bargmann_fock);
            let p = params(m, 0.5);
            let mut worst: f64 = 0.0;
            for (k, v) in [(0, -2.5), (1, -3.0), (0, -1.5), (2, 1.0)] {
                let err = (theta_k(&p, k, v).value - theta_k(&p_bf, k, v).value).abs();
                worst = worst.max(err);
            }
            assert!(worst < 40.0 * delta, "delta={delta}: worst err {worst}");
            assert!(worst < prev_err);
            prev_err = worst;
        }
    }

    #[test]
    fn domain_scale_round_trip() {
        let (r, l) = domain_scale(0.0);
        assert_eq!(r, 1.0);
        assert!((l - (2.0 * std::f64::consts::PI).sqrt() * 0.5f64.exp()).abs() < 1e-15);
        let m = matern41();
        let (rc1, lc1) = domain_scale(critical_volume_1(&m));
        assert!((rc1 - std::f64::consts::E / SQRT_2).abs() < 1e-12);
        assert!((lc1 - 7.943_587_051_281_865).abs() < 1e-10);
        for v in [-1.5, 0.0, 0.653, 3.0] {
            let (r, l) = domain_scale(v);
            assert!((volume_exponent_of_radius(r).unwrap() - v).abs() < 1e-15);
            assert!((volume_exponent_of_side(l).unwrap() - v).abs() < 1e-14);
        }
        assert!(volume_exponent_of_radius(0.0).is_err());
        assert!(volume_exponent_of_side(-1.0).is_err());
    }

    #[test]
    fn theta_zero_crossing_near_fig_ticks() {
        // V = 3/4 crossing for every k at the mid-branch critical level
        let p = params(matern41(), 0.75);
        let vc = critical_level_mid(&p).unwrap();
        for k in [0, 1, 100] {
            let below = theta_k(&p, k, vc - 1e-6).value;
            let above = theta_k(&p, k, vc + 1e-6).value;
            assert!(below < 0.0 && above > 0.0);
        }
        assert!((vc + 1.887).abs() < 5e-4);
    }
}

//! GOE eigenvalue sampling, log-domain Monte Carlo estimation of the
//! Kac-Rice eigenvalue expectations, and exact small-matrix quadrature
//! oracles.
//!
//! Normalization: M = (A + Aᵀ)/2 with A having independent standard normal
//! entries, so the diagonal has variance 1 and off-diagonals 1/2. Scaled
//! eigenvalues L/√n then concentrate on [-√2, √2], matching the rate
//! function's support edge.
//!
//! Every expectation is carried in log scale: integrands like e^{-L²/2} at
//! n = 400 are ~e^{-400}, far below linear double precision but with a
//! perfectly representable logarithm. Each sample index derives its own
//! deterministic substream, and the log-sum-exp reduction runs in index
//! order, so estimates are bit-identical for a fixed seed no matter how the
//! samples were scheduled across workers.

mod eigen;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariance::SpectralMoments;
use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Reproducible Monte Carlo request: matrix size n = d+1, seed, sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoeSpec {
    pub n: usize,
    pub seed: u64,
    pub samples: u64,
}

impl GoeSpec {
    pub fn new(n: usize, seed: u64, samples: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("matrix size must be >= 1".into()));
        }
        if samples < 1 {
            return Err(Error::Domain("sample count must be >= 1".into()));
        }
        Ok(GoeSpec { n, seed, samples })
    }
}

/// A log-domain Monte Carlo estimate of one GOE expectation.
///
/// `n` and `k` record which ordered-eigenvalue functional the estimate was
/// computed for, so downstream assembly can reject a mismatched pairing.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    /// Natural log of the estimated expectation; -inf for an all-zero integrand.
    pub log_mean: f64,
    /// Delta-method standard error of `log_mean`; +inf when log_mean = -inf.
    pub se_log: f64,
    /// Sample count (0 marks an exact, oracle-backed value).
    pub samples: u64,
    /// Seed used.
    pub seed: u64,
    /// Matrix size the eigenvalues were drawn from (d+1).
    pub n: usize,
    /// Index k of the functional (the (k+1)-th smallest eigenvalue).
    pub k: usize,
}

impl McEstimate {
    /// Wraps an exact (quadrature-oracle) value so it can flow through the
    /// same assembly as a Monte Carlo estimate.
    pub fn from_exact(log_mean: f64, n: usize, k: usize) -> Self {
        McEstimate { log_mean, se_log: 0.0, samples: 0, seed: 0, n, k }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic per-sample random stream: mixes (seed, index) into a
/// 32-byte ChaCha key, so streams are independent and order-free.
pub fn substream(seed: u64, index: u64) -> ChaCha12Rng {
    let mut state = seed ^ index.wrapping_mul(0xa076_1d64_78bd_642f);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Ordered eigenvalues L_1 <= ... <= L_n of one GOE draw from `rng`.
pub fn sample_goe_eigs(n: usize, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
    let mut m = vec![0.0f64; n * n];
    // A row-major, then (A + A^T)/2 in place.
    for v in m.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    eigen::symmetric_eigenvalues(&mut m, n)
}

/// Log-domain mean and delta-method standard error over per-sample log terms.
fn logsumexp_mean(terms: &[f64]) -> (f64, f64) {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let n = terms.len() as f64;
    let mut sum = 0.0;
    for &t in terms {
        sum += (t - m).exp();
    }
    let mean_shifted = sum / n;
    let log_mean = m + mean_shifted.ln() - 0.0; // == m + ln(sum) - ln(n)
    let log_mean = if terms.len() == 1 { m } else { log_mean };
    let se_log = if terms.len() < 2 {
        f64::INFINITY
    } else {
        let mut var = 0.0;
        for &t in terms {
            let w = (t - m).exp() - mean_shifted;
            var += w * w;
        }
        var /= n - 1.0;
        var.sqrt() / (n.sqrt() * mean_shifted)
    };
    (log_mean, se_log)
}

/// Shared Monte Carlo driver: draws the (k+1)-th smallest eigenvalue per
/// sample and accumulates exp(-L²/2) times an extra log-scale weight.
fn estimate_with_weight<W>(d: usize, k: usize, spec: &GoeSpec, weight: W) -> Result<McEstimate>
where
    W: Fn(f64) -> f64 + Sync,
{
    if k > d {
        return Err(Error::Domain(format!("index k must satisfy 0 <= k <= d, got k={k}, d={d}")));
    }
    if spec.n != d + 1 {
        return Err(Error::Mismatch(format!(
            "GoeSpec matrix size {} does not match d + 1 = {}",
            spec.n,
            d + 1
        )));
    }
    let terms: Vec<f64> = (0..spec.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(spec.seed, i);
            let eigs = sample_goe_eigs(spec.n, &mut rng)?;
            let l = eigs[k];
            Ok(-0.5 * l * l + weight(l))
        })
        .collect::<Result<_>>()?;
    let (log_mean, se_log) = logsumexp_mean(&terms);
    Ok(McEstimate { log_mean, se_log, samples: spec.samples, seed: spec.seed, n: spec.n, k })
}

/// E[exp(-L²_{k+1}/2)] over a (d+1)-GOE matrix, in log scale.
pub fn estimate_exp_term(d: usize, k: usize, spec: &GoeSpec) -> Result<McEstimate> {
    estimate_with_weight(d, k, spec, |_| 0.0)
}

/// E[exp(-L²_{k+1}/2)·Φ(√(λ4/(λ4-3λ2²))·(u - L_{k+1}·√6·λ2/√λ4))] in log
/// scale, for moments with positive excess. u = +∞ reproduces
/// [`estimate_exp_term`] bitwise for the same seed.
pub fn estimate_exp_phi_term(
    d: usize,
    k: usize,
    u: f64,
    moments: &SpectralMoments,
    spec: &GoeSpec,
) -> Result<McEstimate> {
    if moments.is_bargmann_fock {
        return Err(Error::Domain(
            "use indicator variant: the excess is zero, the Phi weight degenerates".into(),
        ));
    }
    let scale = (moments.lambda4 / moments.excess).sqrt();
    let slope = 6.0f64.sqrt() * moments.lambda2 / moments.lambda4.sqrt();
    estimate_with_weight(d, k, spec, move |l| {
        if u == f64::INFINITY {
            0.0
        } else if u == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            log_phi(scale * (u - l * slope))
        }
    })
}

/// E[exp(-L²_{k+1}/2)·1{L_{k+1} ≤ u/√2}] in log scale (the degenerate-excess
/// weight). Monotone nondecreasing in u for a fixed seed.
pub fn estimate_indicator_term(d: usize, k: usize, u: f64, spec: &GoeSpec) -> Result<McEstimate> {
    estimate_with_weight(d, k, spec, move |l| {
        if u == f64::INFINITY || l <= u / SQRT_2 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    })
}

/// log Φ(x), the log of the standard normal CDF, accurate to better than
/// 1e-10 relative on [-40, 8].
///
/// Three regimes: ln1p against the upper tail for x ≥ 0, a direct erfc for
/// moderate negative x, and for x < -8 a Mills-ratio evaluation through the
/// Laplace continued fraction for the scaled complement erfcx, which keeps
/// full precision where erfc itself underflows.
pub fn log_phi(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x >= 0.0 {
        (-0.5 * libm::erfc(x / SQRT_2)).ln_1p()
    } else if x >= -8.0 {
        (0.5 * libm::erfc(-x / SQRT_2)).ln()
    } else {
        let y = -x / SQRT_2;
        0.5f64.ln() + erfcx_cf(y).ln() - y * y
    }
}

/// erfcx(y) = e^{y²} erfc(y) for large y via the Laplace continued fraction
/// √π·erfcx(y) = 1/(y + (1/2)/(y + 1/(y + (3/2)/(y + ...)))), Lentz form.
fn erfcx_cf(y: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = y;
    let mut c = y;
    let mut d = 0.0;
    for i in 1..200 {
        let a = 0.5 * i as f64;
        d = y + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = y + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    1.0 / (std::f64::consts::PI.sqrt() * f)
}

/// Exact expectation of a bounded functional of the ordered eigenvalues of
/// an n-GOE matrix, n ∈ {2, 3}, by adaptive quadrature of the joint density
/// ∝ ∏_{i<j}(λ_j - λ_i)·e^{-Σλ_i²/2} over the ordered box [-12, 12]^n,
/// normalized by the numerically computed partition constant. Absolute
/// tolerance 1e-8.
pub fn oracle_small_d<F>(n: usize, functional: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    const BOUND: f64 = 12.0;
    return match n {
        2 => {
            static NORM2: std::sync::OnceLock<Option<f64>> = std::sync::OnceLock::new();
            let den = NORM2
                .get_or_init(|| quad_ordered_2(&|_| 1.0).ok())
                .ok_or_else(|| Error::OracleFailure("n=2 normalization quadrature failed".into()))?;
            Ok(quad_ordered_2(&|l: &[f64]| functional(l))? / den)
        }
        3 => {
            static NORM3: std::sync::OnceLock<Option<f64>> = std::sync::OnceLock::new();
            let den = NORM3
                .get_or_init(|| quad_ordered_3(&|_| 1.0).ok())
                .ok_or_else(|| Error::OracleFailure("n=3 normalization quadrature failed".into()))?;
            Ok(quad_ordered_3(&|l: &[f64]| functional(l))? / den)
        }
        _ => Err(Error::Domain(format!("oracle_small_d supports n in {{2, 3}}, got {n}"))),
    };

    // Ordered-region iterated integrals; per-dimension absolute tolerances
    // budgeted so the final expectation is well inside 1e-8. Inner failures
    // are stashed in a cell (the integrand signature is plain f64) and
    // rethrown with their own context.
    fn quad_ordered_2(f: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let stash = std::cell::RefCell::new(None);
        let value = adaptive_gk(
            &|l1| {
                adaptive_gk(
                    &|l2| (l2 - l1) * (-0.5 * (l1 * l1 + l2 * l2)).exp() * f(&[l1, l2]),
                    l1,
                    BOUND,
                    2.0e-12,
                )
                .unwrap_or_else(|e| {
                    stash.borrow_mut().get_or_insert(e);
                    f64::NAN
                })
            },
            -BOUND,
            BOUND,
            1.0e-9,
        );
        match stash.into_inner() {
            Some(e) => Err(e),
            None => value,
        }
    }

    fn quad_ordered_3(f: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let stash = std::cell::RefCell::new(None);
        let value = adaptive_gk(
            &|l1| {
                adaptive_gk(
                    &|l2| {
                        adaptive_gk(
                            &|l3| {
                                (l2 - l1)
                                    * (l3 - l1)
                                    * (l3 - l2)
                                    * (-0.5 * (l1 * l1 + l2 * l2 + l3 * l3)).exp()
                                    * f(&[l1, l2, l3])
                            },
                            l2,
                            BOUND,
                            5.0e-11,
                        )
                        .unwrap_or_else(|e| {
                            stash.borrow_mut().get_or_insert(e);
                            f64::NAN
                        })
                    },
                    l1,
                    BOUND,
                    3.0e-10,
                )
                .unwrap_or_else(|e| {
                    stash.borrow_mut().get_or_insert(e);
                    f64::NAN
                })
            },
            -BOUND,
            BOUND,
            2.0e-9,
        );
        match stash.into_inner() {
            Some(e) => Err(e),
            None => value,
        }
    }
}

// 15-point Kronrod extension of 7-point Gauss (QUADPACK constants).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_2,
    0.949_107_912_342_758_524_5,
    0.864_864_423_359_769_072_8,
    0.741_531_185_599_394_439_9,
    0.586_087_235_467_691_130_3,
    0.405_845_151_377_397_166_9,
    0.207_784_955_007_898_467_6,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_96,
    0.063_092_092_629_978_553_29,
    0.104_790_010_322_250_183_8,
    0.140_653_259_715_525_918_7,
    0.169_004_726_639_267_902_8,
    0.190_350_578_064_785_409_9,
    0.204_432_940_075_298_892_4,
    0.209_482_141_084_727_828_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_3,
    0.279_705_391_489_276_667_9,
    0.381_830_050_505_118_945_0,
    0.417_959_183_673_469_387_8,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut result_k = WGK[7] * fc;
    let mut result_g = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        result_k += WGK[j] * fsum;
        if j % 2 == 1 {
            result_g += WG[j / 2] * fsum;
        }
    }
    let value = result_k * half;
    let err = ((result_k - result_g) * half).abs();
    (value, err)
}

/// Adaptive Gauss-Kronrod to an absolute tolerance with a global error
/// budget: always split the panel with the largest error estimate. Unlike
/// tolerance-halving recursion, this stays efficient when the integrand has
/// a jump (an indicator weight): only the straddling panel keeps splitting.
fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> crate::Result<f64> {
    const MAX_PANELS: usize = 4000;
    if a >= b {
        return Ok(0.0);
    }
    let first = gk15(f, a, b);
    if first.0.is_nan() {
        return Err(Error::OracleFailure("quadrature integrand returned NaN".into()));
    }
    // (err, a, b, value); linear scan for the worst panel is fine at the
    // panel counts this sees
    let mut panels: Vec<(f64, f64, f64, f64)> = vec![(first.1, a, b, first.0)];
    let mut total_err = first.1;
    while total_err > tol {
        if panels.len() >= MAX_PANELS {
            return Err(Error::OracleFailure(format!(
                "adaptive quadrature did not converge on [{a}, {b}]: err {total_err:.3e} > tol {tol:.3e}"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.partial_cmp(&y.1 .0).expect("error estimates are not NaN"))
            .map(|(i, _)| i)
            .expect("worklist is nonempty");
        let (err, pa, pb, _) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval at floating resolution; keep its estimate
            panels.push((0.0, pa, pb, gk15(f, pa, pb).0));
            total_err -= err;
            continue;
        }
        let left = gk15(f, pa, mid);
        let right = gk15(f, mid, pb);
        if left.0.is_nan() || right.0.is_nan() {
            return Err(Error::OracleFailure("quadrature integrand returned NaN".into()));
        }
        total_err += left.1 + right.1 - err;
        panels.push((left.1, pa, mid, left.0));
        panels.push((right.1, mid, pb, right.0));
    }
    // sum small-to-large magnitudes in a deterministic order
    panels.sort_by(|x, y| x.1.partial_cmp(&y.1).expect("bounds are not NaN"));
    Ok(panels.iter().map(|p| p.3).sum())
}

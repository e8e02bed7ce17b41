//! Scalar special functions used by the survival distributions.
//!
//! Error-function primitives come from `libm` (sub-ulp accuracy; the
//! polynomial approximations in `statrs` are only good to about 1e-11,
//! which is too coarse for the likelihood identities tested here) and the
//! incomplete gamma family from `statrs`. On top sit numerically careful
//! helpers (probit, softplus, log-sum-exp) that the distribution and
//! inference code relies on in the far tails.

use libm::{erf, erfc};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF.
///
/// Uses the complementary error function so the upper tail keeps full
/// relative precision: Phi(x) = erfc(-x / sqrt(2)) / 2.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal survivor function, 1 - Phi(x), without cancellation.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Log of the standard normal density.
#[inline]
pub fn normal_logpdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Log of the standard normal survivor function.
///
/// erfc stays in normal range up to x ~ 37, so the direct evaluation is
/// exact there. Beyond the switchover the asymptotic series
/// log(1 - Phi(x)) ~ -x^2/2 - log(x sqrt(2 pi)) + log1p(-q + 3q^2 - 15q^3),
/// q = 1/x^2, carries relative error below 1e-12 at the boundary.
#[inline]
pub fn normal_logsf(x: f64) -> f64 {
    if x <= 34.0 {
        normal_sf(x).ln()
    } else {
        let q = 1.0 / (x * x);
        -0.5 * x * x - (x * (2.0 * std::f64::consts::PI).sqrt()).ln()
            + (q * (-1.0 + q * (3.0 - 15.0 * q))).ln_1p()
    }
}

/// Inverse standard normal CDF (Acklam's rational approximation with one
/// Halley refinement step, giving ~1e-15 relative accuracy).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires p in (0, 1)");

    // Coefficients for the central and tail rational approximations.
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Halley step against the exact CDF residual.
    let e = 0.5 * erfc(-x / SQRT_2) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// log(1 + e^x) computed without overflow for large |x|.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// log(e^a + e^b) computed stably.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// log(e^a - e^b) for a >= b, computed stably.
#[inline]
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b, "log_diff_exp requires a >= b");
    if b == f64::NEG_INFINITY {
        return a;
    }
    // e^a - e^b = e^a (1 - e^(b-a)) = e^a (-expm1(b - a))
    a + (-((b - a).exp_m1())).ln()
}

/// log(sum_i e^{x_i}) over a slice, computed with a single max shift.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Softmax of a slice, stabilised by subtracting the maximum.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Regularized lower incomplete gamma P(a, x).
#[inline]
pub fn gamma_p(a: f64, x: f64) -> f64 {
    statrs::function::gamma::gamma_lr(a, x)
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
#[inline]
pub fn gamma_q(a: f64, x: f64) -> f64 {
    statrs::function::gamma::gamma_ur(a, x)
}

/// log Gamma(x).
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Error function, re-exported for callers that need it directly.
#[inline]
pub fn erf_fn(x: f64) -> f64 {
    erf(x)
}

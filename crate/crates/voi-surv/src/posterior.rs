//! Bivariate normal distribution over log parameters.
//!
//! This is the time-t1 posterior approximation produced by a fit: the
//! sampling distribution for outer-loop parameter draws, the prior inside
//! the extended-data posterior, and the proposal family for bridge
//! sampling. The Cholesky factor is computed once at construction.

use serde::{Deserialize, Serialize};

use crate::dist::LogParams;
use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::rng::standard_normal_pair;
use rand::Rng;

/// A 2-d normal with fixed mean and covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateNormal {
    mean: LogParams,
    cov: [[f64; 2]; 2],
    /// Lower-triangular Cholesky factor: [[l11, 0], [l21, l22]].
    chol: [[f64; 2]; 2],
    log_norm: f64,
}

impl BivariateNormal {
    /// Build from mean and covariance; the covariance must be symmetric
    /// within 1e-12 relative and positive definite.
    pub fn new(mean: LogParams, cov: [[f64; 2]; 2]) -> Result<Self> {
        if !mean.is_finite() || cov.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("normal parameters must be finite"));
        }
        let asym = (cov[0][1] - cov[1][0]).abs();
        let scale = cov[0][1].abs().max(cov[1][0].abs()).max(1e-300);
        if asym > 1e-12 * scale.max(1.0) {
            return Err(Error::invalid(format!(
                "covariance is not symmetric: off-diagonals {} and {}",
                cov[0][1], cov[1][0]
            )));
        }
        let l11_sq = cov[0][0];
        if !(l11_sq > 0.0) {
            return Err(Error::invalid("covariance is not positive definite"));
        }
        let l11 = l11_sq.sqrt();
        let l21 = 0.5 * (cov[0][1] + cov[1][0]) / l11;
        let rest = cov[1][1] - l21 * l21;
        if !(rest > 0.0) {
            return Err(Error::invalid("covariance is not positive definite"));
        }
        let l22 = rest.sqrt();
        // log of (2 pi)^{-1} |Sigma|^{-1/2}
        let log_norm = -(2.0 * std::f64::consts::PI).ln() - (l11.ln() + l22.ln());
        Ok(BivariateNormal {
            mean,
            cov,
            chol: [[l11, 0.0], [l21, l22]],
            log_norm,
        })
    }

    /// The mean vector.
    pub fn mean(&self) -> LogParams {
        self.mean
    }

    /// The covariance matrix.
    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    /// Lower-triangular Cholesky factor of the covariance.
    pub fn chol(&self) -> [[f64; 2]; 2] {
        self.chol
    }

    /// Transform a standard-normal pair into a draw from this distribution.
    pub fn from_standard(&self, z: (f64, f64)) -> LogParams {
        LogParams::new(
            self.mean.theta1 + self.chol[0][0] * z.0,
            self.mean.theta2 + self.chol[1][0] * z.0 + self.chol[1][1] * z.1,
        )
    }

    /// Draw one sample, consuming exactly two uniforms from the stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LogParams {
        self.from_standard(standard_normal_pair(rng))
    }

    /// Log density at a point.
    pub fn logpdf(&self, x: LogParams) -> f64 {
        // forward-solve L z = (x - mean), then the quadratic form is |z|^2
        let d0 = x.theta1 - self.mean.theta1;
        let d1 = x.theta2 - self.mean.theta2;
        let z0 = d0 / self.chol[0][0];
        let z1 = (d1 - self.chol[1][0] * z0) / self.chol[1][1];
        self.log_norm - 0.5 * (z0 * z0 + z1 * z1)
    }
}

/// The fitted normal approximation used as the time-t1 posterior.
pub fn posterior_approx(fit: &FittedModel) -> Result<BivariateNormal> {
    BivariateNormal::new(fit.theta_hat, fit.cov)
}

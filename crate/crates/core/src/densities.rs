//! Per-spread forecast densities.
//!
//! Two families are supported: the normal benchmark and a two-piece
//! (Fernández–Steel) skew-t. The skew-t standardized density is
//!
//! ```text
//! f(z) = 2ν/(1+ν²) · [ t_τ(z/ν)·1{z ≥ 0} + t_τ(zν)·1{z < 0} ]
//! ```
//!
//! with `t_τ` the Student-t density on `τ` degrees of freedom, and
//! `y = μ + σz`. `ν > 1` puts more mass (and the longer tail) on the right,
//! `ν < 1` on the left, `ν = 1` is the symmetric Student-t.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("scale sigma must be finite and > 0, got {0}")]
    Scale(f64),
    #[error("location mu must be finite, got {0}")]
    Location(f64),
    #[error("skewness nu must be finite and > 0, got {0}")]
    Skewness(f64),
    #[error("mean undefined: tail parameter tau must be > 1, got {0}")]
    MeanUndefined(f64),
    #[error("probability must lie in (0, 1), got {0}")]
    Probability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    #[serde(rename = "skewt")]
    SkewT,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::SkewT => "skewt",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" => Ok(Family::Normal),
            "skewt" => Ok(Family::SkewT),
            other => Err(format!("unknown density family `{other}`")),
        }
    }
}

/// A standardized (location 0, scale 1) density shape.
///
/// New families plug in by implementing this trait and adding a [`Family`]
/// variant.
pub trait StandardShape {
    fn pdf(&self, z: f64) -> f64;
    fn cdf(&self, z: f64) -> f64;
    /// Inverse cdf; `p` is already known to lie in (0, 1).
    fn quantile(&self, p: f64) -> f64;
    fn mean(&self) -> f64;
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct StandardNormalShape;

impl StandardShape for StandardNormalShape {
    fn pdf(&self, z: f64) -> f64 {
        special::normal_pdf(z)
    }

    fn cdf(&self, z: f64) -> f64 {
        special::normal_cdf(z)
    }

    fn quantile(&self, p: f64) -> f64 {
        special::normal_quantile(p)
    }

    fn mean(&self) -> f64 {
        0.0
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }
}

/// Two-piece skew-t with skewness `nu` and tail parameter `tau`.
#[derive(Debug, Clone, Copy)]
pub struct TwoPieceSkewT {
    pub nu: f64,
    pub tau: f64,
}

impl TwoPieceSkewT {
    /// Probability mass below zero, 1/(1+ν²).
    pub fn left_mass(&self) -> f64 {
        1.0 / (1.0 + self.nu * self.nu)
    }
}

impl StandardShape for TwoPieceSkewT {
    fn pdf(&self, z: f64) -> f64 {
        let nu = self.nu;
        let arg = if z >= 0.0 { z / nu } else { z * nu };
        2.0 * nu / (1.0 + nu * nu) * special::student_t_pdf(arg, self.tau)
    }

    fn cdf(&self, z: f64) -> f64 {
        let nu = self.nu;
        let nu2 = nu * nu;
        if z < 0.0 {
            2.0 / (1.0 + nu2) * special::student_t_cdf(nu * z, self.tau)
        } else {
            1.0 / (1.0 + nu2)
                + 2.0 * nu2 / (1.0 + nu2) * (special::student_t_cdf(z / nu, self.tau) - 0.5)
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let nu = self.nu;
        let nu2 = nu * nu;
        let left = self.left_mass();
        if p < left {
            special::student_t_quantile(0.5 * p * (1.0 + nu2), self.tau) / nu
        } else {
            let inner = 0.5 + (p - left) * (1.0 + nu2) / (2.0 * nu2);
            nu * special::student_t_quantile(inner.min(1.0 - f64::EPSILON / 2.0), self.tau)
        }
    }

    fn mean(&self) -> f64 {
        special::student_t_abs_mean(self.tau) * (self.nu - 1.0 / self.nu)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let t: f64 = StudentT::new(self.tau)
            .expect("tau validated at construction")
            .sample(rng);
        let magnitude = t.abs();
        let right = self.nu * self.nu / (1.0 + self.nu * self.nu);
        if rng.random::<f64>() < right {
            self.nu * magnitude
        } else {
            -magnitude / self.nu
        }
    }
}

/// Forecast density of one spread: family tag plus (μ, σ, ν, τ).
///
/// Constructed only through validating constructors, so every value of this
/// type satisfies σ > 0 and, for the skew-t, ν > 0 and τ > 1. For the normal
/// family `nu` and `tau` are placeholders and never read by evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityParams {
    family: Family,
    mu: f64,
    sigma: f64,
    nu: f64,
    tau: f64,
}

impl DensityParams {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self, DensityError> {
        Self::new(Family::Normal, mu, sigma, 1.0, f64::INFINITY)
    }

    pub fn skew_t(mu: f64, sigma: f64, nu: f64, tau: f64) -> Result<Self, DensityError> {
        Self::new(Family::SkewT, mu, sigma, nu, tau)
    }

    pub fn new(family: Family, mu: f64, sigma: f64, nu: f64, tau: f64) -> Result<Self, DensityError> {
        if !mu.is_finite() {
            return Err(DensityError::Location(mu));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(DensityError::Scale(sigma));
        }
        let (nu, tau) = match family {
            // the normal is the ν = 1, τ → ∞ member; whatever was passed is dropped
            Family::Normal => (1.0, f64::INFINITY),
            Family::SkewT => (nu, tau),
        };
        if family == Family::SkewT {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(DensityError::Skewness(nu));
            }
            // tau = +inf is not supported; use the normal family instead
            if !(tau.is_finite() && tau > 1.0) {
                return Err(DensityError::MeanUndefined(tau));
            }
        }
        Ok(Self {
            family,
            mu,
            sigma,
            nu,
            tau,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Skewness shape; `None` for the normal family.
    pub fn nu(&self) -> Option<f64> {
        (self.family == Family::SkewT).then_some(self.nu)
    }

    /// Tail shape; `None` for the normal family.
    pub fn tau(&self) -> Option<f64> {
        (self.family == Family::SkewT).then_some(self.tau)
    }

    /// Same shape with location and scale multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self, DensityError> {
        Self::new(self.family, self.mu * k, self.sigma * k, self.nu, self.tau)
    }

    fn with_shape<R>(&self, f: impl FnOnce(&dyn StandardShape) -> R) -> R {
        match self.family {
            Family::Normal => f(&StandardNormalShape),
            Family::SkewT => f(&TwoPieceSkewT {
                nu: self.nu,
                tau: self.tau,
            }),
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let z = (y - self.mu) / self.sigma;
        self.with_shape(|s| s.pdf(z)) / self.sigma
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let z = (y - self.mu) / self.sigma;
        self.with_shape(|s| s.cdf(z))
    }

    pub fn quantile(&self, p: f64) -> Result<f64, DensityError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DensityError::Probability(p));
        }
        Ok(self.mu + self.sigma * self.with_shape(|s| s.quantile(p)))
    }

    pub fn mean(&self) -> f64 {
        self.mu + self.sigma * self.with_shape(|s| s.mean())
    }

    /// `n` deterministic draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        self.with_shape(|s| {
            (0..n)
                .map(|_| self.mu + self.sigma * s.sample(rng))
                .collect()
        })
    }
}

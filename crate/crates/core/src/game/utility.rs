//! Player utilities.

use crate::error::{Error, Result};
use crate::vecops::{dist_sq, norm};

/// Concave utility `u(x)` of a player.
#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    None,
    /// `u(x) = −weight·‖x − preferred‖²`.
    QuadPref { weight: f64, preferred: Vec<f64> },
    /// `u(x) = weight·scale·ln(1 + Σ_t x_t / scale)`; `scale = 1` is the
    /// plain `weight·ln(1 + Σ_t x_t)`.
    LogBenefit { weight: f64, scale: f64 },
}

impl Utility {
    pub fn quad_pref(weight: f64, preferred: Vec<f64>) -> Self {
        Utility::QuadPref { weight, preferred }
    }

    pub fn log_benefit(weight: f64) -> Self {
        Utility::LogBenefit { weight, scale: 1.0 }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Utility::None)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Utility::None => Ok(()),
            Utility::QuadPref { weight, preferred } => {
                if !weight.is_finite() || *weight < 0.0 {
                    return Err(Error::InvalidUtility(format!(
                        "quadratic preference weight must be finite and ≥ 0, got {weight}"
                    )));
                }
                if preferred.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: preferred.len(),
                    });
                }
                if preferred.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("preferred profile".into()));
                }
                Ok(())
            }
            Utility::LogBenefit { weight, scale } => {
                if !weight.is_finite() || *weight < 0.0 {
                    return Err(Error::InvalidUtility(format!(
                        "log benefit weight must be finite and ≥ 0, got {weight}"
                    )));
                }
                if !scale.is_finite() || *scale <= 0.0 {
                    return Err(Error::InvalidUtility(format!(
                        "log benefit scale must be positive, got {scale}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Utility::None => 0.0,
            Utility::QuadPref { weight, preferred } => -weight * dist_sq(x, preferred),
            Utility::LogBenefit { weight, scale } => {
                let s: f64 = x.iter().sum();
                weight * scale * (1.0 + s / scale).ln()
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Utility::None => vec![0.0; x.len()],
            Utility::QuadPref { weight, preferred } => x
                .iter()
                .zip(preferred)
                .map(|(xi, yi)| -2.0 * weight * (xi - yi))
                .collect(),
            Utility::LogBenefit { weight, scale } => {
                let s: f64 = x.iter().sum();
                vec![weight / (1.0 + s / scale); x.len()]
            }
        }
    }

    /// The player utility `μ·u(x/μ)` of a class of measure `μ`.
    ///
    /// Its gradient at `μ·x` equals `∇u(x)`.
    pub fn scaled(&self, mu: f64) -> Utility {
        match self {
            Utility::None => Utility::None,
            Utility::QuadPref { weight, preferred } => Utility::QuadPref {
                weight: weight / mu,
                preferred: preferred.iter().map(|y| y * mu).collect(),
            },
            Utility::LogBenefit { weight, scale } => Utility::LogBenefit {
                weight: *weight,
                scale: scale * mu,
            },
        }
    }

    /// Strong concavity modulus.
    pub fn alpha(&self) -> f64 {
        match self {
            Utility::QuadPref { weight, .. } => 2.0 * weight,
            _ => 0.0,
        }
    }

    /// Bound on `‖∇u(x)‖₂` (hence on `‖∇u(x)‖_∞`) for nonnegative `x` in the
    /// ball of radius `radius`, assuming the preferred profile lies in it too.
    pub fn gamma(&self, dim: usize, radius: f64) -> f64 {
        match self {
            Utility::None => 0.0,
            Utility::QuadPref { weight, .. } => 2.0 * weight * 2.0 * radius,
            Utility::LogBenefit { weight, .. } => weight * (dim as f64).sqrt(),
        }
    }

    /// `(P, p)` with `∇u(x) = −P·x + p`, when the gradient is affine with a
    /// scalar Hessian.
    pub fn affine_gradient(&self, dim: usize) -> Option<(f64, Vec<f64>)> {
        match self {
            Utility::None => Some((0.0, vec![0.0; dim])),
            Utility::QuadPref { weight, preferred } => Some((
                2.0 * weight,
                preferred.iter().map(|y| 2.0 * weight * y).collect(),
            )),
            Utility::LogBenefit { .. } => None,
        }
    }
}

/// `max_{‖x‖ ≤ radius} ‖∇u(x) − ∇v(x)‖₂` for two utilities with affine
/// scalar-Hessian gradients; `None` otherwise.
pub fn affine_gradient_gap(u: &Utility, v: &Utility, dim: usize, radius: f64) -> Option<f64> {
    let (pu, cu) = u.affine_gradient(dim)?;
    let (pv, cv) = v.affine_gradient(dim)?;
    // ∇u − ∇v = −(pu − pv)·x + (cu − cv); the ball maximum aligns x with the offset.
    let offset: Vec<f64> = cu.iter().zip(&cv).map(|(a, b)| a - b).collect();
    Some((pu - pv).abs() * radius + norm(&offset))
}

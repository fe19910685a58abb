//! Link latency functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a latency function `c(X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostKind {
    /// `c(X) = intercept + slope·X`.
    Affine { slope: f64, intercept: f64 },
    /// `c(X) = Σ_k coefficients[k]·X^k`.
    Polynomial { coefficients: Vec<f64> },
}

/// Relative slack allowed when checking loads against the domain cap.
const DOMAIN_SLACK: f64 = 1e-9;

/// Latency on one link, evaluated on `[0, domain_cap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    pub kind: CostKind,
    pub domain_cap: f64,
}

impl CostFunction {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        CostFunction {
            kind: CostKind::Affine { slope, intercept },
            domain_cap: f64::INFINITY,
        }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        CostFunction {
            kind: CostKind::Polynomial { coefficients },
            domain_cap: f64::INFINITY,
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.domain_cap = cap;
        self
    }

    /// Checks that the function is increasing and convex on `[0, ∞)`.
    ///
    /// Both shapes are polynomials, so nonnegative coefficients of degree ≥ 1
    /// are exactly what is needed.
    pub fn validate(&self, link: usize) -> Result<()> {
        let bad = |reason: &str| Error::InvalidCost {
            link,
            reason: reason.to_string(),
        };
        match &self.kind {
            CostKind::Affine { slope, intercept } => {
                if !slope.is_finite() || !intercept.is_finite() {
                    return Err(bad("non-finite coefficient"));
                }
                if *slope < 0.0 {
                    return Err(bad("negative slope"));
                }
            }
            CostKind::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(bad("empty coefficient list"));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(bad("non-finite coefficient"));
                }
                if coefficients.iter().skip(1).any(|c| *c < 0.0) {
                    return Err(bad("negative coefficient of degree ≥ 1"));
                }
            }
        }
        if self.domain_cap.is_nan() || self.domain_cap < 0.0 {
            return Err(bad("invalid domain cap"));
        }
        Ok(())
    }

    pub fn is_affine(&self) -> bool {
        self.affine_coefficients().is_some()
    }

    /// `(slope, intercept)` when the function is affine.
    pub fn affine_coefficients(&self) -> Option<(f64, f64)> {
        match &self.kind {
            CostKind::Affine { slope, intercept } => Some((*slope, *intercept)),
            CostKind::Polynomial { coefficients } => match coefficients.as_slice() {
                [b] => Some((0.0, *b)),
                [b, a] => Some((*a, *b)),
                _ => None,
            },
        }
    }

    /// Fails if `x` lies outside `[0, domain_cap]` beyond rounding slack.
    pub fn check_domain(&self, link: usize, x: f64) -> Result<()> {
        let slack = DOMAIN_SLACK * (1.0 + self.domain_cap.min(1e12));
        if !x.is_finite() || x < -slack || x > self.domain_cap + slack {
            return Err(Error::Domain {
                link,
                value: x,
                cap: self.domain_cap,
            });
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            CostKind::Affine { slope, intercept } => intercept + slope * x,
            CostKind::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            CostKind::Affine { slope, .. } => *slope,
            CostKind::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match &self.kind {
            CostKind::Affine { .. } => 0.0,
            CostKind::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + (k * (k - 1)) as f64 * c),
        }
    }

    /// `∫_0^x c(s) ds`.
    pub fn integral(&self, x: f64) -> f64 {
        match &self.kind {
            CostKind::Affine { slope, intercept } => intercept * x + 0.5 * slope * x * x,
            CostKind::Polynomial { coefficients } => {
                coefficients
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (k, c)| acc * x + c / (k + 1) as f64)
                    * x
            }
        }
    }

    /// `max |c'|` on `[0, cap]`; `c'` is nondecreasing, so it sits at `cap`.
    pub fn lipschitz(&self, cap: f64) -> f64 {
        self.derivative(cap).abs().max(self.derivative(0.0).abs())
    }

    /// `min c'` on `[0, cap]`, attained at 0 by convexity.
    pub fn min_slope(&self, _cap: f64) -> f64 {
        self.derivative(0.0)
    }
}

/// `(c_t(X_t))_t`, with each load checked against its link's domain.
pub fn eval_network_cost(costs: &[CostFunction], aggregate: &[f64]) -> Result<Vec<f64>> {
    if costs.len() != aggregate.len() {
        return Err(Error::Dimension {
            expected: costs.len(),
            got: aggregate.len(),
        });
    }
    costs
        .iter()
        .zip(aggregate)
        .enumerate()
        .map(|(t, (c, x))| {
            c.check_domain(t, *x)?;
            Ok(c.value(*x))
        })
        .collect()
}

/// `(c_t'(X_t))_t` without domain checks.
pub fn eval_network_derivative(costs: &[CostFunction], aggregate: &[f64]) -> Vec<f64> {
    costs
        .iter()
        .zip(aggregate)
        .map(|(c, x)| c.derivative(*x))
        .collect()
}

/// `C`: the largest `|c_t'|` over all links on `[0, cap]`.
pub fn lipschitz_constant(costs: &[CostFunction], cap: f64) -> f64 {
    costs.iter().map(|c| c.lipschitz(cap)).fold(0.0, f64::max)
}

/// `c_min`: the smallest `c_t'` over all links on `[0, cap]`.
pub fn strong_monotonicity(costs: &[CostFunction], cap: f64) -> f64 {
    costs
        .iter()
        .map(|c| c.min_slope(cap))
        .fold(f64::INFINITY, f64::min)
}

/// `B_c`: the norm of the cost vector at its largest, with every link
/// loaded to `cap`.
pub fn cost_norm_bound(costs: &[CostFunction], cap: f64) -> f64 {
    costs
        .iter()
        .map(|c| c.value(cap).abs().max(c.value(0.0).abs()))
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

//! Closed-form parameter functions `θ ↦ value` and the set/utility families
//! built from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::utility::Utility;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::sets::{BoxSimplex, FeasibleSet, Polytope};

/// Absolute tolerance for parameter integrals.
pub const INTEGRAL_TOL: f64 = 1e-10;

/// A scalar function of the player type `θ ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamFn {
    Constant {
        value: f64,
    },
    /// `intercept + slope·θ`.
    Linear { intercept: f64, slope: f64 },
    /// `offset + amplitude·sin(π·frequency·θ + phase)`.
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Piecewise-linear interpolation through `(θ, value)` knots, held
    /// constant outside the knot range.
    Tabulated { points: Vec<[f64; 2]> },
}

impl ParamFn {
    pub fn constant(value: f64) -> Self {
        ParamFn::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            ParamFn::Constant { value } => value.is_finite(),
            ParamFn::Linear { intercept, slope } => intercept.is_finite() && slope.is_finite(),
            ParamFn::Sine {
                amplitude,
                frequency,
                phase,
                offset,
            } => [amplitude, frequency, phase, offset].iter().all(|v| v.is_finite()),
            ParamFn::Tabulated { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidArgument("tabulated function needs at least one point".into()));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::InvalidArgument(
                        "tabulated θ values must be strictly increasing".into(),
                    ));
                }
                points.iter().flatten().all(|v| v.is_finite())
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::NonFinite("parameter function coefficient".into()))
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ParamFn::Constant { .. } => true,
            ParamFn::Linear { slope, .. } => *slope == 0.0,
            ParamFn::Sine { amplitude, frequency, .. } => *amplitude == 0.0 || *frequency == 0.0,
            ParamFn::Tabulated { points } => points.iter().all(|p| p[1] == points[0][1]),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            ParamFn::Constant { value } => *value,
            ParamFn::Linear { intercept, slope } => intercept + slope * theta,
            ParamFn::Sine {
                amplitude,
                frequency,
                phase,
                offset,
            } => offset + amplitude * (PI * frequency * theta + phase).sin(),
            ParamFn::Tabulated { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if theta <= first[0] {
                    return first[1];
                }
                if theta >= last[0] {
                    return last[1];
                }
                let k = points.partition_point(|p| p[0] <= theta);
                let (a, b) = (points[k - 1], points[k]);
                a[1] + (b[1] - a[1]) * (theta - a[0]) / (b[0] - a[0])
            }
        }
    }

    /// `∫_a^b f(θ) dθ`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            ParamFn::Constant { value } => value * (b - a),
            ParamFn::Linear { intercept, slope } => {
                intercept * (b - a) + 0.5 * slope * (b * b - a * a)
            }
            _ => adaptive_simpson(|t| self.eval(t), a, b, INTEGRAL_TOL),
        }
    }
}

/// Strategy sets as a function of `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetFamily {
    /// `{x : Σ x = demand, lower ≤ x ≤ upper}`; missing bounds default to
    /// `0` and `demand`.
    Simplex {
        demand: ParamFn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<Vec<ParamFn>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<Vec<ParamFn>>,
    },
    /// `{x : A x ≤ b_θ}` with a fixed matrix.
    Polytope { matrix: Vec<Vec<f64>>, rhs: Vec<ParamFn> },
}

impl SetFamily {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            SetFamily::Simplex { demand, lower, upper } => {
                demand.validate()?;
                for bounds in [lower, upper].into_iter().flatten() {
                    if bounds.len() != dim {
                        return Err(Error::Dimension {
                            expected: dim,
                            got: bounds.len(),
                        });
                    }
                    for f in bounds {
                        f.validate()?;
                    }
                }
            }
            SetFamily::Polytope { matrix, rhs } => {
                if matrix.len() != rhs.len() {
                    return Err(Error::Dimension {
                        expected: matrix.len(),
                        got: rhs.len(),
                    });
                }
                if let Some(row) = matrix.iter().find(|r| r.len() != dim) {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: row.len(),
                    });
                }
                for f in rhs {
                    f.validate()?;
                }
            }
        }
        Ok(())
    }

    /// True for a simplex without explicit bounds.
    pub fn is_plain_simplex(&self) -> bool {
        matches!(
            self,
            SetFamily::Simplex {
                lower: None,
                upper: None,
                ..
            }
        )
    }

    /// The scalar functions the set depends on, in parameter-vector order.
    pub fn param_fns(&self, dim: usize) -> Vec<ParamFn> {
        match self {
            SetFamily::Simplex { demand, lower, upper } => {
                let mut out = vec![demand.clone()];
                match lower {
                    Some(l) => out.extend(l.iter().cloned()),
                    None => out.extend(std::iter::repeat_n(ParamFn::constant(0.0), dim)),
                }
                match upper {
                    Some(u) => out.extend(u.iter().cloned()),
                    None => out.extend(std::iter::repeat_n(demand.clone(), dim)),
                }
                out
            }
            SetFamily::Polytope { rhs, .. } => rhs.clone(),
        }
    }

    pub fn params(&self, theta: f64, dim: usize) -> Vec<f64> {
        self.param_fns(dim).iter().map(|f| f.eval(theta)).collect()
    }

    /// Builds the set for a given parameter vector.
    pub fn set_from_params(&self, params: &[f64], dim: usize) -> Result<FeasibleSet> {
        match self {
            SetFamily::Simplex { .. } => {
                let total = params[0];
                let lower = params[1..1 + dim].to_vec();
                let upper = params[1 + dim..1 + 2 * dim].to_vec();
                Ok(BoxSimplex::new(total, lower, upper)?.into())
            }
            SetFamily::Polytope { matrix, .. } => {
                Ok(Polytope::new(matrix.clone(), params.to_vec())?.into())
            }
        }
    }

    pub fn set_at(&self, theta: f64, dim: usize) -> Result<FeasibleSet> {
        self.set_from_params(&self.params(theta, dim), dim)
    }

    /// Identifies the constraint structure; two families with the same key
    /// can share one parameter space.
    pub fn structure_key(&self) -> Option<&[Vec<f64>]> {
        match self {
            SetFamily::Simplex { .. } => None,
            SetFamily::Polytope { matrix, .. } => Some(matrix),
        }
    }
}

/// Utilities as a function of `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityFamily {
    None,
    QuadPref {
        weight: ParamFn,
        preferred: Vec<ParamFn>,
    },
    LogBenefit {
        weight: ParamFn,
    },
}

impl UtilityFamily {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            UtilityFamily::None => {}
            UtilityFamily::QuadPref { weight, preferred } => {
                weight.validate()?;
                if preferred.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: preferred.len(),
                    });
                }
                for f in preferred {
                    f.validate()?;
                }
            }
            UtilityFamily::LogBenefit { weight } => weight.validate()?,
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            UtilityFamily::None => "none",
            UtilityFamily::QuadPref { .. } => "quad_pref",
            UtilityFamily::LogBenefit { .. } => "log_benefit",
        }
    }

    pub fn param_fns(&self) -> Vec<ParamFn> {
        match self {
            UtilityFamily::None => Vec::new(),
            UtilityFamily::QuadPref { weight, preferred } => {
                let mut out = vec![weight.clone()];
                out.extend(preferred.iter().cloned());
                out
            }
            UtilityFamily::LogBenefit { weight } => vec![weight.clone()],
        }
    }

    pub fn params(&self, theta: f64) -> Vec<f64> {
        self.param_fns().iter().map(|f| f.eval(theta)).collect()
    }

    pub fn utility_from_params(&self, params: &[f64]) -> Utility {
        match self {
            UtilityFamily::None => Utility::None,
            UtilityFamily::QuadPref { .. } => Utility::quad_pref(params[0], params[1..].to_vec()),
            UtilityFamily::LogBenefit { .. } => Utility::log_benefit(params[0]),
        }
    }

    pub fn utility_at(&self, theta: f64) -> Utility {
        self.utility_from_params(&self.params(theta))
    }
}

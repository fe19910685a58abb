//! The bounded simplex `{x : Σ x = total, lower ≤ x ≤ upper}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops::all_finite;

const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSimplex {
    pub total: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSimplex {
    pub fn new(total: f64, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = BoxSimplex {
            total,
            lower,
            upper,
        };
        set.validate()?;
        Ok(set)
    }

    /// Plain simplex `{x ≥ 0 : Σ x = total}` in `dim` coordinates.
    pub fn simplex(total: f64, dim: usize) -> Result<Self> {
        Self::new(total, vec![0.0; dim], vec![total.max(0.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::Dimension {
                expected: self.lower.len(),
                got: self.upper.len(),
            });
        }
        if !self.total.is_finite() || !all_finite(&self.lower) || !all_finite(&self.upper) {
            return Err(Error::NonFinite("box-simplex parameters".into()));
        }
        for (t, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l > u {
                return Err(Error::InfeasibleSet(format!(
                    "lower bound {l} exceeds upper bound {u} on link {t}"
                )));
            }
        }
        let lo: f64 = self.lower.iter().sum();
        let hi: f64 = self.upper.iter().sum();
        let slack = FEAS_TOL * (1.0 + self.total.abs());
        if self.total < lo - slack || self.total > hi + slack {
            return Err(Error::InfeasibleSet(format!(
                "total {} outside [{lo}, {hi}]",
                self.total
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> BoxSimplex {
        BoxSimplex {
            total: self.total * factor,
            lower: self.lower.iter().map(|v| v * factor).collect(),
            upper: self.upper.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && (x.iter().sum::<f64>() - self.total).abs() <= tol
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// Euclidean projection of `point`.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self.project_with_multiplier(point)?.0)
    }

    /// Projection together with the multiplier `λ` such that
    /// `z_t = clamp(point_t + λ, lower_t, upper_t)`.
    pub fn project_with_multiplier(&self, point: &[f64]) -> Result<(Vec<f64>, f64)> {
        if point.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: point.len(),
            });
        }
        if !all_finite(point) {
            return Err(Error::NonFinite("projection point".into()));
        }
        let curvature = vec![1.0; self.dim()];
        separable_quadratic_knapsack(&curvature, point, self.total, &self.lower, &self.upper)
    }

    /// Minimizer of `⟨g, z⟩` over the set by greedy filling in increasing
    /// order of `g`. Ties go to the lower index.
    pub fn linear_minimizer(&self, g: &[f64]) -> Vec<f64> {
        let mut z = self.lower.clone();
        let mut remaining = self.total - self.lower.iter().sum::<f64>();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| g[a].total_cmp(&g[b]));
        for t in order {
            if remaining <= 0.0 {
                break;
            }
            let room = self.upper[t] - self.lower[t];
            let fill = room.min(remaining);
            z[t] += fill;
            remaining -= fill;
        }
        z
    }

    /// All vertices. A vertex has at most one coordinate strictly inside its
    /// bounds, so we enumerate which coordinate is free and put every other
    /// one at a bound.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out: Vec<Vec<f64>> = Vec::new();
        let tol = 1e-9 * (1.0 + self.total.abs());
        for free in 0..n {
            let others: Vec<usize> = (0..n).filter(|&t| t != free).collect();
            for mask in 0u64..(1u64 << others.len()) {
                let mut v = vec![0.0; n];
                let mut fixed = 0.0;
                for (k, &t) in others.iter().enumerate() {
                    v[t] = if mask >> k & 1 == 1 {
                        self.upper[t]
                    } else {
                        self.lower[t]
                    };
                    fixed += v[t];
                }
                let rest = self.total - fixed;
                if rest < self.lower[free] - tol || rest > self.upper[free] + tol {
                    continue;
                }
                v[free] = rest.clamp(self.lower[free], self.upper[free]);
                if !out
                    .iter()
                    .any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-9))
                {
                    out.push(v);
                }
            }
        }
        out
    }
}

/// Solves `min Σ_t ½ d_t x_t² − q_t x_t` subject to `Σ x = total` and
/// `lower ≤ x ≤ upper`, with every `d_t > 0`.
///
/// The KKT point is `x_t(λ) = clamp((q_t + λ)/d_t, lower_t, upper_t)`. The sum
/// `Σ x_t(λ)` is piecewise linear and nondecreasing in `λ`, so `λ` is located
/// exactly by a search over the sorted breakpoints. Returns `(x, λ)`.
pub fn separable_quadratic_knapsack(
    d: &[f64],
    q: &[f64],
    total: f64,
    lower: &[f64],
    upper: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let n = d.len();
    if q.len() != n || lower.len() != n || upper.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: q.len().min(lower.len()).min(upper.len()),
        });
    }
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "knapsack curvatures must be positive and finite".into(),
        ));
    }
    let lo_sum: f64 = lower.iter().sum();
    let hi_sum: f64 = upper.iter().sum();
    let slack = FEAS_TOL * (1.0 + total.abs());
    if total < lo_sum - slack || total > hi_sum + slack || lower.iter().zip(upper).any(|(l, u)| l > u)
    {
        return Err(Error::InfeasibleSet(format!(
            "total {total} outside [{lo_sum}, {hi_sum}]"
        )));
    }

    let x_at = |lambda: f64, t: usize| ((q[t] + lambda) / d[t]).clamp(lower[t], upper[t]);
    let sum_at = |lambda: f64| (0..n).map(|t| x_at(lambda, t)).sum::<f64>();

    let mut breaks: Vec<f64> = Vec::with_capacity(2 * n);
    for t in 0..n {
        breaks.push(d[t] * lower[t] - q[t]);
        breaks.push(d[t] * upper[t] - q[t]);
    }
    breaks.sort_by(f64::total_cmp);

    let first = breaks[0];
    let last = breaks[2 * n - 1];
    let mut lambda = if total <= lo_sum {
        first
    } else if total >= hi_sum {
        last
    } else {
        // Find the first breakpoint whose sum reaches `total`.
        let (mut lo, mut hi) = (0usize, 2 * n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if sum_at(breaks[mid]) >= total {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (a, b) = (breaks[lo], breaks[hi]);
        let (sa, sb) = (sum_at(a), sum_at(b));
        if sb > sa {
            a + (total - sa) * (b - a) / (sb - sa)
        } else {
            a
        }
    };

    // One Newton correction on the free coordinates removes rounding drift.
    let residual = total - sum_at(lambda);
    if residual != 0.0 {
        let slope: f64 = (0..n)
            .filter(|&t| {
                let v = (q[t] + lambda) / d[t];
                v > lower[t] && v < upper[t]
            })
            .map(|t| 1.0 / d[t])
            .sum();
        if slope > 0.0 {
            lambda += residual / slope;
        }
    }

    let x = (0..n).map(|t| x_at(lambda, t)).collect();
    Ok((x, lambda))
}

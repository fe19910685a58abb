//! A single player's best response against fixed opponents.

use crate::error::{Error, Result};
use crate::game::{CostFunction, Utility};
use crate::sets::{separable_quadratic_knapsack, FeasibleSet};
use crate::vecops::{dot, sub};

/// Iteration cap of the projected-gradient fallback.
const MAX_INNER: usize = 200_000;

/// `Σ_t x_t·c_t(R_t + x_t) − u(x)` for opponents' load `R`.
pub fn best_response_objective(others: &[f64], costs: &[CostFunction], utility: &Utility, x: &[f64]) -> f64 {
    costs
        .iter()
        .zip(others.iter().zip(x))
        .map(|(c, (r, v))| v * c.value(r + v))
        .sum::<f64>()
        - utility.value(x)
}

fn objective_gradient(others: &[f64], costs: &[CostFunction], utility: &Utility, x: &[f64]) -> Vec<f64> {
    let du = utility.gradient(x);
    costs
        .iter()
        .enumerate()
        .map(|(t, c)| {
            let load = others[t] + x[t];
            c.value(load) + x[t] * c.derivative(load) - du[t]
        })
        .collect()
}

/// Minimizes the player's cost over `set` given the opponents' aggregate.
///
/// Affine costs with a quadratic (or no) utility on a bounded simplex make
/// the problem a separable quadratic knapsack, solved exactly. Anything
/// else runs projected gradient with backtracking until the gradient
/// mapping falls below `inner_tol`.
pub fn best_response(
    others: &[f64],
    costs: &[CostFunction],
    set: &FeasibleSet,
    utility: &Utility,
    inner_tol: f64,
    warm: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let dim = costs.len();
    if others.len() != dim || set.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: if others.len() != dim { others.len() } else { set.dim() },
        });
    }
    if let (FeasibleSet::BoxSimplex(s), Some((p, offset))) = (set, utility.affine_gradient(dim)) {
        let affine: Option<Vec<(f64, f64)>> = costs.iter().map(|c| c.affine_coefficients()).collect();
        if let Some(ab) = affine {
            // Objective Σ a x² + (aR + b)x + ½P‖x‖² − ⟨offset, x⟩.
            let d: Vec<f64> = ab.iter().map(|(a, _)| 2.0 * a + p).collect();
            if d.iter().all(|v| *v > 0.0) {
                let q: Vec<f64> = ab
                    .iter()
                    .zip(others.iter().zip(&offset))
                    .map(|((a, b), (r, o))| -(a * r + b) + o)
                    .collect();
                return Ok(separable_quadratic_knapsack(&d, &q, s.total, &s.lower, &s.upper)?.0);
            }
        }
    }
    let start = match warm {
        Some(w) => set.project(w)?,
        None => set.project(&vec![0.0; dim])?,
    };
    projected_gradient(
        |x| objective_gradient(others, costs, utility, x),
        set,
        &start,
        inner_tol,
    )
}

/// Projected gradient for a convex objective. The step is backtracked until
/// it is below the inverse of the local Lipschitz estimate of the gradient,
/// a test on gradients rather than function values so that it stays
/// meaningful near the optimum. Stops once `‖(x − x⁺)/s‖ ≤ tol`.
pub(crate) fn projected_gradient<G>(grad: G, set: &FeasibleSet, start: &[f64], tol: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = start.to_vec();
    let mut g = grad(&x);
    let mut step = 1.0;
    let mut mapping = f64::INFINITY;
    for _ in 0..MAX_INNER {
        loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let next = set.project(&trial)?;
            let delta = sub(&next, &x);
            let moved = dot(&delta, &delta);
            let g_next = grad(&next);
            let curvature = dot(&sub(&g_next, &g), &delta);
            if curvature * step <= moved * (1.0 + 1e-12) || step < 1e-14 {
                mapping = moved.sqrt() / step;
                x = next;
                g = g_next;
                if mapping <= tol || moved == 0.0 {
                    return Ok(x);
                }
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
    }
    Err(Error::Convergence {
        what: "projected gradient",
        iterations: MAX_INNER,
        residual: mapping,
        last: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{BoxSimplex, Polytope};
    use crate::vecops::dist;

    fn costs() -> Vec<CostFunction> {
        vec![CostFunction::affine(1.0, 0.0), CostFunction::affine(2.0, 1.0)]
    }

    fn simplex() -> FeasibleSet {
        BoxSimplex::simplex(1.0, 2).unwrap().into()
    }

    #[test]
    fn quadratic_single_player() {
        let x = best_response(&[0.0, 0.0], &costs(), &simplex(), &Utility::None, 1e-10, None).unwrap();
        assert!((x[0] - 5.0 / 6.0).abs() < 1e-12 && (x[1] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn polytope_path_agrees_with_knapsack() {
        let poly: FeasibleSet = simplex().to_polytope().unwrap().into();
        let x = best_response(&[0.2, 0.1], &costs(), &poly, &Utility::None, 1e-12, None).unwrap();
        let y = best_response(&[0.2, 0.1], &costs(), &simplex(), &Utility::None, 1e-12, None).unwrap();
        assert!(dist(&x, &y) < 1e-8, "{x:?} {y:?}");
    }

    #[test]
    fn heavy_preference_wins() {
        let u = Utility::quad_pref(1e6, vec![0.3, 0.7]);
        let x = best_response(&[0.0, 0.0], &costs(), &simplex(), &u, 1e-10, None).unwrap();
        assert!(dist(&x, &[0.3, 0.7]) < 1e-3);
        let poly: FeasibleSet = Polytope::new(
            vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, -1.0, 0.0, 0.0],
        )
        .unwrap()
        .into();
        let x = best_response(&[0.0, 0.0], &costs(), &poly, &u, 1e-10, None).unwrap();
        assert!(dist(&x, &[0.3, 0.7]) < 1e-3);
    }

    #[test]
    fn flat_objective_returns_feasible_point() {
        let flat = vec![CostFunction::affine(0.0, 1.0); 2];
        let x = best_response(&[0.0, 0.0], &flat, &simplex(), &Utility::None, 1e-10, Some(&[0.4, 0.6])).unwrap();
        assert!(simplex().contains(&x, 1e-12));
    }

    #[test]
    fn log_benefit_uses_gradient_path() {
        let set: FeasibleSet = BoxSimplex::new(1.0, vec![0.0; 2], vec![1.0; 2]).unwrap().into();
        let u = Utility::log_benefit(1.0);
        let x = best_response(&[0.0, 0.0], &costs(), &set, &u, 1e-10, None).unwrap();
        // Total load is fixed, so the log term is constant.
        assert!((x[0] - 5.0 / 6.0).abs() < 1e-8);
    }
}

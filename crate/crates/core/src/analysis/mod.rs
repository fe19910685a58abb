//! Convergence bounds for approximating sequences and the empirical
//! distances they dominate.

use serde::{Deserialize, Serialize};

use crate::aas::AasElement;
use crate::error::{Error, Result};
use crate::game::{
    cost_norm_bound, lipschitz_constant, strong_monotonicity, NonatomicInstance, PiecewiseProfile,
};
use crate::vecops::dist_sq;

/// θ-subintervals per segment when sampling utility constants.
const ALPHA_SAMPLES: usize = 4096;
/// A boundary is flagged when its squared jump exceeds this multiple of the
/// local within-class bound.
pub const JUMP_FACTOR: f64 = 5.0;

/// Constants entering the convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub c_min: f64,
    /// `C`, Lipschitz constant of the costs.
    pub lipschitz: f64,
    /// `M`, radius of the ball containing every strategy set.
    pub radius: f64,
    /// `B_c`, largest norm of the cost vector.
    pub b_c: f64,
    pub gamma: f64,
    /// Uniform strong concavity modulus of the utilities.
    pub alpha: f64,
    pub mu_bar: f64,
    pub delta_bar: f64,
    pub d_bar: f64,
}

/// `(measure, α)` pieces covering the type space; each piece carries the
/// smaller of the moduli at its two ends.
pub fn alpha_profile(instance: &NonatomicInstance) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for seg in instance.segments() {
        let thetas = seg.sample_thetas(ALPHA_SAMPLES + 1);
        for w in thetas.windows(2) {
            let a = seg
                .utility
                .utility_at(w[0])
                .alpha()
                .min(seg.utility.utility_at(w[1]).alpha());
            out.push((w[1] - w[0], a));
        }
    }
    out
}

fn min_alpha_on(instance: &NonatomicInstance, cells: &[(f64, f64)]) -> f64 {
    let mut alpha = f64::INFINITY;
    for &(lo, hi) in cells {
        let seg = instance.segment_at(0.5 * (lo + hi));
        for k in 0..=16 {
            let theta = lo + (hi - lo) * k as f64 / 16.0;
            alpha = alpha.min(seg.utility.utility_at(theta).alpha());
        }
    }
    alpha
}

/// Evaluates the bound constants for one element of a sequence.
///
/// Cost constants are taken on `[0, max(M, M_agg)]`; `Γ` and `α` are the
/// largest and smallest sampled values over the type space.
pub fn bound_inputs(instance: &NonatomicInstance, element: &AasElement) -> BoundInputs {
    let radius = instance.radius();
    let cap = radius
        .max(instance.aggregate_cap())
        .max(element.game.aggregate_cap());
    let costs = instance.costs();
    let dim = instance.dim();
    let mut gamma: f64 = 0.0;
    let mut alpha = f64::INFINITY;
    for seg in instance.segments() {
        for theta in seg.sample_thetas(ALPHA_SAMPLES + 1) {
            let u = seg.utility.utility_at(theta);
            gamma = gamma.max(u.gamma(dim, radius));
            alpha = alpha.min(u.alpha());
        }
    }
    BoundInputs {
        c_min: strong_monotonicity(costs, cap).max(0.0),
        lipschitz: lipschitz_constant(costs, cap),
        radius,
        b_c: cost_norm_bound(costs, cap),
        gamma,
        alpha: alpha.max(0.0),
        mu_bar: element.metrics.mu_bar,
        delta_bar: element.metrics.delta_bar,
        d_bar: element.metrics.d_bar,
    }
}

/// Bound on `‖X̂ − X*‖²` without utilities:
/// `(2/c_min)(B_c·δ̄ + C(M+1)²·μ̄)`.
pub fn bound_no_utility(b: &BoundInputs) -> Result<f64> {
    if b.c_min <= 0.0 {
        return Err(Error::Assumption("costs are not strongly monotone (c_min = 0)".into()));
    }
    let m1 = b.radius + 1.0;
    Ok(2.0 / b.c_min * (b.b_c * b.delta_bar + b.lipschitz * m1 * m1 * b.mu_bar))
}

/// Bound on `∫‖x̂_θ − x*_θ‖² dθ` with strongly concave utilities:
/// `(2/α)((B_c+Γ)δ̄ + C(M+1)²μ̄ + M·d̄)`.
pub fn bound_with_utility(b: &BoundInputs) -> Result<f64> {
    if b.alpha <= 0.0 {
        return Err(Error::Assumption("utilities are not strongly concave (α = 0)".into()));
    }
    let m1 = b.radius + 1.0;
    Ok(2.0 / b.alpha
        * ((b.b_c + b.gamma) * b.delta_bar + b.lipschitz * m1 * m1 * b.mu_bar + b.radius * b.d_bar))
}

/// `∫ α_θ‖x̂_θ − x*_θ‖² dθ ≤ P` with
/// `P = (1+2M)(B_c+Γ)δ̄ + 2C(M+1)²μ̄ + 2M·d̄`, the sum of the three estimates
/// that make up the argument behind [`bound_with_utility`].
pub fn weighted_gap_budget(b: &BoundInputs) -> f64 {
    let m1 = b.radius + 1.0;
    (1.0 + 2.0 * b.radius) * (b.b_c + b.gamma) * b.delta_bar
        + 2.0 * b.lipschitz * m1 * m1 * b.mu_bar
        + 2.0 * b.radius * b.d_bar
}

/// `P/α`, the profile bound with the constants of the underlying estimates.
pub fn bound_with_utility_proof(b: &BoundInputs) -> Result<f64> {
    if b.alpha <= 0.0 {
        return Err(Error::Assumption("utilities are not strongly concave (α = 0)".into()));
    }
    Ok(weighted_gap_budget(b) / b.alpha)
}

/// Profile bound for type-dependent moduli that may vanish somewhere.
///
/// For any threshold `a > 0`, types with `α_θ ≥ a` contribute at most `P/a`
/// and the rest at most `(2M + δ̄)²` each, since both profiles lie within
/// `M + δ̄` of the origin. Returns the minimum over thresholds drawn from
/// `alphas` (as produced by [`alpha_profile`]).
pub fn truncated_profile_bound(b: &BoundInputs, alphas: &[(f64, f64)]) -> f64 {
    let budget = weighted_gap_budget(b);
    let spread = (2.0 * b.radius + b.delta_bar).powi(2);
    let mut sorted: Vec<(f64, f64)> = alphas.to_vec();
    sorted.sort_by(|x, y| x.1.total_cmp(&y.1));
    let total: f64 = sorted.iter().map(|p| p.0).sum();
    let mut best = total * spread;
    let mut below = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let a = sorted[k].1;
        if a > 0.0 {
            best = best.min(budget / a + below * spread);
        }
        while k < sorted.len() && sorted[k].1 == a {
            below += sorted[k].0;
            k += 1;
        }
    }
    best
}

/// Bound on `‖x*_θ − x*_ξ‖²` for two types of one class:
/// `(2/α)(M·d_i + (B_c+Γ)δ_i)`.
pub fn within_class_bound(b: &BoundInputs, alpha: f64, d_i: f64, delta_i: f64) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::Assumption("class utilities are not strongly concave".into()));
    }
    Ok(2.0 / alpha * (b.radius * d_i + (b.b_c + b.gamma) * delta_i))
}

/// Slack allowed when comparing measured distances with bounds, covering an
/// equilibrium solved to `tol` instead of exactly.
pub fn dominance_slack(tol: f64, radius: f64) -> f64 {
    1e-6 + 2.0 * tol * 2.0 * radius
}

/// `∫ ‖a_θ − b_θ‖² dθ`, exact on the common refinement of both partitions.
pub fn profile_distance(a: &PiecewiseProfile, b: &PiecewiseProfile) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut edges: Vec<f64> = a
        .cells()
        .iter()
        .chain(b.cells())
        .flat_map(|c| [c.lo, c.hi])
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut total = 0.0;
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        total += (w[1] - w[0]) * dist_sq(a.value_at(mid), b.value_at(mid));
    }
    Ok(total)
}

/// A detected discontinuity of a reference profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub theta: f64,
    pub jump_sq: f64,
    pub local_bound: f64,
}

/// Boundaries between consecutive classes of `reference` whose squared jump
/// exceeds [`JUMP_FACTOR`] times the larger within-class bound of the two
/// classes. Each class uses its own smallest sampled modulus; classes with a
/// vanishing modulus have no finite bound and never flag a jump. Bounds are
/// floored at [`dominance_slack`] for the tolerance `tol` the reference was
/// solved to, so solver noise between constant classes is not reported.
pub fn continuity_scan(
    instance: &NonatomicInstance,
    element: &AasElement,
    reference: &PiecewiseProfile,
    inputs: &BoundInputs,
    tol: f64,
) -> Result<Vec<Jump>> {
    let floor = dominance_slack(tol, inputs.radius);
    let players = element.game.players();
    let mut order: Vec<usize> = (0..players.len()).collect();
    order.sort_by(|&i, &j| players[i].cells[0].0.total_cmp(&players[j].cells[0].0));
    let local: Vec<f64> = order
        .iter()
        .map(|&i| {
            let alpha = min_alpha_on(instance, &players[i].cells);
            within_class_bound(inputs, alpha, element.metrics.d[i], element.metrics.delta[i])
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let mut jumps = Vec::new();
    for k in 0..order.len().saturating_sub(1) {
        let (left, right) = (&players[order[k]], &players[order[k + 1]]);
        let edge = left.cells.last().map_or(0.0, |c| c.1);
        let a = reference.value_at(0.5 * (left.cells[0].0 + left.cells[0].1));
        let b = reference.value_at(0.5 * (right.cells[0].0 + right.cells[0].1));
        let jump_sq = dist_sq(a, b);
        let bound = local[k].max(local[k + 1]).max(floor);
        if jump_sq > JUMP_FACTOR * bound {
            jumps.push(Jump {
                theta: edge,
                jump_sq,
                local_bound: bound,
            });
        }
    }
    Ok(jumps)
}

/// One row of a convergence report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub nu: usize,
    pub players: usize,
    pub mu_bar: f64,
    pub delta_bar: f64,
    pub d_bar: f64,
    pub agg_dist_sq: f64,
    pub profile_dist_sq: f64,
    pub bound_no_u: f64,
    pub bound_with_u: f64,
    pub residual: f64,
    pub sweeps: usize,
    pub seconds: f64,
    pub bound_with_u_proof: f64,
    pub bound_with_u_trunc: f64,
    pub converged: bool,
    /// Distance to the potential minimizer, for games without utilities.
    pub beckmann_agg_dist_sq: Option<f64>,
}

/// Rows ordered by `ν`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

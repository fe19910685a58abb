//! Discretization metrics `μ_i`, `δ_i`, `d_i` of an approximating atomic game.

use crate::error::{Error, Result};
use crate::game::{affine_gradient_gap, AtomicInstance, NonatomicInstance, Player, Utility};
use crate::sets::{hausdorff_distance, FeasibleSet};
use crate::vecops::norm;

/// Initial number of θ-points per cell.
pub const INITIAL_GRID: usize = 16;
/// Upper limit on θ-points per cell during adaptive refinement.
pub const MAX_GRID: usize = 4096;
/// Refinement stops once doubling the grid changes a metric by less than this.
pub const REFINE_RATIO: f64 = 0.1;
/// Sample count for utility-gradient gaps without a closed form.
const GRADIENT_SAMPLES: usize = 257;

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
    pub d: Vec<f64>,
    pub mu_bar: f64,
    pub delta_bar: f64,
    pub d_bar: f64,
    /// θ-points per cell in the final grid.
    pub grid_points: usize,
}

/// `(1/μ_i)·X_i` and the utility whose gradient at `x` is `∇u_i(μ_i x)`.
pub fn representative(player: &Player) -> (FeasibleSet, Utility) {
    let inv = 1.0 / player.measure;
    (player.set.scaled(inv), player.utility.scaled(inv))
}

/// `max_{x ∈ B_0(radius)} ‖∇u(x) − ∇v(x)‖₂`.
///
/// Exact for utilities with affine gradients; log-benefit pairs are compared
/// along the total-load axis, the only direction their gradients depend on,
/// restricted to nonnegative loads.
pub fn gradient_gap(u: &Utility, v: &Utility, dim: usize, radius: f64) -> Result<f64> {
    if let Some(gap) = affine_gradient_gap(u, v, dim, radius) {
        return Ok(gap);
    }
    match (u, v) {
        (Utility::LogBenefit { .. }, Utility::LogBenefit { .. }) => {
            let smax = (dim as f64).sqrt() * radius;
            let mut worst: f64 = 0.0;
            for k in 0..GRADIENT_SAMPLES {
                let s = smax * k as f64 / (GRADIENT_SAMPLES - 1) as f64;
                let mut x = vec![0.0; dim];
                x[0] = s;
                let gu = u.gradient(&x);
                let gv = v.gradient(&x);
                let diff: Vec<f64> = gu.iter().zip(&gv).map(|(a, b)| a - b).collect();
                worst = worst.max(norm(&diff));
            }
            Ok(worst)
        }
        _ => Err(Error::InvalidUtility(
            "cannot compare utilities of different kinds".into(),
        )),
    }
}

/// `(δ_i, d_i)` of one player with `points` θ-samples per cell.
fn class_metrics(instance: &NonatomicInstance, player: &Player, points: usize) -> Result<(f64, f64)> {
    let (rep_set, rep_u) = representative(player);
    let dim = instance.dim();
    let mut delta: f64 = 0.0;
    let mut d: f64 = 0.0;
    for &(lo, hi) in &player.cells {
        // Cells never straddle a segment boundary, so the segment at the
        // midpoint supplies the parameters on the whole closed cell.
        let seg = instance.segment_at(0.5 * (lo + hi));
        for k in 0..points {
            let theta = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            let set = seg.set.set_at(theta, dim)?;
            delta = delta.max(hausdorff_distance(&set, &rep_set)?);
            let u = seg.utility.utility_at(theta);
            d = d.max(gradient_gap(&rep_u, &u, dim, instance.radius())?);
        }
    }
    Ok((delta, d))
}

fn close_enough(coarse: f64, fine: f64) -> bool {
    (fine - coarse).abs() <= REFINE_RATIO * fine.abs().max(coarse.abs()) || fine.max(coarse) <= 1e-15
}

/// Metrics of an atomic game against the nonatomic game it approximates.
///
/// The maxima over each class are taken on a θ-grid that starts at
/// [`INITIAL_GRID`] points per cell and doubles until every class changes by
/// less than [`REFINE_RATIO`].
pub fn compute_metrics(instance: &NonatomicInstance, game: &AtomicInstance) -> Result<Metrics> {
    let players = game.players();
    if players.iter().any(|p| p.cells.is_empty()) {
        return Err(Error::InvalidArgument(
            "metrics need every player to carry its class of types".into(),
        ));
    }
    let mut points = INITIAL_GRID;
    let mut current: Vec<(f64, f64)> = players
        .iter()
        .map(|p| class_metrics(instance, p, points))
        .collect::<Result<_>>()?;
    while points < MAX_GRID {
        let finer = 2 * points;
        let next: Vec<(f64, f64)> = players
            .iter()
            .map(|p| class_metrics(instance, p, finer))
            .collect::<Result<_>>()?;
        let settled = current
            .iter()
            .zip(&next)
            .all(|(a, b)| close_enough(a.0, b.0) && close_enough(a.1, b.1));
        current = next;
        points = finer;
        if settled {
            break;
        }
    }
    let mu: Vec<f64> = players.iter().map(|p| p.measure).collect();
    let delta: Vec<f64> = current.iter().map(|m| m.0).collect();
    let d: Vec<f64> = current.iter().map(|m| m.1).collect();
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(Metrics {
        mu_bar: max(&mu),
        delta_bar: max(&delta),
        d_bar: max(&d),
        mu,
        delta,
        d,
        grid_points: points,
    })
}

//! Player costs, their gradients, and the variational-inequality residuals
//! that characterize Nash and Wardrop equilibria.

use super::cost::{eval_network_cost, eval_network_derivative};
use super::instance::{AtomicInstance, AtomicProfile, NonatomicInstance, PiecewiseProfile};
use crate::error::{Error, Result};
use crate::vecops::{dot, sub};

fn row<'a>(game: &AtomicInstance, i: usize, profile: &'a AtomicProfile) -> Result<&'a [f64]> {
    game.player(i)?;
    let x = profile.loads.get(i).ok_or(Error::PlayerIndex {
        index: i,
        count: profile.loads.len(),
    })?;
    if x.len() != game.dim() {
        return Err(Error::Dimension {
            expected: game.dim(),
            got: x.len(),
        });
    }
    Ok(x)
}

/// `f_i = Σ_t x_{i,t}·c_t(X_t) − u_i(x_i)`.
pub fn player_cost(game: &AtomicInstance, i: usize, profile: &AtomicProfile) -> Result<f64> {
    let x = row(game, i, profile)?;
    let c = eval_network_cost(game.costs(), &profile.aggregate())?;
    Ok(dot(x, &c) - game.players()[i].utility.value(x))
}

/// `∇_i f_i = (c_t(X_t) + x_{i,t}·c_t'(X_t))_t − ∇u_i(x_i)`.
pub fn player_cost_gradient(game: &AtomicInstance, i: usize, profile: &AtomicProfile) -> Result<Vec<f64>> {
    let x = row(game, i, profile)?;
    let agg = profile.aggregate();
    let c = eval_network_cost(game.costs(), &agg)?;
    let dc = eval_network_derivative(game.costs(), &agg);
    let du = game.players()[i].utility.gradient(x);
    Ok((0..game.dim())
        .map(|t| c[t] + x[t] * dc[t] - du[t])
        .collect())
}

/// Per-player gaps `max_{z ∈ X_i} ⟨∇_i f_i, x_i − z⟩`.
pub fn ne_vi_gaps(game: &AtomicInstance, profile: &AtomicProfile) -> Result<Vec<f64>> {
    if profile.loads.len() != game.num_players() {
        return Err(Error::Dimension {
            expected: game.num_players(),
            got: profile.loads.len(),
        });
    }
    let agg = profile.aggregate();
    let c = eval_network_cost(game.costs(), &agg)?;
    let dc = eval_network_derivative(game.costs(), &agg);
    game.players()
        .iter()
        .zip(&profile.loads)
        .map(|(p, x)| {
            let du = p.utility.gradient(x);
            let g: Vec<f64> = (0..game.dim()).map(|t| c[t] + x[t] * dc[t] - du[t]).collect();
            let z = p.set.linear_minimizer(&g)?;
            Ok(dot(&g, &sub(x, &z)).max(0.0))
        })
        .collect()
}

/// Largest per-player VI gap; zero exactly at a Nash equilibrium.
pub fn ne_vi_residual(game: &AtomicInstance, profile: &AtomicProfile) -> Result<f64> {
    Ok(ne_vi_gaps(game, profile)?.into_iter().fold(0.0, f64::max))
}

/// Largest per-type VI gap `max_{z ∈ X_θ} ⟨c(X) − ∇u_θ(x_θ), x_θ − z⟩` over
/// the types in `grid`, or over the cell midpoints of `profile` when `grid`
/// is `None`.
pub fn we_vi_residual(
    instance: &NonatomicInstance,
    profile: &PiecewiseProfile,
    grid: Option<&[f64]>,
) -> Result<f64> {
    if profile.dim() != instance.dim() {
        return Err(Error::Dimension {
            expected: instance.dim(),
            got: profile.dim(),
        });
    }
    let c = eval_network_cost(instance.costs(), &profile.aggregate())?;
    let midpoints;
    let thetas = match grid {
        Some(g) => g,
        None => {
            midpoints = profile.midpoints();
            &midpoints
        }
    };
    let mut worst: f64 = 0.0;
    for &theta in thetas {
        let x = profile.value_at(theta);
        let du = instance.utility_at(theta).gradient(x);
        let g = sub(&c, &du);
        let z = instance.set_at(theta)?.linear_minimizer(&g)?;
        worst = worst.max(dot(&g, &sub(x, &z)));
    }
    Ok(worst)
}

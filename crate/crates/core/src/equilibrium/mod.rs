//! Nash equilibria of atomic games by best-response dynamics, and Wardrop
//! references for the nonatomic game.

mod best_response;

use serde::{Deserialize, Serialize};

pub use best_response::{best_response, best_response_objective};

use crate::aas::{build_uniform_aas, AasElement};
use crate::error::{Error, Result};
use crate::game::{
    eval_network_cost, ne_vi_gaps, strong_monotonicity, we_vi_residual, AtomicInstance,
    AtomicProfile, NonatomicInstance, PiecewiseProfile, ProfileCell, Utility,
};
use crate::sets::{separable_quadratic_knapsack, BoxSimplex, FeasibleSet};
use crate::vecops::{dot, sub};

/// Equilibrium tolerance used for fine-grid reference solutions.
pub const REFERENCE_TOL: f64 = 1e-5;
/// Default size of the fine reference grid.
pub const DEFAULT_NU_REF: usize = 1000;
/// Stationarity gap required of the potential minimizer.
pub const BECKMANN_GAP_TOL: f64 = 1e-8;

/// Starting profile for best-response dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    /// Projection of the origin onto each set.
    ZerosProjected,
    /// Projection of each player's preferred profile; players without one
    /// start from the uniform split.
    PreferredProfile,
    /// Projection of the equal split of each player's largest total.
    UniformSplit,
    /// Explicit loads, projected onto the sets.
    Supplied { loads: Vec<Vec<f64>> },
}

/// Quantity compared against `kkt_tol` after each sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `max_i gap_i / μ_i`: each gap measured on the per-capita strategy, so
    /// the threshold means the same for every class size.
    PerCapita,
    /// `max_i gap_i`, the plain Nash residual.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub kkt_tol: f64,
    pub max_sweeps: usize,
    pub br_inner_tol: f64,
    pub init: Init,
    pub stop_rule: StopRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kkt_tol: 1e-3,
            max_sweeps: 10_000,
            br_inner_tol: 1e-10,
            init: Init::PreferredProfile,
            stop_rule: StopRule::PerCapita,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tol > 0.0 && self.kkt_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("kkt_tol must be positive, got {}", self.kkt_tol)));
        }
        if !(self.br_inner_tol > 0.0 && self.br_inner_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "br_inner_tol must be positive, got {}",
                self.br_inner_tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of best-response dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub profile: AtomicProfile,
    /// Nash residual `max_i gap_i`.
    pub residual: f64,
    /// `max_i gap_i / μ_i`.
    pub scaled_residual: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Stopping quantity after each sweep.
    pub history: Vec<f64>,
}

fn uniform_split(set: &FeasibleSet) -> Result<Vec<f64>> {
    let share = set.max_total()? / set.dim() as f64;
    set.project(&vec![share; set.dim()])
}

/// The starting profile selected by `init`.
pub fn initial_profile(game: &AtomicInstance, init: &Init) -> Result<AtomicProfile> {
    let loads = game
        .players()
        .iter()
        .enumerate()
        .map(|(i, p)| match init {
            Init::ZerosProjected => p.set.project(&vec![0.0; game.dim()]),
            Init::UniformSplit => uniform_split(&p.set),
            Init::PreferredProfile => match &p.utility {
                Utility::QuadPref { preferred, .. } => p.set.project(preferred),
                _ => uniform_split(&p.set),
            },
            Init::Supplied { loads } => {
                let row = loads.get(i).ok_or(Error::Dimension {
                    expected: game.num_players(),
                    got: loads.len(),
                })?;
                p.set.project(row)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AtomicProfile::new(loads))
}

/// Gauss–Seidel best-response dynamics in ascending player order, stopped
/// once the quantity selected by `stop_rule` is at most `kkt_tol`. Since
/// every `μ_i ≤ 1` in an approximating game, the per-capita rule implies the
/// plain one. Running out of sweeps is reported through `converged = false`,
/// not as an error.
pub fn solve_ne(game: &AtomicInstance, config: &SolverConfig) -> Result<EquilibriumResult> {
    config.validate()?;
    let mut profile = initial_profile(game, &config.init)?;
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut scaled_residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let mut agg = profile.aggregate();
        for (i, player) in game.players().iter().enumerate() {
            let others: Vec<f64> = sub(&agg, &profile.loads[i])
                .into_iter()
                .map(|v| v.max(0.0))
                .collect();
            let x = best_response(
                &others,
                game.costs(),
                &player.set,
                &player.utility,
                config.br_inner_tol,
                Some(&profile.loads[i]),
            )?;
            for (a, (o, v)) in agg.iter_mut().zip(others.iter().zip(&x)) {
                *a = o + v;
            }
            profile.loads[i] = x;
        }
        let gaps = ne_vi_gaps(game, &profile)?;
        residual = gaps.iter().copied().fold(0.0, f64::max);
        scaled_residual = gaps
            .iter()
            .zip(game.players())
            .map(|(g, p)| g / p.measure)
            .fold(0.0, f64::max);
        let stop = match config.stop_rule {
            StopRule::PerCapita => scaled_residual.max(residual),
            StopRule::Absolute => residual,
        };
        history.push(stop);
        log::debug!("sweep {sweeps}: residual {residual:e}, per capita {scaled_residual:e}");
        if stop <= config.kkt_tol {
            return Ok(EquilibriumResult {
                profile,
                residual,
                scaled_residual,
                sweeps,
                converged: true,
                history,
            });
        }
    }
    log::warn!(
        "best-response dynamics stopped after {sweeps} sweeps with residual {residual:e}"
    );
    Ok(EquilibriumResult {
        profile,
        residual,
        scaled_residual,
        sweeps,
        converged: false,
        history,
    })
}

/// `x̂_θ = x̂_i / μ_i` on every cell of class `i`.
pub fn disaggregate(result: &EquilibriumResult, element: &AasElement) -> Result<PiecewiseProfile> {
    let players = element.game.players();
    if result.profile.loads.len() != players.len() {
        return Err(Error::Dimension {
            expected: players.len(),
            got: result.profile.loads.len(),
        });
    }
    let mut cells = Vec::new();
    for (p, x) in players.iter().zip(&result.profile.loads) {
        let per_capita: Vec<f64> = x.iter().map(|v| v / p.measure).collect();
        for &(lo, hi) in &p.cells {
            cells.push(ProfileCell {
                lo,
                hi,
                x: per_capita.clone(),
            });
        }
    }
    PiecewiseProfile::new(cells)
}

/// Minimizer of the potential `Φ(X) = Σ_t ∫_0^{X_t} c_t` over the aggregate set.
#[derive(Debug, Clone, PartialEq)]
pub struct BeckmannSolution {
    pub aggregate: Vec<f64>,
    /// `max_{Z} ⟨c(X), X − Z⟩` over the aggregate set.
    pub gap: f64,
}

/// `Φ(X)`.
pub fn beckmann_potential(instance: &NonatomicInstance, aggregate: &[f64]) -> f64 {
    instance
        .costs()
        .iter()
        .zip(aggregate)
        .map(|(c, x)| c.integral(*x))
        .sum()
}

/// Wardrop aggregate of a game without utilities, from its potential.
///
/// Supported when every segment is a simplex without explicit bounds, so the
/// aggregate set is the simplex of total `∫ E_θ dθ`.
pub fn wardrop_aggregate_beckmann(instance: &NonatomicInstance) -> Result<BeckmannSolution> {
    if instance.has_utilities() {
        return Err(Error::Assumption(
            "the potential characterizes the equilibrium only without utilities".into(),
        ));
    }
    let mut demand = 0.0;
    for seg in instance.segments() {
        match &seg.set {
            crate::game::SetFamily::Simplex {
                demand: e,
                lower: None,
                upper: None,
            } => demand += e.integral(seg.start, seg.end),
            _ => {
                return Err(Error::InvalidArgument(
                    "the potential solver supports plain simplex segments only".into(),
                ))
            }
        }
    }
    let dim = instance.dim();
    let costs = instance.costs();
    if strong_monotonicity(costs, instance.aggregate_cap()) <= 0.0 {
        log::warn!("costs are not strictly increasing; the Wardrop aggregate may not be unique");
    }
    let set = BoxSimplex::new(demand, vec![0.0; dim], vec![demand.max(0.0); dim])?;
    let slopes: Option<Vec<(f64, f64)>> = costs.iter().map(|c| c.affine_coefficients()).collect();
    let aggregate = match slopes {
        Some(ab) if ab.iter().all(|(a, _)| *a > 0.0) => {
            let d: Vec<f64> = ab.iter().map(|(a, _)| *a).collect();
            let q: Vec<f64> = ab.iter().map(|(_, b)| -b).collect();
            separable_quadratic_knapsack(&d, &q, demand, &set.lower, &set.upper)?.0
        }
        _ => {
            let set: FeasibleSet = set.clone().into();
            best_response::projected_gradient(
                |x| costs.iter().zip(x).map(|(c, v)| c.value(*v)).collect(),
                &set,
                &set.project(&vec![demand / dim as f64; dim])?,
                1e-13,
            )?
        }
    };
    let c = eval_network_cost(costs, &aggregate)?;
    let z = set.linear_minimizer(&c);
    let gap = dot(&c, &sub(&aggregate, &z)).max(0.0);
    if gap > BECKMANN_GAP_TOL {
        return Err(Error::Convergence {
            what: "potential minimization",
            iterations: 0,
            residual: gap,
            last: aggregate,
        });
    }
    Ok(BeckmannSolution { aggregate, gap })
}

/// Fine-grid proxy for the Wardrop equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub element: AasElement,
    pub result: EquilibriumResult,
    pub profile: PiecewiseProfile,
    pub we_residual: f64,
}

/// Solves the uniform approximation with `nu_ref` pieces to `config.kkt_tol`
/// and disaggregates it. Non-convergence is an error here.
pub fn wardrop_reference(
    instance: &NonatomicInstance,
    nu_ref: usize,
    config: &SolverConfig,
) -> Result<ReferenceSolution> {
    let element = build_uniform_aas(instance, nu_ref)?;
    let result = solve_ne(&element.game, config)?;
    if !result.converged {
        return Err(Error::Convergence {
            what: "reference best-response dynamics",
            iterations: result.sweeps,
            residual: result.residual,
            last: result.profile.aggregate(),
        });
    }
    let profile = disaggregate(&result, &element)?;
    let we_residual = we_vi_residual(instance, &profile, None)?;
    Ok(ReferenceSolution {
        element,
        result,
        profile,
        we_residual,
    })
}

//! Game model: latencies, utilities, parameter families, instances and
//! equilibrium residuals.

mod cost;
mod instance;
mod param;
mod utility;
mod vi;

pub use cost::{
    cost_norm_bound, eval_network_cost, eval_network_derivative, lipschitz_constant,
    strong_monotonicity, CostFunction, CostKind,
};
pub use instance::{
    AtomicInstance, AtomicProfile, NonatomicInstance, PiecewiseProfile, Player, ProfileCell,
    Segment,
};
pub use param::{ParamFn, SetFamily, UtilityFamily, INTEGRAL_TOL};
pub use utility::{affine_gradient_gap, Utility};
pub use vi::{ne_vi_gaps, ne_vi_residual, player_cost, player_cost_gradient, we_vi_residual};

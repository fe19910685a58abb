//! Atomic approximating sequences: atomic games whose players stand for
//! shrinking classes of nonatomic types.

mod metrics;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use metrics::{
    compute_metrics, gradient_gap, representative, Metrics, INITIAL_GRID, MAX_GRID, REFINE_RATIO,
};

use crate::error::{Error, Result};
use crate::game::{AtomicInstance, NonatomicInstance, Player, Segment};
use crate::sets::{random_directions, support_hausdorff_estimate};

/// Tolerance for merging coincident cut points.
const CUT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// Uniform θ-grid refined by the segment boundaries.
    Uniform,
    /// Preimages of a uniform grid over the parameter space.
    Meshgrid,
}

/// One element of an approximating sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct AasElement {
    pub nu: usize,
    pub construction: Construction,
    pub game: AtomicInstance,
    pub metrics: Metrics,
}

impl AasElement {
    pub fn num_players(&self) -> usize {
        self.game.num_players()
    }

    /// Class of each player as a list of intervals.
    pub fn partition(&self) -> Vec<Vec<(f64, f64)>> {
        self.game.players().iter().map(|p| p.cells.clone()).collect()
    }
}

/// Sorted union of `{k/ν}` and the segment boundaries.
pub fn uniform_cut_points(instance: &NonatomicInstance, nu: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..=nu).map(|k| k as f64 / nu as f64).collect();
    cuts.extend(instance.discontinuities());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= CUT_TOL);
    cuts
}

/// Splits the type space uniformly into `ν` pieces, also cutting at every
/// segment boundary. Player `i` gets `μ_i·X_m` and `μ_i·u_m(·/μ_i)` where `m`
/// is the midpoint of its interval.
pub fn build_uniform_aas(instance: &NonatomicInstance, nu: usize) -> Result<AasElement> {
    if nu == 0 {
        return Err(Error::InvalidArgument("ν must be at least 1".into()));
    }
    let cuts = uniform_cut_points(instance, nu);
    let dim = instance.dim();
    let mut players = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mu = hi - lo;
        let mid = 0.5 * (lo + hi);
        let seg = instance.segment_at(mid);
        let set = seg.set.set_at(mid, dim)?.scaled(mu);
        let utility = seg.utility.utility_at(mid).scaled(mu);
        players.push(Player {
            measure: mu,
            set,
            utility,
            cells: vec![(lo, hi)],
        });
    }
    let game = AtomicInstance::new(players, instance.costs().to_vec())?;
    let metrics = compute_metrics(instance, &game)?;
    Ok(AasElement {
        nu,
        construction: Construction::Uniform,
        game,
        metrics,
    })
}

/// Cell index of `v` in a grid of `nu` equal bins over `[lo, hi]`.
fn bin(v: f64, lo: f64, hi: f64, nu: usize) -> usize {
    let r = ((v - lo) / (hi - lo) * nu as f64).floor();
    (r.max(0.0) as usize).min(nu - 1)
}

struct ParamSpace {
    varying: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn segment_params(seg: &Segment, theta: f64, dim: usize) -> Vec<f64> {
    let mut p = seg.set.params(theta, dim);
    p.extend(seg.utility.params(theta));
    p
}

fn check_common_structure(instance: &NonatomicInstance) -> Result<()> {
    let first = &instance.segments()[0];
    for seg in instance.segments() {
        let same_set = std::mem::discriminant(&seg.set) == std::mem::discriminant(&first.set)
            && seg.set.structure_key() == first.set.structure_key();
        if !same_set {
            return Err(Error::InvalidArgument(
                "the meshgrid construction needs one constraint structure across segments".into(),
            ));
        }
        if seg.utility.kind_name() != first.utility.kind_name() {
            return Err(Error::InvalidArgument(
                "the meshgrid construction needs one utility kind across segments".into(),
            ));
        }
    }
    Ok(())
}

fn param_space(instance: &NonatomicInstance, samples: usize) -> Result<ParamSpace> {
    let dim = instance.dim();
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for seg in instance.segments() {
        for theta in seg.sample_thetas(samples) {
            let p = segment_params(seg, theta, dim);
            if let Some(v) = p.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("parameter value {v} at θ = {theta}")));
            }
            if lo.is_empty() {
                lo = p.clone();
                hi = p;
            } else {
                for (k, v) in p.iter().enumerate() {
                    lo[k] = lo[k].min(*v);
                    hi[k] = hi[k].max(*v);
                }
            }
        }
    }
    let varying = (0..lo.len())
        .filter(|&k| hi[k] - lo[k] > 1e-12 * (1.0 + hi[k].abs()))
        .collect();
    Ok(ParamSpace { varying, lo, hi })
}

fn cell_key(space: &ParamSpace, params: &[f64], nu: usize) -> Vec<usize> {
    space
        .varying
        .iter()
        .map(|&k| bin(params[k], space.lo[k], space.hi[k], nu))
        .collect()
}

/// Splits each segment into intervals of constant parameter cell. Crossings
/// are located by dense sampling followed by bisection.
fn mesh_intervals(
    instance: &NonatomicInstance,
    space: &ParamSpace,
    nu: usize,
) -> Vec<(Vec<usize>, f64, f64)> {
    let dim = instance.dim();
    let samples = (16 * nu).max(512);
    let mut out = Vec::new();
    for seg in instance.segments() {
        let key_at = |theta: f64| cell_key(space, &segment_params(seg, theta, dim), nu);
        let h = seg.length() / samples as f64;
        let mut start = seg.start;
        let mut key = key_at(seg.start);
        for k in 1..samples {
            let theta = seg.start + h * k as f64;
            let next = key_at(theta);
            if next == key {
                continue;
            }
            // The key changes somewhere in (theta − h, theta].
            let (mut a, mut b) = (theta - h, theta);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if key_at(m) == key {
                    a = m;
                } else {
                    b = m;
                }
            }
            if b > start {
                out.push((key, start, b));
                start = b;
            }
            key = next;
        }
        if seg.end > start {
            out.push((key, start, seg.end));
        }
    }
    out
}

/// Groups types whose parameters fall into the same cell of a uniform grid
/// with `ν` bins per varying parameter. When some class would still be
/// larger than `1/ν`, the θ-axis is added as one more grid dimension.
///
/// Class `n` receives `X_n = {x : A x ≤ ∫_{Θ_n} b_θ dθ}` and the utility
/// `μ_n·u(s̄_n, x/μ_n)` with `s̄_n` the class average of the utility parameters.
pub fn build_meshgrid_aas(instance: &NonatomicInstance, nu: usize) -> Result<AasElement> {
    if nu == 0 {
        return Err(Error::InvalidArgument("ν must be at least 1".into()));
    }
    check_common_structure(instance)?;
    let space = param_space(instance, (16 * nu).max(512))?;
    let intervals = mesh_intervals(instance, &space, nu);

    let group = |items: &[(Vec<usize>, f64, f64)]| {
        let mut classes: BTreeMap<Vec<usize>, Vec<(f64, f64)>> = BTreeMap::new();
        for (key, lo, hi) in items {
            classes.entry(key.clone()).or_default().push((*lo, *hi));
        }
        classes
    };
    let mut classes = group(&intervals);
    let oversized = classes
        .values()
        .any(|cells| cells.iter().map(|(a, b)| b - a).sum::<f64>() > 1.0 / nu as f64 + CUT_TOL);
    if oversized {
        let mut split = Vec::new();
        for (key, lo, hi) in &intervals {
            let mut a = *lo;
            while *hi - a > CUT_TOL {
                let k = bin(a + CUT_TOL, 0.0, 1.0, nu);
                let edge = ((k + 1) as f64 / nu as f64).min(*hi);
                let mut tagged = key.clone();
                tagged.push(k);
                split.push((tagged, a, edge));
                a = edge;
            }
        }
        classes = group(&split);
    }

    let dim = instance.dim();
    let mut players = Vec::new();
    for cells in classes.into_values() {
        let mu: f64 = cells.iter().map(|(a, b)| b - a).sum();
        if mu <= CUT_TOL {
            continue;
        }
        let family = &instance.segment_at(0.5 * (cells[0].0 + cells[0].1));
        let n_set = family.set.param_fns(dim).len();
        let n_util = family.utility.param_fns().len();
        let mut set_int = vec![0.0; n_set];
        let mut util_int = vec![0.0; n_util];
        for &(lo, hi) in &cells {
            let seg = instance.segment_at(0.5 * (lo + hi));
            for (acc, f) in set_int.iter_mut().zip(seg.set.param_fns(dim)) {
                *acc += f.integral(lo, hi);
            }
            for (acc, f) in util_int.iter_mut().zip(seg.utility.param_fns()) {
                *acc += f.integral(lo, hi);
            }
        }
        let set = family.set.set_from_params(&set_int, dim)?;
        let avg: Vec<f64> = util_int.iter().map(|v| v / mu).collect();
        let utility = family.utility.utility_from_params(&avg).scaled(mu);
        players.push(Player {
            measure: mu,
            set,
            utility,
            cells,
        });
    }
    players.sort_by(|a, b| a.cells[0].0.total_cmp(&b.cells[0].0));
    let game = AtomicInstance::new(players, instance.costs().to_vec())?;
    let metrics = compute_metrics(instance, &game)?;
    Ok(AasElement {
        nu,
        construction: Construction::Meshgrid,
        game,
        metrics,
    })
}

/// Outcome of [`metrics_vanish_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct VanishReport {
    pub nus: Vec<usize>,
    pub players: Vec<usize>,
    pub mu_bar: Vec<f64>,
    pub delta_bar: Vec<f64>,
    pub d_bar: Vec<f64>,
}

/// Checks that a sequence behaves like an approximating sequence: player
/// counts strictly increase and `μ̄`, `δ̄`, `d̄` are nonincreasing (5% slack),
/// with the last value below half the first once `ν` has grown fourfold.
pub fn metrics_vanish_check(elements: &[AasElement]) -> Result<VanishReport> {
    if elements.len() < 3 {
        return Err(Error::MetricCheck {
            metric: "sequence",
            detail: format!("need at least 3 elements, got {}", elements.len()),
        });
    }
    let report = VanishReport {
        nus: elements.iter().map(|e| e.nu).collect(),
        players: elements.iter().map(|e| e.num_players()).collect(),
        mu_bar: elements.iter().map(|e| e.metrics.mu_bar).collect(),
        delta_bar: elements.iter().map(|e| e.metrics.delta_bar).collect(),
        d_bar: elements.iter().map(|e| e.metrics.d_bar).collect(),
    };
    if report.nus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::MetricCheck {
            metric: "nu",
            detail: format!("ν must increase, got {:?}", report.nus),
        });
    }
    if report.players.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::MetricCheck {
            metric: "players",
            detail: format!("player counts must increase, got {:?}", report.players),
        });
    }
    let ratio = *report.nus.last().unwrap() as f64 / report.nus[0] as f64;
    for (metric, values) in [
        ("mu_bar", &report.mu_bar),
        ("delta_bar", &report.delta_bar),
        ("d_bar", &report.d_bar),
    ] {
        if let Some(w) = values.windows(2).find(|w| w[1] > 1.05 * w[0] + 1e-15) {
            return Err(Error::MetricCheck {
                metric,
                detail: format!("increased from {} to {} in {values:?}", w[0], w[1]),
            });
        }
        let (first, last) = (values[0], *values.last().unwrap());
        if ratio >= 4.0 && first > 0.0 && last >= 0.5 * first {
            return Err(Error::MetricCheck {
                metric,
                detail: format!("only fell from {first} to {last} while ν grew {ratio}-fold"),
            });
        }
    }
    Ok(report)
}

/// Support-function estimate of `d_H(Σ_i X_i, ∫ X_θ dθ)` over `directions`
/// random unit directions, checked against `δ̄`.
pub fn minkowski_sum_distance_check(
    instance: &NonatomicInstance,
    element: &AasElement,
    seed: u64,
    directions: usize,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = random_directions(&mut rng, instance.dim(), directions);
    let estimate = support_hausdorff_estimate(
        &dirs,
        |d| {
            element
                .game
                .players()
                .iter()
                .map(|p| p.set.support(d))
                .sum::<Result<f64>>()
        },
        |d| instance.aggregate_support(d),
    )?;
    if estimate > element.metrics.delta_bar + 1e-6 {
        return Err(Error::MetricCheck {
            metric: "aggregate_set_distance",
            detail: format!(
                "support gap {estimate} exceeds δ̄ = {}",
                element.metrics.delta_bar
            ),
        });
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CostFunction, ParamFn, SetFamily, UtilityFamily};

    fn costs() -> Vec<CostFunction> {
        vec![CostFunction::affine(1.0, 0.0), CostFunction::affine(2.0, 1.0)]
    }

    fn simplex(demand: ParamFn) -> SetFamily {
        SetFamily::Simplex {
            demand,
            lower: None,
            upper: None,
        }
    }

    fn seg(start: f64, end: f64, demand: ParamFn, utility: UtilityFamily) -> Segment {
        Segment {
            start,
            end,
            set: simplex(demand),
            utility,
        }
    }

    fn constant_instance() -> NonatomicInstance {
        NonatomicInstance::new(
            costs(),
            vec![seg(0.0, 1.0, ParamFn::constant(0.3), UtilityFamily::None)],
            None,
        )
        .unwrap()
    }

    fn linear_demand() -> NonatomicInstance {
        let demand = ParamFn::Linear {
            intercept: 0.2,
            slope: 0.8,
        };
        NonatomicInstance::new(costs(), vec![seg(0.0, 1.0, demand, UtilityFamily::None)], None).unwrap()
    }

    #[test]
    fn uniform_cuts_include_discontinuity() {
        let inst = NonatomicInstance::new(
            costs(),
            vec![
                seg(0.0, 0.7, ParamFn::constant(1.0), UtilityFamily::None),
                seg(0.7, 1.0, ParamFn::constant(0.3), UtilityFamily::None),
            ],
            None,
        )
        .unwrap();
        let cuts = uniform_cut_points(&inst, 5);
        let expected = [0.0, 0.2, 0.4, 0.6, 0.7, 0.8, 1.0];
        assert_eq!(cuts.len(), expected.len());
        for (a, b) in cuts.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(build_uniform_aas(&inst, 5).unwrap().num_players(), 6);
    }

    #[test]
    fn constant_instance_has_zero_delta() {
        let e = build_uniform_aas(&constant_instance(), 7).unwrap();
        assert!(e.metrics.delta.iter().all(|d| *d < 1e-15));
        assert_eq!(e.metrics.d_bar, 0.0);
        let total: f64 = e.metrics.mu.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_nu_is_rejected() {
        assert!(build_uniform_aas(&constant_instance(), 0).is_err());
        assert!(build_meshgrid_aas(&constant_instance(), 0).is_err());
    }

    #[test]
    fn meshgrid_constant_falls_back_to_theta_split() {
        let e = build_meshgrid_aas(&constant_instance(), 4).unwrap();
        assert_eq!(e.num_players(), 4);
        for mu in &e.metrics.mu {
            assert!((mu - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn meshgrid_linear_demand_splits_at_preimage() {
        let e = build_meshgrid_aas(&linear_demand(), 2).unwrap();
        assert_eq!(e.num_players(), 2);
        let cells = e.partition();
        assert!((cells[0][0].1 - 0.5).abs() < 1e-9, "{cells:?}");
        assert!((e.metrics.mu[0] - 0.5).abs() < 1e-9);
        // ∫_0^0.5 (0.2 + 0.8θ) dθ = 0.2
        let total = e.game.players()[0].set.max_total().unwrap();
        assert!((total - 0.2).abs() < 1e-9);
    }

    #[test]
    fn meshgrid_two_parameters_keeps_at_most_four_classes() {
        let demand = ParamFn::Linear {
            intercept: 0.2,
            slope: 0.8,
        };
        let weight = ParamFn::Linear {
            intercept: 1.0,
            slope: -0.5,
        };
        let utility = UtilityFamily::QuadPref {
            weight,
            preferred: vec![ParamFn::constant(0.0), ParamFn::constant(0.5)],
        };
        let inst = NonatomicInstance::new(costs(), vec![seg(0.0, 1.0, demand, utility)], None).unwrap();
        let e = build_meshgrid_aas(&inst, 2).unwrap();
        assert!(e.num_players() <= 4 && e.num_players() >= 2);
        assert!(e.metrics.mu.iter().all(|m| *m > 0.0));
    }

    #[test]
    fn vanish_check_needs_three_elements() {
        let e = build_uniform_aas(&constant_instance(), 2).unwrap();
        assert!(metrics_vanish_check(std::slice::from_ref(&e)).is_err());
        let seq: Vec<_> = [2, 8, 32]
            .iter()
            .map(|&n| build_uniform_aas(&constant_instance(), n).unwrap())
            .collect();
        metrics_vanish_check(&seq).unwrap();
    }

    #[test]
    fn aggregate_set_gap_for_constant_instance() {
        let inst = constant_instance();
        let e = build_uniform_aas(&inst, 5).unwrap();
        let est = minkowski_sum_distance_check(&inst, &e, 7, 64).unwrap();
        assert!(est < 1e-9);
    }
}

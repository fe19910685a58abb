//! The nonatomic game, its atomic approximations, and strategy profiles.

use super::cost::CostFunction;
use super::param::{SetFamily, UtilityFamily};
use super::utility::Utility;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::sets::FeasibleSet;

/// θ-samples per segment used for radius and cap estimates.
const SAMPLES_PER_SEGMENT: usize = 257;

/// A piece `[start, end)` of the type space with continuous parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub set: SetFamily,
    pub utility: UtilityFamily,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// `count` evenly spaced types covering the closed segment.
    pub fn sample_thetas(&self, count: usize) -> Vec<f64> {
        let n = count.max(2);
        (0..n)
            .map(|k| self.start + (self.end - self.start) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Nonatomic parallel routing game on the type space `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonatomicInstance {
    costs: Vec<CostFunction>,
    segments: Vec<Segment>,
    radius: f64,
    cap: f64,
}

impl NonatomicInstance {
    /// Validates the segments and the sets they produce. When `radius` is
    /// `None` it is estimated as the largest sampled vertex norm.
    pub fn new(costs: Vec<CostFunction>, segments: Vec<Segment>, radius: Option<f64>) -> Result<Self> {
        let dim = costs.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("at least one link is required".into()));
        }
        if segments.is_empty() {
            return Err(Error::InvalidArgument("at least one segment is required".into()));
        }
        let mut expected_start = 0.0;
        for (k, seg) in segments.iter().enumerate() {
            if seg.start != expected_start || seg.end <= seg.start {
                return Err(Error::InvalidArgument(format!(
                    "segment {k} [{}, {}) does not continue the partition at {expected_start}",
                    seg.start, seg.end
                )));
            }
            expected_start = seg.end;
            seg.set.validate(dim)?;
            seg.utility.validate(dim)?;
        }
        if expected_start != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "segments end at {expected_start}, not 1"
            )));
        }

        let mut max_norm: f64 = 0.0;
        let mut max_total: f64 = 0.0;
        for seg in &segments {
            for theta in seg.sample_thetas(SAMPLES_PER_SEGMENT) {
                let set = seg.set.set_at(theta, dim)?;
                set.validate()?;
                seg.utility.utility_at(theta).validate(dim)?;
                max_norm = max_norm.max(set.max_norm()?);
                max_total = max_total.max(set.max_total()?);
            }
        }
        let radius = match radius {
            Some(r) => {
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
                }
                if max_norm > r * (1.0 + 1e-9) {
                    return Err(Error::InfeasibleSet(format!(
                        "a strategy set reaches norm {max_norm}, outside the declared radius {r}"
                    )));
                }
                r
            }
            None => max_norm.max(f64::MIN_POSITIVE),
        };
        // Sampling can miss the true supremum by a hair.
        let cap = max_total * (1.0 + 1e-6);
        let costs = costs.into_iter().map(|c| c.with_cap(cap)).collect::<Vec<_>>();
        for (t, c) in costs.iter().enumerate() {
            c.validate(t)?;
        }
        Ok(NonatomicInstance {
            costs,
            segments,
            radius,
            cap,
        })
    }

    pub fn dim(&self) -> usize {
        self.costs.len()
    }

    pub fn costs(&self) -> &[CostFunction] {
        &self.costs
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `M`: every strategy set lies in the ball of this radius.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Largest aggregate load on any link.
    pub fn aggregate_cap(&self) -> f64 {
        self.cap
    }

    /// Index of the segment containing `θ`; `θ = 1` belongs to the last one.
    pub fn segment_index(&self, theta: f64) -> usize {
        let k = self.segments.partition_point(|s| s.start <= theta);
        k.saturating_sub(1)
    }

    pub fn segment_at(&self, theta: f64) -> &Segment {
        &self.segments[self.segment_index(theta)]
    }

    pub fn set_at(&self, theta: f64) -> Result<FeasibleSet> {
        self.segment_at(theta).set.set_at(theta, self.dim())
    }

    pub fn utility_at(&self, theta: f64) -> Utility {
        self.segment_at(theta).utility.utility_at(theta)
    }

    /// Interior segment boundaries.
    pub fn discontinuities(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    pub fn has_utilities(&self) -> bool {
        self.segments
            .iter()
            .any(|s| !matches!(s.utility, UtilityFamily::None))
    }

    /// Support function of the aggregate set `∫ X_θ dθ` in direction `d`.
    pub fn aggregate_support(&self, d: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for seg in &self.segments {
            let mut failure = None;
            let value = adaptive_simpson(
                |theta| match seg.set.set_at(theta, self.dim()).and_then(|s| s.support(d)) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                seg.start,
                seg.end,
                1e-10,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            total += value;
        }
        Ok(total)
    }
}

/// One atomic player: the class of types it stands for and its game data.
#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    /// `μ_i`, the measure of the class.
    pub measure: f64,
    pub set: FeasibleSet,
    pub utility: Utility,
    /// Intervals of `[0, 1]` forming the class; empty for standalone games.
    pub cells: Vec<(f64, f64)>,
}

impl Player {
    pub fn new(measure: f64, set: FeasibleSet, utility: Utility) -> Self {
        Player {
            measure,
            set,
            utility,
            cells: Vec::new(),
        }
    }
}

/// Atomic splittable routing game.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicInstance {
    players: Vec<Player>,
    costs: Vec<CostFunction>,
    cap: f64,
}

impl AtomicInstance {
    /// Validates every player and caps the cost domains at the largest
    /// possible aggregate load.
    pub fn new(players: Vec<Player>, costs: Vec<CostFunction>) -> Result<Self> {
        let dim = costs.len();
        if players.is_empty() {
            return Err(Error::InvalidArgument("an atomic game needs players".into()));
        }
        let mut cap = 0.0;
        for p in &players {
            if p.set.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.set.dim(),
                });
            }
            if !(p.measure > 0.0 && p.measure.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "player measure must be positive, got {}",
                    p.measure
                )));
            }
            p.set.validate()?;
            p.utility.validate(dim)?;
            cap += p.set.max_total()?;
        }
        let costs: Vec<CostFunction> = costs.into_iter().map(|c| c.with_cap(cap)).collect();
        for (t, c) in costs.iter().enumerate() {
            c.validate(t)?;
        }
        Ok(AtomicInstance { players, costs, cap })
    }

    pub fn dim(&self) -> usize {
        self.costs.len()
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, i: usize) -> Result<&Player> {
        self.players.get(i).ok_or(Error::PlayerIndex {
            index: i,
            count: self.players.len(),
        })
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn costs(&self) -> &[CostFunction] {
        &self.costs
    }

    /// `M_agg`.
    pub fn aggregate_cap(&self) -> f64 {
        self.cap
    }
}

/// Loads of every atomic player, one row per player.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicProfile {
    pub loads: Vec<Vec<f64>>,
}

impl AtomicProfile {
    pub fn new(loads: Vec<Vec<f64>>) -> Self {
        AtomicProfile { loads }
    }

    pub fn aggregate(&self) -> Vec<f64> {
        let dim = self.loads.first().map_or(0, |r| r.len());
        let mut out = vec![0.0; dim];
        for row in &self.loads {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    /// Checks the profile against the game's shapes and sets.
    pub fn check_feasible(&self, game: &AtomicInstance, tol: f64) -> Result<()> {
        if self.loads.len() != game.num_players() {
            return Err(Error::Dimension {
                expected: game.num_players(),
                got: self.loads.len(),
            });
        }
        for (i, (row, p)) in self.loads.iter().zip(game.players()).enumerate() {
            if row.len() != game.dim() {
                return Err(Error::Dimension {
                    expected: game.dim(),
                    got: row.len(),
                });
            }
            if !p.set.contains(row, tol) {
                return Err(Error::InfeasibleSet(format!("player {i} load {row:?} is outside its set")));
            }
        }
        Ok(())
    }
}

/// One constant piece of a type-indexed profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCell {
    pub lo: f64,
    pub hi: f64,
    pub x: Vec<f64>,
}

/// Piecewise-constant map `θ ↦ x_θ` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseProfile {
    cells: Vec<ProfileCell>,
}

impl PiecewiseProfile {
    /// Cells are sorted; they must tile `[0, 1]` without gaps or overlaps.
    pub fn new(mut cells: Vec<ProfileCell>) -> Result<Self> {
        cells.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut at = 0.0;
        for c in &cells {
            if (c.lo - at).abs() > 1e-12 || c.hi <= c.lo {
                return Err(Error::InvalidArgument(format!(
                    "profile cell [{}, {}) does not continue the partition at {at}",
                    c.lo, c.hi
                )));
            }
            at = c.hi;
        }
        if (at - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("profile cells end at {at}, not 1")));
        }
        Ok(PiecewiseProfile { cells })
    }

    /// The same value for every type.
    pub fn constant(x: Vec<f64>) -> Self {
        PiecewiseProfile {
            cells: vec![ProfileCell { lo: 0.0, hi: 1.0, x }],
        }
    }

    pub fn cells(&self) -> &[ProfileCell] {
        &self.cells
    }

    pub fn dim(&self) -> usize {
        self.cells[0].x.len()
    }

    pub fn cell_index(&self, theta: f64) -> usize {
        self.cells.partition_point(|c| c.lo <= theta).saturating_sub(1)
    }

    pub fn value_at(&self, theta: f64) -> &[f64] {
        &self.cells[self.cell_index(theta)].x
    }

    /// `∫ x_θ dθ`.
    pub fn aggregate(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for c in &self.cells {
            for (o, v) in out.iter_mut().zip(&c.x) {
                *o += (c.hi - c.lo) * v;
            }
        }
        out
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.cells.iter().map(|c| 0.5 * (c.lo + c.hi)).collect()
    }
}

//! Strategy sets and the geometry on them: projections, vertex enumeration,
//! linear minimization, support functions and Hausdorff distances.

mod box_simplex;
mod nnls;
mod polytope;

pub use box_simplex::{separable_quadratic_knapsack, BoxSimplex};
pub use nnls::{least_distance, nnls};
pub use polytope::{Polytope, MAX_VERTEX_DIM};

use rand::Rng;

use crate::error::{Error, Result};
use crate::vecops::{dist, dot, norm};

/// A player's feasible strategy set.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    BoxSimplex(BoxSimplex),
    Polytope(Polytope),
}

impl From<BoxSimplex> for FeasibleSet {
    fn from(s: BoxSimplex) -> Self {
        FeasibleSet::BoxSimplex(s)
    }
}

impl From<Polytope> for FeasibleSet {
    fn from(p: Polytope) -> Self {
        FeasibleSet::Polytope(p)
    }
}

impl FeasibleSet {
    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::BoxSimplex(s) => s.dim(),
            FeasibleSet::Polytope(p) => p.dim(),
        }
    }

    /// Nonempty, convex and compact, with every point in the nonnegative orthant.
    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::BoxSimplex(s) => {
                s.validate()?;
                if s.lower.iter().any(|l| *l < 0.0) {
                    return Err(Error::InfeasibleSet("negative lower bound".into()));
                }
            }
            FeasibleSet::Polytope(p) => {
                let verts = p.vertices()?;
                if verts.iter().flatten().any(|v| *v < -1e-9) {
                    return Err(Error::InfeasibleSet(
                        "polytope leaves the nonnegative orthant".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> FeasibleSet {
        match self {
            FeasibleSet::BoxSimplex(s) => FeasibleSet::BoxSimplex(s.scaled(factor)),
            FeasibleSet::Polytope(p) => FeasibleSet::Polytope(p.scaled(factor)),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            FeasibleSet::BoxSimplex(s) => s.contains(x, tol),
            FeasibleSet::Polytope(p) => p.contains(x, tol),
        }
    }

    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeasibleSet::BoxSimplex(s) => s.project(point),
            FeasibleSet::Polytope(p) => p.project(point),
        }
    }

    /// Exact minimizer of `⟨g, z⟩` over the set.
    pub fn linear_minimizer(&self, g: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeasibleSet::BoxSimplex(s) => Ok(s.linear_minimizer(g)),
            FeasibleSet::Polytope(p) => p.linear_minimizer(g),
        }
    }

    /// Support function `max_{z ∈ S} ⟨d, z⟩`.
    pub fn support(&self, d: &[f64]) -> Result<f64> {
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let z = self.linear_minimizer(&neg)?;
        Ok(dot(d, &z))
    }

    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            FeasibleSet::BoxSimplex(s) => Ok(s.vertices()),
            FeasibleSet::Polytope(p) => Ok(p.vertices()?.to_vec()),
        }
    }

    /// Largest Euclidean norm over the set (attained at a vertex).
    pub fn max_norm(&self) -> Result<f64> {
        Ok(self
            .vertices()?
            .iter()
            .map(|v| norm(v))
            .fold(0.0, f64::max))
    }

    /// Largest coordinate sum over the set.
    pub fn max_total(&self) -> Result<f64> {
        let ones = vec![1.0; self.dim()];
        self.support(&ones)
    }

    /// Largest value of coordinate `t` over the set.
    pub fn max_coordinate(&self, t: usize) -> Result<f64> {
        let mut e = vec![0.0; self.dim()];
        e[t] = 1.0;
        self.support(&e)
    }

    /// Distance from `point` to the set.
    pub fn distance(&self, point: &[f64]) -> Result<f64> {
        Ok(dist(point, &self.project(point)?))
    }

    /// Uniform-ish random point: a random convex combination of vertices.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let verts = self.vertices()?;
        let weights: Vec<f64> = (0..verts.len())
            .map(|_| -rng.gen::<f64>().max(1e-300).ln())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut x = vec![0.0; self.dim()];
        for (w, v) in weights.iter().zip(verts.iter()) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += w / total * vi;
            }
        }
        // Rounding can leave the combination marginally outside.
        self.project(&x)
    }

    /// The same set written as `{x : A x ≤ b}`.
    pub fn to_polytope(&self) -> Result<Polytope> {
        match self {
            FeasibleSet::Polytope(p) => Ok(p.clone()),
            FeasibleSet::BoxSimplex(s) => {
                let n = s.dim();
                let mut rows = vec![vec![1.0; n], vec![-1.0; n]];
                let mut rhs = vec![s.total, -s.total];
                for t in 0..n {
                    let mut up = vec![0.0; n];
                    up[t] = 1.0;
                    let mut down = vec![0.0; n];
                    down[t] = -1.0;
                    rows.push(up);
                    rhs.push(s.upper[t]);
                    rows.push(down);
                    rhs.push(-s.lower[t]);
                }
                Polytope::new_unchecked(rows, rhs)
            }
        }
    }
}

/// Euclidean projection onto a bounded simplex.
pub fn project_box_simplex(point: &[f64], total: f64, lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    BoxSimplex::new(total, lower.to_vec(), upper.to_vec())?.project(point)
}

/// Hausdorff distance between two polytopes, exact.
///
/// `x ↦ d(x, Q)` is convex, so its maximum over `P` is attained at a vertex
/// of `P`; symmetrically for `Q`.
pub fn hausdorff_distance(p: &FeasibleSet, q: &FeasibleSet) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let mut worst: f64 = 0.0;
    for v in p.vertices()? {
        worst = worst.max(q.distance(&v)?);
    }
    for w in q.vertices()? {
        worst = worst.max(p.distance(&w)?);
    }
    Ok(worst)
}

/// `n` unit directions drawn uniformly on the sphere in `R^dim`.
pub fn random_directions<R: Rng>(rng: &mut R, dim: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            out.push(v.iter().map(|x| x / r).collect());
        }
    }
    out
}

/// Lower estimate of the Hausdorff distance between two convex compact sets
/// from their support functions: `max_d |h_P(d) − h_Q(d)|` over unit `d`.
pub fn support_hausdorff_estimate<P, Q>(directions: &[Vec<f64>], mut support_p: P, mut support_q: Q) -> Result<f64>
where
    P: FnMut(&[f64]) -> Result<f64>,
    Q: FnMut(&[f64]) -> Result<f64>,
{
    let mut worst: f64 = 0.0;
    for d in directions {
        worst = worst.max((support_p(d)? - support_q(d)?).abs());
    }
    Ok(worst)
}

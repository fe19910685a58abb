//! Bounded polyhedra `{x : A x ≤ b}` in low dimension.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::nnls::{least_distance, nnls};
use crate::error::{Error, Result};
use crate::vecops::{all_finite, dot};

/// Vertex enumeration is combinatorial in the dimension; above this we refuse.
pub const MAX_VERTEX_DIM: usize = 6;

const VERTEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Polytope {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    dim: usize,
    vertices: OnceLock<std::result::Result<Vec<Vec<f64>>, Error>>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b
    }
}

impl Polytope {
    /// Builds the polytope and checks that it is bounded and nonempty.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let p = Self::new_unchecked(a, b)?;
        p.vertices()?;
        Ok(p)
    }

    /// Shape checks only; boundedness is verified on first vertex query.
    pub fn new_unchecked(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                got: b.len(),
            });
        }
        let dim = a.first().map_or(0, |r| r.len());
        if dim == 0 {
            return Err(Error::InvalidArgument("polytope needs at least one row".into()));
        }
        for row in &a {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: row.len(),
                });
            }
            if !all_finite(row) {
                return Err(Error::NonFinite("polytope matrix".into()));
            }
        }
        if !all_finite(&b) {
            return Err(Error::NonFinite("polytope right-hand side".into()));
        }
        Ok(Polytope {
            a,
            b,
            dim,
            vertices: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn with_rhs(&self, b: Vec<f64>) -> Result<Polytope> {
        Polytope::new_unchecked(self.a.clone(), b)
    }

    pub fn scaled(&self, factor: f64) -> Polytope {
        Polytope {
            a: self.a.clone(),
            b: self.b.iter().map(|v| v * factor).collect(),
            dim: self.dim,
            vertices: OnceLock::new(),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim
            && self
                .a
                .iter()
                .zip(&self.b)
                .all(|(row, bk)| dot(row, x) <= bk + tol)
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.a.len(), self.dim, |i, j| self.a[i][j])
    }

    /// Vertices (basic feasible solutions), computed once and cached.
    pub fn vertices(&self) -> Result<&[Vec<f64>]> {
        match self.vertices.get_or_init(|| self.enumerate_vertices()) {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }

    fn enumerate_vertices(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.dim;
        if n > MAX_VERTEX_DIM {
            return Err(Error::InvalidArgument(format!(
                "vertex enumeration limited to dimension {MAX_VERTEX_DIM}, got {n}"
            )));
        }
        if !self.is_bounded()? {
            return Err(Error::UnboundedPolytope);
        }
        let m = self.a.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut subset: Vec<usize> = (0..n).collect();
        if m < n {
            return Err(Error::UnboundedPolytope);
        }
        loop {
            if let Some(v) = self.basic_solution(&subset) {
                let slack = VERTEX_TOL;
                let feasible = self
                    .a
                    .iter()
                    .zip(&self.b)
                    .all(|(row, bk)| dot(row, &v) <= bk + slack * (1.0 + bk.abs()));
                if feasible
                    && !out
                        .iter()
                        .any(|w| w.iter().zip(&v).all(|(x, y)| (x - y).abs() <= VERTEX_TOL))
                {
                    out.push(v);
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        Ok(out)
    }

    fn basic_solution(&self, rows: &[usize]) -> Option<Vec<f64>> {
        let n = self.dim;
        let sub = DMatrix::from_fn(n, n, |i, j| self.a[rows[i]][j]);
        let svd = sub.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smax <= 0.0 || smin <= 1e-12 * smax {
            return None;
        }
        let rhs = DVector::from_fn(n, |i, _| self.b[rows[i]]);
        let sol = sub.lu().solve(&rhs)?;
        let v: Vec<f64> = sol.iter().copied().collect();
        all_finite(&v).then_some(v)
    }

    /// `{d : A d ≤ 0} = {0}` iff every signed unit vector lies in the cone
    /// spanned by the rows of `A`.
    fn is_bounded(&self) -> Result<bool> {
        let at = self.matrix().transpose();
        for t in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut e = DVector::<f64>::zeros(self.dim);
                e[t] = sign;
                let lambda = nnls(&at, &e)?;
                if (&at * lambda - e).norm() > 1e-9 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Euclidean projection, via the least-distance dual and an exact
    /// equality-constrained polish on the detected active set.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: point.len(),
            });
        }
        if !all_finite(point) {
            return Err(Error::NonFinite("projection point".into()));
        }
        if self.contains(point, 1e-13) {
            return Ok(point.to_vec());
        }
        let a = self.matrix();
        let p = DVector::from_column_slice(point);
        let g = -&a;
        let h = &a * &p - DVector::from_column_slice(&self.b);
        let Some(step) = least_distance(&g, &h)? else {
            return Err(Error::EmptyPolytope);
        };
        let mut z: Vec<f64> = (&p + step).iter().copied().collect();
        if let Some(polished) = self.polish(point, &z) {
            z = polished;
        }
        let violation = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(row, bk)| dot(row, &z) - bk)
            .fold(0.0f64, f64::max);
        if violation > 1e-9 {
            return Err(Error::Convergence {
                what: "polytope projection",
                iterations: 1,
                residual: violation,
                last: z,
            });
        }
        Ok(z)
    }

    fn polish(&self, point: &[f64], z: &[f64]) -> Option<Vec<f64>> {
        let active: Vec<usize> = (0..self.a.len())
            .filter(|&k| dot(&self.a[k], z) >= self.b[k] - 1e-9 * (1.0 + self.b[k].abs()))
            .collect();
        if active.is_empty() {
            return None;
        }
        let aj = DMatrix::from_fn(active.len(), self.dim, |i, j| self.a[active[i]][j]);
        let p = DVector::from_column_slice(point);
        let rhs = &aj * &p - DVector::from_fn(active.len(), |i, _| self.b[active[i]]);
        let gram = &aj * aj.transpose();
        let svd = gram.svd(true, true);
        let eps = 1e-12 * svd.singular_values.max().max(1e-300);
        let lambda = svd.solve(&rhs, eps).ok()?;
        if lambda.iter().any(|l| *l < -1e-10) {
            return None;
        }
        let y: Vec<f64> = (p - aj.transpose() * lambda).iter().copied().collect();
        self.contains(&y, 1e-12).then_some(y)
    }

    /// Minimizer of `⟨g, z⟩`, taken over the vertex list.
    pub fn linear_minimizer(&self, g: &[f64]) -> Result<Vec<f64>> {
        let verts = self.vertices()?;
        let best = verts
            .iter()
            .min_by(|u, v| dot(g, u).total_cmp(&dot(g, v)))
            .ok_or(Error::EmptyPolytope)?;
        Ok(best.clone())
    }
}

/// Advances `c` to the next `k`-combination of `0..m` in lexicographic order.
fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

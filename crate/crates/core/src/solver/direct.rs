use faer::linalg::solvers::{Solve, SolveCore};
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};

use crate::assembly::SparseSystem;
use crate::error::{Error, Result};

/// Sparse LU with partial pivoting of an assembled system.
pub struct Factorization {
    lu: Lu<usize, f64>,
    dim: usize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("dim", &self.dim)
            .finish()
    }
}

impl Factorization {
    pub fn new(system: &SparseSystem) -> Result<Self> {
        let n = system.dim();
        let triplets: Vec<_> = system
            .triplets()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let a =
            SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets).map_err(|e| {
                Error::Solve {
                    reason: format!("matrix construction: {e:?}"),
                    residual: f64::INFINITY,
                }
            })?;
        let lu = a.sp_lu().map_err(|e| Error::Solve {
            reason: format!("sparse LU: {e:?}"),
            residual: f64::INFINITY,
        })?;
        Ok(Factorization { lu, dim: n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `A^{-1} b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.dim, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }

    /// `A^{-T} b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.dim, 1, |i, _| b[i]);
        self.lu
            .solve_transpose_in_place_with_conj(Conj::No, x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{Row, RowKind};
    use crate::geometry::GridSpec;

    #[test]
    fn solves_and_transposes() {
        let g = GridSpec::new(8).unwrap();
        let mut rows: Vec<Row> = (0..g.len())
            .map(|k| Row {
                entries: vec![(k, 1.0 + k as f64)],
                rhs: 0.0,
                kind: RowKind::InactiveIdentity,
            })
            .collect();
        rows[0].entries.push((1, 3.0));
        let s = SparseSystem::from_rows(g, rows).unwrap();
        let f = Factorization::new(&s).unwrap();
        let x: Vec<f64> = (0..g.len()).map(|k| (k as f64).sin()).collect();
        let b = s.apply(&x);
        let y = f.solve(&b);
        let bt = s.apply_transpose(&x);
        let yt = f.solve_transpose(&bt);
        for k in 0..g.len() {
            assert!((y[k] - x[k]).abs() < 1e-14);
            assert!((yt[k] - x[k]).abs() < 1e-14);
        }
    }
}

//! Linear solves of the assembled system and conditioning estimates.
//!
//! The default path is a sparse LU with partial pivoting followed by a few
//! steps of iterative refinement. GMRES with an ILU(0) preconditioner is
//! available for grids where a direct factorization is too expensive.

mod condest;
mod direct;
mod krylov;

pub use condest::estimate_inverse_norm;
pub use direct::Factorization;
pub use krylov::{gmres, GmresOptions, Ilu0};

use crate::assembly::{RowKind, SparseSystem};
use crate::error::{Error, Result};
use crate::geometry::GridField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    Gmres,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub kind: SolverKind,
    /// Target for [`SparseSystem::relative_residual`].
    pub tol: f64,
    pub max_refinement: usize,
    pub gmres: GmresOptions,
    /// Also estimate `κ₁(A)` (direct solver only, reuses the factorization).
    pub condition: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            kind: SolverKind::Direct,
            tol: 1e-12,
            max_refinement: 8,
            gmres: GmresOptions::default(),
            condition: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridField,
    pub residual_norm: f64,
    pub kind: SolverKind,
    /// Refinement steps (direct) or Krylov iterations (GMRES).
    pub iterations: usize,
    pub condition_estimate: Option<f64>,
}

fn zero_inactive(system: &SparseSystem, x: &mut [f64]) {
    for (v, k) in x.iter_mut().zip(system.row_kinds()) {
        if *k == RowKind::InactiveIdentity {
            *v = 0.0;
        }
    }
}

fn finish(
    system: &SparseSystem,
    mut x: Vec<f64>,
    kind: SolverKind,
    iterations: usize,
    condition_estimate: Option<f64>,
) -> Result<SolveReport> {
    zero_inactive(system, &mut x);
    let residual_norm = system.relative_residual(&x);
    Ok(SolveReport {
        solution: GridField::new(*system.spec(), x).map_err(|_| Error::Solve {
            reason: "non-finite solution".into(),
            residual: f64::INFINITY,
        })?,
        residual_norm,
        kind,
        iterations,
        condition_estimate,
    })
}

fn solve_direct(system: &SparseSystem, opts: &SolveOptions) -> Result<SolveReport> {
    let fact = Factorization::new(system)?;
    let b = system.rhs();
    let mut x = fact.solve(b);
    let mut res = system.relative_residual(&x);
    let mut steps = 0;
    while !(res <= opts.tol) && steps < opts.max_refinement {
        let r = system.residual(&x);
        let d = fact.solve(&r);
        let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
        let cres = system.relative_residual(&cand);
        steps += 1;
        if !(cres < res) {
            break;
        }
        x = cand;
        res = cres;
    }
    if !(res <= opts.tol) {
        return Err(Error::Solve {
            reason: format!("direct solve stalled after {steps} refinement steps"),
            residual: res,
        });
    }
    let kappa = opts
        .condition
        .then(|| condest::condition_estimate(system, &fact));
    finish(system, x, SolverKind::Direct, steps, kappa)
}

fn solve_gmres(system: &SparseSystem, opts: &SolveOptions) -> Result<SolveReport> {
    let pre = Ilu0::new(system)?;
    let (x, iters) = gmres(
        system,
        system.rhs(),
        &pre,
        &opts.gmres,
        opts.tol * 1e-2,
        |x| {
            let r = system.relative_residual(x);
            (r <= opts.tol, r)
        },
    )?;
    finish(system, x, SolverKind::Gmres, iters, None)
}

/// Solves `A u = b` to a relative residual of `opts.tol`; inactive unknowns
/// are returned as exactly zero.
pub fn solve(system: &SparseSystem, opts: &SolveOptions) -> Result<SolveReport> {
    match opts.kind {
        SolverKind::Direct => solve_direct(system, opts),
        SolverKind::Gmres => solve_gmres(system, opts),
    }
}

/// Estimate of `κ₁(A) = ||A||₁ ||A⁻¹||₁`. A lower bound in exact arithmetic,
/// typically within a small factor; `+inf` if the factorization fails.
pub fn condition_estimate(system: &SparseSystem) -> f64 {
    match Factorization::new(system) {
        Ok(f) => condest::condition_estimate(system, &f),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Row;
    use crate::geometry::GridSpec;

    fn diagonal(values: &[(usize, f64)]) -> SparseSystem {
        let g = GridSpec::new(8).unwrap();
        let rows = (0..g.len())
            .map(|k| {
                let d = values.iter().find(|e| e.0 == k).map_or(1.0, |e| e.1);
                Row {
                    entries: vec![(k, d)],
                    rhs: k as f64,
                    kind: RowKind::InteriorStar,
                }
            })
            .collect();
        SparseSystem::from_rows(g, rows).unwrap()
    }

    #[test]
    fn identity_system() {
        let s = diagonal(&[]);
        let r = solve(&s, &SolveOptions::default()).unwrap();
        assert_eq!(r.solution.values(), s.rhs());
        assert!((condition_estimate(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embedded_diagonal_condition() {
        let s = diagonal(&[(3, 10.0)]);
        assert!((condition_estimate(&s) - 10.0).abs() < 1e-12);
        let scaled = s.scaled(7.5);
        assert!((condition_estimate(&scaled) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn singular_reports_infinity() {
        let g = GridSpec::new(8).unwrap();
        let rows = (0..g.len())
            .map(|k| Row {
                entries: vec![(if k == 3 { 4 } else { k }, 1.0)],
                rhs: 0.0,
                kind: RowKind::InteriorStar,
            })
            .collect();
        let s = SparseSystem::from_rows(g, rows).unwrap();
        assert_eq!(condition_estimate(&s), f64::INFINITY);
        assert!(matches!(
            solve(&s, &SolveOptions::default()),
            Err(Error::Solve { .. })
        ));
    }

    #[test]
    fn gmres_matches_direct() {
        let g = GridSpec::new(8).unwrap();
        let rows = (0..g.len())
            .map(|k| {
                let mut entries = vec![(k, 4.0)];
                if k > 0 {
                    entries.push((k - 1, -1.0));
                }
                if k + 3 < g.len() {
                    entries.push((k + 3, -1.5));
                }
                Row {
                    entries,
                    rhs: (k as f64).cos(),
                    kind: RowKind::InteriorStar,
                }
            })
            .collect();
        let s = SparseSystem::from_rows(g, rows).unwrap();
        let d = solve(&s, &SolveOptions::default()).unwrap();
        let opts = SolveOptions {
            kind: SolverKind::Gmres,
            ..Default::default()
        };
        let k = solve(&s, &opts).unwrap();
        assert!(k.residual_norm <= 1e-12);
        for (a, b) in d.solution.values().iter().zip(k.solution.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

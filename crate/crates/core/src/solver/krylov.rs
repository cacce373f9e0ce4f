//! Restarted GMRES, right-preconditioned with an ILU(0) factorization.

use crate::assembly::SparseSystem;
use crate::error::{Error, Result};

/// Incomplete LU with the sparsity pattern of `A` (unit lower factor).
#[derive(Debug, Clone)]
pub struct Ilu0 {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &SparseSystem) -> Result<Self> {
        let n = a.dim();
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(a.nnz());
        let mut vals = Vec::with_capacity(a.nnz());
        for k in 0..n {
            let (c, v) = a.row(k);
            cols.extend_from_slice(c);
            vals.extend_from_slice(v);
            row_ptr.push(cols.len());
        }
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            if let Some(p) = (row_ptr[i]..row_ptr[i + 1]).find(|&p| cols[p] == i) {
                *d = p;
            } else {
                return Err(Error::Solve {
                    reason: format!("ILU(0): structurally zero pivot in row {i}"),
                    residual: f64::INFINITY,
                });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            for p in lo..hi {
                pos[cols[p]] = p;
            }
            for p in lo..hi {
                let k = cols[p];
                if k >= i {
                    break;
                }
                let pivot = vals[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::Solve {
                        reason: format!("ILU(0): zero pivot in row {k}"),
                        residual: f64::INFINITY,
                    });
                }
                vals[p] /= pivot;
                let lik = vals[p];
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let t = pos[cols[q]];
                    if t != usize::MAX {
                        vals[t] -= lik * vals[q];
                    }
                }
            }
            for p in lo..hi {
                pos[cols[p]] = usize::MAX;
            }
            if vals[diag[i]] == 0.0 {
                return Err(Error::Solve {
                    reason: format!("ILU(0): zero pivot in row {i}"),
                    residual: f64::INFINITY,
                });
            }
        }
        Ok(Ilu0 {
            row_ptr,
            cols,
            vals,
            diag,
        })
    }

    /// `(LU)^{-1} r`.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut z = r.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s / self.vals[self.diag[i]];
        }
        z
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            restart: 60,
            max_iter: 3000,
        }
    }
}

/// Returns `(x, iterations)` once `accept(x)` holds, checked at every restart
/// and whenever the Arnoldi residual estimate drops below `inner_tol ||b||`.
pub fn gmres(
    a: &SparseSystem,
    b: &[f64],
    pre: &Ilu0,
    opts: &GmresOptions,
    inner_tol: f64,
    accept: impl Fn(&[f64]) -> (bool, f64),
) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let m = opts.restart.max(1);
    let mut x = vec![0.0; n];
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut iters = 0;
    let mut best = f64::INFINITY;

    while iters < opts.max_iter {
        let r = a.residual_against(b, &x);
        let beta = norm2(&r);
        let (ok, rel) = accept(&x);
        best = best.min(rel);
        if ok {
            return Ok((x, iters));
        }
        if beta == 0.0 {
            break;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            if iters >= opts.max_iter {
                break;
            }
            iters += 1;
            let zk = pre.apply(&v[k]);
            let mut w = a.apply(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                hess[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let hn = norm2(&w);
            hess[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let d = hess[k][k].hypot(hess[k + 1][k]);
            if d == 0.0 {
                break;
            }
            cs[k] = hess[k][k] / d;
            sn[k] = hess[k + 1][k] / d;
            hess[k][k] = d;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= inner_tol * bnorm || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.iter_mut().zip(zi).for_each(|(xj, zj)| *xj += yi * zj);
        }
        if k_used == 0 {
            break;
        }
    }
    let (ok, rel) = accept(&x);
    if ok {
        return Ok((x, iters));
    }
    Err(Error::Solve {
        reason: format!("GMRES did not converge in {iters} iterations"),
        residual: best.min(rel),
    })
}

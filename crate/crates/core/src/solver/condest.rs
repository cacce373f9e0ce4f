//! 1-norm condition estimate through repeated solves with `A` and `Aᵀ`
//! (Hager's method with Higham's refinements, as in LAPACK's `xLACN2`).

use super::direct::Factorization;
use crate::assembly::SparseSystem;

const MAX_SWEEPS: usize = 5;

fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Lower-bound estimate of `||A^{-1}||_1` given the inverse and its transpose.
pub fn estimate_inverse_norm(
    n: usize,
    solve: impl Fn(&[f64]) -> Vec<f64>,
    solve_t: impl Fn(&[f64]) -> Vec<f64>,
) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut y = solve(&x);
    let mut est = norm1(&y);
    let mut signs: Vec<f64> = y.iter().map(|&v| sign(v)).collect();
    let mut last_j = usize::MAX;

    for _ in 0..MAX_SWEEPS {
        let z = solve_t(&signs);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, v)| {
                if v.abs() > b.1 {
                    (i, v.abs())
                } else {
                    b
                }
            });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if j == last_j || zmax <= ztx {
            break;
        }
        last_j = j;
        x.iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
        y = solve(&x);
        let new_est = norm1(&y);
        let new_signs: Vec<f64> = y.iter().map(|&v| sign(v)).collect();
        if new_est <= est || new_signs == signs {
            est = est.max(new_est);
            break;
        }
        est = new_est;
        signs = new_signs;
    }

    // Higham's alternating-sign test vector guards against adversarial cases.
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        })
        .collect();
    let w = solve(&alt);
    let alt_est = 2.0 * norm1(&w) / (3.0 * n as f64);
    est.max(alt_est)
}

/// `||A||_1 · est(||A^{-1}||_1)`; `+inf` when the inverse is not finite.
pub fn condition_estimate(system: &SparseSystem, fact: &Factorization) -> f64 {
    let inv = estimate_inverse_norm(system.dim(), |b| fact.solve(b), |b| fact.solve_transpose(b));
    if !inv.is_finite() {
        return f64::INFINITY;
    }
    system.norm_one() * inv
}

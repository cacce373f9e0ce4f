//! Independent transcription of the reference assembly pseudocode.
//!
//! The transcription uses `k = i + j (N + 1)` for the linear index. Boundary
//! points and quadrant signs come from the library (the pseudocode delegates
//! them to a separate procedure); everything else is recomputed here from
//! first principles: Lagrange weights, stencil indices, row coefficients.

use std::collections::BTreeMap;

use ghost_elliptic::{
    assemble, AssemblyOptions, BcKind, BoundaryOptions, DomainSpec, ExactSolution, LevelSetSource,
    Manufactured, Method, NodeClass, Polynomial, ProblemData, SourceMode,
};

pub const N: usize = 20;

fn lagrange(t: f64, p: usize) -> f64 {
    (0..5)
        .filter(|&q| q != p)
        .map(|q| (t - q as f64) / (p as f64 - q as f64))
        .product()
}

fn lagrange_derivative(t: f64, p: usize) -> f64 {
    (0..5)
        .filter(|&r| r != p)
        .map(|r| {
            let rest: f64 = (0..5)
                .filter(|&q| q != p && q != r)
                .map(|q| (t - q as f64) / (p as f64 - q as f64))
                .product();
            rest / (p as f64 - r as f64)
        })
        .sum()
}

pub struct Transcribed {
    pub a: BTreeMap<(usize, usize), f64>,
    pub b: Vec<f64>,
}

pub fn transcribe(method: Method, data: &dyn ProblemData) -> Transcribed {
    let domain = DomainSpec::circle();
    let grid = ghost_elliptic::GridSpec::new(N).unwrap();
    let phi = ghost_elliptic::sample_levelset(&domain, grid).unwrap();
    let reference = assemble(
        method,
        &phi,
        data,
        &AssemblyOptions {
            source_mode: SourceMode::Analytic,
            ..Default::default()
        },
    )
    .unwrap();
    let nx = N;
    let row = nx + 1;
    let h = 2.0 / N as f64;
    let x = |i: usize| -1.0 + i as f64 * h;
    let dim = row * row;

    // identity matrix and zero rhs
    let mut rows: Vec<BTreeMap<usize, f64>> =
        (0..dim).map(|k| BTreeMap::from([(k, 1.0)])).collect();
    let mut b = vec![0.0; dim];

    for j in 0..=N {
        for i in 0..=N {
            if phi.at((i, j)) >= 0.0 {
                continue;
            }
            let k = i + j * row;
            let f = |i: usize, j: usize| data.source(x(i), x(j));
            let mut r = BTreeMap::new();
            match method {
                Method::M1 | Method::M2 => {
                    let s = 12.0 * h * h;
                    let cols = [
                        k,
                        k - 1,
                        k + 1,
                        k - row,
                        k + row,
                        k - 2,
                        k + 2,
                        k - 2 * row,
                        k + 2 * row,
                    ];
                    let w = [60.0, -16.0, -16.0, -16.0, -16.0, 1.0, 1.0, 1.0, 1.0];
                    for (c, v) in cols.iter().zip(w) {
                        r.insert(*c, v / s);
                    }
                    b[k] = f(i, j);
                }
                Method::M3 => {
                    let s = 6.0 * h * h;
                    let cols = [
                        k,
                        k - 1,
                        k + 1,
                        k - row,
                        k + row,
                        k - 1 - row,
                        k - 1 + row,
                        k + 1 - row,
                        k + 1 + row,
                    ];
                    let w = [20.0, -4.0, -4.0, -4.0, -4.0, -1.0, -1.0, -1.0, -1.0];
                    for (c, v) in cols.iter().zip(w) {
                        r.insert(*c, v / s);
                    }
                    b[k] = (8.0 * f(i, j) + f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1))
                        / 12.0;
                }
            }
            rows[k] = r;
        }
    }

    for rec in &reference.records {
        let (l, m) = rec.node;
        let (xb, yb) = rec.boundary_point;
        let (sx, sy) = rec.stencil.dirs();
        if 0 < l && l < N && 0 < m && m < N {
            let cx = phi.at((l - 1, m)) - phi.at((l + 1, m));
            let cy = phi.at((l, m - 1)) - phi.at((l, m + 1));
            assert_eq!(sx, if cx < 0.0 { -1.0 } else { 1.0 }, "{:?}", rec.node);
            assert_eq!(sy, if cy < 0.0 { -1.0 } else { 1.0 }, "{:?}", rec.node);
        }
        // second-layer ghosts of the doubled-step method
        let (mut rx, mut ry) = if method == Method::M2 && rec.class == NodeClass::GhostStar2 {
            (2usize, 2usize)
        } else {
            (1, 1)
        };
        // a doubled step that would leave the box falls back to one
        if !(0.0..=N as f64).contains(&(l as f64 + sx * 4.0 * rx as f64)) {
            rx = 1;
        }
        if !(0.0..=N as f64).contains(&(m as f64 + sy * 4.0 * ry as f64)) {
            ry = 1;
        }
        let tx = sx * (xb - x(l)) / (rx as f64 * h);
        let ty = sy * (yb - x(m)) / (ry as f64 * h);
        let k = l + m * row;
        let mut stencil = [0usize; 25];
        for ll in 1..=5 {
            for mm in 1..=5 {
                let off = sx * (rx * (ll - 1)) as f64 + sy * (ry * (mm - 1)) as f64 * row as f64;
                stencil[ll + 5 * (mm - 1) - 1] = (k as f64 + off) as usize;
            }
        }
        let wx: Vec<f64> = (0..5).map(|p| lagrange(tx, p)).collect();
        let wy: Vec<f64> = (0..5).map(|p| lagrange(ty, p)).collect();
        let mut coeffs = [0.0; 25];
        match rec.bc {
            BcKind::Dirichlet => {
                b[k] = data.dirichlet(xb, yb);
                for q in 0..5 {
                    for p in 0..5 {
                        coeffs[p + 5 * q] = wx[p] * wy[q];
                    }
                }
            }
            BcKind::Neumann => {
                let wdx: Vec<f64> = (0..5)
                    .map(|p| lagrange_derivative(tx, p) / rx as f64)
                    .collect();
                let wdy: Vec<f64> = (0..5)
                    .map(|p| lagrange_derivative(ty, p) / ry as f64)
                    .collect();
                let mut cdx = [0.0; 25];
                let mut cdy = [0.0; 25];
                for q in 0..5 {
                    for p in 0..5 {
                        cdx[p + 5 * q] = sx * wdx[p] * wy[q];
                        cdy[p + 5 * q] = sy * wx[p] * wdy[q];
                    }
                }
                let phis: Vec<f64> = stencil.iter().map(|&s| phi.values()[s]).collect();
                let mut n1: f64 = phis.iter().zip(&cdx).map(|(a, c)| a * c).sum();
                let mut n2: f64 = phis.iter().zip(&cdy).map(|(a, c)| a * c).sum();
                let norm = (n1 * n1 + n2 * n2).sqrt();
                n1 /= norm;
                n2 /= norm;
                b[k] = data.neumann(xb, yb, (n1, n2));
                for t in 0..25 {
                    // derivative weights carry the missing 1/h
                    coeffs[t] = (n1 * cdx[t] + n2 * cdy[t]) / h;
                }
            }
        }
        let mut r = BTreeMap::new();
        for (s, c) in stencil.iter().zip(coeffs) {
            r.insert(*s, c);
        }
        rows[k] = r;
    }

    let mut a = BTreeMap::new();
    for (k, r) in rows.into_iter().enumerate() {
        for (c, v) in r {
            if v != 0.0 {
                a.insert((k, c), v);
            }
        }
    }
    Transcribed { a, b }
}

/// Checks `assemble` against the transcription on the circle at `N`.
pub fn compare(method: Method) -> Result<(), String> {
    let domain = DomainSpec::circle();
    let data = Manufactured {
        solution: &ghost_elliptic::SinProduct,
        levelset: domain.levelset(),
    };
    let t = transcribe(method, &data);
    let grid = ghost_elliptic::GridSpec::new(N).unwrap();
    let phi = ghost_elliptic::sample_levelset(&DomainSpec::circle(), grid).unwrap();
    let got = assemble(
        method,
        &phi,
        &data,
        &AssemblyOptions {
            source_mode: SourceMode::Analytic,
            ..Default::default()
        },
    )
    .unwrap();
    let ours: BTreeMap<(usize, usize), f64> =
        got.system.triplets().map(|(r, c, v)| ((r, c), v)).collect();
    if ours.len() != t.a.len() {
        return Err(format!(
            "{method}: {} nonzeros vs {} transcribed",
            ours.len(),
            t.a.len()
        ));
    }
    let row_scale: Vec<f64> = (0..got.system.dim())
        .map(|k| {
            got.system
                .row(k)
                .1
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .collect();
    for ((r, c), v) in &t.a {
        let w = ours
            .get(&(*r, *c))
            .ok_or_else(|| format!("{method}: missing ({r},{c})"))?;
        if (v - w).abs() > 1e-12 * row_scale[*r] {
            return Err(format!("{method}: ({r},{c}) {v} vs {w}"));
        }
    }
    for (k, (x, y)) in t.b.iter().zip(got.system.rhs()).enumerate() {
        if (x - y).abs() > 1e-12 * x.abs().max(1.0) {
            return Err(format!("{method}: rhs {k} {x} vs {y}"));
        }
    }
    Ok(())
}

/// Neumann data from the discrete normal, so every row is exact on quadratics.
struct DiscreteNormal<'a>(&'a Polynomial);

impl ProblemData for DiscreteNormal<'_> {
    fn source(&self, x: f64, y: f64) -> f64 {
        self.0.source(x, y)
    }
    fn dirichlet(&self, x: f64, y: f64) -> f64 {
        self.0.value(x, y)
    }
    fn neumann(&self, x: f64, y: f64, n: (f64, f64)) -> f64 {
        let (gx, gy) = self.0.gradient(x, y);
        gx * n.0 + gy * n.1
    }
}

/// Largest `|A u - b| / |b|_inf` over all methods and source modes for a
/// quadratic `u` sampled on the active nodes of the circle at `N`.
pub fn quadratic_residual() -> Result<f64, String> {
    let u = Polynomial::new(vec![
        (0, 0, 0.7),
        (1, 0, -1.2),
        (0, 1, 0.4),
        (2, 0, 1.5),
        (1, 1, -0.8),
        (0, 2, 0.6),
    ]);
    let grid = ghost_elliptic::GridSpec::new(N).unwrap();
    let phi = ghost_elliptic::sample_levelset(&DomainSpec::circle(), grid).unwrap();
    let mut worst = 0.0f64;
    for method in Method::ALL {
        for source_mode in [SourceMode::Extrapolate, SourceMode::Analytic] {
            let opts = AssemblyOptions {
                boundary: BoundaryOptions {
                    source: LevelSetSource::Grid,
                    ..Default::default()
                },
                source_mode,
            };
            let a = assemble(method, &phi, &DiscreteNormal(&u), &opts)
                .map_err(|e| format!("{method}: {e}"))?;
            let cls = &a.classification;
            let samples: Vec<f64> = grid
                .nodes()
                .map(|n| {
                    if cls.label(n).is_active() {
                        let (x, y) = grid.point(n);
                        u.value(x, y)
                    } else {
                        0.0
                    }
                })
                .collect();
            let bnorm = a.system.rhs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let res = a.system.residual(&samples);
            worst = res.iter().fold(worst, |m, v| m.max(v.abs() / bnorm));
        }
    }
    Ok(worst)
}

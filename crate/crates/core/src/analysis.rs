//! Gradient reconstruction, relative error norms, order fitting and the
//! convergence study driver.

use std::io::Write;
use std::time::Instant;

use crate::assembly::{assemble, Assembled, AssemblyOptions, Manufactured, SourceMode};
use crate::boundary::{BoundaryOptions, LevelSetSource, ProjectionOptions};
use crate::domains::{boundary_margin_check, sample_levelset, DomainSpec, ExactSolution};
use crate::error::{Error, Node, Result};
use crate::geometry::{Classification, GridField, GridSpec, NodeClass};
use crate::interp::quartic_derivative_weights;
use crate::method::Method;
use crate::solver::{condition_estimate, solve, SolveOptions, SolveReport};

/// Largest stencil displacement tried by [`gradient_field`].
pub const MAX_GRADIENT_SHIFT: isize = 3;

/// Gradient samples on the internal nodes, in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub spec: GridSpec,
    pub values: Vec<(Node, (f64, f64))>,
}

/// 5-point derivative along one axis. Shift `s` uses the nodes
/// `i - 2 + s ..= i + 2 + s` and evaluates at `theta = 2 - s`.
fn axis_derivative(u: &GridField, cls: &Classification, node: Node, axis: usize) -> Result<f64> {
    let spec = cls.spec();
    let at = |k: isize| -> Option<Node> {
        let (i, j) = (node.0 as isize, node.1 as isize);
        let (a, b) = if axis == 0 { (i + k, j) } else { (i, j + k) };
        spec.contains(a, b).then_some((a as usize, b as usize))
    };
    let admissible =
        |s: isize| (0..5).all(|p| at(s - 2 + p).is_some_and(|n| cls.label(n).is_active()));
    let internal_count = |s: isize| {
        (0..5)
            .filter(|&p| at(s - 2 + p).is_some_and(|n| cls.label(n) == NodeClass::Internal))
            .count()
    };
    let mut chosen = None;
    for mag in 0..=MAX_GRADIENT_SHIFT {
        let mut options: Vec<isize> = if mag == 0 { vec![0] } else { vec![mag, -mag] };
        options.retain(|&s| admissible(s));
        // ties go to the stencil reaching further into the domain
        options.sort_by_key(|&s| std::cmp::Reverse(internal_count(s)));
        if let Some(&s) = options.first() {
            chosen = Some(s);
            break;
        }
    }
    let s = chosen.ok_or(Error::GradientStencil(node))?;
    let w = quartic_derivative_weights((2 - s) as f64).c;
    let d: f64 = (0..5)
        .map(|p| w[p as usize] * u.at(at(s - 2 + p).unwrap()))
        .sum();
    Ok(d / spec.h())
}

/// Fourth-order gradient of `u` on every internal node; centred where the
/// axis neighbours at distance 1 and 2 are active, shifted otherwise.
pub fn gradient_field(u: &GridField, cls: &Classification) -> Result<GradientField> {
    let values = cls
        .internal()
        .map(|n| {
            Ok((
                n,
                (
                    axis_derivative(u, cls, n, 0)?,
                    axis_derivative(u, cls, n, 1)?,
                ),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(GradientField {
        spec: *cls.spec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    LInf,
}

fn ratio(pairs: impl Iterator<Item = (f64, f64)>, norm: Norm) -> Result<f64> {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (d, r) in pairs {
        match norm {
            Norm::L1 => {
                num += d;
                den += r;
            }
            Norm::LInf => {
                num = num.max(d);
                den = den.max(r);
            }
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// `||u_h - u||_p / ||u||_p` over `nodes`.
pub fn relative_error(
    u: &GridField,
    exact: &dyn Fn(f64, f64) -> f64,
    nodes: &[Node],
    norm: Norm,
) -> Result<f64> {
    let spec = u.spec();
    ratio(
        nodes.iter().map(|&n| {
            let (x, y) = spec.point(n);
            let e = exact(x, y);
            ((u.at(n) - e).abs(), e.abs())
        }),
        norm,
    )
}

/// Relative error of a gradient field using the pointwise Euclidean modulus.
pub fn relative_gradient_error(
    grad: &GradientField,
    exact: &dyn Fn(f64, f64) -> (f64, f64),
    norm: Norm,
) -> Result<f64> {
    ratio(
        grad.values.iter().map(|&(n, (gx, gy))| {
            let (x, y) = grad.spec.point(n);
            let (ex, ey) = exact(x, y);
            ((gx - ex).hypot(gy - ey), ex.hypot(ey))
        }),
        norm,
    )
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn check_fit_input(ns: &[usize], values: &[f64]) -> Result<()> {
    if ns.len() != values.len() || ns.len() < 3 {
        return Err(Error::invalid(
            "order fit needs at least three (N, value) pairs",
        ));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!(
            "order fit needs positive values, got {v}"
        )));
    }
    Ok(())
}

/// Least-squares slope of `log e` against `log h`, `h = 2 / N`.
pub fn fit_order(ns: &[usize], errors: &[f64]) -> Result<f64> {
    check_fit_input(ns, errors)?;
    let xs: Vec<f64> = ns.iter().map(|&n| (2.0 / n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(slope(&xs, &ys))
}

/// Least-squares slope of `log v` against `log N` (growth rate).
pub fn fit_growth(ns: &[usize], values: &[f64]) -> Result<f64> {
    check_fit_input(ns, values)?;
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|e| e.ln()).collect();
    Ok(slope(&xs, &ys))
}

/// Where the boundary projection evaluates the level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMode {
    /// Biquartic interpolation of the sampled level set.
    #[default]
    Grid,
    /// The analytic level set (falls back to `Grid` for sampled shapes).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub projection: ProjectionOptions,
    pub projection_mode: ProjectionMode,
    pub source_mode: SourceMode,
    pub solve: SolveOptions,
    pub condition: bool,
    /// Reject domains that leave no room for ghost stencils.
    pub margin_check: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            projection: ProjectionOptions::default(),
            projection_mode: ProjectionMode::Grid,
            source_mode: SourceMode::Extrapolate,
            solve: SolveOptions::default(),
            condition: true,
            margin_check: true,
        }
    }
}

/// Errors and diagnostics of one grid level.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub e1_u: f64,
    pub einf_u: f64,
    pub e1_grad: f64,
    pub einf_grad: f64,
    pub cond_est: Option<f64>,
    pub solve_ms: f64,
    pub residual: f64,
    pub ghosts: usize,
}

/// Everything produced by a single assemble-and-solve.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub phi: GridField,
    pub assembled: Assembled,
    pub report: SolveReport,
    pub row: StudyRow,
}

/// Assembles, solves and measures one method on one grid.
pub fn run_single(
    method: Method,
    domain: &DomainSpec,
    solution: &dyn ExactSolution,
    n: usize,
    config: &StudyConfig,
) -> Result<SingleRun> {
    let grid = GridSpec::new(n)?;
    let phi = sample_levelset(domain, grid)?;
    if config.margin_check {
        boundary_margin_check(&phi)?;
    }
    let levelset = domain.levelset();
    let source = match (config.projection_mode, levelset) {
        (ProjectionMode::Exact, Some(ls)) => LevelSetSource::Exact(ls),
        _ => LevelSetSource::Grid,
    };
    let opts = AssemblyOptions {
        boundary: BoundaryOptions {
            projection: config.projection,
            split: domain.split,
            source,
        },
        source_mode: config.source_mode,
    };
    let data = Manufactured { solution, levelset };
    let assembled = assemble(method, &phi, &data, &opts)?;
    let cls = &assembled.classification;

    // Error nodes: internal nodes and the classified ghost layer. Nodes
    // promoted by the closure only support interpolation stencils and may
    // lie where the exact solution is undefined.
    let measured: Vec<Node> = grid
        .nodes()
        .filter(|&k| cls.label(k).is_active() && !cls.is_promoted(k))
        .collect();
    if let Some(&bad) = measured.iter().find(|&&k| {
        let (x, y) = grid.point(k);
        !solution.value(x, y).is_finite()
    }) {
        return Err(Error::invalid(format!(
            "exact solution is undefined at node {bad:?}"
        )));
    }

    let start = Instant::now();
    let solve_opts = SolveOptions {
        condition: config.condition,
        ..config.solve
    };
    let report = solve(&assembled.system, &solve_opts)?;
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;
    let cond_est = match (config.condition, report.condition_estimate) {
        (false, _) => None,
        (true, Some(k)) => Some(k),
        (true, None) => Some(condition_estimate(&assembled.system)),
    };

    let u = &report.solution;
    let exact = |x: f64, y: f64| solution.value(x, y);
    let exact_grad = |x: f64, y: f64| solution.gradient(x, y);
    let grad = gradient_field(u, cls)?;
    let row = StudyRow {
        n,
        h: grid.h(),
        e1_u: relative_error(u, &exact, &measured, Norm::L1)?,
        einf_u: relative_error(u, &exact, &measured, Norm::LInf)?,
        e1_grad: relative_gradient_error(&grad, &exact_grad, Norm::L1)?,
        einf_grad: relative_gradient_error(&grad, &exact_grad, Norm::LInf)?,
        cond_est,
        solve_ms,
        residual: report.residual_norm,
        ghosts: cls.ghost_count(),
    };
    Ok(SingleRun {
        phi,
        assembled,
        report,
        row,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyFailure {
    pub n: usize,
    pub message: String,
}

/// Fitted orders (against `h`) of the four error columns and the growth
/// rate of the condition estimate (against `N`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedOrders {
    pub e1_u: f64,
    pub einf_u: f64,
    pub e1_grad: f64,
    pub einf_grad: f64,
    pub cond_slope: Option<f64>,
}

impl FittedOrders {
    pub fn min_error_order(&self) -> f64 {
        self.e1_u
            .min(self.einf_u)
            .min(self.e1_grad)
            .min(self.einf_grad)
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub method: Method,
    pub domain: String,
    pub solution: String,
    pub rows: Vec<StudyRow>,
    pub failures: Vec<StudyFailure>,
}

pub const CSV_HEADER: &str = "method,domain,N,h,e1_u,einf_u,e1_grad,einf_grad,cond_est,solve_ms";

fn csv_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

impl ConvergenceReport {
    pub fn ns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn column(&self, f: impl Fn(&StudyRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    /// `None` with fewer than three successful levels or nonpositive errors.
    pub fn orders(&self) -> Option<FittedOrders> {
        let ns = self.ns();
        let fit = |f: fn(&StudyRow) -> f64| fit_order(&ns, &self.column(f)).ok();
        let cond: Option<Vec<f64>> = self.rows.iter().map(|r| r.cond_est).collect();
        Some(FittedOrders {
            e1_u: fit(|r| r.e1_u)?,
            einf_u: fit(|r| r.einf_u)?,
            e1_grad: fit(|r| r.e1_grad)?,
            einf_grad: fit(|r| r.einf_grad)?,
            cond_slope: cond.and_then(|c| fit_growth(&ns, &c).ok()),
        })
    }

    /// CSV with one row per level, failed levels as `nan`, and a `fit` footer
    /// holding the fitted orders (the `cond_est` column holds the growth rate
    /// of the condition estimate in `N`). With `timings == false` the
    /// `solve_ms` column is zero so that output is reproducible.
    pub fn write_csv<W: Write>(&self, mut out: W, timings: bool) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let mut lines: Vec<(usize, String)> = self
            .rows
            .iter()
            .map(|r| {
                let line = format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    self.method,
                    self.domain,
                    r.n,
                    csv_num(r.h),
                    csv_num(r.e1_u),
                    csv_num(r.einf_u),
                    csv_num(r.e1_grad),
                    csv_num(r.einf_grad),
                    csv_num(r.cond_est.unwrap_or(f64::NAN)),
                    if timings {
                        format!("{:.3}", r.solve_ms)
                    } else {
                        "0".into()
                    },
                );
                (r.n, line)
            })
            .collect();
        for f in &self.failures {
            let line = format!(
                "{},{},{},{},nan,nan,nan,nan,nan,nan",
                self.method,
                self.domain,
                f.n,
                csv_num(2.0 / f.n as f64)
            );
            lines.push((f.n, line));
        }
        lines.sort_by_key(|l| l.0);
        for (_, l) in lines {
            writeln!(out, "{l}")?;
        }
        let o = self.orders();
        let g = |f: fn(&FittedOrders) -> f64| o.as_ref().map_or(f64::NAN, f);
        writeln!(
            out,
            "{},{},fit,,{},{},{},{},{},",
            self.method,
            self.domain,
            csv_num(g(|o| o.e1_u)),
            csv_num(g(|o| o.einf_u)),
            csv_num(g(|o| o.e1_grad)),
            csv_num(g(|o| o.einf_grad)),
            csv_num(o.and_then(|o| o.cond_slope).unwrap_or(f64::NAN)),
        )?;
        Ok(())
    }
}

/// Runs `method` on every `N` in `ns` (strictly increasing). Failures at
/// individual levels are recorded, not propagated.
pub fn run_convergence_study(
    method: Method,
    domain: &DomainSpec,
    solution: &dyn ExactSolution,
    solution_name: &str,
    ns: &[usize],
    config: &StudyConfig,
) -> Result<ConvergenceReport> {
    run_convergence_study_with(method, domain, solution, solution_name, ns, config, |_| {
        Ok(())
    })
}

/// [`run_convergence_study`] with a hook called on every successful level,
/// e.g. to write the assembled system. A hook error aborts the study.
pub fn run_convergence_study_with(
    method: Method,
    domain: &DomainSpec,
    solution: &dyn ExactSolution,
    solution_name: &str,
    ns: &[usize],
    config: &StudyConfig,
    mut on_level: impl FnMut(&SingleRun) -> Result<()>,
) -> Result<ConvergenceReport> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "N list must be non-empty and strictly increasing",
        ));
    }
    domain.validate()?;
    let mut report = ConvergenceReport {
        method,
        domain: domain.name(),
        solution: solution_name.to_string(),
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for &n in ns {
        match run_single(method, domain, solution, n, config) {
            Ok(run) => {
                on_level(&run)?;
                report.rows.push(run.row);
            }
            Err(e) => report.failures.push(StudyFailure {
                n,
                message: e.to_string(),
            }),
        }
    }
    Ok(report)
}

//! Ghost-node boundary treatment: upwind quadrant selection, the 5×5 upwind
//! stencil, projection of the ghost onto the zero level set, and the
//! per-ghost record consumed by assembly.

use std::io::Write;

use crate::error::{Error, Node, Result};
use crate::geometry::{Classification, GridField, GridSpec, NodeClass};
use crate::interp::{biquartic_eval, biquartic_grad, quartic_value_weights, THETA_TRUST};
use crate::method::Method;

/// Analytic level set, used when the exact geometry is known.
pub trait LevelSet: Sync {
    fn value(&self, x: f64, y: f64) -> f64;
    fn gradient(&self, x: f64, y: f64) -> (f64, f64);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Rule splitting the boundary into Dirichlet and Neumann parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcSplit {
    /// Dirichlet where `x_B <= threshold`, Neumann elsewhere.
    XThreshold(f64),
    AllDirichlet,
    AllNeumann,
}

impl Default for BcSplit {
    fn default() -> Self {
        BcSplit::XThreshold(0.0)
    }
}

impl BcSplit {
    pub fn kind_at(&self, x: f64, _y: f64) -> BcKind {
        match *self {
            BcSplit::XThreshold(t) if x <= t => BcKind::Dirichlet,
            BcSplit::XThreshold(_) => BcKind::Neumann,
            BcSplit::AllDirichlet => BcKind::Dirichlet,
            BcSplit::AllNeumann => BcKind::Neumann,
        }
    }
}

/// Sign of `a - b`, zero when the difference is at rounding level.
fn sgn_diff(a: f64, b: f64) -> i8 {
    let d = a - b;
    if d.abs() <= 16.0 * f64::EPSILON * (a.abs() + b.abs()) {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

/// Sign of minus the central-difference gradient of `phi` at `node`.
///
/// On the edge of the box the missing neighbour is replaced by the node
/// itself, giving a one-sided difference. Differences at rounding level
/// count as zero, so mirror-symmetric level sets give a zero sign on the
/// symmetry line.
pub fn quadrant_signs(phi: &GridField, node: Node) -> Result<(i8, i8)> {
    let n = phi.spec().n();
    let (l, m) = node;
    let (lo, hi) = (l.saturating_sub(1), (l + 1).min(n));
    let sx = sgn_diff(phi.at((lo, m)), phi.at((hi, m)));
    let (lo, hi) = (m.saturating_sub(1), (m + 1).min(n));
    let sy = sgn_diff(phi.at((l, lo)), phi.at((l, hi)));
    if sx == 0 && sy == 0 {
        return Err(Error::DegenerateGradient(node));
    }
    Ok((sx, sy))
}

/// Stencil direction for a quadrant sign; a zero sign extends towards `+1`.
pub fn direction(sign: i8) -> isize {
    if sign < 0 {
        -1
    } else {
        1
    }
}

/// Signed indices of the 5×5 upwind stencil, `[p + 5 q] = (l + dx rx p, m + dy ry q)`.
pub fn upwind_offsets(
    node: Node,
    dirs: (isize, isize),
    steps: (usize, usize),
) -> [(isize, isize); 25] {
    let (l, m) = (node.0 as isize, node.1 as isize);
    let mut out = [(0, 0); 25];
    for q in 0..5 {
        for p in 0..5 {
            out[p + 5 * q] = (
                l + dirs.0 * (steps.0 * p) as isize,
                m + dirs.1 * (steps.1 * q) as isize,
            );
        }
    }
    out
}

pub fn upwind_stencil(
    node: Node,
    dirs: (isize, isize),
    steps: (usize, usize),
    spec: &GridSpec,
) -> Result<[Node; 25]> {
    let offsets = upwind_offsets(node, dirs, steps);
    // report the farthest escape, the stencil corner opposite the node
    if let Some(&(i, j)) = offsets.iter().rev().find(|&&(i, j)| !spec.contains(i, j)) {
        return Err(Error::StencilOutOfGrid { node, i, j });
    }
    Ok(offsets.map(|(i, j)| (i as usize, j as usize)))
}

/// An upwind stencil together with its coordinate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UpwindStencil {
    pub node: Node,
    pub signs: (i8, i8),
    pub steps: (usize, usize),
    pub nodes: [Node; 25],
    origin: (f64, f64),
    h: f64,
}

impl UpwindStencil {
    pub fn new(
        node: Node,
        signs: (i8, i8),
        steps: (usize, usize),
        spec: &GridSpec,
    ) -> Result<Self> {
        let dirs = (direction(signs.0), direction(signs.1));
        let nodes = upwind_stencil(node, dirs, steps, spec)?;
        Ok(UpwindStencil {
            node,
            signs,
            steps,
            nodes,
            origin: spec.point(node),
            h: spec.h(),
        })
    }

    /// Effective direction signs (a zero quadrant sign becomes `+1`).
    pub fn dirs(&self) -> (f64, f64) {
        (
            direction(self.signs.0) as f64,
            direction(self.signs.1) as f64,
        )
    }

    pub fn theta(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = self.dirs();
        (
            dx * (x - self.origin.0) / (self.steps.0 as f64 * self.h),
            dy * (y - self.origin.1) / (self.steps.1 as f64 * self.h),
        )
    }

    pub fn point(&self, theta_x: f64, theta_y: f64) -> (f64, f64) {
        let (dx, dy) = self.dirs();
        (
            self.origin.0 + dx * theta_x * self.steps.0 as f64 * self.h,
            self.origin.1 + dy * theta_y * self.steps.1 as f64 * self.h,
        )
    }

    pub fn gather(&self, field: &GridField) -> [f64; 25] {
        let mut out = [0.0; 25];
        for (v, &n) in out.iter_mut().zip(&self.nodes) {
            *v = field.at(n);
        }
        out
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interpolated value and gradient of `values` at `(x, y)`.
    pub fn interpolate(&self, values: &[f64; 25], x: f64, y: f64) -> (f64, (f64, f64)) {
        let (tx, ty) = self.theta(x, y);
        (
            biquartic_eval(values, tx, ty),
            biquartic_grad(values, tx, ty, self.dirs(), self.steps, self.h),
        )
    }
}

/// How far (in `theta` units) the projection may move to the negative side
/// of an axis whose quadrant sign is zero.
pub const ZERO_SIGN_REACH: f64 = 2.0;

/// Where the projection reads the level set from.
#[derive(Clone, Copy, Default)]
pub enum LevelSetSource<'a> {
    /// Biquartic interpolation of the grid samples on the ghost's stencil.
    #[default]
    Grid,
    /// Exact evaluation of a known level set.
    Exact(&'a dyn LevelSet),
}

impl std::fmt::Debug for LevelSetSource<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LevelSetSource::Grid => f.write_str("Grid"),
            LevelSetSource::Exact(_) => f.write_str("Exact"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// Longest step of the normal walk, as a fraction of `h`.
    pub step_fraction: f64,
    /// Stop when `|phi| <= tol_factor * max_grid |phi|`.
    pub tol_factor: f64,
    pub max_iter: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            step_fraction: 0.1,
            tol_factor: 1e-13,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: (f64, f64),
    pub theta: (f64, f64),
    pub iterations: usize,
}

/// Walks from the ghost node along the level-set gradient onto `phi = 0`.
///
/// Each step is the Newton update `-phi grad(phi) / |grad(phi)|^2`, with the
/// direction refreshed at every iterate and the length capped at
/// `step_fraction * h`. Iterates must stay within the stencil hull inflated
/// by half a node spacing, or by [`ZERO_SIGN_REACH`] on the negative side of
/// an axis with a zero quadrant sign.
pub fn project_to_boundary(
    phi: &GridField,
    stencil: &UpwindStencil,
    source: LevelSetSource<'_>,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    let tol = opts.tol_factor * phi.max_abs();
    let values = stencil.gather(phi);
    project_with(stencil, tol, opts, |x, y| match source {
        LevelSetSource::Grid => stencil.interpolate(&values, x, y),
        LevelSetSource::Exact(ls) => (ls.value(x, y), ls.gradient(x, y)),
    })
}

fn project_with(
    stencil: &UpwindStencil,
    tol: f64,
    opts: &ProjectionOptions,
    eval: impl Fn(f64, f64) -> (f64, (f64, f64)),
) -> Result<Projection> {
    let node = stencil.node;
    let cap = opts.step_fraction * stencil.h();
    // an axis with a zero quadrant sign has no preferred side
    let lower = |s: i8| {
        if s == 0 {
            -ZERO_SIGN_REACH
        } else {
            -(THETA_TRUST - 4.0)
        }
    };
    let lo = (lower(stencil.signs.0), lower(stencil.signs.1));
    let mut x = stencil.point(0.0, 0.0);
    let mut last = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let theta = stencil.theta(x.0, x.1);
        if theta.0 < lo.0 || theta.1 < lo.1 || theta.0 > THETA_TRUST || theta.1 > THETA_TRUST {
            return Err(Error::TrustRegion {
                node,
                theta_x: theta.0,
                theta_y: theta.1,
            });
        }
        let (f, (gx, gy)) = eval(x.0, x.1);
        last = f.abs();
        if last <= tol {
            return Ok(Projection {
                point: x,
                theta,
                iterations: it,
            });
        }
        let g2 = gx * gx + gy * gy;
        if !(g2 > 0.0) || !f.is_finite() {
            return Err(Error::DegenerateGradient(node));
        }
        let (mut dx, mut dy) = (-f * gx / g2, -f * gy / g2);
        let len = dx.hypot(dy);
        if len > cap {
            dx *= cap / len;
            dy *= cap / len;
        }
        x = (x.0 + dx, x.1 + dy);
    }
    Err(Error::ProjectionDiverged {
        node,
        iterations: opts.max_iter,
        residual: last,
    })
}

/// Everything needed to write the boundary-condition row of one ghost.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostRecord {
    pub node: Node,
    pub class: NodeClass,
    /// Added by the ghost closure rather than by classification.
    pub promoted: bool,
    pub stencil: UpwindStencil,
    pub boundary_point: (f64, f64),
    pub theta: (f64, f64),
    pub bc: BcKind,
    /// Unit outward normal at the boundary point, from the interpolated grid level set.
    pub normal: (f64, f64),
    pub projection_iterations: usize,
}

impl GhostRecord {
    pub fn signs(&self) -> (i8, i8) {
        self.stencil.signs
    }

    pub fn steps(&self) -> (usize, usize) {
        self.stencil.steps
    }

    /// `min(|c_0(theta_x)|, |c_0(theta_y)|)`: small values mean a weak diagonal.
    pub fn min_c0(&self) -> f64 {
        let cx = quartic_value_weights(self.theta.0).c[0].abs();
        let cy = quartic_value_weights(self.theta.1).c[0].abs();
        cx.min(cy)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BoundaryOptions<'a> {
    pub projection: ProjectionOptions,
    pub split: BcSplit,
    pub source: LevelSetSource<'a>,
}

/// Steps for the ghost `node` under `method`, from its label (promoted nodes
/// are treated like any ghost of their label). A doubled step is reduced to
/// one on any axis where it would carry the stencil out of the box.
pub fn fitted_steps(
    method: Method,
    cls: &Classification,
    node: Node,
    dirs: (isize, isize),
) -> (usize, usize) {
    let (rx, ry) = method.steps(cls.label(node));
    let n = cls.spec().n() as isize;
    let fits = |c: usize, d: isize, r: usize| (0..=n).contains(&(c as isize + d * 4 * r as isize));
    (
        if rx > 1 && !fits(node.0, dirs.0, rx) {
            1
        } else {
            rx
        },
        if ry > 1 && !fits(node.1, dirs.1, ry) {
            1
        } else {
            ry
        },
    )
}

/// The upwind stencil a ghost uses under `method`.
pub fn ghost_stencil(
    phi: &GridField,
    cls: &Classification,
    node: Node,
    method: Method,
) -> Result<UpwindStencil> {
    let signs = quadrant_signs(phi, node)?;
    let dirs = (direction(signs.0), direction(signs.1));
    let steps = fitted_steps(method, cls, node, dirs);
    UpwindStencil::new(node, signs, steps, phi.spec())
}

pub fn build_ghost_record(
    phi: &GridField,
    cls: &Classification,
    node: Node,
    method: Method,
    opts: &BoundaryOptions<'_>,
) -> Result<GhostRecord> {
    let stencil = ghost_stencil(phi, cls, node, method)?;
    let proj = project_to_boundary(phi, &stencil, opts.source, &opts.projection)?;
    let values = stencil.gather(phi);
    let (_, (nx, ny)) = stencil.interpolate(&values, proj.point.0, proj.point.1);
    let norm = nx.hypot(ny);
    if !(norm > 0.0) {
        return Err(Error::DegenerateGradient(node));
    }
    Ok(GhostRecord {
        node,
        class: cls.label(node),
        promoted: cls.is_promoted(node),
        boundary_point: proj.point,
        theta: proj.theta,
        bc: opts.split.kind_at(proj.point.0, proj.point.1),
        normal: (nx / norm, ny / norm),
        projection_iterations: proj.iterations,
        stencil,
    })
}

/// One record per ghost of `cls`, in row-major node order.
pub fn build_ghost_records(
    phi: &GridField,
    cls: &Classification,
    method: Method,
    opts: &BoundaryOptions<'_>,
) -> Result<Vec<GhostRecord>> {
    cls.ghosts()
        .map(|g| build_ghost_record(phi, cls, g, method, opts))
        .collect()
}

/// Fraction of records of layer `class` whose weaker `c_0` is below `threshold`.
pub fn small_pivot_fraction(records: &[GhostRecord], class: NodeClass, threshold: f64) -> f64 {
    let layer: Vec<_> = records.iter().filter(|r| r.class == class).collect();
    if layer.is_empty() {
        return 0.0;
    }
    layer.iter().filter(|r| r.min_c0() < threshold).count() as f64 / layer.len() as f64
}

/// Per-ghost diagnostic CSV.
///
/// Columns: `i,j,class,promoted,sx,sy,rx,ry,xb,yb,theta_x,theta_y,bc,nx,ny,min_c0,iterations`.
pub fn write_ghost_diagnostics<W: Write>(records: &[GhostRecord], mut out: W) -> Result<()> {
    writeln!(
        out,
        "i,j,class,promoted,sx,sy,rx,ry,xb,yb,theta_x,theta_y,bc,nx,ny,min_c0,iterations"
    )?;
    for r in records {
        let class = match r.class {
            NodeClass::GhostStar1 => "star1",
            NodeClass::GhostStar2 => "star2",
            NodeClass::GhostBox => "box",
            NodeClass::Internal => "internal",
            NodeClass::Inactive => "inactive",
        };
        let bc = match r.bc {
            BcKind::Dirichlet => "D",
            BcKind::Neumann => "N",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{}",
            r.node.0,
            r.node.1,
            class,
            u8::from(r.promoted),
            r.stencil.signs.0,
            r.stencil.signs.1,
            r.stencil.steps.0,
            r.stencil.steps.1,
            r.boundary_point.0,
            r.boundary_point.1,
            r.theta.0,
            r.theta.1,
            bc,
            r.normal.0,
            r.normal.1,
            r.min_c0(),
            r.projection_iterations,
        )?;
    }
    Ok(())
}

//! Assembly of the coupled internal + ghost linear system.
//!
//! Every grid node owns exactly one row: internal nodes get the fourth-order
//! star or box Laplacian, ghosts get a biquartic boundary-condition row, and
//! inactive nodes keep an identity row with zero right-hand side.

use std::io::Write;

use crate::boundary::{
    build_ghost_records, direction, fitted_steps, quadrant_signs, upwind_offsets, BcKind,
    BoundaryOptions, GhostRecord, LevelSet,
};
use crate::domains::ExactSolution;
use crate::error::{Error, Node, Result};
use crate::geometry::{
    classify_points, close_ghost_set, Classification, GridField, GridSpec, NodeClass,
};
use crate::interp::{quartic_derivative_weights, quartic_value_weights, tensor};
use crate::method::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKind {
    InteriorStar,
    InteriorBox,
    GhostDirichlet,
    GhostNeumann,
    InactiveIdentity,
}

/// One assembled equation before compression.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
    pub kind: RowKind,
}

impl Row {
    /// `sum_j a_j u_j` for a full-grid vector `u`.
    pub fn apply(&self, u: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| v * u[c]).sum()
    }
}

/// Square sparse system in compressed-row form, one row per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    spec: GridSpec,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
    kinds: Vec<RowKind>,
}

impl SparseSystem {
    /// Compresses rows, summing duplicate columns and dropping exact zeros.
    pub fn from_rows(spec: GridSpec, rows: Vec<Row>) -> Result<Self> {
        if rows.len() != spec.len() {
            return Err(Error::invalid(format!(
                "{} rows for {} unknowns",
                rows.len(),
                spec.len()
            )));
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut rhs = Vec::with_capacity(rows.len());
        let mut kinds = Vec::with_capacity(rows.len());
        row_ptr.push(0);
        for (k, mut row) in rows.into_iter().enumerate() {
            row.entries.sort_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row.entries {
                if c >= spec.len() || !v.is_finite() {
                    return Err(Error::invalid(format!("bad entry ({k}, {c}) = {v}")));
                }
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            // drop exact zeros, including cancellations
            let mut w = start;
            for r in start..cols.len() {
                if vals[r] != 0.0 {
                    cols[w] = cols[r];
                    vals[w] = vals[r];
                    w += 1;
                }
            }
            cols.truncate(w);
            vals.truncate(w);
            if w == start {
                return Err(Error::invalid(format!("row {k} is empty")));
            }
            row_ptr.push(cols.len());
            rhs.push(row.rhs);
            kinds.push(row.kind);
        }
        Ok(SparseSystem {
            spec,
            row_ptr,
            cols,
            vals,
            rhs,
            kinds,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.kinds
    }

    pub fn row(&self, k: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[k]..self.row_ptr[k + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |k| {
            let (c, v) = self.row(k);
            c.iter().zip(v).map(move |(&c, &v)| (k, c, v))
        })
    }

    /// Same matrix and kinds with every entry and the rhs scaled by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut s = self.clone();
        s.vals.iter_mut().for_each(|v| *v *= alpha);
        s.rhs.iter_mut().for_each(|v| *v *= alpha);
        s
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|k| {
                let (c, v) = self.row(k);
                c.iter().zip(v).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (r, c, v) in self.triplets() {
            out[c] += v * x[r];
        }
        out
    }

    /// `b - A x`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x)
            .into_iter()
            .zip(&self.rhs)
            .map(|(ax, b)| b - ax)
            .collect()
    }

    /// `b - A x` for an arbitrary right-hand side.
    pub fn residual_against(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        self.apply(x)
            .into_iter()
            .zip(b)
            .map(|(ax, b)| b - ax)
            .collect()
    }

    /// Normwise backward error `||b - A x||_∞ / (||A||_∞ ||x||_∞ + ||b||_∞)`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let r = inf(&self.residual(x));
        let denom = self.norm_inf() * inf(x) + inf(&self.rhs);
        if denom > 0.0 {
            r / denom
        } else {
            r
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.row(k).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut col = vec![0.0; self.dim()];
        for (_, c, v) in self.triplets() {
            col[c] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn count_kind(&self, kind: RowKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }

    /// Coordinate text dump: `rows cols nnz`, then one 0-based `row col value`
    /// per line with 17 significant digits.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.dim(), self.dim(), self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }

    /// Right-hand side, one value per line, 17 significant digits.
    pub fn write_rhs<W: Write>(&self, mut out: W) -> Result<()> {
        for v in &self.rhs {
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }
}

/// Source term and boundary data of a Poisson problem.
pub trait ProblemData: Sync {
    fn source(&self, x: f64, y: f64) -> f64;
    fn dirichlet(&self, x: f64, y: f64) -> f64;
    /// Normal derivative data at a boundary point; `normal` is the discrete
    /// unit normal the ghost row uses.
    fn neumann(&self, x: f64, y: f64, normal: (f64, f64)) -> f64;
}

/// Data derived from an exact solution. The Neumann data use the analytic
/// normal when the level set is known, the discrete one otherwise.
#[derive(Clone, Copy)]
pub struct Manufactured<'a> {
    pub solution: &'a dyn ExactSolution,
    pub levelset: Option<&'a dyn LevelSet>,
}

impl ProblemData for Manufactured<'_> {
    fn source(&self, x: f64, y: f64) -> f64 {
        self.solution.source(x, y)
    }

    fn dirichlet(&self, x: f64, y: f64) -> f64 {
        self.solution.value(x, y)
    }

    fn neumann(&self, x: f64, y: f64, normal: (f64, f64)) -> f64 {
        let (nx, ny) = match self.levelset {
            Some(ls) => {
                let (gx, gy) = ls.gradient(x, y);
                let n = gx.hypot(gy);
                (gx / n, gy / n)
            }
            None => normal,
        };
        let (ux, uy) = self.solution.gradient(x, y);
        ux * nx + uy * ny
    }
}

const STAR_OFFSETS: [(isize, isize, f64); 9] = [
    (0, 0, 60.0),
    (-1, 0, -16.0),
    (1, 0, -16.0),
    (0, -1, -16.0),
    (0, 1, -16.0),
    (-2, 0, 1.0),
    (2, 0, 1.0),
    (0, -2, 1.0),
    (0, 2, 1.0),
];

const BOX_OFFSETS: [(isize, isize, f64); 9] = [
    (0, 0, 20.0),
    (-1, 0, -4.0),
    (1, 0, -4.0),
    (0, -1, -4.0),
    (0, 1, -4.0),
    (-1, -1, -1.0),
    (-1, 1, -1.0),
    (1, -1, -1.0),
    (1, 1, -1.0),
];

const MEHRSTELLEN_SOURCE: [(isize, isize, f64); 5] = [
    (0, 0, 8.0),
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
];

fn stencil_row(
    cls: &Classification,
    node: Node,
    offsets: &[(isize, isize, f64)],
    scale: f64,
) -> Result<Vec<(usize, f64)>> {
    let spec = cls.spec();
    offsets
        .iter()
        .map(|&(di, dj, w)| {
            let n = spec.checked_node(node.0 as isize + di, node.1 as isize + dj)?;
            if cls.label(n) == NodeClass::Inactive {
                return Err(Error::InactiveInStencil { node, inactive: n });
            }
            Ok((spec.index(n.0, n.1), w * scale))
        })
        .collect()
}

/// Fourth-order star Laplacian row; right-hand side is `f` at the node.
pub fn interior_row_star(cls: &Classification, node: Node, f: f64) -> Result<Row> {
    let h = cls.spec().h();
    Ok(Row {
        entries: stencil_row(cls, node, &STAR_OFFSETS, 1.0 / (12.0 * h * h))?,
        rhs: f,
        kind: RowKind::InteriorStar,
    })
}

/// Compact box (Mehrstellen) row. `source` must hold `f` on the node and its
/// four axis neighbours.
pub fn interior_row_box(cls: &Classification, node: Node, source: &[Option<f64>]) -> Result<Row> {
    let spec = cls.spec();
    let h = spec.h();
    let mut rhs = 0.0;
    for &(di, dj, w) in &MEHRSTELLEN_SOURCE {
        let n = spec.checked_node(node.0 as isize + di, node.1 as isize + dj)?;
        let f = source[spec.index(n.0, n.1)].ok_or(Error::ExtrapolationStencil(n))?;
        rhs += w * f;
    }
    Ok(Row {
        entries: stencil_row(cls, node, &BOX_OFFSETS, 1.0 / (6.0 * h * h))?,
        rhs: rhs / 12.0,
        kind: RowKind::InteriorBox,
    })
}

/// Boundary-condition row of a ghost, enforced at its boundary point.
pub fn ghost_row(record: &GhostRecord, data: &dyn ProblemData, spec: &GridSpec) -> Row {
    let (tx, ty) = record.theta;
    let wx = quartic_value_weights(tx).c;
    let wy = quartic_value_weights(ty).c;
    let (bx, by) = record.boundary_point;
    let (coeffs, rhs, kind) = match record.bc {
        BcKind::Dirichlet => (
            tensor(&wx, &wy),
            data.dirichlet(bx, by),
            RowKind::GhostDirichlet,
        ),
        BcKind::Neumann => {
            let (sx, sy) = record.stencil.dirs();
            let (rx, ry) = record.steps();
            let h = spec.h();
            let dx = tensor(&quartic_derivative_weights(tx).c, &wy);
            let dy = tensor(&wx, &quartic_derivative_weights(ty).c);
            let (nx, ny) = record.normal;
            let ax = nx * sx / (rx as f64 * h);
            let ay = ny * sy / (ry as f64 * h);
            let mut c = [0.0; 25];
            for k in 0..25 {
                c[k] = ax * dx[k] + ay * dy[k];
            }
            (
                c,
                data.neumann(bx, by, record.normal),
                RowKind::GhostNeumann,
            )
        }
    };
    let entries = record
        .stencil
        .nodes
        .iter()
        .zip(coeffs)
        .map(|(&(i, j), v)| (spec.index(i, j), v))
        .collect();
    Row { entries, rhs, kind }
}

/// Largest extrapolation distance, in cells, for [`extend_source`].
pub const EXTRAPOLATION_BUDGET: isize = 4;

/// Extrapolates `f` from internal nodes to the external `needed` nodes.
///
/// Per axis the 5-node stencil starts `a` cells from the target along the
/// upwind direction (a zero sign counts as `+1`), `a` in
/// `-4..=EXTRAPOLATION_BUDGET`, so the target sits at `theta = -a`. Among
/// placements whose 25 nodes are all internal, the one with the shortest
/// extrapolation distance wins, then the most centred one.
pub fn extend_source(
    f_internal: &[f64],
    phi: &GridField,
    cls: &Classification,
    needed: &[Node],
) -> Result<Vec<(Node, f64)>> {
    let spec = *cls.spec();
    let internal = |i: isize, j: isize| {
        spec.contains(i, j) && cls.label((i as usize, j as usize)) == NodeClass::Internal
    };
    needed
        .iter()
        .map(|&e| {
            let (sx, sy) = quadrant_signs(phi, e)?;
            let (dx, dy) = (direction(sx), direction(sy));
            let (ex, ey) = (e.0 as isize, e.1 as isize);
            let mut best: Option<((isize, isize, isize), isize, isize)> = None;
            for ax in -4..=EXTRAPOLATION_BUDGET {
                for ay in -4..=EXTRAPOLATION_BUDGET {
                    let ok = (0..5)
                        .all(|q| (0..5).all(|p| internal(ex + dx * (ax + p), ey + dy * (ay + q))));
                    if !ok {
                        continue;
                    }
                    let (px, py) = (ax.max(0), ay.max(0));
                    let centring = (ax + 2).abs() + (ay + 2).abs();
                    let cost = (px.max(py), px + py, centring);
                    if best.is_none_or(|b| cost < b.0) {
                        best = Some((cost, ax, ay));
                    }
                }
            }
            let (_, ax, ay) = best.ok_or(Error::ExtrapolationStencil(e))?;
            let wx = quartic_value_weights(-ax as f64).c;
            let wy = quartic_value_weights(-ay as f64).c;
            let mut v = 0.0;
            for (q, cy) in wy.iter().enumerate() {
                for (p, cx) in wx.iter().enumerate() {
                    let i = (ex + dx * (ax + p as isize)) as usize;
                    let j = (ey + dy * (ay + q as isize)) as usize;
                    v += cx * cy * f_internal[spec.index(i, j)];
                }
            }
            Ok((e, v))
        })
        .collect()
}

/// How the box method obtains `f` outside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceMode {
    /// Upwind biquartic extrapolation from internal samples.
    #[default]
    Extrapolate,
    /// Evaluate the analytic source everywhere.
    Analytic,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyOptions<'a> {
    pub boundary: BoundaryOptions<'a>,
    pub source_mode: SourceMode,
}

/// Assembled system together with the intermediate products.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub method: Method,
    pub system: SparseSystem,
    pub classification: Classification,
    pub records: Vec<GhostRecord>,
    pub promoted: Vec<Node>,
}

/// Signed indices of the upwind stencil a ghost would use; escapes are
/// reported by the closure loop.
fn closure_stencil(
    phi: &GridField,
    cls: &Classification,
    node: Node,
    method: Method,
) -> Result<Vec<(isize, isize)>> {
    let (sx, sy) = quadrant_signs(phi, node)?;
    let dirs = (direction(sx), direction(sy));
    let steps = fitted_steps(method, cls, node, dirs);
    Ok(upwind_offsets(node, dirs, steps).to_vec())
}

/// Full pipeline: classification, ghost closure, ghost records, rows.
pub fn assemble(
    method: Method,
    phi: &GridField,
    data: &dyn ProblemData,
    opts: &AssemblyOptions<'_>,
) -> Result<Assembled> {
    let spec = *phi.spec();
    let cls = classify_points(phi, method.family())?;
    let closure = close_ghost_set(cls, |c, n| closure_stencil(phi, c, n, method))?;
    let cls = closure.classification;
    let records = build_ghost_records(phi, &cls, method, &opts.boundary)?;

    let mut source: Vec<Option<f64>> = vec![None; spec.len()];
    for n in cls.internal() {
        let (x, y) = spec.point(n);
        source[spec.index(n.0, n.1)] = Some(data.source(x, y));
    }
    if method == Method::M3 {
        let mut needed: Vec<Node> = Vec::new();
        for n in cls.internal() {
            for &(di, dj, _) in &MEHRSTELLEN_SOURCE[1..] {
                let m = spec.checked_node(n.0 as isize + di, n.1 as isize + dj)?;
                if cls.label(m) != NodeClass::Internal {
                    needed.push(m);
                }
            }
        }
        needed.sort_by_key(|&(i, j)| spec.index(i, j));
        needed.dedup();
        match opts.source_mode {
            SourceMode::Analytic => {
                for n in needed {
                    let (x, y) = spec.point(n);
                    source[spec.index(n.0, n.1)] = Some(data.source(x, y));
                }
            }
            SourceMode::Extrapolate => {
                let f_internal: Vec<f64> = source.iter().map(|v| v.unwrap_or(0.0)).collect();
                for (n, v) in extend_source(&f_internal, phi, &cls, &needed)? {
                    source[spec.index(n.0, n.1)] = Some(v);
                }
            }
        }
    }

    let mut rows: Vec<Option<Row>> = vec![None; spec.len()];
    for n in cls.internal() {
        let k = spec.index(n.0, n.1);
        rows[k] = Some(match method {
            Method::M1 | Method::M2 => interior_row_star(&cls, n, source[k].unwrap())?,
            Method::M3 => interior_row_box(&cls, n, &source)?,
        });
    }
    for r in &records {
        rows[spec.index(r.node.0, r.node.1)] = Some(ghost_row(r, data, &spec));
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            r.unwrap_or(Row {
                entries: vec![(k, 1.0)],
                rhs: 0.0,
                kind: RowKind::InactiveIdentity,
            })
        })
        .collect();

    Ok(Assembled {
        method,
        system: SparseSystem::from_rows(spec, rows)?,
        classification: cls,
        records,
        promoted: closure.promoted,
    })
}

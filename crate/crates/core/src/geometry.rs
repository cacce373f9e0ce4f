//! Uniform Cartesian grid on `[-1, 1]²`, node-sampled fields and the
//! internal / ghost / inactive node classification.
//!
//! Nodes are ordered row-major: the flat index of `(i, j)` is `i + j (N + 1)`,
//! so `i` runs along `x` fastest. Every other module (assembly, output files)
//! uses the same ordering.

use crate::error::{Error, Node, Result};

/// Uniform grid with `N + 1` nodes per axis covering `[-1, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    h: f64,
}

impl GridSpec {
    pub const MIN_N: usize = 8;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_N {
            return Err(Error::GridTooCoarse(n));
        }
        Ok(GridSpec {
            n,
            h: 2.0 / n as f64,
        })
    }

    /// Number of cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n + 1
    }

    /// Total node count `(N + 1)²`.
    pub fn len(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        -1.0 + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.h
    }

    pub fn point(&self, (i, j): Node) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    /// Flat index of node `(i, j)`.
    pub fn linear_index(&self, i: usize, j: usize) -> Result<usize> {
        if i > self.n || j > self.n {
            return Err(Error::IndexOutOfRange {
                i: i as isize,
                j: j as isize,
                n: self.n,
            });
        }
        Ok(self.index(i, j))
    }

    /// Flat index without bounds checking; callers guarantee `i, j <= N`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n && j <= self.n);
        i + j * (self.n + 1)
    }

    #[inline]
    pub fn node(&self, k: usize) -> Node {
        (k % (self.n + 1), k / (self.n + 1))
    }

    pub fn contains(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && i <= self.n as isize && j <= self.n as isize
    }

    /// Converts signed indices to a node, or reports the escape.
    pub fn checked_node(&self, i: isize, j: isize) -> Result<Node> {
        if self.contains(i, j) {
            Ok((i as usize, j as usize))
        } else {
            Err(Error::IndexOutOfRange { i, j, n: self.n })
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        let m = self.n + 1;
        (0..self.len()).map(move |k| (k % m, k / m))
    }
}

/// Scalar samples on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::FieldLength {
                got: values.len(),
                expected: spec.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node: spec.node(k),
                value: values[k],
            });
        }
        Ok(GridField { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = spec.nodes().map(|(i, j)| f(spec.x(i), spec.y(j))).collect();
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, (i, j): Node) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Label of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Internal,
    /// Star-family ghost with an internal node at grid distance 1.
    GhostStar1,
    /// Star-family ghost whose nearest internal star neighbour is at distance 2.
    GhostStar2,
    GhostBox,
    Inactive,
}

impl NodeClass {
    pub fn is_ghost(self) -> bool {
        matches!(
            self,
            NodeClass::GhostStar1 | NodeClass::GhostStar2 | NodeClass::GhostBox
        )
    }

    /// Internal or ghost: the node carries an unknown with a meaningful value.
    pub fn is_active(self) -> bool {
        self != NodeClass::Inactive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StencilFamily {
    Star,
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborKind {
    StarDist1,
    StarDist2,
    Box,
}

/// Grid neighbours of `node`, truncated silently at the bounding box.
pub fn neighbor_set(node: Node, kind: NeighborKind, spec: &GridSpec) -> Vec<Node> {
    let (l, m) = (node.0 as isize, node.1 as isize);
    let offsets: &[(isize, isize)] = match kind {
        NeighborKind::StarDist1 => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
        NeighborKind::StarDist2 => &[(-2, 0), (2, 0), (0, -2), (0, 2)],
        NeighborKind::Box => &[
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ],
    };
    offsets
        .iter()
        .filter(|(di, dj)| spec.contains(l + di, m + dj))
        .map(|(di, dj)| ((l + di) as usize, (m + dj) as usize))
        .collect()
}

/// Node labels for one stencil family.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    spec: GridSpec,
    labels: Vec<NodeClass>,
    family: StencilFamily,
    /// Set by [`close_ghost_set`] on nodes it promoted.
    promoted: Vec<bool>,
}

impl Classification {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn family(&self) -> StencilFamily {
        self.family
    }

    pub fn labels(&self) -> &[NodeClass] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, (i, j): Node) -> NodeClass {
        self.labels[self.spec.index(i, j)]
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.labels.iter().filter(|&&c| c == class).count()
    }

    /// Ghost nodes in row-major order.
    pub fn ghosts(&self) -> impl Iterator<Item = Node> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_ghost())
            .map(|(k, _)| self.spec.node(k))
    }

    pub fn internal(&self) -> impl Iterator<Item = Node> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == NodeClass::Internal)
            .map(|(k, _)| self.spec.node(k))
    }

    /// Whether the ghost closure promoted `node` from inactive.
    pub fn is_promoted(&self, (i, j): Node) -> bool {
        self.promoted[self.spec.index(i, j)]
    }

    pub fn ghost_count(&self) -> usize {
        self.labels.iter().filter(|c| c.is_ghost()).count()
    }

    /// Label given to inactive nodes pulled into a ghost stencil.
    pub fn promoted_label(&self) -> NodeClass {
        match self.family {
            StencilFamily::Star => NodeClass::GhostStar2,
            StencilFamily::Box => NodeClass::GhostBox,
        }
    }
}

/// Labels every node of `phi`'s grid. Nodes with `phi < 0` are internal;
/// `phi == 0` counts as external.
pub fn classify_points(phi: &GridField, family: StencilFamily) -> Result<Classification> {
    let spec = *phi.spec();
    if let Some(k) = phi.values().iter().position(|v| v.is_nan()) {
        return Err(Error::NonFinite {
            node: spec.node(k),
            value: f64::NAN,
        });
    }
    let internal = |n: Node| phi.at(n) < 0.0;
    let any_internal = |n: Node, kind| neighbor_set(n, kind, &spec).into_iter().any(internal);

    let labels: Vec<NodeClass> = spec
        .nodes()
        .map(|n| {
            if internal(n) {
                return NodeClass::Internal;
            }
            match family {
                StencilFamily::Star => {
                    if any_internal(n, NeighborKind::StarDist1) {
                        NodeClass::GhostStar1
                    } else if any_internal(n, NeighborKind::StarDist2) {
                        NodeClass::GhostStar2
                    } else {
                        NodeClass::Inactive
                    }
                }
                StencilFamily::Box => {
                    if any_internal(n, NeighborKind::Box) {
                        NodeClass::GhostBox
                    } else {
                        NodeClass::Inactive
                    }
                }
            }
        })
        .collect();

    Ok(Classification {
        spec,
        promoted: vec![false; labels.len()],
        labels,
        family,
    })
}

/// Outcome of [`close_ghost_set`].
#[derive(Debug, Clone)]
pub struct Closure {
    pub classification: Classification,
    pub promoted: Vec<Node>,
    pub rounds: usize,
}

/// Promotes inactive nodes found in ghost stencils to ghosts until every
/// ghost stencil covers only internal or ghost nodes.
///
/// `stencil` returns the stencil nodes of a ghost under the current
/// labelling, as signed indices so that escapes from the box can be reported.
pub fn close_ghost_set<F>(classification: Classification, mut stencil: F) -> Result<Closure>
where
    F: FnMut(&Classification, Node) -> Result<Vec<(isize, isize)>>,
{
    let mut cls = classification;
    let spec = cls.spec;
    let mut promoted = Vec::new();
    let mut pending: Vec<Node> = cls.ghosts().collect();
    let mut rounds = 0;

    while !pending.is_empty() {
        let mut fresh = Vec::new();
        for &g in &pending {
            for (i, j) in stencil(&cls, g)? {
                if !spec.contains(i, j) {
                    return Err(Error::ClosureEscaped(g));
                }
                let n = (i as usize, j as usize);
                let k = spec.index(n.0, n.1);
                if cls.labels[k] == NodeClass::Inactive {
                    cls.labels[k] = cls.promoted_label();
                    cls.promoted[k] = true;
                    fresh.push(n);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        rounds += 1;
        fresh.sort_by_key(|&(i, j)| spec.index(i, j));
        promoted.extend_from_slice(&fresh);
        pending = fresh;
    }

    Ok(Closure {
        classification: cls,
        promoted,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_index_examples() {
        let g = GridSpec::new(8).unwrap();
        assert_eq!(g.linear_index(0, 0).unwrap(), 0);
        assert_eq!(g.linear_index(8, 0).unwrap(), 8);
        assert_eq!(g.linear_index(3, 2).unwrap(), 21);
        assert!(g.linear_index(9, 0).is_err());
        assert!(g.linear_index(0, 9).is_err());
    }

    #[test]
    fn linear_index_is_bijective() {
        let g = GridSpec::new(8).unwrap();
        let mut seen = vec![false; g.len()];
        for j in 0..=8 {
            for i in 0..=8 {
                let k = g.linear_index(i, j).unwrap();
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(g.node(k), (i, j));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn grid_rejects_coarse() {
        assert!(matches!(GridSpec::new(7), Err(Error::GridTooCoarse(7))));
        let g = GridSpec::new(20).unwrap();
        assert_eq!(g.h(), 0.1);
        assert_eq!(g.x(0), -1.0);
        assert!((g.x(20) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn neighbor_examples() {
        let g = GridSpec::new(8).unwrap();
        assert_eq!(neighbor_set((4, 4), NeighborKind::StarDist1, &g).len(), 4);
        assert_eq!(neighbor_set((0, 0), NeighborKind::Box, &g).len(), 3);
        let mut n = neighbor_set((1, 0), NeighborKind::StarDist2, &g);
        n.sort();
        assert_eq!(n, vec![(1, 2), (3, 0)]);
    }

    #[test]
    fn field_validation() {
        let g = GridSpec::new(8).unwrap();
        assert!(matches!(
            GridField::new(g, vec![0.0; 3]),
            Err(Error::FieldLength { .. })
        ));
        let mut v = vec![0.0; g.len()];
        v[10] = f64::NAN;
        assert!(matches!(GridField::new(g, v), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn trivial_classifications() {
        let g = GridSpec::new(8).unwrap();
        let inside = GridField::from_fn(g, |_, _| -1.0).unwrap();
        let c = classify_points(&inside, StencilFamily::Star).unwrap();
        assert_eq!(c.count(NodeClass::Internal), g.len());
        assert_eq!(c.ghost_count(), 0);

        let outside = GridField::from_fn(g, |_, _| 1.0).unwrap();
        for fam in [StencilFamily::Star, StencilFamily::Box] {
            let c = classify_points(&outside, fam).unwrap();
            assert_eq!(c.count(NodeClass::Inactive), g.len());
        }
    }

    #[test]
    fn zero_level_is_external() {
        let g = GridSpec::new(8).unwrap();
        // half plane x < 0; the column x = 0 has phi = 0 exactly
        let phi = GridField::from_fn(g, |x, _| x).unwrap();
        let c = classify_points(&phi, StencilFamily::Star).unwrap();
        assert_eq!(c.label((4, 4)), NodeClass::GhostStar1);
        assert_eq!(c.label((5, 4)), NodeClass::GhostStar2);
        assert_eq!(c.label((6, 4)), NodeClass::Inactive);
        assert_eq!(c.label((3, 4)), NodeClass::Internal);
    }

    #[test]
    fn empty_ghost_set_closure_is_identity() {
        let g = GridSpec::new(8).unwrap();
        let phi = GridField::from_fn(g, |_, _| 1.0).unwrap();
        let c = classify_points(&phi, StencilFamily::Box).unwrap();
        let closed = close_ghost_set(c.clone(), |_, _| unreachable!()).unwrap();
        assert_eq!(closed.classification, c);
        assert!(closed.promoted.is_empty());
    }

    #[test]
    fn closure_promotes_and_reports_escape() {
        let g = GridSpec::new(8).unwrap();
        let phi = GridField::from_fn(g, |x, _| x).unwrap();
        let c = classify_points(&phi, StencilFamily::Box).unwrap();
        // stencil reaching one column further out than the ghost layer
        let closed = close_ghost_set(c.clone(), |cls, (i, j)| {
            let _ = cls;
            Ok(if i < 6 {
                vec![(i as isize + 1, j as isize)]
            } else {
                vec![]
            })
        })
        .unwrap();
        assert_eq!(closed.rounds, 2);
        assert_eq!(closed.classification.label((6, 0)), NodeClass::GhostBox);
        assert_eq!(closed.classification.label((7, 0)), NodeClass::Inactive);
        assert!(closed.classification.is_promoted((6, 0)));
        assert!(!closed.classification.is_promoted((4, 0)));

        let err = close_ghost_set(c, |_, (i, j)| Ok(vec![(i as isize + 9, j as isize)]));
        assert!(matches!(err, Err(Error::ClosureEscaped(_))));
    }
}

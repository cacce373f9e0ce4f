//! Test geometries and manufactured solutions.
//!
//! Level-set file format: plain text, the first token is `N`, followed by the
//! `(N + 1)²` node values in row-major order (`i` fastest), separated by any
//! whitespace.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::boundary::{direction, quadrant_signs, upwind_offsets, BcSplit, LevelSet};
use crate::error::{Error, Node, Result};
use crate::geometry::{classify_points, GridField, GridSpec, StencilFamily};

/// Disk with signed-distance level set `|p - c| - R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Circle {
    /// Off-centre disk used by the reference experiments.
    pub fn reference() -> Self {
        Circle {
            center: (2f64.sqrt() / 10.0, -(3f64.sqrt()) / 20.0),
            radius: 5f64.sqrt() / 3.0,
        }
    }

    /// Closest point on the circle to `p`.
    pub fn radial_projection(&self, p: (f64, f64)) -> (f64, f64) {
        let (dx, dy) = (p.0 - self.center.0, p.1 - self.center.1);
        let d = dx.hypot(dy);
        (
            self.center.0 + self.radius * dx / d,
            self.center.1 + self.radius * dy / d,
        )
    }
}

impl LevelSet for Circle {
    fn value(&self, x: f64, y: f64) -> f64 {
        (x - self.center.0).hypot(y - self.center.1) - self.radius
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let d = dx.hypot(dy);
        if d == 0.0 {
            (0.0, 0.0)
        } else {
            (dx / d, dy / d)
        }
    }
}

/// Five-petal flower `r = r1 + r2 sin(5 gamma)`.
///
/// The level set is `r - r1 - r2 P(x - x0, y - y0) / r^5` with
/// `P(X, Y) = Y^5 + 5 X^4 Y - 10 X^2 Y^3` and `r = |(x, y)|` measured from
/// the origin regardless of the offset; with a zero offset `P / r^5` is
/// `sin(5 gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flower {
    pub r1: f64,
    pub r2: f64,
    pub offset: (f64, f64),
}

impl Flower {
    pub fn reference() -> Self {
        Flower {
            r1: 0.5,
            r2: 0.2,
            offset: (0.0, 0.0),
        }
    }

    /// Point of the parametric boundary curve at angle `gamma`.
    pub fn parametric(&self, gamma: f64) -> (f64, f64) {
        let r = self.r1 + self.r2 * (5.0 * gamma).sin();
        (
            r * gamma.cos() + self.offset.0,
            r * gamma.sin() + self.offset.1,
        )
    }

    fn petal_poly(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (xx, yy) = (x - self.offset.0, y - self.offset.1);
        let (x2, y2) = (xx * xx, yy * yy);
        let p = yy * y2 * y2 + 5.0 * x2 * x2 * yy - 10.0 * x2 * yy * y2;
        let px = 20.0 * x2 * xx * yy - 20.0 * xx * yy * y2;
        let py = 5.0 * y2 * y2 + 5.0 * x2 * x2 - 30.0 * x2 * y2;
        (p, px, py)
    }
}

impl LevelSet for Flower {
    fn value(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        if r == 0.0 {
            return -self.r1;
        }
        let (p, _, _) = self.petal_poly(x, y);
        r - self.r1 - self.r2 * p / r.powi(5)
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let r = x.hypot(y);
        if r == 0.0 {
            return (0.0, 0.0);
        }
        let (p, px, py) = self.petal_poly(x, y);
        let r5 = r.powi(5);
        let r7 = r5 * r * r;
        (
            x / r - self.r2 * (px / r5 - 5.0 * p * x / r7),
            y / r - self.r2 * (py / r5 - 5.0 * p * y / r7),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle(Circle),
    Flower(Flower),
    /// Grid samples read from a level-set file; no analytic form.
    FromFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub split: BcSplit,
}

impl DomainSpec {
    pub fn circle() -> Self {
        DomainSpec {
            shape: Shape::Circle(Circle::reference()),
            split: BcSplit::default(),
        }
    }

    pub fn flower() -> Self {
        DomainSpec {
            shape: Shape::Flower(Flower::reference()),
            split: BcSplit::default(),
        }
    }

    pub fn from_file(path: impl Into<PathBuf>) -> Self {
        DomainSpec {
            shape: Shape::FromFile(path.into()),
            split: BcSplit::default(),
        }
    }

    pub fn name(&self) -> String {
        match &self.shape {
            Shape::Circle(_) => "circle".into(),
            Shape::Flower(_) => "flower".into(),
            Shape::FromFile(p) => format!("file:{}", p.display()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::Circle(c) if !(c.radius > 0.0) => Err(Error::invalid(format!(
                "circle radius {} must be positive",
                c.radius
            ))),
            Shape::Flower(f) if !(f.r1 > f.r2 && f.r2 > 0.0) => Err(Error::invalid(format!(
                "flower needs r1 > r2 > 0, got r1 = {}, r2 = {}",
                f.r1, f.r2
            ))),
            _ => Ok(()),
        }
    }

    /// The analytic level set, when the shape has one.
    pub fn levelset(&self) -> Option<&dyn LevelSet> {
        match &self.shape {
            Shape::Circle(c) => Some(c),
            Shape::Flower(f) => Some(f),
            Shape::FromFile(_) => None,
        }
    }
}

pub fn sample_levelset(domain: &DomainSpec, grid: GridSpec) -> Result<GridField> {
    domain.validate()?;
    match &domain.shape {
        Shape::FromFile(path) => {
            let field = read_levelset(path)?;
            if field.spec().n() != grid.n() {
                return Err(Error::invalid(format!(
                    "level-set file {} has N = {}, grid has N = {}",
                    path.display(),
                    field.spec().n(),
                    grid.n()
                )));
            }
            Ok(field)
        }
        _ => {
            let ls = domain.levelset().expect("analytic shape");
            GridField::from_fn(grid, |x, y| ls.value(x, y))
        }
    }
}

pub fn read_levelset(path: &Path) -> Result<GridField> {
    parse_levelset(&fs::read_to_string(path)?)
}

pub fn parse_levelset(text: &str) -> Result<GridField> {
    let mut tokens = text.split_whitespace();
    let n: usize = tokens
        .next()
        .ok_or_else(|| Error::invalid("empty level-set file"))?
        .parse()
        .map_err(|e| Error::invalid(format!("bad grid size: {e}")))?;
    let spec = GridSpec::new(n)?;
    let values = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::invalid(format!("bad level-set value '{t}': {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    GridField::new(spec, values)
}

pub fn write_levelset<W: std::io::Write>(phi: &GridField, mut out: W) -> Result<()> {
    let m = phi.spec().nodes_per_axis();
    writeln!(out, "{}", phi.spec().n())?;
    for row in phi.values().chunks(m) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Checks that the domain leaves room for every ghost stencil.
///
/// Every node that would be a ghost under either stencil family must have
/// quadrant signs and a unit-step upwind stencil inside the box, and every
/// internal node needs its distance-2 star inside the box.
pub fn boundary_margin_check(phi: &GridField) -> Result<()> {
    let spec = *phi.spec();
    let star = classify_points(phi, StencilFamily::Star)?;
    let boxed = classify_points(phi, StencilFamily::Box)?;
    let n = spec.n();
    let mut bad: Vec<Node> = Vec::new();
    for node in spec.nodes() {
        let (i, j) = node;
        if star.label(node) == crate::geometry::NodeClass::Internal {
            if i < 2 || j < 2 || i + 2 > n || j + 2 > n {
                bad.push(node);
            }
            continue;
        }
        if !(star.label(node).is_ghost() || boxed.label(node).is_ghost()) {
            continue;
        }
        let fits = match quadrant_signs(phi, node) {
            Ok((sx, sy)) => upwind_offsets(node, (direction(sx), direction(sy)), (1, 1))
                .iter()
                .all(|&(a, b)| spec.contains(a, b)),
            Err(_) => false,
        };
        if !fits {
            bad.push(node);
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::MarginViolation(bad))
    }
}

/// A manufactured exact solution `u` with `f = -Δu`.
pub trait ExactSolution: Sync {
    fn value(&self, x: f64, y: f64) -> f64;
    fn gradient(&self, x: f64, y: f64) -> (f64, f64);
    fn laplacian(&self, x: f64, y: f64) -> f64;

    fn source(&self, x: f64, y: f64) -> f64 {
        -self.laplacian(x, y)
    }
}

/// `sin(2x) sin(5y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SinProduct;

impl ExactSolution for SinProduct {
    fn value(&self, x: f64, y: f64) -> f64 {
        (2.0 * x).sin() * (5.0 * y).sin()
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (
            2.0 * (2.0 * x).cos() * (5.0 * y).sin(),
            5.0 * (2.0 * x).sin() * (5.0 * y).cos(),
        )
    }

    fn laplacian(&self, x: f64, y: f64) -> f64 {
        -29.0 * self.value(x, y)
    }
}

/// `log(1 + 3xy)`, defined where `1 + 3xy > 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogProduct;

impl ExactSolution for LogProduct {
    fn value(&self, x: f64, y: f64) -> f64 {
        (1.0 + 3.0 * x * y).ln()
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let d = 1.0 + 3.0 * x * y;
        (3.0 * y / d, 3.0 * x / d)
    }

    fn laplacian(&self, x: f64, y: f64) -> f64 {
        let d = 1.0 + 3.0 * x * y;
        -9.0 * (x * x + y * y) / (d * d)
    }
}

/// Bivariate polynomial `sum a_pq x^p y^q`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<(u32, u32, f64)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Self {
        Polynomial { terms }
    }

    /// Parses lines `p q coefficient`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::invalid(format!("polynomial line {}: '{line}'", lineno + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            terms.push((
                f[0].parse().map_err(|_| bad())?,
                f[1].parse().map_err(|_| bad())?,
                f[2].parse().map_err(|_| bad())?,
            ));
        }
        if terms.is_empty() {
            return Err(Error::invalid("polynomial has no terms"));
        }
        Ok(Polynomial { terms })
    }
}

fn mono(x: f64, p: u32) -> f64 {
    x.powi(p as i32)
}

fn dmono(x: f64, p: u32) -> f64 {
    if p == 0 {
        0.0
    } else {
        p as f64 * x.powi(p as i32 - 1)
    }
}

fn ddmono(x: f64, p: u32) -> f64 {
    if p < 2 {
        0.0
    } else {
        (p * (p - 1)) as f64 * x.powi(p as i32 - 2)
    }
}

impl ExactSolution for Polynomial {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(p, q, a)| a * mono(x, p) * mono(y, q))
            .sum()
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(gx, gy), &(p, q, a)| {
            (
                gx + a * dmono(x, p) * mono(y, q),
                gy + a * mono(x, p) * dmono(y, q),
            )
        })
    }

    fn laplacian(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(p, q, a)| a * (ddmono(x, p) * mono(y, q) + mono(x, p) * ddmono(y, q)))
            .sum()
    }
}

/// Named manufactured solutions.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionId {
    SinProduct,
    LogProduct,
    Custom(Polynomial),
}

impl SolutionId {
    pub fn solution(&self) -> &dyn ExactSolution {
        match self {
            SolutionId::SinProduct => &SinProduct,
            SolutionId::LogProduct => &LogProduct,
            SolutionId::Custom(p) => p,
        }
    }

    /// The solution paired with `domain` in the reference experiments.
    pub fn default_for(domain: &DomainSpec) -> Self {
        match domain.shape {
            Shape::Flower(_) => SolutionId::LogProduct,
            _ => SolutionId::SinProduct,
        }
    }
}

impl fmt::Display for SolutionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolutionId::SinProduct => f.write_str("sin-product"),
            SolutionId::LogProduct => f.write_str("log-product"),
            SolutionId::Custom(_) => f.write_str("custom"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_values() {
        let c = Circle::reference();
        assert!((c.value(c.center.0, c.center.1) + c.radius).abs() < 1e-15);
        assert!(c.value(c.center.0 + c.radius, c.center.1).abs() < 1e-15);
    }

    #[test]
    fn circle_is_signed_distance() {
        let c = Circle::reference();
        let e = 1e-6;
        for k in 0..50 {
            let t = k as f64 * 0.37;
            let (x, y) = (0.9 * t.cos(), 0.8 * t.sin());
            let gx = (c.value(x + e, y) - c.value(x - e, y)) / (2.0 * e);
            let gy = (c.value(x, y + e) - c.value(x, y - e)) / (2.0 * e);
            assert!((gx.hypot(gy) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn flower_parametric_on_zero_set() {
        let f = Flower::reference();
        for k in 0..360 {
            let g = (k as f64).to_radians();
            let (x, y) = f.parametric(g);
            assert!(f.value(x, y).abs() < 1e-12, "gamma = {k} deg");
        }
    }

    #[test]
    fn flower_gradient_matches_differences() {
        let f = Flower::reference();
        let e = 1e-6;
        for &(x, y) in &[(0.3, 0.4), (-0.5, 0.2), (0.1, -0.6), (-0.7, -0.1)] {
            let (gx, gy) = f.gradient(x, y);
            let fx = (f.value(x + e, y) - f.value(x - e, y)) / (2.0 * e);
            let fy = (f.value(x, y + e) - f.value(x, y - e)) / (2.0 * e);
            assert!((gx - fx).abs() < 1e-7 && (gy - fy).abs() < 1e-7);
        }
    }

    #[test]
    fn validation() {
        let mut d = DomainSpec::circle();
        d.shape = Shape::Circle(Circle {
            center: (0.0, 0.0),
            radius: -1.0,
        });
        assert!(d.validate().is_err());
        d.shape = Shape::Flower(Flower {
            r1: 0.2,
            r2: 0.5,
            offset: (0.0, 0.0),
        });
        assert!(d.validate().is_err());
    }

    #[test]
    fn margin_examples() {
        let g = GridSpec::new(20).unwrap();
        let phi = sample_levelset(&DomainSpec::circle(), g).unwrap();
        boundary_margin_check(&phi).unwrap();
        let phi = sample_levelset(&DomainSpec::flower(), g).unwrap();
        boundary_margin_check(&phi).unwrap();

        let big = DomainSpec {
            shape: Shape::Circle(Circle {
                center: (0.0, 0.0),
                radius: 0.99,
            }),
            split: BcSplit::default(),
        };
        let phi = sample_levelset(&big, g).unwrap();
        assert!(matches!(
            boundary_margin_check(&phi),
            Err(Error::MarginViolation(_))
        ));
    }

    #[test]
    fn levelset_file_roundtrip_and_shape_check() {
        let g = GridSpec::new(8).unwrap();
        let phi = sample_levelset(&DomainSpec::circle(), g).unwrap();
        let mut buf = Vec::new();
        write_levelset(&phi, &mut buf).unwrap();
        let back = parse_levelset(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, phi);
        assert!(matches!(
            parse_levelset("8\n1 2 3"),
            Err(Error::FieldLength { .. })
        ));
    }

    #[test]
    fn manufactured_laplacians() {
        let e = 1e-4;
        let sols: [&dyn ExactSolution; 3] = [
            &SinProduct,
            &LogProduct,
            &Polynomial::new(vec![(3, 1, 1.0), (0, 2, -2.0)]),
        ];
        for u in sols {
            let (x, y) = (0.21, -0.33);
            let lap =
                (u.value(x + e, y) + u.value(x - e, y) + u.value(x, y + e) + u.value(x, y - e)
                    - 4.0 * u.value(x, y))
                    / (e * e);
            assert!((lap - u.laplacian(x, y)).abs() < 1e-5);
            let (gx, gy) = u.gradient(x, y);
            assert!((gx - (u.value(x + e, y) - u.value(x - e, y)) / (2.0 * e)).abs() < 1e-6);
            assert!((gy - (u.value(x, y + e) - u.value(x, y - e)) / (2.0 * e)).abs() < 1e-6);
        }
    }

    #[test]
    fn polynomial_parse() {
        let p = Polynomial::parse("# u = x^2 - y\n2 0 1.0\n0 1 -1\n").unwrap();
        assert_eq!(p.value(2.0, 3.0), 1.0);
        assert!(Polynomial::parse("1 2").is_err());
    }
}

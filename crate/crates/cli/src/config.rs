//! Run configuration: built-in defaults, then a key-value file, then flags.
//!
//! File format: one `key = value` per line, `#` starts a comment, keys are
//! the long flag names (`source-mode` and `source_mode` are the same key).
//! Boolean keys take `true`/`false`.

use std::fmt;
use std::path::{Path, PathBuf};

use ghost_elliptic::{
    sample_levelset, BcSplit, DomainSpec, ExactSolution, GridSpec, Method, Polynomial,
    ProjectionMode, SolutionId, SolveOptions, SolverKind, SourceMode, StudyConfig,
};

pub const OUTDIR_ENV: &str = "GHOST_ELLIPTIC_OUTDIR";
pub const DEFAULT_NS: [usize; 4] = [20, 40, 80, 160];

/// A schema violation in a config file or flag; reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainChoice {
    Circle,
    Flower,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionChoice {
    SinProduct,
    LogProduct,
    /// Polynomial terms read from a file, one `p q coefficient` per line.
    Poly(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emit {
    pub csv: bool,
    pub svg: bool,
    pub matrix_dump: bool,
    pub ghost_diag: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub domain: DomainChoice,
    /// `None`: the solution paired with the domain.
    pub solution: Option<SolutionChoice>,
    pub ns: Vec<usize>,
    pub tol: f64,
    pub solver: SolverKind,
    pub source_mode: SourceMode,
    pub projection: ProjectionMode,
    pub split: BcSplit,
    pub outdir: Option<PathBuf>,
    pub emit: Emit,
    pub timings: bool,
    pub condition: bool,
    pub margin_check: bool,
    pub tolerate_failures: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::M3,
            domain: DomainChoice::Circle,
            solution: None,
            ns: DEFAULT_NS.to_vec(),
            tol: 1e-12,
            solver: SolverKind::Direct,
            source_mode: SourceMode::Extrapolate,
            projection: ProjectionMode::Grid,
            split: BcSplit::default(),
            outdir: None,
            emit: Emit {
                csv: true,
                svg: false,
                matrix_dump: false,
                ghost_diag: false,
            },
            timings: false,
            condition: true,
            margin_check: true,
            tolerate_failures: false,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(format!("{key}: expected true or false, got '{v}'"))),
    }
}

pub fn parse_ns(v: &str) -> Result<Vec<usize>, ConfigError> {
    let ns = v
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("ns: '{s}' is not a grid size")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ns)
}

fn parse_split(v: &str) -> Result<BcSplit, ConfigError> {
    match v {
        "dirichlet" => Ok(BcSplit::AllDirichlet),
        "neumann" => Ok(BcSplit::AllNeumann),
        _ => {
            let t = v.strip_prefix("x<=").unwrap_or(v);
            t.parse().map(BcSplit::XThreshold).map_err(|_| {
                bad(format!(
                    "split: expected dirichlet, neumann or x<=T, got '{v}'"
                ))
            })
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().replace('_', "-").to_ascii_lowercase();
        let v = value.trim();
        match key.as_str() {
            "method" => self.method = v.parse().map_err(|e| bad(format!("method: {e}")))?,
            "domain" => {
                self.domain = match v {
                    "circle" => DomainChoice::Circle,
                    "flower" => DomainChoice::Flower,
                    _ => match v.strip_prefix("file:") {
                        Some(p) if !p.is_empty() => DomainChoice::File(p.into()),
                        _ => {
                            return Err(bad(format!(
                                "domain: expected circle, flower or file:PATH, got '{v}'"
                            )))
                        }
                    },
                }
            }
            "solution" => {
                self.solution = match v {
                    "auto" => None,
                    "sin-product" => Some(SolutionChoice::SinProduct),
                    "log-product" => Some(SolutionChoice::LogProduct),
                    _ => match v.strip_prefix("poly:") {
                        Some(p) if !p.is_empty() => Some(SolutionChoice::Poly(p.into())),
                        _ => return Err(bad(format!("solution: unknown value '{v}'"))),
                    },
                }
            }
            "ns" => self.ns = parse_ns(v)?,
            "tol" => {
                self.tol = v
                    .parse()
                    .ok()
                    .filter(|t: &f64| *t > 0.0 && t.is_finite())
                    .ok_or_else(|| bad(format!("tol: expected a positive number, got '{v}'")))?
            }
            "solver" => {
                self.solver = match v {
                    "direct" => SolverKind::Direct,
                    "gmres" | "iterative" => SolverKind::Gmres,
                    _ => return Err(bad(format!("solver: expected direct or gmres, got '{v}'"))),
                }
            }
            "source-mode" => {
                self.source_mode = match v {
                    "extrapolate" => SourceMode::Extrapolate,
                    "analytic" => SourceMode::Analytic,
                    _ => {
                        return Err(bad(format!(
                            "source-mode: expected extrapolate or analytic, got '{v}'"
                        )))
                    }
                }
            }
            "projection" => {
                self.projection = match v {
                    "grid" => ProjectionMode::Grid,
                    "exact" => ProjectionMode::Exact,
                    _ => {
                        return Err(bad(format!(
                            "projection: expected grid or exact, got '{v}'"
                        )))
                    }
                }
            }
            "split" => self.split = parse_split(v)?,
            "outdir" | "out" => self.outdir = Some(v.into()),
            "csv" => self.emit.csv = parse_bool(&key, v)?,
            "svg" => self.emit.svg = parse_bool(&key, v)?,
            "matrix-dump" => self.emit.matrix_dump = parse_bool(&key, v)?,
            "ghost-diag" => self.emit.ghost_diag = parse_bool(&key, v)?,
            "timings" => self.timings = parse_bool(&key, v)?,
            "condition" => self.condition = parse_bool(&key, v)?,
            "margin-check" => self.margin_check = parse_bool(&key, v)?,
            "tolerate-failures" => self.tolerate_failures = parse_bool(&key, v)?,
            _ => return Err(bad(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every setting of a config file, in order.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
            .map_err(|e| bad(format!("{}: {}", path.display(), e.0)))
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected 'key = value'", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| bad(format!("line {}: {}", lineno + 1, e.0)))?;
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> DomainSpec {
        let mut d = match &self.domain {
            DomainChoice::Circle => DomainSpec::circle(),
            DomainChoice::Flower => DomainSpec::flower(),
            DomainChoice::File(p) => DomainSpec::from_file(p.clone()),
        };
        d.split = self.split;
        d
    }

    pub fn solution_id(&self) -> Result<SolutionId, ConfigError> {
        Ok(match &self.solution {
            None => SolutionId::default_for(&self.domain_spec()),
            Some(SolutionChoice::SinProduct) => SolutionId::SinProduct,
            Some(SolutionChoice::LogProduct) => SolutionId::LogProduct,
            Some(SolutionChoice::Poly(p)) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| bad(format!("solution: cannot read {}: {e}", p.display())))?;
                SolutionId::Custom(
                    Polynomial::parse(&text).map_err(|e| bad(format!("solution: {e}")))?,
                )
            }
        })
    }

    /// Name used in reports and file names for the exact solution.
    pub fn solution_name(&self) -> String {
        match &self.solution {
            Some(SolutionChoice::Poly(p)) => format!(
                "poly-{}",
                p.file_stem()
                    .map_or("custom".into(), |s| s.to_string_lossy().into_owned())
            ),
            _ => self
                .solution_id()
                .map_or("custom".into(), |s| s.to_string()),
        }
    }

    /// Output directory: explicit setting, then the environment, then `.`.
    pub fn resolved_outdir(&self) -> PathBuf {
        self.outdir
            .clone()
            .or_else(|| std::env::var_os(OUTDIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn study_config(&self) -> StudyConfig {
        StudyConfig {
            projection_mode: self.projection,
            source_mode: self.source_mode,
            solve: SolveOptions {
                kind: self.solver,
                tol: self.tol,
                ..SolveOptions::default()
            },
            condition: self.condition,
            margin_check: self.margin_check,
            ..StudyConfig::default()
        }
    }

    /// Schema checks plus a sampling check that the exact solution is
    /// defined inside the domain.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ns.is_empty() {
            return Err(bad("ns: the list of grid sizes is empty"));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad(format!("ns: {:?} is not strictly ascending", self.ns)));
        }
        if let Some(&n) = self.ns.iter().find(|&&n| n < GridSpec::MIN_N) {
            return Err(bad(format!(
                "ns: N = {n} is below the minimum of {}",
                GridSpec::MIN_N
            )));
        }
        let domain = self.domain_spec();
        domain.validate().map_err(|e| bad(format!("domain: {e}")))?;
        let id = self.solution_id()?;
        if let DomainChoice::File(_) = self.domain {
            // a file holds a single grid; every N must match it
            if self.ns.len() != 1 {
                return Err(bad("domain: a level-set file fixes N, give exactly one N"));
            }
        }
        let n = *self.ns.last().unwrap();
        let grid = GridSpec::new(n).map_err(|e| bad(e.to_string()))?;
        let phi = sample_levelset(&domain, grid).map_err(|e| bad(format!("domain: {e}")))?;
        let sol: &dyn ExactSolution = id.solution();
        if let Some(k) = grid.nodes().find(|&k| {
            let (x, y) = grid.point(k);
            phi.at(k) < 0.0 && !sol.value(x, y).is_finite()
        }) {
            return Err(bad(format!(
                "solution {} is undefined inside domain {} (at node {k:?}, N = {n})",
                id,
                domain.name()
            )));
        }
        Ok(())
    }

    /// File-name stem `METHOD_DOMAIN`.
    pub fn stem(&self) -> String {
        let domain = match &self.domain {
            DomainChoice::Circle => "circle".to_string(),
            DomainChoice::Flower => "flower".to_string(),
            DomainChoice::File(p) => format!(
                "file-{}",
                p.file_stem()
                    .map_or("levelset".into(), |s| s.to_string_lossy().into_owned())
            ),
        };
        format!("{}_{}", self.method, domain)
    }
}

//! `ghost-elliptic`: convergence and conditioning studies from the command line.
//!
//! Exit status: 0 on success, 1 when a level fails (unless failures are
//! tolerated) or on I/O errors, 2 on configuration errors.

// `!(a > b)` comparisons deliberately send NaN down the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod compare;
mod config;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "ghost-elliptic",
    version,
    about = "Fourth-order ghost-point Poisson solver on level-set domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study for one method.
    Run {
        /// Key-value configuration file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run several methods on the same problem and compare them.
    Compare {
        /// Member configuration file (repeatable). With --methods, at most
        /// one file, used as the shared base.
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        /// Comma-separated methods, e.g. M2,M3.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Regenerate the charts of a study CSV.
    Plot {
        /// Study CSV written by `run`.
        csv: PathBuf,
        /// Directory for the SVG files (default: next to the CSV).
        #[arg(long)]
        outdir: Option<PathBuf>,
    },
}

/// Flags shared by `run` and `compare`, mirroring the configuration keys.
#[derive(Args, Default)]
struct Overrides {
    /// M1, M2 or M3.
    #[arg(long)]
    method: Option<String>,
    /// circle, flower or file:PATH.
    #[arg(long)]
    domain: Option<String>,
    /// sin-product, log-product, poly:PATH or auto.
    #[arg(long)]
    solution: Option<String>,
    /// Grid sizes, e.g. 20,40,80,160.
    #[arg(long, visible_alias = "Ns")]
    ns: Option<String>,
    /// Relative residual target of the linear solve.
    #[arg(long)]
    tol: Option<String>,
    /// direct or gmres.
    #[arg(long)]
    solver: Option<String>,
    /// extrapolate or analytic.
    #[arg(long)]
    source_mode: Option<String>,
    /// grid or exact.
    #[arg(long)]
    projection: Option<String>,
    /// dirichlet, neumann or x<=T.
    #[arg(long)]
    split: Option<String>,
    /// Output directory (default: config, then $GHOST_ELLIPTIC_OUTDIR, then .).
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Do not write the study CSV.
    #[arg(long)]
    no_csv: bool,
    /// Write error and condition charts.
    #[arg(long)]
    svg: bool,
    /// Write each matrix and right-hand side.
    #[arg(long)]
    matrix_dump: bool,
    /// Write per-ghost diagnostics.
    #[arg(long)]
    ghost_diag: bool,
    /// Record wall-clock solve times (otherwise zero, for reproducible output).
    #[arg(long)]
    timings: bool,
    /// Skip the condition estimate.
    #[arg(long)]
    no_condition: bool,
    /// Skip the check that the domain stays clear of the box edge.
    #[arg(long)]
    no_margin_check: bool,
    /// Exit 0 even when some levels fail.
    #[arg(long)]
    tolerate_failures: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        let pairs = [
            ("method", &self.method),
            ("domain", &self.domain),
            ("solution", &self.solution),
            ("ns", &self.ns),
            ("tol", &self.tol),
            ("solver", &self.solver),
            ("source-mode", &self.source_mode),
            ("projection", &self.projection),
            ("split", &self.split),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        if let Some(o) = &self.outdir {
            cfg.outdir = Some(o.clone());
        }
        let flags = [
            ("csv", self.no_csv, "false"),
            ("svg", self.svg, "true"),
            ("matrix-dump", self.matrix_dump, "true"),
            ("ghost-diag", self.ghost_diag, "true"),
            ("timings", self.timings, "true"),
            ("condition", self.no_condition, "false"),
            ("margin-check", self.no_margin_check, "false"),
            ("tolerate-failures", self.tolerate_failures, "true"),
        ];
        for (k, on, v) in flags {
            if on {
                cfg.set(k, v)?;
            }
        }
        Ok(())
    }
}

fn load(path: Option<&PathBuf>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        cfg.apply_file(p)?;
    }
    overrides.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(config: Option<PathBuf>, overrides: Overrides) -> Result<ExitCode> {
    let cfg = load(config.as_ref(), &overrides)?;
    let out = run::run_study(&cfg, true)?;
    print!("{}", run::summary(&out.report));
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    if !out.report.failures.is_empty() && !cfg.tolerate_failures {
        eprintln!(
            "error: {} of {} levels failed",
            out.report.failures.len(),
            cfg.ns.len()
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(
    configs: Vec<PathBuf>,
    methods: Vec<String>,
    overrides: Overrides,
) -> Result<ExitCode> {
    let members: Vec<RunConfig> = if methods.is_empty() {
        configs
            .iter()
            .map(|p| load(Some(p), &overrides))
            .collect::<Result<_, _>>()?
    } else {
        if configs.len() > 1 {
            return Err(ConfigError("--methods takes at most one --config base".into()).into());
        }
        if overrides.method.is_some() {
            return Err(ConfigError("--method conflicts with --methods".into()).into());
        }
        let base = load(configs.first(), &overrides)?;
        methods
            .iter()
            .map(|m| {
                let mut c = base.clone();
                c.set("method", m)?;
                Ok(c)
            })
            .collect::<Result<_, ConfigError>>()?
    };
    compare::check_members(&members)?;

    // members are independent; run them side by side
    let results: Vec<Result<run::StudyOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = members
            .iter()
            .map(|c| s.spawn(move || run::run_study(c, false)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("study thread panicked"))
            .collect()
    });
    let mut done = Vec::new();
    for (c, r) in members.iter().zip(results) {
        done.push((c.clone(), r?.report));
    }
    for (_, r) in &done {
        print!("{}", run::summary(r));
    }
    print!("{}", compare::report_text(&done));

    let base = &members[0];
    if base.emit.csv {
        let outdir = base.resolved_outdir();
        std::fs::create_dir_all(&outdir)
            .with_context(|| format!("cannot create output directory {}", outdir.display()))?;
        let labels = compare::label_members(&done).join("-");
        let stem = base.stem();
        let domain = stem.split_once('_').map_or(stem.as_str(), |s| s.1);
        let p = outdir.join(format!("compare_{labels}_{domain}.csv"));
        std::fs::write(&p, compare::merged_csv(&done)?)
            .with_context(|| format!("cannot write {}", p.display()))?;
        println!("wrote {}", p.display());
    }
    let failed = done.iter().any(|(_, r)| !r.failures.is_empty());
    if failed && !members.iter().all(|c| c.tolerate_failures) {
        eprintln!("error: some members failed at one or more levels");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(csv: PathBuf, outdir: Option<PathBuf>) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(&csv).with_context(|| format!("cannot read {}", csv.display()))?;
    let outdir = outdir.unwrap_or_else(|| {
        csv.parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), PathBuf::from)
    });
    std::fs::create_dir_all(&outdir)?;
    let stem = csv
        .file_stem()
        .map_or("study".into(), |s| s.to_string_lossy().into_owned());
    for f in run::write_charts(&text, &outdir, &stem)? {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => cmd_run(config, overrides),
        Command::Compare {
            configs,
            methods,
            overrides,
        } => cmd_compare(configs, methods, overrides),
        Command::Plot { csv, outdir } => cmd_plot(csv, outdir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

//! Executes one configured study and writes its artefacts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ghost_elliptic::{run_convergence_study_with, write_ghost_diagnostics, ConvergenceReport};

use crate::config::RunConfig;
use crate::svg;

pub struct StudyOutput {
    pub report: ConvergenceReport,
    pub files: Vec<PathBuf>,
}

/// Runs the study. Artefacts go to `outdir` only when `write` is set
/// (comparisons write their own merged table).
pub fn run_study(cfg: &RunConfig, write: bool) -> Result<StudyOutput> {
    let domain = cfg.domain_spec();
    let id = cfg.solution_id()?;
    let outdir = cfg.resolved_outdir();
    let stem = cfg.stem();
    let mut files = Vec::new();
    if write {
        fs::create_dir_all(&outdir)
            .with_context(|| format!("cannot create output directory {}", outdir.display()))?;
    }

    let report = run_convergence_study_with(
        cfg.method,
        &domain,
        id.solution(),
        &cfg.solution_name(),
        &cfg.ns,
        &cfg.study_config(),
        |run| {
            if !write {
                return Ok(());
            }
            let n = run.row.n;
            if cfg.emit.matrix_dump {
                let m = outdir.join(format!("{stem}_N{n}_matrix.txt"));
                run.assembled
                    .system
                    .write_coordinate(BufWriter::new(File::create(&m)?))?;
                let r = outdir.join(format!("{stem}_N{n}_rhs.txt"));
                run.assembled
                    .system
                    .write_rhs(BufWriter::new(File::create(&r)?))?;
            }
            if cfg.emit.ghost_diag {
                let g = outdir.join(format!("{stem}_N{n}_ghosts.csv"));
                write_ghost_diagnostics(&run.assembled.records, BufWriter::new(File::create(&g)?))?;
            }
            Ok(())
        },
    )?;
    if write {
        for n in report.ns() {
            if cfg.emit.matrix_dump {
                files.push(outdir.join(format!("{stem}_N{n}_matrix.txt")));
                files.push(outdir.join(format!("{stem}_N{n}_rhs.txt")));
            }
            if cfg.emit.ghost_diag {
                files.push(outdir.join(format!("{stem}_N{n}_ghosts.csv")));
            }
        }
    }

    let mut buf = Vec::new();
    report.write_csv(&mut buf, cfg.timings)?;
    let csv_text = String::from_utf8(buf).expect("CSV is UTF-8");
    if write && cfg.emit.csv {
        let p = outdir.join(format!("{stem}.csv"));
        fs::write(&p, &csv_text).with_context(|| format!("cannot write {}", p.display()))?;
        files.push(p);
    }
    if write && cfg.emit.svg {
        files.extend(write_charts(&csv_text, &outdir, &stem)?);
    }
    Ok(StudyOutput { report, files })
}

/// Writes `{stem}_errors.svg` and `{stem}_cond.svg` from study CSV text.
pub fn write_charts(csv_text: &str, outdir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let table = svg::parse_study_csv(csv_text)?;
    let mut files = Vec::new();
    for (kind, doc) in svg::study_charts(&table) {
        let p = outdir.join(format!("{stem}_{kind}.svg"));
        fs::write(&p, doc).with_context(|| format!("cannot write {}", p.display()))?;
        files.push(p);
    }
    Ok(files)
}

pub fn summary(report: &ConvergenceReport) -> String {
    let mut s = format!(
        "{} on {} with u = {}\n{:>6} {:>11} {:>11} {:>11} {:>11} {:>11}\n",
        report.method,
        report.domain,
        report.solution,
        "N",
        "e1_u",
        "einf_u",
        "e1_grad",
        "einf_grad",
        "cond_est"
    );
    let mut lines: Vec<(usize, String)> = report
        .rows
        .iter()
        .map(|r| {
            let cond = r.cond_est.map_or("-".to_string(), |k| format!("{k:.3e}"));
            (
                r.n,
                format!(
                    "{:>6} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11}\n",
                    r.n, r.e1_u, r.einf_u, r.e1_grad, r.einf_grad, cond
                ),
            )
        })
        .collect();
    for f in &report.failures {
        lines.push((f.n, format!("{:>6} failed: {}\n", f.n, f.message)));
    }
    lines.sort_by_key(|l| l.0);
    for (_, l) in lines {
        s.push_str(&l);
    }
    match report.orders() {
        Some(o) => {
            s.push_str(&format!(
                "{:>6} {:>11.2} {:>11.2} {:>11.2} {:>11.2} {:>11}\n",
                "order",
                o.e1_u,
                o.einf_u,
                o.e1_grad,
                o.einf_grad,
                o.cond_slope
                    .map_or("-".to_string(), |g| format!("N^{g:.2}"))
            ));
        }
        None => s.push_str("order: fewer than three successful levels\n"),
    }
    s
}

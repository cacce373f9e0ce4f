//! Log-log line charts drawn from a study CSV.
//!
//! Plots are derived from the CSV text alone, so they can be regenerated
//! offline with the `plot` subcommand.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 150.0, 40.0, 60.0); // left, right, top, bottom
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Level rows of a study CSV, with `NaN` for failed levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub label: String,
    pub ns: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl StudyTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.0 == name)
            .map(|c| c.1.as_slice())
    }
}

pub fn parse_study_csv(text: &str) -> Result<StudyTable> {
    let mut rd = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = rd.headers().context("CSV header")?.clone();
    let idx = |name: &str| headers.iter().position(|h| h == name);
    let n_col = idx("N").context("CSV has no N column")?;
    let value_cols: Vec<(String, usize)> = ["e1_u", "einf_u", "e1_grad", "einf_grad", "cond_est"]
        .iter()
        .filter_map(|c| idx(c).map(|i| (c.to_string(), i)))
        .collect();
    if value_cols.is_empty() {
        bail!("CSV has none of the error columns");
    }
    let mut label = String::new();
    let mut ns = Vec::new();
    let mut columns: Vec<(String, Vec<f64>)> = value_cols
        .iter()
        .map(|(n, _)| (n.clone(), Vec::new()))
        .collect();
    for rec in rd.records() {
        let rec = rec.context("CSV record")?;
        let Ok(n) = rec[n_col].parse::<f64>() else {
            continue; // footer rows
        };
        if label.is_empty() {
            label = [idx("method"), idx("domain")]
                .iter()
                .flatten()
                .map(|&i| rec[i].to_string())
                .collect::<Vec<_>>()
                .join(" ");
        }
        ns.push(n);
        for ((_, i), (_, col)) in value_cols.iter().zip(columns.iter_mut()) {
            col.push(rec[*i].parse().unwrap_or(f64::NAN));
        }
    }
    if ns.is_empty() {
        bail!("CSV has no level rows");
    }
    Ok(StudyTable { label, ns, columns })
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        let t = (x.log10() - self.x.0) / (self.x.1 - self.x.0);
        MARGIN.0 + t * (WIDTH - MARGIN.0 - MARGIN.1)
    }

    fn py(&self, y: f64) -> f64 {
        let t = (y.log10() - self.y.0) / (self.y.1 - self.y.0);
        HEIGHT - MARGIN.3 - t * (HEIGHT - MARGIN.2 - MARGIN.3)
    }
}

/// Log-log chart of `series` against `xs`. Each guide `(slope, anchor)`
/// draws a dashed line `y ∝ x^slope` through `anchor`.
pub fn loglog(
    title: &str,
    y_label: &str,
    xs: &[f64],
    series: &[(&str, &[f64])],
    guides: &[(f64, (f64, f64))],
) -> String {
    let finite = |v: &f64| v.is_finite() && *v > 0.0;
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.1.iter().copied())
        .filter(finite)
        .collect();
    let xr = xs
        .iter()
        .copied()
        .filter(finite)
        .fold((f64::MAX, f64::MIN), |r, v| (r.0.min(v), r.1.max(v)));
    let yr = ys
        .iter()
        .fold((f64::MAX, f64::MIN), |r, v| (r.0.min(*v), r.1.max(*v)));
    let (x0, x1) = if xr.0 <= xr.1 {
        (xr.0.log10().floor(), xr.1.log10().ceil())
    } else {
        (0.0, 1.0)
    };
    let (y0, y1) = if yr.0 <= yr.1 {
        (yr.0.log10().floor(), yr.1.log10().ceil())
    } else {
        (0.0, 1.0)
    };
    let axes = Axes {
        x: (x0, if x1 > x0 { x1 } else { x0 + 1.0 }),
        y: (y0, if y1 > y0 { y1 } else { y0 + 1.0 }),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (l, r, t, b) = (MARGIN.0, WIDTH - MARGIN.1, MARGIN.2, HEIGHT - MARGIN.3);
    let _ = writeln!(
        s,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for d in (axes.x.0 as i32)..=(axes.x.1 as i32) {
        let x = axes.px(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{t}" x2="{x:.1}" y2="{b}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"#,
            b + 16.0
        );
    }
    for d in (axes.y.0 as i32)..=(axes.y.1 as i32) {
        let y = axes.py(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{l}" y1="{y:.1}" x2="{r}" y2="{y:.1}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
            l - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">N</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        s,
        r#"<clipPath id="plot"><rect x="{l}" y="{t}" width="{}" height="{}"/></clipPath>"#,
        r - l,
        b - t
    );

    let mut legend_y = t + 10.0;
    for (slope, (ax, ay)) in guides {
        if !(ax.is_finite() && ay.is_finite() && *ax > 0.0 && *ay > 0.0) {
            continue;
        }
        let (xa, xb) = (10f64.powf(axes.x.0), 10f64.powf(axes.x.1));
        let y_at = |x: f64| ay * (x / ax).powf(*slope);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#555" stroke-dasharray="6 4" clip-path="url(#plot)"/>"##,
            axes.px(xa),
            axes.py(y_at(xa)),
            axes.px(xb),
            axes.py(y_at(xb))
        );
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="#555" stroke-dasharray="6 4"/><text x="{}" y="{}">slope {slope}</text>"##,
            r + 10.0,
            r + 35.0,
            r + 40.0,
            legend_y + 4.0
        );
        legend_y += 18.0;
    }
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys.iter())
            .filter(|(x, y)| finite(x) && finite(y))
            .map(|(x, y)| (axes.px(*x), axes.py(*y)))
            .collect();
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for (x, y) in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.1}" cy="{y:.1}" r="3.5" fill="{color}"/>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{legend_y}" r="3.5" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            r + 22.0,
            r + 40.0,
            legend_y + 4.0,
            escape(name)
        );
        legend_y += 18.0;
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Error and condition-number charts for one study table.
pub fn study_charts(table: &StudyTable) -> Vec<(&'static str, String)> {
    let errors: Vec<(&str, &[f64])> = ["e1_u", "einf_u", "e1_grad", "einf_grad"]
        .iter()
        .filter_map(|c| table.column(c).map(|v| (*c, v)))
        .collect();
    let mut out = Vec::new();
    if !errors.is_empty() {
        // anchor the guides on the first finite e1_u value
        let anchor = errors[0]
            .1
            .iter()
            .zip(&table.ns)
            .find(|(v, _)| v.is_finite() && **v > 0.0)
            .map(|(v, n)| (*n, *v))
            .unwrap_or((f64::NAN, f64::NAN));
        out.push((
            "errors",
            loglog(
                &format!("{} relative errors", table.label),
                "relative error",
                &table.ns,
                &errors,
                &[(-2.0, anchor), (-4.0, anchor)],
            ),
        ));
    }
    if let Some(k) = table.column("cond_est") {
        if k.iter().any(|v| v.is_finite()) {
            let anchor = k
                .iter()
                .zip(&table.ns)
                .find(|(v, _)| v.is_finite() && **v > 0.0)
                .map(|(v, n)| (*n, *v))
                .unwrap_or((f64::NAN, f64::NAN));
            out.push((
                "cond",
                loglog(
                    &format!("{} condition estimate", table.label),
                    "kappa_1",
                    &table.ns,
                    &[("cond_est", k)],
                    &[(2.0, anchor), (4.0, anchor)],
                ),
            ));
        }
    }
    out
}

//! Acceptance runner: prints one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no test harness). The exit status is zero unless
//! `ACCEPTANCE_STRICT=1` is set, in which case any FAIL makes it nonzero;
//! the printed verdicts are the record either way.

mod common;

use std::time::{Duration, Instant};

use ghost_elliptic::{
    biquartic_eval, biquartic_grad, build_ghost_records, classify_points, fit_order,
    quartic_derivative_weights, quartic_value_weights, run_convergence_study, sample_levelset,
    BoundaryOptions, Circle, ConvergenceReport, DomainSpec, Flower, GridSpec, LevelSet,
    LevelSetSource, LogProduct, Method, SinProduct, StudyConfig, StudyRow,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NS: [usize; 4] = [20, 40, 80, 160];
const STUDY_BUDGET: Duration = Duration::from_secs(120);

struct Study {
    report: ConvergenceReport,
    elapsed: Duration,
}

fn study(method: Method, flower: bool) -> Study {
    let (domain, report_name) = if flower {
        (DomainSpec::flower(), "log-product")
    } else {
        (DomainSpec::circle(), "sin-product")
    };
    let start = Instant::now();
    let report = if flower {
        run_convergence_study(
            method,
            &domain,
            &LogProduct,
            report_name,
            &NS,
            &StudyConfig::default(),
        )
    } else {
        run_convergence_study(
            method,
            &domain,
            &SinProduct,
            report_name,
            &NS,
            &StudyConfig::default(),
        )
    }
    .expect("study configuration is valid");
    Study {
        report,
        elapsed: start.elapsed(),
    }
}

fn describe(s: &Study) -> String {
    let r = &s.report;
    let mut parts = vec![format!("{} {}", r.method, r.domain)];
    match r.orders() {
        Some(o) => parts.push(format!(
            "orders e1_u={:.2} einf_u={:.2} e1_grad={:.2} einf_grad={:.2}",
            o.e1_u, o.einf_u, o.e1_grad, o.einf_grad
        )),
        None => parts.push("orders unavailable".into()),
    }
    if !r.failures.is_empty() {
        let ns: Vec<String> = r.failures.iter().map(|f| f.n.to_string()).collect();
        parts.push(format!("failed at N={}", ns.join(",")));
    }
    parts.push(format!("{:.1}s", s.elapsed.as_secs_f64()));
    parts.join(", ")
}

fn converges(s: &Study) -> bool {
    s.report.failures.is_empty()
        && s.report.rows.len() == NS.len()
        && s.report
            .orders()
            .is_some_and(|o| o.min_error_order() >= 3.5)
        && s.elapsed <= STUDY_BUDGET
}

fn row_at(r: &ConvergenceReport, n: usize) -> Option<&StudyRow> {
    r.rows.iter().find(|row| row.n == n)
}

fn errors(row: &StudyRow) -> [f64; 4] {
    [row.e1_u, row.einf_u, row.e1_grad, row.einf_grad]
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn criterion1(m2: &[Study; 2]) -> Verdict {
    Verdict {
        pass: m2.iter().all(converges),
        detail: m2.iter().map(describe).collect::<Vec<_>>().join("; "),
    }
}

fn criterion2(m2: &[Study; 2], m3: &[Study; 2]) -> Verdict {
    let mut notes: Vec<String> = m3.iter().map(describe).collect();
    let mut below = true;
    for (a, b) in m2.iter().zip(m3) {
        for n in NS {
            match (row_at(&a.report, n), row_at(&b.report, n)) {
                (Some(r2), Some(r3)) => {
                    if !errors(r3).iter().zip(errors(r2)).all(|(e3, e2)| *e3 < e2) {
                        below = false;
                        notes.push(format!("{} N={n}: box errors not below", b.report.domain));
                    }
                }
                _ => {
                    below = false;
                    notes.push(format!("{} N={n}: no matched pair", b.report.domain));
                }
            }
        }
    }
    Verdict {
        pass: m3.iter().all(converges) && below,
        detail: notes.join("; "),
    }
}

fn criterion3(m2: &[Study; 2], m3: &[Study; 2]) -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for s in m2.iter().chain(m3) {
        let slope = if s.report.failures.is_empty() {
            s.report.orders().and_then(|o| o.cond_slope)
        } else {
            None
        };
        match slope {
            Some(k) if (1.5..=2.5).contains(&k) => notes.push(format!(
                "{} {} slope {k:.2}",
                s.report.method, s.report.domain
            )),
            Some(k) => {
                pass = false;
                notes.push(format!(
                    "{} {} slope {k:.2}",
                    s.report.method, s.report.domain
                ));
            }
            None => {
                pass = false;
                notes.push(format!(
                    "{} {} slope unavailable",
                    s.report.method, s.report.domain
                ));
            }
        }
    }
    Verdict {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion4(m1: &[Study; 2], m2: &[Study; 2], m3: &[Study; 2]) -> Verdict {
    let mut notes = Vec::new();
    let mut pass = false;
    for d in 0..2 {
        let r1 = &m1[d].report;
        let blow_up: Vec<usize> = NS
            .iter()
            .copied()
            .filter(|&n| {
                let k = |r: &ConvergenceReport| row_at(r, n).and_then(|row| row.cond_est);
                matches!(
                    (k(r1), k(&m2[d].report), k(&m3[d].report)),
                    (Some(k1), Some(k2), Some(k3)) if k1 > 1e10 && k2 < 1e7 && k3 < 1e7
                )
            })
            .collect();
        let einf = r1.column(|r| r.einf_u);
        let non_decreasing = einf.windows(3).any(|w| w[0] <= w[1] && w[1] <= w[2]);
        let kappas: Vec<String> = r1
            .rows
            .iter()
            .map(|r| format!("{:.1e}", r.cond_est.unwrap_or(f64::NAN)))
            .collect();
        notes.push(format!(
            "{}: M1 kappa [{}], separated at N={blow_up:?}, einf non-decreasing run: {non_decreasing}",
            r1.domain,
            kappas.join(" ")
        ));
        pass |= !blow_up.is_empty() && non_decreasing;
    }
    Verdict {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eval = |x: f64, y: f64| {
            let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
            for q in 0..5 {
                for p in 0..5 {
                    let c = a[p + 5 * q];
                    v += c * x.powi(p as i32) * y.powi(q as i32);
                    if p > 0 {
                        gx += c * p as f64 * x.powi(p as i32 - 1) * y.powi(q as i32);
                    }
                    if q > 0 {
                        gy += c * q as f64 * x.powi(p as i32) * y.powi(q as i32 - 1);
                    }
                }
            }
            (v, gx, gy)
        };
        let mut values = [0.0; 25];
        for q in 0..5 {
            for p in 0..5 {
                values[p + 5 * q] = eval(p as f64, q as f64).0;
            }
        }
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let (tx, ty) = (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));
        let (v, gx, gy) = eval(tx, ty);
        let (dx, dy) = biquartic_grad(&values, tx, ty, (1.0, 1.0), (1, 1), 1.0);
        let e = [
            (biquartic_eval(&values, tx, ty) - v).abs(),
            (dx - gx).abs(),
            (dy - gy).abs(),
        ];
        worst = e.iter().fold(worst, |m, x| m.max(x / scale));
    }
    let cardinal = (0..5).all(|q| {
        quartic_value_weights(q as f64)
            .c
            .iter()
            .enumerate()
            .all(|(p, v)| *v == if p == q { 1.0 } else { 0.0 })
    });
    let printed = [
        -1.0 / 12.0,
        6.0 / 12.0,
        -18.0 / 12.0,
        10.0 / 12.0,
        3.0 / 12.0,
    ];
    let one_sided = quartic_derivative_weights(3.0).c == printed;
    Verdict {
        pass: worst <= 1e-11 && cardinal && one_sided,
        detail: format!("worst relative error {worst:.1e}, cardinal {cardinal}, one-sided coefficients {one_sided}"),
    }
}

fn criterion6() -> Verdict {
    let circle = Circle::reference();
    let flower = Flower::reference();
    let mut worst_circle = 0.0f64;
    let mut worst_flower = 0.0f64;
    let mut failures = Vec::new();
    for n in [20, 40, 80] {
        let grid = GridSpec::new(n).unwrap();
        for (domain, ls) in [
            (DomainSpec::circle(), &circle as &dyn LevelSet),
            (DomainSpec::flower(), &flower as &dyn LevelSet),
        ] {
            let phi = sample_levelset(&domain, grid).unwrap();
            let opts = BoundaryOptions {
                source: LevelSetSource::Exact(ls),
                ..Default::default()
            };
            for method in Method::ALL {
                let cls = classify_points(&phi, method.family()).unwrap();
                match build_ghost_records(&phi, &cls, method, &opts) {
                    Ok(records) => {
                        for r in records {
                            let b = r.boundary_point;
                            if domain == DomainSpec::circle() {
                                let e = circle.radial_projection(grid.point(r.node));
                                worst_circle =
                                    worst_circle.max((b.0 - e.0).hypot(b.1 - e.1) / grid.h());
                            } else {
                                worst_flower = worst_flower.max(flower.value(b.0, b.1).abs());
                            }
                        }
                    }
                    Err(e) => failures.push(format!("{} N={n} {method}: {e}", domain.name())),
                }
            }
        }
    }
    Verdict {
        pass: failures.is_empty() && worst_circle <= 1e-10 && worst_flower <= 1e-10,
        detail: format!(
            "circle max |B - radial|/h {worst_circle:.1e}, flower max |phi(B)| {worst_flower:.1e}{}",
            if failures.is_empty() { String::new() } else { format!(", {}", failures.join("; ")) }
        ),
    }
}

fn criterion7() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for method in Method::ALL {
        if let Err(e) = common::algorithm::compare(method) {
            pass = false;
            notes.push(e);
        }
    }
    match common::algorithm::quadratic_residual() {
        Ok(r) => notes.push(format!("quadratic scaled residual {r:.1e}")),
        Err(e) => {
            pass = false;
            notes.push(e);
        }
    }
    if pass {
        notes.insert(0, "transcription matches for M1, M2, M3".into());
    }
    Verdict {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion8() -> Verdict {
    let ns = [32usize, 64, 128];
    let cubic: Vec<f64> = ns
        .iter()
        .map(|&n| common::extension::extension_error(n, |x, y| x * x * x * y))
        .collect();
    let exact = cubic.iter().all(|e| *e <= 1e-12);
    let smooth: Vec<f64> = ns
        .iter()
        .map(|&n| common::extension::extension_error(n, |x, y| (2.0 * x).sin() * (5.0 * y).sin()))
        .collect();
    let order = fit_order(&ns, &smooth).unwrap_or(f64::NAN);
    Verdict {
        pass: exact && order >= 4.5,
        detail: format!(
            "x^3 y errors {:?} (reproduced exactly: {exact}), sin(2x)sin(5y) order {order:.2}",
            cubic.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>()
        ),
    }
}

fn main() {
    let m1 = [study(Method::M1, false), study(Method::M1, true)];
    let m2 = [study(Method::M2, false), study(Method::M2, true)];
    let m3 = [study(Method::M3, false), study(Method::M3, true)];

    let verdicts = [
        criterion1(&m2),
        criterion2(&m2, &m3),
        criterion3(&m2, &m3),
        criterion4(&m1, &m2, &m3),
        criterion5(),
        criterion6(),
        criterion7(),
        criterion8(),
    ];
    let mut failed = 0;
    for (i, v) in verdicts.iter().enumerate() {
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} | {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        verdicts.len() - failed,
        verdicts.len()
    );
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

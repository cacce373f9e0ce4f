//! Side-by-side comparison of several configured studies.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use anyhow::{anyhow, Result};
use ghost_elliptic::{ConvergenceReport, Method, StudyRow};

use crate::config::{ConfigError, RunConfig};

/// Orders below this mark a member as non-convergent.
pub const MIN_ORDER: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// M3 has strictly smaller `e1_u` than M2 at every N both solved.
    BoxBeatsStar,
    /// Some N where M3 is not strictly better.
    Mixed(Vec<usize>),
    /// No M2/M3 pair, or identical members.
    NotApplicable(String),
}

/// Members must solve the same problem: same domain, split and solution.
pub fn check_members(members: &[RunConfig]) -> Result<(), ConfigError> {
    if members.len() < 2 {
        return Err(ConfigError("compare needs at least two members".into()));
    }
    let first = &members[0];
    for m in &members[1..] {
        if m.domain_spec() != first.domain_spec() {
            return Err(ConfigError(format!(
                "members disagree on the domain: {} vs {}",
                first.domain_spec().name(),
                m.domain_spec().name()
            )));
        }
        if m.solution_id()? != first.solution_id()? {
            return Err(ConfigError(format!(
                "members disagree on the exact solution: {} vs {}",
                first.solution_name(),
                m.solution_name()
            )));
        }
    }
    Ok(())
}

fn row_at(r: &ConvergenceReport, n: usize) -> Option<&StudyRow> {
    r.rows.iter().find(|row| row.n == n)
}

/// Why a member does not count as convergent, if it does not.
pub fn non_convergence(r: &ConvergenceReport) -> Option<String> {
    if !r.failures.is_empty() {
        let ns: Vec<usize> = r.failures.iter().map(|f| f.n).collect();
        return Some(format!("failed at N = {ns:?}"));
    }
    match r.orders() {
        None => Some("fewer than three levels to fit".into()),
        Some(o) if !(o.min_error_order() >= MIN_ORDER) => Some(format!(
            "fitted order {:.2} below {MIN_ORDER}",
            o.min_error_order()
        )),
        Some(_) => None,
    }
}

pub fn verdict(members: &[(RunConfig, ConvergenceReport)]) -> Verdict {
    let find = |m: Method| members.iter().find(|(c, _)| c.method == m);
    let (Some((_, r2)), Some((_, r3))) = (find(Method::M2), find(Method::M3)) else {
        return Verdict::NotApplicable("no M2 and M3 pair".into());
    };
    let ns: BTreeSet<usize> = r2
        .ns()
        .into_iter()
        .filter(|&n| row_at(r3, n).is_some())
        .collect();
    if ns.is_empty() {
        return Verdict::NotApplicable("M2 and M3 share no solved level".into());
    }
    let worse: Vec<usize> = ns
        .iter()
        .copied()
        .filter(|&n| !(row_at(r3, n).unwrap().e1_u < row_at(r2, n).unwrap().e1_u))
        .collect();
    if worse.is_empty() {
        Verdict::BoxBeatsStar
    } else {
        Verdict::Mixed(worse)
    }
}

/// Merged table: one row per N with the four errors and `cond_est` per member,
/// then a `fit` row and a `status` row.
pub fn merged_csv(members: &[(RunConfig, ConvergenceReport)]) -> Result<String> {
    let labels: Vec<String> = label_members(members);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["N".to_string()];
    for l in &labels {
        for c in ["e1_u", "einf_u", "e1_grad", "einf_grad", "cond_est"] {
            header.push(format!("{l}_{c}"));
        }
    }
    w.write_record(&header)?;
    let ns: BTreeSet<usize> = members
        .iter()
        .flat_map(|(c, _)| c.ns.iter().copied())
        .collect();
    let num = |v: f64| {
        if v.is_nan() {
            "nan".to_string()
        } else {
            format!("{v:.16e}")
        }
    };
    for n in ns {
        let mut rec = vec![n.to_string()];
        for (_, r) in members {
            match row_at(r, n) {
                Some(row) => {
                    for v in [row.e1_u, row.einf_u, row.e1_grad, row.einf_grad] {
                        rec.push(num(v));
                    }
                    rec.push(num(row.cond_est.unwrap_or(f64::NAN)));
                }
                None => rec.extend(std::iter::repeat_n("nan".to_string(), 5)),
            }
        }
        w.write_record(&rec)?;
    }
    let mut fit = vec!["fit".to_string()];
    let mut status = vec!["status".to_string()];
    for (_, r) in members {
        match r.orders() {
            Some(o) => {
                for v in [o.e1_u, o.einf_u, o.e1_grad, o.einf_grad] {
                    fit.push(num(v));
                }
                fit.push(num(o.cond_slope.unwrap_or(f64::NAN)));
            }
            None => fit.extend(std::iter::repeat_n("nan".to_string(), 5)),
        }
        status.push(
            if non_convergence(r).is_some() {
                "non-convergent"
            } else {
                "convergent"
            }
            .into(),
        );
        status.extend(std::iter::repeat_n(String::new(), 4));
    }
    w.write_record(&fit)?;
    w.write_record(&status)?;
    String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?).map_err(Into::into)
}

/// Column prefixes: the method name, disambiguated by position if repeated.
pub fn label_members(members: &[(RunConfig, ConvergenceReport)]) -> Vec<String> {
    members
        .iter()
        .enumerate()
        .map(|(k, (c, _))| {
            let m = c.method.to_string();
            if members.iter().filter(|(o, _)| o.method == c.method).count() > 1 {
                format!("{m}.{}", k + 1)
            } else {
                m
            }
        })
        .collect()
}

pub fn report_text(members: &[(RunConfig, ConvergenceReport)]) -> String {
    let labels = label_members(members);
    let mut s = String::new();
    for (l, (_, r)) in labels.iter().zip(members) {
        let o = r.orders();
        let _ = writeln!(
            s,
            "{l}: e1_u order {}, cond growth {}, {}",
            o.map_or("-".into(), |o| format!("{:.2}", o.e1_u)),
            o.and_then(|o| o.cond_slope)
                .map_or("-".into(), |g| format!("N^{g:.2}")),
            non_convergence(r).map_or("convergent".into(), |why| format!("non-convergent ({why})"))
        );
    }
    let identical = members.windows(2).all(|w| w[0].0 == w[1].0);
    let line = if identical {
        "members are identical; no preference".to_string()
    } else {
        match verdict(members) {
            Verdict::BoxBeatsStar => "M3 has smaller e1_u than M2 at every common N".into(),
            Verdict::Mixed(ns) => format!("M3 is not more accurate than M2 at N = {ns:?}"),
            Verdict::NotApplicable(why) => format!("no M2/M3 verdict: {why}"),
        }
    };
    let _ = writeln!(s, "{line}");
    s
}

//! CSV emitters. Numbers use the shortest representation that parses back to the same
//! `f64`; table columns carry an extra 4-significant-digit presentation copy.

use std::fmt::Write as _;

use crate::observables::{ErrorReport, MomentSeries, NormKind};
use crate::stepper::Trajectory;

/// Shortest round-trip text of `v`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Four significant digits in scientific notation.
pub fn sig4(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3e}")
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> (String, String) {
    match v {
        Some(x) => (num(x), sig4(x)),
        None => (String::new(), String::new()),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Per-step diagnostics of one run.
pub fn trajectory_csv(traj: &Trajectory) -> Csv {
    let mut csv = Csv::new([
        "t",
        "number",
        "hypervolume",
        "hypervolume_drift",
        "min_nodal",
        "newton_iterations",
        "linear_iterations",
        "residual",
    ]);
    let m1 = traj.steps.first().map(|s| s.hypervolume).unwrap_or(0.0);
    for s in &traj.steps {
        let drift = if m1 != 0.0 { ((s.hypervolume - m1) / m1).abs() } else { 0.0 };
        csv.push(vec![
            num(s.t),
            num(s.number),
            num(s.hypervolume),
            num(drift),
            num(s.min_nodal),
            s.newton_iterations.to_string(),
            s.linear_iterations.to_string(),
            num(s.residual),
        ]);
    }
    csv
}

/// Moment comparison: one row per time, `(num, rel_err)` pairs per grid.
pub fn moment_table_csv(columns: &[(String, MomentSeries)]) -> Csv {
    let mut header = vec!["t".to_string(), "exact".to_string(), "exact_4sig".to_string()];
    for (label, _) in columns {
        for h in ["num", "rel_err", "num_4sig", "rel_err_4sig"] {
            header.push(format!("{h}_{label}"));
        }
    }
    let mut csv = Csv::new(header);
    let Some((_, first)) = columns.first() else { return csv };
    for (i, &t) in first.times.iter().enumerate() {
        let exact = first.exact.as_ref().map(|e| e[i]);
        let (e, e4) = opt(exact);
        let mut row = vec![num(t), e, e4];
        for (_, series) in columns {
            let n = series.numerical.get(i).copied();
            let rel = series.relative_errors().and_then(|r| r.get(i).copied());
            let (a, a4) = opt(n);
            let (b, b4) = opt(rel);
            row.extend([a, b, a4, b4]);
        }
        csv.push(row);
    }
    csv
}

/// Convergence table: `label, h, dofs`, then per norm its value, order and 4-digit copies.
pub fn error_report_csv(report: &ErrorReport, kinds: &[NormKind]) -> Csv {
    let mut header = vec!["label".to_string(), "h".to_string(), "dofs".to_string()];
    for k in kinds {
        for suffix in ["", "_eoc", "_4sig", "_eoc_4sig"] {
            header.push(format!("{}{suffix}", k.name()));
        }
    }
    let mut csv = Csv::new(header);
    // orders belong to the finer row of each pair
    let eocs: Vec<Vec<Option<f64>>> = kinds
        .iter()
        .map(|&k| {
            let mut v = vec![None];
            v.extend(report.eoc(k).unwrap_or_else(|_| vec![None; report.rows.len().saturating_sub(1)]));
            v
        })
        .collect();
    for (i, row) in report.rows.iter().enumerate() {
        let mut out = vec![row.label.clone(), num(row.h), row.dofs.to_string()];
        for (j, &k) in kinds.iter().enumerate() {
            let (v, v4) = opt(row.get(k));
            let (e, _) = opt(eocs[j][i]);
            let e2 = eocs[j][i].map(|x| format!("{x:.3}")).unwrap_or_default();
            out.extend([v, e, v4, e2]);
        }
        csv.push(out);
    }
    csv
}

/// `key = value` lines echoing every setting of a run.
pub fn provenance(entries: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

//! Text rendering of reports and plot-data export.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use crate::report::{Report, Table};

/// Rows printed per table; the CSV export always carries all rows.
pub const MAX_ROWS: usize = 20;

fn fmt_num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        v.to_string()
    } else if (1e-3..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

fn fmt_value(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), fmt_num),
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn render_table(name: &str, t: &Table) -> String {
    let mut cells: Vec<Vec<String>> = vec![t.columns.clone()];
    cells.extend(t.rows.iter().take(MAX_ROWS).map(|r| r.iter().map(|&v| fmt_num(v)).collect()));
    let widths: Vec<usize> =
        (0..t.columns.len()).map(|c| cells.iter().map(|r| r.get(c).map_or(0, String::len)).max().unwrap_or(0)).collect();
    let mut s = format!("[{name}] {} rows\n", t.rows.len());
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(s, "  {}", line.join("  "));
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(s, "  {}", rule.join("  "));
        }
    }
    if t.rows.len() > MAX_ROWS {
        let _ = writeln!(s, "  ... {} more rows", t.rows.len() - MAX_ROWS);
    }
    s
}

/// Text summary of `report`.
pub fn render_report(report: &Report) -> String {
    let mut s = format!(
        "experiment: {}\nseed: {}\nresult: {}\n",
        report.experiment,
        report.seed,
        if report.holds { "holds" } else { "violated" }
    );
    if let serde_json::Value::Object(m) = &report.summary {
        for (k, v) in m {
            let _ = writeln!(s, "{k}: {}", fmt_value(v));
        }
    }
    for (name, t) in &report.tables {
        s.push('\n');
        s.push_str(&render_table(name, t));
    }
    s
}

/// Renders the report at `path` and writes `<table>.plot.csv` for every
/// table into `out` (default: the report's directory).
pub fn render(path: &Path, out: Option<&Path>) -> Result<String> {
    let report = Report::load(path)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, t) in &report.tables {
        t.write_csv(&dir.join(format!("{name}.plot.csv")))?;
    }
    Ok(render_report(&report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_renders_header_only() {
        let t = Table::new(&["t", "value"]);
        let s = render_table("sweep", &t);
        assert_eq!(s.lines().count(), 3);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        t.write_csv(&p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "t,value\n");
    }

    #[test]
    fn long_tables_are_truncated() {
        let mut t = Table::new(&["k"]);
        for k in 0..30 {
            t.push(vec![k as f64]);
        }
        assert!(render_table("k", &t).ends_with("... 10 more rows\n"));
    }
}

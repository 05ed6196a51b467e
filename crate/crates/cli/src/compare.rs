use std::path::Path;

use crate::error::{CliError, Result};
use crate::report::{format_percent, percent_change, Report};

const ROWS: [(&str, &str); 4] = [
    ("comfort", "Z_s_w"),
    ("handling", "dF_tire"),
    ("roll", "Phi_s"),
    ("objective", "total"),
];

fn load(dir: &Path) -> Result<Report> {
    let path = dir.join("metrics.txt");
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::Compare(format!("cannot read {}: {e}", path.display()))
    })?;
    Report::parse(&text)
}

/// Side-by-side optimized metrics of two runs of the same case and road.
pub fn compare_runs(run_a: &Path, run_b: &Path) -> Result<String> {
    let a = load(run_a)?;
    let b = load(run_b)?;
    for key in ["case", "road", "seeds"] {
        if a.get(key) != b.get(key) {
            return Err(CliError::Compare(format!(
                "runs differ in {key}: {:?} vs {:?}",
                a.get(key).unwrap_or(""),
                b.get(key).unwrap_or("")
            )));
        }
    }
    let mut out = format!("case {}\n", a.get("case").unwrap_or("?"));
    for (label, metric) in ROWS {
        let key = format!("optimized.{metric}");
        let (Some(x), Some(y)) = (a.number_at(&key), b.number_at(&key)) else {
            return Err(CliError::Compare(format!("{key} missing from a metrics report")));
        };
        out.push_str(&format!(
            "{label} {} ({x:?} -> {y:?})\n",
            format_percent(percent_change(x, y))
        ));
    }
    Ok(out)
}

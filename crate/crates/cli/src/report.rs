//! `key = value` metric reports.

use std::fmt::Display;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Shortest representation that parses back to the same bits.
    pub fn number(&mut self, key: impl Into<String>, value: f64) {
        self.entries.push((key.into(), format!("{value:?}")));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn number_at(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| {
                CliError::Compare(format!("malformed report line {}: {line:?}", n + 1))
            })?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }
}

/// Relative change from `a` to `b` in percent; `None` when undefined.
pub fn percent_change(a: f64, b: f64) -> Option<f64> {
    if a == b {
        Some(0.0)
    } else if a == 0.0 || !a.is_finite() || !b.is_finite() {
        None
    } else {
        Some(100.0 * (b - a) / a.abs())
    }
}

pub fn format_percent(change: Option<f64>) -> String {
    match change {
        Some(c) => format!("{c:+.2}%"),
        None => "n/a".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut r = Report::new();
        r.text("case", "half-2");
        r.number("x", 0.1 + 0.2);
        r.number("y", -1.234_567_890_123_456_7e-300);
        let back = Report::parse(&r.to_text()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.number_at("x").unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn percent_formatting() {
        assert_eq!(format_percent(percent_change(1.0, 1.0995)), "+9.95%");
        assert_eq!(format_percent(percent_change(1000.0, 978.1)), "-2.19%");
        assert_eq!(format_percent(percent_change(0.0, 0.0)), "+0.00%");
        assert_eq!(format_percent(percent_change(0.0, 1.0)), "n/a");
    }
}

//! CSV reports: `#` comment header with the resolved config, one header row,
//! comma separated, LF line endings.

use crate::config::{Experiment, ExperimentConfig};

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone)]
pub struct Report {
    header: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(experiment: Experiment, cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            header: Self::header(experiment, cfg),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn header(experiment: Experiment, cfg: &ExperimentConfig) -> String {
        format!(
            "# pwapprox {} {}\n# config: {}\n",
            experiment.name(),
            env!("CARGO_PKG_VERSION"),
            cfg.to_json()
        )
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = self.header.clone();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Splits rendered CSV into its header row and data rows, skipping comments.
pub fn parse_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines
        .next()
        .map(|l| l.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (columns, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_layout() {
        let cfg = ExperimentConfig::default();
        let mut r = Report::new(Experiment::Lebesgue, &cfg, &["N", "value"]);
        r.push(vec!["0".into(), num(1.0)]);
        let text = r.render();
        assert!(text.starts_with("# pwapprox lebesgue"));
        assert!(text.ends_with("N,value\n0,1.0\n"));
        assert!(!text.contains('\r'));
        let (cols, rows) = parse_rows(&text);
        assert_eq!(cols, vec!["N", "value"]);
        assert_eq!(rows, vec![vec!["0".to_string(), "1.0".to_string()]]);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1e-300, -2.5e17, std::f64::consts::PI] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}

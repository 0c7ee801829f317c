use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RecallCounts;

/// Column headers of the text and CSV reports, in order.
pub const COLUMNS: [&str; 5] = ["AR@10", "AR@100", "AR^XS@100", "AR^S@100", "AR^M@100"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemMetrics {
    pub system: String,
    pub ar_at_10: Option<f64>,
    pub ar_at_100: Option<f64>,
    pub ar_xs_at_100: Option<f64>,
    pub ar_s_at_100: Option<f64>,
    pub ar_m_at_100: Option<f64>,
    pub n_gt: u64,
    pub n_xs: u64,
    pub n_s: u64,
    pub n_m: u64,
}

impl SystemMetrics {
    /// From pooled counts `[@10, @100, XS@100, S@100, M@100]`.
    pub fn from_counts(system: &str, c: &[RecallCounts; 5]) -> Self {
        Self {
            system: system.to_string(),
            ar_at_10: c[0].average_recall(),
            ar_at_100: c[1].average_recall(),
            ar_xs_at_100: c[2].average_recall(),
            ar_s_at_100: c[3].average_recall(),
            ar_m_at_100: c[4].average_recall(),
            n_gt: c[1].total,
            n_xs: c[2].total,
            n_s: c[3].total,
            n_m: c[4].total,
        }
    }

    pub fn cells(&self) -> [Option<f64>; 5] {
        [
            self.ar_at_10,
            self.ar_at_100,
            self.ar_xs_at_100,
            self.ar_s_at_100,
            self.ar_m_at_100,
        ]
    }
}

/// One row per evaluated system.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ARReport {
    pub systems: Vec<SystemMetrics>,
}

impl ARReport {
    pub fn new(systems: Vec<SystemMetrics>) -> Self {
        Self { systems }
    }

    /// Aligned plain-text table, three decimals, `-` for absent cells.
    pub fn to_text(&self) -> String {
        let name_w = self
            .systems
            .iter()
            .map(|s| s.system.len())
            .chain(std::iter::once("System".len()))
            .max()
            .unwrap_or(6);
        let mut out = String::new();
        write!(out, "{:<name_w$}", "System").unwrap();
        for c in COLUMNS {
            write!(out, "  {c:>9}").unwrap();
        }
        out.push('\n');
        for s in &self.systems {
            write!(out, "{:<name_w$}", s.system).unwrap();
            for v in s.cells() {
                match v {
                    Some(v) => write!(out, "  {v:>9.3}").unwrap(),
                    None => write!(out, "  {:>9}", "-").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Pretty-printed JSON with a fixed key order; absent cells are `null`.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// CSV with six decimals; absent cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,");
        out.push_str(&COLUMNS.join(","));
        out.push_str(",n_gt,n_xs,n_s,n_m\n");
        for s in &self.systems {
            out.push_str(&csv_field(&s.system));
            for v in s.cells() {
                out.push(',');
                if let Some(v) = v {
                    write!(out, "{v:.6}").unwrap();
                }
            }
            writeln!(out, ",{},{},{},{}", s.n_gt, s.n_xs, s.n_s, s.n_m).unwrap();
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> SystemMetrics {
        SystemMetrics {
            system: "tiled-attentionmask".into(),
            ar_at_10: Some(0.073),
            ar_at_100: Some(0.415),
            ar_xs_at_100: Some(0.294),
            ar_s_at_100: None,
            ar_m_at_100: Some(0.549),
            n_gt: 10,
            n_xs: 6,
            n_s: 0,
            n_m: 4,
        }
    }

    #[test]
    fn text_layout() {
        let t = ARReport::new(vec![row()]).to_text();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(
            lines[0],
            "System                   AR@10     AR@100  AR^XS@100   AR^S@100   AR^M@100"
        );
        assert_eq!(
            lines[1],
            "tiled-attentionmask      0.073      0.415      0.294          -      0.549"
        );
    }

    #[test]
    fn csv_and_json() {
        let r = ARReport::new(vec![row()]);
        assert_eq!(
            r.to_csv(),
            "system,AR@10,AR@100,AR^XS@100,AR^S@100,AR^M@100,n_gt,n_xs,n_s,n_m\n\
             tiled-attentionmask,0.073000,0.415000,0.294000,,0.549000,10,6,0,4\n"
        );
        let back: ARReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"ar_s_at_100\": null"));
    }
}

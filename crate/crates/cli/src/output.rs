//! CSV output with a leading `#` comment block holding the version and the
//! full configuration of every run that contributed rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::runner::Table;

pub const SERIES_HEADER: &str = "t,gamma,L_A,value";
pub const SWEEP_HEADER: &str = "sweep_var,gamma,value,stderr";
const CONFIG_SEPARATOR: &str = "# ---";

pub fn render_csv(configs: &[RunConfig], table: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    for cfg in configs {
        let _ = writeln!(s, "{CONFIG_SEPARATOR}");
        for line in cfg.to_config_text().lines() {
            let _ = writeln!(s, "# {line}");
        }
    }
    match table {
        Table::Series(rows) => {
            let _ = writeln!(s, "{SERIES_HEADER}");
            for r in rows {
                let _ = writeln!(s, "{},{},{},{}", r.t, r.gamma, r.l_a, r.value);
            }
        }
        Table::Sweep(rows) => {
            let _ = writeln!(s, "{SWEEP_HEADER}");
            for r in rows {
                let _ = writeln!(s, "{},{},{},{}", r.sweep_var, r.gamma, r.value, r.stderr);
            }
        }
    }
    s
}

pub fn write_csv(path: &Path, configs: &[RunConfig], table: &Table) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, render_csv(configs, table))
}

/// Config texts recorded in a CSV comment block, one per contributing run.
pub fn embedded_configs(csv: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in csv.lines().take_while(|l| l.starts_with('#')) {
        if line == CONFIG_SEPARATOR {
            out.push(String::new());
        } else if let (Some(cur), Some(body)) = (out.last_mut(), line.strip_prefix("# ")) {
            cur.push_str(body);
            cur.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::runner::{SeriesRow, SweepRow};

    #[test]
    fn comment_block_round_trips() {
        let a = RunConfig::default();
        let b = RunConfig {
            gamma: vec![0.25, 4.0],
            ..RunConfig::default()
        };
        let table = Table::Sweep(vec![SweepRow {
            sweep_var: 2,
            gamma: 0.25,
            value: 0.5,
            stderr: 0.01,
        }]);
        let csv = render_csv(&[a.clone(), b.clone()], &table);
        let configs: Vec<RunConfig> = embedded_configs(&csv)
            .iter()
            .map(|t| parse_config(t).unwrap())
            .collect();
        assert_eq!(configs, vec![a, b]);
        assert!(csv.contains("\nsweep_var,gamma,value,stderr\n2,0.25,0.5,0.01\n"));
    }

    #[test]
    fn series_layout() {
        let table = Table::Series(vec![SeriesRow {
            t: 0.5,
            gamma: 1.0,
            l_a: 3,
            value: 0.125,
        }]);
        let csv = render_csv(&[RunConfig::default()], &table);
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec![SERIES_HEADER, "0.5,1,3,0.125"]);
    }
}

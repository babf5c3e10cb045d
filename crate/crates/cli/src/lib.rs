//! Configuration, figure presets and CSV output for `mipt-sim`.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

use mipt_core::Execution;

pub use config::{parse_config, ConfigError, Mode, Report, RunConfig};
pub use runner::{simulate, RunError, Table};

/// Runs `configs` and writes one CSV per distinct output path, rows in
/// config order.
pub fn execute(configs: &[RunConfig], exec: Execution) -> Result<(), RunError> {
    for cfg in configs {
        cfg.validate()?;
    }
    let mut start = 0;
    while start < configs.len() {
        let path = &configs[start].output_path;
        let end = start + configs[start..].iter().take_while(|c| &c.output_path == path).count();
        let group = &configs[start..end];
        let mut table = simulate(&group[0], exec)?;
        for cfg in &group[1..] {
            table.extend(simulate(cfg, exec)?);
        }
        output::write_csv(path, group, &table)?;
        start = end;
    }
    Ok(())
}

//! Experiment presets for the paper's figures.

use std::path::Path;

use crate::config::{Mode, Report, RunConfig};

pub const PRESETS: &[&str] = &["fig2", "fig3", "figS1", "figS3", "figS5", "figS6"];

const GAMMAS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

fn paper_system(name: &str, out_dir: &Path) -> RunConfig {
    RunConfig {
        gamma: GAMMAS.to_vec(),
        output_path: out_dir.join(format!("{name}.csv")),
        ..RunConfig::default()
    }
}

/// Half-filled chain of `l` sites starting from `0…01…1`.
fn chain(l: usize) -> (usize, String) {
    let nb = l / 2;
    (nb, format!("{}{}", "0".repeat(l - nb), "1".repeat(nb)))
}

/// The runs behind preset `name`, all writing to `out_dir/<name>.csv`.
pub fn preset(name: &str, out_dir: &Path, seed: u64) -> Option<Vec<RunConfig>> {
    let base = paper_system(name, out_dir);
    let runs = match name {
        "fig2" => vec![base],
        "fig3" => vec![RunConfig {
            subsystem: (1..=5).collect(),
            report: Report::SaturationVsSubsystem,
            ..base
        }],
        "figS1" => [2usize, 4, 6]
            .iter()
            .map(|&l| {
                let (n_bosons, initial_state) = chain(l);
                RunConfig {
                    mode: Mode::Trajectories,
                    n_sites: l,
                    n_bosons,
                    initial_state,
                    subsystem: vec![(l / 4).max(1)],
                    gamma: vec![0.5, 1.0, 3.0, 4.0],
                    n_trajectories: 1000,
                    seed,
                    report: Report::SaturationVsSites,
                    ..base.clone()
                }
            })
            .collect(),
        "figS3" => vec![RunConfig {
            mode: Mode::Trajectories,
            gamma: vec![0.5, 1.5],
            n_trajectories: 1,
            seed,
            ..base
        }],
        "figS5" => vec![RunConfig {
            mode: Mode::SinglePostselected,
            ..base
        }],
        "figS6" => vec![RunConfig {
            mode: Mode::SinglePostselected,
            subsystem: (1..=5).collect(),
            report: Report::SaturationVsSubsystem,
            ..base
        }],
        _ => return None,
    };
    Some(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_preset_echo_round_trips() {
        for name in PRESETS {
            let runs = preset(name, Path::new("out"), 7).unwrap();
            assert!(!runs.is_empty());
            for run in runs {
                run.validate().unwrap();
                assert_eq!(parse_config(&run.to_config_text()).unwrap(), run, "{name}");
                assert_eq!(run.output_path, Path::new("out").join(format!("{name}.csv")));
            }
        }
        assert!(preset("fig9", Path::new("."), 0).is_none());
    }

    #[test]
    fn fig_s1_subsystems() {
        let runs = preset("figS1", Path::new("."), 0).unwrap();
        let got: Vec<(usize, usize, &str)> = runs
            .iter()
            .map(|r| (r.n_sites, r.subsystem[0], r.initial_state.as_str()))
            .collect();
        assert_eq!(got, vec![(2, 1, "01"), (4, 1, "0011"), (6, 1, "000111")]);
    }
}

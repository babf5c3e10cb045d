//! Executes a [`RunConfig`] and tabulates entropies.

use mipt_core::parallel::{self, Execution};
use mipt_core::{
    build_basis, build_hamiltonian, build_jump_operators, ensemble_entropy, evolve, evolve_doubled_multi,
    parse_product_state, partial_trace, renyi2, DensityMatrix, Error as CoreError, EvolutionConfig, HamiltonianParams,
    SingleCopyEquation, SubsystemMask, TrajectoryConfig, Unraveling,
};

use crate::config::{ConfigError, Mode, Report, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 0 success, 1 I/O, 2 configuration, 3 invariant violation, 4
    /// numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 1,
            RunError::Config(_) => 2,
            RunError::Core(e) => match e {
                CoreError::InvariantViolation { .. } => 3,
                CoreError::DenominatorVanished { .. }
                | CoreError::NonPositiveSwapTrace { .. }
                | CoreError::NonPositivePurity(_)
                | CoreError::ZeroNormAfterJump { .. } => 4,
                _ => 2,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub gamma: f64,
    pub l_a: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_var: usize,
    pub gamma: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Series(Vec<SeriesRow>),
    Sweep(Vec<SweepRow>),
}

impl Table {
    pub fn len(&self) -> usize {
        match self {
            Table::Series(r) => r.len(),
            Table::Sweep(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends `other`; both must be the same kind.
    pub fn extend(&mut self, other: Table) {
        match (self, other) {
            (Table::Series(a), Table::Series(b)) => a.extend(b),
            (Table::Sweep(a), Table::Sweep(b)) => a.extend(b),
            _ => panic!("cannot merge series and sweep tables"),
        }
    }
}

/// Entropy versus time for one `(γ, L_A)` pair.
#[derive(Debug, Clone, PartialEq)]
struct Curve {
    times: Vec<f64>,
    values: Vec<f64>,
    stderr: Vec<f64>,
}

impl Curve {
    fn exact(times: Vec<f64>, values: Vec<f64>) -> Self {
        let stderr = vec![0.0; values.len()];
        Self { times, values, stderr }
    }

    /// Mean over the last 10% of samples (at least one) and the largest
    /// standard error in that window.
    fn saturation(&self) -> (f64, f64) {
        let n = self.values.len();
        let k = (n / 10).max(1);
        let mean = self.values[n - k..].iter().sum::<f64>() / k as f64;
        let err = self.stderr[n - k..].iter().copied().fold(0.0, f64::max);
        (mean, err)
    }
}

fn curves_for_gamma(cfg: &RunConfig, gamma: f64, exec: Execution) -> Result<Vec<Curve>, RunError> {
    let basis = build_basis(cfg.n_sites, cfg.n_bosons)?;
    let h = build_hamiltonian(
        &basis,
        &HamiltonianParams {
            j_hop: cfg.j,
            u_int: cfg.u,
            boundary: cfg.boundary,
        },
    );
    let jumps = build_jump_operators(&basis);
    let phi0 = parse_product_state(&cfg.initial_state, &basis)?;
    let masks: Vec<SubsystemMask> = cfg
        .subsystem
        .iter()
        .map(|&l| SubsystemMask::prefix(l, cfg.n_sites))
        .collect::<Result<_, _>>()?;
    let evo = EvolutionConfig {
        t_total: cfg.t_total,
        n_steps: cfg.n_steps,
        measurement_rate: gamma,
        retained_channels: cfg.retained_channels,
        check_every: cfg.check_every,
    };
    let rho0 = DensityMatrix::pure(&phi0);
    match cfg.mode {
        Mode::SingleComplete | Mode::SinglePostselected => {
            let equation = if cfg.mode == Mode::SingleComplete {
                SingleCopyEquation::Complete
            } else {
                SingleCopyEquation::PostSelected
            };
            let states = evolve(&h, &jumps, &evo, equation, &rho0)?;
            let times: Vec<f64> = states.iter().map(|(t, _)| *t).collect();
            masks
                .iter()
                .map(|mask| {
                    let values = states
                        .iter()
                        .map(|(_, rho)| renyi2(&partial_trace(rho, &basis, mask)?))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Curve::exact(times.clone(), values))
                })
                .collect()
        }
        Mode::Doubled => {
            let run = evolve_doubled_multi(&h, &jumps, &basis, &evo, &rho0, &masks)?;
            Ok(run
                .entropies
                .into_iter()
                .map(|s| Curve::exact(s.times, s.values))
                .collect())
        }
        Mode::Trajectories => {
            let tcfg = TrajectoryConfig {
                n_trajectories: cfg.n_trajectories,
                seed: cfg.seed,
                dt: cfg.t_total / cfg.n_steps as f64,
                t_total: cfg.t_total,
                gamma,
                record_every: cfg.check_every,
                ..TrajectoryConfig::default()
            };
            masks
                .iter()
                .map(|mask| {
                    let unraveling = Unraveling::new(&h, &jumps, &basis, mask, &tcfg)?;
                    if cfg.n_trajectories == 1 {
                        let rec = unraveling.run(&phi0, tcfg.trajectory_seed(0))?;
                        let values = rec.entropies();
                        return Ok(Curve::exact(rec.times, values));
                    }
                    let records = unraveling.run_ensemble(&phi0, exec)?;
                    let ens = ensemble_entropy(&records)?;
                    Ok(Curve {
                        times: ens.times,
                        values: ens.entropy,
                        stderr: ens.stderr,
                    })
                })
                .collect()
        }
    }
}

/// Runs every `(γ, L_A)` point of `cfg`; γ points are independent jobs.
pub fn simulate(cfg: &RunConfig, exec: Execution) -> Result<Table, RunError> {
    cfg.validate()?;
    let per_gamma = parallel::try_map_indexed(cfg.gamma.len(), exec, |k| curves_for_gamma(cfg, cfg.gamma[k], exec))?;
    let mut table = match cfg.report {
        Report::Series => Table::Series(Vec::new()),
        _ => Table::Sweep(Vec::new()),
    };
    for (&gamma, curves) in cfg.gamma.iter().zip(per_gamma) {
        for (&l_a, curve) in cfg.subsystem.iter().zip(curves) {
            match &mut table {
                Table::Series(rows) => {
                    rows.extend(curve.times.iter().zip(&curve.values).map(|(&t, &value)| SeriesRow {
                        t,
                        gamma,
                        l_a,
                        value,
                    }))
                }
                Table::Sweep(rows) => {
                    let (value, stderr) = curve.saturation();
                    let sweep_var = match cfg.report {
                        Report::SaturationVsSites => cfg.n_sites,
                        _ => l_a,
                    };
                    rows.push(SweepRow {
                        sweep_var,
                        gamma,
                        value,
                        stderr,
                    });
                }
            }
        }
    }
    Ok(table)
}

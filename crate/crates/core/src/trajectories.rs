//! Stochastic unraveling of the doubled equation.
//!
//! Each step either propagates with the non-Hermitian effective Hamiltonian
//! (probability `1 - δp`) or applies one EPR-paired jump `L_a ⊗ L_a`, the
//! channel drawn with probability proportional to
//! `⟨φ^D|(L_a†L_a) ⊗ (L_a†L_a)|φ^D⟩`. One uniform draw decides whether a
//! jump happens and a second picks the channel.
//!
//! Paired jumps and a scalar anti-Hermitian part keep `|φ⟩ ⊗ |φ⟩` a
//! product, so [`Representation::SingleCopy`] evolves one copy and squares
//! its channel weights; [`Representation::Doubled`] evolves the full
//! `d²`-dimensional vector and exists for validation.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::doubled::{doubled_anticommutator_operator, doubled_hamiltonian, swap_trace};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, JumpOperatorSet};
use crate::master::{emission_steps, SubsystemMask};
use crate::operator::{self, Action, Operator, C64, I};
use crate::parallel::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoJumpScheme {
    /// `φ ← (1 - i H_eff dt) φ`, renormalised.
    #[default]
    FirstOrder,
    /// `φ ← exp(-i H_eff dt) φ`, renormalised.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    #[default]
    SingleCopy,
    Doubled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    pub dt: f64,
    pub t_total: f64,
    pub gamma: f64,
    pub record_every: usize,
    pub no_jump: NoJumpScheme,
    pub representation: Representation,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 1000,
            seed: 0,
            dt: 30.0 / 11_000.0,
            t_total: 30.0,
            gamma: 1.0,
            record_every: 100,
            no_jump: NoJumpScheme::FirstOrder,
            representation: Representation::SingleCopy,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.n_trajectories == 0 {
            return bad("n_trajectories must be positive");
        }
        if !(self.dt > 0.0 && self.t_total > 0.0) {
            return bad("dt and t_total must be positive");
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return bad("gamma must be nonnegative");
        }
        if self.dt * self.gamma >= 0.1 {
            return bad("dt * gamma must stay below 0.1");
        }
        if self.record_every == 0 {
            return bad("record_every must be positive");
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_total / self.dt).round() as usize).max(1)
    }

    /// Seed of trajectory `index`: `seed ⊕ index`.
    pub fn trajectory_seed(&self, index: usize) -> u64 {
        self.seed ^ index as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Probability that this step jumps.
    pub delta_p: f64,
    /// `⟨φ|L_a†L_a|φ⟩` for one copy.
    pub channel_weights: Vec<f64>,
    pub chosen: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `Tr ρ_A²` of the (single-copy) state at each recorded time.
    pub purities: Vec<f64>,
    /// `(time, channel)` of every jump.
    pub jump_log: Vec<(f64, usize)>,
    /// Diagnostics of the steps taken from each recorded time.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl TrajectoryRecord {
    pub fn entropies(&self) -> Vec<f64> {
        self.purities.iter().map(|p| -p.ln()).collect()
    }
}

/// `H⊗I + I⊗H - i(γ/2) Σ_{a,b} (L_a†L_a) ⊗ (L_b†L_b)`.
pub fn effective_hamiltonian(h: &Operator, jumps: &JumpOperatorSet, gamma: f64) -> Operator {
    let k = doubled_anticommutator_operator(jumps);
    doubled_hamiltonian(h).sub(&k.scale(I * (gamma / 2.0)))
}

/// Per-copy factor `H - i(γ/4) Σ_a L_a†L_a` of the effective Hamiltonian.
pub fn single_copy_effective_hamiltonian(h: &Operator, jumps: &JumpOperatorSet, gamma: f64) -> Operator {
    h.sub(&jumps.gram().scale(I * (gamma / 4.0)))
}

fn propagator(h_eff: &Operator, dt: f64, scheme: NoJumpScheme) -> Array2<C64> {
    let generator = h_eff.entries().mapv(|z| -I * z * dt);
    match scheme {
        NoJumpScheme::FirstOrder => Array2::<C64>::eye(h_eff.dim()) + generator,
        NoJumpScheme::Exact => operator::expm(&generator.view()),
    }
}

/// Precomputed operators for one unraveling step.
#[derive(Debug, Clone)]
pub struct TrajectoryStepper {
    representation: Representation,
    single_dim: usize,
    gamma: f64,
    dt: f64,
    no_jump: Array2<C64>,
    /// `L_a` (single copy) or `L_a ⊗ L_a` (doubled).
    jumps: Vec<Action>,
    /// One-copy marginal weights `L_a†L_a` (or `L_a†L_a ⊗ I`).
    marginals: Vec<Action>,
    /// `(L_a†L_a) ⊗ (L_a†L_a)`; only used by the doubled form.
    pair_weights: Vec<Action>,
    /// `Σ_a L_a†L_a` (single copy) or `Σ_{a,b} (L_a†L_a) ⊗ (L_b†L_b)`.
    total: Action,
}

impl TrajectoryStepper {
    pub fn new(h: &Operator, jumps: &JumpOperatorSet, config: &TrajectoryConfig) -> Result<Self> {
        config.validate()?;
        if h.dim() != jumps.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: jumps.dim(),
            });
        }
        let d = h.dim();
        let grams: Vec<Operator> = jumps.ops().iter().map(|l| l.adjoint().matmul(l)).collect();
        let id = Operator::identity(d);
        let stepper = match config.representation {
            Representation::SingleCopy => Self {
                representation: config.representation,
                single_dim: d,
                gamma: config.gamma,
                dt: config.dt,
                no_jump: propagator(
                    &single_copy_effective_hamiltonian(h, jumps, config.gamma),
                    config.dt,
                    config.no_jump,
                ),
                jumps: jumps.ops().iter().map(Action::from_operator).collect(),
                marginals: grams.iter().map(Action::from_operator).collect(),
                pair_weights: Vec::new(),
                total: Action::from_operator(&jumps.gram()),
            },
            Representation::Doubled => Self {
                representation: config.representation,
                single_dim: d,
                gamma: config.gamma,
                dt: config.dt,
                no_jump: propagator(
                    &effective_hamiltonian(h, jumps, config.gamma),
                    config.dt,
                    config.no_jump,
                ),
                jumps: jumps.ops().iter().map(|l| Action::from_operator(&l.kron(l))).collect(),
                marginals: grams.iter().map(|g| Action::from_operator(&g.kron(&id))).collect(),
                pair_weights: grams.iter().map(|g| Action::from_operator(&g.kron(g))).collect(),
                total: Action::from_operator(&doubled_anticommutator_operator(jumps)),
            },
        };
        Ok(stepper)
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// Lifts a single-copy vector into this stepper's representation.
    pub fn prepare(&self, phi: &Array1<C64>) -> Array1<C64> {
        let phi = phi.mapv(|z| z / operator::norm(&phi.view()));
        match self.representation {
            Representation::SingleCopy => phi,
            Representation::Doubled => {
                let d = phi.len();
                Array1::from_shape_fn(d * d, |r| phi[r / d] * phi[r % d])
            }
        }
    }

    /// Advances `phi` by one step, drawing from `rng`.
    pub fn step<R: Rng + ?Sized>(&self, phi: &mut Array1<C64>, rng: &mut R) -> Result<StepDiagnostics> {
        let v = phi.view();
        let channel_weights: Vec<f64> = self.marginals.iter().map(|m| m.expectation(&v).re).collect();
        let (pair, total) = match self.representation {
            Representation::SingleCopy => {
                let pair: Vec<f64> = channel_weights.iter().map(|w| w * w).collect();
                let g = self.total.expectation(&v).re;
                (pair, g * g)
            }
            Representation::Doubled => (
                self.pair_weights.iter().map(|m| m.expectation(&v).re).collect(),
                self.total.expectation(&v).re,
            ),
        };
        let delta_p = self.gamma * self.dt * total;
        let mut chosen = None;
        let draw: f64 = rng.random();
        let next = if draw < delta_p {
            let pick: f64 = rng.random();
            let sum: f64 = pair.iter().sum();
            let target = pick * sum;
            let mut acc = 0.0;
            let mut channel = None;
            for (a, &q) in pair.iter().enumerate() {
                acc += q;
                if acc > target {
                    channel = Some(a);
                    break;
                }
            }
            let a = channel.ok_or(Error::ZeroNormAfterJump {
                channel: pair.len().saturating_sub(1),
            })?;
            chosen = Some(a);
            let out = self.jumps[a].apply(&v);
            if operator::norm(&out.view()) == 0.0 {
                return Err(Error::ZeroNormAfterJump { channel: a });
            }
            out
        } else {
            self.no_jump.dot(&v)
        };
        let n = operator::norm(&next.view());
        *phi = next.mapv(|z| z / n);
        Ok(StepDiagnostics {
            delta_p,
            channel_weights,
            chosen,
        })
    }
}

/// Free-function form of [`TrajectoryStepper::step`].
pub fn trajectory_step<R: Rng + ?Sized>(
    stepper: &TrajectoryStepper,
    phi: &mut Array1<C64>,
    rng: &mut R,
) -> Result<StepDiagnostics> {
    stepper.step(phi, rng)
}

/// Reduced-state purity of a pure state, single-copy or doubled.
#[derive(Debug, Clone)]
struct PurityProbe {
    parts: Vec<(usize, u64)>,
    kept_dim: usize,
    basis: FockBasis,
    mask: SubsystemMask,
}

impl PurityProbe {
    fn new(basis: &FockBasis, mask: &SubsystemMask) -> Result<Self> {
        mask.check_basis(basis)?;
        Ok(Self {
            parts: basis.states().iter().map(|&s| mask.split(s)).collect(),
            kept_dim: mask.kept_dim(),
            basis: basis.clone(),
            mask: *mask,
        })
    }

    fn single(&self, phi: &Array1<C64>) -> f64 {
        let mut rho = Array2::<C64>::zeros((self.kept_dim, self.kept_dim));
        for (i, &(ai, bi)) in self.parts.iter().enumerate() {
            for (j, &(aj, bj)) in self.parts.iter().enumerate() {
                if bi == bj {
                    rho[[ai, aj]] += phi[i] * phi[j].conj();
                }
            }
        }
        rho.iter().map(|z| z.norm_sqr()).sum()
    }

    fn doubled(&self, phi: &Array1<C64>) -> Result<f64> {
        let n = phi.len();
        let rho = Array2::from_shape_fn((n, n), |(i, j)| phi[i] * phi[j].conj());
        Ok(swap_trace(&rho.view(), &self.basis, &self.mask)?.re)
    }
}

/// A configured unraveling that can run many trajectories.
#[derive(Debug, Clone)]
pub struct Unraveling {
    config: TrajectoryConfig,
    stepper: TrajectoryStepper,
    probe: PurityProbe,
}

impl Unraveling {
    pub fn new(
        h: &Operator,
        jumps: &JumpOperatorSet,
        basis: &FockBasis,
        mask: &SubsystemMask,
        config: &TrajectoryConfig,
    ) -> Result<Self> {
        if basis.dim() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: h.dim(),
            });
        }
        Ok(Self {
            config: *config,
            stepper: TrajectoryStepper::new(h, jumps, config)?,
            probe: PurityProbe::new(basis, mask)?,
        })
    }

    pub fn config(&self) -> &TrajectoryConfig {
        &self.config
    }

    pub fn stepper(&self) -> &TrajectoryStepper {
        &self.stepper
    }

    fn purity(&self, phi: &Array1<C64>) -> Result<f64> {
        match self.stepper.representation {
            Representation::SingleCopy => Ok(self.probe.single(phi)),
            Representation::Doubled => self.probe.doubled(phi),
        }
    }

    /// One trajectory from the single-copy state `phi0`, seeded directly.
    pub fn run(&self, phi0: &Array1<C64>, seed: u64) -> Result<TrajectoryRecord> {
        if phi0.len() != self.stepper.single_dim {
            return Err(Error::DimensionMismatch {
                expected: self.stepper.single_dim,
                found: phi0.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_steps = self.config.n_steps();
        let dt = self.config.dt;
        let records = emission_steps(n_steps, self.config.record_every);
        let mut next_record = records.iter().peekable();
        let mut phi = self.stepper.prepare(phi0);
        let mut out = TrajectoryRecord {
            times: Vec::with_capacity(records.len()),
            purities: Vec::with_capacity(records.len()),
            jump_log: Vec::new(),
            diagnostics: Vec::with_capacity(records.len()),
        };
        for step in 0..=n_steps {
            let recording = next_record.peek() == Some(&&step);
            if recording {
                next_record.next();
                out.times.push(step as f64 * dt);
                out.purities.push(self.purity(&phi)?);
            }
            if step == n_steps {
                break;
            }
            let diag = self.stepper.step(&mut phi, &mut rng)?;
            if let Some(a) = diag.chosen {
                out.jump_log.push(((step + 1) as f64 * dt, a));
            }
            if recording {
                out.diagnostics.push(diag);
            }
        }
        Ok(out)
    }

    /// `n_trajectories` runs with seeds `seed ⊕ index`, in index order.
    pub fn run_ensemble(&self, phi0: &Array1<C64>, exec: Execution) -> Result<Vec<TrajectoryRecord>> {
        parallel::try_map_indexed(self.config.n_trajectories, exec, |i| {
            self.run(phi0, self.config.trajectory_seed(i))
        })
    }
}

pub fn run_trajectory(
    h: &Operator,
    jumps: &JumpOperatorSet,
    basis: &FockBasis,
    config: &TrajectoryConfig,
    phi0: &Array1<C64>,
    mask: &SubsystemMask,
    seed: u64,
) -> Result<TrajectoryRecord> {
    Unraveling::new(h, jumps, basis, mask, config)?.run(phi0, seed)
}

/// Ensemble estimate `S(t) = -ln mean_k Tr ρ_{A,k}(t)²` with delta-method
/// standard errors `std / (mean √N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEntropy {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mean_purity: Vec<f64>,
}

impl EnsembleEntropy {
    /// Mean entropy over the final 10% of recorded times (at least one),
    /// with the largest standard error in that window.
    pub fn saturation(&self) -> (f64, f64) {
        let n = self.entropy.len();
        let k = (n / 10).max(1);
        let mean = self.entropy[n - k..].iter().sum::<f64>() / k as f64;
        let err = self.stderr[n - k..].iter().copied().fold(0.0, f64::max);
        (mean, err)
    }
}

pub fn ensemble_entropy(records: &[TrajectoryRecord]) -> Result<EnsembleEntropy> {
    if records.len() < 2 {
        return Err(Error::InvalidConfig("ensemble needs at least two records".into()));
    }
    let times = records[0].times.clone();
    if records
        .iter()
        .any(|r| r.times != times || r.purities.len() != times.len())
    {
        return Err(Error::GridMismatch);
    }
    let n = records.len() as f64;
    let mut out = EnsembleEntropy {
        times,
        entropy: Vec::new(),
        stderr: Vec::new(),
        mean_purity: Vec::new(),
    };
    for k in 0..out.times.len() {
        let mean = records.iter().map(|r| r.purities[k]).sum::<f64>() / n;
        let first = records[0].purities[k];
        let var = if records.iter().all(|r| r.purities[k] == first) {
            0.0
        } else {
            records.iter().map(|r| (r.purities[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        };
        if mean <= 0.0 {
            return Err(Error::NonPositivePurity(mean));
        }
        out.entropy.push(-mean.ln());
        out.stderr.push(var.sqrt() / (mean * n.sqrt()));
        out.mean_purity.push(mean);
    }
    Ok(out)
}

//! Rényi-2 functionals over explicit measurement-outcome ensembles
//! `{(p_c, ρ_c)}`.
//!
//! * [`s_total`] – entropy of the outcome-averaged state; includes the
//!   Shannon-like contribution of the outcome distribution itself.
//! * [`s_new`] – `-ln Σ_c p̃_c Tr ρ_c²` with `p̃_c = p_c² / Σ p_c'²`.
//! * [`s_old`] – outcome average of the per-outcome entropies.

use crate::error::{Error, Result};
use crate::operator::{self, Operator, C64};

#[derive(Debug, Clone)]
pub struct OutcomeEnsemble {
    outcomes: Vec<(f64, Operator)>,
}

impl OutcomeEnsemble {
    /// Validates probabilities (nonnegative, summing to one within 1e-10)
    /// and states (Hermitian within 1e-10, unit trace within 1e-8).
    /// Zero-probability outcomes are kept but ignored by every functional.
    pub fn new(outcomes: Vec<(f64, Operator)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidConfig("empty ensemble".into()));
        }
        let dim = outcomes[0].1.dim();
        let mut total = 0.0;
        for (k, (p, rho)) in outcomes.iter().enumerate() {
            if p.is_nan() || *p < 0.0 {
                return Err(Error::InvalidConfig(format!("outcome {k} has probability {p}")));
            }
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            if rho.hermiticity_error() > 1e-10 || (rho.trace() - C64::new(1.0, 0.0)).norm() > 1e-8 {
                return Err(Error::InvalidConfig(format!(
                    "outcome {k} is not a Hermitian unit-trace state"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!("probabilities sum to {total}")));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[(f64, Operator)] {
        &self.outcomes
    }

    fn active(&self) -> impl Iterator<Item = &(f64, Operator)> {
        self.outcomes.iter().filter(|(p, _)| *p > 0.0)
    }
}

fn purity(rho: &Operator) -> f64 {
    operator::trace_of_product(&rho.view(), &rho.view()).re
}

fn neg_log(purity: f64) -> Result<f64> {
    if purity <= 0.0 || !purity.is_finite() {
        return Err(Error::NonPositivePurity(purity));
    }
    Ok(-purity.ln())
}

pub fn s_total(ens: &OutcomeEnsemble) -> Result<f64> {
    let dim = ens.outcomes[0].1.dim();
    let avg = ens.active().fold(Operator::zeros(dim), |acc, (p, rho)| {
        acc.add(&rho.scale(C64::new(*p, 0.0)))
    });
    neg_log(purity(&avg))
}

pub fn s_new(ens: &OutcomeEnsemble) -> Result<f64> {
    let norm: f64 = ens.active().map(|(p, _)| p * p).sum();
    let weighted: f64 = ens.active().map(|(p, rho)| p * p / norm * purity(rho)).sum();
    neg_log(weighted)
}

pub fn s_old(ens: &OutcomeEnsemble) -> Result<f64> {
    ens.active().map(|(p, rho)| neg_log(purity(rho)).map(|s| p * s)).sum()
}

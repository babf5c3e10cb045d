//! Single-copy density-matrix dynamics.
//!
//! Two generators are provided: the measurement Lindbladian on a complete
//! jump set and its post-selected, state-normalised variant that keeps only
//! the first `m` outcomes. Both are integrated with classical RK4 and no
//! renormalisation, so trace drift stays visible as a diagnostic.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Invariant, Result};
use crate::fock::{FockBasis, JumpOperatorSet};
use crate::operator::{self, Operator, C64, I};

/// Smallest post-selection weight accepted before the normalisation is
/// treated as an empty ensemble.
pub const DENOMINATOR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub trace: f64,
    pub hermiticity: f64,
    pub positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trace: 1e-8,
            hermiticity: 1e-10,
            positivity: 1e-8,
        }
    }
}

/// Measured deviations of a state from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// Whether every eigenvalue exceeds `-tolerances.positivity`.
    pub positive: bool,
}

impl InvariantReport {
    pub fn measure(m: &ArrayView2<C64>, tol: &Tolerances) -> Self {
        Self {
            trace_error: (operator::trace(m) - C64::new(1.0, 0.0)).norm(),
            hermiticity_error: operator::hermiticity_error(m),
            positive: operator::is_positive_above(m, tol.positivity),
        }
    }

    pub fn check(&self, step: usize, tol: &Tolerances) -> Result<()> {
        if self.trace_error > tol.trace {
            return Err(Error::InvariantViolation {
                step,
                invariant: Invariant::Trace,
                deviation: self.trace_error,
            });
        }
        if self.hermiticity_error > tol.hermiticity {
            return Err(Error::InvariantViolation {
                step,
                invariant: Invariant::Hermiticity,
                deviation: self.hermiticity_error,
            });
        }
        if !self.positive {
            return Err(Error::InvariantViolation {
                step,
                invariant: Invariant::Positivity,
                deviation: tol.positivity,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: Array2<C64>,
}

impl DensityMatrix {
    /// Wraps a matrix without validating it; see [`DensityMatrix::report`].
    pub fn from_matrix(entries: Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, found: c });
        }
        Ok(Self { entries })
    }

    /// `|ψ⟩⟨ψ|` for a normalised `ψ`.
    pub fn pure(psi: &Array1<C64>) -> Self {
        let n = psi.len();
        Self {
            entries: Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj()),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: Array2::eye(dim).mapv(|z: C64| z / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.entries.view()
    }

    pub fn trace(&self) -> C64 {
        operator::trace(&self.view())
    }

    pub fn purity(&self) -> f64 {
        operator::trace_of_product(&self.view(), &self.view()).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        operator::min_eigenvalue(&self.view())
    }

    pub fn report(&self, tol: &Tolerances) -> InvariantReport {
        InvariantReport::measure(&self.view(), tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    /// Total time in units of `1/J`.
    pub t_total: f64,
    pub n_steps: usize,
    /// Constant measurement rate `γ`.
    pub measurement_rate: f64,
    /// Number of outcomes kept by post-selection; `None` keeps all of them.
    pub retained_channels: Option<usize>,
    /// Emit (and check) the state every this many steps.
    pub check_every: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            t_total: 30.0,
            n_steps: 11_000,
            measurement_rate: 1.0,
            retained_channels: None,
            check_every: 100,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be positive".into()));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return Err(Error::InvalidConfig("t_total must be positive".into()));
        }
        if !(self.measurement_rate >= 0.0 && self.measurement_rate.is_finite()) {
            return Err(Error::InvalidConfig("measurement rate must be nonnegative".into()));
        }
        if self.check_every == 0 {
            return Err(Error::InvalidConfig("check_every must be positive".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_total / self.n_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// A bipartition of the chain into the leftmost `L_A` sites (A) and the
/// rest (B). [`SubsystemMask::complement`] keeps B instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsystemMask {
    l_a: usize,
    n_sites: usize,
    keep: Side,
}

impl SubsystemMask {
    pub fn prefix(l_a: usize, n_sites: usize) -> Result<Self> {
        if l_a == 0 || l_a >= n_sites {
            return Err(Error::InvalidSubsystem { l_a, n_sites });
        }
        Ok(Self {
            l_a,
            n_sites,
            keep: Side::Left,
        })
    }

    pub fn complement(&self) -> Self {
        Self {
            keep: match self.keep {
                Side::Left => Side::Right,
                Side::Right => Side::Left,
            },
            ..*self
        }
    }

    pub fn l_a(&self) -> usize {
        self.l_a
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of sites in the kept region.
    pub fn kept_sites(&self) -> usize {
        match self.keep {
            Side::Left => self.l_a,
            Side::Right => self.n_sites - self.l_a,
        }
    }

    pub fn kept_dim(&self) -> usize {
        1 << self.kept_sites()
    }

    /// `(kept, traced)` occupation patterns of a basis state.
    pub fn split(&self, state: u64) -> (usize, u64) {
        let tail = self.n_sites - self.l_a;
        let low = state & ((1u64 << tail) - 1);
        let high = state >> tail;
        match self.keep {
            Side::Left => (high as usize, low),
            Side::Right => (low as usize, high),
        }
    }

    pub(crate) fn check_basis(&self, basis: &FockBasis) -> Result<()> {
        if basis.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: basis.n_sites(),
                found: self.n_sites,
            });
        }
        Ok(())
    }
}

/// `Σ_a L_a ρ L_a†` for a fixed list of jump operators. Diagonal operators
/// collapse to a Hadamard product with a precomputed weight matrix.
#[derive(Debug, Clone)]
pub(crate) enum Sandwich {
    Hadamard(Array2<C64>),
    Dense {
        ops: Vec<(Array2<C64>, Array2<C64>)>,
        gram: Array2<C64>,
    },
}

impl Sandwich {
    pub(crate) fn from_diagonals(diags: &[Array1<C64>]) -> Self {
        let n = diags[0].len();
        let mut w = Array2::<C64>::zeros((n, n));
        for d in diags {
            for i in 0..n {
                for j in 0..n {
                    w[[i, j]] += d[i] * d[j].conj();
                }
            }
        }
        Sandwich::Hadamard(w)
    }

    pub(crate) fn from_operators(ops: &[Operator]) -> Self {
        let diags: Option<Vec<_>> = ops.iter().map(Operator::as_diagonal).collect();
        if let Some(diags) = diags {
            return Self::from_diagonals(&diags);
        }
        let n = ops[0].dim();
        let mut gram = Array2::<C64>::zeros((n, n));
        let ops = ops
            .iter()
            .map(|op| {
                let l = op.entries().clone();
                let ld = operator::adjoint(&l.view());
                gram = &gram + &ld.dot(&l);
                (l, ld)
            })
            .collect();
        Sandwich::Dense { ops, gram }
    }

    pub(crate) fn apply(&self, rho: &ArrayView2<C64>) -> Array2<C64> {
        match self {
            Sandwich::Hadamard(w) => w * rho,
            Sandwich::Dense { ops, .. } => {
                let mut out = Array2::zeros(rho.raw_dim());
                for (l, ld) in ops {
                    out = out + l.dot(rho).dot(ld);
                }
                out
            }
        }
    }

    /// `Tr Σ_a L_a ρ L_a†`.
    pub(crate) fn weight(&self, rho: &ArrayView2<C64>) -> C64 {
        match self {
            Sandwich::Hadamard(w) => w.diag().iter().zip(rho.diag().iter()).map(|(a, b)| a * b).sum(),
            Sandwich::Dense { gram, .. } => operator::trace_of_product(&gram.view(), rho),
        }
    }
}

/// Anything that maps a state matrix to its time derivative.
pub trait Generator {
    fn derivative(&self, rho: &ArrayView2<C64>) -> Result<Array2<C64>>;

    /// Writes the derivative into `out`, reusing its storage when the shape
    /// already matches.
    fn derivative_into(&self, rho: &ArrayView2<C64>, out: &mut Array2<C64>) -> Result<()> {
        *out = self.derivative(rho)?;
        Ok(())
    }
}

fn commutator_term(h: &Array2<C64>, rho: &ArrayView2<C64>) -> Array2<C64> {
    (h.dot(rho) - rho.dot(h)).mapv(|z| -I * z)
}

fn check_dims(expected: usize, rho: &ArrayView2<C64>) -> Result<()> {
    let (r, c) = rho.dim();
    if r != expected || c != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: if r != expected { r } else { c },
        });
    }
    Ok(())
}

/// `-i[H,ρ] + γ Σ_a (L_a ρ L_a† - ½{L_a†L_a, ρ})`.
#[derive(Debug, Clone)]
pub struct CompleteLindblad {
    h: Array2<C64>,
    sandwich: Sandwich,
    gram: Array2<C64>,
    gamma: f64,
}

impl CompleteLindblad {
    pub fn new(h: &Operator, jumps: &JumpOperatorSet, gamma: f64) -> Result<Self> {
        if h.dim() != jumps.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: jumps.dim(),
            });
        }
        Ok(Self {
            h: h.entries().clone(),
            sandwich: Sandwich::from_operators(jumps.ops()),
            gram: jumps.gram().into_entries(),
            gamma,
        })
    }
}

impl Generator for CompleteLindblad {
    fn derivative(&self, rho: &ArrayView2<C64>) -> Result<Array2<C64>> {
        check_dims(self.h.nrows(), rho)?;
        let mut out = commutator_term(&self.h, rho);
        if self.gamma != 0.0 {
            let jump = self.sandwich.apply(rho);
            let anti = self.gram.dot(rho) + rho.dot(&self.gram);
            out = out + (jump - anti.mapv(|z| z * 0.5)).mapv(|z| z * self.gamma);
        }
        Ok(out)
    }
}

/// `-i[H,ρ] + γ Σ_{a≤m} L_a ρ L_a† / Σ_{b≤m} Tr(L_b ρ L_b†) - (γ/2) Σ_{a≤n} {L_a†L_a, ρ}`.
#[derive(Debug, Clone)]
pub struct PostSelectedLindblad {
    h: Array2<C64>,
    retained: Sandwich,
    gram: Array2<C64>,
    gamma: f64,
}

impl PostSelectedLindblad {
    pub fn new(h: &Operator, jumps: &JumpOperatorSet, retained: usize, gamma: f64) -> Result<Self> {
        if h.dim() != jumps.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: jumps.dim(),
            });
        }
        let kept = jumps.truncated(retained)?;
        Ok(Self {
            h: h.entries().clone(),
            retained: Sandwich::from_operators(kept.ops()),
            gram: jumps.gram().into_entries(),
            gamma,
        })
    }
}

impl Generator for PostSelectedLindblad {
    fn derivative(&self, rho: &ArrayView2<C64>) -> Result<Array2<C64>> {
        check_dims(self.h.nrows(), rho)?;
        let mut out = commutator_term(&self.h, rho);
        if self.gamma != 0.0 {
            let weight = self.retained.weight(rho).re;
            if weight <= DENOMINATOR_EPS {
                return Err(Error::DenominatorVanished {
                    weight,
                    threshold: DENOMINATOR_EPS,
                });
            }
            let jump = self.retained.apply(rho).mapv(|z| z / weight);
            let anti = self.gram.dot(rho) + rho.dot(&self.gram);
            out = out + (jump - anti.mapv(|z| z * 0.5)).mapv(|z| z * self.gamma);
        }
        Ok(out)
    }
}

pub fn rhs_complete(h: &Operator, jumps: &JumpOperatorSet, gamma: f64, rho: &DensityMatrix) -> Result<Array2<C64>> {
    CompleteLindblad::new(h, jumps, gamma)?.derivative(&rho.view())
}

pub fn rhs_postselected(
    h: &Operator,
    jumps: &JumpOperatorSet,
    retained: usize,
    gamma: f64,
    rho: &DensityMatrix,
) -> Result<Array2<C64>> {
    PostSelectedLindblad::new(h, jumps, retained, gamma)?.derivative(&rho.view())
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<F>(rhs: F, rho: &Array2<C64>, dt: f64) -> Result<Array2<C64>>
where
    F: Fn(&ArrayView2<C64>) -> Result<Array2<C64>>,
{
    let stage = |k: &Array2<C64>, h: f64| {
        let mut t = rho.clone();
        t.zip_mut_with(k, |a, &b| *a += b * h);
        t
    };
    let k1 = rhs(&rho.view())?;
    let k2 = rhs(&stage(&k1, dt / 2.0).view())?;
    let k3 = rhs(&stage(&k2, dt / 2.0).view())?;
    let k4 = rhs(&stage(&k3, dt).view())?;
    let mut out = rho.clone();
    let w = dt / 6.0;
    ndarray::Zip::from(&mut out)
        .and(&k1)
        .and(&k2)
        .and(&k3)
        .and(&k4)
        .for_each(|o, &a, &b, &c, &d| *o += (a + (b + c) * 2.0 + d) * w);
    Ok(out)
}

/// Reusable buffers for repeated RK4 steps.
struct Rk4Workspace {
    k: [Array2<C64>; 4],
    stage: Array2<C64>,
}

impl Rk4Workspace {
    fn new(dim: (usize, usize)) -> Self {
        let z = || Array2::zeros(dim);
        Self {
            k: [z(), z(), z(), z()],
            stage: z(),
        }
    }

    /// Same arithmetic as [`rk4_step`], updating `rho` in place.
    fn step<G: Generator + ?Sized>(&mut self, generator: &G, rho: &mut Array2<C64>, dt: f64) -> Result<()> {
        let stage = &mut self.stage;
        generator.derivative_into(&rho.view(), &mut self.k[0])?;
        for (i, h) in [(1, dt / 2.0), (2, dt / 2.0), (3, dt)] {
            let (done, rest) = self.k.split_at_mut(i);
            ndarray::Zip::from(&mut *stage)
                .and(&*rho)
                .and(&done[i - 1])
                .for_each(|s, &r, &kv| *s = r + kv * h);
            generator.derivative_into(&stage.view(), &mut rest[0])?;
        }
        let [k1, k2, k3, k4] = &self.k;
        let w = dt / 6.0;
        ndarray::Zip::from(rho)
            .and(k1)
            .and(k2)
            .and(k3)
            .and(k4)
            .for_each(|o, &a, &b, &c, &d| *o += (a + (b + c) * 2.0 + d) * w);
        Ok(())
    }
}

/// Emission steps `0, every, 2·every, ..., n_steps` (the last is always
/// included).
pub(crate) fn emission_steps(n_steps: usize, every: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=n_steps).step_by(every).collect();
    if *steps.last().unwrap() != n_steps {
        steps.push(n_steps);
    }
    steps
}

/// Drives `generator` with RK4, calling `on_emit(step, t, state)` at every
/// emission step after checking the density-matrix invariants.
pub(crate) fn integrate<G, F>(
    generator: &G,
    rho0: Array2<C64>,
    n_steps: usize,
    dt: f64,
    check_every: usize,
    tol: &Tolerances,
    mut on_emit: F,
) -> Result<Array2<C64>>
where
    G: Generator + ?Sized,
    F: FnMut(usize, f64, &Array2<C64>, &InvariantReport) -> Result<()>,
{
    let mut rho = rho0;
    let mut work = Rk4Workspace::new(rho.dim());
    for step in 0..=n_steps {
        if step % check_every == 0 || step == n_steps {
            let report = InvariantReport::measure(&rho.view(), tol);
            report.check(step, tol)?;
            on_emit(step, step as f64 * dt, &rho, &report)?;
        }
        if step < n_steps {
            work.step(generator, &mut rho, dt)?;
        }
    }
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleCopyEquation {
    /// Complete measurement basis.
    Complete,
    /// Post-selection on the first `retained_channels` outcomes.
    PostSelected,
}

/// Integrates the chosen single-copy equation and returns `(t, ρ(t))` at
/// every emission step.
pub fn evolve(
    h: &Operator,
    jumps: &JumpOperatorSet,
    config: &EvolutionConfig,
    equation: SingleCopyEquation,
    rho0: &DensityMatrix,
) -> Result<Vec<(f64, DensityMatrix)>> {
    config.validate()?;
    let tol = Tolerances::default();
    InvariantReport::measure(&rho0.view(), &tol).check(0, &tol)?;
    let generator: Box<dyn Generator> = match equation {
        SingleCopyEquation::Complete => Box::new(CompleteLindblad::new(h, jumps, config.measurement_rate)?),
        SingleCopyEquation::PostSelected => Box::new(PostSelectedLindblad::new(
            h,
            jumps,
            config.retained_channels.unwrap_or(jumps.len()),
            config.measurement_rate,
        )?),
    };
    let mut out = Vec::with_capacity(config.n_steps / config.check_every + 2);
    integrate(
        generator.as_ref(),
        rho0.entries().clone(),
        config.n_steps,
        config.dt(),
        config.check_every,
        &tol,
        |_, t, rho, _| {
            out.push((t, DensityMatrix { entries: rho.clone() }));
            Ok(())
        },
    )?;
    Ok(out)
}

/// Reduced density matrix on the kept region, indexed by its occupation
/// bitstrings (all particle numbers).
pub fn partial_trace(rho: &DensityMatrix, basis: &FockBasis, mask: &SubsystemMask) -> Result<Operator> {
    mask.check_basis(basis)?;
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho.dim(),
        });
    }
    let parts: Vec<(usize, u64)> = basis.states().iter().map(|&s| mask.split(s)).collect();
    let mut out = Array2::<C64>::zeros((mask.kept_dim(), mask.kept_dim()));
    for (i, &(ai, bi)) in parts.iter().enumerate() {
        for (j, &(aj, bj)) in parts.iter().enumerate() {
            if bi == bj {
                out[[ai, aj]] += rho.entries()[[i, j]];
            }
        }
    }
    Operator::new(out)
}

/// Second Rényi entropy `-ln Tr ρ²` (natural log).
pub fn renyi2(rho_reduced: &Operator) -> Result<f64> {
    let purity = operator::trace_of_product(&rho_reduced.view(), &rho_reduced.view()).re;
    if purity <= 0.0 || !purity.is_finite() {
        return Err(Error::NonPositivePurity(purity));
    }
    Ok(-purity.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, build_hamiltonian, build_jump_operators, parse_product_state, HamiltonianParams};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn two_site() -> (FockBasis, Operator, JumpOperatorSet) {
        let b = build_basis(2, 1).unwrap();
        let h = build_hamiltonian(&b, &HamiltonianParams::default());
        let j = build_jump_operators(&b);
        (b, h, j)
    }

    #[test]
    fn unitary_limit_is_commutator() {
        let (b, h, j) = two_site();
        let rho = DensityMatrix::pure(&parse_product_state("01", &b).unwrap());
        let d = rhs_complete(&h, &j, 0.0, &rho).unwrap();
        let expect = commutator_term(h.entries(), &rho.view());
        assert_eq!(d, expect);
        let d = rhs_postselected(&h, &j, 1, 0.0, &rho).unwrap();
        assert_eq!(d, expect);
    }

    #[test]
    fn maximally_mixed_is_stationary() {
        let (_, h, j) = two_site();
        let rho = DensityMatrix::maximally_mixed(2);
        let d = rhs_complete(&h, &j, 1.0, &rho).unwrap();
        assert!(d.iter().all(|z| z.norm() <= 1e-15));
    }

    #[test]
    fn complete_rhs_is_traceless() {
        let (b, h, j) = two_site();
        let rho = DensityMatrix::pure(&parse_product_state("01", &b).unwrap());
        let d = rhs_complete(&h, &j, 1.0, &rho).unwrap();
        assert!(operator::trace(&d.view()).norm() <= 1e-14);
        assert!(operator::hermiticity_error(&d.view()) <= 1e-14);
    }

    #[test]
    fn postselection_on_empty_outcome_fails() {
        // L_{1,1} projects site 1 onto "occupied"; |01⟩ has site 1 empty.
        let (b, h, _) = two_site();
        let full = build_jump_operators(&b);
        let occupied = JumpOperatorSet::new(
            vec![full.ops()[1].clone(), full.ops()[0].clone()],
            vec![full.labels()[1], full.labels()[0]],
        )
        .unwrap();
        let rho = DensityMatrix::pure(&parse_product_state("01", &b).unwrap());
        let err = rhs_postselected(&h, &occupied, 1, 1.0, &rho).unwrap_err();
        assert!(matches!(err, Error::DenominatorVanished { .. }));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (_, h, j) = two_site();
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            rhs_complete(&h, &j, 1.0, &rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rk4_zero_rhs_is_identity() {
        let rho = DensityMatrix::maximally_mixed(3);
        let out = rk4_step(|r| Ok(Array2::zeros(r.raw_dim())), rho.entries(), 0.1).unwrap();
        assert_eq!(&out, rho.entries());
    }

    #[test]
    fn rk4_phase_rotation_has_fifth_order_local_error() {
        let omega = 1.7;
        let h = Operator::from_real_diagonal(&[0.0, omega]);
        let jumps = JumpOperatorSet::new(
            vec![Operator::identity(2)],
            vec![crate::fock::JumpLabel { site: 0, outcome: 0 }],
        )
        .unwrap();
        let gen = CompleteLindblad::new(&h, &jumps, 0.0).unwrap();
        let rho = array![[c(0.5), c(0.5)], [c(0.5), c(0.5)]];
        let mut errs = Vec::new();
        for dt in [1e-2, 5e-3] {
            let out = rk4_step(|r| gen.derivative(r), &rho, dt).unwrap();
            // ρ_01(t) = ½ e^{iωt}
            let exact = C64::from_polar(0.5, omega * dt);
            errs.push((out[[0, 1]] - exact).norm());
        }
        assert!(errs[0] < 1e-10);
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn rk4_step_preserves_trace() {
        let b = build_basis(4, 2).unwrap();
        let h = build_hamiltonian(&b, &HamiltonianParams::default());
        let j = build_jump_operators(&b);
        let gen = PostSelectedLindblad::new(&h, &j, 3, 2.0).unwrap();
        let rho = DensityMatrix::pure(&parse_product_state("0011", &b).unwrap());
        let out = rk4_step(|r| gen.derivative(r), rho.entries(), 0.01).unwrap();
        assert!((operator::trace(&out.view()) - c(1.0)).norm() < 1e-13);
    }

    #[test]
    fn evolve_decoheres_pure_state() {
        let b = build_basis(4, 2).unwrap();
        let h = build_hamiltonian(&b, &HamiltonianParams::default());
        let j = build_jump_operators(&b);
        let cfg = EvolutionConfig {
            t_total: 2.0,
            n_steps: 400,
            measurement_rate: 1.0,
            retained_channels: None,
            check_every: 20,
        };
        let rho0 = DensityMatrix::pure(&parse_product_state("0101", &b).unwrap());
        let series = evolve(&h, &j, &cfg, SingleCopyEquation::Complete, &rho0).unwrap();
        assert_eq!(series.len(), 21);
        assert_abs_diff_eq!(series[0].1.purity(), 1.0, epsilon = 1e-14);
        assert!(series[1].1.purity() < 1.0);
        assert!(series.last().unwrap().1.purity() < series[1].1.purity());
    }

    #[test]
    fn evolve_rejects_invalid_initial_state() {
        let (_, h, j) = two_site();
        let bad = DensityMatrix::from_matrix(array![[c(0.7), c(0.0)], [c(0.0), c(0.7)]]).unwrap();
        let err = evolve(&h, &j, &EvolutionConfig::default(), SingleCopyEquation::Complete, &bad).unwrap_err();
        assert!(matches!(
            err,
            Error::InvariantViolation {
                step: 0,
                invariant: Invariant::Trace,
                ..
            }
        ));
    }

    #[test]
    fn partial_traces_by_hand() {
        let b = build_basis(6, 3).unwrap();
        let rho = DensityMatrix::pure(&parse_product_state("000111", &b).unwrap());
        let mask = SubsystemMask::prefix(3, 6).unwrap();
        let ra = partial_trace(&rho, &b, &mask).unwrap();
        assert_eq!(ra.dim(), 8);
        assert_eq!(ra.entries()[[0, 0]], c(1.0));
        assert_abs_diff_eq!(renyi2(&ra).unwrap(), 0.0);

        let b = build_basis(2, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let psi = ndarray::arr1(&[c(s), c(s)]);
        let mask = SubsystemMask::prefix(1, 2).unwrap();
        let ra = partial_trace(&DensityMatrix::pure(&psi), &b, &mask).unwrap();
        assert_abs_diff_eq!(ra.entries()[[0, 0]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ra.entries()[[1, 1]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ra.entries()[[0, 1]].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(renyi2(&ra).unwrap(), 2f64.ln(), epsilon = 1e-14);

        let ra = partial_trace(&DensityMatrix::maximally_mixed(2), &b, &mask).unwrap();
        assert_abs_diff_eq!(ra.entries()[[0, 0]].re, 0.5);
        assert_abs_diff_eq!(ra.entries()[[1, 1]].re, 0.5);
    }

    #[test]
    fn renyi2_values() {
        assert_abs_diff_eq!(renyi2(&Operator::from_real_diagonal(&[1.0, 0.0])).unwrap(), 0.0);
        assert_abs_diff_eq!(
            renyi2(&Operator::from_real_diagonal(&[0.5, 0.5])).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            renyi2(&Operator::from_real_diagonal(&[0.75, 0.25])).unwrap(),
            -(0.625f64).ln(),
            epsilon = 1e-15
        );
        assert!(matches!(renyi2(&Operator::zeros(2)), Err(Error::NonPositivePurity(_))));
    }

    #[test]
    fn subsystem_validation() {
        assert!(SubsystemMask::prefix(0, 4).is_err());
        assert!(SubsystemMask::prefix(4, 4).is_err());
        let m = SubsystemMask::prefix(1, 4).unwrap();
        assert_eq!(m.split(0b1011), (1, 0b011));
        assert_eq!(m.complement().split(0b1011), (0b011, 1));
        assert_eq!(m.complement().kept_dim(), 8);
    }

    #[test]
    fn emission_includes_endpoints() {
        assert_eq!(emission_steps(10, 4), vec![0, 4, 8, 10]);
        assert_eq!(emission_steps(10, 5), vec![0, 5, 10]);
    }
}

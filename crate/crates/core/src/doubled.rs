//! Two-copy ("doubled") dynamics and the swap-operator Rényi entropy.
//!
//! Index convention: a doubled basis state `|m⟩_L ⊗ |s⟩_R` has row index
//! `m * d + s`, so the L copy is the major index everywhere (tensor
//! squares, partial traces, swap, Kronecker products).

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, JumpOperatorSet};
use crate::master::{
    integrate, DensityMatrix, EvolutionConfig, Generator, InvariantReport, Sandwich, SubsystemMask, Tolerances,
    DENOMINATOR_EPS,
};
use crate::operator::{self, Operator, SparseRows, C64, I};

/// Largest imaginary part tolerated in a swap trace.
pub const SWAP_IMAG_TOL: f64 = 1e-8;

/// Completeness tolerance that enables the `γρ^D` anticommutator shortcut.
const COLLAPSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DoubledDensityMatrix {
    single_dim: usize,
    entries: Array2<C64>,
}

impl DoubledDensityMatrix {
    pub fn from_matrix(single_dim: usize, entries: Array2<C64>) -> Result<Self> {
        let dd = single_dim * single_dim;
        if entries.dim() != (dd, dd) {
            return Err(Error::DimensionMismatch {
                expected: dd,
                found: entries.nrows(),
            });
        }
        Ok(Self { single_dim, entries })
    }

    pub fn single_dim(&self) -> usize {
        self.single_dim
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

    pub fn report(&self, tol: &Tolerances) -> InvariantReport {
        InvariantReport::measure(&self.view(), tol)
    }
}

/// `ρ^D_{(m,s),(n,t)} = ρ_{mn} ρ_{st}`.
pub fn tensor_square(rho: &DensityMatrix) -> DoubledDensityMatrix {
    DoubledDensityMatrix {
        single_dim: rho.dim(),
        entries: operator::kron(&rho.view(), &rho.view()),
    }
}

/// `H ⊗ I + I ⊗ H`.
pub fn doubled_hamiltonian(h: &Operator) -> Operator {
    let id = Operator::identity(h.dim());
    h.kron(&id).add(&id.kron(h))
}

/// Full-space swap `X |α⟩_L |β⟩_R = |β⟩_L |α⟩_R` on `d²` dimensions.
pub fn swap_operator(d: usize) -> Operator {
    let mut x = Array2::<C64>::zeros((d * d, d * d));
    for a in 0..d {
        for b in 0..d {
            x[[b * d + a, a * d + b]] = C64::new(1.0, 0.0);
        }
    }
    Operator::new(x).expect("square")
}

/// `Σ_{a,b} (L_a†L_a) ⊗ (L_b†L_b)`, accumulated term by term.
pub fn doubled_anticommutator_operator(jumps: &JumpOperatorSet) -> Operator {
    let grams: Vec<Operator> = jumps.ops().iter().map(|l| l.adjoint().matmul(l)).collect();
    let dd = jumps.dim() * jumps.dim();
    let mut acc = Operator::zeros(dd);
    for ga in &grams {
        for gb in &grams {
            acc = acc.add(&ga.kron(gb));
        }
    }
    acc
}

/// Paired jump operators `L_a ⊗ L_a` for the first `retained` channels.
pub fn paired_jump_operators(jumps: &JumpOperatorSet, retained: usize) -> Result<Vec<Operator>> {
    let kept = jumps.truncated(retained)?;
    Ok(kept.ops().iter().map(|l| l.kron(l)).collect())
}

/// `(H ⊗ I + I ⊗ H) ρ` using the row structure of the doubled index.
const TILE: usize = 16;

/// Rows of `H⊗I + I⊗H` as `(column, value)` lists, diagonal included.
fn doubled_rows(h: &Operator) -> Vec<Vec<(usize, C64)>> {
    let sparse = SparseRows::from_dense(&h.view());
    let d = sparse.dim();
    let diag = sparse.diagonal();
    (0..d * d)
        .map(|r| {
            let (m, s_) = (r / d, r % d);
            let mut row: Vec<(usize, C64)> = Vec::new();
            let delta = diag[m] + diag[s_];
            if delta.norm() != 0.0 {
                row.push((r, delta));
            }
            row.extend(sparse.off_row(m).iter().map(|&(k, v)| (k * d + s_, v)));
            row.extend(sparse.off_row(s_).iter().map(|&(k, v)| (m * d + k, v)));
            row.sort_by_key(|&(k, _)| k);
            row
        })
        .collect()
}

trait Coefficient: Copy {
    fn times(self, z: C64) -> C64;
    fn conj_times(self, z: C64) -> C64;
}

impl Coefficient for f64 {
    fn times(self, z: C64) -> C64 {
        C64::new(self * z.re, self * z.im)
    }
    fn conj_times(self, z: C64) -> C64 {
        self.times(z)
    }
}

impl Coefficient for C64 {
    fn times(self, z: C64) -> C64 {
        self * z
    }
    fn conj_times(self, z: C64) -> C64 {
        self.conj() * z
    }
}

#[derive(Debug, Clone)]
enum DoubledRows {
    Real(Vec<Vec<(usize, f64)>>),
    Complex(Vec<Vec<(usize, C64)>>),
}

impl DoubledRows {
    fn new(h: &Operator) -> Self {
        let rows = doubled_rows(h);
        if rows.iter().flatten().all(|(_, v)| v.im == 0.0) {
            DoubledRows::Real(
                rows.into_iter()
                    .map(|row| row.into_iter().map(|(k, v)| (k, v.re)).collect())
                    .collect(),
            )
        } else {
            DoubledRows::Complex(rows)
        }
    }

    /// Upper triangle of `-i[H^D, ρ]` into `dst`.
    fn commutator_upper(&self, src: &[C64], dst: &mut [C64], dd: usize) {
        match self {
            DoubledRows::Real(rows) => commutator_upper(rows, src, dst, dd),
            DoubledRows::Complex(rows) => commutator_upper(rows, src, dst, dd),
        }
    }
}

/// Row `i` of `H^D ρ` comes from neighbouring rows of `ρ`; row `i` of
/// `ρ H^D` is gathered within row `i`.
fn commutator_upper<T: Coefficient>(rows: &[Vec<(usize, T)>], src: &[C64], dst: &mut [C64], dd: usize) {
    let mut acc = vec![C64::new(0.0, 0.0); dd];
    for i in 0..dd {
        let acc = &mut acc[i..];
        acc.fill(C64::new(0.0, 0.0));
        for &(k, v) in &rows[i] {
            for (a, x) in acc.iter_mut().zip(&src[k * dd + i..(k + 1) * dd]) {
                *a += v.times(*x);
            }
        }
        let row = &src[i * dd..(i + 1) * dd];
        for (jj, left) in acc.iter().enumerate() {
            let j = i + jj;
            let right: C64 = rows[j].iter().map(|&(k, v)| v.conj_times(row[k])).sum();
            dst[i * dd + j] = -I * (left - right);
        }
    }
}

/// Generalized Lindblad generator on the doubled space with EPR-paired
/// jumps and a state-dependent normalisation:
///
/// `-i[H^D, ρ^D] + γ Σ_a (L_a⊗L_a) ρ^D (L_a⊗L_a)† / Σ_b Tr(...) - (γ/2) Σ_{a,b} {(L_a†L_a)⊗(L_b†L_b), ρ^D}`.
///
/// The commutator is evaluated as `X - X†` with `X = H^D ρ^D`, which holds
/// for the Hermitian states the generator is defined on.
#[derive(Debug, Clone)]
pub struct DoubledLindblad {
    rows: DoubledRows,
    single_dim: usize,
    gamma: f64,
    pairs: Sandwich,
    anticommutator: Option<Array2<C64>>,
}

impl DoubledLindblad {
    pub fn new(h: &Operator, jumps: &JumpOperatorSet, gamma: f64) -> Result<Self> {
        Self::with_retained(h, jumps, jumps.len(), gamma)
    }

    /// Keeps only the first `retained` paired channels in the jump term.
    pub fn with_retained(h: &Operator, jumps: &JumpOperatorSet, retained: usize, gamma: f64) -> Result<Self> {
        if h.dim() != jumps.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: jumps.dim(),
            });
        }
        if h.hermiticity_error() > 0.0 {
            return Err(Error::InvalidConfig("doubled generator needs a Hermitian H".into()));
        }
        let kept = jumps.truncated(retained)?;
        let pairs = match kept.diagonals() {
            Some(diags) => {
                let paired: Vec<Array1<C64>> = diags
                    .iter()
                    .map(|l| {
                        let d = l.len();
                        Array1::from_shape_fn(d * d, |r| l[r / d] * l[r % d])
                    })
                    .collect();
                Sandwich::from_diagonals(&paired)
            }
            None => Sandwich::from_operators(&paired_jump_operators(jumps, retained)?),
        };
        let k = doubled_anticommutator_operator(jumps);
        let collapsed = k.max_abs_diff(&Operator::identity(k.dim())) <= COLLAPSE_TOL;
        Ok(Self {
            rows: DoubledRows::new(h),
            single_dim: h.dim(),
            gamma,
            pairs,
            anticommutator: if collapsed { None } else { Some(k.into_entries()) },
        })
    }

    pub fn single_dim(&self) -> usize {
        self.single_dim
    }

    /// Whether the anticommutator is replaced by `γρ^D`.
    pub fn uses_collapsed_anticommutator(&self) -> bool {
        self.anticommutator.is_none()
    }

    /// `Σ_b Tr((L_b⊗L_b) ρ^D (L_b⊗L_b)†)`.
    pub fn postselection_weight(&self, rho: &ArrayView2<C64>) -> f64 {
        self.pairs.weight(rho).re
    }
}

impl Generator for DoubledLindblad {
    fn derivative(&self, rho: &ArrayView2<C64>) -> Result<Array2<C64>> {
        let mut out = Array2::zeros(rho.raw_dim());
        self.derivative_into(rho, &mut out)?;
        Ok(out)
    }

    fn derivative_into(&self, rho: &ArrayView2<C64>, out: &mut Array2<C64>) -> Result<()> {
        let dd = self.single_dim * self.single_dim;
        if rho.dim() != (dd, dd) {
            return Err(Error::DimensionMismatch {
                expected: dd,
                found: rho.nrows(),
            });
        }
        let rho = rho.as_standard_layout();
        let src = rho.as_slice().expect("standard layout");
        let g = self.gamma;
        let mut scale = 0.0;
        if g != 0.0 {
            let weight = self.postselection_weight(&rho.view());
            if weight <= DENOMINATOR_EPS {
                return Err(Error::DenominatorVanished {
                    weight,
                    threshold: DENOMINATOR_EPS,
                });
            }
            scale = g / weight;
        }
        let hadamard = match &self.pairs {
            Sandwich::Hadamard(w) if g != 0.0 => Some(w.as_standard_layout()),
            _ => None,
        };
        let w = hadamard.as_ref().map(|w| w.as_slice().expect("standard layout"));
        let decay = if self.anticommutator.is_none() { g } else { 0.0 };
        if out.dim() != (dd, dd) || !out.is_standard_layout() {
            *out = Array2::zeros((dd, dd));
        }
        let dst = out.as_slice_mut().expect("standard layout");
        self.rows.commutator_upper(src, dst, dd);
        if g != 0.0 {
            for i in 0..dd {
                for j in i..dd {
                    let ij = i * dd + j;
                    let r = src[ij];
                    let mut v = -r * decay;
                    if let Some(w) = w {
                        v += r * (w[ij] * scale);
                    }
                    dst[ij] += v;
                }
            }
        }
        for ib in (0..dd).step_by(TILE) {
            for jb in (0..=ib).step_by(TILE) {
                for i in ib..(ib + TILE).min(dd) {
                    for j in jb..(jb + TILE).min(i) {
                        dst[i * dd + j] = dst[j * dd + i].conj();
                    }
                }
            }
        }
        if g == 0.0 {
            return Ok(());
        }
        if w.is_none() {
            out.zip_mut_with(&self.pairs.apply(&rho.view()), |o, &a| *o += a * scale);
        }
        if let Some(k) = &self.anticommutator {
            let anti = k.dot(&rho) + rho.dot(k);
            out.zip_mut_with(&anti, |o, &a| *o -= a * (g / 2.0));
        }
        Ok(())
    }
}

pub fn rhs_doubled(
    h: &Operator,
    jumps: &JumpOperatorSet,
    gamma: f64,
    rho: &DoubledDensityMatrix,
) -> Result<Array2<C64>> {
    DoubledLindblad::new(h, jumps, gamma)?.derivative(&rho.view())
}

/// `Tr_{L_B,R_B} ρ^D`, indexed by `(α_L, α_R)` with the L copy major.
pub fn reduce_doubled(rho: &ArrayView2<C64>, basis: &FockBasis, mask: &SubsystemMask) -> Result<Array2<C64>> {
    mask.check_basis(basis)?;
    let d = basis.dim();
    if rho.dim() != (d * d, d * d) {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: rho.nrows(),
        });
    }
    let da = mask.kept_dim();
    let parts: Vec<(usize, u64)> = basis.states().iter().map(|&s| mask.split(s)).collect();
    let mut partners: std::collections::HashMap<u64, Vec<(usize, usize)>> = Default::default();
    for (i, &(a, b)) in parts.iter().enumerate() {
        partners.entry(b).or_default().push((i, a));
    }
    let mut out = Array2::<C64>::zeros((da * da, da * da));
    for (i, &(ai, bi)) in parts.iter().enumerate() {
        for (j, &(aj, bj)) in parts.iter().enumerate() {
            let row = i * d + j;
            for &(ip, aip) in &partners[&bi] {
                for &(jp, ajp) in &partners[&bj] {
                    out[[ai * da + aj, aip * da + ajp]] += rho[[row, ip * d + jp]];
                }
            }
        }
    }
    Ok(out)
}

/// `Tr_{L_A,R_A}[X_A Tr_{L_B,R_B}(ρ^D)]`.
pub fn swap_trace(rho: &ArrayView2<C64>, basis: &FockBasis, mask: &SubsystemMask) -> Result<C64> {
    let reduced = reduce_doubled(rho, basis, mask)?;
    let da = mask.kept_dim();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..da {
        for b in 0..da {
            acc += reduced[[a * da + b, b * da + a]];
        }
    }
    Ok(acc)
}

fn entropy_from_swap_trace(tr: C64) -> Result<f64> {
    if tr.im.abs() > SWAP_IMAG_TOL || tr.re <= 0.0 || !tr.re.is_finite() {
        return Err(Error::NonPositiveSwapTrace { re: tr.re, im: tr.im });
    }
    Ok(-tr.re.ln())
}

/// `S_A = -ln Tr_{L_A,R_A}[X_A Tr_{L_B,R_B}(ρ^D)]`.
pub fn swap_renyi_entropy(rho: &DoubledDensityMatrix, basis: &FockBasis, mask: &SubsystemMask) -> Result<f64> {
    entropy_from_swap_trace(swap_trace(&rho.view(), basis, mask)?)
}

/// A sampled `(t, value)` series.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl EntropySeries {
    /// Mean over the last 10% of the samples (at least one).
    pub fn saturation(&self) -> f64 {
        let n = self.values.len();
        let k = (n / 10).max(1);
        self.values[n - k..].iter().sum::<f64>() / k as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Output of a doubled-space integration.
#[derive(Debug, Clone)]
pub struct DoubledRun {
    /// One series per requested subsystem, in request order.
    pub entropies: Vec<EntropySeries>,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub max_swap_imag: f64,
    /// Number of emitted states that passed the positivity test.
    pub positivity_checks: usize,
    pub final_state: DoubledDensityMatrix,
}

/// Integrates the doubled equation from `ρ0 ⊗ ρ0`, recording `S_A(t)` for
/// each mask at every emission step.
pub fn evolve_doubled_multi(
    h: &Operator,
    jumps: &JumpOperatorSet,
    basis: &FockBasis,
    config: &EvolutionConfig,
    rho0: &DensityMatrix,
    masks: &[SubsystemMask],
) -> Result<DoubledRun> {
    config.validate()?;
    let tol = Tolerances::default();
    let generator = DoubledLindblad::with_retained(
        h,
        jumps,
        config.retained_channels.unwrap_or(jumps.len()),
        config.measurement_rate,
    )?;
    let start = tensor_square(rho0);
    let d = start.single_dim;
    let mut run = DoubledRun {
        entropies: masks
            .iter()
            .map(|_| EntropySeries {
                times: Vec::new(),
                values: Vec::new(),
            })
            .collect(),
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        max_swap_imag: 0.0,
        positivity_checks: 0,
        final_state: start.clone(),
    };
    let last = integrate(
        &generator,
        start.entries,
        config.n_steps,
        config.dt(),
        config.check_every,
        &tol,
        |_, t, rho, report| {
            run.max_trace_error = run.max_trace_error.max(report.trace_error);
            run.max_hermiticity_error = run.max_hermiticity_error.max(report.hermiticity_error);
            run.positivity_checks += 1;
            for (mask, series) in masks.iter().zip(run.entropies.iter_mut()) {
                let tr = swap_trace(&rho.view(), basis, mask)?;
                run.max_swap_imag = run.max_swap_imag.max(tr.im.abs());
                series.times.push(t);
                series.values.push(entropy_from_swap_trace(tr)?);
            }
            Ok(())
        },
    )?;
    run.final_state = DoubledDensityMatrix {
        single_dim: d,
        entries: last,
    };
    Ok(run)
}

pub fn evolve_doubled(
    h: &Operator,
    jumps: &JumpOperatorSet,
    basis: &FockBasis,
    config: &EvolutionConfig,
    rho0: &DensityMatrix,
    mask: &SubsystemMask,
) -> Result<EntropySeries> {
    let mut run = evolve_doubled_multi(h, jumps, basis, config, rho0, std::slice::from_ref(mask))?;
    Ok(run.entropies.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, build_hamiltonian, build_jump_operators, parse_product_state, HamiltonianParams};
    use crate::master::{partial_trace, renyi2};
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_state(d: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((d, d), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let m = a.dot(&operator::adjoint(&a.view()));
        let tr = operator::trace(&m.view());
        DensityMatrix::from_matrix(m.mapv(|z| z / tr)).unwrap()
    }

    #[test]
    fn tensor_square_cases() {
        let b = build_basis(2, 1).unwrap();
        let psi = parse_product_state("10", &b).unwrap();
        let rd = tensor_square(&DensityMatrix::pure(&psi));
        assert_eq!(rd.entries()[[3, 3]], c(1.0));
        assert_abs_diff_eq!(operator::trace_of_product(&rd.view(), &rd.view()).re, 1.0);
        let mixed = tensor_square(&DensityMatrix::maximally_mixed(3));
        assert!(mixed.entries().indexed_iter().all(|((i, j), z)| {
            let expect = if i == j { 1.0 / 9.0 } else { 0.0 };
            (z - c(expect)).norm() < 1e-16
        }));
        let r = random_state(3, 1);
        let rd = tensor_square(&r);
        assert_abs_diff_eq!(rd.trace().re, 1.0, epsilon = 1e-14);
        // Row (L=1, R=2), column (L=0, R=1).
        assert_eq!(rd.entries()[[5, 1]], r.entries()[[1, 0]] * r.entries()[[2, 1]]);
    }

    #[test]
    fn doubled_hamiltonian_spectrum_and_symmetry() {
        let h = Operator::new(ndarray::array![
            [c(0.3), C64::new(0.2, -0.7)],
            [C64::new(0.2, 0.7), c(-1.1)]
        ])
        .unwrap();
        assert!(doubled_hamiltonian(&Operator::zeros(2))
            .entries()
            .iter()
            .all(|z| z.norm() == 0.0));
        let hd = doubled_hamiltonian(&h);
        assert!(hd.hermiticity_error() < 1e-15);
        let (ev, _) = operator::hermitian_eigh(&h.view());
        let (evd, _) = operator::hermitian_eigh(&hd.view());
        let mut sums = [ev[0] + ev[0], ev[0] + ev[1], ev[1] + ev[0], ev[1] + ev[1]];
        sums.sort_by(f64::total_cmp);
        for (a, b) in sums.iter().zip(&evd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
        let x = swap_operator(2);
        let comm = hd.matmul(&x).sub(&x.matmul(&hd));
        assert!(comm.entries().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn structured_commutator_matches_dense() {
        let b = build_basis(4, 2).unwrap();
        let real = build_hamiltonian(
            &b,
            &HamiltonianParams {
                j_hop: 0.8,
                u_int: 1.4,
                ..Default::default()
            },
        );
        let noise = random_state(b.dim(), 3).entries().mapv(|z| z * C64::new(0.3, 0.0));
        let noise = (&noise + &operator::adjoint(&noise.view())).mapv(|z| z * 0.5);
        let complex = Operator::new(&noise + real.entries()).unwrap();
        let j = build_jump_operators(&b);
        // A Hermitian doubled state that is not a tensor square.
        let a = tensor_square(&random_state(b.dim(), 5));
        let c = tensor_square(&random_state(b.dim(), 6));
        let rd = DoubledDensityMatrix::from_matrix(b.dim(), (a.entries() + c.entries()).mapv(|z| z * 0.5)).unwrap();
        for h in [real, complex] {
            let fast = rhs_doubled(&h, &j, 0.0, &rd).unwrap();
            let hd = doubled_hamiltonian(&h);
            let x = hd.entries().dot(rd.entries());
            let slow = (&x - &rd.entries().dot(hd.entries())).mapv(|z| -I * z);
            assert!(operator::max_abs_diff(&fast.view(), &slow.view()) < 1e-13);
        }
    }

    #[test]
    fn anticommutator_collapses_to_identity() {
        for (n, nb) in [(2, 1), (4, 2), (6, 3)] {
            let jumps = build_jump_operators(&build_basis(n, nb).unwrap());
            let k = doubled_anticommutator_operator(&jumps);
            assert!(k.max_abs_diff(&Operator::identity(k.dim())) <= 1e-12);
        }
    }

    #[test]
    fn unitary_limit_and_tracelessness() {
        let b = build_basis(2, 1).unwrap();
        let h = build_hamiltonian(&b, &HamiltonianParams::default());
        let j = build_jump_operators(&b);
        let rd = tensor_square(&random_state(2, 9));
        let d0 = rhs_doubled(&h, &j, 0.0, &rd).unwrap();
        let hd = doubled_hamiltonian(&h);
        let expect = (hd.entries().dot(rd.entries()) - rd.entries().dot(hd.entries())).mapv(|z| -I * z);
        assert!(operator::max_abs_diff(&d0.view(), &expect.view()) < 1e-14);
        for seed in 0..10 {
            let rd = tensor_square(&random_state(2, seed));
            let d1 = rhs_doubled(&h, &j, 1.3, &rd).unwrap();
            assert!(operator::trace(&d1.view()).norm() < 1e-12);
        }
    }

    #[test]
    fn collapsed_path_matches_general_double_sum() {
        let b = build_basis(2, 1).unwrap();
        let h = build_hamiltonian(&b, &HamiltonianParams::default());
        let j = build_jump_operators(&b);
        let fast = DoubledLindblad::new(&h, &j, 0.8).unwrap();
        assert!(fast.uses_collapsed_anticommutator());
        let rd = tensor_square(&random_state(2, 3));
        let got = fast.derivative(&rd.view()).unwrap();
        // Independent dense evaluation of every term.
        let hd = doubled_hamiltonian(&h).into_entries();
        let r = rd.entries();
        let mut expect = (hd.dot(r) - r.dot(&hd)).mapv(|z| -I * z);
        let pairs = paired_jump_operators(&j, j.len()).unwrap();
        let mut num = Array2::<C64>::zeros(r.raw_dim());
        for p in &pairs {
            num = num + p.entries().dot(r).dot(p.adjoint().entries());
        }
        let den = operator::trace(&num.view()).re;
        let k = doubled_anticommutator_operator(&j).into_entries();
        expect = expect + num.mapv(|z| z * (0.8 / den)) - (k.dot(r) + r.dot(&k)).mapv(|z| z * 0.4);
        assert!(operator::max_abs_diff(&got.view(), &expect.view()) < 1e-13);
    }

    #[test]
    fn epr_numerator_for_diagonal_product_state() {
        let b = build_basis(2, 1).unwrap();
        let j = build_jump_operators(&b);
        let rho = DensityMatrix::from_matrix(Array2::from_diag(&ndarray::arr1(&[c(0.3), c(0.7)]))).unwrap();
        let rd = tensor_square(&rho);
        let pairs = paired_jump_operators(&j, j.len()).unwrap();
        let mut lhs = Array2::<C64>::zeros((4, 4));
        let mut rhs = Array2::<C64>::zeros((4, 4));
        for (p, l) in pairs.iter().zip(j.ops()) {
            lhs = lhs + p.entries().dot(rd.entries()).dot(p.adjoint().entries());
            let one = l.entries().dot(rho.entries()).dot(l.adjoint().entries());
            rhs = rhs + operator::kron(&one.view(), &one.view());
        }
        assert!(operator::max_abs_diff(&lhs.view(), &rhs.view()) < 1e-16);
    }

    #[test]
    fn swap_entropy_cases() {
        let b = build_basis(6, 3).unwrap();
        let mask = SubsystemMask::prefix(3, 6).unwrap();
        let rd = tensor_square(&DensityMatrix::pure(&parse_product_state("000111", &b).unwrap()));
        assert_abs_diff_eq!(swap_renyi_entropy(&rd, &b, &mask).unwrap(), 0.0, epsilon = 1e-15);

        let b = build_basis(2, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let psi = ndarray::arr1(&[c(s), c(s)]);
        let rd = tensor_square(&DensityMatrix::pure(&psi));
        let mask = SubsystemMask::prefix(1, 2).unwrap();
        assert_abs_diff_eq!(swap_renyi_entropy(&rd, &b, &mask).unwrap(), 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn swap_entropy_matches_single_copy_renyi() {
        let b = build_basis(4, 2).unwrap();
        for seed in 0..10 {
            let rho = random_state(b.dim(), 100 + seed);
            let rd = tensor_square(&rho);
            for l_a in 1..4 {
                let mask = SubsystemMask::prefix(l_a, 4).unwrap();
                let swap = swap_renyi_entropy(&rd, &b, &mask).unwrap();
                let direct = renyi2(&partial_trace(&rho, &b, &mask).unwrap()).unwrap();
                assert_abs_diff_eq!(swap, direct, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn swap_trace_rejects_negative_values() {
        let b = build_basis(2, 1).unwrap();
        let mask = SubsystemMask::prefix(1, 2).unwrap();
        let neg = DoubledDensityMatrix::from_matrix(2, Array2::eye(4).mapv(|z: C64| -z)).unwrap();
        assert!(matches!(
            swap_renyi_entropy(&neg, &b, &mask),
            Err(Error::NonPositiveSwapTrace { .. })
        ));
    }

    #[test]
    fn saturation_window() {
        let s = EntropySeries {
            times: (0..20).map(f64::from).collect(),
            values: (0..20).map(f64::from).collect(),
        };
        assert_abs_diff_eq!(s.saturation(), 18.5);
        assert_eq!(s.max(), 19.0);
    }
}

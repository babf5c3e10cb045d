//! Dense complex matrices and the few decompositions the simulator needs.
//!
//! Storage is `ndarray`; eigen- and Cholesky decompositions go through
//! `nalgebra`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Dense square complex matrix acting on a Fock space (or its tensor square).
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    entries: Array2<C64>,
}

impl Operator {
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols || rows == 0 {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: cols,
            });
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: Array2::eye(dim),
        }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut entries = Array2::zeros((diag.len(), diag.len()));
        for (i, &v) in diag.iter().enumerate() {
            entries[[i, i]] = v;
        }
        Self { entries }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let diag: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&diag)
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

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: adjoint(&self.entries.view()),
        }
    }

    pub fn matmul(&self, other: &Operator) -> Self {
        Self {
            entries: self.entries.dot(&other.entries),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            entries: &self.entries * factor,
        }
    }

    pub fn add(&self, other: &Operator) -> Self {
        Self {
            entries: &self.entries + &other.entries,
        }
    }

    pub fn sub(&self, other: &Operator) -> Self {
        Self {
            entries: &self.entries - &other.entries,
        }
    }

    /// Kronecker product `self ⊗ other`; the left factor is the major index.
    pub fn kron(&self, other: &Operator) -> Self {
        Self {
            entries: kron(&self.entries.view(), &other.entries.view()),
        }
    }

    pub fn trace(&self) -> C64 {
        trace(&self.entries.view())
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.entries.view())
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.entries.view(), &other.entries.view())
    }

    /// The diagonal, if every off-diagonal entry is exactly zero.
    pub fn as_diagonal(&self) -> Option<Array1<C64>> {
        let n = self.dim();
        for ((i, j), v) in self.entries.indexed_iter() {
            if i != j && *v != C64::new(0.0, 0.0) {
                return None;
            }
        }
        Some(Array1::from_shape_fn(n, |i| self.entries[[i, i]]))
    }

    pub fn apply(&self, v: &ArrayView1<C64>) -> Array1<C64> {
        self.entries.dot(v)
    }
}

pub fn adjoint(m: &ArrayView2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &ArrayView2<C64>) -> C64 {
    m.diag().sum()
}

pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(r, c)| a[[r / br, c / bc]] * b[[r % br, c % bc]])
}

/// `max |M - M†|` over all entries.
pub fn hermiticity_error(m: &ArrayView2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    Zip::from(a).and(b).fold(0.0_f64, |acc, x, y| acc.max((x - y).norm()))
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

pub(crate) fn to_nalgebra(m: &ArrayView2<C64>) -> DMatrix<C64> {
    let (r, c) = m.dim();
    DMatrix::from_fn(r, c, |i, j| m[[i, j]])
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
/// Only the Hermitian part of the input is used.
pub fn hermitian_eigh(m: &ArrayView2<C64>) -> (Vec<f64>, Array2<C64>) {
    let herm = (m.to_owned() + adjoint(m)).mapv(|z| z * 0.5);
    let eig = to_nalgebra(&herm.view()).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.nrows();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &ArrayView2<C64>) -> f64 {
    hermitian_eigh(m).0[0]
}

/// Whether every eigenvalue of the Hermitian part of `m` exceeds `-tol`.
///
/// Decided by attempting a Cholesky factorisation of `m + tol·I`, which is
/// an order of magnitude cheaper than a full eigendecomposition.
pub fn is_positive_above(m: &ArrayView2<C64>, tol: f64) -> bool {
    let n = m.nrows();
    // In-place Cholesky of the shifted Hermitian part; fails on the first
    // non-positive pivot. The lower triangle holds the factor.
    let mut a: Vec<C64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let h = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
            a.push(if i == j { h + C64::new(tol, 0.0) } else { h });
        }
    }
    for j in 0..n {
        let row_j = &a[j * n..j * n + j];
        let pivot = a[j * n + j].re - row_j.iter().map(|v| v.norm_sqr()).sum::<f64>();
        if pivot.is_nan() || pivot <= 0.0 {
            return false;
        }
        let pivot = pivot.sqrt();
        let row_j = row_j.to_vec();
        a[j * n + j] = C64::new(pivot, 0.0);
        for i in j + 1..n {
            let row_i = &mut a[i * n..i * n + j + 1];
            let dot: C64 = row_i[..j].iter().zip(&row_j).map(|(x, y)| x * y.conj()).sum();
            row_i[j] = (row_i[j] - dot) / pivot;
        }
    }
    true
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(m: &ArrayView2<C64>) -> Array2<C64> {
    let n = m.nrows();
    let norm1 = (0..n)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.mapv(|z| z / 2f64.powi(squarings as i32));
    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=20 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Packed action of an operator on state vectors; diagonal operators skip
/// the dense product.
#[derive(Debug, Clone)]
pub(crate) enum Action {
    Diagonal(Array1<C64>),
    Dense(Array2<C64>),
}

impl Action {
    pub(crate) fn from_operator(op: &Operator) -> Self {
        match op.as_diagonal() {
            Some(d) => Action::Diagonal(d),
            None => Action::Dense(op.entries().clone()),
        }
    }

    pub(crate) fn apply(&self, v: &ArrayView1<C64>) -> Array1<C64> {
        match self {
            Action::Diagonal(d) => d * v,
            Action::Dense(m) => m.dot(v),
        }
    }

    /// `⟨v|A|v⟩` for a normalised `v`.
    pub(crate) fn expectation(&self, v: &ArrayView1<C64>) -> C64 {
        match self {
            Action::Diagonal(d) => d.iter().zip(v.iter()).map(|(a, x)| a * x.norm_sqr()).sum(),
            Action::Dense(m) => {
                let mv = m.dot(v);
                v.iter().zip(mv.iter()).map(|(x, y)| x.conj() * y).sum()
            }
        }
    }
}

/// Row-compressed sparse copy of an operator, used for structured products
/// on the doubled space.
#[derive(Debug, Clone)]
pub(crate) struct SparseRows {
    diagonal: Vec<C64>,
    off: Vec<Vec<(usize, C64)>>,
}

impl SparseRows {
    pub(crate) fn from_dense(m: &ArrayView2<C64>) -> Self {
        let off: Vec<Vec<(usize, C64)>> = m
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|&(k, v)| k != i && v.norm() != 0.0)
                    .map(|(k, &v)| (k, v))
                    .collect()
            })
            .collect();
        Self {
            diagonal: m.diag().to_vec(),
            off,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.off.len()
    }

    pub(crate) fn diagonal(&self) -> &[C64] {
        &self.diagonal
    }

    /// Off-diagonal nonzeros of row `i`.
    pub(crate) fn off_row(&self, i: usize) -> &[(usize, C64)] {
        &self.off[i]
    }
}

pub(crate) fn norm(v: &ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

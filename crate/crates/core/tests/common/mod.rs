#![allow(dead_code)]

use mipt_core::{
    build_basis, build_hamiltonian, build_jump_operators, Boundary, DensityMatrix, FockBasis, HamiltonianParams,
    JumpOperatorSet, Operator, C64,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn chain(n_sites: usize, n_bosons: usize, boundary: Boundary) -> (FockBasis, Operator, JumpOperatorSet) {
    let b = build_basis(n_sites, n_bosons).unwrap();
    let h = build_hamiltonian(
        &b,
        &HamiltonianParams {
            boundary,
            ..HamiltonianParams::default()
        },
    );
    let j = build_jump_operators(&b);
    (b, h, j)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussianish(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

pub fn random_vector(d: usize, rng: &mut ChaCha8Rng) -> Array1<C64> {
    let v = Array1::from_shape_fn(d, |_| gaussianish(rng));
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv(|z| z / n)
}

pub fn random_density(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let a = Array2::from_shape_fn((d, d), |_| gaussianish(rng));
    let m = a.dot(&a.t().mapv(|z| z.conj()));
    let tr: C64 = (0..d).map(|i| m[[i, i]]).sum();
    DensityMatrix::from_matrix(m.mapv(|z| z / tr)).unwrap()
}

pub fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `(N_s, N_b)` pairs with a basis of at most `max_dim` states.
pub fn fillings(max_sites: usize) -> Vec<(usize, usize)> {
    (1..=max_sites).flat_map(|n| (0..=n).map(move |k| (n, k))).collect()
}

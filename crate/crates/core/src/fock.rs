//! Hard-core boson chains at fixed particle number.
//!
//! Occupation patterns are stored as integers whose most significant of the
//! `n_sites` bits is site 1, so numeric order is lexicographic order on the
//! bitstring `n_1 n_2 ... n_{N_s}`.

use std::collections::HashMap;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::operator::{Operator, C64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n_sites: usize,
    n_bosons: usize,
    states: Vec<u64>,
    index_of: HashMap<u64, usize>,
}

impl FockBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_bosons(&self) -> usize {
        self.n_bosons
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    pub fn index_of(&self, state: u64) -> Option<usize> {
        self.index_of.get(&state).copied()
    }

    /// Occupation (0 or 1) of `site`, counted from 0 at the left end.
    pub fn occupation(&self, state: u64, site: usize) -> u64 {
        (state >> (self.n_sites - 1 - site)) & 1
    }

    pub fn label(&self, index: usize) -> String {
        let s = self.states[index];
        (0..self.n_sites)
            .map(|site| if self.occupation(s, site) == 1 { '1' } else { '0' })
            .collect()
    }
}

pub fn build_basis(n_sites: usize, n_bosons: usize) -> Result<FockBasis> {
    if n_sites == 0 || n_bosons > n_sites || n_sites > 63 {
        return Err(Error::InvalidFilling { n_sites, n_bosons });
    }
    let states: Vec<u64> = (0u64..(1u64 << n_sites))
        .filter(|s| s.count_ones() as usize == n_bosons)
        .collect();
    let index_of = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    Ok(FockBasis {
        n_sites,
        n_bosons,
        states,
        index_of,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    pub j_hop: f64,
    pub u_int: f64,
    pub boundary: Boundary,
}

impl Default for HamiltonianParams {
    fn default() -> Self {
        Self {
            j_hop: 1.0,
            u_int: 1.0,
            boundary: Boundary::Open,
        }
    }
}

/// Nearest-neighbour bonds. A periodic chain of two sites has a single bond.
pub fn bonds(n_sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && n_sites > 2 {
        out.push((n_sites - 1, 0));
    }
    out
}

/// `H = -J Σ_<ij> (b_i† b_j + b_j† b_i) + U Σ_<ij> n_i n_j` in the fixed-N sector.
pub fn build_hamiltonian(basis: &FockBasis, params: &HamiltonianParams) -> Operator {
    let d = basis.dim();
    let n = basis.n_sites();
    let mut h = Operator::zeros(d).into_entries();
    for (col, &state) in basis.states().iter().enumerate() {
        for (i, j) in bonds(n, params.boundary) {
            let ni = basis.occupation(state, i);
            let nj = basis.occupation(state, j);
            if ni == 1 && nj == 1 {
                h[[col, col]] += C64::new(params.u_int, 0.0);
            }
            if ni != nj {
                let flip = (1u64 << (n - 1 - i)) | (1u64 << (n - 1 - j));
                let row = basis.index_of(state ^ flip).expect("hopping conserves particle number");
                h[[row, col]] += C64::new(-params.j_hop, 0.0);
            }
        }
    }
    Operator::new(h).expect("square by construction")
}

/// Number operator `n_site` on the fixed-N basis.
pub fn number_operator(basis: &FockBasis, site: usize) -> Operator {
    let diag: Vec<f64> = basis
        .states()
        .iter()
        .map(|&s| basis.occupation(s, site) as f64)
        .collect();
    Operator::from_real_diagonal(&diag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpLabel {
    /// Site index counted from 0.
    pub site: usize,
    /// Measured occupation.
    pub outcome: u8,
}

/// Ordered jump operators `L_a` with their measurement labels.
#[derive(Debug, Clone)]
pub struct JumpOperatorSet {
    ops: Vec<Operator>,
    labels: Vec<JumpLabel>,
}

impl JumpOperatorSet {
    pub fn new(ops: Vec<Operator>, labels: Vec<JumpLabel>) -> Result<Self> {
        if ops.len() != labels.len() || ops.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: ops.len(),
                found: labels.len(),
            });
        }
        let dim = ops[0].dim();
        if let Some(bad) = ops.iter().find(|op| op.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { ops, labels })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn ops(&self) -> &[Operator] {
        &self.ops
    }

    pub fn labels(&self) -> &[JumpLabel] {
        &self.labels
    }

    /// `Σ_a L_a† L_a`.
    pub fn gram(&self) -> Operator {
        self.ops
            .iter()
            .fold(Operator::zeros(self.dim()), |acc, l| acc.add(&l.adjoint().matmul(l)))
    }

    /// Largest entrywise deviation of `Σ_a L_a† L_a` from the identity.
    pub fn completeness_error(&self) -> f64 {
        self.gram().max_abs_diff(&Operator::identity(self.dim()))
    }

    pub fn is_complete(&self, tol: f64) -> bool {
        self.completeness_error() <= tol
    }

    /// The diagonals of every operator, when all of them are diagonal.
    pub fn diagonals(&self) -> Option<Vec<Array1<C64>>> {
        self.ops.iter().map(Operator::as_diagonal).collect()
    }

    /// The first `m` operators.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(Error::InvalidConfig(format!(
                "retained channel count {m} outside 1..={}",
                self.len()
            )));
        }
        Self::new(self.ops[..m].to_vec(), self.labels[..m].to_vec())
    }
}

/// Site projectors `L_{i,0} = (1 - n_i)/√N_s`, `L_{i,1} = n_i/√N_s`, ordered
/// `(1,0), (1,1), (2,0), ...`.
pub fn build_jump_operators(basis: &FockBasis) -> JumpOperatorSet {
    let n = basis.n_sites();
    let scale = 1.0 / (n as f64).sqrt();
    let mut ops = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(2 * n);
    for site in 0..n {
        for outcome in [0u8, 1u8] {
            let diag: Vec<f64> = basis
                .states()
                .iter()
                .map(|&s| {
                    let occ = basis.occupation(s, site) as u8;
                    if occ == outcome {
                        scale
                    } else {
                        0.0
                    }
                })
                .collect();
            ops.push(Operator::from_real_diagonal(&diag));
            labels.push(JumpLabel { site, outcome });
        }
    }
    JumpOperatorSet::new(ops, labels).expect("consistent by construction")
}

/// Basis vector for an occupation string such as `"000111"`; character `k`
/// is the occupation of site `k`.
pub fn parse_product_state(pattern: &str, basis: &FockBasis) -> Result<Array1<C64>> {
    let mismatch = |reason: String| Error::PatternMismatch {
        pattern: pattern.to_string(),
        reason,
    };
    if pattern.chars().count() != basis.n_sites() {
        return Err(mismatch(format!(
            "length {} != {} sites",
            pattern.chars().count(),
            basis.n_sites()
        )));
    }
    let mut state = 0u64;
    for c in pattern.chars() {
        state <<= 1;
        match c {
            '0' => {}
            '1' => state |= 1,
            other => return Err(mismatch(format!("invalid character {other:?}"))),
        }
    }
    let index = basis
        .index_of(state)
        .ok_or_else(|| mismatch(format!("weight {} != {} bosons", state.count_ones(), basis.n_bosons())))?;
    let mut v = Array1::zeros(basis.dim());
    v[index] = C64::new(1.0, 0.0);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn re(m: &Operator, i: usize, j: usize) -> f64 {
        m.entries()[[i, j]].re
    }

    #[test]
    fn basis_dimensions_and_order() {
        let b = build_basis(2, 1).unwrap();
        assert_eq!(b.dim(), 2);
        assert_eq!(b.label(0), "01");
        assert_eq!(b.label(1), "10");
        assert_eq!(build_basis(6, 3).unwrap().dim(), 20);
        let vac = build_basis(4, 0).unwrap();
        assert_eq!(vac.dim(), 1);
        assert_eq!(vac.label(0), "0000");
        let b = build_basis(6, 3).unwrap();
        assert!(b.states().windows(2).all(|w| w[0] < w[1]));
        for (i, &s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
        }
        assert_eq!(b, build_basis(6, 3).unwrap());
    }

    #[test]
    fn invalid_filling() {
        assert!(matches!(build_basis(3, 4), Err(Error::InvalidFilling { .. })));
        assert!(matches!(build_basis(0, 0), Err(Error::InvalidFilling { .. })));
    }

    #[test]
    fn two_site_hamiltonians() {
        let p = HamiltonianParams::default();
        let h = build_hamiltonian(&build_basis(2, 1).unwrap(), &p);
        assert_eq!(h.dim(), 2);
        assert_eq!(
            (re(&h, 0, 0), re(&h, 0, 1), re(&h, 1, 0), re(&h, 1, 1)),
            (0.0, -1.0, -1.0, 0.0)
        );
        let h = build_hamiltonian(&build_basis(2, 2).unwrap(), &p);
        assert_eq!(h.dim(), 1);
        assert_eq!(re(&h, 0, 0), 1.0);
        let zero = HamiltonianParams {
            j_hop: 0.0,
            u_int: 0.0,
            boundary: Boundary::Periodic,
        };
        let h = build_hamiltonian(&build_basis(5, 2).unwrap(), &zero);
        assert!(h.entries().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let p = HamiltonianParams {
                j_hop: 0.7,
                u_int: 1.3,
                boundary,
            };
            let h = build_hamiltonian(&build_basis(6, 3).unwrap(), &p);
            assert!(h.hermiticity_error() <= 1e-14);
        }
    }

    #[test]
    fn periodic_bond_only_beyond_two_sites() {
        assert_eq!(bonds(2, Boundary::Periodic), vec![(0, 1)]);
        assert_eq!(bonds(4, Boundary::Periodic).len(), 4);
        assert_eq!(bonds(4, Boundary::Open).len(), 3);
    }

    #[test]
    fn number_conservation_across_sectors() {
        // Build the full 2^N space as a direct sum of sectors and check that
        // H commutes with the total number operator there.
        let n = 4;
        let p = HamiltonianParams::default();
        let sectors: Vec<_> = (0..=n).map(|nb| build_basis(n, nb).unwrap()).collect();
        let dim: usize = sectors.iter().map(FockBasis::dim).sum();
        let mut h = Operator::zeros(dim).into_entries();
        let mut ntot = Operator::zeros(dim).into_entries();
        let mut offset = 0;
        for (nb, b) in sectors.iter().enumerate() {
            let hs = build_hamiltonian(b, &p);
            for i in 0..b.dim() {
                ntot[[offset + i, offset + i]] = C64::new(nb as f64, 0.0);
                for j in 0..b.dim() {
                    h[[offset + i, offset + j]] = hs.entries()[[i, j]];
                }
            }
            offset += b.dim();
        }
        let comm = h.dot(&ntot) - ntot.dot(&h);
        assert!(comm.iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn jump_operators_two_sites() {
        let b = build_basis(2, 1).unwrap();
        let jumps = build_jump_operators(&b);
        assert_eq!(jumps.len(), 4);
        // L_{1,1}: site 1 occupied only in "10" (index 1).
        let l11 = &jumps.ops()[1];
        assert_eq!(jumps.labels()[1], JumpLabel { site: 0, outcome: 1 });
        assert_abs_diff_eq!(re(l11, 0, 0), 0.0);
        assert_abs_diff_eq!(re(l11, 1, 1), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        let single = build_jump_operators(&build_basis(1, 1).unwrap());
        assert_eq!(re(&single.ops()[1], 0, 0), 1.0);
        assert_eq!(re(&single.ops()[0], 0, 0), 0.0);
    }

    #[test]
    fn jump_completeness_for_every_filling() {
        for n in 1..=6 {
            for nb in 0..=n {
                let jumps = build_jump_operators(&build_basis(n, nb).unwrap());
                assert_eq!(jumps.len(), 2 * n);
                assert!(jumps.completeness_error() <= 1e-12, "n={n} nb={nb}");
            }
        }
    }

    #[test]
    fn product_state_parsing() {
        let b = build_basis(6, 3).unwrap();
        let v = parse_product_state("000111", &b).unwrap();
        let idx = b.index_of(0b000111).unwrap();
        assert_eq!(v[idx], C64::new(1.0, 0.0));
        assert_abs_diff_eq!(v.iter().map(|z| z.norm_sqr()).sum::<f64>(), 1.0);
        let b2 = build_basis(2, 1).unwrap();
        assert_eq!(parse_product_state("01", &b2).unwrap()[0], C64::new(1.0, 0.0));
        let b3 = build_basis(3, 2).unwrap();
        assert!(matches!(
            parse_product_state("111", &b3),
            Err(Error::PatternMismatch { .. })
        ));
        assert!(matches!(
            parse_product_state("11", &b3),
            Err(Error::PatternMismatch { .. })
        ));
        assert!(matches!(
            parse_product_state("1x0", &b3),
            Err(Error::PatternMismatch { .. })
        ));
    }
}

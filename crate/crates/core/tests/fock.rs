mod common;

use common::{chain, fillings};
use mipt_core::fock::number_operator;
use mipt_core::{build_basis, Boundary, Operator};
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

proptest! {
    #[test]
    fn basis_is_ordered_counted_and_invertible(ix in 0usize..fillings(10).len()) {
        let (n, k) = fillings(10)[ix];
        let b = build_basis(n, k).unwrap();
        prop_assert_eq!(b.dim(), binomial(n, k));
        prop_assert!(b.states().windows(2).all(|w| w[0] < w[1]));
        for (i, &s) in b.states().iter().enumerate() {
            prop_assert_eq!(b.index_of(s), Some(i));
            prop_assert_eq!(s.count_ones() as usize, k);
        }
        let again = build_basis(n, k).unwrap();
        prop_assert_eq!(b.states(), again.states());
    }

    #[test]
    fn hamiltonian_hermitian_and_number_conserving(
        ix in 0usize..fillings(8).len(),
        periodic in any::<bool>(),
    ) {
        let (n, k) = fillings(8)[ix];
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let (b, h, j) = chain(n, k, boundary);
        prop_assert!(h.hermiticity_error() <= 1e-14);
        prop_assert!(j.completeness_error() <= 1e-12);
        prop_assert_eq!(j.len(), 2 * n);
        let total = (0..n).fold(Operator::zeros(b.dim()), |acc, site| acc.add(&number_operator(&b, site)));
        let commutator = h.matmul(&total).sub(&total.matmul(&h));
        prop_assert!(commutator.max_abs_diff(&Operator::zeros(b.dim())) <= 1e-12);
    }
}

#[test]
fn six_site_sector_matches_paper_size() {
    assert_eq!(build_basis(6, 3).unwrap().dim(), 20);
}

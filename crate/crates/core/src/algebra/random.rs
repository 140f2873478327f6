//! Random elements for property sweeps and validity checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::block::Block;
use super::element::{BlockAlgebra, BlockElement, HermitianElement, Projection};

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// GUE-like Hermitian element, each block `(G + G*)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, algebra: &BlockAlgebra) -> HermitianElement {
    let blocks = algebra
        .block_dims()
        .iter()
        .map(|&m| {
            let g = gaussian_matrix(rng, m, m);
            Block::Dense((&g + g.adjoint()) * Complex64::new(0.5, 0.0))
        })
        .collect();
    HermitianElement::symmetrize(BlockElement::new(algebra.clone(), blocks).expect("shape"))
}

/// A general (non-Hermitian) element with Gaussian entries.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, algebra: &BlockAlgebra) -> BlockElement {
    let blocks = algebra.block_dims().iter().map(|&m| Block::Dense(gaussian_matrix(rng, m, m))).collect();
    BlockElement::new(algebra.clone(), blocks).expect("shape")
}

/// Full-rank density `G G* / Tr(G G*)` with respect to the canonical trace.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, algebra: &BlockAlgebra) -> HermitianElement {
    let raw: Vec<DMatrix<Complex64>> = algebra
        .block_dims()
        .iter()
        .map(|&m| {
            let g = gaussian_matrix(rng, m, m);
            &g * g.adjoint()
        })
        .collect();
    let total: f64 = raw.iter().map(|m| m.trace().re).sum();
    let blocks = raw.into_iter().map(|m| Block::Dense(m / Complex64::new(total, 0.0))).collect();
    HermitianElement::symmetrize(BlockElement::new(algebra.clone(), blocks).expect("shape"))
}

/// Uniformly random rank-`r_k` projection in each block (QR of a Gaussian matrix).
pub fn random_projection<R: Rng + ?Sized>(rng: &mut R, algebra: &BlockAlgebra, ranks: &[usize]) -> Projection {
    let blocks = algebra
        .block_dims()
        .iter()
        .zip(ranks)
        .map(|(&m, &r)| {
            assert!(r <= m, "rank {r} exceeds block dimension {m}");
            if r == 0 {
                return Block::zeros(m);
            }
            let q = gaussian_matrix(rng, m, r).qr().q();
            Block::Dense(&q * q.adjoint())
        })
        .collect();
    Projection::from_spectral(HermitianElement::symmetrize(
        BlockElement::new(algebra.clone(), blocks).expect("shape"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn random_projection_is_projection_of_requested_rank() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let alg = BlockAlgebra::with_uniform_trace(vec![4, 3]).unwrap();
        let p = random_projection(&mut rng, &alg, &[2, 3]);
        assert_eq!(p.block_ranks(), vec![2, 3]);
        assert!(p.idempotence_defect() < 1e-12);
    }

    #[test]
    fn random_density_is_normalized() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let alg = BlockAlgebra::with_uniform_trace(vec![2, 3]).unwrap();
        let d = random_density(&mut rng, &alg);
        assert!((d.trace() - 1.0).abs() < 1e-14);
    }
}

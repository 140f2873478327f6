use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ErgodicityCertificate, StateModel};
use crate::algebra::spectral::check_positive;
use crate::algebra::{
    eigendecompose, tensor_power, Block, BlockAlgebra, BlockEigen, EigenDecomposition, Eigenbasis, HermitianElement,
    Spectrum,
};
use crate::error::{Error, Result};

/// `ω = ⊗_ℤ φ` for a single-site density `φ`.
#[derive(Clone, Debug)]
pub struct ProductState {
    phi: HermitianElement,
    spectrum: EigenDecomposition,
}

impl ProductState {
    /// `phi` must be Hermitian, positive and of unit trace.
    pub fn new(phi: DMatrix<Complex64>) -> Result<Self> {
        let d = phi.nrows();
        if d < 2 || phi.ncols() != d {
            return Err(Error::Shape(format!("single-site density must be square with d >= 2, got {d}x{}", phi.ncols())));
        }
        let block = Block::Dense(phi).compact();
        let phi = HermitianElement::from_blocks(&BlockAlgebra::full_matrix(d), vec![block])?;
        let spectrum = eigendecompose(&phi);
        check_positive(&spectrum)?;
        if (phi.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("single-site density has trace {}", phi.trace())));
        }
        Ok(Self { phi, spectrum })
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            probabilities.len(),
            probabilities.iter().map(|&p| Complex64::new(p, 0.0)),
        ));
        Self::new(m)
    }

    /// The tracial state `⊗ 1/d`.
    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0 / d as f64; d])
    }

    pub fn single_site(&self) -> &HermitianElement {
        &self.phi
    }

    /// `S(φ)`, the exact mean entropy.
    pub fn site_entropy(&self) -> f64 {
        crate::entropy::entropy_of_spectrum(&self.spectrum.spectrum()).expect("validated density")
    }
}

impl StateModel for ProductState {
    fn site_dim(&self) -> usize {
        self.phi.algebra().block_dims()[0]
    }

    fn label(&self) -> String {
        let d = self.site_dim();
        let entries: Vec<String> = (0..d).map(|i| format!("{:.4}", self.phi.block(0).entry(i, i).re)).collect();
        let kind = if self.phi.is_diagonal() { "diag" } else { "dense" };
        format!("product[{kind}]({})", entries.join(","))
    }

    fn site_density(&self, sites: usize) -> Result<HermitianElement> {
        let block = tensor_power(self.phi.block(0), sites);
        HermitianElement::from_blocks(&BlockAlgebra::full_matrix(block.dim()), vec![block])
    }

    /// Products of single-site eigenvalues with Kronecker-product eigenvectors.
    fn site_spectrum(&self, sites: usize) -> Result<EigenDecomposition> {
        if self.phi.is_diagonal() {
            return Ok(eigendecompose(&self.site_density(sites)?));
        }
        let site = &self.spectrum.blocks()[0];
        let Eigenbasis::Dense(u) = site.basis() else {
            unreachable!("dense single-site density has a dense eigenbasis");
        };
        let mut values = vec![1.0];
        let mut vectors = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for _ in 0..sites {
            values = values.iter().flat_map(|&v| site.values().iter().map(move |&s| v * s)).collect();
            vectors = vectors.kronecker(u);
        }
        let dim = values.len();
        EigenDecomposition::new(
            BlockAlgebra::full_matrix(dim),
            vec![BlockEigen::from_unsorted(values, Eigenbasis::Dense(vectors))],
        )
    }

    fn site_eigenvalues(&self, sites: usize) -> Result<Spectrum> {
        let site = self.spectrum.blocks()[0].values();
        let mut values = vec![1.0];
        for _ in 0..sites {
            values = values.iter().flat_map(|&v| site.iter().map(move |&s| v * s)).collect();
        }
        Spectrum::new(BlockAlgebra::full_matrix(values.len()), vec![values])
    }

    fn ergodicity(&self) -> ErgodicityCertificate {
        ErgodicityCertificate { ergodic: true, gap: 1.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::sites::reduce;

    #[test]
    fn diagonal_tensor_power() {
        let s = ProductState::diagonal(&[0.9, 0.1]).unwrap();
        let d = s.site_density(2).unwrap();
        let expected = [0.81, 0.09, 0.09, 0.01];
        for (i, e) in expected.iter().enumerate() {
            assert!((d.block(0).entry(i, i).re - e).abs() < 1e-15);
        }
        assert!(d.is_diagonal());
    }

    #[test]
    fn maximally_mixed_restriction() {
        let s = ProductState::maximally_mixed(3).unwrap();
        let d = s.site_density(2).unwrap();
        assert!(d.sub(&HermitianElement::identity(d.algebra()).scale(1.0 / 9.0)).unwrap().max_abs() < 1e-16);
    }

    #[test]
    fn rejects_non_states() {
        assert!(ProductState::diagonal(&[0.5, 0.6]).is_err());
        assert!(matches!(ProductState::diagonal(&[1.2, -0.2]), Err(Error::Positivity(_))));
    }

    #[test]
    fn structural_spectrum_matches_dense_solver() {
        let phi = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.7, 0.0), Complex64::new(0.2, 0.1), Complex64::new(0.2, -0.1), Complex64::new(0.3, 0.0)],
        );
        let s = ProductState::new(phi).unwrap();
        let structural = s.site_spectrum(4).unwrap();
        let dense = eigendecompose(&s.site_density(4).unwrap());
        for (a, b) in structural.blocks()[0].values().iter().zip(dense.blocks()[0].values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let rebuilt = structural.reconstruct();
        assert!(rebuilt.sub(&s.site_density(4).unwrap()).unwrap().max_abs() < 1e-12);
        let marginal = reduce(&s.site_density(3).unwrap(), 2, 0, 2).unwrap();
        assert!(marginal.sub(&s.site_density(2).unwrap()).unwrap().max_abs() < 1e-15);
    }
}

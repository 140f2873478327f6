use num_complex::Complex64;

use super::StateModel;
use crate::algebra::{matrix_exp, partial_trace, Block, BlockAlgebra, HermitianElement};
use crate::error::{Error, Result};
use crate::model::{ChainModel, LocalObservable};

/// Product over `ℤ` of copies of a density `cell` on `period` sites, read
/// from site `offset` of the first cell. Invariant under `γ^period` only.
#[derive(Clone, Debug)]
pub struct PeriodicBlockState {
    site_dim: usize,
    period: usize,
    cell: Block,
    offset: usize,
}

impl PeriodicBlockState {
    pub fn new(site_dim: usize, cell: &HermitianElement) -> Result<Self> {
        let block = match cell.blocks() {
            [b] => b.clone(),
            _ => return Err(Error::Shape("cell density must live in a full matrix algebra".into())),
        };
        let period = crate::algebra::site_count(block.dim(), site_dim)
            .filter(|&p| p > 0)
            .ok_or_else(|| Error::Shape(format!("cell dimension {} is not a power of {site_dim}", block.dim())))?;
        if (cell.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("cell density has trace {}", cell.trace())));
        }
        Ok(Self { site_dim, period, cell: block, offset: 0 })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// `φ ∘ γ^shift`.
    pub fn shifted(&self, shift: usize) -> Self {
        Self { offset: (self.offset + shift) % self.period, ..self.clone() }
    }

    /// Marginal on sites `[start, start + len)` of the unshifted product.
    fn window(&self, start: usize, len: usize) -> Result<Block> {
        let p = self.period;
        let mut acc = Block::identity(1);
        let mut pos = start;
        let end = start + len;
        while pos < end {
            let local = pos % p;
            let stop = (p).min(local + (end - pos));
            let piece = if local == 0 && stop == p {
                self.cell.clone()
            } else {
                partial_trace(&self.cell, self.site_dim, local, stop)?
            };
            acc = acc.kron(&piece);
            pos += stop - local;
        }
        Ok(acc)
    }
}

impl StateModel for PeriodicBlockState {
    fn site_dim(&self) -> usize {
        self.site_dim
    }

    fn label(&self) -> String {
        format!("periodic(P={},offset={})", self.period, self.offset)
    }

    fn site_density(&self, sites: usize) -> Result<HermitianElement> {
        let block = self.window(self.offset, sites)?;
        HermitianElement::from_blocks(&BlockAlgebra::full_matrix(block.dim()), vec![block])
    }

    fn entropy_stride(&self) -> usize {
        self.period
    }
}

/// Shift average `ψ = (1/P) Σ_{i<P} φ ∘ γ^i` of the periodic product `φ`
/// of cells `G ⊗ 1/d`, where `G ∝ exp(−Σ_{i=0}^{m−l} γ_i(a))` is the Gibbs
/// density on `A_m`. One physical spacer site separates consecutive blocks,
/// so the lattice period is `P = m + w`.
#[derive(Clone, Debug)]
pub struct GibbsBlockState {
    block_volume: usize,
    gibbs: HermitianElement,
    gibbs_entropy: f64,
    product: PeriodicBlockState,
    lambda_tau: f64,
}

impl GibbsBlockState {
    pub fn new(model: &ChainModel, m: usize, a: &LocalObservable) -> Result<Self> {
        let l = a.locality();
        if m < l {
            return Err(Error::InvalidParameter(format!("block volume m = {m} is smaller than the locality {l}")));
        }
        let alg = model.local_algebra(m)?;
        let mut h = HermitianElement::zero(&alg);
        for i in 0..=(m - l) {
            h = h.add(&model.embed(a.element(), i, m)?)?;
        }
        let unnormalized = matrix_exp(&h.scale(-1.0));
        let z = unnormalized.trace();
        let gibbs = unnormalized.scale(1.0 / z).compact();
        let gibbs_entropy = crate::entropy::von_neumann_entropy(&gibbs)?;
        let d = model.site_dim();
        let spacer = Block::Diagonal(vec![Complex64::new(1.0 / d as f64, 0.0); d]);
        let cell_block = gibbs.block(0).kron(&spacer);
        let cell = HermitianElement::from_blocks(&BlockAlgebra::full_matrix(cell_block.dim()), vec![cell_block])?;
        let product = PeriodicBlockState::new(d, &cell)?;
        Ok(Self { block_volume: m, gibbs, gibbs_entropy, product, lambda_tau: model.lambda_tau() })
    }

    pub fn block_volume(&self) -> usize {
        self.block_volume
    }

    pub fn period(&self) -> usize {
        self.product.period()
    }

    pub fn gibbs_density(&self) -> &HermitianElement {
        &self.gibbs
    }

    pub fn gibbs_entropy(&self) -> f64 {
        self.gibbs_entropy
    }

    pub fn periodic_product(&self) -> &PeriodicBlockState {
        &self.product
    }

    /// `s(ψ) = (S(G) + log d) / P`.
    pub fn mean_entropy_closed_form(&self) -> f64 {
        (self.gibbs_entropy + self.lambda_tau) / self.period() as f64
    }
}

impl StateModel for GibbsBlockState {
    fn site_dim(&self) -> usize {
        self.product.site_dim
    }

    fn label(&self) -> String {
        format!("gibbs_block(m={},P={})", self.block_volume, self.period())
    }

    fn site_density(&self, sites: usize) -> Result<HermitianElement> {
        let p = self.period();
        let mut acc: Option<Block> = None;
        for i in 0..p {
            let w = self.product.window(i, sites)?;
            acc = Some(match acc {
                Some(a) => a.add(&w),
                None => w,
            });
        }
        let block = acc.expect("period >= 1").scale(Complex64::new(1.0 / p as f64, 0.0));
        HermitianElement::from_blocks(&BlockAlgebra::full_matrix(block.dim()), vec![block])
    }

    fn entropy_stride(&self) -> usize {
        self.period()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::sites::reduce;

    fn ising(model: &ChainModel, j: f64) -> LocalObservable {
        LocalObservable::diagonal(model, &[-j, j, j, -j]).unwrap()
    }

    #[test]
    fn period_and_cell() {
        let model = ChainModel::new(2, 1).unwrap();
        let s = GibbsBlockState::new(&model, 3, &ising(&model, 1.0)).unwrap();
        assert_eq!(s.period(), 4);
        assert!((s.gibbs_density().trace() - 1.0).abs() < 1e-14);
        assert!(s.gibbs_density().is_diagonal());
    }

    #[test]
    fn average_is_shift_invariant() {
        let model = ChainModel::new(2, 1).unwrap();
        let s = GibbsBlockState::new(&model, 2, &ising(&model, 0.7)).unwrap();
        let d6 = s.site_density(6).unwrap();
        let d5 = s.site_density(5).unwrap();
        assert!(reduce(&d6, 2, 0, 5).unwrap().sub(&d5).unwrap().max_abs() < 1e-15);
        assert!(reduce(&d6, 2, 1, 6).unwrap().sub(&d5).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn periodic_product_marginals() {
        let model = ChainModel::new(2, 1).unwrap();
        let s = GibbsBlockState::new(&model, 2, &ising(&model, 0.5)).unwrap();
        let phi = s.periodic_product();
        let d3 = phi.site_density(3).unwrap();
        let expected = s.gibbs_density().block(0).kron(&Block::Diagonal(vec![Complex64::new(0.5, 0.0); 2]));
        assert!(d3.block(0).sub(&expected).max_abs() < 1e-15);
        let shifted = phi.shifted(3).site_density(1).unwrap();
        assert!((shifted.block(0).entry(0, 0).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_block_smaller_than_observable() {
        let model = ChainModel::new(2, 1).unwrap();
        assert!(GibbsBlockState::new(&model, 1, &ising(&model, 1.0)).is_err());
    }
}

use num_complex::Complex64;

use super::block::Block;
use crate::error::{Error, Result};

/// Inputs further than this from self-adjoint are rejected.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Idempotence tolerance for [`Projection::new`].
pub const PROJECTION_TOL: f64 = 1e-10;

/// A finite-dimensional C*-algebra `⊕_k M_{m_k}` together with the density
/// of the tracial reference state, `D_τ = ⊕_k λ_k z_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockAlgebra {
    block_dims: Vec<usize>,
    central_weights: Vec<f64>,
}

impl BlockAlgebra {
    /// Validates `m_k >= 1`, `λ_k >= 0` and `Σ_k λ_k m_k = 1`.
    pub fn new(block_dims: Vec<usize>, central_weights: Vec<f64>) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::Shape(format!("block dims must be positive, got {block_dims:?}")));
        }
        if block_dims.len() != central_weights.len() {
            return Err(Error::Shape(format!(
                "{} blocks but {} central weights",
                block_dims.len(),
                central_weights.len()
            )));
        }
        if central_weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "central weights must be finite and non-negative, got {central_weights:?}"
            )));
        }
        let norm: f64 = block_dims.iter().zip(&central_weights).map(|(&m, &w)| m as f64 * w).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "central weights give τ(1) = {norm}, expected 1"
            )));
        }
        Ok(Self { block_dims, central_weights })
    }

    /// `M_dim` with its normalized trace.
    pub fn full_matrix(dim: usize) -> Self {
        assert!(dim > 0, "matrix algebra needs a positive dimension");
        Self { block_dims: vec![dim], central_weights: vec![1.0 / dim as f64] }
    }

    /// Blocks weighted so that τ is the normalized canonical trace.
    pub fn with_uniform_trace(block_dims: Vec<usize>) -> Result<Self> {
        let total: usize = block_dims.iter().sum();
        let weights = vec![1.0 / total.max(1) as f64; block_dims.len()];
        Self::new(block_dims, weights)
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn central_weights(&self) -> &[f64] {
        &self.central_weights
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Linear dimension `Σ m_k²`.
    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().map(|m| m * m).sum()
    }

    /// `Tr(1) = Σ m_k`.
    pub fn unit_trace(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// The single block dimension, when the algebra is a full matrix algebra.
    pub fn single_block_dim(&self) -> Option<usize> {
        match self.block_dims.as_slice() {
            [m] => Some(*m),
            _ => None,
        }
    }

    /// Density of τ with respect to the canonical trace.
    pub fn tau_density(&self) -> HermitianElement {
        let blocks = self
            .block_dims
            .iter()
            .zip(&self.central_weights)
            .map(|(&m, &w)| Block::from_real_diagonal(&vec![w; m]))
            .collect();
        HermitianElement(BlockElement { algebra: self.clone(), blocks })
    }

    pub(crate) fn check_same(&self, other: &BlockAlgebra) -> Result<()> {
        if self.block_dims != other.block_dims {
            return Err(Error::Shape(format!(
                "algebra mismatch: {:?} vs {:?}",
                self.block_dims, other.block_dims
            )));
        }
        Ok(())
    }
}

/// A general element of a [`BlockAlgebra`].
#[derive(Clone, Debug, PartialEq)]
pub struct BlockElement {
    algebra: BlockAlgebra,
    blocks: Vec<Block>,
}

impl BlockElement {
    pub fn new(algebra: BlockAlgebra, blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "{} blocks given for an algebra with {}",
                blocks.len(),
                algebra.num_blocks()
            )));
        }
        for (k, (b, &m)) in blocks.iter().zip(algebra.block_dims()).enumerate() {
            if b.dim() != m {
                return Err(Error::Shape(format!("block {k} has dim {} but algebra expects {m}", b.dim())));
            }
        }
        Ok(Self { algebra, blocks })
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        let blocks = algebra.block_dims().iter().map(|&m| Block::identity(m)).collect();
        Self { algebra: algebra.clone(), blocks }
    }

    pub fn zero(algebra: &BlockAlgebra) -> Self {
        let blocks = algebra.block_dims().iter().map(|&m| Block::zeros(m)).collect();
        Self { algebra: algebra.clone(), blocks }
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &Block {
        &self.blocks[k]
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Block, &Block) -> Block) -> Result<Self> {
        self.algebra.check_same(&other.algebra)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Ok(Self { algebra: self.algebra.clone(), blocks })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, Block::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, Block::sub)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, Block::mul)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(|b| b.scale(c)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(Block::adjoint).collect() }
    }

    /// `ab − ba`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Canonical trace `Tr = Σ_k Tr_{M_k}`.
    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(Block::trace).sum()
    }

    /// The tracial state `τ(a) = Σ_k λ_k Tr_{M_k}(a_k)`.
    pub fn tau(&self) -> Complex64 {
        self.blocks
            .iter()
            .zip(self.algebra.central_weights())
            .map(|(b, &w)| b.trace() * w)
            .sum()
    }

    /// `Tr(self · other)`.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        self.algebra.check_same(&other.algebra)?;
        Ok(self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.trace_product(b)).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(Block::max_abs).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.blocks.iter().map(Block::hermiticity_defect).fold(0.0, f64::max)
    }
}

/// A self-adjoint element. Construction symmetrizes `(a + a*)/2` after
/// rejecting inputs further than [`SYMMETRY_TOL`] from self-adjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianElement(BlockElement);

impl HermitianElement {
    pub fn new(element: BlockElement) -> Result<Self> {
        let defect = element.hermiticity_defect();
        if !(defect <= SYMMETRY_TOL) {
            return Err(Error::Shape(format!("element is not Hermitian (defect {defect:e})")));
        }
        Ok(Self::symmetrize(element))
    }

    pub(crate) fn symmetrize(element: BlockElement) -> Self {
        let BlockElement { algebra, blocks } = element;
        Self(BlockElement { algebra, blocks: blocks.iter().map(Block::symmetrized).collect() })
    }

    pub fn from_blocks(algebra: &BlockAlgebra, blocks: Vec<Block>) -> Result<Self> {
        Self::new(BlockElement::new(algebra.clone(), blocks)?)
    }

    pub fn from_real_diagonals(algebra: &BlockAlgebra, diagonals: &[Vec<f64>]) -> Result<Self> {
        let blocks = diagonals.iter().map(|d| Block::from_real_diagonal(d)).collect();
        Self::from_blocks(algebra, blocks)
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        Self(BlockElement::identity(algebra))
    }

    pub fn zero(algebra: &BlockAlgebra) -> Self {
        Self(BlockElement::zero(algebra))
    }

    pub fn as_element(&self) -> &BlockElement {
        &self.0
    }

    pub fn into_element(self) -> BlockElement {
        self.0
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        self.0.algebra()
    }

    pub fn blocks(&self) -> &[Block] {
        self.0.blocks()
    }

    pub fn block(&self, k: usize) -> &Block {
        self.0.block(k)
    }

    pub fn is_diagonal(&self) -> bool {
        self.blocks().iter().all(Block::is_diagonal)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.sub(&other.0)?))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.scale(Complex64::new(c, 0.0)))
    }

    /// The product is not self-adjoint in general.
    pub fn mul(&self, other: &Self) -> Result<BlockElement> {
        self.0.mul(&other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn tau(&self) -> f64 {
        self.0.tau().re
    }

    /// `Tr(self · other)`, real for two self-adjoint factors.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        Ok(self.0.trace_product(&other.0)?.re)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// Spectral norm `max |β_i|`.
    pub fn operator_norm(&self) -> f64 {
        super::spectral::eigendecompose(self)
            .blocks()
            .iter()
            .flat_map(|b| b.values().iter())
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Dense blocks with exactly zero off-diagonal part become diagonal.
    pub fn compact(self) -> Self {
        let BlockElement { algebra, blocks } = self.0;
        Self(BlockElement { algebra, blocks: blocks.into_iter().map(Block::compact).collect() })
    }
}

/// A self-adjoint idempotent.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection(HermitianElement);

impl Projection {
    /// Checks `‖p² − p‖ ≤ 1e-10` block-wise.
    pub fn new(element: HermitianElement) -> Result<Self> {
        let square = element.mul(&element)?;
        let defect = square.sub(element.as_element())?.max_abs();
        if !(defect <= PROJECTION_TOL) {
            return Err(Error::Shape(format!("element is not a projection (‖p² − p‖ = {defect:e})")));
        }
        Ok(Self(element))
    }

    /// For projections assembled from orthonormal eigenvectors.
    pub(crate) fn from_spectral(element: HermitianElement) -> Self {
        Self(element)
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        Self(HermitianElement::identity(algebra))
    }

    pub fn zero(algebra: &BlockAlgebra) -> Self {
        Self(HermitianElement::zero(algebra))
    }

    pub fn as_hermitian(&self) -> &HermitianElement {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianElement {
        self.0
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        self.0.algebra()
    }

    /// Canonical rank per block, `Tr_{M_k} p_k`, rounded.
    pub fn block_ranks(&self) -> Vec<usize> {
        self.0.blocks().iter().map(|b| b.trace().re.round().max(0.0) as usize).collect()
    }

    /// `Tr p` as an integer.
    pub fn rank(&self) -> usize {
        self.block_ranks().iter().sum()
    }

    /// `1 − p`.
    pub fn complement(&self) -> Self {
        let one = HermitianElement::identity(self.algebra());
        Self(one.sub(&self.0).expect("same algebra"))
    }

    /// Product of two commuting projections.
    pub fn meet_commuting(&self, other: &Self) -> Result<Self> {
        let product = self.0.mul(&other.0)?;
        // pq is self-adjoint exactly when p and q commute
        let defect = product.sub(&product.adjoint())?.max_abs();
        if defect > PROJECTION_TOL {
            return Err(Error::Shape(format!("projections do not commute (defect {defect:e})")));
        }
        Ok(Self(HermitianElement::symmetrize(product)))
    }

    /// `‖p² − p‖`.
    pub fn idempotence_defect(&self) -> f64 {
        let square = self.0.mul(&self.0).expect("same algebra");
        square.sub(self.0.as_element()).expect("same algebra").max_abs()
    }
}

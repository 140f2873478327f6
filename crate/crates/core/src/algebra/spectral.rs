//! Eigendecomposition and functional calculus for block-diagonal Hermitian elements.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::block::Block;
use super::element::{BlockAlgebra, BlockElement, HermitianElement, Projection};
use crate::error::{Error, Result};

/// Eigenvalues within this distance of an interval endpoint are classified by
/// the endpoint's open/closed flag.
pub const SPECTRAL_EPS: f64 = 1e-12;
/// Eigenvalues at or below this are exact zeros for `log` and entropies.
pub const LOG_FLOOR: f64 = 1e-14;
/// Eigenvalues below `-POSITIVITY_TOL` make a density invalid.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// A real interval with independent endpoint flags; endpoints may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: true }
    }

    /// `(−∞, t]`
    pub fn at_most(t: f64) -> Self {
        Self { lo: f64::NEG_INFINITY, hi: t, lo_closed: true, hi_closed: true }
    }

    /// `[t, ∞)`
    pub fn at_least(t: f64) -> Self {
        Self { lo: t, hi: f64::INFINITY, lo_closed: true, hi_closed: true }
    }

    pub fn whole_line() -> Self {
        Self::closed(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Membership with the [`SPECTRAL_EPS`] boundary rule. An infinite lower
    /// (upper) endpoint admits `−∞` (`+∞`), which is how kernel directions of
    /// a log-density enter half-lines.
    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let below = if self.lo == f64::NEG_INFINITY {
            false
        } else if x.is_infinite() {
            x < 0.0
        } else if (x - self.lo).abs() <= SPECTRAL_EPS {
            !self.lo_closed
        } else {
            x < self.lo
        };
        let above = if self.hi == f64::INFINITY {
            false
        } else if x.is_infinite() {
            x > 0.0
        } else if (x - self.hi).abs() <= SPECTRAL_EPS {
            !self.hi_closed
        } else {
            x > self.hi
        };
        !below && !above
    }
}

/// Columns of an eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub enum Eigenbasis {
    /// Column `i` is the standard basis vector `e_{perm[i]}`.
    Standard(Vec<usize>),
    Dense(DMatrix<Complex64>),
}

/// Spectral data of one block: eigenvalues in descending order and the
/// matching orthonormal eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEigen {
    values: Vec<f64>,
    basis: Eigenbasis,
}

impl BlockEigen {
    /// Sorts the given pairs into descending order; ties keep input order.
    pub fn from_unsorted(values: Vec<f64>, basis: Eigenbasis) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let basis = match basis {
            Eigenbasis::Standard(perm) => Eigenbasis::Standard(order.iter().map(|&i| perm[i]).collect()),
            Eigenbasis::Dense(v) => Eigenbasis::Dense(v.select_columns(order.iter())),
        };
        Self { values: sorted_values, basis }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis(&self) -> &Eigenbasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Σ_i f(β_i) q_i` for the columns with `f` defined.
    fn function_block(&self, f: impl Fn(f64) -> f64) -> Block {
        let n = self.dim();
        match &self.basis {
            Eigenbasis::Standard(perm) => {
                let mut diag = vec![Complex64::new(0.0, 0.0); n];
                for (i, &row) in perm.iter().enumerate() {
                    diag[row] = Complex64::new(f(self.values[i]), 0.0);
                }
                Block::Diagonal(diag)
            }
            Eigenbasis::Dense(v) => {
                let mut scaled = v.clone();
                for (i, &x) in self.values.iter().enumerate() {
                    let mut col = scaled.column_mut(i);
                    col *= Complex64::new(f(x), 0.0);
                }
                Block::Dense(scaled * v.adjoint())
            }
        }
    }

    /// Sum of the eigenprojectors picked by `selected`.
    fn selection_block(&self, selected: &[bool]) -> Block {
        let n = self.dim();
        match &self.basis {
            Eigenbasis::Standard(perm) => {
                let mut diag = vec![Complex64::new(0.0, 0.0); n];
                for (i, &row) in perm.iter().enumerate() {
                    if selected[i] {
                        diag[row] = Complex64::new(1.0, 0.0);
                    }
                }
                Block::Diagonal(diag)
            }
            Eigenbasis::Dense(v) => {
                let cols: Vec<usize> = (0..n).filter(|&i| selected[i]).collect();
                if cols.is_empty() {
                    return Block::zeros(n);
                }
                let vs = v.select_columns(cols.iter());
                Block::Dense(&vs * vs.adjoint())
            }
        }
    }
}

/// Per-block spectral decomposition `a = ⊕_k Σ_i β_{i,k} q_{i,k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    algebra: BlockAlgebra,
    blocks: Vec<BlockEigen>,
}

/// Per-block, per-eigenvalue membership flags.
pub type Selection = Vec<Vec<bool>>;

impl EigenDecomposition {
    pub fn new(algebra: BlockAlgebra, blocks: Vec<BlockEigen>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks()
            || blocks.iter().zip(algebra.block_dims()).any(|(b, &m)| b.dim() != m)
        {
            return Err(Error::Shape("eigendecomposition does not match algebra".into()));
        }
        Ok(Self { algebra, blocks })
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[BlockEigen] {
        &self.blocks
    }

    /// Iterates `(block, index, eigenvalue)` in block order, descending within blocks.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(k, b)| b.values.iter().enumerate().map(move |(i, &v)| (k, i, v)))
    }

    /// Functional calculus `f(a)`.
    pub fn apply(&self, f: impl Fn(f64) -> f64 + Copy) -> HermitianElement {
        let blocks = self.blocks.iter().map(|b| b.function_block(f)).collect();
        HermitianElement::symmetrize(BlockElement::new(self.algebra.clone(), blocks).expect("shape"))
    }

    /// `Σ_i v_{i,k} q_{i,k}` for replacement eigenvalues `v`, in this basis.
    pub fn with_values(&self, values: Vec<Vec<f64>>) -> HermitianElement {
        let blocks = self
            .blocks
            .iter()
            .zip(values)
            .map(|(b, v)| BlockEigen { values: v, basis: b.basis.clone() }.function_block(|x| x))
            .collect();
        HermitianElement::symmetrize(BlockElement::new(self.algebra.clone(), blocks).expect("shape"))
    }

    pub fn reconstruct(&self) -> HermitianElement {
        self.apply(|x| x)
    }

    /// `Σ` of the selected minimal eigenprojectors.
    pub fn projection(&self, selection: &Selection) -> Projection {
        let blocks = self
            .blocks
            .iter()
            .zip(selection)
            .map(|(b, sel)| b.selection_block(sel))
            .collect();
        Projection::from_spectral(HermitianElement::symmetrize(
            BlockElement::new(self.algebra.clone(), blocks).expect("shape"),
        ))
    }

    /// The minimal projection `q_{i,k}`.
    pub fn projector(&self, block: usize, index: usize) -> Projection {
        let selection = self.select(|k, i, _| k == block && i == index);
        self.projection(&selection)
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum { algebra: self.algebra.clone(), values: self.blocks.iter().map(|b| b.values.clone()).collect() }
    }

    pub fn select(&self, pred: impl Fn(usize, usize, f64) -> bool) -> Selection {
        self.blocks
            .iter()
            .enumerate()
            .map(|(k, b)| b.values.iter().enumerate().map(|(i, &v)| pred(k, i, v)).collect())
            .collect()
    }
}

/// Per-block eigenvalues in descending order, without eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    algebra: BlockAlgebra,
    values: Vec<Vec<f64>>,
}

impl Spectrum {
    /// Sorts each block descending; ties keep input order.
    pub fn new(algebra: BlockAlgebra, mut values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != algebra.num_blocks() || values.iter().zip(algebra.block_dims()).any(|(v, &m)| v.len() != m) {
            return Err(Error::Shape("spectrum does not match algebra".into()));
        }
        for v in &mut values {
            v.sort_by(|a, b| b.total_cmp(a));
        }
        Ok(Self { algebra, values })
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Iterates `(block, index, eigenvalue)` as [`EigenDecomposition::iter`] does.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values.iter().enumerate().flat_map(|(k, b)| b.iter().enumerate().map(move |(i, &v)| (k, i, v)))
    }

    pub fn select(&self, pred: impl Fn(usize, usize, f64) -> bool) -> Selection {
        self.values
            .iter()
            .enumerate()
            .map(|(k, b)| b.iter().enumerate().map(|(i, &v)| pred(k, i, v)).collect())
            .collect()
    }
}

fn dense_eigen(m: &DMatrix<Complex64>) -> BlockEigen {
    let eig = SymmetricEigen::new(m.clone());
    BlockEigen::from_unsorted(eig.eigenvalues.iter().copied().collect(), Eigenbasis::Dense(eig.eigenvectors))
}

/// Eigendecomposition with descending eigenvalues per block. Diagonal blocks
/// are handled by sorting; ties keep the original index order.
pub fn eigendecompose(a: &HermitianElement) -> EigenDecomposition {
    let blocks = a
        .blocks()
        .iter()
        .map(|b| match b {
            Block::Diagonal(d) => BlockEigen::from_unsorted(
                d.iter().map(|z| z.re).collect(),
                Eigenbasis::Standard((0..d.len()).collect()),
            ),
            Block::Dense(m) => dense_eigen(m),
        })
        .collect();
    EigenDecomposition { algebra: a.algebra().clone(), blocks }
}

/// `Proj[a ∈ I]`.
pub fn spectral_projection(a: &HermitianElement, interval: Interval) -> Projection {
    let eig = eigendecompose(a);
    let sel = eig.select(|_, _, v| interval.contains(v));
    eig.projection(&sel)
}

/// Smallest eigenvalue, checked against [`POSITIVITY_TOL`].
pub(crate) fn check_positive(eig: &EigenDecomposition) -> Result<()> {
    check_positive_values(eig.iter().map(|(_, _, v)| v))
}

pub(crate) fn check_positive_values(values: impl Iterator<Item = f64>) -> Result<()> {
    let min = values.fold(f64::INFINITY, f64::min);
    if min < -POSITIVITY_TOL {
        return Err(Error::Positivity(min));
    }
    Ok(())
}

/// `log D` on the support of `D`; eigenvalues `≤ LOG_FLOOR` are mapped to 0.
pub fn matrix_log(d: &HermitianElement) -> Result<HermitianElement> {
    let eig = eigendecompose(d);
    check_positive(&eig)?;
    if eig.iter().all(|(_, _, v)| v <= LOG_FLOOR) {
        return Err(Error::Domain("log of the zero element".into()));
    }
    Ok(eig.apply(|x| if x > LOG_FLOOR { x.ln() } else { 0.0 }))
}

pub fn matrix_exp(a: &HermitianElement) -> HermitianElement {
    eigendecompose(a).apply(f64::exp)
}

/// Projection onto the support of a positive element.
pub fn support_projection(d: &HermitianElement) -> Projection {
    let eig = eigendecompose(d);
    let sel = eig.select(|_, _, v| v > LOG_FLOOR);
    eig.projection(&sel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn interval_boundary_rule() {
        let i = Interval::open(0.5, 1.0);
        assert!(!i.contains(0.5 + 1e-13));
        assert!(i.contains(0.5 + 1e-11));
        assert!(!i.contains(1.0));
        let j = Interval { lo: 0.5, hi: 1.0, lo_closed: false, hi_closed: true };
        assert!(j.contains(1.0 - 1e-13));
        assert!(j.contains(1.0 + 1e-13));
        assert!(Interval::at_most(0.0).contains(f64::NEG_INFINITY));
        assert!(!Interval::open(-1.0, 1.0).contains(f64::NEG_INFINITY));
        assert!(!Interval::at_least(0.0).contains(f64::NEG_INFINITY));
    }

    #[test]
    fn diagonal_spectral_projection() {
        let alg = BlockAlgebra::full_matrix(2);
        let a = HermitianElement::from_real_diagonals(&alg, &[vec![0.2, 0.8]]).unwrap();
        let p = spectral_projection(&a, Interval { lo: 0.5, hi: 1.0, lo_closed: false, hi_closed: true });
        assert_eq!(p.as_hermitian().block(0).to_dense(), DMatrix::from_diagonal(&nalgebra::dvector![c(0.0), c(1.0)]));
    }

    #[test]
    fn sigma_x_positive_part_is_symmetric_projector() {
        let alg = BlockAlgebra::full_matrix(2);
        let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let a = HermitianElement::from_blocks(&alg, vec![Block::Dense(sx)]).unwrap();
        let p = spectral_projection(&a, Interval::open(0.0, 2.0));
        let expected = DMatrix::from_element(2, 2, c(0.5));
        let got = p.as_hermitian().block(0).to_dense();
        assert!((got - expected).iter().all(|z| z.norm() < 1e-12));
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn disjoint_interval_gives_zero() {
        let alg = BlockAlgebra::full_matrix(2);
        let a = HermitianElement::from_real_diagonals(&alg, &[vec![0.2, 0.8]]).unwrap();
        assert_eq!(spectral_projection(&a, Interval::open(5.0, 6.0)).rank(), 0);
    }

    #[test]
    fn eigenvalues_descend_with_stable_ties() {
        let alg = BlockAlgebra::full_matrix(4);
        let a = HermitianElement::from_real_diagonals(&alg, &[vec![0.1, 0.9, 0.1, 0.9]]).unwrap();
        let eig = eigendecompose(&a);
        assert_eq!(eig.blocks()[0].values(), &[0.9, 0.9, 0.1, 0.1]);
        assert_eq!(eig.blocks()[0].basis(), &Eigenbasis::Standard(vec![1, 3, 0, 2]));
    }

    #[test]
    fn identity_has_orthogonal_minimal_projectors() {
        let alg = BlockAlgebra::full_matrix(3);
        let eig = eigendecompose(&HermitianElement::identity(&alg));
        assert!(eig.iter().all(|(_, _, v)| v == 1.0));
        let mut sum = HermitianElement::zero(&alg);
        for i in 0..3 {
            let q = eig.projector(0, i);
            assert_eq!(q.rank(), 1);
            sum = sum.add(q.as_hermitian()).unwrap();
        }
        assert_eq!(sum, HermitianElement::identity(&alg));
    }

    #[test]
    fn log_and_exp_of_trivial_elements() {
        let alg = BlockAlgebra::full_matrix(3);
        assert_eq!(matrix_log(&HermitianElement::identity(&alg)).unwrap(), HermitianElement::zero(&alg));
        assert_eq!(matrix_exp(&HermitianElement::zero(&alg)), HermitianElement::identity(&alg));
        assert!(matches!(matrix_log(&HermitianElement::zero(&alg)), Err(Error::Domain(_))));
    }

    #[test]
    fn log_ignores_kernel() {
        let alg = BlockAlgebra::full_matrix(2);
        let d = HermitianElement::from_real_diagonals(&alg, &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(matrix_log(&d).unwrap(), HermitianElement::zero(&alg));
        assert_eq!(support_projection(&d).rank(), 1);
    }
}

//! Tensor-leg bookkeeping for full matrix algebras `M_d^{⊗N}`, site 0 being
//! the leftmost (most significant) factor.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::block::Block;
use super::element::{BlockAlgebra, BlockElement, HermitianElement};
use crate::error::{Error, Result};

/// `N` with `d^N = dim`, if any.
pub fn site_count(dim: usize, site_dim: usize) -> Option<usize> {
    let mut n = 0;
    let mut p = 1usize;
    while p < dim {
        p = p.checked_mul(site_dim)?;
        n += 1;
    }
    (p == dim).then_some(n)
}

fn sites_of(block: &Block, site_dim: usize) -> Result<usize> {
    site_count(block.dim(), site_dim).ok_or_else(|| {
        Error::Shape(format!("dimension {} is not a power of the site dimension {site_dim}", block.dim()))
    })
}

fn single_block<'a>(a: &'a BlockElement, what: &str) -> Result<&'a Block> {
    match a.blocks() {
        [b] => Ok(b),
        _ => Err(Error::Shape(format!("{what} requires a full matrix algebra"))),
    }
}

/// `1_{d^left} ⊗ b ⊗ 1_{d^right}`.
pub fn pad_block(b: &Block, site_dim: usize, left: usize, right: usize) -> Block {
    let mut out = b.clone();
    if left > 0 {
        out = Block::identity(site_dim.pow(left as u32)).kron(&out);
    }
    if right > 0 {
        out = out.kron(&Block::identity(site_dim.pow(right as u32)));
    }
    out
}

/// Places `a` (acting on `k` sites) at sites `[offset, offset + k)` of the
/// single-block algebra `target`.
pub fn embed(a: &HermitianElement, site_dim: usize, offset: usize, target: &BlockAlgebra) -> Result<HermitianElement> {
    let out = embed_element(a.as_element(), site_dim, offset, target)?;
    Ok(HermitianElement::symmetrize(out))
}

pub fn embed_element(a: &BlockElement, site_dim: usize, offset: usize, target: &BlockAlgebra) -> Result<BlockElement> {
    let block = single_block(a, "embed")?;
    let target_dim = target
        .single_block_dim()
        .ok_or_else(|| Error::Shape("embed target must be a full matrix algebra".into()))?;
    let k = sites_of(block, site_dim)?;
    let total = site_count(target_dim, site_dim)
        .ok_or_else(|| Error::Shape(format!("target dimension {target_dim} is not a power of {site_dim}")))?;
    if offset + k > total {
        return Err(Error::Volume(format!(
            "support [{offset}, {}) does not fit in {total} sites",
            offset + k
        )));
    }
    BlockElement::new(target.clone(), vec![pad_block(block, site_dim, offset, total - offset - k)])
}

/// Keeps the contiguous sites `[lo, hi)` and traces out the rest.
pub fn partial_trace(b: &Block, site_dim: usize, lo: usize, hi: usize) -> Result<Block> {
    let n = sites_of(b, site_dim)?;
    if lo > hi || hi > n {
        return Err(Error::Volume(format!("cannot keep sites [{lo}, {hi}) of {n}")));
    }
    let left = site_dim.pow(lo as u32);
    let mid = site_dim.pow((hi - lo) as u32);
    let right = site_dim.pow((n - hi) as u32);
    Ok(match b {
        Block::Diagonal(d) => {
            let mut out = vec![Complex64::new(0.0, 0.0); mid];
            for l in 0..left {
                for (m, slot) in out.iter_mut().enumerate() {
                    let base = (l * mid + m) * right;
                    *slot += d[base..base + right].iter().sum::<Complex64>();
                }
            }
            Block::Diagonal(out)
        }
        Block::Dense(a) => {
            let mut out = DMatrix::zeros(mid, mid);
            for l in 0..left {
                for m in 0..mid {
                    for mp in 0..mid {
                        let mut acc = Complex64::new(0.0, 0.0);
                        let row = (l * mid + m) * right;
                        let col = (l * mid + mp) * right;
                        for r in 0..right {
                            acc += a[(row + r, col + r)];
                        }
                        out[(m, mp)] += acc;
                    }
                }
            }
            Block::Dense(out)
        }
    })
}

/// Partial trace of a single-block Hermitian element onto sites `[lo, hi)`.
pub fn reduce(a: &HermitianElement, site_dim: usize, lo: usize, hi: usize) -> Result<HermitianElement> {
    let block = partial_trace(single_block(a.as_element(), "partial trace")?, site_dim, lo, hi)?;
    let alg = BlockAlgebra::full_matrix(block.dim());
    Ok(HermitianElement::symmetrize(BlockElement::new(alg, vec![block])?))
}

/// `b^{⊗k}`, with `b^{⊗0} = 1`.
pub fn tensor_power(b: &Block, k: usize) -> Block {
    (0..k).fold(Block::identity(1), |acc, _| acc.kron(b))
}

/// Kronecker product of single-block Hermitian elements, left to right.
pub fn kron_all(factors: &[HermitianElement]) -> Result<HermitianElement> {
    let mut acc = Block::identity(1);
    for f in factors {
        acc = acc.kron(single_block(f.as_element(), "kron")?);
    }
    let alg = BlockAlgebra::full_matrix(acc.dim());
    Ok(HermitianElement::symmetrize(BlockElement::new(alg, vec![acc])?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_count_detects_powers() {
        assert_eq!(site_count(8, 2), Some(3));
        assert_eq!(site_count(1, 3), Some(0));
        assert_eq!(site_count(6, 2), None);
        assert_eq!(site_count(9, 3), Some(2));
    }

    #[test]
    fn embed_identity_is_identity() {
        let one = HermitianElement::identity(&BlockAlgebra::full_matrix(2));
        let target = BlockAlgebra::full_matrix(256);
        assert_eq!(embed(&one, 2, 3, &target).unwrap(), HermitianElement::identity(&target));
    }

    #[test]
    fn embed_places_on_right_leg() {
        let z = HermitianElement::from_real_diagonals(&BlockAlgebra::full_matrix(2), &[vec![1.0, -1.0]]).unwrap();
        let target = BlockAlgebra::full_matrix(4);
        let e = embed(&z, 2, 1, &target).unwrap();
        assert_eq!(e.block(0), &Block::from_real_diagonal(&[1.0, -1.0, 1.0, -1.0]));
        assert!(matches!(embed(&z, 2, 2, &target), Err(Error::Volume(_))));
    }

    #[test]
    fn partial_trace_of_product_dense() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.7, 0.0), Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), Complex64::new(0.3, 0.0)],
        );
        let b = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.5, 0.0));
        let ab = Block::Dense(a.kronecker(&b));
        let left = partial_trace(&ab, 2, 0, 1).unwrap().to_dense();
        assert!((left - &a).iter().all(|z| z.norm() < 1e-15));
        let right = partial_trace(&ab, 2, 1, 2).unwrap().to_dense();
        assert!((right - &b).iter().all(|z| z.norm() < 1e-15));
        let middle = partial_trace(&Block::Dense(b.kronecker(&a).kronecker(&b)), 2, 1, 2).unwrap().to_dense();
        assert!((middle - &a).iter().all(|z| z.norm() < 1e-15));
    }
}

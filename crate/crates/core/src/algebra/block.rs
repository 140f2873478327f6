//! Storage for one matrix block of a block-diagonal element.
//!
//! Blocks that are diagonal in the product basis are kept as a vector of
//! entries; products, Kronecker products and functional calculus preserve
//! that form, so diagonal states stay cheap at the largest volumes.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    Diagonal(Vec<Complex64>),
    Dense(DMatrix<Complex64>),
}

impl Block {
    pub fn identity(dim: usize) -> Self {
        Block::Diagonal(vec![ONE; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Block::Diagonal(vec![ZERO; dim])
    }

    pub fn from_real_diagonal(entries: &[f64]) -> Self {
        Block::Diagonal(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            Block::Diagonal(d) => d.len(),
            Block::Dense(m) => m.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Block::Diagonal(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Block::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    ZERO
                }
            }
            Block::Dense(m) => m[(i, j)],
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            Block::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Block::Dense(m) => m.clone(),
        }
    }

    /// Demotes a dense block whose off-diagonal entries are exactly zero.
    pub fn compact(self) -> Self {
        match self {
            Block::Dense(m) => {
                let n = m.nrows();
                let off_diagonal_zero = (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == ZERO));
                if off_diagonal_zero {
                    Block::Diagonal((0..n).map(|i| m[(i, i)]).collect())
                } else {
                    Block::Dense(m)
                }
            }
            d => d,
        }
    }

    pub fn trace(&self) -> Complex64 {
        match self {
            Block::Diagonal(d) => d.iter().sum(),
            Block::Dense(m) => m.trace(),
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Block::Diagonal(d) => Block::Diagonal(d.iter().map(|z| z.conj()).collect()),
            Block::Dense(m) => Block::Dense(m.adjoint()),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        match self {
            Block::Diagonal(d) => Block::Diagonal(d.iter().map(|z| z * c).collect()),
            Block::Dense(m) => Block::Dense(m * c),
        }
    }

    pub fn add(&self, other: &Block) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        match (self, other) {
            (Block::Diagonal(a), Block::Diagonal(b)) => {
                Block::Diagonal(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Block::Dense(a), Block::Dense(b)) => Block::Dense(a + b),
            (Block::Dense(a), Block::Diagonal(b)) | (Block::Diagonal(b), Block::Dense(a)) => {
                let mut m = a.clone();
                for (i, x) in b.iter().enumerate() {
                    m[(i, i)] += x;
                }
                Block::Dense(m)
            }
        }
    }

    pub fn sub(&self, other: &Block) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn mul(&self, other: &Block) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        match (self, other) {
            (Block::Diagonal(a), Block::Diagonal(b)) => {
                Block::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            (Block::Diagonal(a), Block::Dense(m)) => {
                let mut out = m.clone();
                for (i, x) in a.iter().enumerate() {
                    let mut row = out.row_mut(i);
                    row *= *x;
                }
                Block::Dense(out)
            }
            (Block::Dense(m), Block::Diagonal(b)) => {
                let mut out = m.clone();
                for (j, x) in b.iter().enumerate() {
                    let mut col = out.column_mut(j);
                    col *= *x;
                }
                Block::Dense(out)
            }
            (Block::Dense(a), Block::Dense(b)) => Block::Dense(a * b),
        }
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Block) -> Complex64 {
        match (self, other) {
            (Block::Diagonal(a), Block::Diagonal(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Block::Diagonal(a), Block::Dense(m)) | (Block::Dense(m), Block::Diagonal(a)) => {
                a.iter().enumerate().map(|(i, x)| x * m[(i, i)]).sum()
            }
            (Block::Dense(a), Block::Dense(b)) => {
                let n = a.nrows();
                let mut acc = ZERO;
                for i in 0..n {
                    for k in 0..n {
                        acc += a[(i, k)] * b[(k, i)];
                    }
                }
                acc
            }
        }
    }

    pub fn kron(&self, other: &Block) -> Self {
        match (self, other) {
            (Block::Diagonal(a), Block::Diagonal(b)) => {
                let mut out = Vec::with_capacity(a.len() * b.len());
                for x in a {
                    for y in b {
                        out.push(x * y);
                    }
                }
                Block::Diagonal(out)
            }
            _ => Block::Dense(self.to_dense().kronecker(&other.to_dense())),
        }
    }

    /// Largest entry modulus; used for residual checks.
    pub fn max_abs(&self) -> f64 {
        match self {
            Block::Diagonal(d) => d.iter().map(|z| z.norm()).fold(0.0, f64::max),
            Block::Dense(m) => m.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        match self {
            Block::Diagonal(d) => d.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
            Block::Dense(m) => {
                let n = m.nrows();
                let mut worst = 0.0f64;
                for j in 0..n {
                    for i in 0..=j {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    /// `(a + a*) / 2`.
    pub fn symmetrized(&self) -> Self {
        match self {
            Block::Diagonal(d) => {
                Block::Diagonal(d.iter().map(|z| Complex64::new(z.re, 0.0)).collect())
            }
            Block::Dense(m) => Block::Dense((m + m.adjoint()) * Complex64::new(0.5, 0.0)),
        }
    }
}

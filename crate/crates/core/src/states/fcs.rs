use std::collections::HashMap;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::{ErgodicityCertificate, StateModel};
use crate::algebra::{Block, BlockAlgebra, HermitianElement};
use crate::error::{Error, Result};

const FIXED_POINT_TOL: f64 = 1e-15;
const FIXED_POINT_MAX_ITER: usize = 1_000_000;
const GAP_TOL: f64 = 1e-9;

type Mat = DMatrix<Complex64>;

/// Finitely correlated state given by Kraus operators `A_s^k` on a bond space
/// `C^b`, with `E_{s,s'}(X) = Σ_k A_s^k X (A_{s'}^k)^†` and
/// `ω(e_{i_1 j_1} ⊗ … ⊗ e_{i_N j_N}) = Tr(e E_{i_N j_N} ∘ … ∘ E_{i_1 j_1}(ρ))`.
#[derive(Clone, Debug)]
pub struct FinitelyCorrelatedState {
    site_dim: usize,
    bond_dim: usize,
    kraus: Vec<Vec<Mat>>,
    rho: Mat,
    left: Mat,
    transfer_spectrum: Vec<Complex64>,
    label: String,
}

fn zero(b: usize) -> Mat {
    Mat::zeros(b, b)
}

fn transfer_matrix(kraus: &[Vec<Mat>], b: usize) -> Mat {
    let mut m = Mat::zeros(b * b, b * b);
    for ks in kraus {
        for a in ks {
            m += a.map(|z| z.conj()).kronecker(a);
        }
    }
    m
}

fn apply_full(kraus: &[Vec<Mat>], x: &Mat) -> Mat {
    let mut out = zero(x.nrows());
    for ks in kraus {
        for a in ks {
            out += a * x * a.adjoint();
        }
    }
    out
}

fn apply_dual(kraus: &[Vec<Mat>], y: &Mat) -> Mat {
    let mut out = zero(y.nrows());
    for ks in kraus {
        for a in ks {
            out += a.adjoint() * y * a;
        }
    }
    out
}

/// Fixed point of a unit-spectral-radius positive map via the lazy iteration
/// `X ← (X + f(X))/2`, normalized by trace.
fn lazy_fixed_point(start: Mat, f: impl Fn(&Mat) -> Mat) -> Result<Mat> {
    let mut x = start;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let mut next = (&x + f(&x)) * Complex64::new(0.5, 0.0);
        let tr = next.trace();
        if tr.norm() == 0.0 {
            return Err(Error::ModelValidity("transfer map annihilates the fixed-point iterate".into()));
        }
        next /= tr;
        let diff = (&next - &x).iter().map(|z| z.norm()).fold(0.0, f64::max);
        x = next;
        if diff <= FIXED_POINT_TOL {
            return Ok(x);
        }
    }
    Err(Error::ModelValidity("fixed-point iteration of the transfer map did not converge".into()))
}

fn sorted_moduli(values: &[Complex64]) -> Vec<Complex64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    v
}

impl FinitelyCorrelatedState {
    /// `kraus[k][s]` is `A_s^k`, a `b × b` matrix. The map is rescaled to
    /// spectral radius one.
    pub fn new(kraus: Vec<Vec<Mat>>) -> Result<Self> {
        let site_dim = kraus.first().map(Vec::len).unwrap_or(0);
        if site_dim < 2 {
            return Err(Error::Shape("finitely correlated state needs at least one Kraus family over d >= 2".into()));
        }
        let b = kraus[0][0].nrows();
        if b == 0 {
            return Err(Error::Shape("bond dimension must be positive".into()));
        }
        for ks in &kraus {
            if ks.len() != site_dim {
                return Err(Error::Shape("every Kraus family must have one matrix per site value".into()));
            }
            if ks.iter().any(|a| a.nrows() != b || a.ncols() != b) {
                return Err(Error::Shape(format!("Kraus matrices must all be {b}x{b}")));
            }
        }
        let t = transfer_matrix(&kraus, b);
        let spectrum: Vec<Complex64> = if b == 1 {
            vec![t[(0, 0)]]
        } else {
            let (_, tri) = Schur::new(t).unpack();
            (0..b * b).map(|i| tri[(i, i)]).collect()
        };
        let spectrum = sorted_moduli(&spectrum);
        let radius = spectrum[0].norm();
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::ModelValidity(format!("transfer map has spectral radius {radius}")));
        }
        let scale = Complex64::new(radius.sqrt().recip(), 0.0);
        let kraus: Vec<Vec<Mat>> = kraus.into_iter().map(|ks| ks.into_iter().map(|a| a * scale).collect()).collect();
        let transfer_spectrum: Vec<Complex64> = spectrum.iter().map(|z| z / radius).collect();

        let rho = lazy_fixed_point(Mat::identity(b, b) / Complex64::new(b as f64, 0.0), |x| apply_full(&kraus, x))?;
        let left = lazy_fixed_point(Mat::identity(b, b), |y| apply_dual(&kraus, y))?;
        let norm = (&left * &rho).trace();
        if norm.norm() < 1e-14 {
            return Err(Error::ModelValidity("left and right fixed points are orthogonal".into()));
        }
        let left = left / norm;
        Ok(Self {
            site_dim,
            bond_dim: b,
            kraus,
            rho,
            left,
            transfer_spectrum,
            label: format!("fcs(d={site_dim},b={b})"),
        })
    }

    /// Classical Markov chain with row-stochastic transition matrix `T`,
    /// encoded with `A_s^{(r)} = sqrt(T_rs) |s⟩⟨r|`.
    pub fn from_markov(transition: &[Vec<f64>]) -> Result<Self> {
        let d = transition.len();
        if d < 2 || transition.iter().any(|row| row.len() != d) {
            return Err(Error::Shape("transition matrix must be square with d >= 2".into()));
        }
        for (r, row) in transition.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InvalidParameter(format!("row {r} of the transition matrix has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("row {r} of the transition matrix sums to {sum}")));
            }
        }
        let kraus = (0..d)
            .map(|r| {
                (0..d)
                    .map(|s| {
                        let mut a = zero(d);
                        a[(s, r)] = Complex64::new(transition[r][s].sqrt(), 0.0);
                        a
                    })
                    .collect()
            })
            .collect();
        let mut state = Self::new(kraus)?;
        state.label = format!("markov({transition:?})");
        Ok(state)
    }

    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    /// Eigenvalues of the normalized transfer map, by decreasing modulus.
    pub fn transfer_spectrum(&self) -> &[Complex64] {
        &self.transfer_spectrum
    }

    pub fn right_fixed_point(&self) -> &Mat {
        &self.rho
    }

    pub fn left_fixed_point(&self) -> &Mat {
        &self.left
    }

    fn apply_pair(&self, s: usize, t: usize, x: &Mat) -> Mat {
        let mut out = zero(self.bond_dim);
        for ks in &self.kraus {
            out += &ks[s] * x * ks[t].adjoint();
        }
        out
    }
}

impl StateModel for FinitelyCorrelatedState {
    fn site_dim(&self) -> usize {
        self.site_dim
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn site_density(&self, sites: usize) -> Result<HermitianElement> {
        let d = self.site_dim;
        let zero_c = Complex64::new(0.0, 0.0);
        let mut layer: HashMap<(usize, usize), Mat> = HashMap::new();
        layer.insert((0, 0), self.rho.clone());
        let mut entries: Vec<((usize, usize), Complex64)> = Vec::new();
        if sites == 0 {
            entries.push(((0, 0), (&self.left * &self.rho).trace()));
        }
        for level in 0..sites {
            let last = level + 1 == sites;
            let mut next = HashMap::with_capacity(if last { 0 } else { layer.len() * d * d });
            for ((i, j), x) in &layer {
                for s in 0..d {
                    for t in 0..d {
                        let y = self.apply_pair(s, t, x);
                        let key = (i * d + s, j * d + t);
                        if last {
                            let v = (&self.left * y).trace();
                            if v != zero_c {
                                entries.push((key, v));
                            }
                        } else if y.iter().any(|z| *z != zero_c) {
                            next.insert(key, y);
                        }
                    }
                }
            }
            layer = next;
        }
        let dim = d.pow(sites as u32);
        entries.sort_by_key(|(k, _)| *k);
        let block = if entries.iter().all(|((i, j), _)| i == j) {
            let mut diag = vec![Complex64::new(0.0, 0.0); dim];
            for ((i, _), v) in entries {
                diag[i] = v;
            }
            Block::Diagonal(diag)
        } else {
            let mut m = Mat::zeros(dim, dim);
            for ((i, j), v) in entries {
                m[(i, j)] = v;
            }
            Block::Dense(m)
        };
        HermitianElement::from_blocks(&BlockAlgebra::full_matrix(dim), vec![block])
    }

    fn ergodicity(&self) -> ErgodicityCertificate {
        let second = self.transfer_spectrum.get(1).map(|z| z.norm()).unwrap_or(0.0);
        let gap = 1.0 - second;
        ErgodicityCertificate { ergodic: gap > GAP_TOL, gap }
    }
}

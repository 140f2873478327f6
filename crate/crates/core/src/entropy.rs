//! Von Neumann and relative entropy, mean entropy and the `λ_τ` limit.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::algebra::spectral::{check_positive, check_positive_values};
use crate::algebra::{eigendecompose, matrix_log, HermitianElement, Spectrum, LOG_FLOOR};
use crate::error::{Error, Result};
use crate::model::{ChainModel, SCALARITY_TOL};
use crate::states::{restrict_eigenvalues, StateModel};

/// Mass of `D₁` outside `supp D₂` above which `S(D₁, D₂) = +∞`.
pub const SUPPORT_TOL: f64 = 1e-12;

fn eta(p: f64) -> f64 {
    if p > LOG_FLOOR {
        -p * p.ln()
    } else {
        0.0
    }
}

/// `−Σ β log β` over the eigenvalues of a positive element.
pub fn entropy_of_spectrum(spectrum: &Spectrum) -> Result<f64> {
    check_positive_values(spectrum.iter().map(|(_, _, v)| v))?;
    Ok(spectrum.iter().map(|(_, _, p)| eta(p)).sum())
}

/// `S(D) = −Tr D log D`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(d: &HermitianElement) -> Result<f64> {
    entropy_of_spectrum(&eigendecompose(d).spectrum())
}

/// `S(ψ₁, ψ₂) = Tr D₁ (log D₁ − log D₂)`, `+∞` when `supp D₁ ⊄ supp D₂`.
pub fn relative_entropy(d1: &HermitianElement, d2: &HermitianElement) -> Result<f64> {
    d1.algebra().check_same(d2.algebra())?;
    let e1 = eigendecompose(d1);
    let e2 = eigendecompose(d2);
    check_positive(&e1)?;
    check_positive(&e2)?;
    let kernel = e2.projection(&e2.select(|_, _, v| v <= LOG_FLOOR));
    if d1.trace_product(kernel.as_hermitian())? > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    if e1.iter().all(|(_, _, v)| v <= LOG_FLOOR) {
        return Ok(0.0);
    }
    let neg_entropy: f64 = -e1.iter().map(|(_, _, p)| eta(p)).sum::<f64>();
    let log2 = e2.apply(|x| if x > LOG_FLOOR { x.ln() } else { 0.0 });
    Ok(neg_entropy - d1.trace_product(&log2)?)
}

/// `S(ω|A_n)` from the state's spectral data.
pub fn restricted_entropy(state: &dyn StateModel, model: &ChainModel, n: usize) -> Result<f64> {
    entropy_of_spectrum(&restrict_eigenvalues(state, model, n)?)
}

/// `S(ω|A_n, τ|A_n) = −S(ω|A_n) + (n + w − 1) log d`, since `D_τ` is scalar.
pub fn relative_entropy_to_trace(state: &dyn StateModel, model: &ChainModel, n: usize) -> Result<f64> {
    Ok(model.sites(n) as f64 * model.lambda_tau() - restricted_entropy(state, model, n)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extrapolation {
    /// `s_{n_max}`.
    Raw,
    /// `(S_{n_max} − S_{n_max−k}) / k` with `k` the state's entropy stride.
    Increment,
    /// Fit of `s_n = s + c/n` through the endpoints of the range.
    EndpointFit,
}

impl Extrapolation {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::Increment => "increment",
            Self::EndpointFit => "endpoint_fit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyRow {
    pub n: usize,
    /// `S(ω|A_n)`.
    pub entropy: f64,
    /// `S(ω|A_n)/n`.
    pub density: f64,
    /// `(S_n − S_{n−k})/k`, when `n − k` is in the range.
    pub increment: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanEntropyEstimate {
    pub rows: Vec<EntropyRow>,
    pub stride: usize,
    pub raw: f64,
    pub increment: Option<f64>,
    pub endpoint_fit: Option<f64>,
    pub method: Extrapolation,
    pub limit: f64,
}

impl MeanEntropyEstimate {
    pub fn estimate(&self, method: Extrapolation) -> Option<f64> {
        match method {
            Extrapolation::Raw => Some(self.raw),
            Extrapolation::Increment => self.increment,
            Extrapolation::EndpointFit => self.endpoint_fit,
        }
    }
}

fn check_range(range: &RangeInclusive<usize>) -> Result<()> {
    if range.is_empty() || *range.start() == 0 {
        return Err(Error::Volume(format!("invalid volume range {range:?}")));
    }
    Ok(())
}

/// `s_n = S(ω|A_n)/n` over `range` with the three extrapolations; the
/// increment is primary when available.
pub fn mean_entropy(state: &dyn StateModel, model: &ChainModel, range: RangeInclusive<usize>) -> Result<MeanEntropyEstimate> {
    check_range(&range)?;
    model.local_algebra(*range.end())?;
    let ns: Vec<usize> = range.collect();
    let entropies: Vec<f64> =
        ns.par_iter().map(|&n| restricted_entropy(state, model, n)).collect::<Result<Vec<_>>>()?;
    let stride = state.entropy_stride().max(1);
    let first = ns[0];
    let rows: Vec<EntropyRow> = ns
        .iter()
        .zip(&entropies)
        .map(|(&n, &s)| EntropyRow {
            n,
            entropy: s,
            density: s / n as f64,
            increment: (n >= first + stride).then(|| (s - entropies[n - stride - first]) / stride as f64),
        })
        .collect();
    let last = rows.last().expect("non-empty range");
    let raw = last.density;
    let increment = last.increment;
    let endpoint_fit = (last.n > first).then(|| (last.entropy - entropies[0]) / (last.n - first) as f64);
    let (method, limit) = match increment {
        Some(v) => (Extrapolation::Increment, v),
        None => (Extrapolation::Raw, raw),
    };
    Ok(MeanEntropyEstimate { rows, stride, raw, increment, endpoint_fit, method, limit })
}

/// `−(1/n) log D_{τ|A_n}` reduced to a scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaTau {
    pub per_n: Vec<(usize, f64)>,
    /// `min_c ‖X_n − c·1‖` for `X_n = −(1/n) log D_{τ|A_n}`.
    pub residuals: Vec<f64>,
    pub limit: f64,
}

impl LambdaTau {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn lambda_tau(model: &ChainModel, range: RangeInclusive<usize>) -> Result<LambdaTau> {
    check_range(&range)?;
    let mut per_n = Vec::new();
    let mut residuals = Vec::new();
    for n in range {
        let alg = model.local_algebra(n)?;
        let x = matrix_log(&alg.tau_density())?.scale(-1.0 / n as f64);
        // Distance to the nearest scalar is half the spectral spread.
        let eig = eigendecompose(&x);
        let (lo, hi) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, _, v)| (lo.min(v), hi.max(v)));
        let scalar = 0.5 * (lo + hi);
        let residual = 0.5 * (hi - lo);
        if residual > SCALARITY_TOL {
            return Err(Error::ModelValidity(format!("-(1/{n}) log D_tau deviates from a scalar by {residual:e}")));
        }
        per_n.push((n, scalar));
        residuals.push(residual);
    }
    // v_n = λ + c/n fitted through the last two volumes.
    let limit = match per_n.as_slice() {
        [.., (n1, v1), (n2, v2)] => {
            let (n1, n2) = (*n1 as f64, *n2 as f64);
            (n2 * v2 - n1 * v1) / (n2 - n1)
        }
        [(_, v)] => *v,
        [] => unreachable!("non-empty range"),
    };
    Ok(LambdaTau { per_n, residuals, limit })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubadditivityRecord {
    pub m: usize,
    pub n: usize,
    pub blocks: usize,
    /// `−S(ω|A_n, τ|A_n)`.
    pub lhs: f64,
    /// `−⌊n/(m+n₀)⌋ · S(ω|A_m, τ|A_m)`.
    pub rhs: f64,
    pub slack: f64,
}

pub fn subadditivity_check(state: &dyn StateModel, model: &ChainModel, m: usize, n: usize) -> Result<SubadditivityRecord> {
    if m == 0 || n == 0 {
        return Err(Error::Volume("subadditivity check needs m, n >= 1".into()));
    }
    let blocks = n / (m + model.commutation_distance());
    let lhs = -relative_entropy_to_trace(state, model, n)?;
    let rhs = -(blocks as f64) * relative_entropy_to_trace(state, model, m)?;
    Ok(SubadditivityRecord { m, n, blocks, lhs, rhs, slack: rhs - lhs })
}

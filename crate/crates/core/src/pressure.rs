//! Finite-volume pressure, its limit and oracles, and the variational
//! principle with the Gibbs block lower bound.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::algebra::{eigendecompose, HermitianElement};
use crate::entropy::{entropy_of_spectrum, mean_entropy};
use crate::error::{Error, Result};
use crate::model::{ChainModel, LocalObservable};
use crate::states::{expectation, restrict_eigenvalues, GibbsBlockState, StateModel};

/// Which translates enter `H_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumConvention {
    /// `Σ_{i=0}^{n−l} γ_i(a) ∈ A_n`.
    Bulk,
    /// `Σ_{i=0}^{n−1} γ_i(a) ∈ A_{n+l−1}`.
    Full,
}

/// `Σ_{i<terms} γ_i(a)` inside `A_target`.
pub fn translate_sum(model: &ChainModel, a: &LocalObservable, terms: usize, target: usize) -> Result<HermitianElement> {
    let alg = model.local_algebra(target)?;
    let mut h = HermitianElement::zero(&alg);
    for i in 0..terms {
        h = h.add(&model.embed(a.element(), i, target)?)?;
    }
    Ok(h)
}

/// `log τ(e^{−H})`, evaluated with a shifted exponent.
pub fn log_tau_exp(h: &HermitianElement) -> f64 {
    let eig = eigendecompose(h);
    let weights = h.algebra().central_weights();
    let min = eig.iter().map(|(_, _, v)| v).fold(f64::INFINITY, f64::min);
    let sum: f64 = eig.iter().map(|(k, _, v)| weights[k] * (-(v - min)).exp()).sum();
    sum.ln() - min
}

/// `(1/n) log τ(e^{−H_n})`.
pub fn finite_volume_pressure(model: &ChainModel, a: &LocalObservable, n: usize, convention: SumConvention) -> Result<f64> {
    let l = a.locality();
    if n < l {
        return Err(Error::Volume(format!("pressure needs n >= l = {l}, got n = {n}")));
    }
    let h = match convention {
        SumConvention::Bulk => translate_sum(model, a, n - l + 1, n)?,
        SumConvention::Full => translate_sum(model, a, n, n + l - 1)?,
    };
    Ok(log_tau_exp(&h) / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureRow {
    pub n: usize,
    pub bulk: f64,
    /// Absent when `A_{n+l−1}` exceeds the cap.
    pub full: Option<f64>,
    pub oracle_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureReport {
    pub rows: Vec<PressureRow>,
    /// Fit of `P_n = P + c/n` through the last two bulk values.
    pub limit: f64,
    pub oracle: Option<f64>,
    pub oracle_gap: Option<f64>,
    /// Least-squares `C` in `|P_n − oracle| ≈ C/n`.
    pub fitted_c: Option<f64>,
    /// `max_n n·|P_n − oracle|`.
    pub max_c: Option<f64>,
    pub gap_decreasing: Option<bool>,
}

pub fn pressure_limit(model: &ChainModel, a: &LocalObservable, range: RangeInclusive<usize>) -> Result<PressureReport> {
    let (lo, hi) = (*range.start(), *range.end());
    if range.is_empty() || lo < a.locality() {
        return Err(Error::Volume(format!("pressure range {lo}..={hi} must start at l = {} or later", a.locality())));
    }
    model.local_algebra(hi)?;
    let oracle = pressure_oracle(model, a).ok();
    let ns: Vec<usize> = range.collect();
    let rows: Vec<PressureRow> = ns
        .par_iter()
        .map(|&n| {
            let bulk = finite_volume_pressure(model, a, n, SumConvention::Bulk)?;
            let full = if n + a.locality() - 1 <= model.n_max() {
                Some(finite_volume_pressure(model, a, n, SumConvention::Full)?)
            } else {
                None
            };
            Ok(PressureRow { n, bulk, full, oracle_gap: oracle.map(|p| (bulk - p).abs()) })
        })
        .collect::<Result<_>>()?;
    let limit = match rows.as_slice() {
        [.., r1, r2] => {
            let (n1, n2) = (r1.n as f64, r2.n as f64);
            (n2 * r2.bulk - n1 * r1.bulk) / (n2 - n1)
        }
        [r] => r.bulk,
        [] => unreachable!("non-empty range"),
    };
    let (fitted_c, max_c, gap_decreasing) = match oracle {
        Some(_) => {
            let gaps: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.oracle_gap.unwrap())).collect();
            let num: f64 = gaps.iter().map(|(n, g)| g / n).sum();
            let den: f64 = gaps.iter().map(|(n, _)| 1.0 / (n * n)).sum();
            let max_c = gaps.iter().map(|(n, g)| n * g).fold(0.0, f64::max);
            let decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1);
            (Some(num / den), Some(max_c), Some(decreasing))
        }
        None => (None, None, None),
    };
    Ok(PressureReport { rows, limit, oracle, oracle_gap: oracle.map(|p| (limit - p).abs()), fitted_c, max_c, gap_decreasing })
}

/// Exact pressure: closed form for single-site observables (`w = 1`,
/// `l = 1`), transfer matrix for diagonal nearest-neighbour ones.
pub fn pressure_oracle(model: &ChainModel, a: &LocalObservable) -> Result<f64> {
    if model.window_width() == 1 && a.locality() == 1 {
        return Ok(log_tau_exp(a.element()));
    }
    transfer_matrix_oracle(model, a)
}

/// `log` of the Perron eigenvalue of `M_{ss'} = (1/d) e^{−a(s,s')}`.
pub fn transfer_matrix_oracle(model: &ChainModel, a: &LocalObservable) -> Result<f64> {
    if model.window_width() != 1 {
        return Err(Error::OracleInapplicable("transfer-matrix oracle needs window width 1".into()));
    }
    if !a.is_diagonal() {
        return Err(Error::OracleInapplicable("transfer-matrix oracle needs a diagonal observable".into()));
    }
    let d = model.site_dim();
    let pair = match a.locality() {
        1 | 2 => a.widened(model, 2)?,
        l => return Err(Error::OracleInapplicable(format!("observable spans {l} sites; at most 2 supported"))),
    };
    let block = pair.element().block(0);
    let m = DMatrix::from_fn(d, d, |s, t| (-block.entry(s * d + t, s * d + t).re).exp() / d as f64);
    let perron = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(perron.ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzRecord {
    pub n: usize,
    pub pressure_diff: f64,
    pub norm_diff: f64,
    pub slack: f64,
}

/// `|P_n(a) − P_n(b)| ≤ ‖a − b‖`.
pub fn lipschitz_check(model: &ChainModel, a: &LocalObservable, b: &LocalObservable, n: usize) -> Result<LipschitzRecord> {
    let pa = finite_volume_pressure(model, a, n, SumConvention::Bulk)?;
    let pb = finite_volume_pressure(model, b, n, SumConvention::Bulk)?;
    let norm_diff = a.difference(model, b)?.operator_norm();
    let pressure_diff = (pa - pb).abs();
    Ok(LipschitzRecord { n, pressure_diff, norm_diff, slack: norm_diff - pressure_diff })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationalRecord {
    pub candidate: String,
    pub mean_entropy: f64,
    pub expectation: f64,
    /// `P(a) − (s(ω) − ω(a) − λ_τ)`.
    pub gap: f64,
}

/// Gaps of the variational inequality for each candidate, sorted ascending.
/// `pressure` is the limit `P_γ^τ(a)` (oracle or extrapolation).
pub fn variational_inequality(
    model: &ChainModel,
    candidates: &[(String, &dyn StateModel)],
    a: &LocalObservable,
    pressure: f64,
    entropy_range: RangeInclusive<usize>,
) -> Result<Vec<VariationalRecord>> {
    let lambda = model.lambda_tau();
    let mut records = candidates
        .par_iter()
        .map(|(id, state)| {
            let s = mean_entropy(*state, model, entropy_range.clone())?.limit;
            let wa = expectation(*state, model, a, 0)?;
            Ok(VariationalRecord { candidate: id.clone(), mean_entropy: s, expectation: wa, gap: pressure - (s - wa - lambda) })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|x, y| x.gap.total_cmp(&y.gap));
    Ok(records)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsLowerBound {
    pub m: usize,
    pub period: usize,
    /// `(S(G) + log d)/P`.
    pub entropy_closed_form: f64,
    /// Stride-`P` increment of `S(ψ|A_n)` at the largest feasible `n`.
    pub entropy_direct: f64,
    pub cross_check: f64,
    pub psi_a: f64,
    pub pressure: f64,
    /// `2‖a‖(n₀ + l)/(m + n₀)`.
    pub penalty: f64,
    /// `P + λ_τ + ψ(a) − penalty`.
    pub rhs: f64,
    /// `s(ψ) − rhs` with the closed-form entropy.
    pub slack: f64,
}

pub fn gibbs_lower_bound(model: &ChainModel, m: usize, a: &LocalObservable, pressure: f64) -> Result<GibbsLowerBound> {
    let psi = GibbsBlockState::new(model, m, a)?;
    let period = psi.period();
    let n_hi = model.n_max();
    if n_hi <= period {
        return Err(Error::Capacity { n: period + 1, dim: usize::MAX, cap: model.dimension_cap() });
    }
    let s_hi = entropy_of_spectrum(&restrict_eigenvalues(&psi, model, n_hi)?)?;
    let s_lo = entropy_of_spectrum(&restrict_eigenvalues(&psi, model, n_hi - period)?)?;
    let entropy_direct = (s_hi - s_lo) / period as f64;
    let entropy_closed_form = psi.mean_entropy_closed_form();
    let psi_a = expectation(&psi, model, a, 0)?;
    let n0 = model.commutation_distance();
    let penalty = 2.0 * a.operator_norm() * (n0 + a.locality()) as f64 / (m + n0) as f64;
    let rhs = pressure + model.lambda_tau() + psi_a - penalty;
    Ok(GibbsLowerBound {
        m,
        period,
        entropy_closed_form,
        entropy_direct,
        cross_check: (entropy_direct - entropy_closed_form).abs(),
        psi_a,
        pressure,
        penalty,
        rhs,
        slack: entropy_closed_form - rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodEntropy {
    pub blocks: usize,
    /// `S(φ|A_{k·p})/k`.
    pub raw: f64,
    /// `S(φ|A_{k·p}) − S(φ|A_{(k−1)·p})`.
    pub increment: f64,
}

/// Entropy per period of a `γ^p`-invariant state.
pub fn period_mean_entropy(state: &dyn StateModel, model: &ChainModel, period: usize, blocks: usize) -> Result<PeriodEntropy> {
    if period == 0 || blocks == 0 {
        return Err(Error::Volume("period and block count must be positive".into()));
    }
    let n = period * blocks;
    let s_n = entropy_of_spectrum(&restrict_eigenvalues(state, model, n)?)?;
    let s_prev = if blocks > 1 {
        entropy_of_spectrum(&restrict_eigenvalues(state, model, n - period)?)?
    } else if model.sites(0) == 0 {
        0.0
    } else {
        entropy_of_spectrum(&state.site_eigenvalues(model.sites(0))?)?
    };
    Ok(PeriodEntropy { blocks, raw: s_n / blocks as f64, increment: s_n - s_prev })
}

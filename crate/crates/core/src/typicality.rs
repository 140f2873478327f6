//! Relative information operator, deviation projections, the Ky Fan
//! construction and typical projections.
//!
//! Kernel directions of `D_ω` are assigned `R_n = −∞`: they never enter a
//! bounded window but do belong to every half-line `(−∞, t]`.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::algebra::{
    eigendecompose, spectral_projection, HermitianElement, Interval, Projection, Selection, Spectrum, LOG_FLOOR,
};
use crate::entropy::{mean_entropy, restricted_entropy};
use crate::error::{Error, Result};
use crate::model::{ChainModel, LocalObservable};
use crate::pressure::{finite_volume_pressure, translate_sum, SumConvention};
use crate::states::{
    expectation, restrict, restrict_eigenvalues, restrict_spectrum, ErgodicityCertificate, StateModel,
};

/// Spectral data of `R_n = (1/n)(log D_ω − log D_τ)` in the eigenbasis of `D_ω`.
#[derive(Clone, Debug)]
pub struct RelativeInformation {
    pub n: usize,
    pub density: Spectrum,
    /// `(1/n) log` of the scalar value of `D_τ` on each block.
    pub log_tau: Vec<f64>,
}

impl RelativeInformation {
    pub fn new(state: &dyn StateModel, model: &ChainModel, n: usize) -> Result<Self> {
        Ok(Self::from_spectrum(n, restrict_eigenvalues(state, model, n)?))
    }

    pub fn from_spectrum(n: usize, density: Spectrum) -> Self {
        let log_tau = density.algebra().central_weights().iter().map(|w| w.ln() / n as f64).collect();
        Self { n, density, log_tau }
    }

    /// `R_n` on an eigenvector of block `k` with eigenvalue `beta`; `−∞` on the kernel.
    pub fn value(&self, k: usize, beta: f64) -> f64 {
        if beta > LOG_FLOOR {
            beta.ln() / self.n as f64 - self.log_tau[k]
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn select(&self, interval: Interval) -> Selection {
        self.density.select(|k, _, b| interval.contains(self.value(k, b)))
    }

    /// `ω` of the spectral projection picked by `sel`.
    pub fn mass(&self, sel: &Selection) -> f64 {
        self.density.iter().filter(|&(k, i, _)| sel[k][i]).map(|(_, _, b)| b).fold(0.0, |a, b| a + b)
    }

    /// `ω(P R_n)` over the selected eigenvectors with `β > 0`.
    pub fn weighted(&self, sel: &Selection) -> f64 {
        self.density
            .iter()
            .filter(|&(k, i, b)| sel[k][i] && b > LOG_FLOOR)
            .map(|(k, _, b)| b * self.value(k, b))
            .fold(0.0, |a, b| a + b)
    }

    pub fn rank(sel: &Selection) -> usize {
        sel.iter().flatten().filter(|&&x| x).count()
    }
}

/// `R_n` as an operator, zero on the kernel of `D_ω`.
pub fn relative_information_operator(state: &dyn StateModel, model: &ChainModel, n: usize) -> Result<HermitianElement> {
    let eig = restrict_spectrum(state, model, n)?;
    let ri = RelativeInformation::from_spectrum(n, eig.spectrum());
    let values = eig.algebra().block_dims().iter().enumerate().map(|(k, &m)| {
        let block = &eig.blocks()[k];
        (0..m).map(|i| ri.value(k, block.values()[i])).map(|r| if r.is_finite() { r } else { 0.0 }).collect::<Vec<_>>()
    });
    Ok(eig.with_values(values.collect()))
}

/// `ω(Proj[R_n ≤ t])`.
pub fn lower_deviation(state: &dyn StateModel, model: &ChainModel, t: f64, n: usize) -> Result<f64> {
    let ri = RelativeInformation::new(state, model, n)?;
    Ok(ri.mass(&ri.select(Interval::at_most(t))))
}

/// `t_n(a) = Σ_{i=0}^{n−l} γ_i(a) / n ∈ A_n`.
pub fn ergodic_average(model: &ChainModel, a: &LocalObservable, n: usize) -> Result<HermitianElement> {
    let l = a.locality();
    if l > n {
        return Err(Error::Volume(format!("ergodic average needs l = {l} <= n = {n}")));
    }
    Ok(translate_sum(model, a, n - l + 1, n)?.scale(1.0 / n as f64))
}

/// `Fⁿ = Proj[t_n(a) ∈ (ω(a) − δ, ω(a) + δ)]`.
pub fn window_projection(
    state: &dyn StateModel,
    model: &ChainModel,
    a: &LocalObservable,
    delta: f64,
    n: usize,
) -> Result<Projection> {
    check_positive_parameter("delta", delta)?;
    let wa = expectation(state, model, a, 0)?;
    let t = ergodic_average(model, a, n)?;
    Ok(spectral_projection(&t, Interval::open(wa - delta, wa + delta)))
}

fn check_positive_parameter(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {value}")));
    }
    Ok(())
}

/// `Qⁿ = ⊕_k` (top `Tr F_k` eigenprojectors of `D_k`).
pub fn kyfan_projection(f: &Projection, d: &HermitianElement) -> Result<Projection> {
    f.algebra().check_same(d.algebra())?;
    let ranks = f.block_ranks();
    let eig = eigendecompose(d);
    let sel = eig.select(|k, i, _| i < ranks[k]);
    Ok(eig.projection(&sel))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KyFanCheck {
    pub ranks_f: Vec<usize>,
    pub ranks_q: Vec<usize>,
    pub commutation_residual: f64,
    pub omega_f: f64,
    pub omega_q: f64,
}

impl KyFanCheck {
    pub fn traces_equal(&self) -> bool {
        self.ranks_f == self.ranks_q
    }

    pub fn dominance_slack(&self) -> f64 {
        self.omega_q - self.omega_f
    }
}

pub fn kyfan_check(f: &Projection, q: &Projection, d: &HermitianElement) -> Result<KyFanCheck> {
    let qd = q.as_hermitian().mul(d)?;
    let dq = d.mul(q.as_hermitian())?;
    Ok(KyFanCheck {
        ranks_f: f.block_ranks(),
        ranks_q: q.block_ranks(),
        commutation_residual: qd.sub(&dq)?.max_abs(),
        omega_f: d.trace_product(f.as_hermitian())?,
        omega_q: d.trace_product(q.as_hermitian())?,
    })
}

/// Windows of half-width `δ/3` around `−s + λ_τ` for `R_n` and around
/// `−λ_τ` for `(1/n) log D_τ`.
fn typical_selection(ri: &RelativeInformation, lambda: f64, s: f64, delta: f64) -> Selection {
    let r_window = Interval::open(-s + lambda - delta / 3.0, -s + lambda + delta / 3.0);
    let tau_window = Interval::open(-lambda - delta / 3.0, -lambda + delta / 3.0);
    ri.density
        .select(|k, _, b| tau_window.contains(ri.log_tau[k]) && r_window.contains(ri.value(k, b)))
}

/// `p_n` for the given entropy value `s`.
pub fn typical_projection(
    state: &dyn StateModel,
    model: &ChainModel,
    s: f64,
    delta: f64,
    n: usize,
) -> Result<Projection> {
    check_positive_parameter("delta", delta)?;
    let eig = restrict_spectrum(state, model, n)?;
    let ri = RelativeInformation::from_spectrum(n, eig.spectrum());
    Ok(eig.projection(&typical_selection(&ri, model.lambda_tau(), s, delta)))
}

/// Selection statistics of `p_n`, computed from the spectrum alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypicalStats {
    pub omega: f64,
    pub rank: usize,
    /// Extremes of the eigenvalues of `D_ω` on `ran p_n`; `None` if `p_n = 0`.
    pub eig_min: Option<f64>,
    pub eig_max: Option<f64>,
}

fn typical_stats(ri: &RelativeInformation, lambda: f64, s: f64, delta: f64) -> TypicalStats {
    let sel = typical_selection(ri, lambda, s, delta);
    let chosen: Vec<f64> = ri.density.iter().filter(|&(k, i, _)| sel[k][i]).map(|(_, _, b)| b).collect();
    TypicalStats {
        omega: chosen.iter().fold(0.0, |a, b| a + b),
        rank: chosen.len(),
        eig_min: chosen.iter().copied().reduce(f64::min),
        eig_max: chosen.iter().copied().reduce(f64::max),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BoundFlags {
    /// `ω(p_n) ≥ ω(p_{n_min})`.
    pub i: bool,
    pub ii: bool,
    pub iii: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypicalityRow {
    pub n: usize,
    pub omega_pn: f64,
    pub rank: usize,
    /// `e^{n(s−δ)}`.
    pub lower_bound: f64,
    /// `e^{n(s+δ)}`.
    pub upper_bound: f64,
    pub eig_min: Option<f64>,
    pub eig_max: Option<f64>,
    /// `e^{−n(s+δ)}`, `e^{−n(s−δ)}`.
    pub eig_lower_bound: f64,
    pub eig_upper_bound: f64,
    pub flags: BoundFlags,
    /// The same window centred at the finite-volume `s_n`.
    pub finite_s: f64,
    pub omega_pn_finite: f64,
    pub rank_finite: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypicalityReport {
    pub delta: f64,
    pub entropy: f64,
    pub ergodicity: ErgodicityCertificate,
    pub warning: Option<String>,
    pub rows: Vec<TypicalityRow>,
    /// First `n` from which (iii) holds through the end of the range.
    pub iii_from: Option<usize>,
}

impl TypicalityReport {
    pub fn ii_violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.flags.ii).count()
    }
}

/// Relative tolerance for comparing eigenvalues with the exponential bounds.
const BOUND_RTOL: f64 = 1e-12;

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo * (1.0 - BOUND_RTOL) && x <= hi * (1.0 + BOUND_RTOL)
}

/// Per-`n` report of the three conclusions. `entropy` overrides the
/// extrapolated mean entropy when given.
pub fn verify_typicality(
    state: &dyn StateModel,
    model: &ChainModel,
    delta: f64,
    range: RangeInclusive<usize>,
    entropy: Option<f64>,
) -> Result<TypicalityReport> {
    check_positive_parameter("delta", delta)?;
    if range.is_empty() || *range.start() == 0 {
        return Err(Error::Volume(format!("invalid volume range {range:?}")));
    }
    model.local_algebra(*range.end())?;
    let s = match entropy {
        Some(s) => s,
        None => mean_entropy(state, model, 1..=*range.end())?.limit,
    };
    let lambda = model.lambda_tau();
    let ns: Vec<usize> = range.collect();
    let mut rows = ns
        .par_iter()
        .map(|&n| {
            let ri = RelativeInformation::new(state, model, n)?;
            let st = typical_stats(&ri, lambda, s, delta);
            let s_n = restricted_entropy(state, model, n)? / n as f64;
            let fin = typical_stats(&ri, lambda, s_n, delta);
            let nf = n as f64;
            let (lower_bound, upper_bound) = ((nf * (s - delta)).exp(), (nf * (s + delta)).exp());
            let (eig_lower_bound, eig_upper_bound) = ((-nf * (s + delta)).exp(), (-nf * (s - delta)).exp());
            let ii = match (st.eig_min, st.eig_max) {
                (Some(lo), Some(hi)) => within(lo, eig_lower_bound, eig_upper_bound) && within(hi, eig_lower_bound, eig_upper_bound),
                _ => true,
            };
            let rank = st.rank as f64;
            Ok(TypicalityRow {
                n,
                omega_pn: st.omega,
                rank: st.rank,
                lower_bound,
                upper_bound,
                eig_min: st.eig_min,
                eig_max: st.eig_max,
                eig_lower_bound,
                eig_upper_bound,
                flags: BoundFlags { i: false, ii, iii: rank >= lower_bound && rank <= upper_bound },
                finite_s: s_n,
                omega_pn_finite: fin.omega,
                rank_finite: fin.rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first_omega = rows[0].omega_pn;
    for row in &mut rows {
        row.flags.i = row.omega_pn >= first_omega;
    }
    let iii_from = rows.iter().rposition(|r| !r.flags.iii).map_or(Some(rows[0].n), |p| rows.get(p + 1).map(|r| r.n));
    let ergodicity = state.ergodicity();
    let warning = (!ergodicity.ergodic).then(|| format!("ergodicity of '{}' is not certified", state.label()));
    Ok(TypicalityReport { delta, entropy: s, ergodicity, warning, rows, iii_from })
}

/// The finite-volume inequality chain bounding `ω(Q_n^+)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperDeviation {
    pub n: usize,
    /// `ω(Q_n^−)`, `Q_n^− = Proj[R_n ≤ −s + λ_τ − δ']`.
    pub q_minus: f64,
    /// `ω(Q_n^+)`, `Q_n^+ = Proj[R_n ≥ −s + λ_τ + δ]`.
    pub q_plus: f64,
    /// `(1/n) ω(Q_n^−(log D_ω − log D_τ))`.
    pub nc: f64,
    /// `(1/n) ω(Q_n^−) log ω(Q_n^−)`, a lower bound for `nc`.
    pub nc_lower: f64,
    /// `ω(R_n)`.
    pub omega_r: f64,
    /// `[ω(R_n) − nc − (1 − ω(Q_n^−))(λ_τ − s − δ')] / (δ + δ')`.
    pub q_plus_bound: f64,
    /// `δ'/(δ' + δ)`.
    pub limit_bound: f64,
}

impl UpperDeviation {
    pub fn chain_holds(&self) -> bool {
        self.q_plus <= self.q_plus_bound + 1e-12 && self.nc_lower <= self.nc + 1e-12
    }
}

pub fn upper_deviation_argument(
    state: &dyn StateModel,
    model: &ChainModel,
    s: f64,
    delta: f64,
    delta_prime: f64,
    n: usize,
) -> Result<UpperDeviation> {
    check_positive_parameter("delta", delta)?;
    check_positive_parameter("delta_prime", delta_prime)?;
    let ri = RelativeInformation::new(state, model, n)?;
    let lambda = model.lambda_tau();
    let minus = ri.select(Interval::at_most(-s + lambda - delta_prime));
    let plus = ri.select(Interval::at_least(-s + lambda + delta));
    let all = ri.select(Interval::whole_line());
    let q_minus = ri.mass(&minus);
    let q_plus = ri.mass(&plus);
    let nc = ri.weighted(&minus);
    let nc_lower = if q_minus > 0.0 { q_minus * q_minus.ln() / n as f64 } else { 0.0 };
    let omega_r = ri.weighted(&all);
    let q_plus_bound = (omega_r - nc - (1.0 - q_minus) * (lambda - s - delta_prime)) / (delta + delta_prime);
    Ok(UpperDeviation {
        n,
        q_minus,
        q_plus,
        nc,
        nc_lower,
        omega_r,
        q_plus_bound,
        limit_bound: delta_prime / (delta_prime + delta),
    })
}

/// The finite-volume content of the lower-deviation argument for a
/// threshold `t` and observable `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerDeviationChain {
    pub n: usize,
    /// `ω(Proj[R_n ≤ t])`.
    pub lower_deviation: f64,
    pub omega_a: f64,
    /// `ω(Fⁿ)`, `τ(Fⁿ)`.
    pub omega_f: f64,
    pub tau_f: f64,
    /// `ω(Qⁿ)`; `τ(Qⁿ) = τ(Fⁿ)`.
    pub omega_q: f64,
    /// `e^{nt} τ(Qⁿ)`.
    pub first_term: f64,
    /// `ω(1 − Qⁿ)`.
    pub second_term: f64,
    /// `(1/n) log τ(Fⁿ)`, `−∞` when `Fⁿ = 0`.
    pub rk_lhs: f64,
    /// `P_n(a) + ω(a) + δ` with the bulk finite-volume pressure.
    pub rk_rhs: f64,
}

impl LowerDeviationChain {
    pub fn bound(&self) -> f64 {
        self.first_term + self.second_term
    }

    pub fn holds(&self) -> bool {
        self.lower_deviation <= self.bound() + 1e-12 && self.rk_lhs <= self.rk_rhs + 1e-12 && self.omega_q >= self.omega_f - 1e-12
    }
}

pub fn lower_deviation_chain(
    state: &dyn StateModel,
    model: &ChainModel,
    a: &LocalObservable,
    t: f64,
    delta: f64,
    n: usize,
) -> Result<LowerDeviationChain> {
    check_positive_parameter("delta", delta)?;
    let ri = RelativeInformation::new(state, model, n)?;
    let lower = ri.mass(&ri.select(Interval::at_most(t)));
    let omega_a = expectation(state, model, a, 0)?;
    let f = window_projection(state, model, a, delta, n)?;
    let d = restrict(state, model, n)?;
    let omega_f = d.trace_product(f.as_hermitian())?;
    let tau_f = f.as_hermitian().tau();
    let ranks = f.block_ranks();
    let omega_q: f64 = ri.density.iter().filter(|&(k, i, _)| i < ranks[k]).map(|(_, _, b)| b).sum();
    let first_term = (n as f64 * t).exp() * tau_f;
    let pressure = finite_volume_pressure(model, a, n, SumConvention::Bulk)?;
    Ok(LowerDeviationChain {
        n,
        lower_deviation: lower,
        omega_a,
        omega_f,
        tau_f,
        omega_q,
        first_term,
        second_term: 1.0 - omega_q,
        rk_lhs: if tau_f > 0.0 { tau_f.ln() / n as f64 } else { f64::NEG_INFINITY },
        rk_rhs: pressure + omega_a + delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockAlgebra;
    use crate::states::{FinitelyCorrelatedState, ProductState};

    #[test]
    fn tau_has_zero_relative_information() {
        let model = ChainModel::new(2, 1).unwrap();
        let tau = ProductState::maximally_mixed(2).unwrap();
        let r = relative_information_operator(&tau, &model, 4).unwrap();
        assert!(r.max_abs() < 1e-14);
        assert_eq!(lower_deviation(&tau, &model, -0.1, 5).unwrap(), 0.0);
        let p = typical_projection(&tau, &model, 2f64.ln(), 0.2, 5).unwrap();
        assert_eq!(p.rank(), 32);
    }

    #[test]
    fn relative_information_eigenvalues_are_binomial() {
        let model = ChainModel::new(2, 1).unwrap();
        let state = ProductState::diagonal(&[0.9, 0.1]).unwrap();
        let r = relative_information_operator(&state, &model, 3).unwrap();
        for idx in 0..8usize {
            let k = idx.count_ones() as i32;
            let expected = -(0.9f64.powi(3 - k) * 0.1f64.powi(k)).ln() / -3.0 + 2f64.ln();
            assert!((r.block(0).entry(idx, idx).re - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn pure_state_kernel_enters_half_lines_only() {
        let model = ChainModel::new(2, 1).unwrap();
        let pure = ProductState::diagonal(&[1.0, 0.0]).unwrap();
        // R = log 2 on the support; everything else is −∞.
        assert_eq!(lower_deviation(&pure, &model, 0.0, 3).unwrap(), 0.0);
        let p = typical_projection(&pure, &model, 0.0, 0.3, 3).unwrap();
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn ergodic_average_examples() {
        let model = ChainModel::new(2, 1).unwrap();
        let a = LocalObservable::diagonal(&model, &[1.0, 0.0]).unwrap();
        let t = ergodic_average(&model, &a, 2).unwrap();
        let expected = [1.0, 0.5, 0.5, 0.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((t.block(0).entry(i, i).re - e).abs() < 1e-15);
        }
        let one = LocalObservable::diagonal(&model, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let t = ergodic_average(&model, &one, 5).unwrap();
        assert!((t.block(0).entry(3, 3).re - 0.8).abs() < 1e-15);
        assert!(matches!(ergodic_average(&model, &one, 1), Err(Error::Volume(_))));
    }

    #[test]
    fn kyfan_hand_example() {
        let alg = BlockAlgebra::full_matrix(3);
        let d = HermitianElement::from_real_diagonals(&alg, &[vec![0.5, 0.3, 0.2]]).unwrap();
        let f = Projection::new(HermitianElement::from_real_diagonals(&alg, &[vec![0.0, 1.0, 0.0]]).unwrap()).unwrap();
        let q = kyfan_projection(&f, &d).unwrap();
        assert_eq!(q.as_hermitian().block(0).entry(0, 0).re, 1.0);
        let check = kyfan_check(&f, &q, &d).unwrap();
        assert!(check.traces_equal());
        assert!((check.omega_q - 0.5).abs() < 1e-15 && (check.omega_f - 0.3).abs() < 1e-15);
        let id = Projection::identity(&alg);
        assert_eq!(kyfan_projection(&id, &d).unwrap().rank(), 3);
    }

    #[test]
    fn markov_report_matches_path_measure() {
        let model = ChainModel::new(2, 1).unwrap();
        let state = FinitelyCorrelatedState::from_markov(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let h = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        let delta = 0.4;
        let report = verify_typicality(&state, &model, delta, 4..=10, None).unwrap();
        assert!(report.warning.is_none());
        assert_eq!(report.ii_violations(), 0);
        for row in &report.rows {
            let n = row.n;
            // Paths with k flips: probability (1/2)·0.9^(n−1−k)·0.1^k, multiplicity 2·C(n−1, k).
            let (mut mass, mut rank) = (0.0, 0usize);
            for k in 0..n {
                let b = 0.5 * 0.9f64.powi((n - 1 - k) as i32) * 0.1f64.powi(k as i32);
                if (-b.ln() / n as f64 - h).abs() < delta / 3.0 {
                    let c = (0..k).fold(1usize, |c, j| c * (n - 1 - j) / (j + 1));
                    mass += 2.0 * c as f64 * b;
                    rank += 2 * c;
                }
            }
            assert!((row.omega_pn - mass).abs() < 1e-10, "n = {n}");
            assert_eq!(row.rank, rank);
        }
    }

    #[test]
    fn upper_chain_for_tau_is_trivial() {
        let model = ChainModel::new(2, 1).unwrap();
        let tau = ProductState::maximally_mixed(2).unwrap();
        let u = upper_deviation_argument(&tau, &model, 2f64.ln(), 0.2, 0.05, 6).unwrap();
        assert_eq!(u.q_minus, 0.0);
        assert_eq!(u.q_plus, 0.0);
        assert!(u.chain_holds());
    }

    #[test]
    fn lower_chain_holds_on_product() {
        let model = ChainModel::new(2, 1).unwrap();
        let state = ProductState::diagonal(&[0.9, 0.1]).unwrap();
        let a = LocalObservable::diagonal(&model, &[0.0, 1.0]).unwrap();
        let s = state.site_entropy();
        let c = lower_deviation_chain(&state, &model, &a, 2f64.ln() - s - 0.2, 0.1, 8).unwrap();
        assert!(c.holds(), "{c:?}");
    }
}

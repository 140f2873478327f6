//! Shift-invariant state models producing `D_{ω|A_n}` for every `n`.

mod fcs;
mod gibbs;
mod product;

pub use fcs::FinitelyCorrelatedState;
pub use gibbs::{GibbsBlockState, PeriodicBlockState};
pub use product::ProductState;

use std::fmt::Debug;

use crate::algebra::{eigendecompose, EigenDecomposition, HermitianElement, Spectrum};
use crate::error::{Error, Result};
use crate::model::{ChainModel, LocalObservable};

/// Outcome of the ergodicity test. `gap` is `1 − |λ₂|` of the transfer map
/// (1 for product states).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgodicityCertificate {
    pub ergodic: bool,
    pub gap: f64,
}

impl ErgodicityCertificate {
    pub fn uncertified() -> Self {
        Self { ergodic: false, gap: f64::NAN }
    }
}

/// A state on the half-infinite chain, described by its marginals on the
/// first `k` physical sites.
pub trait StateModel: Send + Sync + Debug {
    fn site_dim(&self) -> usize;

    fn label(&self) -> String;

    /// Density (w.r.t. the canonical trace) of the marginal on sites `[0, sites)`.
    fn site_density(&self, sites: usize) -> Result<HermitianElement>;

    /// Spectral data of [`StateModel::site_density`]; overridden where the
    /// state's structure gives the eigenbasis without a dense solve.
    fn site_spectrum(&self, sites: usize) -> Result<EigenDecomposition> {
        Ok(eigendecompose(&self.site_density(sites)?))
    }

    /// Eigenvalues of [`StateModel::site_density`] only.
    fn site_eigenvalues(&self, sites: usize) -> Result<Spectrum> {
        Ok(self.site_spectrum(sites)?.spectrum())
    }

    fn ergodicity(&self) -> ErgodicityCertificate {
        ErgodicityCertificate::uncertified()
    }

    /// Step used by the increment entropy estimator; periodic structures
    /// need a full period.
    fn entropy_stride(&self) -> usize {
        1
    }
}

fn check_compatible(state: &dyn StateModel, model: &ChainModel) -> Result<()> {
    if state.site_dim() != model.site_dim() {
        return Err(Error::Shape(format!(
            "state '{}' has site dimension {} but the model has {}",
            state.label(),
            state.site_dim(),
            model.site_dim()
        )));
    }
    Ok(())
}

/// `D_{ω|A_n}`.
pub fn restrict(state: &dyn StateModel, model: &ChainModel, n: usize) -> Result<HermitianElement> {
    check_compatible(state, model)?;
    model.local_algebra(n)?;
    state.site_density(model.sites(n))
}

/// Eigendecomposition of `D_{ω|A_n}`.
pub fn restrict_spectrum(state: &dyn StateModel, model: &ChainModel, n: usize) -> Result<EigenDecomposition> {
    check_compatible(state, model)?;
    model.local_algebra(n)?;
    state.site_spectrum(model.sites(n))
}

/// Eigenvalues of `D_{ω|A_n}`.
pub fn restrict_eigenvalues(state: &dyn StateModel, model: &ChainModel, n: usize) -> Result<Spectrum> {
    check_compatible(state, model)?;
    model.local_algebra(n)?;
    state.site_eigenvalues(model.sites(n))
}

/// `ω(γ_offset(a))`.
pub fn expectation(state: &dyn StateModel, model: &ChainModel, a: &LocalObservable, offset: usize) -> Result<f64> {
    let n = a.locality() + offset;
    let d = restrict(state, model, n)?;
    let placed = model.embed(a.element(), offset, n)?;
    d.trace_product(&placed)
}

pub fn ergodicity_certificate(state: &dyn StateModel) -> ErgodicityCertificate {
    state.ergodicity()
}

/// Convex combination `Σ_j w_j ω_j` of state models.
#[derive(Debug)]
pub struct MixtureState {
    components: Vec<(f64, Box<dyn StateModel>)>,
}

impl MixtureState {
    pub fn new(components: Vec<(f64, Box<dyn StateModel>)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(Error::InvalidParameter("mixture needs at least one component".into()));
        };
        let d = first.site_dim();
        if components.iter().any(|(_, s)| s.site_dim() != d) {
            return Err(Error::Shape("mixture components disagree on site dimension".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights must be a probability vector (sum {total})")));
        }
        Ok(Self { components })
    }
}

impl StateModel for MixtureState {
    fn site_dim(&self) -> usize {
        self.components[0].1.site_dim()
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(|(w, s)| format!("{w}*{}", s.label())).collect();
        format!("mixture({})", parts.join(" + "))
    }

    fn site_density(&self, sites: usize) -> Result<HermitianElement> {
        let mut acc: Option<HermitianElement> = None;
        for (w, s) in &self.components {
            let term = s.site_density(sites)?.scale(*w);
            acc = Some(match acc {
                Some(a) => a.add(&term)?,
                None => term,
            });
        }
        Ok(acc.expect("non-empty"))
    }

    fn entropy_stride(&self) -> usize {
        self.components.iter().map(|(_, s)| s.entropy_stride()).max().unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::sites::reduce;

    #[test]
    fn expectation_of_identity_is_one() {
        let model = ChainModel::new(2, 1).unwrap();
        let state = ProductState::diagonal(&[0.3, 0.7]).unwrap();
        let one = LocalObservable::diagonal(&model, &[1.0, 1.0]).unwrap();
        assert!((expectation(&state, &model, &one, 2).unwrap() - 1.0).abs() < 1e-14);
        let z = LocalObservable::diagonal(&model, &[1.0, 0.0]).unwrap();
        assert!((expectation(&state, &model, &z, 0).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn mixture_marginals_are_consistent() {
        let a = ProductState::diagonal(&[0.9, 0.1]).unwrap();
        let b = FinitelyCorrelatedState::from_markov(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let mix = MixtureState::new(vec![(0.25, Box::new(a)), (0.75, Box::new(b))]).unwrap();
        let d4 = mix.site_density(4).unwrap();
        let d3 = mix.site_density(3).unwrap();
        assert!(reduce(&d4, 2, 0, 3).unwrap().sub(&d3).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn capacity_is_enforced() {
        let model = ChainModel::new(2, 1).unwrap();
        let state = ProductState::diagonal(&[0.5, 0.5]).unwrap();
        assert!(matches!(restrict(&state, &model, 13), Err(Error::Capacity { n: 13, .. })));
    }
}

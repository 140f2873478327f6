//! Spin-chain realizations of the quadruple `(A, {A_[n,m]}, τ, γ)`.
//!
//! Physical sites carry `M_d`. The interval algebra `A_[n,m]` acts on the
//! sites `[n, m + w − 1]`, so two interval algebras commute once they are
//! `n₀ = w` lattice steps apart. `A_n = A_[0, n−1]` is the full matrix algebra
//! over `n + w − 1` sites and `τ` is the normalized trace.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{self, random, Block, BlockAlgebra, BlockElement, HermitianElement};
use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Residual tolerance for the commutation and factorization checks.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Residual tolerance for scalarity of `−(1/n) log D_τ`.
pub const SCALARITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainModel {
    site_dim: usize,
    window_width: usize,
    dimension_cap: usize,
    n_max: usize,
}

impl ChainModel {
    pub fn new(site_dim: usize, window_width: usize) -> Result<Self> {
        Self::with_cap(site_dim, window_width, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(site_dim: usize, window_width: usize, dimension_cap: usize) -> Result<Self> {
        if site_dim < 2 {
            return Err(Error::InvalidParameter(format!("site dimension must be >= 2, got {site_dim}")));
        }
        if window_width < 1 {
            return Err(Error::InvalidParameter("window width must be >= 1".into()));
        }
        let mut n_max = 0;
        while let Some(dim) = site_dim.checked_pow((n_max + window_width) as u32) {
            if dim > dimension_cap {
                break;
            }
            n_max += 1;
        }
        if n_max == 0 {
            return Err(Error::ModelValidity(format!(
                "dimension cap {dimension_cap} does not admit A_1 (needs {site_dim}^{window_width})"
            )));
        }
        Ok(Self { site_dim, window_width, dimension_cap, n_max })
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn window_width(&self) -> usize {
        self.window_width
    }

    /// `n₀`, the commutation distance.
    pub fn commutation_distance(&self) -> usize {
        self.window_width
    }

    pub fn dimension_cap(&self) -> usize {
        self.dimension_cap
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Physical sites spanned by `A_n`.
    pub fn sites(&self, n: usize) -> usize {
        n + self.window_width - 1
    }

    /// `log d`, the limit of `−(1/n) log D_{τ|A_n}`.
    pub fn lambda_tau(&self) -> f64 {
        (self.site_dim as f64).ln()
    }

    /// Full matrix algebra over `sites` physical sites, subject to the cap.
    pub fn site_algebra(&self, sites: usize) -> Result<BlockAlgebra> {
        let dim = self.site_dim.checked_pow(sites as u32).unwrap_or(usize::MAX);
        if dim > self.dimension_cap {
            return Err(Error::Capacity {
                n: (sites + 1).saturating_sub(self.window_width),
                dim,
                cap: self.dimension_cap,
            });
        }
        Ok(BlockAlgebra::full_matrix(dim))
    }

    /// `A_n`: single block of size `d^(n+w−1)`, central weight `d^-(n+w−1)`.
    pub fn local_algebra(&self, n: usize) -> Result<BlockAlgebra> {
        if n == 0 {
            return Err(Error::Volume("A_0 is not a local algebra; n must be >= 1".into()));
        }
        if n > self.n_max {
            return Err(Error::Capacity {
                n,
                dim: self.site_dim.checked_pow(self.sites(n) as u32).unwrap_or(usize::MAX),
                cap: self.dimension_cap,
            });
        }
        self.site_algebra(self.sites(n))
    }

    /// The `n` with `a ∈ A_n`, read off from the block dimension.
    pub fn volume_of(&self, a: &HermitianElement) -> Result<usize> {
        let dim = a
            .algebra()
            .single_block_dim()
            .ok_or_else(|| Error::Shape("chain elements live in full matrix algebras".into()))?;
        let sites = algebra::site_count(dim, self.site_dim)
            .ok_or_else(|| Error::Shape(format!("dimension {dim} is not a power of {}", self.site_dim)))?;
        if sites < self.window_width {
            return Err(Error::Shape(format!("{sites} sites is smaller than one window")));
        }
        Ok(sites + 1 - self.window_width)
    }

    /// `γ_offset(a)` inside `A_target` for `a ∈ A_l`.
    pub fn embed(&self, a: &HermitianElement, offset: usize, target: usize) -> Result<HermitianElement> {
        let l = self.volume_of(a)?;
        if offset + l > target {
            return Err(Error::Volume(format!("γ_{offset}(A_{l}) does not fit in A_{target}")));
        }
        algebra::embed(a, self.site_dim, offset, &self.local_algebra(target)?)
    }

    /// `γ: A_n → A_{n+1}`.
    pub fn shift(&self, a: &HermitianElement) -> Result<HermitianElement> {
        let n = self.volume_of(a)?;
        self.embed(a, 1, n + 1)
    }
}

/// A self-adjoint `a ∈ A_l` together with its locality `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalObservable {
    element: HermitianElement,
    locality: usize,
}

impl LocalObservable {
    pub fn new(model: &ChainModel, element: HermitianElement) -> Result<Self> {
        let locality = model.volume_of(&element)?;
        Ok(Self { element, locality })
    }

    /// Pads an operator on `k` physical sites with identities on the right
    /// until it fills a window, so that it lies in `A_l` with `l = max(1, k − w + 1)`.
    pub fn from_site_operator(model: &ChainModel, op: &HermitianElement) -> Result<Self> {
        let dim = op
            .algebra()
            .single_block_dim()
            .ok_or_else(|| Error::Shape("site operators must be single-block".into()))?;
        let k = algebra::site_count(dim, model.site_dim())
            .ok_or_else(|| Error::Shape(format!("dimension {dim} is not a power of {}", model.site_dim())))?;
        let sites = k.max(model.window_width());
        let target = model.site_algebra(sites)?;
        let element = algebra::embed(op, model.site_dim(), 0, &target)?;
        Self::new(model, element)
    }

    /// Diagonal operator on `k` sites given by its `d^k` diagonal entries.
    pub fn diagonal(model: &ChainModel, entries: &[f64]) -> Result<Self> {
        let op = HermitianElement::from_real_diagonals(&BlockAlgebra::full_matrix(entries.len()), &[entries.to_vec()])?;
        Self::from_site_operator(model, &op)
    }

    /// Dense Hermitian operator on `k` sites, row-major.
    pub fn dense(model: &ChainModel, dim: usize, entries: &[Complex64]) -> Result<Self> {
        let m = DMatrix::from_row_slice(dim, dim, entries);
        let op = HermitianElement::from_blocks(&BlockAlgebra::full_matrix(dim), vec![Block::Dense(m)])?;
        Self::from_site_operator(model, &op)
    }

    pub fn element(&self) -> &HermitianElement {
        &self.element
    }

    pub fn locality(&self) -> usize {
        self.locality
    }

    pub fn is_diagonal(&self) -> bool {
        self.element.is_diagonal()
    }

    pub fn operator_norm(&self) -> f64 {
        self.element.operator_norm()
    }

    /// `γ_i(a)` regarded as an element of `A_{l+i}`.
    pub fn shifted(&self, model: &ChainModel, i: usize) -> Result<Self> {
        let element = model.embed(&self.element, i, self.locality + i)?;
        Ok(Self { element, locality: self.locality + i })
    }

    /// `a + c·1`.
    pub fn add_scalar(&self, c: f64) -> Self {
        let one = HermitianElement::identity(self.element.algebra());
        Self { element: self.element.add(&one.scale(c)).expect("same algebra"), locality: self.locality }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { element: self.element.scale(c), locality: self.locality }
    }

    /// Brings both observables to the larger locality and returns `self − other`.
    pub fn difference(&self, model: &ChainModel, other: &Self) -> Result<Self> {
        let l = self.locality.max(other.locality);
        let a = model.embed(&self.element, 0, l)?;
        let b = model.embed(&other.element, 0, l)?;
        Ok(Self { element: a.sub(&b)?, locality: l })
    }

    /// Same observable regarded in `A_l` for a larger `l`.
    pub fn widened(&self, model: &ChainModel, l: usize) -> Result<Self> {
        Ok(Self { element: model.embed(&self.element, 0, l)?, locality: l })
    }
}

/// One line of an Assumption check.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
}

/// Violation witnessed one step inside the commutation distance.
#[derive(Clone, Debug, PartialEq)]
pub struct TightnessWitness {
    pub distance: usize,
    pub commutator_norm: f64,
    pub factorization_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// `None` when `n₀ − 1 < 0` cannot be probed.
    pub tightness: Option<TightnessWitness>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Off-diagonal flip `|0⟩⟨1| + |1⟩⟨0|` and `diag(1, −1, 0, …)` on one site.
fn witness_pair(d: usize) -> (HermitianElement, HermitianElement) {
    let alg = BlockAlgebra::full_matrix(d);
    let mut flip = DMatrix::zeros(d, d);
    flip[(0, 1)] = Complex64::new(1.0, 0.0);
    flip[(1, 0)] = Complex64::new(1.0, 0.0);
    let mut z = vec![0.0; d];
    z[0] = 1.0;
    z[1] = -1.0;
    (
        HermitianElement::from_blocks(&alg, vec![Block::Dense(flip)]).expect("hermitian"),
        HermitianElement::from_real_diagonals(&alg, &[z]).expect("hermitian"),
    )
}

/// Random `x` on lattice `[−1, 0]` and `y` on `[dist, dist + 1]`, embedded in
/// a common physical window; returns the worst commutator and factorization residuals.
fn separated_pairs<R: Rng + ?Sized>(model: &ChainModel, dist: usize, rng: &mut R, samples: usize) -> Result<(f64, f64)> {
    let d = model.site_dim();
    let w = model.window_width();
    // physical window starts at site −1
    let x_sites = w + 1;
    let y_start = dist + 1;
    let y_sites = w + 1;
    let total = x_sites.max(y_start + y_sites);
    let target = model.site_algebra(total)?;
    let mut comm = 0.0f64;
    let mut fact = 0.0f64;
    for _ in 0..samples {
        let x = random::random_element(rng, &model.site_algebra(x_sites)?);
        let y = random::random_element(rng, &model.site_algebra(y_sites)?);
        let xe = algebra::sites::embed_element(&x, d, 0, &target)?;
        let ye = algebra::sites::embed_element(&y, d, y_start, &target)?;
        comm = comm.max(xe.commutator(&ye)?.max_abs());
        let txy = xe.mul(&ye)?.tau();
        fact = fact.max((txy - xe.tau() * ye.tau()).norm());
    }
    Ok((comm, fact))
}

/// Runs checks (i)–(vi) of the standing assumptions on random elements.
pub fn check_assumption<R: Rng + ?Sized>(model: &ChainModel, rng: &mut R) -> Result<AssumptionReport> {
    const SAMPLES: usize = 8;
    let d = model.site_dim();
    let w = model.window_width();
    let n0 = model.commutation_distance();
    let mut checks = Vec::new();

    let (comm, fact) = separated_pairs(model, n0, rng, SAMPLES)?;
    checks.push(AssumptionCheck {
        id: "i",
        name: "locality: A_(-inf,0] and A_[n0,inf) commute",
        passed: comm <= STRUCTURE_TOL,
        residual: comm,
        detail: format!("n0 = {n0}, max ||[x,y]|| over {SAMPLES} random pairs"),
    });
    checks.push(AssumptionCheck {
        id: "ii",
        name: "tau factorizes across distance n0",
        passed: fact <= STRUCTURE_TOL,
        residual: fact,
        detail: format!("max |tau(xy) - tau(x)tau(y)| over {SAMPLES} random pairs"),
    });

    // (iii) nesting: A_n -> A_{n+1} is a unital *-homomorphism at both ends,
    // and its image commutes with the new site.
    let n = 2.min(model.n_max().saturating_sub(1)).max(1);
    let mut nest = 0.0f64;
    if n < model.n_max() {
        let small = model.local_algebra(n)?;
        let big = model.local_algebra(n + 1)?;
        let (flip, _) = witness_pair(d);
        let outside = algebra::embed(&flip, d, model.sites(n), &big)?;
        for _ in 0..SAMPLES {
            let x = random::random_element(rng, &small);
            let y = random::random_element(rng, &small);
            for offset in [0, 1] {
                let e = |a: &BlockElement| algebra::sites::embed_element(a, d, offset, &big);
                nest = nest.max(e(&x.mul(&y)?)?.sub(&e(&x)?.mul(&e(&y)?)?)?.max_abs());
                nest = nest.max(e(&x.adjoint())?.sub(&e(&x)?.adjoint())?.max_abs());
            }
            let xe = algebra::sites::embed_element(&x, d, 0, &big)?;
            nest = nest.max(xe.commutator(outside.as_element())?.max_abs());
        }
        let one = algebra::sites::embed_element(&BlockElement::identity(&small), d, 0, &big)?;
        nest = nest.max(one.sub(&BlockElement::identity(&big))?.max_abs());
    }
    checks.push(AssumptionCheck {
        id: "iii",
        name: "nesting A_[n',m'] in A_[n'',m'']",
        passed: nest <= STRUCTURE_TOL,
        residual: nest,
        detail: format!("unital *-homomorphism A_{n} -> A_{}", n + 1),
    });

    // (iv) density: every step adds exactly one site, so each site algebra is
    // eventually contained in some A_[-n,n].
    let mut growth_ok = true;
    for k in 1..model.n_max() {
        let a = model.local_algebra(k)?.single_block_dim().unwrap_or(0);
        let b = model.local_algebra(k + 1)?.single_block_dim().unwrap_or(0);
        growth_ok &= b == a * d;
    }
    checks.push(AssumptionCheck {
        id: "iv",
        name: "local algebras exhaust the chain",
        passed: growth_ok,
        residual: if growth_ok { 0.0 } else { 1.0 },
        detail: format!("dim A_(n+1) = {d} dim A_n for n < {}", model.n_max()),
    });

    // (v) shift covariance
    let mut cov = 0.0f64;
    if model.n_max() >= 3 {
        let n = 1;
        let a = random::random_hermitian(rng, &model.local_algebra(n)?);
        let b = random::random_hermitian(rng, &model.local_algebra(n)?);
        for i in 0..(model.n_max() - n - 1).min(3) {
            let lhs = model.shift(&model.embed(&a, i, n + i + 1)?)?;
            let rhs = model.embed(&a, i + 1, n + i + 2)?;
            cov = cov.max(lhs.sub(&rhs)?.max_abs());
        }
        let ga = model.shift(&a)?;
        let gb = model.shift(&b)?;
        cov = cov.max((ga.tau() - a.tau()).abs());
        let gab = algebra::sites::embed_element(&a.mul(&b)?, d, 1, &model.local_algebra(n + 1)?)?;
        cov = cov.max(gab.sub(&ga.mul(&gb)?)?.max_abs());
    }
    checks.push(AssumptionCheck {
        id: "v",
        name: "gamma(A_[n,m]) = A_[n+1,m+1], tau o gamma = tau",
        passed: cov <= STRUCTURE_TOL,
        residual: cov,
        detail: "shift of embedded elements, trace invariance, multiplicativity".into(),
    });

    let lt = crate::entropy::lambda_tau(model, 1..=model.n_max())?;
    let expected_err = lt
        .per_n
        .iter()
        .map(|&(n, v)| (v - model.sites(n) as f64 / n as f64 * model.lambda_tau()).abs())
        .fold(0.0, f64::max);
    let scal = lt.max_residual();
    checks.push(AssumptionCheck {
        id: "vi",
        name: "-(1/n) log D_tau is scalar with limit lambda_tau",
        passed: scal <= SCALARITY_TOL && expected_err <= SCALARITY_TOL,
        residual: scal.max(expected_err),
        detail: format!("lambda_tau = {:.12} (log {d}), window width {w}", lt.limit),
    });

    let tightness = if n0 >= 1 {
        let dist = n0 - 1;
        // Both witnesses sit on physical site w − 1, shared by A_[0,0] and A_[n0−1, n0−1].
        let (flip, z) = witness_pair(d);
        let target = model.site_algebra(dist + w)?;
        let x = algebra::embed(&flip, d, w - 1, &target)?;
        let y = algebra::embed(&z, d, w - 1, &target)?;
        let commutator_norm = x.mul(&y)?.sub(&y.mul(&x)?)?.max_abs();
        let zz = y.mul(&y)?.tau();
        let factorization_residual = (zz - Complex64::new(y.tau() * y.tau(), 0.0)).norm();
        Some(TightnessWitness { distance: dist, commutator_norm, factorization_residual })
    } else {
        None
    };

    Ok(AssumptionReport { checks, tightness })
}

/// `max |τ(xy) − τ(x)τ(y)|` for random `x ∈ A_{I_{m,0}}`, `y ∈ A_{I_{m,1}}`,
/// with `I_{m,j} = [(m+n₀)j, (m+n₀)(j+1) − n₀ − 1]`.
pub fn block_interval_factorization_test<R: Rng + ?Sized>(
    model: &ChainModel,
    m: usize,
    rng: &mut R,
    samples: usize,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("block length m must be >= 1".into()));
    }
    let d = model.site_dim();
    let period = m + model.commutation_distance();
    let block_sites = model.sites(m);
    let total = period + block_sites;
    let target = model.site_algebra(total)?;
    let block = model.site_algebra(block_sites)?;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random::random_element(rng, &block);
        let y = random::random_element(rng, &block);
        let xe = algebra::sites::embed_element(&x, d, 0, &target)?;
        let ye = algebra::sites::embed_element(&y, d, period, &target)?;
        worst = worst.max((xe.mul(&ye)?.tau() - xe.tau() * ye.tau()).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(11)
    }

    #[test]
    fn local_algebra_dims() {
        assert_eq!(ChainModel::new(2, 1).unwrap().local_algebra(3).unwrap().block_dims(), &[8]);
        assert_eq!(ChainModel::new(2, 2).unwrap().local_algebra(3).unwrap().block_dims(), &[16]);
        assert_eq!(ChainModel::new(3, 1).unwrap().local_algebra(2).unwrap().block_dims(), &[9]);
        let m = ChainModel::new(2, 1).unwrap();
        assert_eq!(m.n_max(), 12);
        assert!(matches!(m.local_algebra(13), Err(Error::Capacity { n: 13, .. })));
        assert_eq!(ChainModel::new(2, 2).unwrap().n_max(), 11);
        assert_eq!(ChainModel::new(3, 1).unwrap().n_max(), 7);
    }

    #[test]
    fn shift_moves_site_operator() {
        let m = ChainModel::new(2, 1).unwrap();
        let z = LocalObservable::diagonal(&m, &[1.0, -1.0]).unwrap();
        let shifted = m.shift(z.element()).unwrap();
        assert_eq!(shifted.block(0), &Block::from_real_diagonal(&[1.0, -1.0, 1.0, -1.0]));
        let one = HermitianElement::identity(&m.local_algebra(2).unwrap());
        assert_eq!(m.shift(&one).unwrap(), HermitianElement::identity(&m.local_algebra(3).unwrap()));
    }

    #[test]
    fn shift_preserves_tau() {
        let m = ChainModel::new(2, 2).unwrap();
        let mut r = rng();
        let a = random::random_hermitian(&mut r, &m.local_algebra(2).unwrap());
        assert!((m.shift(&a).unwrap().tau() - a.tau()).abs() < 1e-12);
    }

    #[test]
    fn embed_composes() {
        let m = ChainModel::new(2, 1).unwrap();
        let mut r = rng();
        let a = random::random_hermitian(&mut r, &m.local_algebra(1).unwrap());
        let twice = m.embed(&m.embed(&a, 1, 3).unwrap(), 2, 6).unwrap();
        assert!(twice.sub(&m.embed(&a, 3, 6).unwrap()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn observables_pad_to_a_window() {
        let m = ChainModel::new(2, 2).unwrap();
        let z = LocalObservable::diagonal(&m, &[1.0, -1.0]).unwrap();
        assert_eq!(z.locality(), 1);
        assert_eq!(z.element().block(0), &Block::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
        let zz = LocalObservable::diagonal(&ChainModel::new(2, 1).unwrap(), &[1.0, -1.0, -1.0, 1.0]).unwrap();
        assert_eq!(zz.locality(), 2);
    }

    #[test]
    fn assumption_checks_pass_for_spin_chain() {
        let report = check_assumption(&ChainModel::new(2, 1).unwrap(), &mut rng()).unwrap();
        assert!(report.all_passed(), "{report:?}");
        let vi = report.checks.iter().find(|c| c.id == "vi").unwrap();
        assert!(vi.residual <= 1e-15);
        assert!(report.checks.iter().find(|c| c.id == "ii").unwrap().residual <= 1e-12);
    }

    #[test]
    fn window_two_is_tight() {
        let report = check_assumption(&ChainModel::new(2, 2).unwrap(), &mut rng()).unwrap();
        assert!(report.all_passed(), "{report:?}");
        let witness = report.tightness.unwrap();
        assert_eq!(witness.distance, 1);
        assert!((witness.commutator_norm - 2.0).abs() < 1e-12);
        assert!((witness.factorization_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_intervals_factorize() {
        let mut r = rng();
        assert!(block_interval_factorization_test(&ChainModel::new(2, 1).unwrap(), 2, &mut r, 5).unwrap() <= 1e-12);
        assert!(block_interval_factorization_test(&ChainModel::new(2, 2).unwrap(), 2, &mut r, 5).unwrap() <= 1e-12);
    }
}

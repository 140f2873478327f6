use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsm_core::algebra::random::{random_density, random_element, random_hermitian, random_projection};
use qsm_core::algebra::{eigendecompose, reduce, spectral_projection, BlockAlgebra, HermitianElement, Interval};
use qsm_core::entropy::{mean_entropy, relative_entropy, restricted_entropy, subadditivity_check, von_neumann_entropy};
use qsm_core::model::{ChainModel, LocalObservable};
use qsm_core::pressure::{finite_volume_pressure, lipschitz_check, SumConvention};
use qsm_core::states::{restrict, FinitelyCorrelatedState, MixtureState, ProductState, StateModel};
use qsm_core::typicality::{kyfan_check, kyfan_projection, typical_projection, verify_typicality};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn block_dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=3)
}

fn markov() -> impl Strategy<Value = FinitelyCorrelatedState> {
    (0.05f64..0.95, 0.05f64..0.95)
        .prop_map(|(a, b)| FinitelyCorrelatedState::from_markov(&[vec![a, 1.0 - a], vec![b, 1.0 - b]]).unwrap())
}

/// Random qubit density with Bloch vector of length `< 1`.
fn qubit_product() -> impl Strategy<Value = ProductState> {
    (0.0f64..0.95, 0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU).prop_map(|(r, theta, phi)| {
        let (x, y, z) = (r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos());
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5 * (1.0 + z), 0.0),
                Complex64::new(0.5 * x, -0.5 * y),
                Complex64::new(0.5 * x, 0.5 * y),
                Complex64::new(0.5 * (1.0 - z), 0.0),
            ],
        );
        ProductState::new(m).unwrap()
    })
}

fn two_site_observable(model: &ChainModel, seed: u64) -> LocalObservable {
    let h = random_hermitian(&mut rng(seed), &BlockAlgebra::full_matrix(4));
    LocalObservable::new(model, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_is_cyclic(dims in block_dims(), seed in any::<u64>()) {
        let alg = BlockAlgebra::with_uniform_trace(dims).unwrap();
        let mut r = rng(seed);
        let a = random_element(&mut r, &alg);
        let b = random_element(&mut r, &alg);
        let ab = a.mul(&b).unwrap().trace();
        let ba = b.mul(&a).unwrap().trace();
        prop_assert!((ab - ba).norm() < 1e-10);
    }

    #[test]
    fn spectral_projections_partition_unity(dims in block_dims(), seed in any::<u64>(), cut in -1.0f64..1.0) {
        let alg = BlockAlgebra::with_uniform_trace(dims).unwrap();
        let h = random_hermitian(&mut rng(seed), &alg);
        let lo = spectral_projection(&h, Interval::at_most(cut));
        let hi = spectral_projection(&h, Interval::open(cut, f64::INFINITY));
        let sum = lo.as_hermitian().add(hi.as_hermitian()).unwrap();
        prop_assert!(sum.sub(&HermitianElement::identity(&alg)).unwrap().max_abs() < 1e-10);
        prop_assert!(lo.idempotence_defect() < 1e-10);
        prop_assert!(eigendecompose(&h).reconstruct().sub(&h).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn embeddings_compose(seed in any::<u64>(), i in 0usize..3, j in 0usize..3, w in 1usize..=2) {
        let model = ChainModel::new(2, w).unwrap();
        let a = random_hermitian(&mut rng(seed), &model.local_algebra(1).unwrap());
        let m = 1 + i + 1;
        let n = m + j + 1;
        let two_step = model.embed(&model.embed(&a, i, m).unwrap(), j, n).unwrap();
        let one_step = model.embed(&a, i + j, n).unwrap();
        prop_assert!(two_step.sub(&one_step).unwrap().max_abs() < 1e-12);
        prop_assert!((one_step.tau() - a.tau()).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_is_positive_and_monotone(seed in any::<u64>(), keep in 1usize..3) {
        let alg = BlockAlgebra::full_matrix(8);
        let mut r = rng(seed);
        let d1 = random_density(&mut r, &alg);
        let d2 = random_density(&mut r, &alg);
        let full = relative_entropy(&d1, &d2).unwrap();
        let part = relative_entropy(&reduce(&d1, 2, 0, keep).unwrap(), &reduce(&d2, 2, 0, keep).unwrap()).unwrap();
        prop_assert!(full >= -1e-9);
        prop_assert!(part >= -1e-9);
        prop_assert!(full - part >= -1e-9, "S = {full}, restricted S = {part}");
    }

    #[test]
    fn kyfan_triple(dims in block_dims(), seed in any::<u64>(), fracs in prop::collection::vec(0.0f64..=1.0, 3)) {
        let alg = BlockAlgebra::with_uniform_trace(dims.clone()).unwrap();
        let ranks: Vec<usize> = dims.iter().zip(&fracs).map(|(&m, f)| (f * m as f64).round() as usize).collect();
        let mut r = rng(seed);
        let f = random_projection(&mut r, &alg, &ranks);
        let d = random_density(&mut r, &alg);
        let q = kyfan_projection(&f, &d).unwrap();
        let check = kyfan_check(&f, &q, &d).unwrap();
        prop_assert!(check.traces_equal());
        prop_assert!(check.commutation_residual <= 1e-10);
        prop_assert!(check.dominance_slack() >= -1e-10);
    }

    #[test]
    fn pressure_shifts_by_constants(seed in any::<u64>(), c in -2.0f64..2.0, n in 2usize..=6) {
        let model = ChainModel::new(2, 1).unwrap();
        let a = two_site_observable(&model, seed);
        let p = finite_volume_pressure(&model, &a, n, SumConvention::Full).unwrap();
        let pc = finite_volume_pressure(&model, &a.add_scalar(c), n, SumConvention::Full).unwrap();
        prop_assert!((pc - (p - c)).abs() < 1e-10);
    }

    #[test]
    fn pressure_is_lipschitz(s1 in any::<u64>(), s2 in any::<u64>(), n in 2usize..=6) {
        let model = ChainModel::new(2, 1).unwrap();
        let rec = lipschitz_check(&model, &two_site_observable(&model, s1), &two_site_observable(&model, s2), n).unwrap();
        prop_assert!(rec.slack >= -1e-10);
    }

    #[test]
    fn pressure_is_antitone_on_diagonals(a in prop::collection::vec(-1.0f64..1.0, 4), bump in prop::collection::vec(0.0f64..1.0, 4)) {
        let model = ChainModel::new(2, 1).unwrap();
        let b: Vec<f64> = a.iter().zip(&bump).map(|(x, y)| x + y).collect();
        let pa = finite_volume_pressure(&model, &LocalObservable::diagonal(&model, &a).unwrap(), 6, SumConvention::Bulk).unwrap();
        let pb = finite_volume_pressure(&model, &LocalObservable::diagonal(&model, &b).unwrap(), 6, SumConvention::Bulk).unwrap();
        prop_assert!(pa >= pb - 1e-12);
    }

    #[test]
    fn markov_marginals_are_consistent(state in markov(), n in 1usize..=7) {
        let model = ChainModel::new(2, 1).unwrap();
        let big = restrict(&state, &model, n + 1).unwrap();
        let small = restrict(&state, &model, n).unwrap();
        prop_assert!(reduce(&big, 2, 0, n).unwrap().sub(&small).unwrap().max_abs() < 1e-12);
        prop_assert!(reduce(&big, 2, 1, n + 1).unwrap().sub(&small).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn subadditivity_holds(state in markov(), m in 1usize..=3, n in 2usize..=8) {
        let model = ChainModel::new(2, 1).unwrap();
        let rec = subadditivity_check(&state, &model, m, n).unwrap();
        prop_assert!(rec.slack >= -1e-9, "{rec:?}");
    }

    #[test]
    fn mixtures_are_concave_and_almost_affine(p1 in 0.05f64..0.95, p2 in 0.05f64..0.95, w in 0.0f64..=1.0, n in 1usize..=6) {
        let model = ChainModel::new(2, 1).unwrap();
        let a = ProductState::diagonal(&[p1, 1.0 - p1]).unwrap();
        let b = ProductState::diagonal(&[p2, 1.0 - p2]).unwrap();
        let mix = MixtureState::new(vec![(w, Box::new(a.clone()) as Box<dyn StateModel>), (1.0 - w, Box::new(b.clone()))]).unwrap();
        let sa = restricted_entropy(&a, &model, n).unwrap();
        let sb = restricted_entropy(&b, &model, n).unwrap();
        let sm = restricted_entropy(&mix, &model, n).unwrap();
        let affine = w * sa + (1.0 - w) * sb;
        let mixing = if w > 0.0 && w < 1.0 { -w * w.ln() - (1.0 - w) * (1.0 - w).ln() } else { 0.0 };
        prop_assert!(sm >= affine - 1e-9);
        prop_assert!(sm <= affine + mixing + 1e-9);
    }

    #[test]
    fn mean_entropy_within_range(state in qubit_product()) {
        let model = ChainModel::new(2, 1).unwrap();
        let est = mean_entropy(&state, &model, 1..=6).unwrap();
        for row in &est.rows {
            prop_assert!(row.entropy <= row.n as f64 * model.lambda_tau() + 1e-9);
            prop_assert!((row.density - state.site_entropy()).abs() <= 1e-12);
        }
        prop_assert!(est.limit <= model.lambda_tau() + 1e-9);
    }

    #[test]
    fn typical_projection_commutes_with_density(state in qubit_product(), n in 1usize..=5, delta in 0.05f64..1.0) {
        let model = ChainModel::new(2, 1).unwrap();
        let p = typical_projection(&state, &model, state.site_entropy(), delta, n).unwrap();
        let d = restrict(&state, &model, n).unwrap();
        let comm = p.as_hermitian().mul(&d).unwrap().sub(&d.mul(p.as_hermitian()).unwrap()).unwrap();
        prop_assert!(comm.max_abs() < 1e-10);
        prop_assert!(p.idempotence_defect() < 1e-10);
    }

    #[test]
    fn eigenvalue_bounds_hold_on_typical_range(state in qubit_product(), delta in 0.05f64..0.8) {
        let model = ChainModel::new(2, 1).unwrap();
        let report = verify_typicality(&state, &model, delta, 1..=8, None).unwrap();
        prop_assert_eq!(report.ii_violations(), 0);
    }

    #[test]
    fn markov_eigenvalue_bounds(state in markov(), delta in 0.05f64..0.8) {
        let model = ChainModel::new(2, 1).unwrap();
        let report = verify_typicality(&state, &model, delta, 1..=8, None).unwrap();
        prop_assert_eq!(report.ii_violations(), 0);
    }
}

#[test]
fn entropy_of_tau_is_maximal() {
    let alg = BlockAlgebra::full_matrix(8);
    let tau = alg.tau_density();
    assert!((von_neumann_entropy(&tau).unwrap() - 8f64.ln()).abs() < 1e-12);
    let mut r = rng(7);
    for _ in 0..20 {
        assert!(von_neumann_entropy(&random_density(&mut r, &alg)).unwrap() <= 8f64.ln() + 1e-12);
    }
}

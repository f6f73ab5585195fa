use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use qlab_core::bounded::SearchConfig;
use qlab_core::circuits::GateBudget;
use qlab_core::compression::{build_compressor, compression_sandwich, dh_against_identity, entropy_rate_experiment};
use qlab_core::entanglement::{
    choi_marginal_defect, dilution_via_compression, isotropic_projection, log_negativity, max_entangled_state,
    one_shot_ppt_distillation, twirled_channel_choi, verify_sdp_solution, SdpConfig,
};
use qlab_core::random::{haar_unitary, random_density, rng};
use qlab_core::tensor::{c, max_entangled, trace_product, CMatrix, DensityMatrix, SubsystemDims};

fn qubits2() -> SubsystemDims {
    SubsystemDims::qubits(2).unwrap()
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn identity_shift_examples() {
    let cfg = SearchConfig::exhaustive();
    for d in [2usize, 4] {
        let w = DensityMatrix::maximally_mixed(d).unwrap();
        let v = dh_against_identity(&w, 0.1, GateBudget::unbounded(), &cfg).unwrap().as_f64();
        assert_abs_diff_eq!(v, -(0.9 * d as f64).ln(), epsilon = 1e-10);
    }
    let pure = DensityMatrix::basis(4, 2).unwrap();
    let v = dh_against_identity(&pure, 0.1, GateBudget::unbounded(), &cfg).unwrap().as_f64();
    assert_abs_diff_eq!(v, -(0.9f64).ln(), epsilon = 1e-10);
}

#[test]
fn sandwich_holds_on_random_states() {
    let cfg = SearchConfig::exhaustive();
    let mut r = rng(44);
    for d in [2usize, 4] {
        for _ in 0..6 {
            let rho = random_density(d, &mut r);
            for budget in [GateBudget::unbounded(), GateBudget::gates(1)] {
                let s = compression_sandwich(&rho, 0.1, budget, &cfg).unwrap();
                assert!(s.pass, "{s:?}");
                assert!(s.lower <= s.achieved + 1e-9);
            }
        }
    }
}

#[test]
fn built_compressor_reports_its_own_error() {
    let cfg = SearchConfig::exhaustive();
    let rho = DensityMatrix::diagonal(&[0.85, 0.1, 0.04, 0.01]).unwrap();
    let pair = build_compressor(&rho, 0.1, GateBudget::unbounded(), &cfg).unwrap();
    assert_abs_diff_eq!(pair.roundtrip_error(&rho).unwrap(), pair.error, epsilon = 1e-12);
    assert!(pair.m <= 4 && pair.m.is_power_of_two());
}

#[test]
fn entropy_brackets_are_ordered_and_tighten() {
    let p = [0.8, 0.2];
    let h = -(0.8f64 * 0.8f64.ln() + 0.2 * 0.2f64.ln());
    let rep = entropy_rate_experiment(&p, 0.05, &[25, 50, 100, 200, 400]).unwrap();
    assert_abs_diff_eq!(rep.entropy, h, epsilon = 1e-12);
    for (lo, up) in rep.lower.points.iter().zip(&rep.upper.points) {
        assert!(lo.rate <= up.rate + 1e-12, "m={}", lo.m);
    }
    let (first, last) = (&rep.upper.points[0], rep.upper.points.last().unwrap());
    assert!((last.rate - h).abs() < (first.rate - h).abs());
}

#[test]
fn negativity_of_bell_and_product() {
    let bell = DensityMatrix::pure(&max_entangled(2)).unwrap();
    assert_abs_diff_eq!(log_negativity(&bell, &qubits2()).unwrap(), 2f64.ln(), epsilon = 1e-12);
    let prod = DensityMatrix::basis(4, 1).unwrap();
    assert_abs_diff_eq!(log_negativity(&prod, &qubits2()).unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn ebit_distills_one_and_product_none() {
    let cfg = SdpConfig::default();
    let bell = DensityMatrix::pure(&max_entangled(2)).unwrap();
    let (sol, rep) = one_shot_ppt_distillation(&bell, &qubits2(), 0.01, &cfg).unwrap();
    assert_eq!(rep.one_shot_ebits, 1);
    let res = verify_sdp_solution(sol.w.matrix(), &bell, &qubits2(), 0.01, sol.eta).unwrap();
    assert!(res.max() < 1e-8, "{res:?}");
    let prod = DensityMatrix::basis(4, 0).unwrap();
    let (_, rep) = one_shot_ppt_distillation(&prod, &qubits2(), 0.01, &cfg).unwrap();
    assert_eq!(rep.one_shot_ebits, 0);
}

#[test]
fn distillation_never_beats_negativity() {
    let cfg = SdpConfig::default();
    let mut r = rng(19);
    let eps = 0.05;
    for _ in 0..8 {
        let rho = random_density(4, &mut r);
        let (_, rep) = one_shot_ppt_distillation(&rho, &qubits2(), eps, &cfg).unwrap();
        assert!(rep.one_shot_nats <= rep.log_negativity + (1.0 / (1.0 - eps)).ln() + 1e-5, "{rep:?}");
    }
}

#[test]
fn twirled_choi_is_trace_preserving() {
    let mut r = rng(6);
    for m in 1..=2 {
        let d = random_density(4, &mut r);
        // any 0 <= W <= I
        let w = d.matrix() * c(1.0 / d.eig().values[0], 0.0);
        let j = twirled_channel_choi(&w, m).unwrap();
        assert!(choi_marginal_defect(&j, 4).unwrap() < 1e-10);
    }
}

#[test]
fn ebit_dilution_costs_at_least_what_distills() {
    let rep = dilution_via_compression(&max_entangled(2), &qubits2(), 0.1, GateBudget::unbounded(), &SearchConfig::exhaustive())
        .unwrap();
    assert!(rep.fidelity_ok && rep.cost_ge_distillable, "{rep:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn isotropic_projection_is_a_fixed_point_map(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = random_density(4, &mut r);
        let iso = isotropic_projection(rho.matrix(), 2);
        let phi = max_entangled_state(2);
        prop_assert!((trace_product(&phi, &iso) - trace_product(&phi, rho.matrix())).abs() < 1e-12);
        prop_assert!(max_abs(&(isotropic_projection(&iso, 2) - &iso)) < 1e-12);
        // U ⊗ conj(U) invariance
        let u = haar_unitary(2, &mut r);
        let uu = u.kronecker(&u.conjugate());
        prop_assert!(max_abs(&(&uu * &iso * uu.adjoint() - &iso)) < 1e-12);
    }

    #[test]
    fn negativity_is_local_unitary_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = random_density(4, &mut r);
        let u = haar_unitary(2, &mut r).kronecker(&haar_unitary(2, &mut r));
        let moved = DensityMatrix::from_matrix_lenient(&u * rho.matrix() * u.adjoint()).unwrap();
        let a = log_negativity(&rho, &qubits2()).unwrap();
        let b = log_negativity(&moved, &qubits2()).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }
}

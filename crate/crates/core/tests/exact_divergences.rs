use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use qlab_core::exact::{
    classical_re, classical_variance, divergence_report, hypothesis_testing_re, max_relative_entropy, np_test, renyi_divergence,
    re_variance, total_variation, umegaki_re,
};
use qlab_core::nats::h2;
use qlab_core::random::{haar_unitary, random_density, random_distribution, rng};
use qlab_core::tensor::{partial_trace, state_distances, DensityMatrix, SubsystemDims};

/// Fractional knapsack on the likelihood ratio: the LP optimum for commuting states.
fn classical_dh(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| (p[b] * q[a]).partial_cmp(&(p[a] * q[b])).unwrap());
    let mut need = 1.0 - eps;
    let mut beta = 0.0;
    for i in idx {
        if need <= 0.0 {
            break;
        }
        let take = if p[i] <= need { 1.0 } else { need / p[i] };
        need -= take * p[i];
        beta += take * q[i];
    }
    -beta.ln()
}

fn rotate(rho: &DensityMatrix, seed: u64) -> DensityMatrix {
    let u = haar_unitary(rho.dim(), &mut rng(seed));
    DensityMatrix::from_matrix_lenient(&u * rho.matrix() * u.adjoint()).unwrap()
}

#[test]
fn identical_states_give_minus_log_one_minus_eps() {
    let rho = random_density(3, &mut rng(1));
    assert_abs_diff_eq!(hypothesis_testing_re(&rho, &rho, 0.1).unwrap().0.as_f64(), 0.105_360_515_657_826_3, epsilon = 1e-9);
}

#[test]
fn pure_against_maximally_mixed_qubit() {
    let a = DensityMatrix::basis(2, 0).unwrap();
    let w = DensityMatrix::maximally_mixed(2).unwrap();
    assert_abs_diff_eq!(np_test(&a, &w, 0.0).unwrap().value.as_f64(), 2f64.ln(), epsilon = 1e-10);
    assert_abs_diff_eq!(umegaki_re(&a, &w).unwrap().as_f64(), 2f64.ln(), epsilon = 1e-12);
}

#[test]
fn disjoint_supports_are_infinite_with_witness() {
    let a = DensityMatrix::basis(3, 0).unwrap();
    let b = DensityMatrix::diagonal(&[0.0, 0.5, 0.5]).unwrap();
    let d = umegaki_re(&a, &b).unwrap();
    assert!(!d.is_finite() && d.witness().is_some());
    assert!(!np_test(&a, &b, 0.0).unwrap().value.is_finite());
}

#[test]
fn classical_worked_values() {
    let p = [0.5, 0.5];
    let q = [0.25, 0.75];
    let lg = |x: f64| x.ln();
    let d = 0.5 * lg(2.0) + 0.5 * lg(2.0 / 3.0);
    assert_abs_diff_eq!(classical_re(&p, &q).unwrap().as_f64(), d, epsilon = 1e-14);
    let v = 0.5 * (lg(2.0) - d).powi(2) + 0.5 * (lg(2.0 / 3.0) - d).powi(2);
    assert_abs_diff_eq!(classical_variance(&p, &q).unwrap().as_f64(), v, epsilon = 1e-14);
    assert_abs_diff_eq!(max_relative_entropy(&p, &q).unwrap().as_f64(), lg(2.0), epsilon = 1e-14);
    let r2 = (0.25f64 / 0.25 + 0.25 / 0.75).ln();
    assert_abs_diff_eq!(renyi_divergence(&p, &q, 2.0).unwrap().as_f64(), r2, epsilon = 1e-14);
    // (1, 0, 0) against uniform on three symbols
    let u = [1.0 / 3.0; 3];
    assert_abs_diff_eq!(classical_re(&[1.0, 0.0, 0.0], &u).unwrap().as_f64(), 3f64.ln(), epsilon = 1e-14);
    assert_abs_diff_eq!(classical_re(&[0.5, 0.5, 0.0], &u).unwrap().as_f64(), 1.5f64.ln(), epsilon = 1e-14);
}

#[test]
fn report_keys_alphas() {
    let r = divergence_report(&[0.6, 0.4], &[0.3, 0.7], &[0.5, 2.0]).unwrap();
    assert_eq!(r.dalpha.len(), 2);
    assert!(r.d.as_f64() <= r.dmax.as_f64());
}

#[test]
fn tv_equals_trace_distance() {
    let mut r = rng(4);
    for _ in 0..20 {
        let a = random_density(4, &mut r);
        let b = random_density(4, &mut r);
        let (tv, e) = total_variation(&a, &b).unwrap();
        assert_abs_diff_eq!(tv, state_distances(&a, &b).unwrap().trace_distance, epsilon = 1e-12);
        assert_abs_diff_eq!(e.expectation(&a) - e.expectation(&b), tv, epsilon = 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn commuting_case_matches_knapsack(seed in any::<u64>(), d in 2usize..7, eps in 0.0f64..0.9) {
        let mut r = rng(seed);
        let p = random_distribution(d, &mut r);
        let q = random_distribution(d, &mut r);
        let rho = DensityMatrix::diagonal(&p).unwrap();
        let sigma = DensityMatrix::diagonal(&q).unwrap();
        let got = np_test(&rho, &sigma, eps).unwrap();
        prop_assert!((got.value.as_f64() - classical_dh(&p, &q, eps)).abs() < 1e-8);
        prop_assert!(got.accept_rho >= 1.0 - eps - 1e-9);
    }

    #[test]
    fn unitary_invariance(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let mut r = rng(seed);
        let a = random_density(3, &mut r);
        let b = random_density(3, &mut r);
        let v = np_test(&a, &b, eps).unwrap().value.as_f64();
        let s = seed.wrapping_add(1);
        let w = np_test(&rotate(&a, s), &rotate(&b, s), eps).unwrap().value.as_f64();
        prop_assert!((v - w).abs() < 1e-7);
    }

    #[test]
    fn nondecreasing_in_eps(seed in any::<u64>(), e1 in 0.0f64..0.9, gap in 0.0f64..0.09) {
        let mut r = rng(seed);
        let a = random_density(3, &mut r);
        let b = random_density(3, &mut r);
        let lo = np_test(&a, &b, e1).unwrap().value.as_f64();
        let hi = np_test(&a, &b, e1 + gap).unwrap().value.as_f64();
        prop_assert!(lo <= hi + 1e-8);
    }

    #[test]
    fn partial_trace_cannot_increase_it(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let mut r = rng(seed);
        let a = random_density(4, &mut r);
        let b = random_density(4, &mut r);
        let dims = SubsystemDims::qubits(2).unwrap();
        let ra = DensityMatrix::from_matrix_lenient(partial_trace(a.matrix(), &dims, &[0]).unwrap()).unwrap();
        let rb = DensityMatrix::from_matrix_lenient(partial_trace(b.matrix(), &dims, &[0]).unwrap()).unwrap();
        let joint = np_test(&a, &b, eps).unwrap().value.as_f64();
        let marg = np_test(&ra, &rb, eps).unwrap().value.as_f64();
        prop_assert!(marg <= joint + 1e-8);
    }

    #[test]
    fn weak_converse_bound(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let mut r = rng(seed);
        let a = random_density(3, &mut r);
        let b = random_density(3, &mut r);
        let dh = np_test(&a, &b, eps).unwrap().value.as_f64();
        let d = umegaki_re(&a, &b).unwrap().as_f64();
        prop_assert!(dh <= (d + h2(eps)) / (1.0 - eps) + 1e-8);
    }

    #[test]
    fn additive_on_products(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, x, y) = (random_density(2, &mut r), random_density(2, &mut r), random_density(2, &mut r), random_density(2, &mut r));
        let joint = umegaki_re(&a.tensor(&x).unwrap(), &b.tensor(&y).unwrap()).unwrap().as_f64();
        let sum = umegaki_re(&a, &b).unwrap().as_f64() + umegaki_re(&x, &y).unwrap().as_f64();
        prop_assert!((joint - sum).abs() < 1e-9);
        prop_assert!(re_variance(&a, &b).unwrap().as_f64() >= 0.0);
    }

    #[test]
    fn renyi_is_ordered_and_sandwiched(seed in any::<u64>(), d in 2usize..6, a1 in 0.1f64..0.95, a2 in 1.05f64..4.0) {
        let mut r = rng(seed);
        let p = random_distribution(d, &mut r);
        let q = random_distribution(d, &mut r);
        let lo = renyi_divergence(&p, &q, a1).unwrap().as_f64();
        let hi = renyi_divergence(&p, &q, a2).unwrap().as_f64();
        let kl = classical_re(&p, &q).unwrap().as_f64();
        let dmax = max_relative_entropy(&p, &q).unwrap().as_f64();
        prop_assert!(lo <= kl + 1e-10 && kl <= hi + 1e-10 && hi <= dmax + 1e-10);
        let near = renyi_divergence(&p, &q, 1.0 + 1e-6).unwrap().as_f64();
        prop_assert!((near - kl).abs() < 1e-4);
        let v = classical_variance(&p, &q).unwrap().as_f64();
        let spread = p.iter().zip(&q).map(|(a, b)| (a / b).ln().abs()).fold(0.0, f64::max);
        prop_assert!(v >= 0.0 && v <= spread * spread + 1e-9);
    }

    #[test]
    fn diagonal_umegaki_is_classical(seed in any::<u64>(), d in 2usize..6) {
        let mut r = rng(seed);
        let p = random_distribution(d, &mut r);
        let q = random_distribution(d, &mut r);
        let qd = umegaki_re(&DensityMatrix::diagonal(&p).unwrap(), &DensityMatrix::diagonal(&q).unwrap()).unwrap().as_f64();
        prop_assert!((qd - classical_re(&p, &q).unwrap().as_f64()).abs() < 1e-10);
    }
}

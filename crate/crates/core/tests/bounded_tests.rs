use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use qlab_core::bounded::{
    bounded_dh, bounded_tv, inequality_report, likelihood_ratio_test, swap_test, swap_test_circuit, typicality_test, SearchConfig,
};
use qlab_core::circuits::GateBudget;
use qlab_core::exact::{np_test, total_variation};
use qlab_core::measured::{measured_divergence, renyi_achievability_test, stein_converse_check, DivergenceId};
use qlab_core::random::{random_density, random_distribution, rng};
use qlab_core::tensor::{trace_product, DensityMatrix};

fn all_strings(d: usize, m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..d.pow(m as u32)).map(move |mut k| {
        let mut s = vec![0; m];
        for x in s.iter_mut().rev() {
            *x = k % d;
            k /= d;
        }
        s
    })
}

/// Errors of an arbitrary acceptance rule by summing over every string.
fn brute_errors(p: &[f64], q: &[f64], m: usize, accept: impl Fn(&[usize]) -> bool) -> (f64, f64) {
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for s in all_strings(p.len(), m) {
        let pp: f64 = s.iter().map(|&x| p[x]).product();
        let qq: f64 = s.iter().map(|&x| q[x]).product();
        if accept(&s) {
            t2 += qq;
        } else {
            t1 += pp;
        }
    }
    (t1, t2)
}

#[test]
fn budget_never_beats_unbounded_and_grows_with_gates() {
    let cfg = SearchConfig::exhaustive();
    let mut r = rng(31);
    for _ in 0..5 {
        let a = random_density(2, &mut r);
        let b = random_density(2, &mut r);
        let full = np_test(&a, &b, 0.1).unwrap().value.as_f64();
        let mut prev = f64::NEG_INFINITY;
        for g in 0..=2 {
            let v = bounded_dh(&a, &b, 0.1, GateBudget::gates(g), &cfg).unwrap().value.as_f64();
            assert!(v <= full + 1e-9, "g={g}: {v} > {full}");
            assert!(v >= prev - 1e-12, "g={g}");
            prev = v;
        }
        let tv1 = bounded_tv(&a, &b, GateBudget::gates(1), &cfg).unwrap().value;
        assert!(tv1 <= total_variation(&a, &b).unwrap().0 + 1e-12);
    }
}

#[test]
fn diagonal_qubits_need_no_gates() {
    let a = DensityMatrix::diagonal(&[0.9, 0.1]).unwrap();
    let b = DensityMatrix::diagonal(&[0.2, 0.8]).unwrap();
    let cfg = SearchConfig::exhaustive();
    let tv0 = bounded_tv(&a, &b, GateBudget::gates(0), &cfg).unwrap().value;
    assert_abs_diff_eq!(tv0, 0.7, epsilon = 1e-12);
}

#[test]
fn inequality_report_passes_on_random_pairs() {
    let cfg = SearchConfig::exhaustive();
    let mut r = rng(12);
    for _ in 0..10 {
        let a = random_density(2, &mut r);
        let b = random_density(2, &mut r);
        for budget in [GateBudget::unbounded(), GateBudget::gates(1)] {
            let rep = inequality_report(&a, &b, 0.1, budget, &cfg, None).unwrap();
            assert!(rep.all_pass(), "{:?}", rep.checks);
        }
    }
}

#[test]
fn swap_circuit_statistics_match_closed_form() {
    let mut r = rng(2);
    let a = random_density(2, &mut r);
    let b = random_density(2, &mut r);
    let eff = swap_test_circuit(1).unwrap();
    let accept = eff.expectation(&a.tensor(&b).unwrap());
    assert_abs_diff_eq!(accept, 0.5 + 0.5 * trace_product(a.matrix(), b.matrix()), epsilon = 1e-12);
    let res = swap_test(&a, &b, 4, 20_000, 5).unwrap();
    let (e1, e2) = (res.exact_type1.unwrap(), res.exact_type2.unwrap());
    assert_abs_diff_eq!(e2, accept.powi(4), epsilon = 1e-12);
    let se = |p: f64| (p * (1.0 - p) / 20_000.0).sqrt();
    assert!((res.empirical_type1 - e1).abs() <= 4.0 * se(e1) + 1e-9);
    assert!((res.empirical_type2 - e2).abs() <= 4.0 * se(e2) + 1e-9);
}

#[test]
fn lrt_errors_agree_with_string_enumeration() {
    let p = [0.7, 0.2, 0.1];
    let q = [0.2, 0.3, 0.5];
    let (t, g) = likelihood_ratio_test(&p, &q, 6, 0.4, 1e-3).unwrap();
    let ex = t.exact_errors().unwrap();
    let (b1, b2) = brute_errors(&p, &q, 6, |s| t.accepts(s));
    assert_abs_diff_eq!(ex.type1, b1, epsilon = 1e-12);
    assert_abs_diff_eq!(ex.type2, b2, epsilon = 1e-12);
    assert!(ex.type1 <= g.type1_bound + 1e-12);
}

#[test]
fn lrt_program_agrees_with_rule() {
    let p = [0.6, 0.4];
    let q = [0.3, 0.7];
    let (t, _) = likelihood_ratio_test(&p, &q, 4, 0.3, 0.05).unwrap();
    for s in all_strings(2, 4) {
        assert_eq!(t.run_program(&s).unwrap(), t.accepts(&s), "{s:?}");
    }
}

#[test]
fn typicality_errors_agree_with_string_enumeration() {
    let p = [0.5, 0.3, 0.2];
    let q = [0.2, 0.2, 0.6];
    let (t, _) = typicality_test(&p, &q, 5, 0.3).unwrap();
    let ex = t.exact_errors().unwrap();
    let (b1, b2) = brute_errors(&p, &q, 5, |s| t.accepts(s));
    assert_abs_diff_eq!(ex.type1, b1, epsilon = 1e-12);
    assert_abs_diff_eq!(ex.type2, b2, epsilon = 1e-12);
    for s in all_strings(3, 3).map(|mut s| {
        s.extend([0, 1]);
        s
    }) {
        assert_eq!(t.run_program(&s).unwrap(), t.accepts(&s));
    }
}

#[test]
fn lrt_rejects_delta_below_two_kappa() {
    assert!(likelihood_ratio_test(&[0.5, 0.5], &[0.2, 0.8], 4, 0.01, 0.01).is_err());
}

#[test]
fn measured_divergences_are_ordered() {
    let cfg = SearchConfig::exhaustive();
    let mut r = rng(70);
    for _ in 0..10 {
        let a = random_density(2, &mut r);
        let b = random_density(2, &mut r);
        let un = GateBudget::unbounded();
        let d = measured_divergence(&a, &b, DivergenceId::RelativeEntropy, un, &cfg).unwrap().value.as_f64();
        let half = measured_divergence(&a, &b, DivergenceId::Renyi(0.5), un, &cfg).unwrap().value.as_f64();
        let dmax = measured_divergence(&a, &b, DivergenceId::Max, un, &cfg).unwrap().value.as_f64();
        let q = qlab_core::exact::umegaki_re(&a, &b).unwrap().as_f64();
        assert!(d >= -1e-12 && d <= q + 1e-9, "d={d} q={q} half={half} dmax={dmax}");
        assert!(half <= d + 1e-9 && d <= dmax + 1e-9);
        let g1 = measured_divergence(&a, &b, DivergenceId::RelativeEntropy, GateBudget::gates(1), &cfg).unwrap();
        assert!(g1.value.as_f64() <= d + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stein_converse_holds(seed in any::<u64>(), eps in 0.01f64..0.5, g in 0usize..2) {
        let mut r = rng(seed);
        let a = random_density(2, &mut r);
        let b = random_density(2, &mut r);
        let c = stein_converse_check(&a, &b, eps, GateBudget::gates(g), &SearchConfig::exhaustive()).unwrap();
        prop_assert!(c.pass, "{c:?}");
    }

    #[test]
    fn renyi_achievability_meets_its_bound(seed in any::<u64>(), d in 2usize..6, alpha in 0.1f64..0.9, eps in 0.01f64..0.5) {
        let mut r = rng(seed);
        let p = random_distribution(d, &mut r);
        let q = random_distribution(d, &mut r);
        let rep = renyi_achievability_test(&p, &q, alpha, eps).unwrap();
        prop_assert!(rep.type1_ok && rep.rate_ok, "{rep:?}");
        let t1: f64 = p.iter().zip(&rep.accept).filter(|(_, &a)| !a).map(|(x, _)| x).sum();
        prop_assert!((t1 - rep.type1).abs() < 1e-12);
    }
}

use num_rational::Ratio;
use proptest::prelude::*;
use sparse_ksum::amplify::{amplify, AmplifyConfig, Crippled, WeakSolver};
use sparse_ksum::analysis::stats::ks_two_sample;
use sparse_ksum::analysis::{count_distribution, renyi_inf, statistical_distance, Q};
use sparse_ksum::instances::{exact_pmf, sample, ResidueInstance, DEFAULT_ENUM_BUDGET, DEFAULT_SUBSET_BUDGET};
use sparse_ksum::pke::{correctness_sweep, decryption_weight, encrypt, hybrid_sample, keygen, PkeParams};
use sparse_ksum::reductions::{ksum_to_vector, s2d_rounds, search_from_decision, ExactDecision};
use sparse_ksum::seed::{child_seed, rng_from_seed};
use sparse_ksum::solvers::{
    brute_force, gauss_kxor, meet_in_the_middle, subset_sum_reduce_worst, IntegerKSum, KSumSolver, SolverResult,
};
use sparse_ksum::{make_spec, verify, Dist, GroupFamily, GroupSpec, Instance};

fn small_spec() -> impl Strategy<Value = GroupSpec> {
    prop_oneof![
        (2u32..12).prop_map(|m| GroupSpec::xor(m).unwrap()),
        (2u32..12).prop_map(|m| GroupSpec::modular(m).unwrap()),
        (3u32..6, 1u32..5).prop_map(|(q, m)| GroupSpec::vector(q, m).unwrap()),
    ]
}

fn enumerable() -> impl Strategy<Value = (GroupSpec, usize, usize)> {
    prop_oneof![
        (2u32..=3, 3usize..=5, 2usize..=3).prop_map(|(m, r, k)| (GroupSpec::xor(m).unwrap(), r, k)),
        (2u32..=3, 3usize..=5, 2usize..=3).prop_map(|(m, r, k)| (GroupSpec::modular(m).unwrap(), r, k)),
        (3usize..=4, 2usize..=3).prop_map(|(r, k)| (GroupSpec::vector(3, 2).unwrap(), r, k)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn found_results_verify(spec in small_spec(), r in 4usize..=14, k in 2usize..=4, d1 in any::<bool>(), seed in any::<u64>()) {
        let dist = if d1 { Dist::D1 } else { Dist::D0 };
        let inst = sample(&spec, r, k, dist, seed, DEFAULT_SUBSET_BUDGET).unwrap();
        let mut results = vec![
            brute_force(&inst, DEFAULT_SUBSET_BUDGET).unwrap(),
            meet_in_the_middle(&inst, DEFAULT_SUBSET_BUDGET).unwrap(),
        ];
        if spec.family == GroupFamily::Xor {
            results.push(gauss_kxor(&inst, seed, DEFAULT_SUBSET_BUDGET).unwrap());
        }
        for res in results {
            if let Some(s) = res.solution() {
                prop_assert!(verify(&inst, s).unwrap());
            }
        }
    }

    #[test]
    fn worst_reduction_value_window(r in 3usize..20, k in 2usize..6, bound in 1i64..100_000, seed in any::<u64>()) {
        prop_assume!(k <= r);
        let x = IntegerKSum::planted(r, k, bound, &mut rng_from_seed(seed));
        let red = subset_sum_reduce_worst(&x);
        let (kk, m) = (k as i128, red.bound);
        for &y in &red.instance.values {
            prop_assert!(kk * m < y && y < (kk + 2) * m);
        }
        let planted = x.planted.as_ref().unwrap().indices();
        prop_assert!(red.instance.is_solution(planted));
    }

    #[test]
    fn carry_vector_count(q in prop::sample::select(vec![2u32, 3, 5]), m in 1u32..4, k in 2usize..5, seed in any::<u64>()) {
        let modulus = (q as u64).pow(m);
        prop_assume!(modulus as usize > k && k as u32 % q != 0);
        let inst = ResidueInstance::planted(modulus, 8, k, &mut rng_from_seed(seed));
        let n = ksum_to_vector(&inst, q, m).unwrap().count();
        prop_assert_eq!(n as u64, (k as u64).pow(m));
    }

    #[test]
    fn s2d_counters_bounded_and_deterministic(m in 12u32..24, seed in any::<u64>(), oracle_seed in any::<u64>()) {
        let spec = GroupSpec::xor(m).unwrap();
        let inst = sample(&spec, 10, 3, Dist::D1, seed, DEFAULT_SUBSET_BUDGET).unwrap();
        let oracle = ExactDecision { budget: DEFAULT_SUBSET_BUDGET };
        let a = search_from_decision(&inst, &oracle, 0.1, 1.0 / 512.0, oracle_seed);
        let b = search_from_decision(&inst, &oracle, 0.1, 1.0 / 512.0, oracle_seed);
        prop_assert_eq!(&a.state, &b.state);
        prop_assert_eq!(a.state.rounds_completed, s2d_rounds(10, 3, 0.1, 1.0 / 512.0));
        prop_assert!(a.state.counters.iter().all(|&c| c <= a.state.rounds_completed));
        if let Some(s) = a.result.solution() {
            prop_assert!(verify(&inst, s).unwrap());
        }
    }

    #[test]
    fn amplify_output_always_verifies(m in 6u32..14, fail in 0.0f64..1.0, seed in any::<u64>()) {
        let spec = GroupSpec::xor(m).unwrap();
        let inst = sample(&spec, 12, 3, Dist::D1, seed, DEFAULT_SUBSET_BUDGET).unwrap().hide_planted();
        // a solver that answers garbage half the time
        let liar = |i: &Instance, s: u64| {
            if s % 2 == 0 {
                SolverResult::found(sparse_ksum::Solution::new(vec![0, 1, 2]).unwrap(), 1, std::time::Instant::now())
            } else {
                meet_in_the_middle(i, DEFAULT_SUBSET_BUDGET).unwrap()
            }
        };
        let crippled = Crippled { inner: liar, fail_prob: fail };
        let weak = WeakSolver::new(&crippled, 1.0 - fail);
        let cfg = AmplifyConfig::new(12, 3, Ratio::new(1, 5)).unwrap().scaled(0.1, 1e-6, 1.0);
        if let Some(s) = amplify(&inst, &weak, &cfg, seed).solution() {
            prop_assert!(inst.sums_to_zero(s.indices()));
        }
    }

    #[test]
    fn exact_distribution_properties((spec, r, k) in enumerable()) {
        let d0 = exact_pmf(&spec, r, k, Dist::D0, DEFAULT_ENUM_BUDGET).unwrap();
        let d1 = exact_pmf(&spec, r, k, Dist::D1, DEFAULT_ENUM_BUDGET).unwrap();
        let zero = Q::from_integer(0);
        let one = Q::from_integer(1);
        // D1 never produces an instance without a solution
        for (p, &c) in d1.probs.iter().zip(&d1.counts) {
            prop_assert!(c > 0 || *p == zero);
        }
        let sd = statistical_distance(&d0, &d1);
        prop_assert_eq!(sd, statistical_distance(&d1, &d0));
        prop_assert!(sd >= zero && sd <= one);
        prop_assert_eq!(statistical_distance(&d0, &d0), zero);
        prop_assert!(renyi_inf(&d1, &d0).unwrap() >= one);

        // Markov, Chebyshev and Paley-Zygmund on the exact count distributions
        for p in [&d0, &d1] {
            let dist = count_distribution(p);
            let mean: Q = dist.iter().enumerate().map(|(c, w)| w * Q::from_integer(c as i128)).sum();
            let second: Q = dist.iter().enumerate().map(|(c, w)| w * Q::from_integer((c * c) as i128)).sum();
            let var = second - mean * mean;
            let positive: Q = dist.iter().skip(1).sum();
            prop_assert!(positive <= mean);
            prop_assert!(positive * second >= mean * mean);
            for t in 1..dist.len() as i128 {
                let t = Q::from_integer(t);
                let tail: Q = dist
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| {
                        let d = Q::from_integer(*c as i128) - mean;
                        d >= t || -d >= t
                    })
                    .map(|(_, w)| *w)
                    .sum();
                prop_assert!(tail * t * t <= var);
            }
        }
    }
}

#[test]
fn obfuscation_keeps_planted_location() {
    use std::sync::Mutex;
    // the weak solver records whether each obfuscated instance still has a solution
    let seen = Mutex::new(Vec::new());
    let spy = |i: &Instance, _s: u64| {
        let res = brute_force(i, DEFAULT_SUBSET_BUDGET).unwrap();
        seen.lock().unwrap().push(res.outcome.is_found());
        SolverResult::not_found(0, std::time::Instant::now())
    };
    let weak = WeakSolver::new(&spy, 0.0);
    let spec = GroupSpec::xor(40).unwrap();
    for t in 0..40 {
        let inst = sample(&spec, 12, 3, Dist::D1, t, DEFAULT_SUBSET_BUDGET).unwrap();
        sparse_ksum::amplify::obfuscate_and_solve(&inst.hide_planted(), &weak, 100, t);
    }
    let seen = seen.into_inner().unwrap();
    let rate = seen.iter().filter(|&&f| f).count() as f64 / seen.len() as f64;
    // distinct offsets on the three planted positions: 3!/3^3
    let p = 6.0 / 27.0;
    let se = (p * (1.0 - p) / seen.len() as f64).sqrt();
    assert!((rate - p).abs() < 4.0 * se, "{rate} vs {p}");
}

#[test]
fn amplification_never_hurts() {
    let (r, k) = (16, 3);
    let spec = make_spec(r, k, Ratio::new(7, 10), GroupFamily::Xor, 2).unwrap();
    let exact = |i: &Instance, _s: u64| meet_in_the_middle(i, DEFAULT_SUBSET_BUDGET).unwrap();
    for (gamma, den) in [(1u64, 10u64), (1, 5), (2, 5)] {
        let g = gamma as f64 / den as f64;
        let crippled = Crippled { inner: exact, fail_prob: 1.0 - g };
        let weak = WeakSolver::new(&crippled, g);
        let base = AmplifyConfig::new(r, k, Ratio::new(gamma, den)).unwrap();
        // enough outer rounds for the walk to leave the planted set alone about three times
        let kept = (1.0 - k as f64 / r as f64).powi(base.walk_steps as i32);
        let cfg = base.clone().scaled(1.0, (3.0 / kept).ceil() / base.outer_rounds as f64, 1.0);
        let (mut raw, mut amp) = (0, 0);
        for t in 0..20 {
            let inst = sample(&spec, r, k, Dist::D1, child_seed(20, "inst", t), DEFAULT_SUBSET_BUDGET).unwrap().hide_planted();
            raw += usize::from(crippled.solve(&inst, child_seed(20, "raw", t)).outcome.is_found());
            amp += usize::from(amplify(&inst, &weak, &cfg, child_seed(20, "amp", t)).outcome.is_found());
        }
        assert!(amp >= raw, "γ={g}: amplified {amp} < raw {raw}");
    }
}

#[test]
fn pke_correctness_grid() {
    for eta in [0.125, 0.25] {
        for k in [3, 4] {
            let p = PkeParams::for_target(64, eta, k, 32, 0.01).unwrap();
            let trials = 400;
            let rep = correctness_sweep(&p, trials, 7).unwrap();
            let slack = 3.0 * (p.error_bound() / trials as f64).sqrt() + 1.0 / trials as f64;
            for rate in [rep.error_rate_0, rep.error_rate_1] {
                assert!(rate <= 2.0 * p.error_bound() + slack, "η={eta} k={k} ℓ={}: {rate}", p.ell);
            }
        }
    }
}

#[test]
fn pke_error_decreases_with_ell() {
    let mut last = f64::INFINITY;
    for ell in [16, 32, 64, 128] {
        let p = PkeParams::new(64, 0.125, 4, 32, ell).unwrap();
        let rep = correctness_sweep(&p, 2000, 11).unwrap();
        let err = (rep.error_rate_0 + rep.error_rate_1) / 2.0;
        assert!(err <= last, "ℓ={ell}: {err} > {last}");
        last = err;
    }
}

#[test]
fn uniform_hybrid_matches_zero_encryption() {
    let p = PkeParams::new(64, 0.125, 4, 32, 200).unwrap();
    let n = 3000;
    let a: Vec<f64> = (0..n)
        .map(|t| {
            let h = hybrid_sample(0, true, &p, child_seed(30, "h", t)).unwrap();
            decryption_weight(h.sk.as_ref().unwrap(), &h.c) as f64
        })
        .collect();
    let b: Vec<f64> = (0..n)
        .map(|t| {
            let key = keygen(&p, child_seed(30, "k", t)).unwrap();
            decryption_weight(&key.sk, &encrypt(&key.pk, false, &p, child_seed(30, "e", t)).unwrap().c) as f64
        })
        .collect();
    assert!(ks_two_sample(&a, &b).1 > 0.001);
}

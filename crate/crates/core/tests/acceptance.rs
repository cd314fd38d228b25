//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero when any of them fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use sparse_ksum::amplify::{
    amplify, lift_bits, lift_rows, modular_lift_round, vector_lift_round, AmplifyConfig, Crippled, WeakSolver,
};
use sparse_ksum::analysis::stats::{ks_two_sample, wilson_interval, Moments};
use sparse_ksum::analysis::{exact_divergences, monte_carlo_moments, pmf_identity_mismatches, sd_bound_check};
use sparse_ksum::instances::{sample, ResidueInstance, DEFAULT_ENUM_BUDGET, DEFAULT_SUBSET_BUDGET};
use sparse_ksum::pke::{
    correctness_sweep, decryption_weight, distinguisher_harness, encrypt, hybrid_sample, keygen, rank_attacker,
    HybridSample, PkeParams,
};
use sparse_ksum::reductions::{ksum_to_vector, s2d_rounds, search_from_decision, ExactDecision};
use sparse_ksum::seed::{child_seed, rng_from_seed};
use sparse_ksum::solvers::{
    brute_force, gauss_kxor, meet_in_the_middle, subset_sum_reduce_avg, subset_sum_reduce_worst, ExhaustiveSubsetSum,
    IntegerKSum, KSumSolver, SolverResult, SubsetSumBackend, SubsetSumInstance,
};
use sparse_ksum::{make_spec, verify, Dist, GroupFamily, GroupSpec, Instance};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn c1_moments() -> Outcome {
    let spec = GroupSpec::xor(7).map_err(err)?;
    let d0 = monte_carlo_moments(&spec, 10, 3, Dist::D0, 10_000, 101).map_err(err)?;
    let d1 = monte_carlo_moments(&spec, 10, 3, Dist::D1, 10_000, 102).map_err(err)?;
    let exact = d0.mean == Ratio::new(15, 16) && d0.variance == Ratio::new(15 * 127, 16 * 128) && d1.mean == Ratio::new(247, 128);
    let detail = format!(
        "D0 mean {:.4} (z {:.2}), var {:.4} (z {:.2}); D1 mean {:.4} (z {:.2})",
        d0.empirical_mean, d0.z_mean, d0.empirical_variance, d0.z_variance, d1.empirical_mean, d1.z_mean
    );
    check(exact && d0.z_mean.abs() <= 4.0 && d0.z_variance.abs() <= 4.0 && d1.z_mean.abs() <= 4.0, detail)
}

fn c2_pmf() -> Outcome {
    let spec = GroupSpec::modular(3).map_err(err)?;
    let mut total = (0, 0);
    for ell in [0, 1, 2, 4] {
        let (a, b) = pmf_identity_mismatches(&spec, 4, 3, ell, DEFAULT_ENUM_BUDGET).map_err(err)?;
        total.0 += a;
        total.1 += b;
    }
    check(total == (0, 0), format!("Z_8, r=4, k=3, 4096 instances: {} D1 and {} D^ℓ mismatches", total.0, total.1))
}

fn c3_divergence() -> Outcome {
    let spec = GroupSpec::modular(3).map_err(err)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for ell in [0, 1, 2, 4] {
        let d = exact_divergences(&spec, 4, 3, ell, DEFAULT_ENUM_BUDGET).map_err(err)?;
        let good = d.ell_attained && d.renyi_dell_d0 == d.renyi_formula && d.sd_dell_d1 == d.sd_product;
        ok &= good;
        notes.push(format!("ℓ={ell} SD={}", d.sd_dell_d1));
    }
    let grid: [(GroupFamily, u32, u32, usize, usize); 10] = [
        (GroupFamily::Modular2m, 3, 2, 4, 3),
        (GroupFamily::Modular2m, 2, 2, 4, 2),
        (GroupFamily::Modular2m, 2, 2, 5, 3),
        (GroupFamily::Modular2m, 3, 2, 5, 2),
        (GroupFamily::Modular2m, 4, 2, 4, 2),
        (GroupFamily::Xor, 2, 2, 4, 2),
        (GroupFamily::Xor, 2, 2, 5, 3),
        (GroupFamily::Xor, 3, 2, 4, 3),
        (GroupFamily::Xor, 3, 2, 5, 2),
        (GroupFamily::VectorModQ, 2, 3, 4, 3),
    ];
    let mut bound_ok = 0;
    for (family, m, q, r, k) in grid {
        let spec = GroupSpec::new(family, m, q).map_err(err)?;
        bound_ok += usize::from(sd_bound_check(&spec, r, k, DEFAULT_ENUM_BUDGET).map_err(err)?.bound_holds);
    }
    ok &= bound_ok == grid.len();
    check(ok, format!("{}; SD(D0,D1) bound holds on {bound_ok}/10 grid points", notes.join(", ")))
}

fn c4_solvers() -> Outcome {
    let mut rng = rng_from_seed(4);
    let mut bad = 0;
    let mut found = 0;
    for t in 0..1000u64 {
        use rand::Rng;
        let r = rng.random_range(4..=16);
        let k = rng.random_range(2..=4.min(r));
        let family = [GroupFamily::Xor, GroupFamily::Modular2m, GroupFamily::VectorModQ][t as usize % 3];
        let spec = match family {
            GroupFamily::VectorModQ => GroupSpec::vector(3, rng.random_range(2..=5)),
            f => GroupSpec::new(f, rng.random_range(3..=10), 2),
        }
        .map_err(err)?;
        let dist = if t % 2 == 0 { Dist::D0 } else { Dist::D1 };
        let inst = sample(&spec, r, k, dist, child_seed(4, "inst", t), DEFAULT_SUBSET_BUDGET).map_err(err)?;
        let a = brute_force(&inst, DEFAULT_SUBSET_BUDGET).map_err(err)?;
        let b = meet_in_the_middle(&inst, DEFAULT_SUBSET_BUDGET).map_err(err)?;
        let verifies = |res: &SolverResult| res.solution().is_none_or(|s| verify(&inst, s).unwrap_or(false));
        if a.outcome.is_found() != b.outcome.is_found() || !verifies(&a) || !verifies(&b) {
            bad += 1;
        }
        found += usize::from(a.outcome.is_found());
    }
    check(bad == 0, format!("{bad} discrepancies over 1000 instances ({found} solvable)"))
}

fn gauss_rate(r: usize, m: u32, trials: u64, seed: u64) -> Result<f64, String> {
    let spec = GroupSpec::xor(m).map_err(err)?;
    let mut hits = 0;
    for t in 0..trials {
        let inst = sample(&spec, r, 4, Dist::D1, child_seed(seed, "inst", t), DEFAULT_SUBSET_BUDGET).map_err(err)?;
        let res = gauss_kxor(&inst, child_seed(seed, "solve", t), DEFAULT_SUBSET_BUDGET).map_err(err)?;
        hits += usize::from(res.solution() == inst.planted.as_ref());
    }
    Ok(hits as f64 / trials as f64)
}

fn c5_gauss() -> Outcome {
    let a = gauss_rate(64, 64, 200, 5)?;
    let b = gauss_rate(96, 192, 200, 6)?;
    check(a >= 0.9 && b >= 0.95, format!("recovery {a:.3} at r=64,m=64; {b:.3} at r=96,m=192"))
}

fn c6_s2d() -> Outcome {
    let spec = make_spec(12, 3, Ratio::new(1, 2), GroupFamily::Xor, 2).map_err(err)?;
    let oracle = ExactDecision { budget: DEFAULT_SUBSET_BUDGET };
    let scale = 1.0 / 64.0;
    let p = s2d_rounds(12, 3, 0.1, scale);
    let mut hits = 0;
    let mut gaps = Moments::default();
    for t in 0..200u64 {
        let inst = sample(&spec, 12, 3, Dist::D1, child_seed(6, "inst", t), DEFAULT_SUBSET_BUDGET).map_err(err)?;
        let run = search_from_decision(&inst, &oracle, 0.1, scale, child_seed(6, "run", t));
        hits += usize::from(run.result.solution() == inst.planted.as_ref());
        let planted = inst.planted.as_ref().unwrap().indices();
        let (mut sp, mut so) = (0.0, 0.0);
        for (i, &c) in run.state.counters.iter().enumerate() {
            if planted.contains(&i) {
                sp += c as f64;
            } else {
                so += c as f64;
            }
        }
        gaps.push(sp / 3.0 - so / 9.0);
    }
    let need = p as f64 / 2f64.powi(3 + 4);
    let low = gaps.mean - 3.0 * gaps.se_mean();
    let rate = hits as f64 / 200.0;
    check(
        rate >= 0.9 && low >= need,
        format!("m={}, p={p} (scale 1/64), recovery {rate:.3}, counter gap {:.1} (3σ low {low:.1}) vs {need:.2}", spec.m, gaps.mean),
    )
}

fn c7_worst() -> Outcome {
    let mut ok = 0;
    let mut sizes_ok = true;
    for t in 0..100u64 {
        let x = IntegerKSum::planted(14, 3, 1000, &mut rng_from_seed(child_seed(7, "x", t)));
        let red = subset_sum_reduce_worst(&x);
        let Some(sol) = ExhaustiveSubsetSum.solve(&red.instance) else { continue };
        sizes_ok &= sol.len() == 3;
        if red.map_back(&sol).is_some_and(|s| x.sums_to_zero(s.indices())) {
            ok += 1;
        }
    }
    check(ok == 100 && sizes_ok, format!("{ok}/100 mapped-back solutions verify; all backend sizes = k: {sizes_ok}"))
}

fn c8_avg() -> Outcome {
    const P: u64 = 1_000_003;
    let (r, k, n) = (12, 3, 500u64);
    // backend on its own planted distribution: uniform values, target the sum of a random subset
    let mut backend_hits = 0;
    for t in 0..n {
        use rand::Rng;
        let mut rng = rng_from_seed(child_seed(8, "backend", t));
        let values: Vec<i128> = (0..r).map(|_| rng.random_range(0..P) as i128).collect();
        let target = loop {
            let s: Vec<usize> = (0..r).filter(|_| rng.random::<bool>()).collect();
            if !s.is_empty() {
                break s.iter().map(|&i| values[i]).sum::<i128>() % P as i128;
            }
        };
        let inst = SubsetSumInstance { values, target, modulus: Some(P) };
        backend_hits += usize::from(ExhaustiveSubsetSum.solve(&inst).is_some_and(|s| inst.is_solution(&s)));
    }
    let mut e2e = 0;
    for t in 0..n {
        let x = ResidueInstance::planted(P, r, k, &mut rng_from_seed(child_seed(8, "x", t)));
        let red = subset_sum_reduce_avg(&x, child_seed(8, "red", t)).map_err(err)?;
        if let Some(s) = ExhaustiveSubsetSum.solve(&red.instance).and_then(|f| red.recover(&f)) {
            e2e += usize::from(x.sums_to_zero(s.indices()));
        }
    }
    let backend = backend_hits as f64 / n as f64;
    let predicted = backend * 0.5f64.powi(k as i32);
    let got = e2e as f64 / n as f64;
    let ratio = got / predicted;
    check(
        (0.5..=2.0).contains(&ratio),
        format!("backend rate {backend:.3}, end-to-end {got:.3}, predicted {predicted:.3} (ratio {ratio:.2})"),
    )
}

fn c9_carry() -> Outcome {
    let mut ok = 0;
    for t in 0..200u64 {
        let inst = ResidueInstance::planted(25, 8, 3, &mut rng_from_seed(child_seed(9, "x", t)));
        let planted = inst.planted.as_ref().unwrap().indices().to_vec();
        let mut candidates = 0;
        let mut hit = false;
        for (_, y) in ksum_to_vector(&inst, 5, 2).map_err(err)? {
            candidates += 1;
            hit |= y.sums_to_zero(&planted);
        }
        ok += usize::from(hit && candidates == 9);
    }
    check(ok == 200, format!("{ok}/200 instances have a carry vector containing the planted set"))
}

fn c10_amplify() -> Outcome {
    let (r, k) = (16, 3);
    let spec = make_spec(r, k, Ratio::new(7, 10), GroupFamily::Xor, 2).map_err(err)?;
    let outer_scale = 1.0 / 32768.0;
    let cfg = AmplifyConfig::new(r, k, Ratio::new(1, 5)).map_err(err)?.scaled(1.0, outer_scale, 1.0);
    let crippled = Crippled {
        inner: |i: &Instance, _s: u64| meet_in_the_middle(i, DEFAULT_SUBSET_BUDGET).unwrap(),
        fail_prob: 0.8,
    };
    let weak = WeakSolver::new(&crippled, 0.2);
    let (mut raw, mut amp, mut bad) = (0, 0, 0);
    for t in 0..100u64 {
        let inst = sample(&spec, r, k, Dist::D1, child_seed(10, "inst", t), DEFAULT_SUBSET_BUDGET).map_err(err)?;
        let hidden = inst.hide_planted();
        raw += usize::from(crippled.solve(&hidden, child_seed(10, "raw", t)).outcome.is_found());
        let res = amplify(&hidden, &weak, &cfg, child_seed(10, "amp", t));
        if let Some(s) = res.solution() {
            if verify(&inst, s).unwrap_or(false) {
                amp += 1;
            } else {
                bad += 1;
            }
        }
    }
    let (lo, hi) = wilson_interval(raw as u64, 100, 0.95);
    check(
        amp >= 95 && bad == 0,
        format!(
            "m={}, outer rounds {} (scale 1/32768), obf rounds {}: amplified {amp}/100, raw {raw}/100 [{lo:.2}, {hi:.2}], {bad} non-verifying",
            spec.m, cfg.outer_rounds, cfg.obf_rounds
        ),
    )
}

fn survival(n: u64, p: f64, hits: u64) -> (f64, f64) {
    let f = hits as f64 / n as f64;
    (f, (f - p) / (p * (1.0 - p) / n as f64).sqrt())
}

fn c11_lifts() -> Outcome {
    let n = 10_000u64;
    let (r, k) = (16, 3);
    let mut notes = Vec::new();
    let mut ok = true;
    for spec in [GroupSpec::xor(12).map_err(err)?, GroupSpec::vector(3, 8).map_err(err)?] {
        let inst = sample(&spec, r, k, Dist::D1, 11, DEFAULT_SUBSET_BUDGET).map_err(err)?;
        let planted = inst.planted.as_ref().unwrap().indices().to_vec();
        let rows = lift_rows(&spec, r, k, 0.75).map_err(err)?;
        let mut rng = rng_from_seed(111);
        let mut hits = 0;
        for _ in 0..n {
            hits += u64::from(vector_lift_round(&inst, rows, &mut rng).map_err(err)?.sums_to_zero(&planted));
        }
        let p = (spec.q as f64).powi(-(rows as i32));
        let (f, z) = survival(n, p, hits);
        ok &= z.abs() <= 3.0;
        notes.push(format!("{} +{rows} rows: {f:.4} vs {p:.4} (z {z:.2})", spec.family));
    }
    let spec = GroupSpec::modular(12).map_err(err)?;
    let inst = sample(&spec, r, k, Dist::D1, 12, DEFAULT_SUBSET_BUDGET).map_err(err)?;
    let planted = inst.planted.as_ref().unwrap().indices().to_vec();
    let bits = lift_bits(&spec, r, k, 0.75).map_err(err)?;
    let mut rng = rng_from_seed(112);
    let mut hits = 0;
    for _ in 0..n {
        hits += u64::from(modular_lift_round(&inst, bits, &mut rng).map_err(err)?.sums_to_zero(&planted));
    }
    let p = 2f64.powi(-(bits as i32));
    let (f, z) = survival(n, p, hits);
    ok &= z.abs() <= 3.0;
    notes.push(format!("modular +{bits} bits: {f:.4} vs {p:.4} (z {z:.2})"));
    check(ok, notes.join("; "))
}

fn c12_correctness() -> Outcome {
    let mut rates = Vec::new();
    for ell in [27, 54, 108, 215, 430] {
        let p = PkeParams::new(64, 0.125, 4, 32, ell).map_err(err)?;
        let rep = correctness_sweep(&p, 2000, child_seed(12, "sweep", ell as u64)).map_err(err)?;
        rates.push((ell, rep.error_rate_0.max(rep.error_rate_1), (rep.errors_0 + rep.errors_1) as f64 / 4000.0));
    }
    let last = rates.last().unwrap().1;
    let monotone = rates.windows(2).all(|w| w[1].2 <= w[0].2);
    let text: Vec<String> = rates.iter().map(|(l, worst, avg)| format!("ℓ={l}: {avg:.4} (worst bit {worst:.4})")).collect();
    check(last <= 0.02 && monotone, text.join(", "))
}

fn c13_hybrids() -> Outcome {
    let p = PkeParams::new(64, 0.125, 4, 32, 430).map_err(err)?;
    let n = 10_000u64;
    let mut a = Vec::with_capacity(n as usize);
    let mut b = Vec::with_capacity(n as usize);
    for t in 0..n {
        let h = hybrid_sample(p.ell, true, &p, child_seed(13, "hyb", t)).map_err(err)?;
        a.push(decryption_weight(h.sk.as_ref().unwrap(), &h.c) as f64);
        let key = keygen(&p, child_seed(13, "key", t)).map_err(err)?;
        let ct = encrypt(&key.pk, true, &p, child_seed(13, "enc", t)).map_err(err)?;
        b.push(decryption_weight(&key.sk, &ct.c) as f64);
    }
    let (d, pval) = ks_two_sample(&a, &b);
    let side = |params: PkeParams, i: usize| move |s: u64| hybrid_sample(i, true, &params, s).unwrap();
    let sk = distinguisher_harness(
        side(p, 0),
        side(p, p.ell),
        |h: &HybridSample| decryption_weight(h.sk.as_ref().unwrap(), &h.c) as f64 <= p.threshold(),
        1000,
        131,
    )
    .map_err(err)?;
    let p0 = PkeParams { eta: 0.0, ..p };
    let rank = distinguisher_harness(side(p0, 0), side(p0, p0.ell), |h: &HybridSample| rank_attacker(&h.pk, &h.c), 200, 132)
        .map_err(err)?;
    check(
        pval > 0.001 && sk.advantage >= 0.9 && rank.advantage >= 0.9,
        format!("KS D={d:.4} p={pval:.3}; sk advantage {:.3}; η=0 rank advantage {:.3}", sk.advantage, rank.advantage),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 13] = [
        ("moment formulas", c1_moments, Some(30)),
        ("exact pmf identities", c2_pmf, Some(60)),
        ("divergence identities", c3_divergence, None),
        ("solver exactness", c4_solvers, None),
        ("gaussian elimination", c5_gauss, Some(120)),
        ("search to decision", c6_s2d, None),
        ("worst-case subset sum", c7_worst, None),
        ("average-case subset sum", c8_avg, None),
        ("carry vectors", c9_carry, None),
        ("amplification", c10_amplify, None),
        ("density lifts", c11_lifts, None),
        ("pke correctness", c12_correctness, Some(120)),
        ("pke hybrids", c13_hybrids, None),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        let slow = limit.is_some_and(|l| took > Duration::from_secs(l));
        let (tag, detail) = match &res {
            Ok(d) if !slow => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; over the {}s limit", limit.unwrap())),
            Err(d) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("[{tag}] {:>2} {name}: {detail} ({:.1}s)", i + 1, took.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

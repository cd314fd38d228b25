//! Success amplification for weak planted k-SUM solvers.
//!
//! [`obfuscate_and_solve`] hides where the planted solution sits by adding
//! a random zero-sum tuple and permuting. [`amplify`] runs it on random
//! walks away from the input that keep the planted set fixed with
//! noticeable probability. The two lifts extend this to instances at
//! density up to 1 for the vector and modular families.

use std::time::Instant;

use num_rational::Ratio;
use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::groups::{ceil_tol, Element, GroupFamily, GroupSpec};
use crate::instances::{Instance, Solution};
use crate::seed::{child_seed, rng_from_seed};
use crate::solvers::{KSumSolver, SolverResult};

/// A solver with a declared success probability. Every answer is re-checked
/// against the instance it was asked about and dropped if it does not verify.
pub struct WeakSolver<'a> {
    pub inner: &'a dyn KSumSolver,
    pub gamma: f64,
    /// Upper bound on the number of inner calls one amplification may make.
    pub call_budget: u64,
}

impl<'a> WeakSolver<'a> {
    pub fn new(inner: &'a dyn KSumSolver, gamma: f64) -> Self {
        WeakSolver { inner, gamma, call_budget: u64::MAX }
    }

    /// One call. Returns the verified answer and the subsets examined.
    pub fn attempt(&self, inst: &Instance, seed: u64) -> (Option<Solution>, u64) {
        let res = self.inner.solve(inst, seed);
        let sol = res.outcome.solution().filter(|s| valid_for(inst, s)).cloned();
        (sol, res.subsets_examined)
    }
}

fn valid_for(inst: &Instance, s: &Solution) -> bool {
    s.len() == inst.k && s.indices().iter().all(|&i| i < inst.r()) && inst.sums_to_zero(s.indices())
}

/// Wraps a solver so that each call fails outright with probability
/// `fail_prob`, decided from the call's seed.
pub struct Crippled<S> {
    pub inner: S,
    pub fail_prob: f64,
}

impl<S: KSumSolver> KSumSolver for Crippled<S> {
    fn solve(&self, inst: &Instance, seed: u64) -> SolverResult {
        let mut rng = rng_from_seed(child_seed(seed, "cripple", 0));
        if rng.random::<f64>() < self.fail_prob {
            return SolverResult::not_found(0, Instant::now());
        }
        self.inner.solve(inst, child_seed(seed, "cripple", 1))
    }
}

/// Round counts for one amplification. Build with [`AmplifyConfig::new`] and
/// shrink with [`AmplifyConfig::scaled`] for experiments at desk scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifyConfig {
    pub gamma: Ratio<u64>,
    /// log2(1/γ) / log2 log2 r.
    pub alpha: f64,
    /// ⌈k^k log2 r⌉.
    pub obf_rounds: u64,
    /// ⌈r ln(1/γ)⌉.
    pub walk_steps: u64,
    /// ⌈64 ln r / γ^{2k+2}⌉.
    pub outer_rounds: u64,
    /// ⌈(log2 r)^{α+2}⌉.
    pub lift_rounds: u64,
}

impl AmplifyConfig {
    pub fn new(r: usize, k: usize, gamma: Ratio<u64>) -> Result<Self> {
        let g = ratio_f64(gamma);
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::InvalidParam(format!("gamma = {gamma} outside (0, 1]")));
        }
        if r < 3 || k < 2 {
            return Err(Error::InvalidParam(format!("amplification needs r >= 3 and k >= 2, got r = {r}, k = {k}")));
        }
        let lr = (r as f64).log2();
        let alpha = (1.0 / g).log2() / lr.log2();
        Ok(AmplifyConfig {
            gamma,
            alpha,
            obf_rounds: count((k as f64).powi(k as i32) * lr),
            walk_steps: count(r as f64 * (1.0 / g).ln()),
            outer_rounds: count(64.0 * (r as f64).ln() / g.powi(2 * k as i32 + 2)),
            lift_rounds: count(lr.powf(alpha + 2.0)),
        })
    }

    /// Replaces α (and with it the lift round count).
    pub fn with_alpha(mut self, r: usize, alpha: f64) -> Self {
        self.alpha = alpha;
        self.lift_rounds = count((r as f64).log2().powf(alpha + 2.0));
        self
    }

    /// Multiplies the obfuscation, outer and lift round counts by the given
    /// factors, rounding up and keeping each count at least 1.
    pub fn scaled(mut self, obf: f64, outer: f64, lift: f64) -> Self {
        self.obf_rounds = count(self.obf_rounds as f64 * obf);
        self.outer_rounds = count(self.outer_rounds as f64 * outer);
        self.lift_rounds = count(self.lift_rounds as f64 * lift);
        self
    }

    /// Δ0 = k log r / (k log r + (α+1) log log r).
    pub fn delta0(&self, r: usize, k: usize) -> f64 {
        let klr = k as f64 * (r as f64).log2();
        klr / (klr + (self.alpha + 1.0) * (r as f64).log2().log2())
    }
}

fn count(x: f64) -> u64 {
    (ceil_tol(x).max(1.0)).min(u64::MAX as f64) as u64
}

fn ratio_f64(x: Ratio<u64>) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Whether density Δ is at most 1 − log log r / log r, where the
/// amplifier's guarantee for arbitrary groups applies.
pub fn in_general_regime(r: usize, density: f64) -> bool {
    let lr = (r as f64).log2();
    density <= 1.0 - lr.log2() / lr
}

/// Adds a hidden zero-sum tuple to the instance, permutes it and asks the
/// weak solver, for `rounds` rounds. Π and e_1..e_k are drawn once; each
/// round picks for every position which e_i to add. An answer is returned
/// only if it sums to the identity in `inst` itself.
pub fn obfuscate_and_solve(inst: &Instance, weak: &WeakSolver<'_>, rounds: u64, seed: u64) -> SolverResult {
    obfuscate_inner(inst, weak, rounds, seed).0
}

fn obfuscate_inner(inst: &Instance, weak: &WeakSolver<'_>, rounds: u64, seed: u64) -> (SolverResult, u64) {
    let start = Instant::now();
    let (spec, r, k) = (&inst.spec, inst.r(), inst.k);
    let mut rng = rng_from_seed(child_seed(seed, "obf-setup", 0));
    let mut perm: Vec<usize> = (0..r).collect();
    perm.shuffle(&mut rng);
    let es = zero_sum_tuple(spec, k, &mut rng);
    let mut examined = 0;
    let mut calls = 0;
    for round in 0..rounds {
        if calls >= weak.call_budget {
            break;
        }
        let mut rr = rng_from_seed(child_seed(seed, "obf-round", round));
        // Position perm[j] of the permuted instance holds entry j.
        let mut permuted = vec![spec.identity(); r];
        for (j, x) in inst.elems.iter().enumerate() {
            permuted[perm[j]] = spec.add(x, &es[rr.random_range(0..k)]);
        }
        let obf = Instance { spec: *spec, k, elems: permuted, planted: None };
        let (ans, ex) = weak.attempt(&obf, child_seed(seed, "obf-call", round));
        examined += ex;
        calls += 1;
        if let Some(s) = ans {
            let back: Vec<usize> = s.indices().iter().map(|&p| inverse(&perm, p)).collect();
            if inst.sums_to_zero(&back) {
                let sol = Solution::new(back).expect("distinct");
                return (SolverResult::found(sol, examined, start), calls);
            }
        }
    }
    (SolverResult::not_found(examined, start), calls)
}

fn inverse(perm: &[usize], p: usize) -> usize {
    perm.iter().position(|&x| x == p).expect("permutation")
}

/// k uniform elements with the last replaced so the tuple sums to the identity.
pub fn zero_sum_tuple<R: Rng + ?Sized>(spec: &GroupSpec, k: usize, rng: &mut R) -> Vec<Element> {
    let mut es: Vec<Element> = (0..k - 1).map(|_| spec.random(rng)).collect();
    let total = es.iter().fold(spec.identity(), |acc, e| spec.add(&acc, e));
    es.push(spec.neg(&total));
    es
}

/// A uniform element different from `cur`, by rejection.
pub fn resample_different<R: Rng + ?Sized>(spec: &GroupSpec, cur: &Element, rng: &mut R) -> Element {
    if spec.order() == Some(1) {
        return cur.clone();
    }
    loop {
        let x = spec.random(rng);
        if &x != cur {
            return x;
        }
    }
}

/// What happened in one outer round of [`amplify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: u64,
    /// Positions changed by the walk.
    pub changed: usize,
    /// Whether the planted set was untouched, when the input carries one.
    pub planted_kept: Option<bool>,
    pub obf_calls: u64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmplifyRun {
    pub result: SolverResult,
    pub rounds_used: u64,
    /// False when the input density is above 1 − log log r / log r.
    pub in_general_regime: bool,
    pub trace: Vec<RoundTrace>,
}

/// Amplifies a weak solver. Each outer round copies the input, takes
/// `walk_steps` steps that replace a uniform position with a different
/// uniform element, and runs [`obfuscate_and_solve`] on the copy. An answer
/// is accepted only if none of its positions changed and it sums to the
/// identity in the input.
pub fn amplify(inst: &Instance, weak: &WeakSolver<'_>, cfg: &AmplifyConfig, seed: u64) -> SolverResult {
    amplify_traced(inst, weak, cfg, seed, false).result
}

pub fn amplify_traced(inst: &Instance, weak: &WeakSolver<'_>, cfg: &AmplifyConfig, seed: u64, trace: bool) -> AmplifyRun {
    let start = Instant::now();
    let (spec, r) = (&inst.spec, inst.r());
    let regime = in_general_regime(r, spec.density(r, inst.k));
    let mut log = Vec::new();
    let mut examined = 0;
    let mut calls = 0;
    for round in 0..cfg.outer_rounds {
        if calls >= weak.call_budget {
            break;
        }
        let mut rng = rng_from_seed(child_seed(seed, "walk", round));
        let mut walked = inst.hide_planted();
        let mut changed = vec![false; r];
        for _ in 0..cfg.walk_steps {
            let i = rng.random_range(0..r);
            walked.elems[i] = resample_different(spec, &walked.elems[i], &mut rng);
            changed[i] = true;
        }
        let budget_left = WeakSolver { call_budget: weak.call_budget - calls, ..*weak };
        let (res, used) = obfuscate_inner(&walked, &budget_left, cfg.obf_rounds, child_seed(seed, "obf", round));
        calls += used;
        examined += res.subsets_examined;
        let accepted = res
            .solution()
            .filter(|s| s.indices().iter().all(|&i| !changed[i]) && inst.sums_to_zero(s.indices()))
            .cloned();
        if trace {
            log.push(RoundTrace {
                round,
                changed: changed.iter().filter(|&&c| c).count(),
                planted_kept: inst.planted.as_ref().map(|p| p.indices().iter().all(|&i| !changed[i])),
                obf_calls: used,
                accepted: accepted.is_some(),
            });
        }
        if let Some(sol) = accepted {
            return AmplifyRun {
                result: SolverResult::found(sol, examined, start),
                rounds_used: round + 1,
                in_general_regime: regime,
                trace: log,
            };
        }
    }
    AmplifyRun {
        result: SolverResult::not_found(examined, start),
        rounds_used: cfg.outer_rounds,
        in_general_regime: regime,
        trace: log,
    }
}

/// Row i of a vector-family element, as a digit in [0, q).
fn row(a: &Element, i: usize) -> u16 {
    match a {
        Element::Xor(_) => GroupSpec::xor_bit(a, i) as u16,
        Element::Vector(d) => d[i],
        Element::Modular(_) => panic!("modular elements have no rows"),
    }
}

fn from_rows(spec: &GroupSpec, digits: impl Iterator<Item = u16>) -> Element {
    match spec.family {
        GroupFamily::Xor => {
            let mut l: SmallVec<[u64; 2]> = SmallVec::from_elem(0, spec.m.div_ceil(64) as usize);
            for (i, b) in digits.enumerate() {
                if b & 1 == 1 {
                    l[i / 64] |= 1 << (i % 64);
                }
            }
            Element::Xor(l)
        }
        GroupFamily::VectorModQ => Element::Vector(digits.collect()),
        GroupFamily::Modular2m => panic!("modular elements have no rows"),
    }
}

fn require_vector(spec: &GroupSpec) -> Result<()> {
    if spec.family == GroupFamily::Modular2m {
        return Err(Error::FamilyMismatch { expected: "vector_mod_q or xor".into(), found: spec.family.to_string() });
    }
    Ok(())
}

/// Rows added by the vector lift: ⌈(k log r / log q)(1/Δ0 − 1/Δ)⌉ with Δ
/// the instance's own density.
pub fn lift_rows(spec: &GroupSpec, r: usize, k: usize, delta0: f64) -> Result<u32> {
    let delta = spec.density(r, k);
    if delta0 >= delta {
        return Err(Error::InvalidParam(format!("Δ0 = {delta0:.4} is not below the instance density {delta:.4}")));
    }
    let klr = k as f64 * (r as f64).log2();
    Ok(ceil_tol(klr / (spec.q as f64).log2() * (1.0 / delta0 - 1.0 / delta)) as u32)
}

/// Bits added by the modular lift: ⌈k log r (1/Δ0 − 1/Δ)⌉.
pub fn lift_bits(spec: &GroupSpec, r: usize, k: usize, delta0: f64) -> Result<u32> {
    lift_rows(spec, r, k, delta0)
}

/// One round of the vector lift: `rows` uniform rows appended below the input.
pub fn vector_lift_round<R: Rng + ?Sized>(inst: &Instance, rows: u32, rng: &mut R) -> Result<Instance> {
    let spec = inst.spec;
    require_vector(&spec)?;
    let big = GroupSpec::new(spec.family, spec.m + rows, spec.q)?;
    let q = spec.q;
    let elems = inst
        .elems
        .iter()
        .map(|a| {
            let extra: Vec<u16> = (0..rows).map(|_| rng.random_range(0..q) as u16).collect();
            from_rows(&big, (0..spec.m as usize).map(|i| row(a, i)).chain(extra))
        })
        .collect();
    Ok(Instance { spec: big, k: inst.k, elems, planted: None })
}

/// One round of the modular lift: M0[i] = M[i] + β_i 2^m with β_i uniform
/// in [0, 2^bits).
pub fn modular_lift_round<R: Rng + ?Sized>(inst: &Instance, bits: u32, rng: &mut R) -> Result<Instance> {
    let spec = inst.spec;
    if spec.family != GroupFamily::Modular2m {
        return Err(Error::FamilyMismatch { expected: "modular2m".into(), found: spec.family.to_string() });
    }
    let big = GroupSpec::modular(spec.m + bits)
        .map_err(|_| Error::ModulusMismatch(format!("2^{} does not fit the modular family", spec.m + bits)))?;
    let elems = inst
        .elems
        .iter()
        .map(|a| {
            let Element::Modular(x) = a else { unreachable!() };
            let beta = if bits == 0 { 0 } else { rng.random::<u128>() & ((1u128 << bits) - 1) };
            Element::Modular(x | (beta << spec.m))
        })
        .collect();
    Ok(Instance { spec: big, k: inst.k, elems, planted: None })
}

fn lift_loop(
    inst: &Instance,
    inner: &dyn KSumSolver,
    rounds: u64,
    seed: u64,
    mut step: impl FnMut(&mut crate::seed::KsumRng) -> Result<Instance>,
) -> Result<SolverResult> {
    let start = Instant::now();
    let mut examined = 0;
    for round in 0..rounds {
        let mut rng = rng_from_seed(child_seed(seed, "lift", round));
        let lifted = step(&mut rng)?;
        let res = inner.solve(&lifted, child_seed(seed, "lift-call", round));
        examined += res.subsets_examined;
        if let Some(s) = res.solution() {
            if valid_for(inst, s) {
                return Ok(SolverResult::found(s.clone(), examined, start));
            }
        }
    }
    Ok(SolverResult::not_found(examined, start))
}

/// Solves a vector or XOR instance at density Δ ≤ 1 with a solver for the
/// lower density Δ0 taken from `cfg`, by appending uniform rows.
pub fn lift_vector_density(inst: &Instance, inner: &dyn KSumSolver, cfg: &AmplifyConfig, seed: u64) -> Result<SolverResult> {
    require_vector(&inst.spec)?;
    let rows = lift_rows(&inst.spec, inst.r(), inst.k, cfg.delta0(inst.r(), inst.k))?;
    lift_loop(inst, inner, cfg.lift_rounds, seed, |rng| vector_lift_round(inst, rows, rng))
}

/// Solves a modular instance at density Δ ≤ 1 with a solver for the lower
/// density Δ0 taken from `cfg`, by randomizing new high-order bits.
pub fn lift_modular_density(inst: &Instance, inner: &dyn KSumSolver, cfg: &AmplifyConfig, seed: u64) -> Result<SolverResult> {
    if inst.spec.family != GroupFamily::Modular2m {
        return Err(Error::FamilyMismatch { expected: "modular2m".into(), found: inst.spec.family.to_string() });
    }
    let bits = lift_bits(&inst.spec, inst.r(), inst.k, cfg.delta0(inst.r(), inst.k))?;
    if inst.spec.m + bits > crate::groups::MAX_MODULAR_BITS {
        return Err(Error::ModulusMismatch(format!("2^{} does not fit the modular family", inst.spec.m + bits)));
    }
    lift_loop(inst, inner, cfg.lift_rounds, seed, |rng| modular_lift_round(inst, bits, rng))
}

/// A solver for density Δ0 built from one for Δ > Δ0: it keeps a random
/// ⌈m·Δ0/Δ⌉ of the rows and re-checks the answer on the full input.
pub struct Downshift<'a> {
    pub inner: &'a dyn KSumSolver,
    pub delta0: f64,
    pub delta: f64,
}

/// Wraps `inner` (a solver at density Δ) into a solver at density Δ0 < Δ.
pub fn downshift_solver_vector(inner: &dyn KSumSolver, delta0: f64, delta: f64) -> Result<Downshift<'_>> {
    if !(delta0 > 0.0 && delta0 < delta) {
        return Err(Error::InvalidParam(format!("need 0 < Δ0 < Δ, got Δ0 = {delta0}, Δ = {delta}")));
    }
    Ok(Downshift { inner, delta0, delta })
}

impl Downshift<'_> {
    pub fn kept_rows(&self, m: u32) -> u32 {
        (ceil_tol(m as f64 * self.delta0 / self.delta) as u32).clamp(1, m)
    }
}

impl KSumSolver for Downshift<'_> {
    fn solve(&self, inst: &Instance, seed: u64) -> SolverResult {
        let start = Instant::now();
        let spec = inst.spec;
        assert!(spec.family != GroupFamily::Modular2m, "downshift needs a vector-family instance");
        let keep = self.kept_rows(spec.m);
        let mut rng = rng_from_seed(child_seed(seed, "downshift", 0));
        let mut rows = sample_indices(&mut rng, spec.m as usize, keep as usize).into_vec();
        rows.sort_unstable();
        let small = GroupSpec::new(spec.family, keep, spec.q).expect("smaller group");
        let elems = inst.elems.iter().map(|a| from_rows(&small, rows.iter().map(|&i| row(a, i)))).collect();
        let sub = Instance { spec: small, k: inst.k, elems, planted: None };
        let res = self.inner.solve(&sub, child_seed(seed, "downshift", 1));
        match res.solution() {
            Some(s) if valid_for(inst, s) => SolverResult::found(s.clone(), res.subsets_examined, start),
            _ => SolverResult::not_found(res.subsets_examined, start),
        }
    }
}

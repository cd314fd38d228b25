use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instances::{Instance, Solution};
use crate::seed::{child_seed, rng_from_seed};
use crate::solvers::{brute_force, SolverResult};

/// Answers whether an instance has a k-SUM solution.
pub trait DecisionOracle: Sync {
    fn decide(&self, inst: &Instance, seed: u64) -> bool;

    /// Declared probability of a wrong answer.
    fn error_rate(&self) -> f64 {
        0.0
    }
}

/// Exact answer by exhaustive search.
#[derive(Clone, Copy, Debug)]
pub struct ExactDecision {
    pub budget: u128,
}

impl DecisionOracle for ExactDecision {
    fn decide(&self, inst: &Instance, _seed: u64) -> bool {
        brute_force(inst, self.budget).expect("decision oracle budget").outcome.is_found()
    }
}

/// Always answers the same bit.
#[derive(Clone, Copy, Debug)]
pub struct ConstantOracle(pub bool);

impl DecisionOracle for ConstantOracle {
    fn decide(&self, _inst: &Instance, _seed: u64) -> bool {
        self.0
    }

    fn error_rate(&self) -> f64 {
        0.5
    }
}

#[derive(Clone, Debug)]
pub struct Sparsified {
    pub instance: Instance,
    /// `replaced[i]` is true when position i received a fresh element.
    pub replaced: Vec<bool>,
}

/// Samples r/2 positions with replacement and gives each a fresh uniform
/// element. The planted set is kept only if none of it was replaced.
pub fn sparsify_r<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Sparsified {
    let r = inst.r();
    let mut replaced = vec![false; r];
    for _ in 0..r / 2 {
        replaced[rng.random_range(0..r)] = true;
    }
    let mut out = inst.clone();
    for (e, _) in out.elems.iter_mut().zip(&replaced).filter(|(_, &f)| f) {
        *e = inst.spec.random(rng);
    }
    if let Some(p) = &inst.planted {
        if p.indices().iter().any(|&i| replaced[i]) {
            out.planted = None;
        }
    }
    Sparsified { instance: out, replaced }
}

/// p = ⌈2^{2k+7}·ln(r/γ)·scale⌉.
pub fn s2d_rounds(r: usize, k: usize, gamma: f64, scale: f64) -> u64 {
    let p = 2f64.powi(2 * k as i32 + 7) * (r as f64 / gamma).ln() * scale;
    crate::groups::ceil_tol(p).max(1.0) as u64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterState {
    pub counters: Vec<u64>,
    pub rounds_completed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct S2dRun {
    pub result: SolverResult,
    pub state: CounterState,
    /// Oracle answer in each round.
    pub answers: Vec<bool>,
}

/// Repeats (sparsify, query, count unreplaced positions on a yes) and
/// outputs the k positions with the largest counters, ties broken by the
/// smaller index.
pub fn search_from_decision(
    inst: &Instance,
    oracle: &dyn DecisionOracle,
    gamma: f64,
    rounds_scale: f64,
    seed: u64,
) -> S2dRun {
    let start = Instant::now();
    let r = inst.r();
    let rounds = s2d_rounds(r, inst.k, gamma, rounds_scale);
    let mut rng = rng_from_seed(seed);
    let mut state = CounterState { counters: vec![0; r], rounds_completed: 0 };
    let mut answers = Vec::with_capacity(rounds as usize);
    let hidden = inst.hide_planted();
    for round in 0..rounds {
        let sp = sparsify_r(&hidden, &mut rng);
        let yes = oracle.decide(&sp.instance, child_seed(seed, "oracle", round));
        answers.push(yes);
        if yes {
            for (c, _) in state.counters.iter_mut().zip(&sp.replaced).filter(|(_, &f)| !f) {
                *c += 1;
            }
        }
        state.rounds_completed += 1;
    }
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| state.counters[b].cmp(&state.counters[a]).then(a.cmp(&b)));
    let sol = Solution::new(order[..inst.k].to_vec()).expect("distinct indices");
    let result = if inst.sums_to_zero(sol.indices()) {
        SolverResult::found(sol, rounds, start)
    } else {
        SolverResult::not_found(rounds, start)
    };
    S2dRun { result, state, answers }
}

//! Direct search algorithms for planted k-SUM.

mod density;
mod gauss;
pub(crate) mod subset_sum;

use std::collections::HashMap;
use std::ops::ControlFlow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::combin::{binomial, for_each_zero_sum, Subsets};
use crate::error::{Error, Result};
use crate::groups::Element;
use crate::instances::{Instance, Solution};

pub use density::{density_k_to_kprime, density_subsample, kshift_rounds, kshift_solve, subsample_rounds, DerivedInstance, Origin};
pub use gauss::{gauss_iterations, gauss_kxor, MAX_NULLITY};
pub use subset_sum::{
    subset_sum_reduce_avg, subset_sum_reduce_worst, AvgReduction, ExhaustiveSubsetSum, IntegerKSum,
    MitmSubsetSum, SubsetSumBackend, SubsetSumInstance, WorstReduction,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "solution", rename_all = "snake_case")]
pub enum Outcome {
    Found(Solution),
    NotFound,
}

impl Outcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Found(s) => Some(s),
            Outcome::NotFound => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Outcome::Found(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverResult {
    pub outcome: Outcome,
    pub subsets_examined: u64,
    pub wall_nanos: u64,
}

impl SolverResult {
    pub fn not_found(subsets_examined: u64, start: Instant) -> Self {
        SolverResult { outcome: Outcome::NotFound, subsets_examined, wall_nanos: elapsed(start) }
    }

    pub fn found(sol: Solution, subsets_examined: u64, start: Instant) -> Self {
        SolverResult { outcome: Outcome::Found(sol), subsets_examined, wall_nanos: elapsed(start) }
    }

    pub fn solution(&self) -> Option<&Solution> {
        self.outcome.solution()
    }
}

pub(crate) fn elapsed(start: Instant) -> u64 {
    start.elapsed().as_nanos().min(u64::MAX as u128) as u64
}

/// Anything that takes an instance and a seed and searches for a solution.
pub trait KSumSolver: Sync {
    fn solve(&self, inst: &Instance, seed: u64) -> SolverResult;
}

impl<F> KSumSolver for F
where
    F: Fn(&Instance, u64) -> SolverResult + Sync,
{
    fn solve(&self, inst: &Instance, seed: u64) -> SolverResult {
        self(inst, seed)
    }
}

/// Tries every k-subset in lexicographic order and returns the first one
/// summing to the identity, which is the lexicographically smallest.
pub fn brute_force(inst: &Instance, budget: u128) -> Result<SolverResult> {
    let start = Instant::now();
    let need = binomial(inst.r() as u64, inst.k as u64);
    if need > budget {
        return Err(Error::BudgetExceeded { needed: need, budget });
    }
    let mut found = None;
    let examined = for_each_zero_sum(&inst.spec, &inst.elems, inst.k, |s| {
        found = Some(s.to_vec());
        ControlFlow::Break(())
    });
    Ok(match found {
        Some(s) => SolverResult::found(Solution::new(s)?, examined, start),
        None => SolverResult::not_found(examined, start),
    })
}

/// Hashes every ⌈k/2⌉-subset sum and probes with the negated sum of every
/// ⌊k/2⌋-subset. Collisions sharing an index are skipped. Among all
/// solutions found, the lexicographically smallest is returned, so the
/// answer always equals [`brute_force`]'s.
pub fn meet_in_the_middle(inst: &Instance, budget: u128) -> Result<SolverResult> {
    let start = Instant::now();
    let (r, k) = (inst.r(), inst.k);
    let big = k.div_ceil(2);
    let small = k / 2;
    let need = binomial(r as u64, big as u64);
    if need > budget {
        return Err(Error::BudgetExceeded { needed: need, budget });
    }
    let spec = &inst.spec;
    let mut table: HashMap<Element, Vec<Vec<usize>>> = HashMap::new();
    for s in Subsets::new(r, big) {
        table.entry(spec.sum_at(&inst.elems, &s)).or_default().push(s);
    }
    let mut examined = need as u64;
    let mut best: Option<Vec<usize>> = None;
    for t in Subsets::new(r, small) {
        examined += 1;
        let want = spec.neg(&spec.sum_at(&inst.elems, &t));
        let Some(hits) = table.get(&want) else { continue };
        for u in hits {
            if u.iter().any(|i| t.contains(i)) {
                continue;
            }
            let mut cand: Vec<usize> = u.iter().chain(&t).copied().collect();
            cand.sort_unstable();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    Ok(match best {
        Some(s) => SolverResult::found(Solution::new(s)?, examined, start),
        None => SolverResult::not_found(examined, start),
    })
}

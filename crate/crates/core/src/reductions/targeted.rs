use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::combin::for_each_zero_sum;
use crate::groups::{Element, GroupSpec};
use crate::instances::Instance;
use crate::seed::{child_seed, rng_from_seed};

/// Decides targeted vector k-SUM: given r−1 elements and a target, is there
/// a (k−1)-subset that, together with the target, sums to the identity?
pub trait TargetedOracle: Sync {
    fn decide(&self, spec: &GroupSpec, k: usize, rest: &[Element], target: &Element, seed: u64) -> bool;
}

/// Exhaustive search over (k−1)-subsets.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactTargeted;

impl TargetedOracle for ExactTargeted {
    fn decide(&self, spec: &GroupSpec, k: usize, rest: &[Element], target: &Element, _seed: u64) -> bool {
        // put the target first; lexicographic order visits sets containing it first
        let mut elems = Vec::with_capacity(rest.len() + 1);
        elems.push(target.clone());
        elems.extend_from_slice(rest);
        let mut hit = false;
        for_each_zero_sum(spec, &elems, k, |s| {
            if s[0] == 0 {
                hit = true;
            }
            ControlFlow::Break(())
        });
        hit
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TargetedRun {
    pub answer: bool,
    pub rounds_used: u64,
    /// Original index placed in slot 1 in each round.
    pub slot_one: Vec<usize>,
}

/// Up to ⌈r·round_multiplier⌉ rounds: permute uniformly, ask the oracle
/// about the tail with the head as target, answer 1 on the first yes.
pub fn vector_to_targeted(inst: &Instance, oracle: &dyn TargetedOracle, round_multiplier: f64, seed: u64) -> TargetedRun {
    let r = inst.r();
    let rounds = ((r as f64 * round_multiplier).ceil() as u64).max(1);
    let mut rng = rng_from_seed(seed);
    let mut slot_one = Vec::new();
    for round in 0..rounds {
        let mut pi: Vec<usize> = (0..r).collect();
        pi.shuffle(&mut rng);
        slot_one.push(pi[0]);
        let rest: Vec<Element> = pi[1..].iter().map(|&i| inst.elems[i].clone()).collect();
        if oracle.decide(&inst.spec, inst.k, &rest, &inst.elems[pi[0]], child_seed(seed, "oracle", round)) {
            return TargetedRun { answer: true, rounds_used: round + 1, slot_one };
        }
    }
    TargetedRun { answer: false, rounds_used: rounds, slot_one }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupFamily;
    use crate::instances::{count_solutions, sample_d0, sample_d1, DEFAULT_SUBSET_BUDGET};
    use num_rational::Ratio;

    fn spec() -> GroupSpec {
        crate::make_spec(10, 3, Ratio::new(1, 2), GroupFamily::VectorModQ, 3).unwrap()
    }

    #[test]
    fn params() {
        assert_eq!(spec().m, 13);
    }

    #[test]
    fn agreement_with_exact_decision() {
        let s = spec();
        let (mut planted_ok, mut null_ok) = (0, 0);
        for i in 0..500u64 {
            let x = sample_d1(&s, 10, 3, child_seed(1, "p", i));
            planted_ok += vector_to_targeted(&x, &ExactTargeted, 1.0, i).answer as u32;
            let y = sample_d0(&s, 10, 3, child_seed(1, "n", i));
            let exact = count_solutions(&y, DEFAULT_SUBSET_BUDGET).unwrap() > 0;
            null_ok += (vector_to_targeted(&y, &ExactTargeted, 1.0, i).answer == exact) as u32;
        }
        assert!(planted_ok >= 300, "{planted_ok}");
        assert!(null_ok >= 495, "{null_ok}");
    }

    #[test]
    fn slot_one_uniform() {
        let s = spec();
        let x = sample_d0(&s, 10, 3, 0);
        let mut freq = [0u32; 10];
        for i in 0..2000u64 {
            for j in vector_to_targeted(&x, &ConstNo, 1.0, i).slot_one {
                freq[j] += 1;
            }
        }
        // 20000 draws, expected 2000 each; 5σ band
        let sd = (20000.0f64 * 0.1 * 0.9).sqrt();
        assert!(freq.iter().all(|&f| (f as f64 - 2000.0).abs() < 5.0 * sd), "{freq:?}");
    }

    struct ConstNo;
    impl TargetedOracle for ConstNo {
        fn decide(&self, _: &GroupSpec, _: usize, _: &[Element], _: &Element, _: u64) -> bool {
            false
        }
    }

    #[test]
    fn exact_targeted_sign() {
        // target t with rest containing a, b such that a + b + t = 0
        let s = GroupSpec::vector(5, 1).unwrap();
        let e = |v: u16| Element::Vector(smallvec::smallvec![v]);
        assert!(ExactTargeted.decide(&s, 3, &[e(1), e(2), e(4)], &e(2), 0));
        assert!(!ExactTargeted.decide(&s, 3, &[e(1), e(1)], &e(2), 0));
    }
}

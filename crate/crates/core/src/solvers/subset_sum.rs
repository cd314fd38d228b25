use std::collections::HashMap;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ResidueInstance, Solution};
use crate::seed::rng_from_seed;

/// Subset sum: find a nonempty subset of `values` summing to `target`,
/// over the integers or modulo `modulus`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSumInstance {
    pub values: Vec<i128>,
    pub target: i128,
    pub modulus: Option<u64>,
}

impl SubsetSumInstance {
    fn reduce(&self, x: i128) -> i128 {
        match self.modulus {
            Some(n) => x.rem_euclid(n as i128),
            None => x,
        }
    }

    pub fn is_solution(&self, indices: &[usize]) -> bool {
        !indices.is_empty() && self.reduce(indices.iter().map(|&i| self.values[i]).sum()) == self.reduce(self.target)
    }
}

/// A subset-sum solver. Returns sorted indices of a nonempty solution.
pub trait SubsetSumBackend: Sync {
    fn solve(&self, inst: &SubsetSumInstance) -> Option<Vec<usize>>;
    fn name(&self) -> &'static str;
}

/// Walks all 2^n subsets in Gray-code order. Limited to 30 items.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExhaustiveSubsetSum;

pub const EXHAUSTIVE_MAX_ITEMS: usize = 30;

impl SubsetSumBackend for ExhaustiveSubsetSum {
    fn solve(&self, inst: &SubsetSumInstance) -> Option<Vec<usize>> {
        let n = inst.values.len();
        assert!(n <= EXHAUSTIVE_MAX_ITEMS, "exhaustive subset sum is limited to {EXHAUSTIVE_MAX_ITEMS} items");
        let target = inst.reduce(inst.target);
        let mut mask = 0u64;
        let mut sum = 0i128;
        for i in 1u64..(1 << n) {
            let bit = i.trailing_zeros() as usize;
            mask ^= 1 << bit;
            sum = if mask >> bit & 1 == 1 { sum + inst.values[bit] } else { sum - inst.values[bit] };
            sum = inst.reduce(sum);
            if sum == target {
                return Some((0..n).filter(|j| mask >> j & 1 == 1).collect());
            }
        }
        None
    }

    fn name(&self) -> &'static str {
        "exhaustive"
    }
}

/// Splits the items in two halves, tabulates the subset sums of the first
/// and looks up the complement of each subset sum of the second.
#[derive(Clone, Copy, Debug, Default)]
pub struct MitmSubsetSum;

pub const MITM_MAX_ITEMS: usize = 50;

impl SubsetSumBackend for MitmSubsetSum {
    fn solve(&self, inst: &SubsetSumInstance) -> Option<Vec<usize>> {
        let n = inst.values.len();
        assert!(n <= MITM_MAX_ITEMS, "MITM subset sum is limited to {MITM_MAX_ITEMS} items");
        let h = n / 2;
        let target = inst.reduce(inst.target);
        let half_sums = |lo: usize, hi: usize| -> Vec<(i128, u64)> {
            let mut out = Vec::with_capacity(1 << (hi - lo));
            out.push((0, 0));
            for j in lo..hi {
                for t in 0..out.len() {
                    let (s, m) = out[t];
                    out.push((inst.reduce(s + inst.values[j]), m | 1 << j));
                }
            }
            out
        };
        let mut left: HashMap<i128, u64> = HashMap::new();
        for (s, m) in half_sums(0, h) {
            // keep a nonempty mask when one exists so the empty set is never paired with itself
            let e = left.entry(s).or_insert(m);
            if *e == 0 {
                *e = m;
            }
        }
        for (s, m) in half_sums(h, n) {
            if let Some(&lm) = left.get(&inst.reduce(target - s)) {
                let mask = lm | m;
                if mask != 0 {
                    return Some((0..n).filter(|j| mask >> j & 1 == 1).collect());
                }
            }
        }
        None
    }

    fn name(&self) -> &'static str {
        "mitm"
    }
}

/// Integer k-SUM instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerKSum {
    pub values: Vec<i64>,
    pub k: usize,
    pub planted: Option<Solution>,
}

impl IntegerKSum {
    /// Uniform values in [−bound, bound] with a planted k-set whose smallest
    /// index is overwritten by the negated sum of the others.
    pub fn planted<R: Rng + ?Sized>(r: usize, k: usize, bound: i64, rng: &mut R) -> Self {
        let mut values: Vec<i64> = (0..r).map(|_| rng.random_range(-bound..=bound)).collect();
        let mut s = sample_indices(rng, r, k).into_vec();
        s.sort_unstable();
        values[s[0]] = -s[1..].iter().map(|&i| values[i]).sum::<i64>();
        IntegerKSum { values, k, planted: Some(Solution::new(s).unwrap()) }
    }

    pub fn sums_to_zero(&self, indices: &[usize]) -> bool {
        indices.len() == self.k && indices.iter().map(|&i| self.values[i]).sum::<i64>() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorstReduction {
    pub instance: SubsetSumInstance,
    pub bound: i128,
}

/// Y_i = (k+1)M + X_i with M = max|X_i| + 1 and target k(k+1)M. Every
/// subset-sum solution of the output has exactly k elements and is a k-SUM
/// solution of the input under the identity index map.
pub fn subset_sum_reduce_worst(inst: &IntegerKSum) -> WorstReduction {
    let k = inst.k as i128;
    let m = inst.values.iter().map(|v| (*v as i128).abs()).max().unwrap_or(0) + 1;
    let values = inst.values.iter().map(|&x| (k + 1) * m + x as i128).collect();
    WorstReduction {
        instance: SubsetSumInstance { values, target: k * (k + 1) * m, modulus: None },
        bound: m,
    }
}

impl WorstReduction {
    pub fn map_back(&self, sol: &[usize]) -> Option<Solution> {
        Solution::new(sol.to_vec()).ok()
    }
}

/// Output of the average-case reduction plus what recovery needs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvgReduction {
    pub instance: SubsetSumInstance,
    pub alpha: u64,
    /// The random subset S folded into the target.
    pub shift_set: Vec<usize>,
    pub k: usize,
}

impl AvgReduction {
    /// Given the backend's S′, returns S′ ∖ S when S ⊂ S′ and |S′ ∖ S| = k.
    pub fn recover(&self, found: &[usize]) -> Option<Solution> {
        if !self.shift_set.iter().all(|i| found.contains(i)) {
            return None;
        }
        let rest: Vec<usize> = found.iter().copied().filter(|i| !self.shift_set.contains(i)).collect();
        (rest.len() == self.k).then(|| Solution::new(rest).ok()).flatten()
    }
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// α uniform in Z_p, Y_i = α + X_i, S a uniformly random subset of [r],
/// target kα + Σ_{i∈S} Y_i (mod p).
pub fn subset_sum_reduce_avg(inst: &ResidueInstance, seed: u64) -> Result<AvgReduction> {
    let p = inst.modulus;
    if !is_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    if p as usize <= inst.k {
        return Err(Error::InvalidParam(format!("p = {p} must exceed k = {}", inst.k)));
    }
    let mut rng = rng_from_seed(seed);
    let alpha = rng.random_range(0..p);
    let pi = p as i128;
    let values: Vec<i128> = inst.values.iter().map(|&x| (alpha as i128 + x as i128) % pi).collect();
    let shift_set: Vec<usize> = (0..inst.r()).filter(|_| rng.random::<bool>()).collect();
    let target = (inst.k as i128 * alpha as i128 + shift_set.iter().map(|&i| values[i]).sum::<i128>()) % pi;
    Ok(AvgReduction {
        instance: SubsetSumInstance { values, target, modulus: Some(p) },
        alpha,
        shift_set,
        k: inst.k,
    })
}

use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;

use super::{KSumSolver, SolverResult};
use crate::error::{Error, Result};
use crate::instances::{Instance, Solution};
use crate::seed::{child_seed, rng_from_seed};

/// 2·⌈r^{k(1−Δ)}⌉ rounds and ⌈r^Δ⌉ elements per round.
pub fn subsample_rounds(r: usize, k: usize, delta: f64) -> (u64, usize) {
    let rounds = 2 * crate::groups::ceil_tol((r as f64).powf(k as f64 * (1.0 - delta))) as u64;
    let size = crate::groups::ceil_tol((r as f64).powf(delta)) as usize;
    (rounds.max(2), size.clamp(1, r))
}

/// Solves a density-1 instance with a solver for the smaller density Δ by
/// running it on random ⌈r^Δ⌉-element sub-instances.
pub fn density_subsample(inst: &Instance, delta: f64, inner: &dyn KSumSolver, seed: u64) -> Result<SolverResult> {
    let start = Instant::now();
    if !(delta > 0.5 && delta < 1.0) {
        return Err(Error::InvalidParam(format!("target density {delta} outside (1/2, 1)")));
    }
    let (rounds, size) = subsample_rounds(inst.r(), inst.k, delta);
    let mut rng = rng_from_seed(seed);
    let mut examined = 0;
    for round in 0..rounds {
        let pick = sample_indices(&mut rng, inst.r(), size).into_vec();
        let sub = Instance {
            spec: inst.spec,
            k: inst.k,
            elems: pick.iter().map(|&i| inst.elems[i].clone()).collect(),
            planted: None,
        };
        let res = inner.solve(&sub, child_seed(seed, "inner", round));
        examined += res.subsets_examined;
        if let Some(s) = res.solution() {
            if s.indices().iter().all(|&i| i < size) && sub.sums_to_zero(s.indices()) {
                let back = Solution::new(s.indices().iter().map(|&i| pick[i]).collect())?;
                if inst.sums_to_zero(back.indices()) {
                    return Ok(SolverResult::found(back, examined, start));
                }
            }
        }
    }
    Ok(SolverResult::not_found(examined, start))
}

/// Where an entry of a derived instance came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Copied(usize),
    Pair(usize, usize),
    Fresh,
}

/// One application of the k2 → k1 compression.
#[derive(Clone, Debug)]
pub struct DerivedInstance {
    /// The k1-SUM instance.
    pub instance: Instance,
    pub origins: Vec<Origin>,
    pub k2: usize,
    /// How many trailing input elements were dropped to make r divisible by 4.
    pub truncated: usize,
    /// Whether the input's planted k2-set became a k1-set of the output.
    /// `None` when the input carries no planted set.
    pub planted_valid: Option<bool>,
}

impl DerivedInstance {
    /// Expands a k1-solution of the derived instance into original indices.
    /// Returns `None` unless it uses no fresh entries and touches exactly k2
    /// distinct original elements.
    pub fn map_back(&self, sol: &Solution) -> Option<Solution> {
        let mut out = Vec::with_capacity(self.k2);
        for &i in sol.indices() {
            match *self.origins.get(i)? {
                Origin::Copied(a) => out.push(a),
                Origin::Pair(a, b) => out.extend([a, b]),
                Origin::Fresh => return None,
            }
        }
        if out.len() != self.k2 {
            return None;
        }
        Solution::new(out).ok()
    }
}

/// Copies r/2 random elements, adds the sums of r/4 random disjoint pairs of
/// the rest and r/4 fresh elements, then permutes. r is first truncated to a
/// multiple of 4.
pub fn density_k_to_kprime(inst: &Instance, k1: usize, seed: u64) -> Result<DerivedInstance> {
    let k2 = inst.k;
    if k1 < 3 || k2 < k1 + 1 || k2 > 2 * k1 - 1 {
        return Err(Error::InvalidKRange { k1, k2, lo: k1 + 1, hi: (2 * k1).saturating_sub(1) });
    }
    let spec = &inst.spec;
    let r = inst.r() - inst.r() % 4;
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..r).collect();
    order.shuffle(&mut rng);
    let (copied, rest) = order.split_at(r / 2);
    let mut origins: Vec<Origin> = copied.iter().map(|&i| Origin::Copied(i)).collect();
    origins.extend(rest.chunks(2).map(|p| Origin::Pair(p[0], p[1])));
    origins.extend(std::iter::repeat_n(Origin::Fresh, r / 4));
    origins.shuffle(&mut rng);
    let elems = origins
        .iter()
        .map(|o| match *o {
            Origin::Copied(a) => inst.elems[a].clone(),
            Origin::Pair(a, b) => spec.add(&inst.elems[a], &inst.elems[b]),
            Origin::Fresh => spec.random(&mut rng),
        })
        .collect();
    let mut out = Instance { spec: *spec, k: k1, elems, planted: None };
    let planted_valid = inst.planted.as_ref().map(|t| {
        let t = t.indices();
        let pos: Vec<usize> = origins
            .iter()
            .enumerate()
            .filter(|(_, o)| match **o {
                Origin::Copied(a) => t.contains(&a),
                Origin::Pair(a, b) => t.contains(&a) && t.contains(&b),
                Origin::Fresh => false,
            })
            .map(|(i, _)| i)
            .collect();
        let direct = pos.iter().filter(|&&i| matches!(origins[i], Origin::Copied(_))).count();
        let valid = pos.len() == k1 && direct == 2 * k1 - k2;
        if valid {
            out.planted = Solution::new(pos).ok();
        }
        valid
    });
    Ok(DerivedInstance { instance: out, origins, k2, truncated: inst.r() - r, planted_valid })
}

/// 3^{2k2}·r^{k2−k1} rounds, as in the analysis.
pub fn kshift_rounds(r: usize, k1: usize, k2: usize) -> u128 {
    3u128.pow(2 * k2 as u32) * (r as u128).pow((k2 - k1) as u32)
}

/// Repeats [`density_k_to_kprime`] and a k1-solver until a back-mapped
/// solution verifies on the original instance.
pub fn kshift_solve(inst: &Instance, k1: usize, inner: &dyn KSumSolver, rounds: u64, seed: u64) -> Result<SolverResult> {
    let start = Instant::now();
    let mut examined = 0;
    for round in 0..rounds {
        let d = density_k_to_kprime(inst, k1, child_seed(seed, "kshift", round))?;
        let res = inner.solve(&d.instance, child_seed(seed, "inner", round));
        examined += res.subsets_examined;
        if let Some(back) = res.solution().and_then(|s| d.map_back(s)) {
            if inst.sums_to_zero(back.indices()) {
                return Ok(SolverResult::found(back, examined, start));
            }
        }
    }
    Ok(SolverResult::not_found(examined, start))
}

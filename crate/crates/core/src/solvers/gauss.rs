use std::time::Instant;

use rand::seq::index::sample as sample_indices;

use super::SolverResult;
use crate::error::{Error, Result};
use crate::gf2::{kernel_basis, ones, weight, xor_into};
use crate::groups::{Element, GroupFamily};
use crate::instances::{Instance, Solution};
use crate::seed::rng_from_seed;

/// Largest kernel dimension whose span is enumerated.
pub const MAX_NULLITY: usize = 20;

/// ⌈(4r/m)^k · ⌈log2 r⌉⌉ column-subsample rounds.
pub fn gauss_iterations(r: usize, m: u32, k: usize) -> u128 {
    let log = (r as f64).log2().ceil().max(1.0);
    let it = (4.0 * r as f64 / m as f64).powi(k as i32) * log;
    crate::groups::ceil_tol(it).max(1.0) as u128
}

/// Low-density k-XOR: repeatedly picks m/2 random columns, finds their
/// linear dependencies by elimination and looks for one of weight exactly
/// k. When r ≤ m/2 the whole instance is eliminated once instead.
pub fn gauss_kxor(inst: &Instance, seed: u64, iteration_cap: u128) -> Result<SolverResult> {
    let start = Instant::now();
    if inst.spec.family != GroupFamily::Xor {
        return Err(Error::NotXor);
    }
    let (r, k, m) = (inst.r(), inst.k, inst.spec.m);
    let cols: Vec<Vec<u64>> = inst
        .elems
        .iter()
        .map(|e| match e {
            Element::Xor(l) => l.to_vec(),
            _ => unreachable!(),
        })
        .collect();
    let half = (m / 2) as usize;
    let mut examined = 0u64;
    if r <= half {
        let all: Vec<usize> = (0..r).collect();
        return Ok(match search(&cols, &all, k, &mut examined) {
            Some(s) => SolverResult::found(Solution::new(s)?, examined, start),
            None => SolverResult::not_found(examined, start),
        });
    }
    let iters = gauss_iterations(r, m, k);
    if iters > iteration_cap {
        return Err(Error::BudgetExceeded { needed: iters, budget: iteration_cap });
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..iters {
        let mut pick = sample_indices(&mut rng, r, half.max(k)).into_vec();
        pick.sort_unstable();
        if let Some(s) = search(&cols, &pick, k, &mut examined) {
            return Ok(SolverResult::found(Solution::new(s)?, examined, start));
        }
    }
    Ok(SolverResult::not_found(examined, start))
}

/// Weight-k vector in the kernel of the chosen columns, enumerating the
/// kernel span in Gray-code order. Gives up when the nullity is too large.
fn search(cols: &[Vec<u64>], pick: &[usize], k: usize, examined: &mut u64) -> Option<Vec<usize>> {
    let chosen: Vec<Vec<u64>> = pick.iter().map(|&i| cols[i].clone()).collect();
    let ker = kernel_basis(&chosen);
    let n = ker.len();
    if n == 0 || n > MAX_NULLITY {
        return None;
    }
    let mut acc = vec![0u64; ker[0].len()];
    for i in 1u64..(1 << n) {
        // Gray code: step i flips basis vector trailing_zeros(i)
        xor_into(&mut acc, &ker[i.trailing_zeros() as usize]);
        *examined += 1;
        if weight(&acc) as usize == k {
            return Some(ones(&acc).into_iter().map(|j| pick[j]).collect());
        }
    }
    None
}

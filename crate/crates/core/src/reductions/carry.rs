use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::groups::{Element, GroupSpec};
use crate::instances::{Instance, ResidueInstance};
use crate::solvers::subset_sum::is_prime;

/// Base-q digits of `x`, least significant first.
pub fn digits(mut x: u64, q: u32, m: u32) -> Vec<u32> {
    (0..m)
        .map(|_| {
            let d = (x % q as u64) as u32;
            x /= q as u64;
            d
        })
        .collect()
}

fn inverse_mod(a: u32, q: u32) -> Option<u32> {
    (1..q).find(|&b| (a as u64 * b as u64) % q as u64 == 1)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Lazily yields (v, Y_v) for every carry vector v ∈ [0, k−1]^m, where
/// Y_v[i][j] = digit_i(x_j) + v_i·k^{-1} mod q.
#[derive(Clone, Debug)]
pub struct CarryVectors {
    spec: GroupSpec,
    k: usize,
    base: Vec<Vec<u32>>,
    k_inv: u32,
    next: u64,
    total: u64,
}

impl Iterator for CarryVectors {
    type Item = (Vec<u32>, Instance);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.total {
            return None;
        }
        let v = digits(self.next, self.k as u32, self.spec.m);
        self.next += 1;
        let q = self.spec.q as u64;
        let shift: Vec<u64> = v.iter().map(|&vi| vi as u64 * self.k_inv as u64 % q).collect();
        let elems = self
            .base
            .iter()
            .map(|d| {
                Element::Vector(
                    d.iter().zip(&shift).map(|(&di, &s)| ((di as u64 + s) % q) as u16).collect::<SmallVec<_>>(),
                )
            })
            .collect();
        Some((v, Instance { spec: self.spec, k: self.k, elems, planted: None }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.total - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for CarryVectors {}

/// Reduces k-SUM over Z_{q^m} to k^m vector k-SUM instances over Z_q^m.
pub fn ksum_to_vector(inst: &ResidueInstance, q: u32, m: u32) -> Result<CarryVectors> {
    if !is_prime(q as u64) {
        return Err(Error::InvalidPrime(q as u64));
    }
    let k = inst.k;
    if gcd(k as u64, q as u64) != 1 {
        return Err(Error::NonInvertibleK { k, q });
    }
    if (q as u64).checked_pow(m) != Some(inst.modulus) {
        return Err(Error::ModulusMismatch(format!("modulus {} is not {q}^{m}", inst.modulus)));
    }
    let total = (k as u64)
        .checked_pow(m)
        .ok_or_else(|| Error::InvalidParam(format!("{k}^{m} carry vectors overflow")))?;
    let spec = GroupSpec::vector(q, m)?;
    let k_inv = inverse_mod(k as u32 % q, q).expect("k is invertible");
    let base = inst.values.iter().map(|&x| digits(x, q, m)).collect();
    Ok(CarryVectors { spec, k, base, k_inv, next: 0, total })
}

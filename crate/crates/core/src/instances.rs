//! Samplers for D0, D1 and D^ℓ, solution counting, verification, and exact
//! probability tables on enumerable groups.

use std::ops::ControlFlow;

use num_rational::Ratio;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::combin::{binomial, for_each_zero_sum, Subsets};
use crate::error::{Error, Result};
use crate::groups::{Element, GroupSpec};
use crate::seed::rng_from_seed;

/// Default cap on the number of k-subsets a counting routine may visit.
pub const DEFAULT_SUBSET_BUDGET: u128 = 100_000_000;
/// Default cap on the number of instances an exact table may hold.
pub const DEFAULT_ENUM_BUDGET: u128 = 1 << 24;

/// A strictly increasing list of indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Solution(Vec<usize>);

impl Solution {
    /// Sorts `indices` and rejects duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParam(format!("repeated index in {indices:?}")));
        }
        Ok(Solution(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<'de> Deserialize<'de> for Solution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Solution::new(v).map_err(serde::de::Error::custom)
    }
}

/// r group elements together with their group and solution size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub spec: GroupSpec,
    pub k: usize,
    pub elems: Vec<Element>,
    pub planted: Option<Solution>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    spec: GroupSpec,
    k: usize,
    elems: Vec<String>,
    planted: Option<Solution>,
}

impl Serialize for Instance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InstanceJson {
            spec: self.spec,
            k: self.k,
            elems: self.elems.iter().map(|e| self.spec.to_hex(e)).collect(),
            planted: self.planted.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = InstanceJson::deserialize(d)?;
        let elems = raw
            .elems
            .iter()
            .map(|h| raw.spec.from_hex(h))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let inst = Instance { spec: raw.spec, k: raw.k, elems, planted: raw.planted };
        if let Some(p) = &inst.planted {
            if !verify(&inst, p).map_err(D::Error::custom)? {
                return Err(D::Error::custom("planted set does not sum to the identity"));
            }
        }
        Ok(inst)
    }
}

impl Instance {
    pub fn new(spec: GroupSpec, k: usize, elems: Vec<Element>) -> Result<Self> {
        if let Some(bad) = elems.iter().position(|e| !spec.is_valid(e)) {
            return Err(Error::InvalidParam(format!("element {bad} is not in {spec}")));
        }
        Ok(Instance { spec, k, elems, planted: None })
    }

    pub fn r(&self) -> usize {
        self.elems.len()
    }

    /// Copy with the planted field removed.
    pub fn hide_planted(&self) -> Self {
        Instance { planted: None, ..self.clone() }
    }

    /// Whether the given in-range indices sum to the identity.
    pub fn sums_to_zero(&self, indices: &[usize]) -> bool {
        self.spec.is_identity(&self.spec.sum_at(&self.elems, indices))
    }
}

/// Which instance distribution to sample or tabulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dist {
    D0,
    D1,
    /// D1, resampled from D0 whenever more than ℓ solutions exist.
    DEll(u64),
}

pub fn sample_d0_rng<R: Rng + ?Sized>(spec: &GroupSpec, r: usize, k: usize, rng: &mut R) -> Instance {
    let elems = (0..r).map(|_| spec.random(rng)).collect();
    Instance { spec: *spec, k, elems, planted: None }
}

pub fn sample_d1_rng<R: Rng + ?Sized>(spec: &GroupSpec, r: usize, k: usize, rng: &mut R) -> Instance {
    assert!(k >= 1 && k <= r, "need 1 <= k <= r");
    let mut inst = sample_d0_rng(spec, r, k, rng);
    let mut s = sample_indices(rng, r, k).into_vec();
    s.sort_unstable();
    let rest = spec.sum_at(&inst.elems, &s[1..]);
    inst.elems[s[0]] = spec.neg(&rest);
    inst.planted = Some(Solution(s));
    inst
}

/// r i.i.d. uniform elements.
pub fn sample_d0(spec: &GroupSpec, r: usize, k: usize, seed: u64) -> Instance {
    sample_d0_rng(spec, r, k, &mut rng_from_seed(seed))
}

/// Uniform elements with a uniformly random k-set S overwritten at its
/// smallest index so that S sums to the identity.
pub fn sample_d1(spec: &GroupSpec, r: usize, k: usize, seed: u64) -> Instance {
    sample_d1_rng(spec, r, k, &mut rng_from_seed(seed))
}

pub fn sample_d_ell_rng<R: Rng + ?Sized>(
    spec: &GroupSpec,
    r: usize,
    k: usize,
    ell: u64,
    budget: u128,
    rng: &mut R,
) -> Result<Instance> {
    let c = binomial(r as u64, k as u64);
    if c > budget {
        return Err(Error::Intractable(format!("C({r},{k}) = {c} subsets exceeds budget {budget}")));
    }
    let x = sample_d1_rng(spec, r, k, rng);
    if count_solutions(&x, budget)? > ell {
        Ok(sample_d0_rng(spec, r, k, rng))
    } else {
        Ok(x)
    }
}

pub fn sample_d_ell(spec: &GroupSpec, r: usize, k: usize, ell: u64, seed: u64, budget: u128) -> Result<Instance> {
    sample_d_ell_rng(spec, r, k, ell, budget, &mut rng_from_seed(seed))
}

pub fn sample(spec: &GroupSpec, r: usize, k: usize, dist: Dist, seed: u64, budget: u128) -> Result<Instance> {
    match dist {
        Dist::D0 => Ok(sample_d0(spec, r, k, seed)),
        Dist::D1 => Ok(sample_d1(spec, r, k, seed)),
        Dist::DEll(ell) => sample_d_ell(spec, r, k, ell, seed, budget),
    }
}

/// c(X): the number of k-subsets summing to the identity.
pub fn count_solutions(inst: &Instance, budget: u128) -> Result<u64> {
    let need = binomial(inst.r() as u64, inst.k as u64);
    if need > budget {
        return Err(Error::BudgetExceeded { needed: need, budget });
    }
    let mut n = 0u64;
    for_each_zero_sum(&inst.spec, &inst.elems, inst.k, |_| {
        n += 1;
        ControlFlow::Continue(())
    });
    Ok(n)
}

/// Whether `sol` sums to the identity in `inst`.
pub fn verify(inst: &Instance, sol: &Solution) -> Result<bool> {
    if let Some(&bad) = sol.indices().iter().find(|&&i| i >= inst.r()) {
        return Err(Error::Index { index: bad, r: inst.r() });
    }
    Ok(inst.sums_to_zero(sol.indices()))
}

/// Exact probabilities of every instance of size r over an enumerable group.
/// Instances are indexed in mixed radix, coordinate 0 least significant.
#[derive(Clone, Debug)]
pub struct PmfTable {
    pub spec: GroupSpec,
    pub r: usize,
    pub k: usize,
    pub probs: Vec<Ratio<i128>>,
    /// c(X) for each instance.
    pub counts: Vec<u32>,
}

impl PmfTable {
    pub fn instance(&self, idx: usize) -> Vec<Element> {
        let g = self.spec.order().unwrap() as usize;
        let mut i = idx;
        (0..self.r)
            .map(|_| {
                let e = self.spec.element_at((i % g) as u64);
                i /= g;
                e
            })
            .collect()
    }

    pub fn group_order(&self) -> i128 {
        self.spec.order().unwrap() as i128
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Number of instances of size r, checked against `budget`.
fn instance_space(spec: &GroupSpec, r: usize, budget: u128) -> Result<usize> {
    let too_big = Error::BudgetExceeded { needed: u128::MAX, budget };
    let g = spec.order().ok_or(too_big)?;
    let n = g.checked_pow(r as u32).ok_or(Error::BudgetExceeded { needed: u128::MAX, budget })?;
    if n > budget {
        return Err(Error::BudgetExceeded { needed: n, budget });
    }
    Ok(n as usize)
}

/// c(X) for every instance of size r, indexed as in [`PmfTable`].
pub fn count_table(spec: &GroupSpec, r: usize, k: usize, budget: u128) -> Result<Vec<u32>> {
    let n = instance_space(spec, r, budget)?;
    let g = spec.order().unwrap() as u64;
    let mut elems: Vec<Element> = vec![spec.identity(); r];
    let mut out = Vec::with_capacity(n);
    for idx in 0..n as u64 {
        let mut i = idx;
        for e in elems.iter_mut() {
            *e = spec.element_at(i % g);
            i /= g;
        }
        let mut c = 0u32;
        for_each_zero_sum(spec, &elems, k, |_| {
            c += 1;
            ControlFlow::Continue(())
        });
        out.push(c);
    }
    Ok(out)
}

/// Exact pmf of `dist`, computed by running the sampling procedure over
/// every choice of its random inputs.
pub fn exact_pmf(spec: &GroupSpec, r: usize, k: usize, dist: Dist, budget: u128) -> Result<PmfTable> {
    let n = instance_space(spec, r, budget)?;
    let counts = count_table(spec, r, k, budget)?;
    let nn = n as i128;
    let probs = match dist {
        Dist::D0 => vec![Ratio::new(1, nn); n],
        Dist::D1 | Dist::DEll(_) => {
            let hits = planted_hits(spec, r, k, n);
            let c = binomial(r as u64, k as u64) as i128;
            match dist {
                Dist::D1 => hits.iter().map(|&h| Ratio::new(h as i128, nn * c)).collect(),
                Dist::DEll(ell) => {
                    // D1 outcomes with too many solutions are resampled from D0
                    let rejected: i128 = hits
                        .iter()
                        .zip(&counts)
                        .filter(|(_, &cx)| cx as u64 > ell)
                        .map(|(&h, _)| h as i128)
                        .sum();
                    hits.iter()
                        .zip(&counts)
                        .map(|(&h, &cx)| {
                            let kept = if cx as u64 <= ell { h as i128 * nn } else { 0 };
                            Ratio::new(kept + rejected, nn * nn * c)
                        })
                        .collect()
                }
                Dist::D0 => unreachable!(),
            }
        }
    };
    Ok(PmfTable { spec: *spec, r, k, probs, counts })
}

/// For each instance X, the number of pairs (Y, S) with Y uniform and S a
/// k-subset such that planting S into Y yields X.
fn planted_hits(spec: &GroupSpec, r: usize, k: usize, n: usize) -> Vec<u64> {
    let g = spec.order().unwrap() as u64;
    let subsets: Vec<Vec<usize>> = Subsets::new(r, k).collect();
    let pow: Vec<u64> = (0..r).map(|i| g.pow(i as u32)).collect();
    let mut hits = vec![0u64; n];
    let mut y: Vec<Element> = vec![spec.identity(); r];
    let mut ycode = vec![0u64; r];
    for idx in 0..n as u64 {
        let mut i = idx;
        for j in 0..r {
            ycode[j] = i % g;
            y[j] = spec.element_at(ycode[j]);
            i /= g;
        }
        for s in &subsets {
            let lead = spec.neg(&spec.sum_at(&y, &s[1..]));
            let code = spec.index_of(&lead);
            let x = idx - ycode[s[0]] * pow[s[0]] + code * pow[s[0]];
            hits[x as usize] += 1;
        }
    }
    hits
}

/// A k-SUM instance over Z_N for an arbitrary modulus N.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueInstance {
    pub modulus: u64,
    pub k: usize,
    pub values: Vec<u64>,
    pub planted: Option<Solution>,
}

impl ResidueInstance {
    pub fn uniform<R: Rng + ?Sized>(modulus: u64, r: usize, k: usize, rng: &mut R) -> Self {
        let values = (0..r).map(|_| rng.random_range(0..modulus)).collect();
        ResidueInstance { modulus, k, values, planted: None }
    }

    /// Same planting rule as D1: overwrite the smallest index of S.
    pub fn planted<R: Rng + ?Sized>(modulus: u64, r: usize, k: usize, rng: &mut R) -> Self {
        let mut inst = Self::uniform(modulus, r, k, rng);
        let mut s = sample_indices(rng, r, k).into_vec();
        s.sort_unstable();
        let rest = s[1..].iter().fold(0u128, |a, &i| (a + inst.values[i] as u128) % modulus as u128);
        inst.values[s[0]] = ((modulus as u128 - rest) % modulus as u128) as u64;
        inst.planted = Some(Solution(s));
        inst
    }

    pub fn r(&self) -> usize {
        self.values.len()
    }

    pub fn sums_to_zero(&self, indices: &[usize]) -> bool {
        let n = self.modulus as u128;
        indices.iter().fold(0u128, |a, &i| (a + self.values[i] as u128) % n) == 0
    }

    pub fn count_solutions(&self, budget: u128) -> Result<u64> {
        let need = binomial(self.r() as u64, self.k as u64);
        if need > budget {
            return Err(Error::BudgetExceeded { needed: need, budget });
        }
        Ok(Subsets::new(self.r(), self.k).filter(|s| self.sums_to_zero(s)).count() as u64)
    }
}

//! Closed-form moments of the solution count, exact divergences between the
//! instance distributions on enumerable groups, and Monte-Carlo estimators.

pub mod stats;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::combin::binomial;
use crate::error::{Error, Result};
use crate::groups::GroupSpec;
use crate::instances::{count_solutions, exact_pmf, sample_d0_rng, sample_d1_rng, Dist, PmfTable};
use crate::seed::rng_from_seed;
use stats::{z_score, Moments};

pub type Q = Ratio<i128>;

/// Mean and variance of c(X). For D1 the variance is an upper bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedMoments {
    pub mean: Q,
    pub variance: Q,
    pub variance_is_bound: bool,
}

fn order_i128(spec: &GroupSpec) -> Result<i128> {
    match spec.order() {
        Some(g) if g <= 1 << 60 => Ok(g as i128),
        _ => Err(Error::Overflow(format!("|G| of {spec} is too large for exact moments"))),
    }
}

/// E[c(X)] and Var[c(X)] under D0 or D1.
///
/// D0: mean C/|G|, variance (C/|G|)(1 − 1/|G|).
/// D1: mean 1 + (C − 1)/|G|, variance below (C/|G|)(1 + 2^k k²/r).
pub fn closed_form_moments(r: usize, k: usize, spec: &GroupSpec, dist: Dist) -> Result<ClosedMoments> {
    let g = order_i128(spec)?;
    let c = binomial(r as u64, k as u64) as i128;
    match dist {
        Dist::D0 => Ok(ClosedMoments {
            mean: Q::new(c, g),
            variance: Q::new(c, g) * Q::new(g - 1, g),
            variance_is_bound: false,
        }),
        Dist::D1 => Ok(ClosedMoments {
            mean: Q::from_integer(1) + Q::new(c - 1, g),
            variance: Q::new(c, g) * Q::new(r as i128 + (1i128 << k) * (k * k) as i128, r as i128),
            variance_is_bound: true,
        }),
        Dist::DEll(_) => Err(Error::InvalidParam("closed-form moments exist only for D0 and D1".into())),
    }
}

fn to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub dist: Dist,
    pub trials: u64,
    pub seed: u64,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub mean: Q,
    pub variance: Q,
    pub variance_is_bound: bool,
    pub z_mean: f64,
    /// z of the sample variance against the closed form; for D1 this is
    /// against the bound, so only large positive values indicate a problem.
    pub z_variance: f64,
}

/// Samples `trials` instances and compares the moments of c(X) with the closed forms.
pub fn monte_carlo_moments(spec: &GroupSpec, r: usize, k: usize, dist: Dist, trials: u64, seed: u64) -> Result<MomentReport> {
    if trials < 1000 {
        return Err(Error::InvalidParam(format!("need at least 1000 trials, got {trials}")));
    }
    let closed = closed_form_moments(r, k, spec, dist)?;
    let mut rng = rng_from_seed(seed);
    let mut m = Moments::default();
    for _ in 0..trials {
        let inst = match dist {
            Dist::D0 => sample_d0_rng(spec, r, k, &mut rng),
            _ => sample_d1_rng(spec, r, k, &mut rng),
        };
        m.push(count_solutions(&inst, u128::MAX)? as f64);
    }
    Ok(MomentReport {
        dist,
        trials,
        seed,
        empirical_mean: m.mean,
        empirical_variance: m.variance(),
        z_mean: z_score(m.mean, to_f64(&closed.mean), m.se_mean()),
        z_variance: z_score(m.variance(), to_f64(&closed.variance), m.se_variance()),
        mean: closed.mean,
        variance: closed.variance,
        variance_is_bound: closed.variance_is_bound,
    })
}

/// Total variation distance between two pmfs on the same index set.
pub fn statistical_distance(p: &PmfTable, q: &PmfTable) -> Q {
    let total: Q = p.probs.iter().zip(&q.probs).map(|(a, b)| if a > b { a - b } else { b - a }).sum();
    total / 2
}

/// max_x P(x)/Q(x) over the support of P. `None` if P has mass where Q has none.
pub fn renyi_inf(p: &PmfTable, q: &PmfTable) -> Option<Q> {
    let mut best = Q::from_integer(0);
    for (a, b) in p.probs.iter().zip(&q.probs) {
        if *a == Q::from_integer(0) {
            continue;
        }
        if *b == Q::from_integer(0) {
            return None;
        }
        best = best.max(a / b);
    }
    Some(best)
}

fn prob_where(p: &PmfTable, pred: impl Fn(u32) -> bool) -> Q {
    p.probs.iter().zip(&p.counts).filter(|(_, &c)| pred(c)).map(|(x, _)| *x).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub ell: u64,
    /// Exact SD(D^ℓ, D1).
    pub sd_dell_d1: Q,
    /// Pr_{D1}[c > ℓ], the upper bound on SD(D^ℓ, D1).
    pub pr_d1_above: Q,
    /// Pr_{D1}[c > ℓ]·Pr_{D0}[c ≤ ℓ].
    pub sd_product: Q,
    /// Exact max_x D^ℓ(x)/D0(x).
    pub renyi_dell_d0: Q,
    /// (|G|/C)·ℓ + Pr_{D1}[c > ℓ].
    pub renyi_formula: Q,
    /// Whether some instance has exactly ℓ solutions. When none does, the
    /// maximum ratio is attained at a smaller count and sits below the formula.
    pub ell_attained: bool,
}

/// Exact SD and Rényi-∞ comparisons for D^ℓ by full enumeration.
pub fn exact_divergences(spec: &GroupSpec, r: usize, k: usize, ell: u64, budget: u128) -> Result<DivergenceReport> {
    let d0 = exact_pmf(spec, r, k, Dist::D0, budget)?;
    let d1 = exact_pmf(spec, r, k, Dist::D1, budget)?;
    let dl = exact_pmf(spec, r, k, Dist::DEll(ell), budget)?;
    let g = d0.group_order();
    let c = binomial(r as u64, k as u64) as i128;
    let above = prob_where(&d1, |x| x as u64 > ell);
    let below0 = prob_where(&d0, |x| x as u64 <= ell);
    Ok(DivergenceReport {
        ell,
        sd_dell_d1: statistical_distance(&dl, &d1),
        pr_d1_above: above,
        sd_product: above * below0,
        renyi_dell_d0: renyi_inf(&dl, &d0).expect("D0 has full support"),
        renyi_formula: Q::new(g, c) * Q::from_integer(ell as i128) + above,
        ell_attained: d0.counts.iter().any(|&x| x as u64 == ell),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdBoundReport {
    pub group_order: i128,
    pub r: usize,
    pub k: usize,
    /// Exact SD(D0, D1).
    pub sd: Q,
    /// Pr_{D0}[c = 0] = 1 − Pr_{D0}[c > 0].
    pub pr_d0_zero: Q,
    /// |G|/(|G| + C).
    pub bound: Q,
    pub bound_holds: bool,
}

/// Exact SD(D0, D1) against |G|/(|G| + C). The SD equals Pr_{D0}[c = 0]
/// whenever C ≤ |G|, since then D1 > D0 exactly where c ≥ 1.
pub fn sd_bound_check(spec: &GroupSpec, r: usize, k: usize, budget: u128) -> Result<SdBoundReport> {
    let d0 = exact_pmf(spec, r, k, Dist::D0, budget)?;
    let d1 = exact_pmf(spec, r, k, Dist::D1, budget)?;
    let g = d0.group_order();
    let c = binomial(r as u64, k as u64) as i128;
    let sd = statistical_distance(&d0, &d1);
    let bound = Q::new(g, g + c);
    Ok(SdBoundReport {
        group_order: g,
        r,
        k,
        pr_d0_zero: prob_where(&d0, |x| x == 0),
        bound,
        bound_holds: sd < bound,
        sd,
    })
}

/// Checks D1(X) = (|G|/C)·c(X)·D0(X) and
/// D^ℓ(X) = D1(X)·[c(X) ≤ ℓ] + Pr_{D1}[c > ℓ]·D0(X) entrywise.
/// Returns the number of mismatching entries for each identity.
pub fn pmf_identity_mismatches(spec: &GroupSpec, r: usize, k: usize, ell: u64, budget: u128) -> Result<(usize, usize)> {
    let d0 = exact_pmf(spec, r, k, Dist::D0, budget)?;
    let d1 = exact_pmf(spec, r, k, Dist::D1, budget)?;
    let dl = exact_pmf(spec, r, k, Dist::DEll(ell), budget)?;
    let g = d0.group_order();
    let c = binomial(r as u64, k as u64) as i128;
    let above = prob_where(&d1, |x| x as u64 > ell);
    let mut bad1 = 0;
    let mut bad_l = 0;
    for i in 0..d0.len() {
        let cx = d0.counts[i];
        if d1.probs[i] != Q::new(g * cx as i128, c) * d0.probs[i] {
            bad1 += 1;
        }
        let kept = if cx as u64 <= ell { d1.probs[i] } else { Q::from_integer(0) };
        if dl.probs[i] != kept + above * d0.probs[i] {
            bad_l += 1;
        }
    }
    Ok((bad1, bad_l))
}

/// Exact Pr[c = j] under `p` for each j.
pub fn count_distribution(p: &PmfTable) -> Vec<Q> {
    let max = p.counts.iter().copied().max().unwrap_or(0) as usize;
    let mut out = vec![Q::from_integer(0); max + 1];
    for (x, &c) in p.probs.iter().zip(&p.counts) {
        out[c as usize] += x;
    }
    out
}

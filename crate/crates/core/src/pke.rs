//! Public-key bit encryption from planted k-XOR and LPN, with the hybrid
//! distributions and a harness for measuring distinguishing advantage.
//!
//! KeyGen plants a weight-k dependency among the r columns of a uniform
//! m×r matrix pk. Enc(pk, 1) is S·pk + E with E ~ Ber(η/2); Enc(pk, 0) is
//! uniform. Dec counts the ones of C·sk and compares with
//! ℓ(1/2 − (1−η)^k/4).

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::stats::difference_interval;
use crate::error::{Error, Result};
use crate::gf2::{set_bit, weight, words_for, BitMatrix};
use crate::groups::GroupSpec;
use crate::instances::{sample_d0_rng, sample_d1_rng, Instance};
use crate::seed::{child_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PkeParams {
    pub r: usize,
    pub eta: f64,
    pub k: usize,
    pub m: usize,
    pub ell: usize,
}

/// ℓ = ⌈32 (1−η)^{−2k} ln(1/ε)⌉.
pub fn ell_for(eta: f64, k: usize, eps: f64) -> usize {
    (32.0 * (1.0 - eta).powi(-2 * k as i32) * (1.0 / eps).ln()).ceil() as usize
}

impl PkeParams {
    pub fn new(r: usize, eta: f64, k: usize, m: usize, ell: usize) -> Result<Self> {
        if !(eta >= 0.0 && eta < 1.0) {
            return Err(Error::InvalidParam(format!("noise rate {eta} outside [0, 1)")));
        }
        if k == 0 || k > r {
            return Err(Error::InvalidParam(format!("need 1 <= k <= r, got k = {k}, r = {r}")));
        }
        if m == 0 || ell == 0 {
            return Err(Error::InvalidParam("m and ell must be positive".into()));
        }
        Ok(PkeParams { r, eta, k, m, ell })
    }

    /// Parameters with ℓ chosen for decryption error at most `eps`.
    pub fn for_target(r: usize, eta: f64, k: usize, m: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParam(format!("target error {eps} outside (0, 1)")));
        }
        Self::new(r, eta, k, m, ell_for(eta, k, eps))
    }

    /// Parses `r=..,eta=..,k=..,m=..,ell=..`; `ell` may be replaced by `eps`.
    pub fn parse(s: &str) -> Result<Self> {
        let (mut r, mut eta, mut k, mut m, mut ell, mut eps) = (None, None, None, None, None, None);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {part:?}")))?;
            let bad = || Error::Config(format!("bad value for {key}: {val:?}"));
            match key.trim() {
                "r" => r = Some(val.trim().parse().map_err(|_| bad())?),
                "eta" => eta = Some(val.trim().parse().map_err(|_| bad())?),
                "k" => k = Some(val.trim().parse().map_err(|_| bad())?),
                "m" => m = Some(val.trim().parse().map_err(|_| bad())?),
                "ell" => ell = Some(val.trim().parse().map_err(|_| bad())?),
                "eps" => eps = Some(val.trim().parse().map_err(|_| bad())?),
                other => return Err(Error::Config(format!("unknown parameter {other:?}"))),
            }
        }
        let need = |name: &str| Error::Config(format!("missing parameter {name}"));
        let (r, eta, k, m) = (r.ok_or(need("r"))?, eta.ok_or(need("eta"))?, k.ok_or(need("k"))?, m.ok_or(need("m"))?);
        match (ell, eps) {
            (Some(ell), _) => Self::new(r, eta, k, m, ell),
            (None, Some(eps)) => Self::for_target(r, eta, k, m, eps),
            (None, None) => Self::for_target(r, eta, k, m, 0.01),
        }
    }

    /// ℓ(1/2 − (1−η)^k/4).
    pub fn threshold(&self) -> f64 {
        self.ell as f64 * (0.5 - (1.0 - self.eta).powi(self.k as i32) / 4.0)
    }

    /// exp(−((1−η)^k/4)² ℓ/2), the per-bit error bound.
    pub fn error_bound(&self) -> f64 {
        let g = (1.0 - self.eta).powi(self.k as i32) / 4.0;
        (-g * g * self.ell as f64 / 2.0).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PkeKeyPair {
    /// m×r; column j is the j-th element of a planted k-XOR instance.
    pub pk: BitMatrix,
    /// Sorted planted indices.
    pub sk: Vec<usize>,
}

impl PkeKeyPair {
    /// sk as a packed characteristic vector of length r.
    pub fn sk_vector(&self) -> Vec<u64> {
        sk_vector(&self.sk, self.pk.cols())
    }

    pub fn is_consistent(&self) -> bool {
        let mut acc = vec![0u64; words_for(self.pk.rows())];
        let t = self.pk.transpose();
        for &j in &self.sk {
            crate::gf2::xor_into(&mut acc, t.row(j));
        }
        acc.iter().all(|&w| w == 0)
    }
}

pub fn sk_vector(sk: &[usize], r: usize) -> Vec<u64> {
    let mut v = vec![0u64; words_for(r)];
    for &j in sk {
        set_bit(&mut v, j, true);
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ciphertext {
    /// ℓ×r.
    pub c: BitMatrix,
}

/// Columns of an XOR instance as an m×r matrix.
fn instance_matrix(inst: &Instance) -> BitMatrix {
    let m = inst.spec.m as usize;
    let mut pk = BitMatrix::zeros(m, inst.r());
    for (j, e) in inst.elems.iter().enumerate() {
        for i in 0..m {
            if GroupSpec::xor_bit(e, i) {
                pk.set(i, j, true);
            }
        }
    }
    pk
}

fn xor_spec(m: usize) -> Result<GroupSpec> {
    GroupSpec::xor(u32::try_from(m).map_err(|_| Error::InvalidParam(format!("m = {m} too large")))?)
}

/// Draws pk from D1 over F_2^m (the smallest planted column is overwritten
/// by the sum of the other planted columns).
pub fn keygen(params: &PkeParams, seed: u64) -> Result<PkeKeyPair> {
    let spec = xor_spec(params.m)?;
    let mut rng = rng_from_seed(seed);
    let inst = sample_d1_rng(&spec, params.r, params.k, &mut rng);
    let sk = inst.planted.as_ref().expect("D1 plants a set").indices().to_vec();
    Ok(PkeKeyPair { pk: instance_matrix(&inst), sk })
}

fn check_pk(pk: &BitMatrix, params: &PkeParams) -> Result<()> {
    if pk.rows() != params.m || pk.cols() != params.r {
        return Err(Error::InvalidParam(format!(
            "public key is {}×{}, parameters say {}×{}",
            pk.rows(),
            pk.cols(),
            params.m,
            params.r
        )));
    }
    Ok(())
}

fn bernoulli_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, p: f64, rng: &mut R) -> BitMatrix {
    let mut e = BitMatrix::zeros(rows, cols);
    if p > 0.0 {
        for i in 0..rows {
            for j in 0..cols {
                if rng.random::<f64>() < p {
                    e.set(i, j, true);
                }
            }
        }
    }
    e
}

/// `rows` rows of the form s·pk + e with s uniform and e ~ Ber(p)^r.
fn noisy_codewords<R: Rng + ?Sized>(pk: &BitMatrix, rows: usize, p: f64, rng: &mut R) -> BitMatrix {
    let s = BitMatrix::random(rows, pk.rows(), rng);
    let mut c = s.mul(pk);
    let e = bernoulli_matrix(rows, pk.cols(), p, rng);
    for i in 0..rows {
        crate::gf2::xor_into(c.row_mut(i), e.row(i));
    }
    c
}

pub fn encrypt(pk: &BitMatrix, bit: bool, params: &PkeParams, seed: u64) -> Result<Ciphertext> {
    check_pk(pk, params)?;
    let mut rng = rng_from_seed(seed);
    let c = if bit {
        noisy_codewords(pk, params.ell, params.eta / 2.0, &mut rng)
    } else {
        BitMatrix::random(params.ell, params.r, &mut rng)
    };
    Ok(Ciphertext { c })
}

/// ∥C·sk∥_0.
pub fn decryption_weight(sk: &[usize], c: &BitMatrix) -> u32 {
    weight(&c.mul_vec(&sk_vector(sk, c.cols())))
}

/// 0 if ∥C·sk∥_0 exceeds the threshold, else 1.
pub fn decrypt(sk: &[usize], ct: &Ciphertext, params: &PkeParams) -> Result<bool> {
    if ct.c.rows() != params.ell || ct.c.cols() != params.r {
        return Err(Error::InvalidParam(format!(
            "ciphertext is {}×{}, parameters say {}×{}",
            ct.c.rows(),
            ct.c.cols(),
            params.ell,
            params.r
        )));
    }
    if sk.iter().any(|&j| j >= params.r) {
        return Err(Error::Index { index: *sk.iter().max().unwrap(), r: params.r });
    }
    Ok(decryption_weight(sk, &ct.c) as f64 <= params.threshold())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessReport {
    pub params: PkeParams,
    pub trials: u64,
    pub seed: u64,
    pub errors_0: u64,
    pub errors_1: u64,
    pub error_rate_0: f64,
    pub error_rate_1: f64,
    pub bound: f64,
}

/// `trials` round trips for each bit, each with a fresh key.
pub fn correctness_sweep(params: &PkeParams, trials: u64, seed: u64) -> Result<CorrectnessReport> {
    let errs: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let key = keygen(params, child_seed(seed, "key", t))?;
            let c0 = encrypt(&key.pk, false, params, child_seed(seed, "enc0", t))?;
            let c1 = encrypt(&key.pk, true, params, child_seed(seed, "enc1", t))?;
            Ok((decrypt(&key.sk, &c0, params)?, !decrypt(&key.sk, &c1, params)?))
        })
        .collect::<Result<_>>()?;
    let e0 = errs.iter().filter(|e| e.0).count() as u64;
    let e1 = errs.iter().filter(|e| e.1).count() as u64;
    Ok(CorrectnessReport {
        params: *params,
        trials,
        seed,
        errors_0: e0,
        errors_1: e1,
        error_rate_0: e0 as f64 / trials as f64,
        error_rate_1: e1 as f64 / trials as f64,
        bound: params.error_bound(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpnSample {
    /// r×m.
    pub x: BitMatrix,
    /// Packed length-r vector.
    pub y: Vec<u64>,
    /// (s, e) for the honest branch.
    pub ground_truth: Option<(Vec<u64>, Vec<u64>)>,
}

/// Honest: y = X·s + e with s uniform and e ~ Ber(η)^r. Otherwise y is uniform.
pub fn lpn_sample(m: usize, r: usize, eta: f64, honest: bool, seed: u64) -> LpnSample {
    let mut rng = rng_from_seed(seed);
    let x = BitMatrix::random(r, m, &mut rng);
    if !honest {
        let mut y = vec![0u64; words_for(r)];
        for i in 0..r {
            set_bit(&mut y, i, rng.random::<bool>());
        }
        return LpnSample { x, y, ground_truth: None };
    }
    let mut s = vec![0u64; words_for(m)];
    for i in 0..m {
        set_bit(&mut s, i, rng.random::<bool>());
    }
    let mut e = vec![0u64; words_for(r)];
    for i in 0..r {
        set_bit(&mut e, i, rng.random::<f64>() < eta);
    }
    let mut y = x.mul_vec(&s);
    crate::gf2::xor_into(&mut y, &e);
    LpnSample { x, y, ground_truth: Some((s, e)) }
}

/// One draw from H_b^{(i)}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridSample {
    pub pk: BitMatrix,
    /// Planted set when b = 1.
    pub sk: Option<Vec<usize>>,
    /// ℓ×r; rows 0..i are noisy codewords, the rest uniform.
    pub c: BitMatrix,
    pub honest_rows: usize,
}

/// pk from D_b, then i rows s·pk + e (e ~ Ber(η/2)) followed by ℓ − i uniform rows.
pub fn hybrid_sample(i: usize, b: bool, params: &PkeParams, seed: u64) -> Result<HybridSample> {
    if i > params.ell {
        return Err(Error::InvalidParam(format!("hybrid index {i} exceeds ell = {}", params.ell)));
    }
    let spec = xor_spec(params.m)?;
    let mut rng = rng_from_seed(seed);
    let inst = if b {
        sample_d1_rng(&spec, params.r, params.k, &mut rng)
    } else {
        sample_d0_rng(&spec, params.r, params.k, &mut rng)
    };
    let pk = instance_matrix(&inst);
    let honest = noisy_codewords(&pk, i, params.eta / 2.0, &mut rng);
    let rest = BitMatrix::random(params.ell - i, params.r, &mut rng);
    Ok(HybridSample { sk: inst.planted.map(|p| p.indices().to_vec()), c: honest.vstack(&rest), pk, honest_rows: i })
}

/// The same matrix with its rows in uniformly random order.
pub fn shuffle_rows(c: &BitMatrix, seed: u64) -> BitMatrix {
    let mut order: Vec<usize> = (0..c.rows()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut out = BitMatrix::zeros(c.rows(), c.cols());
    for (dst, &src) in order.iter().enumerate() {
        out.row_mut(dst).copy_from_slice(c.row(src));
    }
    out
}

/// Guesses 1 when every row of C lies in the row space of pk.
pub fn rank_attacker(pk: &BitMatrix, c: &BitMatrix) -> bool {
    pk.vstack(c).rank() == pk.rank()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Advantage {
    pub trials: u64,
    pub seed: u64,
    /// Times the attacker said 1 on samples from A and from B.
    pub ones_a: u64,
    pub ones_b: u64,
    /// Pr[attacker says 1 | A] − Pr[attacker says 1 | B].
    pub difference: f64,
    /// |difference|.
    pub advantage: f64,
    /// 95% interval for the difference.
    pub ci: (f64, f64),
}

/// Runs the attacker on `trials` samples from each side. Sample t of side A
/// uses seed `child_seed(seed, "a", t)`, and likewise for B.
pub fn distinguisher_harness<T, A, B, F>(dist_a: A, dist_b: B, attacker: F, trials: u64, seed: u64) -> Result<Advantage>
where
    A: Fn(u64) -> T + Sync,
    B: Fn(u64) -> T + Sync,
    F: Fn(&T) -> bool + Sync,
{
    if trials < 100 {
        return Err(Error::InvalidParam(format!("need at least 100 trials, got {trials}")));
    }
    let ones_a = (0..trials).into_par_iter().filter(|&t| attacker(&dist_a(child_seed(seed, "a", t)))).count() as u64;
    let ones_b = (0..trials).into_par_iter().filter(|&t| attacker(&dist_b(child_seed(seed, "b", t)))).count() as u64;
    Ok(Advantage {
        trials,
        seed,
        ones_a,
        ones_b,
        difference: (ones_a as f64 - ones_b as f64) / trials as f64,
        advantage: (ones_a as f64 - ones_b as f64).abs() / trials as f64,
        ci: difference_interval(ones_a, trials, ones_b, trials, 0.95),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::stats::ks_two_sample;
    use crate::groups::Element;
    use crate::instances::sample_d1;

    fn column(pk: &BitMatrix, j: usize) -> Element {
        let spec = GroupSpec::xor(pk.rows() as u32).unwrap();
        let mut e = spec.identity();
        if let Element::Xor(l) = &mut e {
            for i in 0..pk.rows() {
                if pk.get(i, j) {
                    l[i / 64] |= 1 << (i % 64);
                }
            }
        }
        e
    }

    fn small() -> PkeParams {
        PkeParams::new(64, 0.125, 4, 32, 430).unwrap()
    }

    #[test]
    fn ell_formula() {
        // 32·(8/7)^8·ln 100 = 428.9...
        assert_eq!(ell_for(0.125, 4, 0.01), 429);
        let raw = 32.0 * (8.0f64 / 7.0).powi(8) * 100f64.ln();
        assert!(raw > 428.0 && raw < 429.0);
        let p = PkeParams::parse("r=64, eta=0.125, k=4, m=32, ell=430").unwrap();
        assert_eq!(p, small());
        assert_eq!(PkeParams::parse("r=64,eta=0.125,k=4,m=32,eps=0.01").unwrap().ell, 429);
        assert!(PkeParams::parse("r=64,eta=0.125,k=4").is_err());
        assert!(PkeParams::parse("r=64,eta=1.5,k=4,m=3,ell=4").is_err());
        assert!(PkeParams::parse("r=64,eta=0.1,k=4,m=3,x=4").is_err());
    }

    #[test]
    fn key_invariant_and_matches_d1() {
        let p = small();
        for t in 0..200 {
            let key = keygen(&p, t).unwrap();
            assert!(key.is_consistent());
            assert_eq!(key.sk.len(), 4);
            let inst = sample_d1(&GroupSpec::xor(32).unwrap(), 64, 4, t);
            assert_eq!(key.pk, instance_matrix(&inst));
            for j in 0..64 {
                assert_eq!(column(&key.pk, j), inst.elems[j]);
            }
        }
    }

    #[test]
    fn key_bits_and_sk_frequency() {
        let p = PkeParams::new(16, 0.125, 3, 8, 10).unwrap();
        let n = 100_000u64;
        let mut ones = vec![0u64; 16];
        let mut sk_hits = vec![0u64; 16];
        for t in 0..n {
            let key = keygen(&p, t).unwrap();
            // row 0 entries of non-leading columns are independent fair bits
            for j in 0..16 {
                if key.sk.first() != Some(&j) && key.pk.get(0, j) {
                    ones[j] += 1;
                }
            }
            for &j in &key.sk {
                sk_hits[j] += 1;
            }
        }
        let f = 3.0 / 16.0;
        let sd = (n as f64 * f * (1.0 - f)).sqrt();
        for j in 0..16 {
            assert!((sk_hits[j] as f64 - n as f64 * f).abs() <= 4.0 * sd, "index {j}: {}", sk_hits[j]);
        }
        // column 15 is never the smallest planted index
        let sd = (n as f64 * 0.25).sqrt();
        assert!((ones[15] as f64 - n as f64 / 2.0).abs() <= 4.0 * sd);
    }

    #[test]
    fn uniform_branch_bit_mean() {
        let p = PkeParams::new(64, 0.125, 4, 32, 16_000).unwrap();
        let key = keygen(&p, 0).unwrap();
        let c = encrypt(&key.pk, false, &p, 1).unwrap().c;
        let total = (0..c.rows()).map(|i| weight(c.row(i)) as f64).sum::<f64>();
        let n = (c.rows() * c.cols()) as f64;
        assert!((total - n / 2.0).abs() <= 4.0 * (n / 4.0).sqrt());
    }

    #[test]
    fn noiseless_rows_in_row_space() {
        let p = PkeParams::new(64, 0.0, 4, 32, 100).unwrap();
        let key = keygen(&p, 3).unwrap();
        let c = encrypt(&key.pk, true, &p, 4).unwrap();
        assert!(rank_attacker(&key.pk, &c.c));
        assert_eq!(decryption_weight(&key.sk, &c.c), 0);
        assert!(decrypt(&key.sk, &c, &p).unwrap());
        let zero = Ciphertext { c: BitMatrix::zeros(100, 64) };
        assert!(decrypt(&key.sk, &zero, &p).unwrap());
        assert!(decrypt(&key.sk, &Ciphertext { c: BitMatrix::zeros(3, 64) }, &p).is_err());
    }

    #[test]
    fn correctness_at_430() {
        let rep = correctness_sweep(&small(), 500, 11).unwrap();
        assert!(rep.error_rate_0 <= 0.02 && rep.error_rate_1 <= 0.02, "{rep:?}");
        assert!(rep.bound <= 0.0101);
    }

    #[test]
    fn lpn_branches() {
        let s = lpn_sample(10, 30, 0.0, true, 1);
        let (sec, e) = s.ground_truth.clone().unwrap();
        assert!(e.iter().all(|&w| w == 0));
        assert_eq!(s.x.mul_vec(&sec), s.y);
        let n = 10_000;
        let total: u64 = (0..n).map(|t| weight(&lpn_sample(8, 64, 0.125, true, t).ground_truth.unwrap().1) as u64).sum();
        let mean = 64.0 * 0.125;
        let sd = (n as f64 * 64.0 * 0.125 * 0.875).sqrt();
        assert!((total as f64 - n as f64 * mean).abs() <= 4.0 * sd);
        assert!(lpn_sample(8, 64, 0.1, false, 1).ground_truth.is_none());
    }

    #[test]
    fn lpn_random_branch_has_no_good_secret() {
        // best agreement over all 2^10 secrets: honest samples fit one secret well, random ones do not
        let best = |smp: &LpnSample| {
            (0u64..1 << 10)
                .map(|s| {
                    let y = smp.x.mul_vec(&[s]);
                    64 - weight(&[y[0] ^ smp.y[0]])
                })
                .max()
                .unwrap()
        };
        for t in 0..5 {
            assert!(best(&lpn_sample(10, 64, 0.05, true, t)) >= 56);
            assert!(best(&lpn_sample(10, 64, 0.05, false, t)) < 56);
        }
    }

    #[test]
    fn hybrid_endpoints() {
        let p = PkeParams::new(64, 0.125, 4, 32, 60).unwrap();
        let h = hybrid_sample(0, true, &p, 5).unwrap();
        assert_eq!(h.honest_rows, 0);
        assert_eq!(h.c.rows(), 60);
        let h = hybrid_sample(60, true, &p, 5).unwrap();
        assert!(PkeKeyPair { pk: h.pk.clone(), sk: h.sk.clone().unwrap() }.is_consistent());
        assert!(hybrid_sample(61, true, &p, 5).is_err());
        let h0 = hybrid_sample(3, false, &p, 5).unwrap();
        assert!(h0.sk.is_none());
        // adjacent hybrids share the key and the first rows' rule
        let a = hybrid_sample(10, true, &PkeParams { eta: 0.0, ..p }, 9).unwrap();
        assert!(rank_attacker(&a.pk, &BitMatrix::from_words(10, 64, a.c.as_words()[..10].to_vec()).unwrap()));
    }

    #[test]
    fn hybrid_full_matches_encryption() {
        let p = PkeParams::new(64, 0.125, 4, 32, 100).unwrap();
        let n = 2000;
        let a: Vec<f64> = (0..n)
            .map(|t| {
                let h = hybrid_sample(100, true, &p, child_seed(1, "h", t)).unwrap();
                decryption_weight(h.sk.as_ref().unwrap(), &h.c) as f64
            })
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|t| {
                let key = keygen(&p, child_seed(2, "k", t)).unwrap();
                decryption_weight(&key.sk, &encrypt(&key.pk, true, &p, child_seed(2, "e", t)).unwrap().c) as f64
            })
            .collect();
        assert!(ks_two_sample(&a, &b).1 > 0.001);
    }

    #[test]
    fn harness_constant_attacker() {
        let adv = distinguisher_harness(|s| s, |s| s.wrapping_add(1), |_: &u64| false, 200, 0).unwrap();
        assert_eq!(adv.advantage, 0.0);
        assert!(adv.ci.0 < 0.0 && adv.ci.1 > 0.0);
        assert!(distinguisher_harness(|s| s, |s| s, |_: &u64| true, 10, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = small();
        let key = keygen(&p, 1).unwrap();
        let js = serde_json::to_string(&key).unwrap();
        assert_eq!(serde_json::from_str::<PkeKeyPair>(&js).unwrap(), key);
        let _ = shuffle_rows(&key.pk, 2);
    }
}

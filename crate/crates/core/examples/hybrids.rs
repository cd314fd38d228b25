//! Distinguishers on the hybrid ciphertext distributions.

use sparse_ksum::pke::{decryption_weight, distinguisher_harness, hybrid_sample, lpn_sample, rank_attacker, HybridSample, PkeParams};

fn main() -> sparse_ksum::Result<()> {
    let p = PkeParams::new(64, 0.125, 4, 32, 200)?;
    let side = |p: PkeParams, i: usize| move |s: u64| hybrid_sample(i, true, &p, s).unwrap();
    let sk_holder = |h: &HybridSample| decryption_weight(h.sk.as_ref().unwrap(), &h.c) as f64 <= p.threshold();
    for i in [0, 1, 100, 199] {
        let adv = distinguisher_harness(side(p, i), side(p, i + 1), sk_holder, 400, 1)?;
        println!("H{i} vs H{}: advantage {:.3} ci {:.3?}", i + 1, adv.advantage, adv.ci);
    }
    let adv = distinguisher_harness(side(p, 0), side(p, p.ell), sk_holder, 400, 2)?;
    println!("H0 vs H{}: advantage {:.3}", p.ell, adv.advantage);

    let noiseless = PkeParams { eta: 0.0, ..p };
    let adv = distinguisher_harness(side(noiseless, 0), side(noiseless, p.ell), |h: &HybridSample| rank_attacker(&h.pk, &h.c), 200, 3)?;
    println!("noiseless, rank attacker: advantage {:.3}", adv.advantage);

    let s = lpn_sample(16, 64, 0.125, true, 4);
    println!("LPN sample: {}x{} matrix, {} label words", s.x.rows(), s.x.cols(), s.y.len());
    Ok(())
}

use sparse_ksum::pke::{correctness_sweep, decrypt, encrypt, keygen, PkeParams};

fn main() -> sparse_ksum::Result<()> {
    let params = PkeParams::for_target(64, 0.125, 4, 32, 0.01)?;
    println!("ell = {}, threshold {:.1}, error bound {:.4}", params.ell, params.threshold(), params.error_bound());
    let key = keygen(&params, 1)?;
    println!("secret key {:?}", key.sk);
    for (i, bit) in [true, false, true, true].into_iter().enumerate() {
        let ct = encrypt(&key.pk, bit, &params, 10 + i as u64)?;
        println!("{} -> {}", u8::from(bit), u8::from(decrypt(&key.sk, &ct, &params)?));
    }
    for ell in [27, 54, 108, 215, 430] {
        let rep = correctness_sweep(&PkeParams { ell, ..params }, 500, 2)?;
        println!("ell={ell}: error {:.4} / {:.4}, bound {:.4}", rep.error_rate_0, rep.error_rate_1, rep.bound);
    }
    Ok(())
}

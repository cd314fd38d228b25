use sparse_ksum::amplify::{lift_rows, vector_lift_round};
use sparse_ksum::seed::rng_from_seed;
use sparse_ksum::{sample_d1, GroupSpec};

fn main() -> sparse_ksum::Result<()> {
    let spec = GroupSpec::xor(12)?;
    let inst = sample_d1(&spec, 16, 3, 2);
    let planted = inst.planted.clone().unwrap();
    let rows = lift_rows(&spec, 16, 3, 0.75)?;
    let mut rng = rng_from_seed(3);
    let n = 20_000;
    let kept = (0..n)
        .filter(|_| vector_lift_round(&inst, rows, &mut rng).unwrap().sums_to_zero(planted.indices()))
        .count();
    println!("density {:.3} -> +{rows} rows, planted survives {:.4} (exact {:.4})", spec.density(16, 3), kept as f64 / n as f64, 0.5f64.powi(rows as i32));
    Ok(())
}

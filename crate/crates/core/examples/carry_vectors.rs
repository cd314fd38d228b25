use sparse_ksum::instances::ResidueInstance;
use sparse_ksum::reductions::ksum_to_vector;
use sparse_ksum::seed::rng_from_seed;

fn main() -> sparse_ksum::Result<()> {
    let inst = ResidueInstance::planted(125, 8, 3, &mut rng_from_seed(5));
    let planted = inst.planted.as_ref().unwrap().indices().to_vec();
    println!("Z_125 values {:?}, planted {planted:?}", inst.values);
    for (carry, y) in ksum_to_vector(&inst, 5, 3)? {
        if y.sums_to_zero(&planted) {
            println!("carry vector {carry:?} keeps the planted set");
        }
    }
    Ok(())
}

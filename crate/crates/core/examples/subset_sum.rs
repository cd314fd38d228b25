//! k-SUM to subset sum, worst case and average case.

use sparse_ksum::instances::ResidueInstance;
use sparse_ksum::seed::rng_from_seed;
use sparse_ksum::solvers::{
    subset_sum_reduce_avg, subset_sum_reduce_worst, ExhaustiveSubsetSum, IntegerKSum, MitmSubsetSum, SubsetSumBackend,
};

fn main() -> sparse_ksum::Result<()> {
    let x = IntegerKSum::planted(14, 3, 1000, &mut rng_from_seed(1));
    let red = subset_sum_reduce_worst(&x);
    let sol = ExhaustiveSubsetSum.solve(&red.instance).expect("planted set is a solution");
    println!("worst case: backend {sol:?}, k-SUM {}", x.sums_to_zero(&sol));

    let mut ok = 0;
    for t in 0..64 {
        let x = ResidueInstance::planted(1_000_003, 16, 3, &mut rng_from_seed(t));
        let red = subset_sum_reduce_avg(&x, t)?;
        if let Some(s) = MitmSubsetSum.solve(&red.instance).and_then(|f| red.recover(&f)) {
            ok += usize::from(x.sums_to_zero(s.indices()));
        }
    }
    println!("average case: {ok}/64 recovered (about 1/8 expected)");
    Ok(())
}

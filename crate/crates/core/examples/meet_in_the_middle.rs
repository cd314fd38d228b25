use std::time::Instant;

use sparse_ksum::instances::DEFAULT_SUBSET_BUDGET;
use sparse_ksum::solvers::{brute_force, meet_in_the_middle};
use sparse_ksum::{sample_d1, GroupSpec};

fn main() -> sparse_ksum::Result<()> {
    let spec = GroupSpec::modular(40)?;
    for k in [3, 4] {
        let inst = sample_d1(&spec, 24, k, 7);
        let t = Instant::now();
        let b = brute_force(&inst, DEFAULT_SUBSET_BUDGET)?;
        let tb = t.elapsed();
        let t = Instant::now();
        let m = meet_in_the_middle(&inst, DEFAULT_SUBSET_BUDGET)?;
        let tm = t.elapsed();
        println!("k={k}: brute {:?} in {tb:?} ({} subsets)", b.solution().map(|s| s.indices()), b.subsets_examined);
        println!("     mitm  {:?} in {tm:?} ({} subsets)", m.solution().map(|s| s.indices()), m.subsets_examined);
    }
    Ok(())
}

//! Draws one instance from each distribution and counts its solutions.

use num_rational::Ratio;
use sparse_ksum::instances::DEFAULT_SUBSET_BUDGET;
use sparse_ksum::{count_solutions, make_spec, sample_d0, sample_d1, sample_d_ell, GroupFamily};

fn main() -> sparse_ksum::Result<()> {
    let (r, k) = (12, 3);
    for family in [GroupFamily::Xor, GroupFamily::Modular2m, GroupFamily::VectorModQ] {
        let spec = make_spec(r, k, Ratio::new(3, 4), family, 3)?;
        println!("{family}: m = {}, density {:.3}", spec.m, spec.density(r, k));
        let d0 = sample_d0(&spec, r, k, 1);
        let d1 = sample_d1(&spec, r, k, 1);
        let dl = sample_d_ell(&spec, r, k, 1, 1, DEFAULT_SUBSET_BUDGET)?;
        println!("  D0 solutions: {}", count_solutions(&d0, DEFAULT_SUBSET_BUDGET)?);
        println!("  D1 solutions: {} (planted {:?})", count_solutions(&d1, DEFAULT_SUBSET_BUDGET)?, d1.planted.unwrap().indices());
        println!("  D^1 solutions: {}", count_solutions(&dl, DEFAULT_SUBSET_BUDGET)?);
    }
    Ok(())
}

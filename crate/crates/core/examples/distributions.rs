//! Exact and sampled statistics of the solution count.

use sparse_ksum::analysis::{closed_form_moments, count_distribution, exact_divergences, monte_carlo_moments, sd_bound_check};
use sparse_ksum::instances::{exact_pmf, DEFAULT_ENUM_BUDGET};
use sparse_ksum::{Dist, GroupSpec};

fn main() -> sparse_ksum::Result<()> {
    let spec = GroupSpec::xor(7)?;
    for dist in [Dist::D0, Dist::D1] {
        let c = closed_form_moments(10, 3, &spec, dist)?;
        let mc = monte_carlo_moments(&spec, 10, 3, dist, 10_000, 1)?;
        println!("{dist:?}: mean {} ~ {:.4} (z {:.2}), variance {} ~ {:.4}", c.mean, mc.empirical_mean, mc.z_mean, c.variance, mc.empirical_variance);
    }

    let z8 = GroupSpec::modular(3)?;
    let d1 = exact_pmf(&z8, 4, 3, Dist::D1, DEFAULT_ENUM_BUDGET)?;
    println!("Z_8, r=4: Pr_D1[c = j] = {:?}", count_distribution(&d1).iter().map(|q| q.to_string()).collect::<Vec<_>>());
    for ell in 0..=4 {
        let d = exact_divergences(&z8, 4, 3, ell, DEFAULT_ENUM_BUDGET)?;
        println!("  ell={ell}: SD(D^ell, D1) = {}, Renyi(D^ell || D0) = {}", d.sd_dell_d1, d.renyi_dell_d0);
    }
    let b = sd_bound_check(&z8, 4, 3, DEFAULT_ENUM_BUDGET)?;
    println!("SD(D0, D1) = {} < {}", b.sd, b.bound);
    Ok(())
}

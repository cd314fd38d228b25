//! A solver that fails 80% of the time, before and after amplification.

use num_rational::Ratio;
use sparse_ksum::amplify::{amplify_traced, AmplifyConfig, Crippled, WeakSolver};
use sparse_ksum::instances::DEFAULT_SUBSET_BUDGET;
use sparse_ksum::solvers::{meet_in_the_middle, KSumSolver};
use sparse_ksum::{make_spec, sample_d1, GroupFamily, Instance};

fn main() -> sparse_ksum::Result<()> {
    let (r, k) = (16, 3);
    let spec = make_spec(r, k, Ratio::new(7, 10), GroupFamily::Xor, 2)?;
    let cfg = AmplifyConfig::new(r, k, Ratio::new(1, 5))?.scaled(1.0, 1.0 / 32768.0, 1.0);
    println!("{cfg:?}");
    let weak = Crippled { inner: |i: &Instance, _| meet_in_the_middle(i, DEFAULT_SUBSET_BUDGET).unwrap(), fail_prob: 0.8 };
    let ws = WeakSolver::new(&weak, 0.2);
    let (mut raw, mut amp) = (0, 0);
    for seed in 0..20 {
        let inst = sample_d1(&spec, r, k, seed).hide_planted();
        raw += usize::from(weak.solve(&inst, seed).outcome.is_found());
        let run = amplify_traced(&inst, &ws, &cfg, seed, true);
        amp += usize::from(run.result.outcome.is_found());
        if seed == 0 {
            println!("first run: {} outer rounds, trace {:?}", run.rounds_used, run.trace.first());
        }
    }
    println!("raw {raw}/20, amplified {amp}/20");
    Ok(())
}

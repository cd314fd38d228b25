use num_rational::Ratio;
use sparse_ksum::instances::DEFAULT_SUBSET_BUDGET;
use sparse_ksum::reductions::{search_from_decision, ConstantOracle, ExactDecision};
use sparse_ksum::{make_spec, sample_d1, GroupFamily};

fn main() -> sparse_ksum::Result<()> {
    let spec = make_spec(12, 3, Ratio::new(1, 2), GroupFamily::Xor, 2)?;
    let inst = sample_d1(&spec, 12, 3, 3);
    println!("planted {:?}", inst.planted.as_ref().unwrap().indices());

    let exact = ExactDecision { budget: DEFAULT_SUBSET_BUDGET };
    let run = search_from_decision(&inst, &exact, 0.1, 1.0 / 64.0, 4);
    println!("exact oracle, {} rounds: {:?}", run.state.rounds_completed, run.result.solution().map(|s| s.indices()));
    println!("counters {:?}", run.state.counters);

    // a useless oracle gives counters with no signal
    let run = search_from_decision(&inst, &ConstantOracle(true), 0.1, 1.0 / 64.0, 4);
    println!("constant oracle: {:?}", run.result.solution().map(|s| s.indices()));
    Ok(())
}

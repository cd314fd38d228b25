//! Search-to-decision, and the reductions from k-SUM over Z_{q^m} to
//! vector k-SUM and from vector k-SUM to its targeted variant.

mod carry;
mod s2d;
mod targeted;

pub use carry::{digits, ksum_to_vector, CarryVectors};
pub use s2d::{
    s2d_rounds, search_from_decision, sparsify_r, ConstantOracle, CounterState, DecisionOracle, ExactDecision,
    S2dRun, Sparsified,
};
pub use targeted::{vector_to_targeted, ExactTargeted, TargetedOracle, TargetedRun};

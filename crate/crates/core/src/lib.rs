//! Minimum-expected-cost repair planning.
//!
//! A system is broken and some of its components must be replaced. Given
//! failure probabilities and costs, this crate finds the replacement order,
//! the set of components worth inspecting first, or, for component trees, the
//! per-assembly choice between replacing outright and repairing the parts,
//! that minimizes the expected total cost.
//!
//! Everything is generic over a [`Scalar`]: `f64`, `f32`, or exact
//! [`BigRational`]. The aliases below fix the scalar for the common cases.
//!
//! ```
//! use fixplan_core::{optimal_sequence, AtomicSpec, Flat};
//!
//! let sys = Flat::independent(vec![
//!     AtomicSpec::new("A", 0.5, 1.0),
//!     AtomicSpec::new("B", 0.5, 2.0),
//! ])
//! .unwrap();
//! let seq = optimal_sequence(&sys).unwrap();
//! assert_eq!(seq.order[0].as_str(), "A");
//! ```

pub mod dependent;
pub mod error;
pub mod flat;
pub mod gen;
pub mod hier;
pub mod inspection;
pub mod io;
pub mod model;
pub mod oracle;
pub mod scalar;

pub use num_rational::BigRational;

pub use dependent::{
    dependent_swap_check, dp_table, exact_dp, exact_dp_with_limit, independent_start, local_search, DpTable,
    LocalSearchResult, SwapCheck,
};
pub use error::{PlanError, Result, ValidationError, ValidationErrors, Warning};
pub use flat::{
    expected_cost, expected_cost_independent, is_locally_optimal, optimal_sequence, single_fault_sequence,
    swap_delta, LocalOptimality, PairCondition, Sequence,
};
pub use gen::{generate_tree, GenRanges};
pub use hier::{evaluate_plan, plan_component, plan_system, HierPlan, PlanAction, Planned};
pub use inspection::{
    expected_cost_independent_with_inspections, expected_cost_with_inspections, optimal_sequence_for_inspection_set,
    optimal_strategy, remaining_expected_cost, strategy_cost, SearchOptions, Strategy, StrategyFile, StrategyReport,
};
pub use io::{Model, ModelFile, PlanFile, Validated};
pub use model::{
    independent_joint_from, AtomicSpec, ComponentId, CostReport, FixKind, FlatSystem, HierNode, HistoryStep,
    JointTable, Mode, ModeEvent, ObservationHistory, World, DEFAULT_ENUMERATION_LIMIT, MAX_TABLE_COMPONENTS,
};
pub use scalar::Scalar;

pub type Flat = FlatSystem<f64>;
pub type Joint = JointTable<f64>;
pub type Tree = HierNode<f64>;
pub type Plan = HierPlan<f64>;

pub type ExactFlat = FlatSystem<BigRational>;
pub type ExactJoint = JointTable<BigRational>;
pub type ExactTree = HierNode<BigRational>;
pub type ExactPlan = HierPlan<BigRational>;

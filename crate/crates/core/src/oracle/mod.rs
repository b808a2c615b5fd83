//! Reference implementations used to check the planners: a protocol
//! executor, world enumeration, exhaustive search and Monte Carlo
//! simulation. They share no cost formulas with the planners.

pub mod brute;
pub mod exact;
pub mod exec;
pub mod monte_carlo;

pub use brute::{brute_force_flat, brute_force_hier, brute_force_sequence, BruteHier};
pub use exact::exact_expected_cost;
pub use exec::{execute, execute_cost, Event, EventError, ExecPlan, LeafDistribution, Prompt, Trace, Walker};
pub use monte_carlo::{monte_carlo, monte_carlo_in_pool, McEstimate};

//! Expected cost by enumerating every world and executing the plan in it.

use crate::error::{PlanError, Result};
use crate::model::{CostReport, DEFAULT_ENUMERATION_LIMIT};
use crate::oracle::exec::{execute_cost, ExecPlan, LeafDistribution};
use crate::scalar::Scalar;

/// `ec = sum_w P(w) cost(w)`; `ecf` conditions on the system being broken.
///
/// Independent distributions are enumerated over all `2^n` leaf worlds
/// (at most [`DEFAULT_ENUMERATION_LIMIT`] leaves); joint tables over their
/// listed worlds.
pub fn exact_expected_cost<S: Scalar>(plan: &ExecPlan<S>) -> Result<CostReport<S>> {
    let n = plan.leaf_count();
    let mut ec = S::zero();
    let mut fault = S::zero();
    let mut world = vec![false; n];
    match plan.distribution() {
        LeafDistribution::Independent(probs) => {
            if n > DEFAULT_ENUMERATION_LIMIT {
                return Err(PlanError::LimitExceeded {
                    what: "world enumeration",
                    size: n,
                    limit: DEFAULT_ENUMERATION_LIMIT,
                    hint: Some("use Monte Carlo simulation for large systems"),
                });
            }
            for mask in 1u64..(1 << n) {
                let mut prob = S::one();
                for (l, p) in probs.iter().enumerate() {
                    world[l] = mask >> l & 1 == 1;
                    prob = prob * if world[l] { p.clone() } else { S::one() - p.clone() };
                }
                if prob.is_zero() {
                    continue;
                }
                ec = ec + prob.clone() * execute_cost(plan, &world)?;
                fault = fault + prob;
            }
        }
        LeafDistribution::Joint(table) => {
            for (mask, prob) in table.entries() {
                if *mask == 0 || prob.is_zero() {
                    continue;
                }
                for (l, flag) in world.iter_mut().enumerate() {
                    *flag = mask >> l & 1 == 1;
                }
                ec = ec + prob.clone() * execute_cost(plan, &world)?;
                fault = fault + prob.clone();
            }
        }
    }
    CostReport::from_ec(ec, fault)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inspection::Strategy;
    use crate::model::{AtomicSpec, FlatSystem, HierNode};

    fn ids(names: &[&str]) -> Vec<crate::model::ComponentId> {
        names.iter().map(|s| (*s).into()).collect()
    }

    #[test]
    fn fix1_by_enumeration() {
        let flat = FlatSystem::independent(vec![AtomicSpec::new("A", 0.5_f64, 1.0), AtomicSpec::new("B", 0.5, 2.0)]).unwrap();
        let ab = ExecPlan::from_flat(&flat, &Strategy::new(ids(&["A", "B"]), [])).unwrap();
        let r = exact_expected_cost(&ab).unwrap();
        assert!((r.ec - 1.75).abs() < 1e-12);
        assert!((r.ecf - 7.0 / 3.0).abs() < 1e-12);
        let ba = ExecPlan::from_flat(&flat, &Strategy::new(ids(&["B", "A"]), [])).unwrap();
        assert!((exact_expected_cost(&ba).unwrap().ec - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fix3_and_fix6_by_enumeration() {
        let flat = FlatSystem::independent(vec![
            AtomicSpec::inspectable("A", 0.5_f64, 4.0, 1.0, 2.0),
            AtomicSpec::inspectable("B", 0.2, 3.0, 3.0, 3.0),
        ])
        .unwrap();
        let plan = ExecPlan::from_flat(&flat, &Strategy::new(ids(&["A", "B"]), ids(&["A"]))).unwrap();
        assert!((exact_expected_cost(&plan).unwrap().ec - 2.2).abs() < 1e-12);

        let fix6 = FlatSystem::independent(vec![AtomicSpec::inspectable("comp", 0.5_f64, 10.0, 2.0, 3.0)]).unwrap();
        let plan = ExecPlan::from_flat(&fix6, &Strategy::new(ids(&["comp"]), ids(&["comp"]))).unwrap();
        assert!((exact_expected_cost(&plan).unwrap().ec - 2.5).abs() < 1e-12);
    }

    #[test]
    fn fix5_by_enumeration() {
        let model = HierNode::internal(
            "R",
            20.0_f64,
            None,
            vec![
                HierNode::leaf("L1", 0.5, 4.0, Some(1.0)),
                HierNode::leaf("L2", 0.2, 3.0, Some(3.0)),
            ],
        );
        let plan = crate::hier::plan_system(&model, &Default::default()).unwrap().plan;
        let r = exact_expected_cost(&ExecPlan::from_hier(&model, &plan).unwrap()).unwrap();
        assert!((r.ec - 3.0).abs() < 1e-12);
        assert!((r.ecf - 5.0).abs() < 1e-12);
    }

    #[test]
    fn system_that_cannot_fail() {
        let flat = FlatSystem::independent(vec![AtomicSpec::new("A", 0.0_f64, 1.0)]).unwrap();
        let plan = ExecPlan::from_flat(&flat, &Strategy::new(ids(&["A"]), [])).unwrap();
        assert_eq!(exact_expected_cost(&plan), Err(PlanError::CannotFail));
    }
}

//! Replacement-only sequencing for flat systems.
//!
//! The expected cost of replacing components in order `C_1..C_n`, stopping
//! as soon as the system works, is `sum_k c_k * (1 - P(M_[k,n] = ok))`. Under
//! independent failures the optimal order sorts by `c (1 - p) / p`.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::model::{ComponentId, CostReport, FlatSystem, JointTable};
use crate::scalar::Scalar;

/// Replacement order: a permutation of a model's components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sequence {
    pub order: Vec<ComponentId>,
}

impl Sequence {
    pub fn new(order: Vec<ComponentId>) -> Self {
        Self { order }
    }

    pub fn of<I, T>(ids: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<ComponentId>,
    {
        Self::new(ids.into_iter().map(Into::into).collect())
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Maps the order onto positions in `components`, which it must permute.
    pub fn resolve(&self, components: &[ComponentId]) -> Result<Vec<usize>> {
        resolve_permutation(&self.order, components)
    }

    /// Copy with positions `j` and `j + 1` exchanged.
    pub fn transposed(&self, j: usize) -> Result<Self> {
        if j + 1 >= self.len() {
            return Err(PlanError::PositionOutOfRange {
                position: j,
                len: self.len(),
            });
        }
        let mut order = self.order.clone();
        order.swap(j, j + 1);
        Ok(Self { order })
    }
}

pub(crate) fn resolve_permutation(order: &[ComponentId], components: &[ComponentId]) -> Result<Vec<usize>> {
    if order.len() != components.len() {
        return Err(PlanError::NotAPermutation(format!(
            "expected {} components, got {}",
            components.len(),
            order.len()
        )));
    }
    let mut seen = HashSet::with_capacity(order.len());
    order
        .iter()
        .map(|id| {
            let pos = components
                .iter()
                .position(|c| c == id)
                .ok_or_else(|| PlanError::UnknownComponent(id.clone()))?;
            if !seen.insert(pos) {
                return Err(PlanError::NotAPermutation(format!("`{id}` listed twice")));
            }
            Ok(pos)
        })
        .collect()
}

/// Sort key `c (1 - p) / p`; `p = 0` maps to an infinite sentinel that
/// sorts after every finite ratio.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub(crate) enum RatioKey<S> {
    Finite(S),
    Infinite,
}

pub(crate) fn odds_ratio<S: Scalar>(cost: &S, p: &S) -> RatioKey<S> {
    if p.is_zero() {
        RatioKey::Infinite
    } else {
        RatioKey::Finite(cost.clone() * (S::one() - p.clone()) / p.clone())
    }
}

pub(crate) fn plain_ratio<S: Scalar>(cost: &S, p: &S) -> RatioKey<S> {
    if p.is_zero() {
        RatioKey::Infinite
    } else {
        RatioKey::Finite(cost.clone() / p.clone())
    }
}

/// Indices `0..keys.len()` stably sorted by ascending key.
pub(crate) fn stable_order_by<S: Scalar>(keys: &[RatioKey<S>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap_or(Ordering::Equal));
    order
}

/// `sum_k cost_k * (1 - prod_{i >= k} (1 - p_i))` over `order`, with the
/// suffix products accumulated from the back.
pub(crate) fn independent_sequence_cost<S: Scalar>(order: &[usize], costs: &[S], probs: &[S]) -> S {
    let mut suffix_ok = S::one();
    let mut total = S::zero();
    for &i in order.iter().rev() {
        suffix_ok = suffix_ok * (S::one() - probs[i].clone());
        total = total + costs[i].clone() * (S::one() - suffix_ok.clone());
    }
    total
}

fn check_costs<S>(costs: &[S], expected: usize) -> Result<()> {
    if costs.len() != expected {
        return Err(PlanError::CostLength {
            got: costs.len(),
            expected,
        });
    }
    Ok(())
}

/// Expected replacement cost of `seq` under an arbitrary joint table.
///
/// `costs` is aligned with `joint.components()`.
pub fn expected_cost<S: Scalar>(seq: &Sequence, joint: &JointTable<S>, costs: &[S]) -> Result<CostReport<S>> {
    check_costs(costs, joint.len())?;
    let order = seq.resolve(joint.components())?;
    let ec = sequence_cost_in_joint(&order, joint, costs);
    CostReport::from_ec(ec, joint.fault_probability())
}

pub(crate) fn sequence_cost_in_joint<S: Scalar>(order: &[usize], joint: &JointTable<S>, costs: &[S]) -> S {
    let mut suffix = 0u64;
    let mut total = S::zero();
    for &i in order.iter().rev() {
        suffix |= 1 << i;
        total = total + costs[i].clone() * (S::one() - joint.ok_marginal_mask(suffix));
    }
    total
}

/// Expected replacement cost of `seq` for an independent-failure system.
pub fn expected_cost_independent<S: Scalar>(seq: &Sequence, flat: &FlatSystem<S>) -> Result<CostReport<S>> {
    if !flat.is_independent() {
        return Err(PlanError::RequiresIndependence);
    }
    let order = seq.resolve(&flat.ids())?;
    let ec = independent_sequence_cost(&order, &flat.costs(), &flat.probabilities());
    CostReport::from_ec(ec, flat.fault_probability())
}

/// Globally optimal replacement order for independent failures: ascending
/// `c (1 - p) / p`, ties kept in input order.
pub fn optimal_sequence<S: Scalar>(flat: &FlatSystem<S>) -> Result<Sequence> {
    if !flat.is_independent() {
        return Err(PlanError::RequiresIndependence);
    }
    let keys: Vec<_> = flat.components().iter().map(|c| odds_ratio(&c.c, &c.p)).collect();
    let ids = flat.ids();
    Ok(Sequence::new(stable_order_by(&keys).into_iter().map(|i| ids[i].clone()).collect()))
}

/// Both sides of the adjacent-exchange condition at one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCondition<S> {
    /// Index of the first element of the pair (0-based).
    pub position: usize,
    /// `c_j [P(M_j ok, R) - P(M_j ok, M_j+1 ok, R)]`
    pub lhs: S,
    /// `c_j+1 [P(M_j+1 ok, R) - P(M_j ok, M_j+1 ok, R)]`
    pub rhs: S,
    pub holds: bool,
}

fn pair_condition<S: Scalar>(order: &[usize], j: usize, joint: &JointTable<S>, costs: &[S]) -> PairCondition<S> {
    let (a, b) = (order[j], order[j + 1]);
    let rest = order[j + 2..].iter().fold(0u64, |m, &i| m | 1 << i);
    let a_ok = joint.ok_marginal_mask(rest | 1 << a);
    let b_ok = joint.ok_marginal_mask(rest | 1 << b);
    let both_ok = joint.ok_marginal_mask(rest | 1 << a | 1 << b);
    let lhs = costs[a].clone() * (a_ok - both_ok.clone());
    let rhs = costs[b].clone() * (b_ok - both_ok);
    let holds = lhs.approx_le(&rhs);
    PairCondition {
        position: j,
        lhs,
        rhs,
        holds,
    }
}

/// `EC(seq) - EC(seq with positions j, j+1 exchanged)`; `j` is 0-based.
///
/// Positive means the exchange would lower the cost.
pub fn swap_delta<S: Scalar>(seq: &Sequence, j: usize, joint: &JointTable<S>, costs: &[S]) -> Result<S> {
    check_costs(costs, joint.len())?;
    let order = seq.resolve(joint.components())?;
    if j + 1 >= order.len() {
        return Err(PlanError::PositionOutOfRange {
            position: j,
            len: order.len(),
        });
    }
    let cond = pair_condition(&order, j, joint, costs);
    Ok(cond.lhs - cond.rhs)
}

/// Outcome of the adjacent-exchange check over a whole sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptimality<S> {
    pub pairs: Vec<PairCondition<S>>,
}

impl<S> LocalOptimality<S> {
    pub fn is_optimal(&self) -> bool {
        self.pairs.iter().all(|p| p.holds)
    }

    /// 0-based index of the first pair whose exchange would lower the cost.
    pub fn first_violation(&self) -> Option<usize> {
        self.pairs.iter().find(|p| !p.holds).map(|p| p.position)
    }
}

/// Checks every adjacent pair (slack [`Scalar::tolerance`]).
pub fn is_locally_optimal<S: Scalar>(
    seq: &Sequence,
    joint: &JointTable<S>,
    costs: &[S],
) -> Result<LocalOptimality<S>> {
    check_costs(costs, joint.len())?;
    let order = seq.resolve(joint.components())?;
    let pairs = (0..order.len().saturating_sub(1))
        .map(|j| pair_condition(&order, j, joint, costs))
        .collect();
    Ok(LocalOptimality { pairs })
}

/// Optimal order when exactly one component is broken: ascending `c / p`.
pub fn single_fault_sequence<S: Scalar>(joint: &JointTable<S>, costs: &[S]) -> Result<Sequence> {
    check_costs(costs, joint.len())?;
    if let Some(count) = joint.single_fault_violation() {
        return Err(PlanError::NotSingleFault(count));
    }
    let priors = joint.broken_marginals();
    let keys: Vec<_> = costs.iter().zip(&priors).map(|(c, p)| plain_ratio(c, p)).collect();
    let ids = joint.components();
    Ok(Sequence::new(stable_order_by(&keys).into_iter().map(|i| ids[i].clone()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomicSpec, World};

    fn fix1() -> FlatSystem<f64> {
        FlatSystem::independent(vec![AtomicSpec::new("A", 0.5, 1.0), AtomicSpec::new("B", 0.5, 2.0)]).unwrap()
    }

    fn fix2() -> FlatSystem<f64> {
        FlatSystem::independent(vec![
            AtomicSpec::new("A", 0.1, 5.0),
            AtomicSpec::new("B", 0.5, 4.0),
            AtomicSpec::new("C", 0.9, 9.0),
        ])
        .unwrap()
    }

    fn fix4() -> JointTable<f64> {
        JointTable::new(
            vec!["A".into(), "B".into()],
            vec![
                (World::all_ok(), 0.4),
                (World::broken(["A"]), 0.3),
                (World::broken(["B"]), 0.2),
                (World::broken(["A", "B"]), 0.1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn fix4_costs() {
        let joint = fix4();
        let ab = expected_cost(&Sequence::of(["A", "B"]), &joint, &[1.0, 2.0]).unwrap();
        let ba = expected_cost(&Sequence::of(["B", "A"]), &joint, &[1.0, 2.0]).unwrap();
        assert!((ab.ec - 1.2).abs() < 1e-12);
        assert!((ba.ec - 1.6).abs() < 1e-12);
    }

    #[test]
    fn fix1_and_fix2_costs() {
        let r = expected_cost_independent(&Sequence::of(["A", "B"]), &fix1()).unwrap();
        assert!((r.ec - 1.75).abs() < 1e-12);
        assert!((r.ecf - 7.0 / 3.0).abs() < 1e-12);
        let r = expected_cost_independent(&Sequence::of(["C", "B", "A"]), &fix2()).unwrap();
        assert!((r.ec - 11.295).abs() < 1e-12);
    }

    #[test]
    fn single_component_cost_is_p_times_c() {
        let sys = FlatSystem::independent(vec![AtomicSpec::new("X", 0.3_f64, 7.0)]).unwrap();
        let r = expected_cost_independent(&Sequence::of(["X"]), &sys).unwrap();
        assert!((r.ec - 2.1).abs() < 1e-12);
        assert!((r.ecf - 7.0).abs() < 1e-12);
    }

    #[test]
    fn certain_component_first_costs_its_price() {
        let sys = FlatSystem::independent(vec![
            AtomicSpec::new("X", 1.0_f64, 7.0),
            AtomicSpec::new("Y", 0.0, 3.0),
            AtomicSpec::new("Z", 0.0, 4.0),
        ])
        .unwrap();
        let r = expected_cost_independent(&Sequence::of(["X", "Y", "Z"]), &sys).unwrap();
        assert!((r.ec - 7.0).abs() < 1e-12);
        // Anything placed before the certain failure is paid for as well.
        let r = expected_cost_independent(&Sequence::of(["Y", "X", "Z"]), &sys).unwrap();
        assert!((r.ec - 10.0).abs() < 1e-12);
    }

    #[test]
    fn cannot_fail_is_an_error() {
        let sys = FlatSystem::independent(vec![AtomicSpec::new("X", 0.0, 1.0)]).unwrap();
        assert_eq!(
            expected_cost_independent(&Sequence::of(["X"]), &sys),
            Err(PlanError::CannotFail)
        );
    }

    #[test]
    fn optimal_sequence_examples() {
        assert_eq!(optimal_sequence(&fix1()).unwrap(), Sequence::of(["A", "B"]));
        assert_eq!(optimal_sequence(&fix2()).unwrap(), Sequence::of(["C", "B", "A"]));
        let one = FlatSystem::independent(vec![AtomicSpec::new("X", 0.2, 1.0)]).unwrap();
        assert_eq!(optimal_sequence(&one).unwrap(), Sequence::of(["X"]));
    }

    #[test]
    fn zero_probability_sorts_last_and_certain_first() {
        let sys = FlatSystem::independent(vec![
            AtomicSpec::new("never", 0.0, 0.5),
            AtomicSpec::new("mid", 0.5, 1.0),
            AtomicSpec::new("sure", 1.0, 100.0),
        ])
        .unwrap();
        assert_eq!(optimal_sequence(&sys).unwrap(), Sequence::of(["sure", "mid", "never"]));
    }

    #[test]
    fn equal_ratios_keep_input_order() {
        let sys = FlatSystem::independent(vec![
            AtomicSpec::new("x", 0.5, 2.0),
            AtomicSpec::new("y", 0.5, 2.0),
            AtomicSpec::new("z", 0.5, 2.0),
        ])
        .unwrap();
        assert_eq!(optimal_sequence(&sys).unwrap(), Sequence::of(["x", "y", "z"]));
    }

    #[test]
    fn swap_delta_examples() {
        let joint = fix1().independent_joint(20).unwrap();
        let d = swap_delta(&Sequence::of(["B", "A"]), 0, &joint, &[1.0, 2.0]).unwrap();
        assert!((d - 0.25).abs() < 1e-12);
        let d = swap_delta(&Sequence::of(["A", "B"]), 0, &joint, &[1.0, 2.0]).unwrap();
        assert!((d + 0.25).abs() < 1e-12);
        let twins = JointTable::new(
            vec!["x".into(), "y".into()],
            vec![
                (World::all_ok(), 0.36),
                (World::broken(["x"]), 0.24),
                (World::broken(["y"]), 0.24),
                (World::broken(["x", "y"]), 0.16),
            ],
        )
        .unwrap();
        let d = swap_delta(&Sequence::of(["x", "y"]), 0, &twins, &[3.0_f64, 3.0]).unwrap();
        assert!(d.abs() < 1e-12);
        assert!(matches!(
            swap_delta(&Sequence::of(["A", "B"]), 1, &joint, &[1.0, 2.0]),
            Err(PlanError::PositionOutOfRange { .. })
        ));
    }

    #[test]
    fn local_optimality_examples() {
        let joint = fix4();
        let verdict = is_locally_optimal(&Sequence::of(["A", "B"]), &joint, &[1.0, 2.0]).unwrap();
        assert!(verdict.is_optimal());
        assert!((verdict.pairs[0].lhs - 0.2).abs() < 1e-12);
        assert!((verdict.pairs[0].rhs - 0.6).abs() < 1e-12);
        let verdict = is_locally_optimal(&Sequence::of(["B", "A"]), &joint, &[1.0, 2.0]).unwrap();
        assert!(!verdict.is_optimal());
        assert_eq!(verdict.first_violation(), Some(0));

        let single = JointTable::new(vec!["A".into()], vec![(World::broken(["A"]), 1.0)]).unwrap();
        assert!(is_locally_optimal(&Sequence::of(["A"]), &single, &[4.0]).unwrap().is_optimal());
    }

    #[test]
    fn single_fault_examples() {
        let joint = JointTable::new(
            vec!["A".into(), "B".into()],
            vec![(World::broken(["A"]), 0.3), (World::broken(["B"]), 0.7)],
        )
        .unwrap();
        assert_eq!(single_fault_sequence(&joint, &[1.0, 2.0]).unwrap(), Sequence::of(["B", "A"]));
        let ba = expected_cost(&Sequence::of(["B", "A"]), &joint, &[1.0_f64, 2.0]).unwrap().ec;
        let ab = expected_cost(&Sequence::of(["A", "B"]), &joint, &[1.0_f64, 2.0]).unwrap().ec;
        assert!((ba - 2.3).abs() < 1e-12 && (ab - 2.4).abs() < 1e-12);

        let joint = JointTable::new(
            vec!["A".into(), "B".into()],
            vec![(World::broken(["A"]), 0.5), (World::broken(["B"]), 0.5)],
        )
        .unwrap();
        assert_eq!(single_fault_sequence(&joint, &[3.0, 1.0]).unwrap(), Sequence::of(["B", "A"]));
        assert_eq!(single_fault_sequence(&joint, &[1.0, 1.0]).unwrap(), Sequence::of(["A", "B"]));

        assert_eq!(single_fault_sequence(&fix4(), &[1.0, 2.0]), Err(PlanError::NotSingleFault(0)));
    }

    #[test]
    fn bad_sequences_are_rejected() {
        let joint = fix4();
        assert!(matches!(
            expected_cost(&Sequence::of(["A"]), &joint, &[1.0, 2.0]),
            Err(PlanError::NotAPermutation(_))
        ));
        assert!(matches!(
            expected_cost(&Sequence::of(["A", "A"]), &joint, &[1.0, 2.0]),
            Err(PlanError::NotAPermutation(_))
        ));
        assert!(matches!(
            expected_cost(&Sequence::of(["A", "Q"]), &joint, &[1.0, 2.0]),
            Err(PlanError::UnknownComponent(_))
        ));
        assert!(matches!(
            expected_cost(&Sequence::of(["A", "B"]), &joint, &[1.0]),
            Err(PlanError::CostLength { .. })
        ));
    }
}

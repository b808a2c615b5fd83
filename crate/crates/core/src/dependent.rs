//! Replacement-only sequencing under dependent failures given as an explicit
//! joint table: adjacent-exchange checks, local search to quiescence, and an
//! exact dynamic program over component subsets.
//!
//! Probabilities that a belief network would supply come from marginalizing
//! the table directly.

use crate::error::{PlanError, Result};
use crate::flat::{odds_ratio, sequence_cost_in_joint, stable_order_by, Sequence};
use crate::model::{ComponentId, CostReport, JointTable, ModeEvent, DEFAULT_ENUMERATION_LIMIT};
use crate::scalar::Scalar;

fn check_costs<S>(costs: &[S], joint_len: usize) -> Result<()> {
    if costs.len() != joint_len {
        return Err(PlanError::CostLength {
            got: costs.len(),
            expected: joint_len,
        });
    }
    Ok(())
}

/// Ratio-sort start: treat the marginal priors as if failures were
/// independent.
pub fn independent_start<S: Scalar>(joint: &JointTable<S>, costs: &[S]) -> Result<Sequence> {
    check_costs(costs, joint.len())?;
    let priors = joint.broken_marginals();
    let keys: Vec<_> = costs.iter().zip(&priors).map(|(c, p)| odds_ratio(c, p)).collect();
    let ids = joint.components();
    Ok(Sequence::new(stable_order_by(&keys).into_iter().map(|i| ids[i].clone()).collect()))
}

/// Verdict of the conditional exchange check at one adjacent pair.
#[derive(Debug, Clone, PartialEq)]
pub enum SwapCheck<S> {
    Holds { lhs: S, rhs: S },
    Violated { lhs: S, rhs: S },
    /// `P(R_ok) = 0`: the later components can never all be ok, so the
    /// pair's order does not matter.
    Vacuous,
}

impl<S> SwapCheck<S> {
    pub fn holds(&self) -> bool {
        !matches!(self, SwapCheck::Violated { .. })
    }
}

/// Conditional exchange check for positions `j`, `j + 1` (0-based), with
/// `R_ok` the event that every component after `j + 1` is ok.
///
/// Conditioning divides both sides of the unconditional condition by
/// `P(R_ok)`, so the verdict agrees with the sign of
/// [`crate::flat::swap_delta`].
pub fn dependent_swap_check<S: Scalar>(
    seq: &Sequence,
    j: usize,
    joint: &JointTable<S>,
    costs: &[S],
) -> Result<SwapCheck<S>> {
    check_costs(costs, joint.len())?;
    let order = seq.resolve(joint.components())?;
    if j + 1 >= order.len() {
        return Err(PlanError::PositionOutOfRange {
            position: j,
            len: order.len(),
        });
    }
    let ids = joint.components();
    let (a, b) = (&ids[order[j]], &ids[order[j + 1]]);
    let rest = ModeEvent::all_ok(order[j + 2..].iter().map(|&i| ids[i].clone()));

    // First query: P(M_j ok | R), P(M_j+1 ok | R).
    let Some(a_ok) = joint.conditional(&ModeEvent::all_ok([a.clone()]), &rest)? else {
        return Ok(SwapCheck::Vacuous);
    };
    let b_ok = joint
        .conditional(&ModeEvent::all_ok([b.clone()]), &rest)?
        .expect("same evidence as above");
    // Second query: P(M_j+1 ok | M_j ok, R).
    let both_ok = match joint.conditional(&ModeEvent::all_ok([b.clone()]), &rest.clone().and(&ModeEvent::all_ok([a.clone()])))? {
        Some(b_given_a) => b_given_a * a_ok.clone(),
        None => S::zero(),
    };
    let lhs = costs[order[j]].clone() * (a_ok - both_ok.clone());
    let rhs = costs[order[j + 1]].clone() * (b_ok - both_ok);
    Ok(if lhs.approx_le(&rhs) {
        SwapCheck::Holds { lhs, rhs }
    } else {
        SwapCheck::Violated { lhs, rhs }
    })
}

/// Result of [`local_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchResult<S> {
    pub sequence: Sequence,
    pub swaps: usize,
    /// Expected cost after each accepted swap, starting with the start cost.
    pub cost_trace: Vec<S>,
}

/// Adjacent-exchange descent to quiescence.
///
/// Sweeps left to right and exchanges the first pair whose exchange lowers
/// the expected cost by more than [`Scalar::improvement`], then restarts the
/// sweep. Each accepted swap strictly lowers the cost, so the search stops.
pub fn local_search<S: Scalar>(joint: &JointTable<S>, costs: &[S], start: &Sequence) -> Result<LocalSearchResult<S>> {
    check_costs(costs, joint.len())?;
    let mut order = start.resolve(joint.components())?;
    let mut cost = sequence_cost_in_joint(&order, joint, costs);
    let mut cost_trace = vec![cost.clone()];
    let mut swaps = 0;
    'sweep: loop {
        for j in 0..order.len().saturating_sub(1) {
            let (a, b) = (order[j], order[j + 1]);
            let rest = order[j + 2..].iter().fold(0u64, |m, &i| m | 1 << i);
            let a_ok = joint.ok_marginal_mask(rest | 1 << a);
            let b_ok = joint.ok_marginal_mask(rest | 1 << b);
            let both_ok = joint.ok_marginal_mask(rest | 1 << a | 1 << b);
            let delta = costs[a].clone() * (a_ok - both_ok.clone()) - costs[b].clone() * (b_ok - both_ok);
            if delta > S::improvement() {
                order.swap(j, j + 1);
                swaps += 1;
                cost = sequence_cost_in_joint(&order, joint, costs);
                cost_trace.push(cost.clone());
                continue 'sweep;
            }
        }
        break;
    }
    let ids = joint.components();
    Ok(LocalSearchResult {
        sequence: Sequence::new(order.into_iter().map(|i| ids[i].clone()).collect()),
        swaps,
        cost_trace,
    })
}

/// Optimal suffix costs over remaining-component subsets.
///
/// `cost[S]` is the least expected cost of repairing the components in `S`
/// (bitmask over the joint's components) when everything else is already
/// fixed; `first[S]` is the component to replace first.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable<S> {
    components: Vec<ComponentId>,
    cost: Vec<S>,
    first: Vec<Option<usize>>,
}

impl<S: Scalar> DpTable<S> {
    pub fn len(&self) -> usize {
        self.cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.is_empty()
    }

    pub fn cost(&self, subset: u64) -> &S {
        &self.cost[subset as usize]
    }

    pub fn first(&self, subset: u64) -> Option<&ComponentId> {
        self.first[subset as usize].map(|i| &self.components[i])
    }

    /// Follows the argmin chain from the full set.
    pub fn sequence(&self) -> Sequence {
        let mut remaining = (self.cost.len() - 1) as u64;
        let mut order = Vec::new();
        while let Some(i) = self.first[remaining as usize] {
            order.push(self.components[i].clone());
            remaining &= !(1 << i);
        }
        Sequence::new(order)
    }
}

/// Builds the subset table.
///
/// `f(S) = min_{j in S} c_j (1 - P(M_S = ok)) + f(S \ {j})`, `f({}) = 0`.
/// Ties keep the lowest component index.
pub fn dp_table<S: Scalar>(joint: &JointTable<S>, costs: &[S], limit: usize) -> Result<DpTable<S>> {
    check_costs(costs, joint.len())?;
    let n = joint.len();
    if n > limit {
        return Err(PlanError::LimitExceeded {
            what: "subset dynamic program",
            size: n,
            limit,
            hint: Some("use local search instead"),
        });
    }
    let ok = joint.ok_marginal_table(limit)?;
    let size = 1usize << n;
    let mut cost = vec![S::zero(); size];
    let mut first = vec![None; size];
    for subset in 1..size {
        let still_broken = S::one() - ok[subset].clone();
        let mut best: Option<(S, usize)> = None;
        for j in (0..n).filter(|j| subset >> j & 1 == 1) {
            let candidate = costs[j].clone() * still_broken.clone() + cost[subset ^ (1 << j)].clone();
            if best.as_ref().is_none_or(|(b, _)| candidate < *b) {
                best = Some((candidate, j));
            }
        }
        let (c, j) = best.expect("nonempty subset");
        cost[subset] = c;
        first[subset] = Some(j);
    }
    Ok(DpTable {
        components: joint.components().to_vec(),
        cost,
        first,
    })
}

/// Globally optimal replacement order under an arbitrary joint table.
pub fn exact_dp<S: Scalar>(joint: &JointTable<S>, costs: &[S]) -> Result<(Sequence, CostReport<S>)> {
    exact_dp_with_limit(joint, costs, DEFAULT_ENUMERATION_LIMIT)
}

pub fn exact_dp_with_limit<S: Scalar>(
    joint: &JointTable<S>,
    costs: &[S],
    limit: usize,
) -> Result<(Sequence, CostReport<S>)> {
    let table = dp_table(joint, costs, limit)?;
    let full = (table.len() - 1) as u64;
    let report = CostReport::from_ec(table.cost(full).clone(), joint.fault_probability())?;
    Ok((table.sequence(), report))
}

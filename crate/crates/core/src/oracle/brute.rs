//! Exhaustive search over orders and inspection sets.
//!
//! Candidates are scored through the joint table (or, for trees, by
//! enumerating child worlds), never through the ratio rules.

use itertools::Itertools;

use crate::error::{PlanError, Result};
use crate::flat::Sequence;
use crate::hier::{HierPlan, PlanAction};
use crate::inspection::{expected_cost_with_inspections, Strategy, StrategyReport};
use crate::model::{FlatSystem, HierNode, JointTable, DEFAULT_ENUMERATION_LIMIT};
use crate::scalar::Scalar;

/// Largest system searched over all `n!` replacement orders.
pub const MAX_BRUTE_ORDER: usize = 9;
/// Largest system searched over all orders and inspection sets.
pub const MAX_BRUTE_INSPECT: usize = 6;
/// Largest branching factor searched per tree node.
pub const MAX_BRUTE_BRANCHING: usize = 6;

fn too_large(what: &'static str, size: usize, limit: usize) -> PlanError {
    PlanError::LimitExceeded {
        what,
        size,
        limit,
        hint: None,
    }
}

/// Cheapest replacement order under a joint table. Ties keep the first
/// order in lexicographic index order.
pub fn brute_force_sequence<S: Scalar>(joint: &JointTable<S>, costs: &[S]) -> Result<(Sequence, S)> {
    let n = joint.len();
    if costs.len() != n {
        return Err(PlanError::CostLength {
            got: costs.len(),
            expected: n,
        });
    }
    if n > MAX_BRUTE_ORDER {
        return Err(too_large("exhaustive order search", n, MAX_BRUTE_ORDER));
    }
    let ok = joint.ok_marginal_table(DEFAULT_ENUMERATION_LIMIT)?;
    let mut best: Option<(Vec<usize>, S)> = None;
    for perm in (0..n).permutations(n) {
        let mut suffix = 0usize;
        let mut cost = S::zero();
        for &i in perm.iter().rev() {
            suffix |= 1 << i;
            cost = cost + costs[i].clone() * (S::one() - ok[suffix].clone());
        }
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((perm, cost));
        }
    }
    let (order, cost) = best.expect("at least one order");
    let ids = joint.components();
    Ok((Sequence::new(order.into_iter().map(|i| ids[i].clone()).collect()), cost))
}

/// Cheapest strategy over every order and every subset of the components
/// that have both `d` and `h`. Smaller subsets win exact ties.
pub fn brute_force_flat<S: Scalar>(flat: &FlatSystem<S>) -> Result<StrategyReport<S>> {
    let n = flat.len();
    let inspectable: Vec<usize> = flat
        .components()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.d.is_some() && c.h.is_some())
        .map(|(i, _)| i)
        .collect();
    let limit = if inspectable.is_empty() { MAX_BRUTE_ORDER } else { MAX_BRUTE_INSPECT };
    if n > limit {
        return Err(too_large("exhaustive strategy search", n, limit));
    }
    let joint = flat.distribution(DEFAULT_ENUMERATION_LIMIT)?;
    let ids = flat.ids();
    let mut best: Option<StrategyReport<S>> = None;
    let mut subsets: Vec<Vec<usize>> = inspectable.iter().copied().powerset().collect();
    subsets.sort_by_key(Vec::len);
    for subset in &subsets {
        for perm in (0..n).permutations(n) {
            let strategy = Strategy::new(
                perm.iter().map(|&i| ids[i].clone()).collect(),
                subset.iter().map(|&i| ids[i].clone()),
            );
            let cost = expected_cost_with_inspections(&strategy, &joint, flat.components())?;
            if best.as_ref().is_none_or(|b| cost.ec < b.cost.ec.clone() - S::improvement()) {
                best = Some(StrategyReport { strategy, cost });
            }
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Optimal tree plan found by exhaustive search at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteHier<S> {
    pub plan: HierPlan<S>,
}

/// Searches every order and inspection subset at each internal node,
/// scoring each candidate by enumerating the children's joint states.
///
/// Under independent leaves the cost of handling a broken child does not
/// depend on how it was reached, so the best nested plans combine node by
/// node.
pub fn brute_force_hier<S: Scalar>(root: &HierNode<S>) -> Result<BruteHier<S>> {
    let (errors, _) = root.validate();
    errors.into_result()?;
    let branching = root.max_branching();
    if branching > MAX_BRUTE_BRANCHING {
        return Err(too_large("exhaustive tree search branching", branching, MAX_BRUTE_BRANCHING));
    }
    Ok(BruteHier { plan: best_plan(root) })
}

fn best_plan<S: Scalar>(node: &HierNode<S>) -> HierPlan<S> {
    let p = node.failure_probability();
    if node.is_leaf() {
        return HierPlan::replace(node.id.clone(), node.c.clone(), p);
    }
    let children: Vec<HierPlan<S>> = node.children.iter().map(best_plan).collect();
    if p.is_zero() {
        return HierPlan::replace(node.id.clone(), node.c.clone(), p);
    }
    let m = children.len();
    let probs: Vec<S> = children.iter().map(|c| c.p.clone()).collect();
    let inspectable: Vec<usize> = (0..m).filter(|&i| node.children[i].d.is_some()).collect();

    // Child worlds with at least one broken child, with their probabilities.
    let worlds: Vec<(usize, S)> = (1usize..1 << m)
        .map(|w| {
            let prob = (0..m).fold(S::one(), |acc, i| {
                acc * if w >> i & 1 == 1 {
                    probs[i].clone()
                } else {
                    S::one() - probs[i].clone()
                }
            });
            (w, prob)
        })
        .collect();

    let mut best: Option<(S, Vec<usize>, Vec<usize>)> = None;
    for subset in inspectable.iter().copied().powerset() {
        let inspected = subset.iter().fold(0usize, |m, &i| m | 1 << i);
        for perm in (0..m).permutations(m) {
            let mut total = S::zero();
            for (w, prob) in &worlds {
                let mut broken = *w;
                let mut cost = S::zero();
                for &i in &perm {
                    if broken == 0 {
                        break;
                    }
                    let bit = 1 << i;
                    if inspected & bit != 0 {
                        cost = cost + node.children[i].d.clone().expect("inspectable");
                        if broken & bit != 0 {
                            cost = cost + children[i].h.clone();
                        }
                    } else {
                        cost = cost + node.children[i].c.clone();
                    }
                    broken &= !bit;
                }
                total = total + prob.clone() * cost;
            }
            let h = total / p.clone();
            let better = match &best {
                None => true,
                Some((b, s, _)) => h < b.clone() - S::improvement() || (h.approx_eq(b) && subset.len() < s.len()),
            };
            if better {
                best = Some((h, subset.clone(), perm));
            }
        }
    }
    let (h, subset, perm) = best.expect("at least one candidate");
    if h >= node.c.clone() - S::improvement() {
        return HierPlan::replace(node.id.clone(), node.c.clone(), p);
    }
    let in_order: Vec<usize> = perm.iter().copied().filter(|i| subset.contains(i)).collect();
    let mut children: Vec<Option<HierPlan<S>>> = children.into_iter().map(Some).collect();
    HierPlan {
        node: node.id.clone(),
        action: PlanAction::Strategy {
            order: perm.iter().map(|&i| node.children[i].id.clone()).collect(),
            inspect: in_order.iter().map(|&i| node.children[i].id.clone()).collect(),
            children: in_order.iter().map(|&i| children[i].take().expect("once")).collect(),
        },
        ec: h.clone() * p.clone(),
        h,
        p,
    }
}

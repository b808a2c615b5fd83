//! Strategies that mix replacement with inspection.
//!
//! Inspecting a component costs `d`; if it is found broken it is repaired at
//! `h`. The cost of a strategy is the replacement-only formula with `c`
//! swapped for `d` on inspected components, plus a position-independent
//! term `h * P(M = b)` per inspected component.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::flat::{independent_sequence_cost, odds_ratio, resolve_permutation, stable_order_by, Sequence};
use crate::model::{AtomicSpec, ComponentId, CostReport, FlatSystem, JointTable, DEFAULT_ENUMERATION_LIMIT};
use crate::scalar::Scalar;

/// Order over all components plus the subset that is inspected first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub order: Vec<ComponentId>,
    pub inspect: BTreeSet<ComponentId>,
}

impl Strategy {
    pub fn new(order: Vec<ComponentId>, inspect: impl IntoIterator<Item = ComponentId>) -> Self {
        Self {
            order,
            inspect: inspect.into_iter().collect(),
        }
    }

    pub fn replace_only(seq: Sequence) -> Self {
        Self {
            order: seq.order,
            inspect: BTreeSet::new(),
        }
    }

    pub fn sequence(&self) -> Sequence {
        Sequence::new(self.order.clone())
    }

    pub fn is_inspected(&self, id: &ComponentId) -> bool {
        self.inspect.contains(id)
    }

    /// Inspected ids in the order they are visited.
    pub fn inspect_in_order(&self) -> Vec<ComponentId> {
        self.order.iter().filter(|id| self.inspect.contains(*id)).cloned().collect()
    }
}

/// Wire form `{"order": [...], "inspect": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub order: Vec<ComponentId>,
    #[serde(default)]
    pub inspect: Vec<ComponentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ec: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecf: Option<f64>,
}

impl From<&Strategy> for StrategyFile {
    fn from(s: &Strategy) -> Self {
        Self {
            order: s.order.clone(),
            inspect: s.inspect_in_order(),
            ec: None,
            ecf: None,
        }
    }
}

impl From<StrategyFile> for Strategy {
    fn from(f: StrategyFile) -> Self {
        Strategy::new(f.order, f.inspect)
    }
}

/// Effective per-component costs of a strategy: `cd` (what is paid when
/// the component's turn comes) and the trailing repair terms.
struct Resolved<S> {
    order: Vec<usize>,
    cd: Vec<S>,
    /// `h_i` for inspected components, aligned with the component list.
    repair: Vec<Option<S>>,
}

fn resolve<S: Scalar>(
    strat: &Strategy,
    specs: &[AtomicSpec<S>],
    ids: &[ComponentId],
    h_override: Option<&[S]>,
    need_h: bool,
) -> Result<Resolved<S>> {
    let order = resolve_permutation(&strat.order, ids)?;
    for id in &strat.inspect {
        if !ids.contains(id) {
            return Err(PlanError::UnknownComponent(id.clone()));
        }
    }
    let mut cd = Vec::with_capacity(specs.len());
    let mut repair = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        if strat.inspect.contains(&spec.id) {
            let d = spec
                .d
                .clone()
                .ok_or_else(|| PlanError::MissingInspectionCost(spec.id.clone()))?;
            let h = h_override.map(|hs| hs[i].clone()).or_else(|| spec.h.clone());
            if need_h && h.is_none() {
                return Err(PlanError::MissingRepairCost(spec.id.clone()));
            }
            cd.push(d);
            repair.push(h);
        } else {
            cd.push(spec.c.clone());
            repair.push(None);
        }
    }
    Ok(Resolved { order, cd, repair })
}

/// Expected cost of a strategy under an arbitrary joint table.
///
/// `specs` supplies costs by id and must cover `joint.components()`.
pub fn expected_cost_with_inspections<S: Scalar>(
    strat: &Strategy,
    joint: &JointTable<S>,
    specs: &[AtomicSpec<S>],
) -> Result<CostReport<S>> {
    let aligned = align_specs(joint.components(), specs)?;
    let r = resolve(strat, &aligned, joint.components(), None, true)?;
    let priors = joint.broken_marginals();
    let mut suffix = 0u64;
    let mut ec = S::zero();
    for &i in r.order.iter().rev() {
        suffix |= 1 << i;
        ec = ec + r.cd[i].clone() * (S::one() - joint.ok_marginal_mask(suffix));
    }
    for (h, p) in r.repair.iter().zip(&priors) {
        if let Some(h) = h {
            ec = ec + h.clone() * p.clone();
        }
    }
    CostReport::from_ec(ec, joint.fault_probability())
}

fn align_specs<S: Scalar>(ids: &[ComponentId], specs: &[AtomicSpec<S>]) -> Result<Vec<AtomicSpec<S>>> {
    if specs.len() != ids.len() {
        return Err(PlanError::CostLength {
            got: specs.len(),
            expected: ids.len(),
        });
    }
    ids.iter()
        .map(|id| {
            specs
                .iter()
                .find(|s| &s.id == id)
                .cloned()
                .ok_or_else(|| PlanError::UnknownComponent(id.clone()))
        })
        .collect()
}

/// Closed-form strategy cost for independent failures.
pub fn expected_cost_independent_with_inspections<S: Scalar>(
    strat: &Strategy,
    flat: &FlatSystem<S>,
) -> Result<CostReport<S>> {
    if !flat.is_independent() {
        return Err(PlanError::RequiresIndependence);
    }
    let r = resolve(strat, flat.components(), &flat.ids(), None, true)?;
    let probs = flat.probabilities();
    let ec = independent_sequence_cost(&r.order, &r.cd, &probs) + trailing_terms(&r.repair, &probs);
    CostReport::from_ec(ec, flat.fault_probability())
}

/// Cost of a strategy on any flat system: closed form when independent,
/// table marginalization otherwise.
pub fn strategy_cost<S: Scalar>(strat: &Strategy, flat: &FlatSystem<S>) -> Result<CostReport<S>> {
    match flat.joint() {
        None => expected_cost_independent_with_inspections(strat, flat),
        Some(joint) => expected_cost_with_inspections(strat, joint, flat.components()),
    }
}

fn trailing_terms<S: Scalar>(repair: &[Option<S>], probs: &[S]) -> S {
    repair
        .iter()
        .zip(probs)
        .filter_map(|(h, p)| h.as_ref().map(|h| h.clone() * p.clone()))
        .sum()
}

/// Best order for a fixed inspected subset: ascending `cd (1 - p) / p`.
pub fn optimal_sequence_for_inspection_set<S: Scalar>(
    inspect: &BTreeSet<ComponentId>,
    flat: &FlatSystem<S>,
) -> Result<Strategy> {
    if !flat.is_independent() {
        return Err(PlanError::RequiresIndependence);
    }
    let probe = Strategy {
        order: flat.ids(),
        inspect: inspect.clone(),
    };
    let r = resolve(&probe, flat.components(), &flat.ids(), None, false)?;
    let keys: Vec<_> = r.cd.iter().zip(flat.components()).map(|(cd, c)| odds_ratio(cd, &c.p)).collect();
    let ids = flat.ids();
    Ok(Strategy {
        order: stable_order_by(&keys).into_iter().map(|i| ids[i].clone()).collect(),
        inspect: inspect.clone(),
    })
}

/// Options for the inspection-subset search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Maximum number of inspectable components (`2^limit` subsets).
    pub limit: usize,
    /// Skip subsets whose cheap lower bound cannot beat the incumbent.
    pub prune: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            limit: DEFAULT_ENUMERATION_LIMIT,
            prune: false,
        }
    }
}

/// A strategy together with its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport<S> {
    pub strategy: Strategy,
    pub cost: CostReport<S>,
}

impl<S: Scalar> StrategyReport<S> {
    pub fn to_file(&self) -> StrategyFile {
        StrategyFile {
            ec: Some(self.cost.ec.to_f64_lossy()),
            ecf: Some(self.cost.ecf.to_f64_lossy()),
            ..StrategyFile::from(&self.strategy)
        }
    }
}

/// Subset masks over `m` bits, by ascending popcount then ascending value.
pub(crate) fn subsets_by_popcount(m: usize) -> impl Iterator<Item = u64> {
    (0..=m).flat_map(move |k| {
        let mut next = if k == 0 { Some(0u64) } else { Some((1u64 << k) - 1) };
        std::iter::from_fn(move || {
            let current = next?;
            next = if current == 0 {
                None
            } else {
                // Gosper's hack: next larger integer with the same popcount.
                let c = current & current.wrapping_neg();
                let r = current + c;
                let candidate = (((r ^ current) >> 2) / c) | r;
                (candidate < 1u64 << m).then_some(candidate)
            };
            Some(current)
        })
    })
}

/// Globally optimal strategy for independent failures.
///
/// Every subset of the inspectable components (those with `d`, and `h`
/// either on the spec or in `h_override`) is tried with its optimal order.
/// Ties keep the earlier subset in popcount order, so not inspecting wins
/// exact ties.
pub fn optimal_strategy<S: Scalar>(
    flat: &FlatSystem<S>,
    h_override: Option<&[S]>,
    options: &SearchOptions,
) -> Result<StrategyReport<S>> {
    if !flat.is_independent() {
        return Err(PlanError::RequiresIndependence);
    }
    let n = flat.len();
    if let Some(hs) = h_override {
        if hs.len() != n {
            return Err(PlanError::CostLength {
                got: hs.len(),
                expected: n,
            });
        }
    }
    let specs = flat.components();
    let probs = flat.probabilities();
    let repair: Vec<Option<S>> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.d.as_ref()?;
            h_override.map(|hs| hs[i].clone()).or_else(|| s.h.clone())
        })
        .collect();
    let inspectable: Vec<usize> = (0..n).filter(|&i| repair[i].is_some()).collect();
    if inspectable.len() > options.limit {
        return Err(PlanError::LimitExceeded {
            what: "inspection subset search",
            size: inspectable.len(),
            limit: options.limit,
            hint: Some("decompose the system hierarchically"),
        });
    }

    let mut best: Option<(S, u64, Vec<usize>)> = None;
    let mut cd: Vec<S> = specs.iter().map(|s| s.c.clone()).collect();
    for subset in subsets_by_popcount(inspectable.len()) {
        let mut trailing = S::zero();
        for (bit, &i) in inspectable.iter().enumerate() {
            if subset >> bit & 1 == 1 {
                cd[i] = specs[i].d.clone().expect("inspectable has d");
                trailing = trailing + repair[i].clone().expect("inspectable has h") * probs[i].clone();
            } else {
                cd[i] = specs[i].c.clone();
            }
        }
        if options.prune {
            if let Some((incumbent, _, _)) = &best {
                let bound = cd
                    .iter()
                    .zip(&probs)
                    .fold(trailing.clone(), |acc, (c, p)| acc + c.clone() * p.clone());
                if bound >= incumbent.clone() {
                    continue;
                }
            }
        }
        let keys: Vec<_> = cd.iter().zip(&probs).map(|(c, p)| odds_ratio(c, p)).collect();
        let order = stable_order_by(&keys);
        let cost = independent_sequence_cost(&order, &cd, &probs) + trailing;
        let better = match &best {
            None => true,
            Some((incumbent, _, _)) => cost < incumbent.clone() - S::improvement(),
        };
        if better {
            best = Some((cost, subset, order));
        }
    }

    let (ec, subset, order) = best.expect("the empty subset is always evaluated");
    let ids = flat.ids();
    let strategy = Strategy {
        order: order.iter().map(|&i| ids[i].clone()).collect(),
        inspect: inspectable
            .iter()
            .enumerate()
            .filter(|(bit, _)| subset >> bit & 1 == 1)
            .map(|(_, &i)| ids[i].clone())
            .collect(),
    };
    let cost = CostReport::from_ec(ec, flat.fault_probability())?;
    Ok(StrategyReport { strategy, cost })
}

/// Expected remaining cost once the first `completed` steps are done and the
/// system is still faulty.
///
/// The suffix is treated as a strategy of its own over the remaining
/// components; `ecf` is conditioned on the suffix containing a fault.
pub fn remaining_expected_cost<S: Scalar>(
    strat: &Strategy,
    completed: usize,
    flat: &FlatSystem<S>,
) -> Result<CostReport<S>> {
    if !flat.is_independent() {
        return Err(PlanError::RequiresIndependence);
    }
    let r = resolve(strat, flat.components(), &flat.ids(), None, true)?;
    if completed >= r.order.len() {
        return Err(PlanError::PositionOutOfRange {
            position: completed,
            len: r.order.len(),
        });
    }
    let probs = flat.probabilities();
    let suffix = &r.order[completed..];
    let (ec, fault) = suffix_cost(suffix.iter().map(|&i| (r.cd[i].clone(), probs[i].clone(), r.repair[i].clone())));
    CostReport::from_ec(ec, fault)
}

/// Unconditional expected cost of running the given steps in order, and the
/// probability that at least one of them is broken.
///
/// Each step is `(cd, p, h if inspected)`.
pub(crate) fn suffix_cost<S: Scalar>(steps: impl DoubleEndedIterator<Item = (S, S, Option<S>)>) -> (S, S) {
    let mut suffix_ok = S::one();
    let mut ec = S::zero();
    for (cd, p, h) in steps.rev() {
        suffix_ok = suffix_ok * (S::one() - p.clone());
        ec = ec + cd * (S::one() - suffix_ok.clone());
        if let Some(h) = h {
            ec = ec + h * p;
        }
    }
    (ec, S::one() - suffix_ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fix3() -> FlatSystem<f64> {
        FlatSystem::independent(vec![
            AtomicSpec::inspectable("A", 0.5, 4.0, 1.0, 2.0),
            AtomicSpec::inspectable("B", 0.2, 3.0, 3.0, 3.0),
        ])
        .unwrap()
    }

    fn fix6() -> FlatSystem<f64> {
        FlatSystem::independent(vec![AtomicSpec::inspectable("comp", 0.5, 10.0, 2.0, 3.0)]).unwrap()
    }

    fn ids(names: &[&str]) -> Vec<ComponentId> {
        names.iter().map(|s| ComponentId::new(*s)).collect()
    }

    #[test]
    fn gosper_enumeration_covers_every_subset_once() {
        let all: Vec<u64> = subsets_by_popcount(4).collect();
        assert_eq!(all.len(), 16);
        let unique: BTreeSet<u64> = all.iter().copied().collect();
        assert_eq!(unique.len(), 16);
        assert!(all.windows(2).all(|w| w[0].count_ones() <= w[1].count_ones()));
        assert_eq!(subsets_by_popcount(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn fixture_costs_with_inspection() {
        let fix6 = fix6();
        let s = Strategy::new(ids(&["comp"]), ids(&["comp"]));
        let joint = fix6.independent_joint(20).unwrap();
        let r = expected_cost_with_inspections(&s, &joint, fix6.components()).unwrap();
        assert!((r.ec - 2.5).abs() < 1e-12);

        let fix3 = fix3();
        let s = Strategy::new(ids(&["A", "B"]), ids(&["A"]));
        let r = strategy_cost(&s, &fix3).unwrap();
        assert!((r.ec - 2.2).abs() < 1e-12);
        let joint = fix3.independent_joint(20).unwrap();
        let general = expected_cost_with_inspections(&s, &joint, fix3.components()).unwrap();
        assert!((general.ec - 2.2).abs() < 1e-12);
    }

    #[test]
    fn empty_inspection_set_reduces_to_replacement_cost() {
        let fix3 = fix3();
        let s = Strategy::new(ids(&["B", "A"]), []);
        let with = strategy_cost(&s, &fix3).unwrap();
        let without = crate::flat::expected_cost_independent(&s.sequence(), &fix3).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn optimal_order_for_fixed_subsets() {
        let fix3 = fix3();
        let s = optimal_sequence_for_inspection_set(&ids(&["A"]).into_iter().collect(), &fix3).unwrap();
        assert_eq!(s.order, ids(&["A", "B"]));
        let s = optimal_sequence_for_inspection_set(&BTreeSet::new(), &fix3).unwrap();
        assert_eq!(s.order, ids(&["A", "B"]));

        let same = FlatSystem::independent(vec![
            AtomicSpec::inspectable("x", 0.3, 5.0, 1.0, 1.0),
            AtomicSpec::inspectable("y", 0.3, 9.0, 1.0, 1.0),
            AtomicSpec::inspectable("z", 0.3, 2.0, 1.0, 1.0),
        ])
        .unwrap();
        let all: BTreeSet<_> = same.ids().into_iter().collect();
        let s = optimal_sequence_for_inspection_set(&all, &same).unwrap();
        assert_eq!(s.order, ids(&["x", "y", "z"]));

        let plain = FlatSystem::independent(vec![AtomicSpec::new("x", 0.3, 5.0)]).unwrap();
        assert_eq!(
            optimal_sequence_for_inspection_set(&ids(&["x"]).into_iter().collect(), &plain),
            Err(PlanError::MissingInspectionCost("x".into()))
        );
    }

    #[test]
    fn optimal_strategy_examples() {
        let r = optimal_strategy(&fix6(), None, &SearchOptions::default()).unwrap();
        assert_eq!(r.strategy.inspect_in_order(), ids(&["comp"]));
        assert!((r.cost.ec - 2.5).abs() < 1e-12);

        let r = optimal_strategy(&fix3(), None, &SearchOptions::default()).unwrap();
        assert_eq!(r.strategy.order, ids(&["A", "B"]));
        assert_eq!(r.strategy.inspect_in_order(), ids(&["A"]));
        assert!((r.cost.ec - 2.2).abs() < 1e-12);

        let pointless = FlatSystem::independent(vec![AtomicSpec::inspectable("x", 0.4, 6.0, 6.0, 6.0)]).unwrap();
        let r = optimal_strategy(&pointless, None, &SearchOptions::default()).unwrap();
        assert!(r.strategy.inspect.is_empty());
    }

    #[test]
    fn exact_tie_prefers_no_inspection() {
        // A lone component pays (d + h) p when inspected and c p otherwise.
        let tie = FlatSystem::independent(vec![AtomicSpec::inspectable("x", 0.5_f64, 4.0, 1.0, 3.0)]).unwrap();
        let r = optimal_strategy(&tie, None, &SearchOptions::default()).unwrap();
        assert!(r.strategy.inspect.is_empty());
        assert!((r.cost.ec - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pruning_does_not_change_the_answer() {
        let fix3 = fix3();
        let plain = optimal_strategy(&fix3, None, &SearchOptions::default()).unwrap();
        let pruned = optimal_strategy(&fix3, None, &SearchOptions { prune: true, ..Default::default() }).unwrap();
        assert_eq!(plain, pruned);
    }

    #[test]
    fn h_override_replaces_repair_costs() {
        let sys = FlatSystem::independent(vec![
            AtomicSpec {
                id: "x".into(),
                p: 0.5,
                c: 10.0,
                d: Some(1.0),
                h: None,
            },
            AtomicSpec::new("y", 0.1, 1.0),
        ])
        .unwrap();
        // Without an h the component is not inspectable.
        let r = optimal_strategy(&sys, None, &SearchOptions::default()).unwrap();
        assert!(r.strategy.inspect.is_empty());
        let r = optimal_strategy(&sys, Some(&[2.0, 0.0]), &SearchOptions::default()).unwrap();
        assert_eq!(r.strategy.inspect_in_order(), ids(&["x"]));
    }

    #[test]
    fn subset_limit_is_enforced() {
        let comps = (0..4)
            .map(|i| AtomicSpec::inspectable(format!("c{i}"), 0.1, 2.0, 1.0, 1.0))
            .collect();
        let sys = FlatSystem::independent(comps).unwrap();
        let err = optimal_strategy(&sys, None, &SearchOptions { limit: 3, prune: false }).unwrap_err();
        assert!(err.to_string().contains("hierarch"));
    }

    #[test]
    fn remaining_cost_examples() {
        let fix2 = FlatSystem::independent(vec![
            AtomicSpec::new("A", 0.1_f64, 5.0),
            AtomicSpec::new("B", 0.5, 4.0),
            AtomicSpec::new("C", 0.9, 9.0),
        ])
        .unwrap();
        let s = Strategy::new(ids(&["C", "B", "A"]), []);
        let r = remaining_expected_cost(&s, 1, &fix2).unwrap();
        assert!((r.ecf - 2.7 / 0.55).abs() < 1e-12);
        let whole = remaining_expected_cost(&s, 0, &fix2).unwrap();
        let full = strategy_cost(&s, &fix2).unwrap();
        assert!((whole.ecf - full.ecf).abs() < 1e-12);
        let last = remaining_expected_cost(&s, 2, &fix2).unwrap();
        assert!((last.ecf - 5.0).abs() < 1e-12);
        assert!(remaining_expected_cost(&s, 3, &fix2).is_err());

        let dead = FlatSystem::independent(vec![AtomicSpec::new("A", 0.5, 1.0), AtomicSpec::new("B", 0.0, 1.0)]).unwrap();
        let s = Strategy::new(ids(&["A", "B"]), []);
        assert_eq!(remaining_expected_cost(&s, 1, &dead), Err(PlanError::CannotFail));
    }

    #[test]
    fn missing_repair_cost_is_reported() {
        let sys = FlatSystem::independent(vec![AtomicSpec {
            id: "x".into(),
            p: 0.5,
            c: 10.0,
            d: Some(1.0),
            h: None,
        }])
        .unwrap();
        let s = Strategy::new(ids(&["x"]), ids(&["x"]));
        assert_eq!(strategy_cost(&s, &sys), Err(PlanError::MissingRepairCost("x".into())));
    }
}

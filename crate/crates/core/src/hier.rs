//! Optimal repair plans for hierarchical systems.
//!
//! Plans are built bottom-up. A broken component is either replaced outright
//! or repaired through an inspect/replace strategy over its children, where
//! an inspected child found broken is handled by its own nested plan. The
//! child plan's cost given the child is broken plays the role of the repair
//! cost `h` in the flat inspection search.

use crate::error::{PlanError, Result, Warning};
use crate::inspection::{optimal_strategy, suffix_cost, SearchOptions};
use crate::model::{AtomicSpec, ComponentId, FlatSystem, HierNode};
use crate::scalar::Scalar;

/// What to do with a component known to be broken.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanAction<S> {
    Replace,
    Strategy {
        /// Order over all children.
        order: Vec<ComponentId>,
        /// Inspected children, in visit order.
        inspect: Vec<ComponentId>,
        /// Nested plans, one per inspected child, aligned with `inspect`.
        children: Vec<HierPlan<S>>,
    },
}

/// Plan for one component with its cost annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct HierPlan<S> {
    pub node: ComponentId,
    pub action: PlanAction<S>,
    /// Expected cost of the plan given the component is broken.
    pub h: S,
    /// Probability the component is broken.
    pub p: S,
    /// Unconditional expected cost, `h * p`.
    pub ec: S,
}

impl<S: Scalar> HierPlan<S> {
    pub fn replace(node: ComponentId, c: S, p: S) -> Self {
        let ec = c.clone() * p.clone();
        Self {
            node,
            action: PlanAction::Replace,
            h: c,
            p,
            ec,
        }
    }

    pub fn is_replace(&self) -> bool {
        matches!(self.action, PlanAction::Replace)
    }

    /// Nested plan for an inspected child.
    pub fn child_plan(&self, id: &ComponentId) -> Option<&HierPlan<S>> {
        match &self.action {
            PlanAction::Replace => None,
            PlanAction::Strategy { children, .. } => children.iter().find(|c| &c.node == id),
        }
    }

    /// Every plan node, pre-order.
    pub fn nodes(&self) -> Vec<&HierPlan<S>> {
        let mut out = vec![self];
        if let PlanAction::Strategy { children, .. } = &self.action {
            for ch in children {
                out.extend(ch.nodes());
            }
        }
        out
    }

    pub fn cast<T: Scalar>(&self) -> HierPlan<T> {
        HierPlan {
            node: self.node.clone(),
            action: match &self.action {
                PlanAction::Replace => PlanAction::Replace,
                PlanAction::Strategy {
                    order,
                    inspect,
                    children,
                } => PlanAction::Strategy {
                    order: order.clone(),
                    inspect: inspect.clone(),
                    children: children.iter().map(HierPlan::cast).collect(),
                },
            },
            h: T::lit(self.h.to_f64_lossy()),
            p: T::lit(self.p.to_f64_lossy()),
            ec: T::lit(self.ec.to_f64_lossy()),
        }
    }
}

/// A plan plus the warnings raised while building it.
#[derive(Debug, Clone, PartialEq)]
pub struct Planned<S> {
    pub plan: HierPlan<S>,
    pub warnings: Vec<Warning>,
}

/// Plans one component from the optimal plans of its children.
///
/// `child_plans` must follow `node.children` order (empty for a leaf).
pub fn plan_component<S: Scalar>(
    node: &HierNode<S>,
    child_plans: Vec<HierPlan<S>>,
    options: &SearchOptions,
) -> Result<Planned<S>> {
    if node.is_leaf() {
        if !child_plans.is_empty() {
            return Err(PlanError::PlanMismatch(format!("leaf `{}` given child plans", node.id)));
        }
        let p = node.leaf_p.clone().unwrap_or_else(S::zero);
        return Ok(Planned {
            plan: HierPlan::replace(node.id.clone(), node.c.clone(), p),
            warnings: Vec::new(),
        });
    }
    if child_plans.len() != node.children.len()
        || child_plans.iter().zip(&node.children).any(|(plan, ch)| plan.node != ch.id)
    {
        return Err(PlanError::PlanMismatch(format!(
            "child plans do not follow the children of `{}`",
            node.id
        )));
    }

    let ok = child_plans
        .iter()
        .fold(S::one(), |acc, plan| acc * (S::one() - plan.p.clone()));
    let p = S::one() - ok;
    if p.is_zero() {
        return Ok(Planned {
            plan: HierPlan::replace(node.id.clone(), node.c.clone(), p),
            warnings: vec![Warning::new(
                node.id.as_str(),
                "no child can fail, so the component never needs repair",
            )],
        });
    }

    let specs: Vec<AtomicSpec<S>> = node
        .children
        .iter()
        .zip(&child_plans)
        .map(|(ch, plan)| AtomicSpec {
            id: ch.id.clone(),
            p: plan.p.clone(),
            c: ch.c.clone(),
            d: ch.d.clone(),
            h: None,
        })
        .collect();
    let repair: Vec<S> = child_plans.iter().map(|plan| plan.h.clone()).collect();
    let flat = FlatSystem::independent(specs)?;
    let best = optimal_strategy(&flat, Some(&repair), options)?;

    let ecf = best.cost.ecf;
    let plan = if ecf < node.c.clone() - S::improvement() {
        let inspect = best.strategy.inspect_in_order();
        let mut by_id: Vec<Option<HierPlan<S>>> = child_plans.into_iter().map(Some).collect();
        let nested = inspect
            .iter()
            .map(|id| {
                let at = node.children.iter().position(|ch| &ch.id == id).expect("child id");
                by_id[at].take().expect("each child inspected once")
            })
            .collect();
        HierPlan {
            node: node.id.clone(),
            action: PlanAction::Strategy {
                order: best.strategy.order,
                inspect,
                children: nested,
            },
            ec: ecf.clone() * p.clone(),
            h: ecf,
            p,
        }
    } else {
        HierPlan::replace(node.id.clone(), node.c.clone(), p)
    };
    Ok(Planned {
        plan,
        warnings: Vec::new(),
    })
}

/// Optimal plan for a whole tree, computed leaves-first.
pub fn plan_system<S: Scalar>(root: &HierNode<S>, options: &SearchOptions) -> Result<Planned<S>> {
    let (errors, _) = root.validate();
    if !errors.is_empty() {
        return Err(PlanError::Invalid(errors));
    }
    let branching = root.max_branching();
    if branching > options.limit {
        return Err(PlanError::LimitExceeded {
            what: "branching factor",
            size: branching,
            limit: options.limit,
            hint: Some("split wide components into intermediate subassemblies"),
        });
    }
    let mut warnings = Vec::new();
    let plan = plan_subtree(root, options, &mut warnings)?;
    Ok(Planned { plan, warnings })
}

fn plan_subtree<S: Scalar>(
    node: &HierNode<S>,
    options: &SearchOptions,
    warnings: &mut Vec<Warning>,
) -> Result<HierPlan<S>> {
    let child_plans = node
        .children
        .iter()
        .map(|ch| plan_subtree(ch, options, warnings))
        .collect::<Result<Vec<_>>>()?;
    let planned = plan_component(node, child_plans, options)?;
    warnings.extend(planned.warnings);
    Ok(planned.plan)
}

/// Recomputes the annotations of an arbitrary plan against `model`.
///
/// Checks that the plan's structure fits the tree: orders permute the
/// children, inspected children have an inspection cost and a nested plan.
pub fn evaluate_plan<S: Scalar>(plan: &HierPlan<S>, model: &HierNode<S>) -> Result<HierPlan<S>> {
    if plan.node != model.id {
        return Err(PlanError::PlanMismatch(format!(
            "plan node `{}` does not match model node `{}`",
            plan.node, model.id
        )));
    }
    let p = model.failure_probability();
    match &plan.action {
        PlanAction::Replace => Ok(HierPlan::replace(model.id.clone(), model.c.clone(), p)),
        PlanAction::Strategy {
            order,
            inspect,
            children,
        } => {
            if model.is_leaf() {
                return Err(PlanError::PlanMismatch(format!("leaf `{}` cannot have a strategy", model.id)));
            }
            let ids: Vec<ComponentId> = model.children.iter().map(|c| c.id.clone()).collect();
            let positions = crate::flat::resolve_permutation(order, &ids)?;
            if inspect.len() != children.len() {
                return Err(PlanError::PlanMismatch(format!(
                    "`{}` inspects {} children but carries {} nested plans",
                    model.id,
                    inspect.len(),
                    children.len()
                )));
            }
            let mut nested: Vec<Option<HierPlan<S>>> = vec![None; ids.len()];
            for (id, child_plan) in inspect.iter().zip(children) {
                let at = ids
                    .iter()
                    .position(|c| c == id)
                    .ok_or_else(|| PlanError::UnknownComponent(id.clone()))?;
                if nested[at].is_some() {
                    return Err(PlanError::PlanMismatch(format!("`{id}` inspected twice")));
                }
                if model.children[at].d.is_none() {
                    return Err(PlanError::MissingInspectionCost(id.clone()));
                }
                nested[at] = Some(evaluate_plan(child_plan, &model.children[at])?);
            }
            let steps = positions.iter().map(|&i| {
                let child = &model.children[i];
                let pi = child.failure_probability();
                match &nested[i] {
                    Some(sub) => (child.d.clone().expect("checked above"), pi, Some(sub.h.clone())),
                    None => (child.c.clone(), pi, None),
                }
            });
            let (ec, fault) = suffix_cost(steps.collect::<Vec<_>>().into_iter());
            if fault <= S::zero() {
                return Err(PlanError::CannotFail);
            }
            let h = ec.clone() / fault;
            let inspect_in_order: Vec<ComponentId> =
                positions.iter().filter(|&&i| nested[i].is_some()).map(|&i| ids[i].clone()).collect();
            let children = positions.iter().filter_map(|&i| nested[i].take()).collect();
            Ok(HierPlan {
                node: model.id.clone(),
                action: PlanAction::Strategy {
                    order: order.clone(),
                    inspect: inspect_in_order,
                    children,
                },
                h,
                p,
                ec,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fix5(root_c: f64) -> HierNode<f64> {
        HierNode::internal(
            "R",
            root_c,
            None,
            vec![
                HierNode::leaf("L1", 0.5, 4.0, Some(1.0)),
                HierNode::leaf("L2", 0.2, 3.0, Some(3.0)),
            ],
        )
    }

    fn ids(names: &[&str]) -> Vec<ComponentId> {
        names.iter().map(|s| ComponentId::new(*s)).collect()
    }

    #[test]
    fn leaf_plan_is_replace() {
        let leaf = HierNode::leaf("L1", 0.5, 4.0, Some(1.0));
        let planned = plan_component(&leaf, vec![], &SearchOptions::default()).unwrap();
        assert!(planned.plan.is_replace());
        assert_eq!(planned.plan.h, 4.0);
        assert_eq!(planned.plan.p, 0.5);
    }

    #[test]
    fn fix5_prefers_the_child_strategy() {
        let plan = plan_system(&fix5(20.0), &SearchOptions::default()).unwrap().plan;
        match &plan.action {
            PlanAction::Strategy { order, inspect, children } => {
                assert_eq!(order, &ids(&["L1", "L2"]));
                assert!(inspect.is_empty());
                assert!(children.is_empty());
            }
            PlanAction::Replace => panic!("expected a strategy"),
        }
        assert!((plan.ec - 3.0).abs() < 1e-12);
        assert!((plan.p - 0.6).abs() < 1e-12);
        assert!((plan.h - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cheap_root_is_replaced() {
        let plan = plan_system(&fix5(4.0), &SearchOptions::default()).unwrap().plan;
        assert!(plan.is_replace());
        assert_eq!(plan.h, 4.0);
    }

    #[test]
    fn exact_tie_replaces() {
        let plan = plan_system(&fix5(5.0), &SearchOptions::default()).unwrap().plan;
        assert!(plan.is_replace());
    }

    #[test]
    fn single_leaf_system() {
        let root = HierNode::leaf("only", 0.3_f64, 2.0, None);
        let plan = plan_system(&root, &SearchOptions::default()).unwrap().plan;
        assert!(plan.is_replace());
        assert!((plan.ec - 0.6).abs() < 1e-12);
    }

    #[test]
    fn never_failing_component_warns() {
        let root = HierNode::internal(
            "R",
            9.0,
            None,
            vec![HierNode::leaf("a", 0.0, 1.0, None), HierNode::leaf("b", 0.0, 1.0, None)],
        );
        let planned = plan_system(&root, &SearchOptions::default()).unwrap();
        assert!(planned.plan.is_replace());
        assert_eq!(planned.plan.ec, 0.0);
        assert_eq!(planned.warnings.len(), 1);
    }

    #[test]
    fn children_without_inspection_cost_are_only_replaced() {
        let root = HierNode::internal(
            "R",
            100.0,
            None,
            vec![
                HierNode::internal(
                    "M",
                    50.0,
                    None,
                    vec![HierNode::leaf("x", 0.1, 1.0, None), HierNode::leaf("y", 0.1, 1.0, None)],
                ),
                HierNode::leaf("z", 0.3, 2.0, None),
            ],
        );
        let plan = plan_system(&root, &SearchOptions::default()).unwrap().plan;
        match &plan.action {
            PlanAction::Strategy { inspect, .. } => assert!(inspect.is_empty()),
            PlanAction::Replace => panic!("expected a strategy"),
        }
    }

    #[test]
    fn nested_inspection_carries_child_plans() {
        let root = HierNode::internal(
            "R",
            100.0,
            None,
            vec![
                HierNode::internal(
                    "M",
                    60.0_f64,
                    Some(1.0),
                    vec![HierNode::leaf("x", 0.2, 2.0, Some(0.5)), HierNode::leaf("y", 0.1, 3.0, Some(0.5))],
                ),
                HierNode::leaf("z", 0.3, 2.0, None),
            ],
        );
        let plan = plan_system(&root, &SearchOptions::default()).unwrap().plan;
        let PlanAction::Strategy { inspect, children, .. } = &plan.action else {
            panic!("expected a strategy");
        };
        assert_eq!(inspect, &ids(&["M"]));
        assert_eq!(children.len(), 1);
        assert_eq!(children[0].node, ComponentId::new("M"));
        assert!(!children[0].is_replace());
        assert!(plan.nodes().iter().all(|n| n.h <= 100.0));
        let again = evaluate_plan(&plan, &root).unwrap();
        assert!((again.h - plan.h).abs() < 1e-12);
    }

    #[test]
    fn evaluate_plan_checks_structure() {
        let root = fix5(20.0);
        let bogus = HierPlan {
            node: "R".into(),
            action: PlanAction::Strategy {
                order: ids(&["L1"]),
                inspect: vec![],
                children: vec![],
            },
            h: 0.0,
            p: 0.0,
            ec: 0.0,
        };
        assert!(evaluate_plan(&bogus, &root).is_err());
        let missing_nested = HierPlan {
            action: PlanAction::Strategy {
                order: ids(&["L1", "L2"]),
                inspect: ids(&["L1"]),
                children: vec![],
            },
            ..bogus
        };
        assert!(evaluate_plan(&missing_nested, &root).is_err());
    }

    #[test]
    fn branching_limit_is_enforced() {
        let wide = HierNode::internal(
            "R",
            1.0,
            None,
            (0..4).map(|i| HierNode::leaf(format!("l{i}"), 0.1, 1.0, None)).collect(),
        );
        let err = plan_system(&wide, &SearchOptions { limit: 3, prune: false }).unwrap_err();
        assert!(matches!(err, PlanError::LimitExceeded { what: "branching factor", .. }));
    }
}

//! Step-by-step execution of repair plans.
//!
//! [`ExecPlan`] flattens a flat strategy or a hierarchical plan into one
//! node table. [`Walker`] is the protocol state machine: it issues prompts
//! (replace, repair, inspect, observe a status) and consumes outcomes.
//! [`execute`] drives a walker from a known world; interactive sessions
//! drive it from user input.

use std::ops::Range;

use thiserror::Error;

use crate::error::{PlanError, Result};
use crate::hier::{evaluate_plan, HierPlan, PlanAction};
use crate::inspection::{suffix_cost, Strategy};
use crate::model::{
    ComponentId, FixKind, FlatSystem, HierNode, HistoryStep, JointTable, Mode, ObservationHistory, World,
};
use crate::scalar::Scalar;

/// Id of the synthetic root that stands for a flat system as a whole.
pub const SYSTEM_ID: &str = "system";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecStep {
    pub child: usize,
    pub inspect: bool,
}

/// What happens once a node is known to be broken.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecAction<S> {
    Replace,
    /// Repair at the given cost (flat components found broken by inspection).
    Repair(S),
    Strategy(Vec<ExecStep>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecNode<S> {
    pub id: ComponentId,
    pub parent: Option<usize>,
    /// Leaves under the node; leaves are numbered in depth-first order.
    pub leaves: Range<usize>,
    pub c: S,
    pub d: Option<S>,
    /// Failure probability.
    pub p: S,
    /// Expected cost of the node's action given it is broken.
    pub h: S,
    pub action: ExecAction<S>,
    /// `(ec, fault)` of the step suffix starting at each position.
    suffix: Vec<(S, S)>,
}

/// Failure distribution over the leaves.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafDistribution<S> {
    Independent(Vec<S>),
    /// Table over the leaves in leaf order.
    Joint(JointTable<S>),
}

/// An executable plan. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecPlan<S> {
    nodes: Vec<ExecNode<S>>,
    leaf_ids: Vec<ComponentId>,
    distribution: LeafDistribution<S>,
}

impl<S: Scalar> ExecPlan<S> {
    /// A flat strategy under the system's own distribution.
    pub fn from_flat(flat: &FlatSystem<S>, strategy: &Strategy) -> Result<Self> {
        let ids = flat.ids();
        let order = strategy.sequence().resolve(&ids)?;
        for id in &strategy.inspect {
            if flat.index_of(id).is_none() {
                return Err(PlanError::UnknownComponent(id.clone()));
            }
        }
        let (probs, distribution) = match flat.joint() {
            None => {
                let p = flat.probabilities();
                (p.clone(), LeafDistribution::Independent(p))
            }
            Some(t) => (t.broken_marginals(), LeafDistribution::Joint(t.clone())),
        };
        let n = flat.len();
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(ExecNode {
            id: ComponentId::new(SYSTEM_ID),
            parent: None,
            leaves: 0..n,
            c: S::zero(),
            d: None,
            p: flat.fault_probability(),
            h: S::zero(),
            action: ExecAction::Strategy(
                order
                    .iter()
                    .map(|&i| ExecStep {
                        child: i + 1,
                        inspect: strategy.is_inspected(&ids[i]),
                    })
                    .collect(),
            ),
            suffix: Vec::new(),
        });
        for (i, spec) in flat.components().iter().enumerate() {
            let action = if strategy.is_inspected(&spec.id) {
                if spec.d.is_none() {
                    return Err(PlanError::MissingInspectionCost(spec.id.clone()));
                }
                match &spec.h {
                    Some(h) => ExecAction::Repair(h.clone()),
                    None => return Err(PlanError::MissingRepairCost(spec.id.clone())),
                }
            } else {
                ExecAction::Replace
            };
            nodes.push(ExecNode {
                id: spec.id.clone(),
                parent: Some(0),
                leaves: i..i + 1,
                c: spec.c.clone(),
                d: spec.d.clone(),
                p: probs[i].clone(),
                h: S::zero(),
                action,
                suffix: Vec::new(),
            });
        }
        let mut plan = Self {
            nodes,
            leaf_ids: ids,
            distribution,
        };
        for i in (0..plan.nodes.len()).rev() {
            plan.annotate(i);
        }
        Ok(plan)
    }

    /// A hierarchical plan under independent leaf failures.
    pub fn from_hier(model: &HierNode<S>, plan: &HierPlan<S>) -> Result<Self> {
        evaluate_plan(plan, model)?;
        let mut out = Self {
            nodes: Vec::with_capacity(model.node_count()),
            leaf_ids: Vec::with_capacity(model.leaf_count()),
            distribution: LeafDistribution::Independent(Vec::new()),
        };
        let mut probs = Vec::with_capacity(model.leaf_count());
        out.push_subtree(model, Some(plan), None, &mut probs);
        out.distribution = LeafDistribution::Independent(probs);
        Ok(out)
    }

    fn push_subtree(
        &mut self,
        node: &HierNode<S>,
        plan: Option<&HierPlan<S>>,
        parent: Option<usize>,
        probs: &mut Vec<S>,
    ) -> usize {
        let index = self.nodes.len();
        let first_leaf = self.leaf_ids.len();
        self.nodes.push(ExecNode {
            id: node.id.clone(),
            parent,
            leaves: first_leaf..first_leaf,
            c: node.c.clone(),
            d: node.d.clone(),
            p: S::zero(),
            h: S::zero(),
            action: ExecAction::Replace,
            suffix: Vec::new(),
        });
        if node.is_leaf() {
            self.leaf_ids.push(node.id.clone());
            probs.push(node.leaf_p.clone().unwrap_or_else(S::zero));
        }
        let mut child_index = Vec::with_capacity(node.children.len());
        for child in &node.children {
            let nested = plan.and_then(|p| p.child_plan(&child.id));
            child_index.push(self.push_subtree(child, nested, Some(index), probs));
        }
        let action = match plan.map(|p| &p.action) {
            Some(PlanAction::Strategy { order, inspect, .. }) => ExecAction::Strategy(
                order
                    .iter()
                    .map(|id| {
                        let at = node.children.iter().position(|ch| &ch.id == id).expect("checked by evaluate_plan");
                        ExecStep {
                            child: child_index[at],
                            inspect: inspect.contains(id),
                        }
                    })
                    .collect(),
            ),
            _ => ExecAction::Replace,
        };
        let ok = child_index
            .iter()
            .fold(S::one(), |acc, &i| acc * (S::one() - self.nodes[i].p.clone()));
        let last_leaf = self.leaf_ids.len();
        let n = &mut self.nodes[index];
        n.leaves = first_leaf..last_leaf;
        n.p = if node.is_leaf() {
            node.leaf_p.clone().unwrap_or_else(S::zero)
        } else {
            S::one() - ok
        };
        n.action = action;
        self.annotate(index);
        index
    }

    /// Fills `h` and the suffix table; children must be annotated already.
    fn annotate(&mut self, index: usize) {
        let (suffix, h) = match &self.nodes[index].action {
            ExecAction::Replace => {
                let n = &self.nodes[index];
                (
                    vec![(n.c.clone() * n.p.clone(), n.p.clone()), (S::zero(), S::zero())],
                    n.c.clone(),
                )
            }
            ExecAction::Repair(h) => (vec![(S::zero(), S::zero())], h.clone()),
            ExecAction::Strategy(steps) => {
                let items: Vec<(S, S, Option<S>)> = steps
                    .iter()
                    .map(|step| {
                        let ch = &self.nodes[step.child];
                        if step.inspect {
                            (ch.d.clone().unwrap_or_else(S::zero), ch.p.clone(), Some(ch.h.clone()))
                        } else {
                            (ch.c.clone(), ch.p.clone(), None)
                        }
                    })
                    .collect();
                let suffix: Vec<(S, S)> = (0..=items.len())
                    .map(|s| suffix_cost(items[s..].iter().cloned()))
                    .collect();
                let (ec, fault) = suffix[0].clone();
                let h = if fault > S::zero() { ec / fault } else { S::zero() };
                (suffix, h)
            }
        };
        let n = &mut self.nodes[index];
        n.suffix = suffix;
        n.h = h;
    }

    pub fn nodes(&self) -> &[ExecNode<S>] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &ExecNode<S> {
        &self.nodes[index]
    }

    pub fn root(&self) -> &ExecNode<S> {
        &self.nodes[0]
    }

    pub fn leaf_ids(&self) -> &[ComponentId] {
        &self.leaf_ids
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_ids.len()
    }

    pub fn distribution(&self) -> &LeafDistribution<S> {
        &self.distribution
    }

    /// Converts a world to per-leaf broken flags.
    pub fn world_flags(&self, world: &World) -> Result<Vec<bool>> {
        for id in &world.broken {
            if !self.leaf_ids.contains(id) {
                return Err(PlanError::UnknownComponent(id.clone()));
            }
        }
        Ok(self.leaf_ids.iter().map(|id| world.is_broken(id)).collect())
    }

    fn suffix_ec(&self, node: usize, from: usize) -> S {
        self.nodes[node].suffix.get(from).map(|s| s.0.clone()).unwrap_or_else(S::zero)
    }

    fn suffix_ecf(&self, node: usize, from: usize) -> S {
        match self.nodes[node].suffix.get(from) {
            Some((ec, fault)) if *fault > S::zero() => ec.clone() / fault.clone(),
            _ => S::zero(),
        }
    }
}

/// An outcome reported to the walker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Status of the unit named by the pending prompt, observed after any
    /// pending fix has been carried out.
    Status(Mode),
    Inspect(Mode),
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Status(_) => "status_result",
            Event::Inspect(_) => "inspect_result",
        }
    }

    pub fn outcome(&self) -> Mode {
        match self {
            Event::Status(m) | Event::Inspect(m) => *m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("expected {expected}, got {got}")]
    WrongKind { expected: &'static str, got: &'static str },
    #[error("the plan is already complete")]
    Finished,
    #[error("outcome contradicts earlier observations: {0}")]
    Inconsistent(String),
}

/// The next thing to do, with ids resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prompt {
    /// Report the status of `unit`.
    ObserveStatus { unit: ComponentId },
    /// Replace `component`, then report the status of `unit`.
    Replace {
        component: ComponentId,
        unit: ComponentId,
        after_inspection: bool,
    },
    /// Repair `component` (found broken by inspection), then report the
    /// status of `unit`.
    Repair { component: ComponentId, unit: ComponentId },
    /// Inspect `component` and report what was found.
    Inspect { component: ComponentId },
    Done,
}

impl Prompt {
    /// Event kind that answers this prompt.
    pub fn expects(&self) -> Option<&'static str> {
        match self {
            Prompt::Inspect { .. } => Some("inspect_result"),
            Prompt::Done => None,
            _ => Some("status_result"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Fix<S> {
    component: usize,
    kind: FixKind,
    cost: S,
    after_inspection: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Pending<S> {
    Status { unit: usize, fix: Option<Fix<S>> },
    Inspect { component: usize },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Frame {
    node: usize,
    /// Next step of the node's action to prompt for.
    next: usize,
}

/// Protocol state for one run of a plan.
///
/// The plan is passed to every call rather than borrowed, so a walker can
/// live next to a shared plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Walker<S> {
    frames: Vec<Frame>,
    pending: Pending<S>,
    accumulated: S,
    actions: usize,
    fixed: Vec<bool>,
    /// `(unfixed leaves of the observed unit, broken)`, kept for joint
    /// distributions over at most 64 leaves.
    observations: Vec<(u64, bool)>,
    record: bool,
    history: ObservationHistory<S>,
}

impl<S: Scalar> Walker<S> {
    /// Starts before the system status has been observed.
    pub fn new(plan: &ExecPlan<S>) -> Self {
        Self {
            frames: vec![Frame { node: 0, next: 0 }],
            pending: Pending::Status { unit: 0, fix: None },
            accumulated: S::zero(),
            actions: 0,
            fixed: vec![false; plan.leaf_count()],
            observations: Vec::new(),
            record: true,
            history: ObservationHistory { steps: Vec::new() },
        }
    }

    /// Starts with the system already observed broken.
    pub fn start_broken(plan: &ExecPlan<S>) -> Result<Self> {
        let mut w = Self::new(plan);
        w.step(plan, Event::Status(Mode::Broken))
            .map_err(|e| PlanError::Stuck(e.to_string()))?;
        Ok(w)
    }

    /// Turns off history recording (costs and counts are still kept).
    pub fn without_history(mut self) -> Self {
        self.record = false;
        self
    }

    pub fn accumulated_cost(&self) -> &S {
        &self.accumulated
    }

    pub fn actions_taken(&self) -> usize {
        self.actions
    }

    pub fn history(&self) -> &ObservationHistory<S> {
        &self.history
    }

    pub fn is_done(&self) -> bool {
        matches!(self.pending, Pending::Done)
    }

    pub fn prompt(&self, plan: &ExecPlan<S>) -> Prompt {
        let id = |i: usize| plan.nodes[i].id.clone();
        match &self.pending {
            Pending::Done => Prompt::Done,
            Pending::Inspect { component } => Prompt::Inspect { component: id(*component) },
            Pending::Status { unit, fix: None } => Prompt::ObserveStatus { unit: id(*unit) },
            Pending::Status { unit, fix: Some(fix) } => match fix.kind {
                FixKind::Replace => Prompt::Replace {
                    component: id(fix.component),
                    unit: id(*unit),
                    after_inspection: fix.after_inspection,
                },
                FixKind::Repair => Prompt::Repair {
                    component: id(fix.component),
                    unit: id(*unit),
                },
            },
        }
    }

    /// Ids of the units whose plans are in progress, outermost first.
    pub fn breadcrumb(&self, plan: &ExecPlan<S>) -> Vec<ComponentId> {
        self.frames.iter().map(|f| plan.nodes[f.node].id.clone()).collect()
    }

    /// Applies an event; on error the walker is unchanged.
    pub fn apply(&mut self, plan: &ExecPlan<S>, event: Event) -> std::result::Result<(), EventError> {
        let mut next = self.clone();
        next.step(plan, event)?;
        *self = next;
        Ok(())
    }

    fn step(&mut self, plan: &ExecPlan<S>, event: Event) -> std::result::Result<(), EventError> {
        match (std::mem::replace(&mut self.pending, Pending::Done), event) {
            (Pending::Done, _) => Err(EventError::Finished),
            (Pending::Status { unit, fix }, Event::Status(outcome)) => {
                if let Some(fix) = fix {
                    for leaf in plan.nodes[fix.component].leaves.clone() {
                        self.fixed[leaf] = true;
                    }
                    self.accumulated = self.accumulated.clone() + fix.cost.clone();
                    self.actions += 1;
                    if self.record {
                        self.history.steps.push(HistoryStep::Fix {
                            component: plan.nodes[fix.component].id.clone(),
                            kind: fix.kind,
                            cost: fix.cost,
                        });
                    }
                }
                self.observe(plan, unit, outcome);
                if self.record {
                    self.history.steps.push(HistoryStep::Status {
                        unit: plan.nodes[unit].id.clone(),
                        outcome,
                    });
                }
                if outcome.is_broken() {
                    self.advance(plan)
                } else {
                    self.frames.pop();
                    self.pending = match self.frames.last() {
                        None => Pending::Done,
                        Some(f) => Pending::Status { unit: f.node, fix: None },
                    };
                    Ok(())
                }
            }
            (Pending::Inspect { component }, Event::Inspect(outcome)) => {
                let node = &plan.nodes[component];
                let cost = node.d.clone().unwrap_or_else(S::zero);
                self.accumulated = self.accumulated.clone() + cost.clone();
                self.actions += 1;
                if self.record {
                    self.history.steps.push(HistoryStep::Inspect {
                        component: node.id.clone(),
                        outcome,
                        cost,
                    });
                }
                self.observe(plan, component, outcome);
                let top = self.frames.last_mut().expect("inspection inside a frame");
                top.next += 1;
                let unit = top.node;
                if !outcome.is_broken() {
                    return self.advance(plan);
                }
                match &node.action {
                    ExecAction::Replace => {
                        self.pending = Pending::Status {
                            unit,
                            fix: Some(Fix {
                                component,
                                kind: FixKind::Replace,
                                cost: node.c.clone(),
                                after_inspection: true,
                            }),
                        };
                        Ok(())
                    }
                    ExecAction::Repair(h) => {
                        self.pending = Pending::Status {
                            unit,
                            fix: Some(Fix {
                                component,
                                kind: FixKind::Repair,
                                cost: h.clone(),
                                after_inspection: true,
                            }),
                        };
                        Ok(())
                    }
                    ExecAction::Strategy(_) => {
                        self.frames.push(Frame { node: component, next: 0 });
                        self.advance(plan)
                    }
                }
            }
            (pending, event) => {
                let expected = match pending {
                    Pending::Inspect { .. } => "inspect_result",
                    _ => "status_result",
                };
                self.pending = pending;
                Err(EventError::WrongKind {
                    expected,
                    got: event.kind(),
                })
            }
        }
    }

    /// Prompts for the next step of the top frame, whose unit is broken.
    fn advance(&mut self, plan: &ExecPlan<S>) -> std::result::Result<(), EventError> {
        let frame = self.frames.last_mut().expect("advance inside a frame");
        let node = &plan.nodes[frame.node];
        match &node.action {
            ExecAction::Replace | ExecAction::Repair(_) if frame.next == 0 => {
                frame.next = 1;
                self.pending = Pending::Status {
                    unit: frame.node,
                    fix: Some(Fix {
                        component: frame.node,
                        kind: FixKind::Replace,
                        cost: node.c.clone(),
                        after_inspection: false,
                    }),
                };
                Ok(())
            }
            ExecAction::Strategy(steps) if frame.next < steps.len() => {
                let step = steps[frame.next];
                if step.inspect {
                    self.pending = Pending::Inspect { component: step.child };
                } else {
                    frame.next += 1;
                    self.pending = Pending::Status {
                        unit: frame.node,
                        fix: Some(Fix {
                            component: step.child,
                            kind: FixKind::Replace,
                            cost: plan.nodes[step.child].c.clone(),
                            after_inspection: false,
                        }),
                    };
                }
                Ok(())
            }
            _ => Err(EventError::Inconsistent(format!(
                "`{}` is still broken but its plan has no steps left",
                node.id
            ))),
        }
    }

    fn observe(&mut self, plan: &ExecPlan<S>, unit: usize, outcome: Mode) {
        if matches!(plan.distribution, LeafDistribution::Joint(_)) {
            let mask = plan.nodes[unit]
                .leaves
                .clone()
                .filter(|&l| !self.fixed[l])
                .fold(0u64, |m, l| m | 1 << l);
            self.observations.push((mask, outcome.is_broken()));
        }
    }

    /// The outcome `world` (per-leaf broken flags) gives for the pending
    /// prompt.
    pub fn truth(&self, plan: &ExecPlan<S>, world: &[bool]) -> Option<Event> {
        let broken_in = |node: usize, skip: Option<&Range<usize>>| {
            plan.nodes[node]
                .leaves
                .clone()
                .any(|l| world[l] && !self.fixed[l] && !skip.is_some_and(|r| r.contains(&l)))
        };
        match &self.pending {
            Pending::Done => None,
            Pending::Inspect { component } => Some(Event::Inspect(Mode::from_broken(broken_in(*component, None)))),
            Pending::Status { unit, fix } => {
                let skip = fix.as_ref().map(|f| &plan.nodes[f.component].leaves);
                Some(Event::Status(Mode::from_broken(broken_in(*unit, skip))))
            }
        }
    }

    /// Expected cost still to be paid, given everything observed so far.
    pub fn expected_remaining_cost(&self, plan: &ExecPlan<S>) -> S {
        match &plan.distribution {
            LeafDistribution::Independent(_) => self.remaining_independent(plan),
            LeafDistribution::Joint(table) => self.remaining_joint(plan, table),
        }
    }

    fn remaining_independent(&self, plan: &ExecPlan<S>) -> S {
        let Some((top, lower)) = self.frames.split_last() else {
            return S::zero();
        };
        let below: S = lower.iter().map(|f| plan.suffix_ec(f.node, f.next)).sum();
        let here = match &self.pending {
            Pending::Done => return S::zero(),
            Pending::Inspect { .. } => plan.suffix_ecf(top.node, top.next),
            Pending::Status { fix: None, .. } => plan.suffix_ec(top.node, top.next),
            Pending::Status { fix: Some(fix), .. } if fix.after_inspection => {
                fix.cost.clone() + plan.suffix_ec(top.node, top.next)
            }
            Pending::Status { fix: Some(_), .. } => plan.suffix_ecf(top.node, top.next - 1),
        };
        here + below
    }

    fn remaining_joint(&self, plan: &ExecPlan<S>, table: &JointTable<S>) -> S {
        let mut mass = S::zero();
        let mut total = S::zero();
        for (mask, prob) in table.entries() {
            let consistent = self
                .observations
                .iter()
                .all(|(m, broken)| (mask & m != 0) == *broken);
            if !consistent || prob.is_zero() {
                continue;
            }
            let world: Vec<bool> = (0..plan.leaf_count()).map(|l| mask >> l & 1 == 1).collect();
            let mut sim = self.clone().without_history();
            sim.observations.clear();
            if sim.run(plan, &world).is_err() {
                continue;
            }
            mass = mass + prob.clone();
            total = total + prob.clone() * (sim.accumulated - self.accumulated.clone());
        }
        if mass.is_zero() {
            S::zero()
        } else {
            total / mass
        }
    }

    /// Drives the walker to completion from `world`.
    fn run(&mut self, plan: &ExecPlan<S>, world: &[bool]) -> std::result::Result<(), EventError> {
        while let Some(event) = self.truth(plan, world) {
            self.step(plan, event)?;
        }
        Ok(())
    }
}

/// Outcome of executing a plan in a fixed world.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<S> {
    pub history: ObservationHistory<S>,
    pub total_cost: S,
    pub actions_taken: usize,
}

/// Runs the repair protocol on `world` (per-leaf broken flags).
pub fn execute<S: Scalar>(plan: &ExecPlan<S>, world: &[bool]) -> Result<Trace<S>> {
    let mut w = Walker::new(plan);
    run_checked(plan, &mut w, world)?;
    Ok(Trace {
        total_cost: w.accumulated,
        actions_taken: w.actions,
        history: w.history,
    })
}

/// Like [`execute`] without recording the history.
pub fn execute_cost<S: Scalar>(plan: &ExecPlan<S>, world: &[bool]) -> Result<S> {
    let mut w = Walker::new(plan).without_history();
    run_checked(plan, &mut w, world)?;
    Ok(w.accumulated)
}

fn run_checked<S: Scalar>(plan: &ExecPlan<S>, w: &mut Walker<S>, world: &[bool]) -> Result<()> {
    if world.len() != plan.leaf_count() {
        return Err(PlanError::PlanMismatch(format!(
            "world has {} flags for {} leaves",
            world.len(),
            plan.leaf_count()
        )));
    }
    w.run(plan, world).map_err(|e| PlanError::Stuck(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AtomicSpec;

    fn fix5() -> (HierNode<f64>, HierPlan<f64>) {
        let model = HierNode::internal(
            "R",
            20.0,
            None,
            vec![
                HierNode::leaf("L1", 0.5, 4.0, Some(1.0)),
                HierNode::leaf("L2", 0.2, 3.0, Some(3.0)),
            ],
        );
        let plan = crate::hier::plan_system(&model, &Default::default()).unwrap().plan;
        (model, plan)
    }

    #[test]
    fn fix5_session_prompts() {
        let (model, plan) = fix5();
        let exec = ExecPlan::from_hier(&model, &plan).unwrap();
        let mut w = Walker::start_broken(&exec).unwrap();
        assert_eq!(
            w.prompt(&exec),
            Prompt::Replace {
                component: "L1".into(),
                unit: "R".into(),
                after_inspection: false
            }
        );
        assert!((w.expected_remaining_cost(&exec) - 5.0).abs() < 1e-12);

        let mut ok = w.clone();
        ok.apply(&exec, Event::Status(Mode::Ok)).unwrap();
        assert!(ok.is_done());
        assert_eq!(*ok.accumulated_cost(), 4.0);

        w.apply(&exec, Event::Status(Mode::Broken)).unwrap();
        assert!(matches!(w.prompt(&exec), Prompt::Replace { component, .. } if component == "L2".into()));
        assert!((w.expected_remaining_cost(&exec) - 3.0).abs() < 1e-12);
        let err = w.apply(&exec, Event::Inspect(Mode::Ok)).unwrap_err();
        assert!(matches!(err, EventError::WrongKind { .. }));
        let err = w.apply(&exec, Event::Status(Mode::Broken)).unwrap_err();
        assert!(matches!(err, EventError::Inconsistent(_)));
        w.apply(&exec, Event::Status(Mode::Ok)).unwrap();
        assert!(w.is_done());
        assert_eq!(*w.accumulated_cost(), 7.0);
        assert_eq!(w.expected_remaining_cost(&exec), 0.0);
        assert_eq!(w.apply(&exec, Event::Status(Mode::Ok)), Err(EventError::Finished));
    }

    #[test]
    fn execute_fix5_world() {
        let (model, plan) = fix5();
        let exec = ExecPlan::from_hier(&model, &plan).unwrap();
        let world = exec.world_flags(&World::broken(["L1"])).unwrap();
        let trace = execute(&exec, &world).unwrap();
        assert_eq!(trace.total_cost, 4.0);
        assert_eq!(trace.actions_taken, 1);
        assert!(trace.history.starts_with_status());
        assert_eq!(trace.history.total_cost(), 4.0);
        let none = execute(&exec, &[false, false]).unwrap();
        assert_eq!(none.total_cost, 0.0);
        assert_eq!(none.history.steps.len(), 1);
    }

    #[test]
    fn inspection_paths() {
        // FIX-6 style: inspect A then repair it.
        let flat = FlatSystem::independent(vec![
            AtomicSpec::inspectable("A", 0.5_f64, 4.0, 1.0, 2.0),
            AtomicSpec::new("B", 0.2, 3.0),
        ])
        .unwrap();
        let strat = Strategy::new(vec!["A".into(), "B".into()], ["A".into()]);
        let exec = ExecPlan::from_flat(&flat, &strat).unwrap();
        let trace = execute(&exec, &[true, true]).unwrap();
        // d_A + h_A + c_B
        assert_eq!(trace.total_cost, 6.0);
        let trace = execute(&exec, &[false, true]).unwrap();
        assert_eq!(trace.total_cost, 4.0);
        assert_eq!(trace.history.steps.len(), 4);

        let mut w = Walker::start_broken(&exec).unwrap();
        assert_eq!(w.prompt(&exec), Prompt::Inspect { component: "A".into() });
        w.apply(&exec, Event::Inspect(Mode::Broken)).unwrap();
        assert_eq!(
            w.prompt(&exec),
            Prompt::Repair {
                component: "A".into(),
                unit: SYSTEM_ID.into()
            }
        );
        // h_A + unconditional cost of replacing B afterwards.
        assert!((w.expected_remaining_cost(&exec) - (2.0 + 0.6)).abs() < 1e-12);
    }

    #[test]
    fn inspect_ok_on_last_step_is_inconsistent() {
        let flat = FlatSystem::independent(vec![AtomicSpec::inspectable("A", 0.5_f64, 4.0, 1.0, 2.0)]).unwrap();
        let strat = Strategy::new(vec!["A".into()], ["A".into()]);
        let exec = ExecPlan::from_flat(&flat, &strat).unwrap();
        let mut w = Walker::start_broken(&exec).unwrap();
        let before = w.clone();
        assert!(w.apply(&exec, Event::Inspect(Mode::Ok)).is_err());
        assert_eq!(w, before);
    }

    #[test]
    fn joint_remaining_cost_matches_conditional_expectation() {
        let joint = JointTable::new(
            vec!["A".into(), "B".into()],
            vec![
                (World::all_ok(), 0.4),
                (World::broken(["A"]), 0.3),
                (World::broken(["B"]), 0.2),
                (World::broken(["A", "B"]), 0.1),
            ],
        )
        .unwrap();
        let flat = FlatSystem::new(
            vec![AtomicSpec::new("A", 0.4_f64, 1.0), AtomicSpec::new("B", 0.3, 2.0)],
            Some(joint),
        )
        .unwrap();
        let exec = ExecPlan::from_flat(&flat, &Strategy::new(vec!["A".into(), "B".into()], [])).unwrap();
        let w = Walker::start_broken(&exec).unwrap();
        // ec 1.2 over P(fault) 0.6
        assert!((w.expected_remaining_cost(&exec) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nested_frames() {
        let model = HierNode::internal(
            "R",
            100.0_f64,
            None,
            vec![
                HierNode::internal(
                    "M",
                    60.0,
                    Some(1.0),
                    vec![HierNode::leaf("x", 0.2, 2.0, Some(0.5)), HierNode::leaf("y", 0.1, 3.0, Some(0.5))],
                ),
                HierNode::leaf("z", 0.3, 2.0, None),
            ],
        );
        let plan = crate::hier::plan_system(&model, &Default::default()).unwrap().plan;
        let exec = ExecPlan::from_hier(&model, &plan).unwrap();
        assert!((exec.root().h - plan.h).abs() < 1e-12);
        for mask in 0u32..8 {
            let world: Vec<bool> = (0..3).map(|l| mask >> l & 1 == 1).collect();
            let trace = execute(&exec, &world).unwrap();
            assert_eq!(trace.total_cost, trace.history.total_cost());
            assert_eq!(trace.total_cost == 0.0, mask == 0);
        }
    }
}

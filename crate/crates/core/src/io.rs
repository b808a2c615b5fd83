//! JSON model, strategy and plan files.
//!
//! Numbers are read as `f64` and converted with [`Scalar::lit`], so exact
//! scalars see the decimal literal that was written (`0.1` is `1/10`).
//! Writing goes back through `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{ValidationErrors, Warning};
use crate::hier::{HierPlan, PlanAction};
use crate::model::{AtomicSpec, ComponentId, FlatSystem, HierNode, JointTable, World};
use crate::scalar::Scalar;

/// On-disk model, either flat or hierarchical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelFile {
    Flat {
        components: Vec<ComponentFile>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        joint: Option<JointFile>,
    },
    Hier {
        root: NodeFile,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub id: ComponentId,
    pub p: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointFile {
    pub worlds: Vec<WorldFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    pub broken: Vec<ComponentId>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub id: ComponentId,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeFile>,
}

/// A validated model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model<S> {
    Flat(FlatSystem<S>),
    Hier(HierNode<S>),
}

impl<S: Scalar> Model<S> {
    pub fn as_flat(&self) -> Option<&FlatSystem<S>> {
        match self {
            Model::Flat(f) => Some(f),
            Model::Hier(_) => None,
        }
    }

    pub fn as_hier(&self) -> Option<&HierNode<S>> {
        match self {
            Model::Hier(h) => Some(h),
            Model::Flat(_) => None,
        }
    }

    pub fn to_file(&self) -> ModelFile {
        match self {
            Model::Flat(flat) => ModelFile::Flat {
                components: flat
                    .components()
                    .iter()
                    .map(|c| ComponentFile {
                        id: c.id.clone(),
                        p: c.p.to_f64_lossy(),
                        c: c.c.to_f64_lossy(),
                        d: c.d.as_ref().map(Scalar::to_f64_lossy),
                        h: c.h.as_ref().map(Scalar::to_f64_lossy),
                    })
                    .collect(),
                joint: flat.joint().map(|t| JointFile {
                    worlds: t
                        .worlds()
                        .map(|(w, p)| WorldFile {
                            // Component order, not alphabetical.
                            broken: t.components().iter().filter(|id| w.is_broken(id)).cloned().collect(),
                            prob: p.to_f64_lossy(),
                        })
                        .collect(),
                }),
            },
            Model::Hier(root) => ModelFile::Hier {
                root: node_to_file(root),
            },
        }
    }
}

fn node_to_file<S: Scalar>(node: &HierNode<S>) -> NodeFile {
    NodeFile {
        id: node.id.clone(),
        c: node.c.to_f64_lossy(),
        d: node.d.as_ref().map(Scalar::to_f64_lossy),
        p: node.leaf_p.as_ref().map(Scalar::to_f64_lossy),
        children: node.children.iter().map(node_to_file).collect(),
    }
}

fn node_from_file<S: Scalar>(file: &NodeFile) -> HierNode<S> {
    HierNode {
        id: file.id.clone(),
        c: S::lit(file.c),
        d: file.d.map(S::lit),
        children: file.children.iter().map(node_from_file).collect(),
        leaf_p: file.p.map(S::lit),
    }
}

/// A model with the warnings raised while validating it.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated<S> {
    pub model: Model<S>,
    pub warnings: Vec<Warning>,
}

/// Checks a parsed file and builds the model, collecting every error.
pub fn validate_model<S: Scalar>(file: &ModelFile) -> Result<Validated<S>, ValidationErrors> {
    match file {
        ModelFile::Flat { components, joint } => {
            let mut errors = ValidationErrors::default();
            for (i, c) in components.iter().enumerate() {
                if c.d.is_some() != c.h.is_some() {
                    errors.push(
                        format!("components[{i}]"),
                        "inspection spec incomplete: give both d and h or neither",
                    );
                }
            }
            let specs: Vec<AtomicSpec<S>> = components
                .iter()
                .map(|c| AtomicSpec {
                    id: c.id.clone(),
                    p: S::lit(c.p),
                    c: S::lit(c.c),
                    d: c.d.map(S::lit),
                    h: c.h.map(S::lit),
                })
                .collect();
            let table = match joint {
                None => None,
                Some(j) => {
                    let worlds = j
                        .worlds
                        .iter()
                        .map(|w| (World::broken(w.broken.iter().cloned()), S::lit(w.prob)))
                        .collect();
                    let ids = components.iter().map(|c| c.id.clone()).collect();
                    match JointTable::new(ids, worlds) {
                        Ok(t) => Some(t),
                        Err(e) => {
                            errors.0.extend(e.0);
                            None
                        }
                    }
                }
            };
            let table_failed = joint.is_some() && table.is_none();
            match FlatSystem::new(specs, table) {
                Ok(flat) if errors.is_empty() && !table_failed => {
                    let warnings = flat.warnings();
                    Ok(Validated {
                        model: Model::Flat(flat),
                        warnings,
                    })
                }
                Ok(_) => Err(errors),
                Err(e) => {
                    errors.0.extend(e.0);
                    Err(errors)
                }
            }
        }
        ModelFile::Hier { root } => {
            let node = node_from_file::<S>(root);
            let (errors, warnings) = node.validate();
            errors.into_result()?;
            Ok(Validated {
                model: Model::Hier(node),
                warnings,
            })
        }
    }
}

/// Parses and validates a model from JSON text.
pub fn parse_model<S: Scalar>(text: &str) -> Result<Validated<S>, ValidationErrors> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| {
        let mut errors = ValidationErrors::default();
        errors.push("model", e.to_string());
        errors
    })?;
    validate_model(&file)
}

pub fn model_to_json<S: Scalar>(model: &Model<S>) -> String {
    to_json(&model.to_file())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("plain data serializes");
    out.push('\n');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionTag {
    Replace,
    Strategy,
}

/// On-disk hierarchical plan. Field order is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub node: ComponentId,
    pub action: ActionTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<ComponentId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inspect: Option<Vec<ComponentId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<PlanFile>>,
    pub h: f64,
    pub p: f64,
    pub ec: f64,
}

impl<S: Scalar> From<&HierPlan<S>> for PlanFile {
    fn from(plan: &HierPlan<S>) -> Self {
        let (action, order, inspect, children) = match &plan.action {
            PlanAction::Replace => (ActionTag::Replace, None, None, None),
            PlanAction::Strategy {
                order,
                inspect,
                children,
            } => (
                ActionTag::Strategy,
                Some(order.clone()),
                Some(inspect.clone()),
                Some(children.iter().map(PlanFile::from).collect()),
            ),
        };
        PlanFile {
            node: plan.node.clone(),
            action,
            order,
            inspect,
            children,
            h: plan.h.to_f64_lossy(),
            p: plan.p.to_f64_lossy(),
            ec: plan.ec.to_f64_lossy(),
        }
    }
}

impl PlanFile {
    /// The plan as stored; use [`crate::hier::evaluate_plan`] to check it
    /// against a model and recompute the annotations.
    pub fn to_plan<S: Scalar>(&self) -> Result<HierPlan<S>, ValidationErrors> {
        let mut errors = ValidationErrors::default();
        let plan = self.to_plan_into("plan", &mut errors);
        errors.into_result()?;
        Ok(plan)
    }

    fn to_plan_into<S: Scalar>(&self, path: &str, errors: &mut ValidationErrors) -> HierPlan<S> {
        let action = match self.action {
            ActionTag::Replace => {
                if self.order.is_some() || self.inspect.is_some() || self.children.is_some() {
                    errors.push(path, "a replace action takes no order, inspect or children");
                }
                PlanAction::Replace
            }
            ActionTag::Strategy => {
                let order = self.order.clone().unwrap_or_default();
                if order.is_empty() {
                    errors.push(path, "a strategy needs a nonempty order");
                }
                let inspect = self.inspect.clone().unwrap_or_default();
                let children: Vec<HierPlan<S>> = self
                    .children
                    .iter()
                    .flatten()
                    .enumerate()
                    .map(|(i, ch)| ch.to_plan_into(&format!("{path}.children[{i}]"), errors))
                    .collect();
                if children.len() != inspect.len()
                    || children.iter().zip(&inspect).any(|(ch, id)| &ch.node != id)
                {
                    errors.push(path, "children must be the nested plans of the inspected components, in order");
                }
                PlanAction::Strategy {
                    order,
                    inspect,
                    children,
                }
            }
        };
        HierPlan {
            node: self.node.clone(),
            action,
            h: S::lit(self.h),
            p: S::lit(self.p),
            ec: S::lit(self.ec),
        }
    }
}

pub fn plan_to_json<S: Scalar>(plan: &HierPlan<S>) -> String {
    to_json(&PlanFile::from(plan))
}

pub fn parse_plan<S: Scalar>(text: &str) -> Result<HierPlan<S>, ValidationErrors> {
    let file: PlanFile = serde_json::from_str(text).map_err(|e| {
        let mut errors = ValidationErrors::default();
        errors.push("plan", e.to_string());
        errors
    })?;
    file.to_plan()
}

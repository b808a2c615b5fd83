//! Domain types: components, flat and hierarchical systems, worlds and joint
//! failure tables, plus the probability primitives every planner relies on.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result, ValidationErrors, Warning};
use crate::scalar::Scalar;

/// Largest number of components a joint table can address (one bit each).
pub const MAX_TABLE_COMPONENTS: usize = 64;

/// Default cap on anything that enumerates `2^n` worlds or subsets.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 20;

/// Label of a component, unique within one model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentId(String);

impl ComponentId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ComponentId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

impl From<String> for ComponentId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Binary state of a mode variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ok,
    Broken,
}

impl Mode {
    pub fn from_broken(broken: bool) -> Self {
        if broken {
            Mode::Broken
        } else {
            Mode::Ok
        }
    }

    pub fn is_broken(self) -> bool {
        self == Mode::Broken
    }
}

/// Failure prior and costs of one atomic component.
///
/// `d` is the inspection cost and `h` the cost of repairing the component
/// once an inspection has found it broken. Model files must give both or
/// neither; planners may supply `h` separately (see
/// [`crate::inspection::optimal_strategy`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicSpec<S> {
    pub id: ComponentId,
    pub p: S,
    pub c: S,
    pub d: Option<S>,
    pub h: Option<S>,
}

impl<S: Scalar> AtomicSpec<S> {
    /// A replace-only component.
    pub fn new(id: impl Into<ComponentId>, p: S, c: S) -> Self {
        Self {
            id: id.into(),
            p,
            c,
            d: None,
            h: None,
        }
    }

    /// An inspectable component.
    pub fn inspectable(id: impl Into<ComponentId>, p: S, c: S, d: S, h: S) -> Self {
        Self {
            id: id.into(),
            p,
            c,
            d: Some(d),
            h: Some(h),
        }
    }

    pub fn cast<T: Scalar>(&self) -> AtomicSpec<T> {
        AtomicSpec {
            id: self.id.clone(),
            p: T::lit(self.p.to_f64_lossy()),
            c: T::lit(self.c.to_f64_lossy()),
            d: self.d.as_ref().map(|d| T::lit(d.to_f64_lossy())),
            h: self.h.as_ref().map(|h| T::lit(h.to_f64_lossy())),
        }
    }
}

pub(crate) fn check_probability<S: Scalar>(p: &S, path: &str, errors: &mut ValidationErrors) {
    if *p < S::zero() || *p > S::one() {
        errors.push(path, format!("probability {p:?} outside [0, 1]"));
    }
}

pub(crate) fn check_cost<S: Scalar>(c: &S, path: &str, errors: &mut ValidationErrors) {
    if *c < S::zero() {
        errors.push(path, format!("negative cost {c:?}"));
    }
}

/// Complete assignment of modes, stored as the set of broken components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct World {
    pub broken: BTreeSet<ComponentId>,
}

impl World {
    pub fn all_ok() -> Self {
        Self::default()
    }

    pub fn broken<I, T>(ids: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<ComponentId>,
    {
        Self {
            broken: ids.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_broken(&self, id: &ComponentId) -> bool {
        self.broken.contains(id)
    }
}

/// Conjunction of mode assertions, e.g. `M_j = ok, M_[j+2,n] = ok`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModeEvent {
    pub ok_set: BTreeSet<ComponentId>,
    pub broken_set: BTreeSet<ComponentId>,
}

impl ModeEvent {
    pub fn all_ok<I, T>(ids: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<ComponentId>,
    {
        Self {
            ok_set: ids.into_iter().map(Into::into).collect(),
            broken_set: BTreeSet::new(),
        }
    }

    pub fn and(mut self, other: &ModeEvent) -> Self {
        self.ok_set.extend(other.ok_set.iter().cloned());
        self.broken_set.extend(other.broken_set.iter().cloned());
        self
    }

    /// An event asserting one component both ok and broken is impossible.
    pub fn is_contradictory(&self) -> bool {
        self.ok_set.intersection(&self.broken_set).next().is_some()
    }
}

/// Explicit distribution over worlds, `P(M_1, ..., M_n)`.
///
/// Worlds are stored as bitmasks over `components`; worlds not listed have
/// probability zero.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<S> {
    components: Vec<ComponentId>,
    index: HashMap<ComponentId, usize>,
    entries: Vec<(u64, S)>,
}

impl<S: Scalar> JointTable<S> {
    /// Builds and validates a table from explicit worlds.
    pub fn new(
        components: Vec<ComponentId>,
        worlds: Vec<(World, S)>,
    ) -> std::result::Result<Self, ValidationErrors> {
        let mut errors = ValidationErrors::default();
        let index = index_components(&components, "joint", &mut errors);
        if components.len() > MAX_TABLE_COMPONENTS {
            errors.push(
                "joint",
                format!("{} components exceed the table limit of {MAX_TABLE_COMPONENTS}", components.len()),
            );
            return Err(errors);
        }
        let mut entries = Vec::with_capacity(worlds.len());
        for (i, (world, prob)) in worlds.into_iter().enumerate() {
            let mut mask = 0u64;
            for id in &world.broken {
                match index.get(id) {
                    Some(&bit) => mask |= 1 << bit,
                    None => errors.push(format!("joint.worlds[{i}]"), format!("unknown component `{id}`")),
                }
            }
            entries.push((mask, prob));
        }
        errors.into_result()?;
        Self::from_masks(components, entries)
    }

    /// Builds a table whose worlds are already encoded as bitmasks over
    /// `components` (bit `i` set means component `i` is broken).
    pub fn from_masks(
        components: Vec<ComponentId>,
        entries: Vec<(u64, S)>,
    ) -> std::result::Result<Self, ValidationErrors> {
        let mut errors = ValidationErrors::default();
        let index = index_components(&components, "joint", &mut errors);
        let n = components.len();
        if n > MAX_TABLE_COMPONENTS {
            errors.push("joint", format!("{n} components exceed the table limit of {MAX_TABLE_COMPONENTS}"));
            return Err(errors);
        }
        let valid = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut seen = HashSet::new();
        let mut total = S::zero();
        for (i, (mask, prob)) in entries.iter().enumerate() {
            let path = format!("joint.worlds[{i}]");
            if mask & !valid != 0 {
                errors.push(&path, "world mentions a component outside the table");
            }
            if !seen.insert(*mask) {
                errors.push(&path, "duplicate world");
            }
            if *prob < S::zero() {
                errors.push(&path, format!("negative probability {prob:?}"));
            }
            total = total + prob.clone();
        }
        if (total.clone() - S::one()).abs() > S::normalization_tolerance() {
            errors.push("joint", format!("distribution not normalized (sums to {total:?})"));
        }
        errors.into_result()?;
        Ok(Self {
            components,
            index,
            entries,
        })
    }

    pub fn components(&self) -> &[ComponentId] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn index_of(&self, id: &ComponentId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Raw `(broken mask, probability)` entries.
    pub fn entries(&self) -> &[(u64, S)] {
        &self.entries
    }

    pub fn worlds(&self) -> impl Iterator<Item = (World, &S)> + '_ {
        self.entries.iter().map(|(mask, p)| (self.world_of(*mask), p))
    }

    pub fn world_of(&self, mask: u64) -> World {
        World {
            broken: self
                .components
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, id)| id.clone())
                .collect(),
        }
    }

    pub fn mask_of<'a, I>(&self, ids: I) -> Result<u64>
    where
        I: IntoIterator<Item = &'a ComponentId>,
    {
        ids.into_iter().try_fold(0u64, |mask, id| {
            self.index_of(id)
                .map(|bit| mask | 1 << bit)
                .ok_or_else(|| PlanError::UnknownComponent(id.clone()))
        })
    }

    /// `P(M_S = ok)`: total mass of worlds whose broken set misses `subset`.
    pub fn ok_marginal<'a, I>(&self, subset: I) -> Result<S>
    where
        I: IntoIterator<Item = &'a ComponentId>,
    {
        Ok(self.ok_marginal_mask(self.mask_of(subset)?))
    }

    pub fn ok_marginal_mask(&self, mask: u64) -> S {
        self.entries
            .iter()
            .filter(|(world, _)| world & mask == 0)
            .map(|(_, p)| p.clone())
            .sum()
    }

    /// Probability of a conjunction of mode assertions.
    pub fn probability(&self, event: &ModeEvent) -> Result<S> {
        if event.is_contradictory() {
            return Ok(S::zero());
        }
        let ok = self.mask_of(&event.ok_set)?;
        let broken = self.mask_of(&event.broken_set)?;
        Ok(self.probability_masks(ok, broken))
    }

    pub fn probability_masks(&self, ok: u64, broken: u64) -> S {
        self.entries
            .iter()
            .filter(|(world, _)| world & ok == 0 && world & broken == broken)
            .map(|(_, p)| p.clone())
            .sum()
    }

    /// `P(event | given)`, or `None` when `given` has probability zero.
    pub fn conditional(&self, event: &ModeEvent, given: &ModeEvent) -> Result<Option<S>> {
        let denom = self.probability(given)?;
        if denom <= S::zero() {
            return Ok(None);
        }
        let joint = self.probability(&event.clone().and(given))?;
        Ok(Some(joint / denom))
    }

    /// Marginal failure priors `P(M_i = b)` in component order.
    pub fn broken_marginals(&self) -> Vec<S> {
        (0..self.len())
            .map(|i| S::one() - self.ok_marginal_mask(1 << i))
            .collect()
    }

    /// Probability that at least one component is broken.
    pub fn fault_probability(&self) -> S {
        let all = if self.len() == 64 { u64::MAX } else { (1u64 << self.len()) - 1 };
        S::one() - self.ok_marginal_mask(all)
    }

    /// `P(M_S = ok)` for every subset `S`, indexed by mask.
    ///
    /// Uses the subset-sum transform: mass of worlds inside the complement
    /// of `S`. Size `2^n`, so `n` is capped by `limit`.
    pub fn ok_marginal_table(&self, limit: usize) -> Result<Vec<S>> {
        let n = self.len();
        if n > limit {
            return Err(PlanError::LimitExceeded {
                what: "subset table",
                size: n,
                limit,
                hint: None,
            });
        }
        let size = 1usize << n;
        let mut mass = vec![S::zero(); size];
        for (mask, p) in &self.entries {
            let slot = &mut mass[*mask as usize];
            *slot = slot.clone() + p.clone();
        }
        for bit in 0..n {
            for mask in 0..size {
                if mask >> bit & 1 == 1 {
                    let lower = mass[mask ^ (1 << bit)].clone();
                    mass[mask] = mass[mask].clone() + lower;
                }
            }
        }
        let full = size - 1;
        Ok((0..size).map(|s| mass[full ^ s].clone()).collect())
    }

    /// True when every positive-probability world has exactly one broken
    /// component. Returns the offending broken count otherwise.
    pub fn single_fault_violation(&self) -> Option<usize> {
        self.entries
            .iter()
            .filter(|(_, p)| *p > S::zero())
            .map(|(mask, _)| mask.count_ones() as usize)
            .find(|&count| count != 1)
    }

    /// Same distribution with components listed in `order`.
    pub fn reordered(&self, order: &[ComponentId]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(PlanError::NotAPermutation(format!(
                "expected {} components, got {}",
                self.len(),
                order.len()
            )));
        }
        let mut new_bit = vec![0usize; self.len()];
        let mut seen = HashSet::new();
        for (pos, id) in order.iter().enumerate() {
            let old = self
                .index_of(id)
                .ok_or_else(|| PlanError::UnknownComponent(id.clone()))?;
            if !seen.insert(old) {
                return Err(PlanError::NotAPermutation(format!("`{id}` listed twice")));
            }
            new_bit[old] = pos;
        }
        let entries = self
            .entries
            .iter()
            .map(|(mask, p)| {
                let remapped = (0..self.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .fold(0u64, |acc, i| acc | 1 << new_bit[i]);
                (remapped, p.clone())
            })
            .collect();
        Ok(Self {
            components: order.to_vec(),
            index: order.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect(),
            entries,
        })
    }

    pub fn cast<T: Scalar>(&self) -> JointTable<T> {
        JointTable {
            components: self.components.clone(),
            index: self.index.clone(),
            entries: self
                .entries
                .iter()
                .map(|(m, p)| (*m, T::lit(p.to_f64_lossy())))
                .collect(),
        }
    }
}

fn index_components(
    ids: &[ComponentId],
    path: &str,
    errors: &mut ValidationErrors,
) -> HashMap<ComponentId, usize> {
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if id.as_str().is_empty() {
            errors.push(format!("{path}[{i}]"), "empty component id");
        }
        if index.insert(id.clone(), i).is_some() {
            errors.push(format!("{path}[{i}]"), format!("duplicate id `{id}`"));
        }
    }
    index
}

/// Product-form table for independent Bernoulli failures.
///
/// `probs[i]` is the failure prior of `components[i]`; the table lists all
/// `2^n` worlds, so `n` is capped by `limit`.
pub fn independent_joint_from<S: Scalar>(
    components: &[ComponentId],
    probs: &[S],
    limit: usize,
) -> Result<JointTable<S>> {
    let n = components.len();
    if n > limit {
        return Err(PlanError::LimitExceeded {
            what: "world enumeration",
            size: n,
            limit,
            hint: None,
        });
    }
    let mut entries = Vec::with_capacity(1 << n);
    for mask in 0u64..(1u64 << n) {
        let prob = probs
            .iter()
            .enumerate()
            .fold(S::one(), |acc, (i, p)| {
                if mask >> i & 1 == 1 {
                    acc * p.clone()
                } else {
                    acc * (S::one() - p.clone())
                }
            });
        entries.push((mask, prob));
    }
    Ok(JointTable {
        components: components.to_vec(),
        index: components.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect(),
        entries,
    })
}

/// A flat system: atomic components, optionally with an explicit joint
/// failure table (independent failures when absent).
#[derive(Debug, Clone, PartialEq)]
pub struct FlatSystem<S> {
    components: Vec<AtomicSpec<S>>,
    joint: Option<JointTable<S>>,
    index: HashMap<ComponentId, usize>,
}

impl<S: Scalar> FlatSystem<S> {
    /// Independent-failure system.
    pub fn independent(components: Vec<AtomicSpec<S>>) -> std::result::Result<Self, ValidationErrors> {
        Self::new(components, None)
    }

    /// Checks ids, probabilities, costs and joint coverage. A joint table is
    /// reordered to match the component order.
    ///
    /// The pairing of `d` and `h` is checked by [`crate::io`] for model files
    /// only.
    pub fn new(
        components: Vec<AtomicSpec<S>>,
        joint: Option<JointTable<S>>,
    ) -> std::result::Result<Self, ValidationErrors> {
        let mut errors = ValidationErrors::default();
        if components.is_empty() {
            errors.push("components", "system needs at least one component");
        }
        let ids: Vec<ComponentId> = components.iter().map(|c| c.id.clone()).collect();
        let index = index_components(&ids, "components", &mut errors);
        for (i, comp) in components.iter().enumerate() {
            check_probability(&comp.p, &format!("components[{i}].p"), &mut errors);
            check_cost(&comp.c, &format!("components[{i}].c"), &mut errors);
            if let Some(d) = &comp.d {
                check_cost(d, &format!("components[{i}].d"), &mut errors);
            }
            if let Some(h) = &comp.h {
                check_cost(h, &format!("components[{i}].h"), &mut errors);
            }
        }
        let joint = match joint {
            None => None,
            Some(table) => {
                let covered: HashSet<&ComponentId> = table.components().iter().collect();
                let expected: HashSet<&ComponentId> = ids.iter().collect();
                if covered != expected || table.len() != ids.len() {
                    errors.push("joint", "joint table must cover exactly the system's components");
                    None
                } else {
                    match table.reordered(&ids) {
                        Ok(t) => Some(t),
                        Err(e) => {
                            errors.push("joint", e.to_string());
                            None
                        }
                    }
                }
            }
        };
        errors.into_result()?;
        Ok(Self {
            components,
            joint,
            index,
        })
    }

    pub fn components(&self) -> &[AtomicSpec<S>] {
        &self.components
    }

    pub fn component(&self, id: &ComponentId) -> Option<&AtomicSpec<S>> {
        self.index_of(id).map(|i| &self.components[i])
    }

    pub fn index_of(&self, id: &ComponentId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn joint(&self) -> Option<&JointTable<S>> {
        self.joint.as_ref()
    }

    /// True when no joint table is attached.
    pub fn is_independent(&self) -> bool {
        self.joint.is_none()
    }

    pub fn ids(&self) -> Vec<ComponentId> {
        self.components.iter().map(|c| c.id.clone()).collect()
    }

    pub fn probabilities(&self) -> Vec<S> {
        self.components.iter().map(|c| c.p.clone()).collect()
    }

    pub fn costs(&self) -> Vec<S> {
        self.components.iter().map(|c| c.c.clone()).collect()
    }

    /// `2^n`-world product table; only for independent systems.
    pub fn independent_joint(&self, limit: usize) -> Result<JointTable<S>> {
        if !self.is_independent() {
            return Err(PlanError::RequiresIndependence);
        }
        independent_joint_from(&self.ids(), &self.probabilities(), limit)
    }

    /// The attached table, or the product table for independent systems.
    pub fn distribution(&self, limit: usize) -> Result<JointTable<S>> {
        match &self.joint {
            Some(t) => Ok(t.clone()),
            None => self.independent_joint(limit),
        }
    }

    /// Probability that at least one component is broken.
    pub fn fault_probability(&self) -> S {
        match &self.joint {
            Some(t) => t.fault_probability(),
            None => {
                S::one()
                    - self
                        .components
                        .iter()
                        .fold(S::one(), |acc, c| acc * (S::one() - c.p.clone()))
            }
        }
    }

    /// Resolves ids to positions, requiring every id to be known.
    pub fn resolve(&self, ids: &[ComponentId]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| self.index_of(id).ok_or_else(|| PlanError::UnknownComponent(id.clone())))
            .collect()
    }

    pub fn cast<T: Scalar>(&self) -> FlatSystem<T> {
        FlatSystem {
            components: self.components.iter().map(AtomicSpec::cast).collect(),
            joint: self.joint.as_ref().map(JointTable::cast),
            index: self.index.clone(),
        }
    }

    /// Economic sanity warnings (inspection or repair dearer than
    /// replacement), and priors that disagree with an attached joint table.
    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        if let Some(table) = &self.joint {
            for (i, (comp, marginal)) in self.components.iter().zip(table.broken_marginals()).enumerate() {
                if (comp.p.clone() - marginal.clone()).abs() > S::normalization_tolerance() {
                    out.push(Warning::new(
                        format!("components[{i}].p"),
                        format!("prior {:?} differs from the joint marginal {marginal:?}; the joint is used", comp.p),
                    ));
                }
            }
        }
        for (i, comp) in self.components.iter().enumerate() {
            if let Some(d) = &comp.d {
                if *d > comp.c {
                    out.push(Warning::new(
                        format!("components[{i}].d"),
                        "inspection cost exceeds replacement cost; inspection will rarely pay off",
                    ));
                }
            }
            if let Some(h) = &comp.h {
                if *h > comp.c {
                    out.push(Warning::new(
                        format!("components[{i}].h"),
                        "repair cost exceeds replacement cost",
                    ));
                }
            }
        }
        out
    }
}

/// Node of a hierarchical component model.
///
/// A leaf carries its failure prior in `leaf_p`; an internal node fails iff
/// at least one child fails.
#[derive(Debug, Clone, PartialEq)]
pub struct HierNode<S> {
    pub id: ComponentId,
    pub c: S,
    pub d: Option<S>,
    pub children: Vec<HierNode<S>>,
    pub leaf_p: Option<S>,
}

impl<S: Scalar> HierNode<S> {
    pub fn leaf(id: impl Into<ComponentId>, p: S, c: S, d: Option<S>) -> Self {
        Self {
            id: id.into(),
            c,
            d,
            children: Vec::new(),
            leaf_p: Some(p),
        }
    }

    pub fn internal(id: impl Into<ComponentId>, c: S, d: Option<S>, children: Vec<HierNode<S>>) -> Self {
        Self {
            id: id.into(),
            c,
            d,
            children,
            leaf_p: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Structural and numeric checks over the whole tree.
    pub fn validate(&self) -> (ValidationErrors, Vec<Warning>) {
        let mut errors = ValidationErrors::default();
        let mut warnings = Vec::new();
        let mut seen = HashSet::new();
        self.validate_into("root", &mut seen, &mut errors, &mut warnings);
        (errors, warnings)
    }

    fn validate_into<'a>(
        &'a self,
        path: &str,
        seen: &mut HashSet<&'a ComponentId>,
        errors: &mut ValidationErrors,
        warnings: &mut Vec<Warning>,
    ) {
        if self.id.as_str().is_empty() {
            errors.push(path, "empty component id");
        }
        if !seen.insert(&self.id) {
            errors.push(path, format!("duplicate id `{}`", self.id));
        }
        check_cost(&self.c, &format!("{path}.c"), errors);
        if let Some(d) = &self.d {
            check_cost(d, &format!("{path}.d"), errors);
            if *d > self.c {
                warnings.push(Warning::new(
                    format!("{path}.d"),
                    "inspection cost exceeds replacement cost; inspection will rarely pay off",
                ));
            }
        }
        match (&self.leaf_p, self.children.is_empty()) {
            (Some(p), true) => check_probability(p, &format!("{path}.p"), errors),
            (None, true) => errors.push(path, "malformed tree: leaf without failure probability"),
            (Some(_), false) => errors.push(path, "malformed tree: internal node carries a leaf probability"),
            (None, false) => {}
        }
        for (i, child) in self.children.iter().enumerate() {
            child.validate_into(&format!("{path}.children[{i}]"), seen, errors, warnings);
        }
    }

    /// `p = 1 - prod(1 - p_child)`, recursively; a leaf returns its prior.
    pub fn failure_probability(&self) -> S {
        match &self.leaf_p {
            Some(p) if self.children.is_empty() => p.clone(),
            _ => {
                S::one()
                    - self
                        .children
                        .iter()
                        .fold(S::one(), |acc, ch| acc * (S::one() - ch.failure_probability()))
            }
        }
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&HierNode<S>> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a HierNode<S>>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            for ch in &self.children {
                ch.collect_leaves(out);
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children.iter().map(HierNode::leaf_count).sum()
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(HierNode::node_count).sum::<usize>()
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }

    pub fn max_branching(&self) -> usize {
        self.children
            .iter()
            .map(HierNode::max_branching)
            .max()
            .unwrap_or(0)
            .max(self.children.len())
    }

    pub fn find(&self, id: &ComponentId) -> Option<&HierNode<S>> {
        if &self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    pub fn cast<T: Scalar>(&self) -> HierNode<T> {
        HierNode {
            id: self.id.clone(),
            c: T::lit(self.c.to_f64_lossy()),
            d: self.d.as_ref().map(|d| T::lit(d.to_f64_lossy())),
            children: self.children.iter().map(HierNode::cast).collect(),
            leaf_p: self.leaf_p.as_ref().map(|p| T::lit(p.to_f64_lossy())),
        }
    }
}

/// Unconditional expected cost and expected cost given the system is faulty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport<S> {
    pub ec: S,
    pub ecf: S,
}

impl<S: Scalar> CostReport<S> {
    /// `ecf = ec / P(fault)`; an error when the system cannot fail.
    pub fn from_ec(ec: S, fault_probability: S) -> Result<Self> {
        if fault_probability <= S::zero() {
            return Err(PlanError::CannotFail);
        }
        let ecf = ec.clone() / fault_probability;
        Ok(Self { ec, ecf })
    }
}

/// Kind of a fixing action recorded in a history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixKind {
    /// Replacement at cost `c`.
    Replace,
    /// Repair after a positive inspection, at cost `h`.
    Repair,
}

/// One entry of an observation history.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryStep<S> {
    /// Free observation of a unit's status (the system, or a subassembly
    /// under repair).
    Status { unit: ComponentId, outcome: Mode },
    Fix { component: ComponentId, kind: FixKind, cost: S },
    Inspect { component: ComponentId, outcome: Mode, cost: S },
}

impl<S: Scalar> HistoryStep<S> {
    pub fn cost(&self) -> S {
        match self {
            HistoryStep::Status { .. } => S::zero(),
            HistoryStep::Fix { cost, .. } | HistoryStep::Inspect { cost, .. } => cost.clone(),
        }
    }
}

/// Ordered record of observations and actions; starts with a status
/// observation of the system.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationHistory<S> {
    pub steps: Vec<HistoryStep<S>>,
}

impl<S: Scalar> ObservationHistory<S> {
    pub fn total_cost(&self) -> S {
        self.steps.iter().map(HistoryStep::cost).sum()
    }

    pub fn starts_with_status(&self) -> bool {
        matches!(self.steps.first(), Some(HistoryStep::Status { .. }))
    }

    pub fn actions(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| !matches!(s, HistoryStep::Status { .. }))
            .count()
    }
}

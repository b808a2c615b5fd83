//! Random models: the full k-ary benchmark trees and small random systems
//! for property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{AtomicSpec, ComponentId, FlatSystem, HierNode, JointTable};
use crate::scalar::Scalar;

/// Sampling intervals for [`generate_tree`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenRanges {
    /// Leaf failure probability.
    pub p: (f64, f64),
    /// Replacement cost of every node.
    pub c: (f64, f64),
    /// Inspection cost as a fraction of the replacement cost.
    pub d_fraction: (f64, f64),
}

impl Default for GenRanges {
    fn default() -> Self {
        Self {
            p: (0.01, 0.2),
            c: (1.0, 100.0),
            d_fraction: (0.05, 0.5),
        }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn round_to(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (x * scale).round() / scale
}

/// Full k-ary tree of the given depth (in edges), so `k^depth` leaves.
///
/// Ids are paths: `N`, `N.0`, `N.0.4`. Every node but the root gets an
/// inspection cost. Values are rounded to a few decimals so model files stay
/// readable. The same arguments always give the same tree.
pub fn generate_tree<S: Scalar>(k: usize, depth: usize, seed: u64, ranges: &GenRanges) -> HierNode<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_full(&mut rng, "N".to_string(), k, depth, true, ranges)
}

fn gen_full<S: Scalar>(
    rng: &mut ChaCha8Rng,
    id: String,
    k: usize,
    depth: usize,
    root: bool,
    ranges: &GenRanges,
) -> HierNode<S> {
    let c = round_to(uniform(rng, ranges.c), 2);
    let d = round_to(c * uniform(rng, ranges.d_fraction), 2);
    let d = (!root).then(|| S::lit(d));
    if depth == 0 {
        let p = round_to(uniform(rng, ranges.p), 4);
        return HierNode::leaf(id, S::lit(p), S::lit(c), d);
    }
    let children = (0..k)
        .map(|i| gen_full(rng, format!("{id}.{i}"), k, depth - 1, false, ranges))
        .collect();
    HierNode::internal(id, S::lit(c), d, children)
}

/// Random independent flat system. With `inspect`, every component gets
/// `d <= c` and `h <= c`.
pub fn random_flat(rng: &mut impl Rng, n: usize, inspect: bool) -> FlatSystem<f64> {
    let specs = (0..n)
        .map(|i| {
            let p = rng.random_range(0.01..0.99);
            let c = rng.random_range(0.0..100.0);
            if inspect {
                let d = c * rng.random_range(0.0..1.0);
                let h = c * rng.random_range(0.0..1.0);
                AtomicSpec::inspectable(format!("c{i}"), p, c, d, h)
            } else {
                AtomicSpec::new(format!("c{i}"), p, c)
            }
        })
        .collect();
    FlatSystem::independent(specs).expect("generated values are valid")
}

fn ids(n: usize) -> Vec<ComponentId> {
    (0..n).map(|i| ComponentId::new(format!("c{i}"))).collect()
}

/// Random joint table over `n` components. Roughly a quarter of the worlds
/// get probability zero.
pub fn random_joint(rng: &mut impl Rng, n: usize) -> JointTable<f64> {
    let mut weights: Vec<f64> = (0..1u64 << n)
        .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..1.0) })
        .collect();
    if weights.iter().skip(1).all(|w| *w == 0.0) {
        weights[1] = 1.0;
    }
    let total: f64 = weights.iter().sum();
    let entries = weights
        .into_iter()
        .enumerate()
        .filter(|(_, w)| *w > 0.0)
        .map(|(mask, w)| (mask as u64, w / total))
        .collect();
    JointTable::from_masks(ids(n), entries).expect("normalized by construction")
}

/// Random single-fault table: exactly one component broken in every world.
pub fn random_single_fault(rng: &mut impl Rng, n: usize) -> JointTable<f64> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let entries = weights.iter().enumerate().map(|(i, w)| (1u64 << i, w / total)).collect();
    JointTable::from_masks(ids(n), entries).expect("normalized by construction")
}

/// Random costs for `n` components.
pub fn random_costs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..100.0)).collect()
}

/// Random tree with at most `max_leaves` leaves, depth at most `max_depth`
/// edges and at most `max_branching` children per node.
pub fn random_tree(rng: &mut impl Rng, max_leaves: usize, max_depth: usize, max_branching: usize) -> HierNode<f64> {
    let mut next_id = 0;
    let (mut root, _) = random_node(rng, &mut next_id, 0, max_leaves, max_depth, max_branching);
    root.d = None;
    root
}

fn random_node(
    rng: &mut impl Rng,
    next_id: &mut usize,
    depth: usize,
    budget: usize,
    max_depth: usize,
    max_branching: usize,
) -> (HierNode<f64>, usize) {
    let id = format!("n{next_id}");
    *next_id += 1;
    let d_frac = rng.random_range(0.05..0.6);
    let has_d = rng.random_bool(0.8);
    let make_leaf = depth == max_depth || budget < 2 || max_branching < 2 || (depth > 0 && rng.random_bool(0.35));
    if make_leaf {
        let p = rng.random_range(0.02..0.6);
        let c = rng.random_range(1.0..20.0);
        let d = has_d.then_some(c * d_frac);
        return (HierNode::leaf(id, p, c, d), 1);
    }
    let k = rng.random_range(2..=max_branching.min(budget));
    let mut remaining = budget;
    let mut children = Vec::with_capacity(k);
    let mut child_cost = 0.0;
    for i in 0..k {
        let reserve = k - 1 - i;
        let (child, used) = random_node(rng, next_id, depth + 1, remaining - reserve, max_depth, max_branching);
        remaining -= used;
        child_cost += child.c;
        children.push(child);
    }
    let c = child_cost * rng.random_range(0.3..1.5);
    let d = has_d.then_some(c * d_frac);
    (HierNode::internal(id, c, d, children), budget - remaining)
}

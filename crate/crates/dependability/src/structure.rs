//! Reliability block diagrams.
//!
//! A [`StructureModel`] is a tree of series, parallel and k-of-n blocks over
//! named components. Components fail independently. When the same
//! component appears in several branches (a bridge, a shared power supply)
//! the model must declare it shared; evaluation then conditions on every
//! on/off assignment of the shared components and sums the weighted
//! results, which stays exact for up to [`crate::MAX_SHARED`] of them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::prob::{all_of, any_of, check_probability};
use crate::{DependabilityError, Result, MAX_SHARED};

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Component(String),
    Series(Vec<Block>),
    Parallel(Vec<Block>),
    /// Works when at least `k` children work.
    KofN {
        k: usize,
        children: Vec<Block>,
    },
}

impl Block {
    pub fn component(id: impl Into<String>) -> Self {
        Block::Component(id.into())
    }

    fn visit_components<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Block::Component(id) => f(id),
            Block::Series(c) | Block::Parallel(c) | Block::KofN { children: c, .. } => {
                c.iter().for_each(|b| b.visit_components(f))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Block::Component(id) if id.is_empty() => {
                Err(DependabilityError::MalformedStructure("empty component id".into()))
            }
            Block::Component(_) => Ok(()),
            Block::Series(c) | Block::Parallel(c) if c.is_empty() => {
                Err(DependabilityError::MalformedStructure("series/parallel block without children".into()))
            }
            Block::KofN { k, children } if *k == 0 || *k > children.len() => {
                Err(DependabilityError::MalformedStructure(format!(
                    "k-of-n block needs 1 <= k <= {}, got k = {k}",
                    children.len()
                )))
            }
            Block::Series(c) | Block::Parallel(c) | Block::KofN { children: c, .. } => {
                c.iter().try_for_each(Block::validate)
            }
        }
    }

    fn has_kofn(&self) -> bool {
        match self {
            Block::Component(_) => false,
            Block::KofN { .. } => true,
            Block::Series(c) | Block::Parallel(c) => c.iter().any(Block::has_kofn),
        }
    }

    fn eval(&self, leaf: &impl Fn(&str) -> f64) -> f64 {
        match self {
            Block::Component(id) => leaf(id),
            Block::Series(c) => all_of(c.iter().map(|b| b.eval(leaf))),
            Block::Parallel(c) => any_of(c.iter().map(|b| b.eval(leaf))),
            Block::KofN { k, children } => at_least_k(*k, children.iter().map(|b| b.eval(leaf))),
        }
    }
}

/// Probability that at least `k` of independent events occur, by dynamic
/// programming over the children in O(n·k).
fn at_least_k(k: usize, probs: impl Iterator<Item = f64>) -> f64 {
    // dist[j] = P(exactly j so far) for j < k, dist[k] = P(at least k)
    let mut dist = vec![0.0; k + 1];
    dist[0] = 1.0;
    for p in probs {
        dist[k] += dist[k - 1] * p;
        for j in (1..k).rev() {
            dist[j] = dist[j] * (1.0 - p) + dist[j - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    dist[k].clamp(0.0, 1.0)
}

/// Validated block diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureModel {
    root: Block,
    shared: BTreeSet<String>,
}

impl StructureModel {
    /// A diagram in which every component id appears exactly once.
    pub fn new(root: Block) -> Result<Self> {
        Self::with_shared(root, std::iter::empty::<String>())
    }

    /// A diagram where the listed components may appear in several branches.
    pub fn with_shared<S: Into<String>>(root: Block, shared: impl IntoIterator<Item = S>) -> Result<Self> {
        root.validate()?;
        let shared: BTreeSet<String> = shared.into_iter().map(Into::into).collect();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        root.visit_components(&mut |id| *counts.entry(id).or_default() += 1);
        if let Some((id, n)) = counts.iter().find(|(id, n)| **n > 1 && !shared.contains(**id)) {
            return Err(DependabilityError::MalformedStructure(format!(
                "component `{id}` appears {n} times but is not declared shared"
            )));
        }
        if let Some(id) = shared.iter().find(|id| !counts.contains_key(id.as_str())) {
            return Err(DependabilityError::MalformedStructure(format!(
                "shared component `{id}` does not appear in the diagram"
            )));
        }
        if shared.len() > MAX_SHARED {
            return Err(DependabilityError::TooManyShared { count: shared.len(), limit: MAX_SHARED });
        }
        Ok(Self { root, shared })
    }

    pub fn root(&self) -> &Block {
        &self.root
    }

    pub fn shared(&self) -> &BTreeSet<String> {
        &self.shared
    }

    /// Distinct component ids, sorted.
    pub fn components(&self) -> BTreeSet<String> {
        let mut ids = BTreeSet::new();
        self.root.visit_components(&mut |id| {
            ids.insert(id.to_string());
        });
        ids
    }

    pub fn is_kofn_free(&self) -> bool {
        !self.root.has_kofn()
    }
}

/// Source of per-component reliabilities.
pub trait ReliabilityLookup {
    fn reliability(&self, id: &str) -> Option<f64>;
}

impl ReliabilityLookup for HashMap<String, f64> {
    fn reliability(&self, id: &str) -> Option<f64> {
        self.get(id).copied()
    }
}

impl ReliabilityLookup for BTreeMap<String, f64> {
    fn reliability(&self, id: &str) -> Option<f64> {
        self.get(id).copied()
    }
}

impl<F: Fn(&str) -> Option<f64>> ReliabilityLookup for F {
    fn reliability(&self, id: &str) -> Option<f64> {
        self(id)
    }
}

pub(crate) fn resolve_all(structure: &StructureModel, lookup: &impl ReliabilityLookup) -> Result<HashMap<String, f64>> {
    structure
        .components()
        .into_iter()
        .map(|id| {
            let p = lookup.reliability(&id).ok_or_else(|| DependabilityError::MissingComponent(id.clone()))?;
            check_probability(&id, p)?;
            Ok((id, p))
        })
        .collect()
}

/// Probability that the system works.
pub fn rbd_reliability(structure: &StructureModel, component_reliability: &impl ReliabilityLookup) -> Result<f64> {
    let probs = resolve_all(structure, component_reliability)?;
    if structure.shared.is_empty() {
        return Ok(structure.root.eval(&|id| probs[id]));
    }

    let shared: Vec<&str> = structure.shared.iter().map(String::as_str).collect();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << shared.len()) {
        let up = |i: usize| mask & (1 << i) != 0;
        let weight: f64 =
            shared.iter().enumerate().map(|(i, id)| if up(i) { probs[*id] } else { 1.0 - probs[*id] }).product();
        if weight == 0.0 {
            continue;
        }
        let conditioned = structure.root.eval(&|id| match shared.iter().position(|s| *s == id) {
            Some(i) => f64::from(u8::from(up(i))),
            None => probs[id],
        });
        total += weight * conditioned;
    }
    Ok(total.clamp(0.0, 1.0))
}

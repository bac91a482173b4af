//! Static fault trees and the RBD duality.
//!
//! A series block fails when any child fails (OR of failures); a parallel
//! block fails only when all children fail (AND of failures). Basic events
//! are independent. The same basic event may appear under several gates;
//! those repeats are resolved exactly by conditioning, as for shared RBD
//! components.

use std::collections::BTreeMap;

use crate::prob::{all_of, any_of, check_probability};
use crate::structure::{resolve_all, Block, ReliabilityLookup, StructureModel};
use crate::{DependabilityError, Result, MAX_SHARED};

/// Largest number of failure combinations a k-of-n block may expand into.
const MAX_KOFN_EXPANSION: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum FaultTree {
    BasicEvent { id: String, probability: f64 },
    And(Vec<FaultTree>),
    Or(Vec<FaultTree>),
}

impl FaultTree {
    pub fn basic(id: impl Into<String>, probability: f64) -> Self {
        FaultTree::BasicEvent { id: id.into(), probability }
    }

    /// Basic events by id. Repeated ids must carry the same probability.
    fn basic_events(&self) -> Result<BTreeMap<&str, (f64, usize)>> {
        fn walk<'a>(t: &'a FaultTree, out: &mut BTreeMap<&'a str, (f64, usize)>) -> Result<()> {
            match t {
                FaultTree::BasicEvent { id, probability } => {
                    check_probability(id, *probability)?;
                    let entry = out.entry(id.as_str()).or_insert((*probability, 0));
                    if entry.0 != *probability {
                        return Err(DependabilityError::MalformedTree(format!(
                            "basic event `{id}` repeated with probabilities {} and {probability}",
                            entry.0
                        )));
                    }
                    entry.1 += 1;
                    Ok(())
                }
                FaultTree::And(c) | FaultTree::Or(c) => {
                    if c.is_empty() {
                        return Err(DependabilityError::MalformedTree("gate without children".into()));
                    }
                    c.iter().try_for_each(|g| walk(g, out))
                }
            }
        }
        let mut out = BTreeMap::new();
        walk(self, &mut out)?;
        Ok(out)
    }

    fn eval(&self, leaf: &impl Fn(&str, f64) -> f64) -> f64 {
        match self {
            FaultTree::BasicEvent { id, probability } => leaf(id, *probability),
            FaultTree::And(c) => all_of(c.iter().map(|g| g.eval(leaf))),
            FaultTree::Or(c) => any_of(c.iter().map(|g| g.eval(leaf))),
        }
    }
}

/// Probability of the top event.
pub fn fta_top_event(tree: &FaultTree) -> Result<f64> {
    let events = tree.basic_events()?;
    let repeated: Vec<(&str, f64)> = events.iter().filter(|(_, (_, n))| *n > 1).map(|(id, (p, _))| (*id, *p)).collect();
    if repeated.is_empty() {
        return Ok(tree.eval(&|_, p| p));
    }
    if repeated.len() > MAX_SHARED {
        return Err(DependabilityError::TooManyShared { count: repeated.len(), limit: MAX_SHARED });
    }
    let mut total = 0.0;
    for mask in 0u32..(1u32 << repeated.len()) {
        let occurs = |i: usize| mask & (1 << i) != 0;
        let weight: f64 = repeated.iter().enumerate().map(|(i, (_, p))| if occurs(i) { *p } else { 1.0 - p }).product();
        if weight == 0.0 {
            continue;
        }
        let conditioned = tree.eval(&|id, p| match repeated.iter().position(|(r, _)| *r == id) {
            Some(i) => f64::from(u8::from(occurs(i))),
            None => p,
        });
        total += weight * conditioned;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Fault tree whose top event is "the system described by `structure` fails".
///
/// Basic event ids equal component ids and carry `1 − reliability`.
/// A k-of-n block fails when any `n − k + 1` children fail, so it expands
/// into an OR over those subsets of ANDs; this is refused when the subset
/// count exceeds 256.
pub fn rbd_to_fault_tree(
    structure: &StructureModel,
    component_reliability: &impl ReliabilityLookup,
) -> Result<FaultTree> {
    let probs = resolve_all(structure, component_reliability)?;
    convert(structure.root(), &|id| 1.0 - probs[id])
}

fn convert(block: &Block, unreliability: &impl Fn(&str) -> f64) -> Result<FaultTree> {
    let all = |c: &[Block]| c.iter().map(|b| convert(b, unreliability)).collect::<Result<Vec<_>>>();
    Ok(match block {
        Block::Component(id) => FaultTree::basic(id.clone(), unreliability(id)),
        Block::Series(c) => FaultTree::Or(all(c)?),
        Block::Parallel(c) => FaultTree::And(all(c)?),
        Block::KofN { k, children } => {
            let n = children.len();
            let fail_count = n - k + 1;
            let combos = binomial(n, fail_count);
            if combos > MAX_KOFN_EXPANSION {
                return Err(DependabilityError::Unexpandable(format!(
                    "{k}-of-{n} expands into {combos} failure combinations (limit {MAX_KOFN_EXPANSION})"
                )));
            }
            let converted = all(children)?;
            let mut gates = Vec::with_capacity(combos);
            for subset in subsets(n, fail_count) {
                gates.push(FaultTree::And(subset.into_iter().map(|i| converted[i].clone()).collect()));
            }
            FaultTree::Or(gates)
        }
    })
}

fn binomial(n: usize, r: usize) -> usize {
    let r = r.min(n - r);
    (0..r).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All `r`-element index subsets of `0..n` in lexicographic order.
fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..r).rev().find(|&i| idx[i] != i + n - r) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

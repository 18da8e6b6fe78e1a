//! Exhaustive search over multiplicity-respecting bijections between two
//! multisets of vanishing orders. Ground truth for the greedy pairing used by
//! the verifier; only practical for small instances.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::chain::{LimitSeriesSkeleton, OrderMultiset};
use crate::error::OracleError;
use crate::verify::{self, MatchedPair};

pub const DEFAULT_ORACLE_BOUND: i64 = 8;

/// What every pair `(left, right)` of a bijection must satisfy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairConstraint {
    /// Node condition: every sum is at least `b`.
    AtLeast { b: i64 },
    /// Component condition: every sum is at most `cap`, except that pairs
    /// summing to exactly `cap + 1` are allowed up to `exceptional[left]`
    /// times for each left order.
    AtMost {
        cap: i64,
        exceptional: BTreeMap<i64, i64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingInstance {
    pub left: OrderMultiset,
    pub right: OrderMultiset,
    pub constraint: PairConstraint,
    pub bound: i64,
}

impl PairingInstance {
    pub fn new(left: OrderMultiset, right: OrderMultiset, constraint: PairConstraint) -> Self {
        Self {
            left,
            right,
            constraint,
            bound: DEFAULT_ORACLE_BOUND,
        }
    }

    pub fn with_bound(mut self, bound: i64) -> Self {
        self.bound = bound;
        self
    }
}

struct Search<'a> {
    left: Vec<i64>,
    right: Vec<(i64, i64)>,
    constraint: &'a PairConstraint,
    /// Left orders with a positive exceptional budget, in a fixed order.
    budget_keys: Vec<i64>,
    failed: HashSet<(usize, Vec<i64>, Vec<i64>)>,
    chosen: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, pos: usize, budgets: &mut Vec<i64>) -> bool {
        if pos == self.left.len() {
            return true;
        }
        let key = (
            pos,
            self.right.iter().map(|&(_, c)| c).collect::<Vec<_>>(),
            budgets.clone(),
        );
        if self.failed.contains(&key) {
            return false;
        }
        let a = self.left[pos];
        // Each distinct right order is tried once; copies are interchangeable.
        for j in 0..self.right.len() {
            let (q, remaining) = self.right[j];
            if remaining == 0 {
                continue;
            }
            let sum = a + q;
            let spent = match self.constraint {
                PairConstraint::AtLeast { b } => {
                    if sum < *b {
                        continue;
                    }
                    None
                }
                PairConstraint::AtMost { cap, .. } => {
                    if sum <= *cap {
                        None
                    } else if sum == cap + 1 {
                        match self.budget_keys.iter().position(|&o| o == a) {
                            Some(slot) if budgets[slot] > 0 => Some(slot),
                            _ => continue,
                        }
                    } else {
                        continue;
                    }
                }
            };
            self.right[j].1 -= 1;
            if let Some(slot) = spent {
                budgets[slot] -= 1;
            }
            self.chosen.push(j);
            if self.run(pos + 1, budgets) {
                return true;
            }
            self.chosen.pop();
            if let Some(slot) = spent {
                budgets[slot] += 1;
            }
            self.right[j].1 += 1;
        }
        self.failed.insert(key);
        false
    }
}

/// Searches all bijections between `left` and `right`; returns one satisfying
/// the constraint, as `(left order, right order)` pairs, if any exists.
pub fn exists_feasible_pairing(
    inst: &PairingInstance,
) -> Result<Option<Vec<(i64, i64)>>, OracleError> {
    let (lt, rt) = (inst.left.total(), inst.right.total());
    let size = lt.max(rt);
    if size > inst.bound {
        return Err(OracleError::InstanceTooLarge {
            size,
            bound: inst.bound,
        });
    }
    if lt != rt {
        return Err(OracleError::UnequalTotals {
            left: lt,
            right: rt,
        });
    }
    let (budget_keys, mut budgets): (Vec<i64>, Vec<i64>) = match &inst.constraint {
        PairConstraint::AtMost { exceptional, .. } => exceptional
            .iter()
            .filter(|&(_, &m)| m > 0)
            .map(|(&o, &m)| (o, m))
            .unzip(),
        PairConstraint::AtLeast { .. } => (Vec::new(), Vec::new()),
    };
    let mut search = Search {
        left: inst.left.expand_ascending(),
        right: inst.right.iter().collect(),
        constraint: &inst.constraint,
        budget_keys,
        failed: HashSet::new(),
        chosen: Vec::new(),
    };
    if !search.run(0, &mut budgets) {
        return Ok(None);
    }
    let witness = search
        .left
        .iter()
        .zip(&search.chosen)
        .map(|(&a, &j)| (a, search.right[j].0))
        .collect();
    Ok(Some(witness))
}

/// The verdict of the greedy pairing (left ascending against right
/// descending) on `inst`. The verifier reaches the same verdict on the
/// corresponding node or component.
pub fn greedy_verdict(inst: &PairingInstance) -> bool {
    let Some(pairs) = verify::greedy_pairing(&inst.left, &inst.right) else {
        return false;
    };
    match &inst.constraint {
        PairConstraint::AtLeast { b } => pairs.iter().all(|pr| pr.sum() >= *b),
        PairConstraint::AtMost { cap, exceptional } => {
            let mut used: BTreeMap<i64, i64> = BTreeMap::new();
            for pr in &pairs {
                if pr.sum() > cap + 1 {
                    return false;
                }
                if pr.sum() == cap + 1 {
                    *used.entry(pr.p).or_insert(0) += pr.mult;
                }
            }
            used.iter()
                .all(|(a, &u)| u <= exceptional.get(a).copied().unwrap_or(0))
        }
    }
}

/// Collapses `(p, q)` pairs into runs.
pub fn pairs_to_runs(pairs: &[(i64, i64)]) -> Vec<MatchedPair> {
    let mut counts: BTreeMap<(i64, i64), i64> = BTreeMap::new();
    for &(p, q) in pairs {
        *counts.entry((p, q)).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|((p, q), mult)| MatchedPair { p, q, mult })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    /// `"node"` or `"component"`.
    pub kind: &'static str,
    pub index: i64,
    pub greedy: bool,
    pub oracle: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CrossValidation {
    pub nodes_checked: usize,
    pub components_checked: usize,
    /// Instances beyond the oracle bound, with the reason.
    pub skipped: Vec<String>,
    pub disagreements: Vec<Disagreement>,
}

impl CrossValidation {
    pub fn agrees(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Oracle instance for the condition at node `j` of `s`.
pub fn node_instance(s: &LimitSeriesSkeleton, node: i64) -> PairingInstance {
    PairingInstance::new(
        s.table(node + 1).at_p.clone(),
        s.table(node).at_q.clone(),
        PairConstraint::AtLeast { b: s.b },
    )
}

/// Oracle instance for the vanishing-sum rules on component `i` of `s`.
pub fn component_instance(s: &LimitSeriesSkeleton, i: i64) -> PairingInstance {
    let table = s.table(i);
    let bundle = s.bundle(i);
    let d1 = s.decomposition.d1;
    let exceptional = table
        .at_p
        .iter()
        .map(|(a, _)| (a, bundle.exceptional_budget(a, d1)))
        .collect();
    PairingInstance::new(
        table.at_p.clone(),
        table.at_q.clone(),
        PairConstraint::AtMost {
            cap: d1 - 1,
            exceptional,
        },
    )
}

/// Compares the greedy verdict of the verifier with the oracle on every node
/// and component of `s`. Instances above `bound` are skipped and listed.
pub fn cross_validate(s: &LimitSeriesSkeleton, bound: i64) -> CrossValidation {
    let mut out = CrossValidation::default();
    for node in &s.chain.nodes {
        let inst = node_instance(s, node.index).with_bound(bound);
        let greedy = verify::greedy_node_verdict(s, node.index).meets_threshold;
        match exists_feasible_pairing(&inst) {
            Ok(found) => {
                out.nodes_checked += 1;
                if found.is_some() != greedy {
                    out.disagreements.push(Disagreement {
                        kind: "node",
                        index: node.index,
                        greedy,
                        oracle: found.is_some(),
                    });
                }
            }
            Err(OracleError::UnequalTotals { .. }) => {
                out.nodes_checked += 1;
                if greedy {
                    out.disagreements.push(Disagreement {
                        kind: "node",
                        index: node.index,
                        greedy,
                        oracle: false,
                    });
                }
            }
            Err(e) => out.skipped.push(format!("node {}: {e}", node.index)),
        }
    }
    for i in 1..=s.genus() {
        let inst = component_instance(s, i).with_bound(bound);
        let greedy = verify::greedy_component_verdict(s, i).pairing_ok;
        match exists_feasible_pairing(&inst) {
            Ok(found) => {
                out.components_checked += 1;
                if found.is_some() != greedy {
                    out.disagreements.push(Disagreement {
                        kind: "component",
                        index: i,
                        greedy,
                        oracle: found.is_some(),
                    });
                }
            }
            Err(OracleError::UnequalTotals { .. }) => {
                out.components_checked += 1;
                if greedy {
                    out.disagreements.push(Disagreement {
                        kind: "component",
                        index: i,
                        greedy,
                        oracle: false,
                    });
                }
            }
            Err(e) => out.skipped.push(format!("component {i}: {e}")),
        }
    }
    out
}

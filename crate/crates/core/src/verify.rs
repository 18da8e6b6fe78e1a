//! Certification of a skeleton against the checkable conditions of a limit
//! linear series, plus the slope comparator used in the stability argument.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::{ComponentBundle, LimitSeriesSkeleton, OrderMultiset, VanishingTable};
use crate::error::VerifyError;
use crate::oracle::{self, pairs_to_runs};

/// `mult` sections vanishing to order `p` on the P side and `q` on the Q
/// side. For a node these are `P_{j+1}` and `Q_j`; for a component `P_i` and
/// `Q_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub p: i64,
    pub q: i64,
    pub mult: i64,
}

impl MatchedPair {
    pub fn sum(&self) -> i64 {
        self.p + self.q
    }
}

impl fmt::Display for MatchedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(P {}, Q {})×{}", self.p, self.q, self.mult)
    }
}

/// Pairs `p_side` ascending with `q_side` descending, position by position.
///
/// Returns `None` when the totals differ.
pub fn greedy_pairing(p_side: &OrderMultiset, q_side: &OrderMultiset) -> Option<Vec<MatchedPair>> {
    if p_side.total() != q_side.total() {
        return None;
    }
    let mut ps = p_side.iter();
    let mut qs = q_side.iter().rev();
    let (mut p_left, mut q_left) = (0, 0);
    let mut out = Vec::new();
    let (mut p_cur, mut q_cur) = (0, 0);
    loop {
        if p_left == 0 {
            match ps.next() {
                Some((o, m)) => (p_cur, p_left) = (o, m),
                None => break,
            }
        }
        if q_left == 0 {
            let (o, m) = qs.next().expect("totals agree");
            (q_cur, q_left) = (o, m);
        }
        let take = p_left.min(q_left);
        out.push(MatchedPair {
            p: p_cur,
            q: q_cur,
            mult: take,
        });
        p_left -= take;
        q_left -= take;
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not machine-checkable in this model; taken as a hypothesis.
    Assumed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub status: Status,
    pub witness: Option<String>,
}

impl CheckOutcome {
    fn pass() -> Self {
        Self {
            status: Status::Pass,
            witness: None,
        }
    }

    fn fail(witness: String) -> Self {
        Self {
            status: Status::Fail,
            witness: Some(witness),
        }
    }

    fn from_first_failure(witness: Option<String>) -> Self {
        witness.map_or_else(Self::pass, Self::fail)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeVerdict {
    pub node: i64,
    /// Greedy pairing of `Q_node` (descending) with `P_{node+1}` (ascending),
    /// or the oracle's pairing when the greedy one failed and the oracle
    /// found another.
    pub pairs: Vec<MatchedPair>,
    /// Some bijection has every sum `≥ b`.
    pub meets_threshold: bool,
    /// Every sum is exactly `b`.
    pub exact: bool,
    pub oracle_consulted: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentVerdict {
    pub component: i64,
    pub pairs: Vec<MatchedPair>,
    /// Rule (i): no order appears more than `r` times at either point.
    pub multiplicity_ok: bool,
    /// Rules (ii) and (iii): no pair sums past `d1`, and pairs summing to
    /// exactly `d1` stay within the exceptional budget of their P order.
    pub pairing_ok: bool,
    pub oracle_consulted: bool,
    pub witness: Option<String>,
}

impl ComponentVerdict {
    pub fn passed(&self) -> bool {
        self.multiplicity_ok && self.pairing_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    /// Every checkable condition holds; the node-determinacy condition is
    /// assumed.
    PassModuloGenericity,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub degree_balance: CheckOutcome,
    pub node_pairing: CheckOutcome,
    pub node_pairing_exact: CheckOutcome,
    pub component_feasibility: CheckOutcome,
    pub boundary_minimality: CheckOutcome,
    pub multiplicity_bounds: CheckOutcome,
    pub determined_at_nodes: CheckOutcome,
    pub nodes: Vec<NodeVerdict>,
    pub components: Vec<ComponentVerdict>,
    pub overall: Overall,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.overall == Overall::PassModuloGenericity
    }

    /// `(name, outcome)` for every check, in report order.
    pub fn checks(&self) -> [(&'static str, &CheckOutcome); 7] {
        [
            ("degree_balance", &self.degree_balance),
            ("node_pairing", &self.node_pairing),
            ("node_pairing_exact", &self.node_pairing_exact),
            ("component_feasibility", &self.component_feasibility),
            ("boundary_minimality", &self.boundary_minimality),
            ("multiplicity_bounds", &self.multiplicity_bounds),
            ("determined_at_nodes", &self.determined_at_nodes),
        ]
    }
}

/// The greedy verdict at `node`, without consulting the oracle.
pub fn greedy_node_verdict(s: &LimitSeriesSkeleton, node: i64) -> NodeVerdict {
    let q_side = &s.table(node).at_q;
    let p_side = &s.table(node + 1).at_p;
    let Some(pairs) = greedy_pairing(p_side, q_side) else {
        return NodeVerdict {
            node,
            pairs: Vec::new(),
            meets_threshold: false,
            exact: false,
            oracle_consulted: false,
            witness: Some(format!(
                "node {node}: Q_{node} has {} sections, P_{} has {}",
                q_side.total(),
                node + 1,
                p_side.total()
            )),
        };
    };
    let low = pairs.iter().find(|pr| pr.sum() < s.b);
    let off = pairs.iter().find(|pr| pr.sum() != s.b);
    NodeVerdict {
        node,
        meets_threshold: low.is_none(),
        exact: off.is_none(),
        oracle_consulted: false,
        witness: off.map(|pr| format!("node {node}: pair {pr} sums to {} (b = {})", pr.sum(), s.b)),
        pairs,
    }
}

/// Checks the vanishing condition at every node.
///
/// The greedy pairing maximizes the minimum sum; when it fails and the
/// instance is small enough, the oracle is consulted before declaring failure.
pub fn check_node_pairing(s: &LimitSeriesSkeleton) -> Vec<NodeVerdict> {
    s.chain
        .nodes
        .iter()
        .map(|n| {
            let mut v = greedy_node_verdict(s, n.index);
            if !v.meets_threshold && !v.pairs.is_empty() {
                let inst = oracle::node_instance(s, n.index);
                if let Ok(found) = oracle::exists_feasible_pairing(&inst) {
                    v.oracle_consulted = true;
                    if let Some(pairs) = found {
                        v.pairs = pairs_to_runs(&pairs);
                        v.meets_threshold = true;
                        v.exact = v.pairs.iter().all(|pr| pr.sum() == s.b);
                    }
                }
            }
            v
        })
        .collect()
}

/// `P_i` ascending against `Q_i` descending.
pub fn induced_pairing(table: &VanishingTable) -> Option<Vec<MatchedPair>> {
    greedy_pairing(&table.at_p, &table.at_q)
}

fn multiplicity_violation(table: &VanishingTable, r: i64) -> Option<String> {
    for (point, m) in [('P', &table.at_p), ('Q', &table.at_q)] {
        if let Some((order, mult)) = m.iter().find(|&(_, mult)| mult > r) {
            return Some(format!(
                "C_{}: order {order} at {point} has multiplicity {mult} > r = {r}",
                table.component
            ));
        }
    }
    None
}

fn same_orders(pairs: &[MatchedPair], table: &VanishingTable) -> bool {
    let p = OrderMultiset::from_pairs(pairs.iter().map(|pr| (pr.p, pr.mult)));
    let q = OrderMultiset::from_pairs(pairs.iter().map(|pr| (pr.q, pr.mult)));
    pairs.iter().all(|pr| pr.mult > 0) && p == table.at_p && q == table.at_q
}

fn pairing_violation(bundle: &ComponentBundle, pairs: &[MatchedPair], d1: i64) -> Option<String> {
    let c = bundle.component;
    if let Some(pr) = pairs.iter().find(|pr| pr.sum() > d1) {
        return Some(format!("C_{c}: pair {pr} sums to {} > d1 = {d1}", pr.sum()));
    }
    let mut exceptional: BTreeMap<i64, i64> = BTreeMap::new();
    for pr in pairs.iter().filter(|pr| pr.sum() == d1) {
        *exceptional.entry(pr.p).or_insert(0) += pr.mult;
    }
    exceptional.into_iter().find_map(|(a, used)| {
        let budget = bundle.exceptional_budget(a, d1);
        (used > budget).then(|| {
            format!(
                "C_{c}: {used} section(s) vanish to orders ({a}, {}) but only {budget} allowed",
                d1 - a
            )
        })
    })
}

/// Checks a component against the vanishing-sum rules for sections on an
/// elliptic curve, using the given pairing of its P and Q vanishing.
pub fn check_component_feasibility(
    bundle: &ComponentBundle,
    table: &VanishingTable,
    pairs: Option<&[MatchedPair]>,
    d1: i64,
    r: i64,
) -> Result<ComponentVerdict, VerifyError> {
    let pairs = pairs.ok_or(VerifyError::PairingNotGiven)?;
    if !same_orders(pairs, table) {
        return Err(VerifyError::PairingMismatch);
    }
    let mult = multiplicity_violation(table, r);
    let pairing = pairing_violation(bundle, pairs, d1);
    Ok(ComponentVerdict {
        component: table.component,
        pairs: pairs.to_vec(),
        multiplicity_ok: mult.is_none(),
        pairing_ok: pairing.is_none(),
        oracle_consulted: false,
        witness: mult.or(pairing),
    })
}

/// The verdict on component `i` using the induced pairing only.
pub fn greedy_component_verdict(s: &LimitSeriesSkeleton, i: i64) -> ComponentVerdict {
    let table = s.table(i);
    let bundle = s.bundle(i);
    match induced_pairing(table) {
        Some(pairs) => {
            check_component_feasibility(bundle, table, Some(&pairs), s.decomposition.d1, s.params.r)
                .expect("induced pairing uses the table's orders")
        }
        None => ComponentVerdict {
            component: i,
            pairs: Vec::new(),
            multiplicity_ok: multiplicity_violation(table, s.params.r).is_none(),
            pairing_ok: false,
            oracle_consulted: false,
            witness: Some(format!(
                "C_{i}: {} sections at P, {} at Q",
                table.at_p.total(),
                table.at_q.total()
            )),
        },
    }
}

fn component_verdict(s: &LimitSeriesSkeleton, i: i64) -> ComponentVerdict {
    let mut v = greedy_component_verdict(s, i);
    if !v.pairing_ok && !v.pairs.is_empty() {
        let inst = oracle::component_instance(s, i);
        if let Ok(found) = oracle::exists_feasible_pairing(&inst) {
            v.oracle_consulted = true;
            if let Some(pairs) = found {
                v.pairs = pairs_to_runs(&pairs);
                v.pairing_ok = true;
                v.witness = multiplicity_violation(s.table(i), s.params.r);
            }
        }
    }
    v
}

/// `P_1` and `Q_g` must both carry the minimal vanishing
/// `{0:r, …, k1−1:r, k1:k2}`.
pub fn check_boundary(s: &LimitSeriesSkeleton) -> CheckOutcome {
    let dec = &s.decomposition;
    let expected = OrderMultiset::minimal(s.params.r, dec.k1, dec.k2);
    let g = s.genus();
    for (label, found) in [
        ("P_1", &s.table(1).at_p),
        (&*format!("Q_{g}"), &s.table(g).at_q),
    ] {
        if found != &expected {
            let order = found
                .iter()
                .chain(expected.iter())
                .map(|(o, _)| o)
                .filter(|&o| found.multiplicity(o) != expected.multiplicity(o))
                .min()
                .expect("multisets differ");
            return CheckOutcome::fail(format!(
                "{label}: order {order} has multiplicity {}, expected {} (found {found}, expected {expected})",
                found.multiplicity(order),
                expected.multiplicity(order)
            ));
        }
    }
    CheckOutcome::pass()
}

/// Every table has `k` sections at each point, orders in `0..=d1`, and no
/// order repeated more than `r` times.
pub fn check_multiplicity_bounds(s: &LimitSeriesSkeleton) -> CheckOutcome {
    let (r, k, d1) = (s.params.r, s.params.k, s.decomposition.d1);
    let witness = s.tables.iter().find_map(|t| {
        for (point, m) in [('P', &t.at_p), ('Q', &t.at_q)] {
            if m.total() != k {
                return Some(format!(
                    "C_{}: {} sections at {point}, expected {k}",
                    t.component,
                    m.total()
                ));
            }
            if let Some(o) = m.iter().map(|(o, _)| o).find(|o| !(0..=d1).contains(o)) {
                return Some(format!(
                    "C_{}: order {o} at {point} outside 0..={d1}",
                    t.component
                ));
            }
        }
        multiplicity_violation(t, r)
    });
    CheckOutcome::from_first_failure(witness)
}

/// Runs every check on `s`.
pub fn verify(s: &LimitSeriesSkeleton) -> VerificationReport {
    let shape_ok = s.tables.len() == s.genus() as usize
        && s.bundles.len() == s.genus() as usize
        && s.chain.nodes.len() + 1 == s.genus() as usize;
    if !shape_ok {
        let broken = CheckOutcome::fail(format!(
            "skeleton has {} components, {} bundles, {} tables, {} nodes",
            s.genus(),
            s.bundles.len(),
            s.tables.len(),
            s.chain.nodes.len()
        ));
        return VerificationReport {
            degree_balance: broken.clone(),
            node_pairing: broken.clone(),
            node_pairing_exact: broken.clone(),
            component_feasibility: broken.clone(),
            boundary_minimality: broken.clone(),
            multiplicity_bounds: broken,
            determined_at_nodes: assumed(),
            nodes: Vec::new(),
            components: Vec::new(),
            overall: Overall::Fail,
        };
    }

    let balance = s.degree_balance();
    let degree_balance = if balance == 0 {
        CheckOutcome::pass()
    } else {
        CheckOutcome::fail(format!("Σ D_i − r(g−1)b − d = {balance} (b = {})", s.b))
    };

    let nodes = check_node_pairing(s);
    let node_pairing = CheckOutcome::from_first_failure(
        nodes
            .iter()
            .find(|v| !v.meets_threshold)
            .and_then(|v| v.witness.clone()),
    );
    let node_pairing_exact = CheckOutcome::from_first_failure(
        nodes
            .iter()
            .find(|v| !v.exact)
            .and_then(|v| v.witness.clone()),
    );

    let components: Vec<ComponentVerdict> =
        (1..=s.genus()).map(|i| component_verdict(s, i)).collect();
    let component_feasibility = CheckOutcome::from_first_failure(
        components
            .iter()
            .find(|v| !v.passed())
            .and_then(|v| v.witness.clone()),
    );

    let boundary_minimality = check_boundary(s);
    let multiplicity_bounds = check_multiplicity_bounds(s);
    let overall = if [
        &degree_balance,
        &node_pairing,
        &component_feasibility,
        &boundary_minimality,
        &multiplicity_bounds,
    ]
    .iter()
    .all(|c| c.passed())
    {
        Overall::PassModuloGenericity
    } else {
        Overall::Fail
    };
    VerificationReport {
        degree_balance,
        node_pairing,
        node_pairing_exact,
        component_feasibility,
        boundary_minimality,
        multiplicity_bounds,
        determined_at_nodes: assumed(),
        nodes,
        components,
        overall,
    }
}

fn assumed() -> CheckOutcome {
    CheckOutcome {
        status: Status::Assumed,
        witness: Some("sections are determined by their values at the nodes (genericity)".into()),
    }
}

/// Query for the slope comparison `k′/r′ ≤ k/r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeQuery {
    pub kprime: i64,
    pub rprime: i64,
    pub k: i64,
    pub r: i64,
}

/// `k′/r′ ≤ k/r`, by cross-multiplication. Requires `r′, r ≥ 1`.
pub fn slope_ok(q: SlopeQuery) -> bool {
    debug_assert!(q.rprime >= 1 && q.r >= 1);
    (q.kprime as i128) * (q.r as i128) <= (q.k as i128) * (q.rprime as i128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ComponentRole, Summand};
    use crate::construct::construct;
    use crate::params::Params;

    fn ms(pairs: &[(i64, i64)]) -> OrderMultiset {
        OrderMultiset::from_pairs(pairs.iter().copied())
    }

    fn worked() -> LimitSeriesSkeleton {
        construct(&Params::new(7, 3, 16, 5).unwrap()).unwrap()
    }

    #[test]
    fn worked_instance_node_one() {
        let s = worked();
        let v = &check_node_pairing(&s)[0];
        assert!(v.meets_threshold && v.exact);
        assert_eq!(
            v.pairs,
            vec![
                MatchedPair {
                    p: 0,
                    q: 5,
                    mult: 1
                },
                MatchedPair {
                    p: 1,
                    q: 4,
                    mult: 3
                },
                MatchedPair {
                    p: 2,
                    q: 3,
                    mult: 1
                },
            ]
        );
    }

    #[test]
    fn greedy_pairing_examples() {
        let pairs = greedy_pairing(&ms(&[(0, 1), (1, 1)]), &ms(&[(2, 1), (1, 1)])).unwrap();
        let sums: Vec<_> = pairs.iter().map(MatchedPair::sum).collect();
        assert_eq!(sums, vec![2, 2]);
        assert!(pairs.iter().any(|p| p.sum() < 3));
        let pairs = greedy_pairing(&ms(&[(0, 4)]), &ms(&[(6, 4)])).unwrap();
        assert_eq!(
            pairs,
            vec![MatchedPair {
                p: 0,
                q: 6,
                mult: 4
            }]
        );
        assert!(greedy_pairing(&ms(&[(0, 2)]), &ms(&[(0, 1)])).is_none());
    }

    #[test]
    fn twisted_summand_allows_exceptional_pair() {
        let bundle = ComponentBundle::mixed(
            2,
            ComponentRole::Ramp,
            vec![
                Summand::Twisted { a: 2, mult: 1 },
                Summand::GenericLine { mult: 1 },
            ],
            3,
        );
        let table = VanishingTable {
            component: 2,
            at_p: ms(&[(0, 1), (2, 1)]),
            at_q: ms(&[(2, 1), (1, 1)]),
        };
        let pairs = [
            MatchedPair {
                p: 0,
                q: 2,
                mult: 1,
            },
            MatchedPair {
                p: 2,
                q: 1,
                mult: 1,
            },
        ];
        let v = check_component_feasibility(&bundle, &table, Some(&pairs), 3, 2).unwrap();
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn generic_lines_reject_sum_d1() {
        let bundle = ComponentBundle::mixed(
            2,
            ComponentRole::Tail,
            vec![Summand::GenericLine { mult: 2 }],
            3,
        );
        let table = VanishingTable {
            component: 2,
            at_p: ms(&[(0, 1), (1, 1)]),
            at_q: ms(&[(3, 1), (2, 1)]),
        };
        let pairs = induced_pairing(&table).unwrap();
        let v = check_component_feasibility(&bundle, &table, Some(&pairs), 3, 2).unwrap();
        assert!(!v.pairing_ok);
        assert!(v.witness.unwrap().contains("only 0 allowed"));
    }

    #[test]
    fn first_component_of_worked_instance() {
        let s = worked();
        let pairs = induced_pairing(s.table(1)).unwrap();
        let v = check_component_feasibility(s.bundle(1), s.table(1), Some(&pairs), 5, 3).unwrap();
        assert!(v.passed());
        let exceptional: Vec<_> = pairs.iter().filter(|p| p.sum() == 5).collect();
        assert_eq!(
            exceptional,
            vec![
                &MatchedPair {
                    p: 0,
                    q: 5,
                    mult: 1
                },
                &MatchedPair {
                    p: 1,
                    q: 4,
                    mult: 1
                }
            ]
        );
    }

    #[test]
    fn pairing_must_be_given_and_match() {
        let s = worked();
        assert_eq!(
            check_component_feasibility(s.bundle(1), s.table(1), None, 5, 3),
            Err(VerifyError::PairingNotGiven)
        );
        let wrong = [MatchedPair {
            p: 0,
            q: 5,
            mult: 5,
        }];
        assert_eq!(
            check_component_feasibility(s.bundle(1), s.table(1), Some(&wrong), 5, 3),
            Err(VerifyError::PairingMismatch)
        );
    }

    #[test]
    fn boundary_checks() {
        let s = worked();
        assert!(check_boundary(&s).passed());
        let mut bad = s.clone();
        bad.table_mut(1).at_p = ms(&[(0, 3), (2, 2)]);
        let out = check_boundary(&bad);
        assert_eq!(out.status, Status::Fail);
        assert!(out.witness.unwrap().starts_with("P_1: order 1"));
    }

    #[test]
    fn small_c_boundary_has_no_top_entry() {
        let s = construct(&Params::new(8, 2, 12, 4).unwrap()).unwrap();
        assert_eq!(s.table(1).at_p, ms(&[(0, 2), (1, 2)]));
        assert!(check_boundary(&s).passed());
    }

    #[test]
    fn slope_examples() {
        let q = |kprime, rprime| SlopeQuery {
            kprime,
            rprime,
            k: 5,
            r: 3,
        };
        assert!(!slope_ok(q(2, 1)));
        assert!(slope_ok(q(1, 1)));
        assert!(slope_ok(q(5, 3)));
    }

    #[test]
    fn verify_worked_instance() {
        let report = verify(&worked());
        assert!(report.passed());
        assert!(report.node_pairing_exact.passed());
        assert_eq!(report.determined_at_nodes.status, Status::Assumed);
    }

    #[test]
    fn shifted_b_breaks_degree_balance() {
        let mut s = worked();
        s.b += 1;
        let report = verify(&s);
        assert_eq!(report.degree_balance.status, Status::Fail);
        assert!(!report.passed());
    }

    #[test]
    fn lowered_q_order_breaks_node() {
        let mut s = worked();
        let q3 = &mut s.table_mut(3).at_q;
        let top = q3.max_order().unwrap();
        q3.add(top, -1);
        q3.add(top - 1, 1);
        let report = verify(&s);
        assert_eq!(report.node_pairing.status, Status::Fail);
        let failing: Vec<_> = report
            .nodes
            .iter()
            .filter(|v| !v.meets_threshold)
            .map(|v| v.node)
            .collect();
        assert_eq!(failing, vec![3]);
        assert!(report.nodes[2].oracle_consulted);
    }

    #[test]
    fn truncated_skeleton_fails_cleanly() {
        let mut s = worked();
        s.tables.pop();
        assert_eq!(verify(&s).overall, Overall::Fail);
    }
}

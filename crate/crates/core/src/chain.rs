//! Data model for chains of elliptic curves and the limit linear series
//! skeletons built on them.
//!
//! Points `P_i`, `Q_i` are symbolic; "generic" is a tag. Component and node
//! indices are 1-based to match the usual `C_1, …, C_g` labelling.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ChainError;
use crate::params::{CaseTag, Decomposition, Params};

/// Node `index` identifies `Q_index` on `C_index` with `P_{index+1}` on
/// `C_{index+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub index: i64,
    pub q_component: i64,
    pub p_component: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainCurve {
    pub components: i64,
    pub nodes: Vec<Node>,
}

pub fn build_chain(g: i64) -> Result<ChainCurve, ChainError> {
    if g < 2 {
        return Err(ChainError::TooFewComponents(g));
    }
    let nodes = (1..g)
        .map(|i| Node {
            index: i,
            q_component: i,
            p_component: i + 1,
        })
        .collect();
    Ok(ChainCurve {
        components: g,
        nodes,
    })
}

/// A multiset of vanishing orders, stored as order → multiplicity.
///
/// Zero multiplicities are never stored. Serialized as an ascending list of
/// `[order, multiplicity]` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<(i64, i64)>", into = "Vec<(i64, i64)>")]
pub struct OrderMultiset(BTreeMap<i64, i64>);

impl OrderMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a multiset from `(order, multiplicity)` pairs, merging repeats.
    pub fn from_pairs<I: IntoIterator<Item = (i64, i64)>>(pairs: I) -> Self {
        let mut m = Self::new();
        for (order, mult) in pairs {
            m.add(order, mult);
        }
        m
    }

    pub fn add(&mut self, order: i64, mult: i64) {
        if mult == 0 {
            return;
        }
        let slot = self.0.entry(order).or_insert(0);
        *slot += mult;
        if *slot == 0 {
            self.0.remove(&order);
        }
    }

    pub fn multiplicity(&self, order: i64) -> i64 {
        self.0.get(&order).copied().unwrap_or(0)
    }

    pub fn total(&self) -> i64 {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(order, multiplicity)` in ascending order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (i64, i64)> + '_ {
        self.0.iter().map(|(&o, &m)| (o, m))
    }

    pub fn max_multiplicity(&self) -> Option<(i64, i64)> {
        self.iter().max_by_key(|&(o, m)| (m, -o))
    }

    pub fn min_order(&self) -> Option<i64> {
        self.0.keys().next().copied()
    }

    pub fn max_order(&self) -> Option<i64> {
        self.0.keys().next_back().copied()
    }

    /// Every element listed individually, ascending.
    pub fn expand_ascending(&self) -> Vec<i64> {
        self.iter()
            .flat_map(|(o, m)| std::iter::repeat_n(o, m.max(0) as usize))
            .collect()
    }

    pub fn expand_descending(&self) -> Vec<i64> {
        let mut v = self.expand_ascending();
        v.reverse();
        v
    }

    /// `{ c − o : o ∈ self }`.
    pub fn reflect(&self, c: i64) -> Self {
        Self::from_pairs(self.iter().map(|(o, m)| (c - o, m)))
    }

    /// `{0:r, 1:r, …, k1−1:r, k1:k2}`: the smallest vanishing a `k`-dimensional
    /// space of sections of a rank-`r` bundle can have at a point.
    pub fn minimal(r: i64, k1: i64, k2: i64) -> Self {
        let mut m = Self::from_pairs((0..k1).map(|o| (o, r)));
        m.add(k1, k2);
        m
    }
}

impl TryFrom<Vec<(i64, i64)>> for OrderMultiset {
    type Error = String;

    fn try_from(pairs: Vec<(i64, i64)>) -> Result<Self, Self::Error> {
        let mut m = BTreeMap::new();
        for (order, mult) in pairs {
            if mult <= 0 {
                return Err(format!(
                    "order {order} has non-positive multiplicity {mult}"
                ));
            }
            if m.insert(order, mult).is_some() {
                return Err(format!("order {order} listed twice"));
            }
        }
        Ok(Self(m))
    }
}

impl From<OrderMultiset> for Vec<(i64, i64)> {
    fn from(m: OrderMultiset) -> Self {
        m.0.into_iter().collect()
    }
}

impl fmt::Display for OrderMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (o, m)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{o}:{m}")?;
        }
        f.write_str("}")
    }
}

/// Vanishing orders of the chosen sections at `P_i` and `Q_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingTable {
    pub component: i64,
    pub at_p: OrderMultiset,
    pub at_q: OrderMultiset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Summand {
    /// `mult` copies of `O(aP + (d1−a)Q)`.
    Twisted { a: i64, mult: i64 },
    /// `mult` generic line bundles of degree `d1`.
    GenericLine { mult: i64 },
}

impl Summand {
    pub fn rank(&self) -> i64 {
        match *self {
            Summand::Twisted { mult, .. } | Summand::GenericLine { mult } => mult,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BundleKind {
    /// Direct sum of `h` generic indecomposable bundles of rank `rank` and
    /// degree `degree` (the bundle on `C_1`).
    FirstSpecial {
        h: i64,
        rank: i64,
        degree: i64,
    },
    Mixed {
        summands: Vec<Summand>,
    },
}

/// Which part of the construction a component belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComponentRole {
    First,
    /// The components `C_2, …, C_{k1+2}` of the small cases.
    Ramp,
    Block {
        alpha: i64,
        beta: i64,
    },
    /// Direct sums of generic line bundles after the last block.
    Tail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentBundle {
    pub component: i64,
    pub role: ComponentRole,
    pub kind: BundleKind,
    pub rank: i64,
    pub degree: i64,
    /// Sections of `E_i(−bP_i)` and `E_i(−bQ_i)` are determined by their
    /// values at the nodes. This is a genericity statement about actual
    /// sheaves and is carried as an assumption, never computed.
    pub determined_at_nodes_assumed: bool,
}

impl ComponentBundle {
    pub fn first_special(component: i64, params: &Params, dec: &Decomposition) -> Self {
        Self {
            component,
            role: ComponentRole::First,
            kind: BundleKind::FirstSpecial {
                h: dec.h,
                rank: dec.rbar,
                degree: dec.dbar,
            },
            rank: params.r,
            degree: params.d,
            determined_at_nodes_assumed: true,
        }
    }

    /// A `Mixed` bundle of degree `rank·d1`; summands of multiplicity zero are
    /// dropped.
    pub fn mixed(component: i64, role: ComponentRole, summands: Vec<Summand>, d1: i64) -> Self {
        let summands: Vec<Summand> = summands.into_iter().filter(|s| s.rank() != 0).collect();
        let rank = summands.iter().map(Summand::rank).sum::<i64>();
        Self {
            component,
            role,
            kind: BundleKind::Mixed { summands },
            rank,
            degree: rank * d1,
            determined_at_nodes_assumed: true,
        }
    }

    /// Number of copies of `O(aP + (d1−a)Q)`.
    pub fn twist_multiplicity(&self, a: i64) -> i64 {
        match &self.kind {
            BundleKind::FirstSpecial { .. } => 0,
            BundleKind::Mixed { summands } => summands
                .iter()
                .map(|s| match *s {
                    Summand::Twisted { a: ta, mult } if ta == a => mult,
                    _ => 0,
                })
                .sum(),
        }
    }

    /// How many independent sections can vanish to order `a` at `P` and
    /// `d1 − a` at `Q`.
    ///
    /// For the first component this is `deg − rank·d1` (which is `d2`) for
    /// every `a`; for mixed components it is the number of twisted summands
    /// with that `a`.
    pub fn exceptional_budget(&self, a: i64, d1: i64) -> i64 {
        match &self.kind {
            BundleKind::FirstSpecial { .. } => self.degree - self.rank * d1,
            BundleKind::Mixed { .. } => self.twist_multiplicity(a),
        }
    }

    /// Dimension of the family the bundle moves in.
    pub fn moduli_dim(&self) -> i64 {
        match &self.kind {
            BundleKind::FirstSpecial { h, .. } => *h,
            BundleKind::Mixed { summands } => summands
                .iter()
                .map(|s| match *s {
                    Summand::GenericLine { mult } => mult,
                    Summand::Twisted { .. } => 0,
                })
                .sum(),
        }
    }

    /// Dimension of the automorphism group of the bundle.
    pub fn automorphism_dim(&self) -> i64 {
        match &self.kind {
            BundleKind::FirstSpecial { h, .. } => *h,
            BundleKind::Mixed { summands } => {
                let mut twisted: BTreeMap<i64, i64> = BTreeMap::new();
                let mut generic = 0;
                for s in summands {
                    match *s {
                        Summand::Twisted { a, mult } => *twisted.entry(a).or_insert(0) += mult,
                        Summand::GenericLine { mult } => generic += mult,
                    }
                }
                twisted.values().map(|m| m * m).sum::<i64>() + generic
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GluingTag {
    Generic,
    /// Names which summand or section block is forced into which.
    Constrained {
        label: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingSpec {
    pub node: i64,
    pub tag: GluingTag,
    /// Dimension of the family of admissible gluings at this node.
    pub parameter_dim: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitSeriesSkeleton {
    pub params: Params,
    pub decomposition: Decomposition,
    pub case: CaseTag,
    pub b: i64,
    pub chain: ChainCurve,
    pub bundles: Vec<ComponentBundle>,
    pub tables: Vec<VanishingTable>,
    pub gluings: Vec<GluingSpec>,
}

impl LimitSeriesSkeleton {
    pub fn genus(&self) -> i64 {
        self.chain.components
    }

    /// Table of component `i` (1-based).
    pub fn table(&self, i: i64) -> &VanishingTable {
        &self.tables[(i - 1) as usize]
    }

    pub fn table_mut(&mut self, i: i64) -> &mut VanishingTable {
        &mut self.tables[(i - 1) as usize]
    }

    pub fn bundle(&self, i: i64) -> &ComponentBundle {
        &self.bundles[(i - 1) as usize]
    }

    pub fn bundle_mut(&mut self, i: i64) -> &mut ComponentBundle {
        &mut self.bundles[(i - 1) as usize]
    }

    pub fn degree_balance(&self) -> i128 {
        degree_balance(self)
    }
}

/// `Σ D_i − r(g−1)·b − d`; zero exactly when the degrees are balanced.
pub fn degree_balance(s: &LimitSeriesSkeleton) -> i128 {
    let total: i128 = s.bundles.iter().map(|b| b.degree as i128).sum();
    let nodes = s.chain.nodes.len() as i128;
    total - s.params.r as i128 * nodes * s.b as i128 - s.params.d as i128
}

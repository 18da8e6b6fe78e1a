//! Explicit limit linear series skeletons for the four construction cases.
//!
//! Each case is described by a list of bundles, one per component. The
//! vanishing tables of the small cases all come out of one propagation
//! engine: starting from the minimal vanishing at `P_1`, every section either
//! gains one order of vanishing when crossing a component, or keeps its order
//! when the component carries a summand admitting the exceptional pair
//! `(a, d1 − a)`. The twist table of each case therefore determines its
//! vanishing tables.

use crate::chain::{
    build_chain, ComponentBundle, ComponentRole, GluingSpec, GluingTag, LimitSeriesSkeleton,
    OrderMultiset, Summand, VanishingTable,
};
use crate::error::ConstructError;
use crate::params::{classify, decompose, CaseTag, Decomposition, Params};

/// Position of a component inside the repeating block structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    pub alpha: i64,
    pub beta: i64,
    /// Tail threshold of the case (see [`tail_threshold`]).
    pub t: i64,
}

impl BlockIndex {
    /// Component carrying this block position.
    pub fn component(&self, case: CaseTag, k1: i64) -> i64 {
        match case {
            CaseTag::SmallC => k1 * self.alpha + self.beta + 1,
            _ => (k1 + 1) * self.alpha + self.beta + 1,
        }
    }
}

/// `t = g + k1 − d1` (SmallA), `g + k1 − d1 − 1` (SmallB, SmallC).
///
/// For LargeSections there are no blocks and this returns 0.
pub fn tail_threshold(p: &Params, case: CaseTag) -> i64 {
    let dec = decompose(p);
    match case {
        CaseTag::SmallA => p.g + dec.k1 - dec.d1,
        CaseTag::SmallB | CaseTag::SmallC => p.g + dec.k1 - dec.d1 - 1,
        CaseTag::LargeSections => 0,
    }
}

/// Number of trailing components carrying generic line bundles.
///
/// In SmallA and SmallB this is non-negative exactly when the case hypothesis
/// holds; in SmallC the hypothesis forces at least one tail component. For
/// LargeSections every component after `C_1` is generic and this is `g − 1`.
pub fn tail_count(p: &Params, case: CaseTag) -> i64 {
    let dec = decompose(p);
    let t = tail_threshold(p, case);
    match case {
        CaseTag::SmallA | CaseTag::SmallB => p.g - (dec.k1 + 1) * t - 1,
        CaseTag::SmallC => p.g - dec.k1 * t - 1,
        CaseTag::LargeSections => p.g - 1,
    }
}

/// The block positions of a small case, in component order.
pub fn block_indices(p: &Params, case: CaseTag) -> Vec<BlockIndex> {
    let dec = decompose(p);
    let t = tail_threshold(p, case);
    let (alphas, betas) = match case {
        CaseTag::SmallA | CaseTag::SmallB => (1..t, 1..=dec.k1 + 1),
        CaseTag::SmallC => (0..t, 1..=dec.k1),
        CaseTag::LargeSections => return Vec::new(),
    };
    alphas
        .flat_map(|alpha| betas.clone().map(move |beta| BlockIndex { alpha, beta, t }))
        .collect()
}

/// Twist `a` and multiplicity of the twisted summand on a block component.
fn block_twist(case: CaseTag, dec: &Decomposition, r: i64, bi: BlockIndex) -> (i64, i64) {
    let (k1, k2) = (dec.k1, dec.k2);
    let BlockIndex { alpha, beta, .. } = bi;
    match case {
        CaseTag::SmallA if beta == 1 => (k1 * alpha + 1, k2),
        CaseTag::SmallA => (k1 * alpha + 2 * beta - 1, r),
        CaseTag::SmallB if beta == 1 => (k1 * alpha, k2),
        CaseTag::SmallB => (k1 * alpha + 2 * beta - 2, r),
        CaseTag::SmallC => (2 * beta + alpha * (k1 - 1) - 1, r),
        CaseTag::LargeSections => unreachable!("LargeSections has no blocks"),
    }
}

struct Slots {
    slots: Vec<Option<ComponentBundle>>,
    d1: i64,
}

impl Slots {
    fn new(g: i64, d1: i64) -> Self {
        Self {
            slots: vec![None; g as usize],
            d1,
        }
    }

    fn put(&mut self, bundle: ComponentBundle) -> Result<(), ConstructError> {
        let i = bundle.component;
        if i < 1 || i as usize > self.slots.len() {
            return Err(ConstructError::InternalCoverage {
                component: i,
                problem: "lies outside the chain",
            });
        }
        if let crate::chain::BundleKind::Mixed { summands } = &bundle.kind {
            for s in summands {
                if let Summand::Twisted { a, .. } = *s {
                    if !(0..=self.d1).contains(&a) {
                        return Err(ConstructError::TwistOutOfRange {
                            component: i,
                            a,
                            d1: self.d1,
                        });
                    }
                }
            }
        }
        let slot = &mut self.slots[(i - 1) as usize];
        if slot.is_some() {
            return Err(ConstructError::InternalCoverage {
                component: i,
                problem: "is covered by two recipes",
            });
        }
        *slot = Some(bundle);
        Ok(())
    }

    fn mixed(
        &mut self,
        i: i64,
        role: ComponentRole,
        summands: Vec<Summand>,
    ) -> Result<(), ConstructError> {
        self.put(ComponentBundle::mixed(i, role, summands, self.d1))
    }

    fn finish(self) -> Result<Vec<ComponentBundle>, ConstructError> {
        self.slots
            .into_iter()
            .enumerate()
            .map(|(idx, b)| {
                b.ok_or(ConstructError::InternalCoverage {
                    component: idx as i64 + 1,
                    problem: "is not covered by any recipe",
                })
            })
            .collect()
    }
}

/// The bundle on every component, for an already classified tuple.
pub fn bundles(p: &Params, case: CaseTag) -> Result<Vec<ComponentBundle>, ConstructError> {
    let dec = decompose(p);
    let (r, d1, d2, k1, k2) = (p.r, dec.d1, dec.d2, dec.k1, dec.k2);
    let mut slots = Slots::new(p.g, d1);
    slots.put(ComponentBundle::first_special(1, p, &dec))?;

    let generic = |mult| Summand::GenericLine { mult };
    let twisted = |a, mult| Summand::Twisted { a, mult };

    let blocks_end = match case {
        CaseTag::LargeSections => 1,
        CaseTag::SmallA => {
            for i in 2..=k1 + 2 {
                slots.mixed(
                    i,
                    ComponentRole::Ramp,
                    vec![twisted(2 * i - 3, k2 - d2), generic(r - k2 + d2)],
                )?;
            }
            k1 + 2
        }
        CaseTag::SmallB => {
            slots.mixed(
                2,
                ComponentRole::Ramp,
                vec![twisted(0, k2), generic(r - k2)],
            )?;
            for i in 3..=k1 + 2 {
                slots.mixed(
                    i,
                    ComponentRole::Ramp,
                    vec![twisted(2 * i - 4, r + k2 - d2), generic(d2 - k2)],
                )?;
            }
            k1 + 2
        }
        CaseTag::SmallC => 1,
    };

    let mut last = blocks_end;
    for bi in block_indices(p, case) {
        let i = bi.component(case, k1);
        let (a, mult) = block_twist(case, &dec, r, bi);
        let role = ComponentRole::Block {
            alpha: bi.alpha,
            beta: bi.beta,
        };
        slots.mixed(i, role, vec![twisted(a, mult), generic(r - mult)])?;
        last = last.max(i);
    }

    let tail_start = last + 1;
    let expected_tail = tail_count(p, case);
    if p.g - tail_start + 1 != expected_tail {
        return Err(ConstructError::InternalCoverage {
            component: tail_start,
            problem: "starts a tail whose length disagrees with the tail count",
        });
    }
    for i in tail_start..=p.g {
        slots.mixed(i, ComponentRole::Tail, vec![generic(r)])?;
    }
    slots.finish()
}

/// Gluing data for node `j`, which attaches `next` (= `C_{j+1}`).
fn gluing(case: CaseTag, p: &Params, dec: &Decomposition, next: &ComponentBundle) -> GluingSpec {
    let (r, d2, k2) = (p.r, dec.d2, dec.k2);
    let node = next.component - 1;
    let free = GluingSpec {
        node,
        tag: GluingTag::Generic,
        parameter_dim: r * r,
    };
    let constrained = |label: String, parameter_dim| GluingSpec {
        node,
        tag: GluingTag::Constrained { label },
        parameter_dim,
    };
    let i = next.component;
    match (case, next.role) {
        (CaseTag::SmallA, ComponentRole::Ramp) if i == 2 => constrained(
            "sections of E_1 vanishing to order d1 at Q_1 glue into the generic-line subbundle of E_2"
                .into(),
            d2 * (r - (k2 - d2)) + r * (r - d2),
        ),
        (CaseTag::SmallA, ComponentRole::Ramp) => constrained(
            format!("generic-line subbundle of E_{} glues with that of E_{}", i - 1, i),
            (r - k2 + d2).pow(2) + r * (k2 - d2),
        ),
        (CaseTag::SmallB, ComponentRole::Ramp) if i == 2 => constrained(
            "O(d1 Q)^k2 on E_2 glues into the sections of E_1 vanishing to order d1 at Q_1".into(),
            d2 * k2 + r * (r - k2),
        ),
        (CaseTag::SmallB, ComponentRole::Ramp) => constrained(
            format!("generic-line subbundle of E_{} glues with the section block coming from E_{}", i, i - 1),
            (d2 - k2).pow(2) + r * (r - d2 + k2),
        ),
        (CaseTag::SmallA | CaseTag::SmallB, ComponentRole::Block { beta: 1, .. }) => constrained(
            format!("twisted summand of E_{} glues with W_{}", i, i - 1),
            k2 * k2 + r * (r - k2),
        ),
        _ => free,
    }
}

/// One step of the propagation engine: the vanishing at `P_{i+1}` given the
/// vanishing at `P_i` and the bundle on `C_i`.
fn cross_component(at_p: &OrderMultiset, bundle: &ComponentBundle, d1: i64) -> OrderMultiset {
    let mut next = OrderMultiset::new();
    for (a, count) in at_p.iter() {
        let stay = count.min(bundle.exceptional_budget(a, d1).max(0));
        next.add(a, stay);
        next.add(a + 1, count - stay);
    }
    next
}

fn propagate(bundles: &[ComponentBundle], start: OrderMultiset, d1: i64) -> Vec<VanishingTable> {
    let mut at_p = start;
    bundles
        .iter()
        .map(|bundle| {
            let next = cross_component(&at_p, bundle, d1);
            VanishingTable {
                component: bundle.component,
                at_p: std::mem::replace(&mut at_p, next.clone()),
                at_q: next.reflect(d1),
            }
        })
        .collect()
}

/// Tables for the LargeSections case, where the sections on `C_1` are a
/// generic subspace of `H^0(E_1(−(g−1)Q_1))` and every later component is
/// generic.
fn large_sections_tables(p: &Params, dec: &Decomposition) -> Vec<VanishingTable> {
    let (g, r, d1, k1, k2) = (p.g, p.r, dec.d1, dec.k1, dec.k2);
    let at_q = |i: i64| {
        let mut m = OrderMultiset::from_pairs((0..k1).map(|j| (g - i + j, r)));
        m.add(g - i + k1, k2);
        m
    };
    (1..=g)
        .map(|i| VanishingTable {
            component: i,
            at_p: if i == 1 {
                OrderMultiset::minimal(r, k1, k2)
            } else {
                at_q(i - 1).reflect(d1)
            },
            at_q: at_q(i),
        })
        .collect()
}

fn tables_for(
    p: &Params,
    case: CaseTag,
    bundles: &[ComponentBundle],
) -> Result<Vec<VanishingTable>, ConstructError> {
    let dec = decompose(p);
    let tables = match case {
        CaseTag::LargeSections => large_sections_tables(p, &dec),
        _ => propagate(bundles, OrderMultiset::minimal(p.r, dec.k1, dec.k2), dec.d1),
    };
    for t in &tables {
        for (point, m) in [('P', &t.at_p), ('Q', &t.at_q)] {
            if m.total() != p.k {
                return Err(ConstructError::MultiplicityMismatch {
                    component: t.component,
                    point,
                    total: m.total(),
                    expected: p.k,
                });
            }
        }
    }
    Ok(tables)
}

/// Vanishing tables of every component for a classified tuple.
pub fn vanishing_tables(p: &Params, case: CaseTag) -> Result<Vec<VanishingTable>, ConstructError> {
    let b = bundles(p, case)?;
    tables_for(p, case, &b)
}

/// Builds the complete skeleton for `p`, with `b = d1`.
pub fn construct(p: &Params) -> Result<LimitSeriesSkeleton, ConstructError> {
    let classification = classify(p)?;
    let case = classification.case;
    let dec = decompose(p);
    let chain = build_chain(p.g)?;
    let bundles = bundles(p, case)?;
    let tables = tables_for(p, case, &bundles)?;
    let gluings = bundles[1..]
        .iter()
        .map(|next| gluing(case, p, &dec, next))
        .collect();
    Ok(LimitSeriesSkeleton {
        params: *p,
        decomposition: dec,
        case,
        b: dec.d1,
        chain,
        bundles,
        tables,
        gluings,
    })
}

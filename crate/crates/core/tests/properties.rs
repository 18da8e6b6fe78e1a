use chainlls::chain::OrderMultiset;
use chainlls::construct;
use chainlls::error::ConstructError;
use chainlls::json::{skeleton_from_json, skeleton_to_json};
use chainlls::ledger::{audit_equals_rho, skeleton_ledger};
use chainlls::oracle::{
    cross_validate, exists_feasible_pairing, greedy_verdict, PairConstraint, PairingInstance,
};
use chainlls::params::{case_of, classify, decompose, rho, CaseTag, Params};
use chainlls::verify::{slope_ok, verify, SlopeQuery};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn params() -> impl Strategy<Value = Params> {
    (2i64..=14, 1i64..=6)
        .prop_flat_map(|(g, r)| (Just(g), Just(r), 0..=(5 * r * g), (r + 1)..=(3 * r)))
        .prop_map(|(g, r, d, k)| Params::new(g, r, d, k).unwrap())
}

fn from_orders(v: &[i64]) -> OrderMultiset {
    OrderMultiset::from_pairs(v.iter().map(|&o| (o, 1)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn decomposition_identities(g in 2i64..100, r in 1i64..50, d in 0i64..5000, k in 1i64..500) {
        let p = Params::new(g, r, d, k).unwrap();
        let dec = decompose(&p);
        prop_assert_eq!(r * dec.d1 + dec.d2, d);
        prop_assert_eq!(r * dec.k1 + dec.k2, k);
        prop_assert!((0..r).contains(&dec.d2) && (0..r).contains(&dec.k2));
        prop_assert_eq!(dec.h * dec.rbar, r);
        prop_assert_eq!(dec.h * dec.dbar, d);
        prop_assert_eq!(gcd(dec.rbar, dec.dbar), 1);
    }

    #[test]
    fn rho_expansions_agree(
        g in -100_000i64..100_000, r in -100_000i64..100_000,
        d in -100_000i64..100_000, k in -100_000i64..100_000,
    ) {
        let (g1, r1, d1, k1) = (g as i128, r as i128, d as i128, k as i128);
        let defining = r1 * r1 * (g1 - 1) + 1 - k1 * (k1 - d1 + r1 * (g1 - 1));
        let expanded = r1 * r1 * (g1 - 1) + 1 + k1 * (d1 - r1 * (g1 - 1) - k1);
        prop_assert_eq!(rho(g, r, d, k), defining);
        prop_assert_eq!(rho(g, r, d, k), expanded);
    }

    #[test]
    fn case_partition(p in params()) {
        let dec = decompose(&p);
        let large = p.d + p.r * (1 - p.g) >= p.k;
        let expected = if large {
            CaseTag::LargeSections
        } else if dec.d2 < dec.k2 {
            CaseTag::SmallA
        } else if dec.d2 > 0 {
            CaseTag::SmallB
        } else {
            CaseTag::SmallC
        };
        prop_assert_eq!(case_of(&p), expected);
    }

    #[test]
    fn pipeline_invariants(p in params()) {
        match classify(&p) {
            Ok(c) => {
                let s = construct(&p).unwrap();
                prop_assert_eq!(s.case, c.case);
                prop_assert_eq!(s.degree_balance(), 0);
                prop_assert_eq!(s.b, decompose(&p).d1);
                prop_assert_eq!(s.chain.components, p.g);
                let rep = verify(&s);
                prop_assert!(rep.passed() && rep.node_pairing_exact.passed(), "{:?}", rep);
                let audit = audit_equals_rho(&p).unwrap();
                prop_assert!(audit.matches);
                prop_assert_eq!(skeleton_ledger(&s).total(), p.rho());
            }
            Err(e) => {
                prop_assert_eq!(construct(&p).unwrap_err(), ConstructError::Classify(e));
            }
        }
    }

    #[test]
    fn json_round_trip(p in params()) {
        if let Ok(s) = construct(&p) {
            let text = skeleton_to_json(&s).unwrap();
            let back = skeleton_from_json(&text).unwrap();
            prop_assert_eq!(skeleton_to_json(&back).unwrap(), text);
            prop_assert_eq!(verify(&back), verify(&s));
        }
    }

    #[test]
    fn slope_scale_invariance(
        a in 1i64..=100, b in 1i64..=100,
        kp in -1000i64..=1000, rp in 1i64..=20, k in -1000i64..=1000, r in 1i64..=20,
    ) {
        let q = SlopeQuery { kprime: kp, rprime: rp, k, r };
        let scaled = SlopeQuery { kprime: a * kp, rprime: a * rp, k: b * k, r: b * r };
        prop_assert_eq!(slope_ok(q), slope_ok(scaled));
    }

    #[test]
    fn oracle_node_symmetries(
        (left, right) in (1usize..=7).prop_flat_map(|n| (prop::collection::vec(0i64..=8, n), prop::collection::vec(0i64..=8, n))),
        b in 0i64..=16,
    ) {
        let (l, r) = (from_orders(&left), from_orders(&right));
        let at_least = |l: &OrderMultiset, r: &OrderMultiset| {
            exists_feasible_pairing(&PairingInstance::new(l.clone(), r.clone(), PairConstraint::AtLeast { b }))
                .unwrap()
                .is_some()
        };
        let base = at_least(&l, &r);
        prop_assert_eq!(base, at_least(&r, &l));
        // Reflecting every order turns "sum ≥ b" into "sum ≤ 16 − b".
        let reflected = PairingInstance::new(
            l.reflect(8),
            r.reflect(8),
            PairConstraint::AtMost { cap: 16 - b, exceptional: Default::default() },
        );
        prop_assert_eq!(base, exists_feasible_pairing(&reflected).unwrap().is_some());
        let inst = PairingInstance::new(l, r, PairConstraint::AtLeast { b });
        prop_assert_eq!(base, greedy_verdict(&inst));
    }

    #[test]
    fn oracle_component_agrees_with_greedy(
        (left, right) in (1usize..=8).prop_flat_map(|n| (prop::collection::vec(0i64..=6, n), prop::collection::vec(0i64..=6, n))),
        budgets in prop::collection::vec(0i64..=3, 7),
    ) {
        let exceptional = budgets.iter().enumerate().map(|(a, &m)| (a as i64, m)).collect();
        let inst = PairingInstance::new(
            from_orders(&left),
            from_orders(&right),
            PairConstraint::AtMost { cap: 5, exceptional },
        );
        let oracle = exists_feasible_pairing(&inst).unwrap();
        prop_assert_eq!(oracle.is_some(), greedy_verdict(&inst));
        if let Some(pairs) = oracle {
            prop_assert!(pairs.iter().all(|&(p, q)| p + q <= 6));
        }
    }
}

/// Random single-order shifts in random skeletons: the verifier and the
/// oracle still agree, and the shifted skeleton never passes exactly.
#[test]
fn fuzz_corrupted_skeletons() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut corrupted = 0;
    while corrupted < 400 {
        let g = rng.gen_range(2..=10);
        let r = rng.gen_range(1..=4);
        let k = rng.gen_range(r + 1..=(3 * r).min(8));
        let d = rng.gen_range(0..=5 * r * g);
        let p = Params::new(g, r, d, k).unwrap();
        let Ok(mut s) = construct(&p) else { continue };
        let i = rng.gen_range(1..=g);
        let at_p = rng.gen_bool(0.5);
        let table = s.table_mut(i);
        let side = if at_p {
            &mut table.at_p
        } else {
            &mut table.at_q
        };
        let orders: Vec<i64> = side.expand_ascending();
        let from = orders[rng.gen_range(0..orders.len())];
        let to = if rng.gen_bool(0.5) {
            from + 1
        } else {
            from - 1
        };
        let mut shifted = OrderMultiset::from_pairs(side.iter().filter(|&(o, _)| o != from));
        shifted.add(from, side.multiplicity(from) - 1);
        shifted.add(to, 1);
        *side = shifted;
        corrupted += 1;

        let cv = cross_validate(&s, 8);
        assert!(cv.agrees(), "{p} C_{i}: {cv:?}");
        let rep = verify(&s);
        assert!(
            !(rep.passed() && rep.node_pairing_exact.passed()),
            "{p} C_{i} shift {from}->{to} passed"
        );
    }
}

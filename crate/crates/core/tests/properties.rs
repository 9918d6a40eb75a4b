//! Randomized properties, each checked against a brute-force reference.

use std::collections::BTreeSet;

use proptest::prelude::*;

use procure::io::{parse_instance_file, to_json, InstanceFile};
use procure::mech_additive::{
    breakpoints, greedy_allocate, seller_thresholds, sym_allocate, threshold_by_breakpoints,
};
use procure::mech_single_item::plan_m_one;
use procure::mech_subadditive::{run_m_rand, Partition};
use procure::model::{join, meet};
use procure::oracles::{optimal_by_enumeration, optimal_with_caps};
use procure::rational::{format_rational, int, parse_rational, ratio};
use procure::valuation::for_each_allocation;
use procure::{Allocation, Instance, Rational, Seller, Valuation, ValuationClass};

fn rational() -> impl Strategy<Value = Rational> {
    (0i64..=40, 1i64..=4).prop_map(|(n, d)| ratio(n, d))
}

fn signed_rational() -> impl Strategy<Value = Rational> {
    (any::<i64>(), 1i64..=i64::MAX).prop_map(|(n, d)| ratio(n, d))
}

fn allocation_pair() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<u32>)> {
    (1usize..=4).prop_flat_map(|m| {
        (
            prop::collection::vec(0u32..5, m),
            prop::collection::vec(0u32..5, m),
            prop::collection::vec(0u32..5, m),
        )
    })
}

/// Margin rows for `units`, optionally sorted non-increasing.
fn margin_rows(units: Vec<u32>, concave: bool) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    units
        .into_iter()
        .map(|n| prop::collection::vec(rational(), n as usize))
        .collect::<Vec<_>>()
        .prop_map(move |mut rows| {
            if concave {
                for r in &mut rows {
                    r.sort_by(|a, b| b.cmp(a));
                }
            }
            rows
        })
}

fn units(max_sellers: usize, max_units: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..=max_units, 1..=max_sellers)
}

/// Any of the four parametric families over `units`.
fn parametric(units: Vec<u32>) -> impl Strategy<Value = Valuation> {
    let m = units.len();
    let n: u32 = units.iter().sum();
    prop_oneof![
        prop::collection::vec(rational(), m).prop_map(|v| Valuation::bounded_knapsack(v).unwrap()),
        margin_rows(units.clone(), true).prop_map(|r| Valuation::concave_additive(r).unwrap()),
        margin_rows(units, false).prop_map(|r| Valuation::additive(r).unwrap()),
        prop::collection::vec(rational(), n as usize).prop_map(|v| Valuation::symmetric(v).unwrap()),
    ]
}

fn with_valuation(max_sellers: usize, max_units: u32) -> impl Strategy<Value = (Vec<u32>, Valuation)> {
    units(max_sellers, max_units).prop_flat_map(|u| (Just(u.clone()), parametric(u)))
}

fn all_allocations(caps: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for_each_allocation(caps, |a| out.push(a.to_vec()));
    out
}

fn value_table(caps: &[u32], raw: &[u32]) -> Vec<(Vec<u32>, Rational)> {
    all_allocations(caps)
        .into_iter()
        .zip(raw.iter().cycle())
        .map(|(a, &r)| (a, int(r as i64)))
        .collect()
}

/// Raises every entry to the largest value below it, giving a monotone table.
fn monotone_closure(entries: &mut [(Vec<u32>, Rational)]) {
    let zero = entries[0].1.clone();
    for e in entries.iter_mut() {
        e.1 -= &zero;
        if e.1 < int(0) {
            e.1 = int(0);
        }
    }
    entries[0].1 = int(0);
    for i in 0..entries.len() {
        for j in 0..i {
            if entries[j].0.iter().zip(&entries[i].0).all(|(x, y)| x <= y) && entries[j].1 > entries[i].1 {
                entries[i].1 = entries[j].1.clone();
            }
        }
    }
}

/// Tables of several shapes, so that the rarer classes do show up.
fn explicit_table() -> impl Strategy<Value = (Vec<u32>, Valuation)> {
    prop::collection::vec(0u32..=2, 1..=3).prop_flat_map(|caps| {
        let size: usize = caps.iter().map(|&c| c as usize + 1).product();
        let c2 = caps.clone();
        let c3 = caps.clone();
        let c4 = caps.clone();
        prop_oneof![
            prop::collection::vec(0u32..8, size).prop_map(move |raw| {
                let mut t = value_table(&caps, &raw);
                monotone_closure(&mut t);
                (caps.clone(), Valuation::explicit(caps.clone(), t).unwrap())
            }),
            // concave function of a weighted total
            (prop::collection::vec(0u32..3, c2.len()), 0u32..4).prop_map(move |(w, bend)| {
                let t = all_allocations(&c2)
                    .into_iter()
                    .map(|a| {
                        let s: u32 = a.iter().zip(&w).map(|(x, y)| x * y).sum();
                        (a, int(s.min(bend) as i64 * 2 + s as i64))
                    })
                    .collect();
                (c2.clone(), Valuation::explicit(c2.clone(), t).unwrap())
            }),
            // maximum of two linear clauses
            (
                prop::collection::vec(0u32..4, c3.len()),
                prop::collection::vec(0u32..4, c3.len())
            )
                .prop_map(move |(w1, w2)| {
                    let t = all_allocations(&c3)
                        .into_iter()
                        .map(|a| {
                            let d = |w: &[u32]| a.iter().zip(w).map(|(x, y)| x * y).sum::<u32>();
                            let v = d(&w1).max(d(&w2));
                            (a, int(v as i64))
                        })
                        .collect();
                    (c3.clone(), Valuation::explicit(c3.clone(), t).unwrap())
                }),
            // monotone along each item only
            prop::collection::vec(0u32..8, size).prop_map(move |raw| {
                let mut t = value_table(&c4, &raw);
                t[0].1 = int(0);
                let m = c4.len();
                for i in 0..m {
                    let mut axis: Vec<usize> = (0..t.len())
                        .filter(|&k| t[k].0.iter().enumerate().all(|(j, &x)| j == i || x == 0))
                        .collect();
                    axis.sort_by_key(|&k| t[k].0[i]);
                    let mut vals: Vec<Rational> = axis.iter().map(|&k| t[k].1.clone()).collect();
                    vals.sort();
                    vals[0] = int(0);
                    for (k, v) in axis.into_iter().zip(vals) {
                        t[k].1 = v;
                    }
                }
                (
                    c4.clone(),
                    Valuation::explicit_per_item_monotone(c4.clone(), t).unwrap(),
                )
            }),
        ]
    })
}

/// Class labels straight from their quantified definitions.
fn classes_by_definition(v: &Valuation, caps: &[u32]) -> BTreeSet<ValuationClass> {
    use ValuationClass::*;
    let m = caps.len();
    let all = all_allocations(caps);
    let val = |a: &[u32]| v.value(a).unwrap();
    let plus = |a: &[u32], j: usize| -> Vec<u32> {
        let mut b = a.to_vec();
        if b[j] < caps[j] {
            b[j] += 1;
        }
        b
    };
    let unit = |i: usize, k: u32| -> Vec<u32> {
        let mut a = vec![0; m];
        a[i] = k;
        a
    };
    let margins: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            (1..=caps[i])
                .map(|k| val(&unit(i, k)) - val(&unit(i, k - 1)))
                .collect()
        })
        .collect();
    let additive = all.iter().all(|a| {
        let s: Rational = (0..m).map(|i| val(&unit(i, a[i]))).sum();
        s == val(a)
    });
    let mut out = BTreeSet::new();
    if additive {
        out.insert(Additive);
        if margins.iter().all(|r| r.windows(2).all(|w| w[0] >= w[1])) {
            out.insert(ConcaveAdditive);
        }
        if margins.iter().all(|r| r.windows(2).all(|w| w[0] == w[1])) {
            out.insert(BoundedKnapsack);
        }
    }
    let symmetric = all.iter().all(|a| {
        all.iter()
            .all(|b| a.iter().sum::<u32>() != b.iter().sum::<u32>() || val(a) == val(b))
    });
    if symmetric {
        out.insert(Symmetric);
    }
    let mut dr = true;
    let mut submod = true;
    let mut subadd = true;
    for a in &all {
        for b in &all {
            let j: Vec<u32> = a.iter().zip(b).map(|(x, y)| *x.max(y)).collect();
            let mt: Vec<u32> = a.iter().zip(b).map(|(x, y)| *x.min(y)).collect();
            if val(&j) > val(a) + val(b) {
                subadd = false;
            }
            if val(&j) + val(&mt) > val(a) + val(b) {
                submod = false;
            }
            if a.iter().zip(b).all(|(x, y)| x <= y) {
                for i in 0..m {
                    if val(&plus(a, i)) - val(a) < val(&plus(b, i)) - val(b) {
                        dr = false;
                    }
                }
            }
        }
    }
    if dr {
        out.insert(DiminishingReturn);
    }
    if submod {
        out.insert(Submodular);
    }
    if subadd {
        out.insert(Subadditive);
    }
    out
}

fn concave_instance() -> impl Strategy<Value = Instance> {
    units(4, 3)
        .prop_flat_map(|u| {
            let m = u.len();
            (
                Just(u.clone()),
                margin_rows(u, true),
                prop::collection::vec(rational(), m),
                1i64..=12,
            )
        })
        .prop_map(|(u, rows, costs, b)| {
            let sellers = u.into_iter().zip(costs).map(|(n, c)| Seller::new(n, c)).collect();
            Instance::new(sellers, int(b), Valuation::concave_additive(rows).unwrap()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lattice_laws((x, y, z) in allocation_pair()) {
        let (a, b, c) = (Allocation::new(x), Allocation::new(y), Allocation::new(z));
        let j = join(&a, &b).unwrap();
        let mt = meet(&a, &b).unwrap();
        prop_assert_eq!(&j, &join(&b, &a).unwrap());
        prop_assert_eq!(&mt, &meet(&b, &a).unwrap());
        prop_assert!(a.le(&j) && b.le(&j) && mt.le(&a) && mt.le(&b));
        prop_assert_eq!(join(&a, &mt).unwrap(), a.clone());
        prop_assert_eq!(meet(&a, &j).unwrap(), a.clone());
        prop_assert_eq!(join(&j, &c).unwrap(), join(&a, &join(&b, &c).unwrap()).unwrap());
        prop_assert_eq!(meet(&mt, &c).unwrap(), meet(&a, &meet(&b, &c).unwrap()).unwrap());
    }

    #[test]
    fn rational_text_round_trip(q in signed_rational()) {
        let text = format_rational(&q);
        prop_assert_eq!(parse_rational(&text).unwrap(), q);
    }

    #[test]
    fn demand_matches_enumeration(
        (u, v) in with_valuation(3, 3),
        prices in prop::collection::vec(rational(), 3),
    ) {
        let prices = &prices[..u.len()];
        prop_assert_eq!(v.demand(prices, &u).unwrap(), v.demand_by_enumeration(prices, &u).unwrap());
    }

    #[test]
    fn demand_matches_enumeration_on_tables(
        (caps, v) in explicit_table(),
        prices in prop::collection::vec(rational(), 3),
    ) {
        let prices = &prices[..caps.len()];
        prop_assert_eq!(v.demand(prices, &caps).unwrap(), v.demand_by_enumeration(prices, &caps).unwrap());
    }

    #[test]
    fn knapsack_program_matches_enumeration(
        (u, v) in with_valuation(4, 3),
        costs in prop::collection::vec(rational(), 4),
        budget in rational(),
    ) {
        let costs = &costs[..u.len()];
        let dp = optimal_with_caps(&v, &u, costs, &budget).unwrap();
        let brute = optimal_by_enumeration(&v, &u, costs, &budget).unwrap();
        prop_assert_eq!(dp, brute);
    }

    #[test]
    fn structural_classes_match_enumeration((u, v) in with_valuation(3, 3)) {
        prop_assert_eq!(v.classify(&u).unwrap(), v.classify_by_enumeration(&u).unwrap());
    }

    #[test]
    fn classes_match_definitions((u, v) in with_valuation(3, 2)) {
        prop_assert_eq!(v.classify(&u).unwrap(), classes_by_definition(&v, &u));
    }

    #[test]
    fn table_classes_match_definitions((caps, v) in explicit_table()) {
        prop_assert_eq!(v.classify(&caps).unwrap(), classes_by_definition(&v, &caps));
    }

    #[test]
    fn class_chain_is_nested((caps, v) in explicit_table()) {
        let got = v.classify(&caps).unwrap();
        let chain = ValuationClass::CHAIN;
        let monotone = match &v {
            Valuation::Explicit(t) => t.is_monotone(),
            _ => true,
        };
        if monotone {
            for w in chain.windows(2) {
                prop_assert!(!got.contains(&w[0]) || got.contains(&w[1]), "{:?}", got);
            }
        }
    }

    #[test]
    fn thresholds_match_breakpoint_search(inst in concave_instance(), seed in any::<u64>()) {
        let bids: Vec<Rational> = inst
            .costs()
            .iter()
            .enumerate()
            .map(|(i, c)| c + ratio((seed >> (i * 8) & 7) as i64, 2))
            .collect();
        let alloc = greedy_allocate(&inst, &bids).unwrap();
        for i in 0..inst.num_sellers() {
            let th = seller_thresholds(&inst, &bids, i).unwrap();
            let cands = breakpoints(&inst, &bids, i).unwrap();
            for j in 1..=alloc.counts()[i] {
                let mut probe = bids.clone();
                let oracle = threshold_by_breakpoints(cands.iter().cloned(), |b| {
                    probe[i] = b.clone();
                    Ok(greedy_allocate(&inst, &probe)?.counts()[i] >= j)
                })
                .unwrap();
                prop_assert_eq!(Some(th[j as usize - 1].clone()), oracle);
            }
        }
    }

    #[test]
    fn greedy_allocation_is_monotone(inst in concave_instance(), lo in rational(), hi in rational()) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mut bids = inst.costs();
        for i in 0..inst.num_sellers() {
            bids[i] = lo.clone();
            let low = greedy_allocate(&inst, &bids).unwrap().counts()[i];
            bids[i] = hi.clone();
            let high = greedy_allocate(&inst, &bids).unwrap().counts()[i];
            prop_assert!(low >= high);
            bids[i] = inst.costs()[i].clone();
        }
    }

    #[test]
    fn symmetric_rule_is_monotone(
        u in units(3, 3),
        lo in rational(),
        hi in rational(),
        b in 1i64..=12,
    ) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let n: u32 = u.iter().sum();
        let sellers: Vec<Seller> = u.iter().enumerate().map(|(i, &k)| Seller::new(k, ratio(i as i64 + 1, 2))).collect();
        let inst = Instance::new(sellers, int(b), Valuation::symmetric(vec![int(1); n as usize]).unwrap()).unwrap();
        let mut bids = inst.costs();
        for i in 0..u.len() {
            bids[i] = lo.clone();
            let low = sym_allocate(&inst, &bids).unwrap().counts()[i];
            bids[i] = hi.clone();
            let high = sym_allocate(&inst, &bids).unwrap().counts()[i];
            prop_assert!(low >= high);
            bids[i] = inst.costs()[i].clone();
        }
    }

    #[test]
    fn single_seller_allocation_is_monotone(inst in concave_instance(), lo in rational(), hi in rational()) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mut bids = inst.costs();
        let sold = |bids: &[Rational], i: usize| {
            let plan = plan_m_one(&inst, bids).unwrap();
            if plan.winner == i { plan.count } else { 0 }
        };
        for i in 0..inst.num_sellers() {
            bids[i] = lo.clone();
            let low = sold(&bids, i);
            bids[i] = hi.clone();
            let high = sold(&bids, i);
            prop_assert!(low >= high);
            bids[i] = inst.costs()[i].clone();
        }
    }

    #[test]
    fn sampling_allocation_is_monotone(
        inst in concave_instance(),
        mask in any::<u64>(),
        lo in rational(),
        hi in rational(),
    ) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let m = inst.num_sellers();
        let p = Partition(mask & ((1 << m) - 1));
        let mut bids = inst.costs();
        for i in p.rest(m) {
            bids[i] = lo.clone();
            let low = run_m_rand(&inst, &bids, p).unwrap().allocation().counts()[i];
            bids[i] = hi.clone();
            let high = run_m_rand(&inst, &bids, p).unwrap().allocation().counts()[i];
            prop_assert!(low == high || high == 0, "{low} vs {high}");
            bids[i] = inst.costs()[i].clone();
        }
    }

    #[test]
    fn instance_files_round_trip(inst in concave_instance(), with_bids in any::<bool>()) {
        let mut file = InstanceFile::new(inst);
        if with_bids {
            file.bids = Some(file.instance.costs().iter().map(|c| c * int(2)).collect());
        }
        let text = to_json(&file);
        let back = parse_instance_file(&text).unwrap();
        prop_assert_eq!(to_json(&back), text);
        prop_assert_eq!(back, file);
    }

    #[test]
    fn table_files_round_trip((caps, v) in explicit_table(), b in 1i64..=9) {
        prop_assume!(caps.iter().all(|&c| c > 0));
        let sellers = caps.iter().map(|&n| Seller::new(n, int(1))).collect();
        let file = InstanceFile::new(Instance::new(sellers, int(b), v).unwrap());
        let text = to_json(&file);
        prop_assert_eq!(parse_instance_file(&text).unwrap(), file);
    }
}

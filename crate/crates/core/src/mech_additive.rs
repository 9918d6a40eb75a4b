//! The value-rate greedy mechanism for concave additive valuations, its
//! closed-form unit thresholds, and the cost-ordered variant for symmetric
//! valuations.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{check_len, Allocation, Instance, Outcome};
use crate::rational::{from_u32, Rational};
use crate::valuation::Valuation;

/// A unit `(seller, unit)` with its marginal value and the bid it is ranked at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedPair {
    pub seller: usize,
    /// 1-based unit index.
    pub unit: u32,
    pub value: Rational,
    pub cost: Rational,
}

impl RankedPair {
    /// `v / c`, or `None` for the unbounded rate of a zero cost.
    pub fn rate(&self) -> Option<Rational> {
        if self.cost.is_zero() {
            None
        } else {
            Some(&self.value / &self.cost)
        }
    }

    /// Rate-decreasing order with `(seller, unit)` tie-break. Cross-multiplied
    /// so that zero costs rank first without a special case.
    pub fn rank_cmp(&self, other: &RankedPair) -> Ordering {
        let lhs = &self.value * &other.cost;
        let rhs = &other.value * &self.cost;
        rhs.cmp(&lhs)
            .then(self.seller.cmp(&other.seller))
            .then(self.unit.cmp(&other.unit))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AddBranch {
    Greedy,
    Star,
    Bot,
}

impl AddBranch {
    pub const ALL: [AddBranch; 3] = [AddBranch::Greedy, AddBranch::Star, AddBranch::Bot];
}

impl fmt::Display for AddBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AddBranch::Greedy => "greedy",
            AddBranch::Star => "star",
            AddBranch::Bot => "bot",
        })
    }
}

impl FromStr for AddBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(AddBranch::Greedy),
            "star" => Ok(AddBranch::Star),
            "bot" => Ok(AddBranch::Bot),
            _ => Err(Error::InvalidScenario(s.to_string())),
        }
    }
}

/// Branch probabilities and the fixed star seller.
#[derive(Clone, Debug, PartialEq)]
pub struct AddLottery {
    pub p_greedy: f64,
    pub p_star: f64,
    pub p_bot: f64,
    pub star_seller: usize,
}

impl AddLottery {
    pub fn new(inst: &Instance) -> Result<Self> {
        let n = inst.total_units() as f64;
        let p_greedy = 1.0 / (2.0 * (1.0 + n.ln()));
        let p_star = 0.5;
        let p_bot = (1.0 - p_greedy - p_star).max(0.0);
        Ok(AddLottery {
            p_greedy,
            p_star,
            p_bot,
            star_seller: star_seller(inst)?,
        })
    }

    pub fn probability(&self, branch: AddBranch) -> f64 {
        match branch {
            AddBranch::Greedy => self.p_greedy,
            AddBranch::Star => self.p_star,
            AddBranch::Bot => self.p_bot,
        }
    }
}

/// `i*`: the seller whose first unit is worth the most, lowest index on ties.
pub fn star_seller(inst: &Instance) -> Result<usize> {
    let m = inst.num_sellers();
    let mut best = (0, inst.valuation().single_item_value(m, 0, 1)?);
    for i in 1..m {
        let v = inst.valuation().single_item_value(m, i, 1)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}

/// Per-seller margins of a concave additive valuation at the instance's units.
pub fn concave_margins(inst: &Instance) -> Result<Vec<Vec<Rational>>> {
    let v = inst.valuation();
    if !v.is_concave_additive() {
        return Err(Error::WrongValuationClass(
            "the greedy value-rate rule needs concave additive margins".into(),
        ));
    }
    Ok(v.margins_for(&inst.units()).expect("additive family"))
}

fn ranked_pairs(margins: &[Vec<Rational>], bids: &[Rational], skip: Option<usize>) -> Vec<RankedPair> {
    let mut pairs = Vec::new();
    for (i, row) in margins.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                pairs.push(RankedPair {
                    seller: i,
                    unit: j as u32 + 1,
                    value: v.clone(),
                    cost: bids[i].clone(),
                });
            }
        }
    }
    pairs.sort_by(RankedPair::rank_cmp);
    pairs
}

/// The full ranking and the number `k` of pairs picked up.
pub fn greedy_rank(inst: &Instance, bids: &[Rational]) -> Result<(Vec<RankedPair>, usize)> {
    check_len(inst.num_sellers(), bids.len())?;
    let margins = concave_margins(inst)?;
    let pairs = ranked_pairs(&margins, bids, None);
    Ok(pick_prefix(pairs, inst.budget()))
}

fn pick_prefix(pairs: Vec<RankedPair>, budget: &Rational) -> (Vec<RankedPair>, usize) {
    let mut k = 0;
    let mut prefix = Rational::zero();
    for (idx, p) in pairs.iter().enumerate() {
        prefix += &p.value;
        // c / v <= B / S  <=>  c * S <= B * v
        if &p.cost * &prefix <= budget * &p.value {
            k = idx + 1;
        }
    }
    (pairs, k)
}

/// Allocation of the greedy branch under `bids`.
pub fn greedy_allocate(inst: &Instance, bids: &[Rational]) -> Result<Allocation> {
    let (pairs, k) = greedy_rank(inst, bids)?;
    let mut counts = vec![0u32; inst.num_sellers()];
    for p in &pairs[..k] {
        counts[p.seller] += 1;
    }
    Ok(Allocation::new(counts))
}

/// Threshold bid for unit `j` (1-based) of seller `i` under the instance's
/// own costs. Fails unless the unit is sold at those costs.
pub fn threshold(inst: &Instance, i: usize, j: u32) -> Result<Rational> {
    threshold_at(inst, &inst.costs(), i, j)
}

/// Threshold for unit `j` of seller `i` when the others bid `bids`.
pub fn threshold_at(inst: &Instance, bids: &[Rational], i: usize, j: u32) -> Result<Rational> {
    let m = inst.num_sellers();
    if i >= m {
        return Err(Error::SellerOutOfRange { index: i, sellers: m });
    }
    let alloc = greedy_allocate(inst, bids)?;
    if j == 0 || j > alloc.counts()[i] {
        return Err(Error::NoThreshold { seller: i, unit: j });
    }
    Ok(seller_thresholds(inst, bids, i)?[j as usize - 1].clone())
}

/// Thresholds of every unit of seller `i`, whether sold or not, computed
/// from the others' bids only. Zero-valued units get threshold 0.
pub fn seller_thresholds(inst: &Instance, bids: &[Rational], i: usize) -> Result<Vec<Rational>> {
    check_len(inst.num_sellers(), bids.len())?;
    let margins = concave_margins(inst)?;
    let others = ranked_pairs(&margins, bids, Some(i));
    let mut prefix = Vec::with_capacity(others.len() + 1);
    prefix.push(Rational::zero());
    for p in &others {
        let next = prefix.last().unwrap() + &p.value;
        prefix.push(next);
    }
    let mut own = Rational::zero();
    let mut out = Vec::with_capacity(margins[i].len());
    for v in &margins[i] {
        own += v;
        if v.is_zero() {
            out.push(Rational::zero());
            continue;
        }
        out.push(a_th(v, &own, &others, &prefix, inst.budget()));
    }
    Ok(out)
}

fn a_th(
    v: &Rational,
    own_prefix: &Rational,
    others: &[RankedPair],
    prefix: &[Rational],
    budget: &Rational,
) -> Rational {
    let n = others.len();
    // t'_alpha, with t'_0 = 0; None stands for t'_{n+1} = +inf
    let t_prime = |alpha: usize| -> Option<Rational> {
        if alpha == 0 {
            Some(Rational::zero())
        } else if alpha > n {
            None
        } else {
            let p = &others[alpha - 1];
            Some(v * &p.cost / &p.value)
        }
    };
    let mut upper = t_prime(n + 1);
    for alpha in (0..=n).rev() {
        let t = v * budget / (own_prefix + &prefix[alpha]);
        let lower = t_prime(alpha).expect("finite below n + 1");
        if t < lower {
            upper = Some(lower);
            continue;
        }
        return match upper {
            Some(u) if t > u => u,
            _ => t,
        };
    }
    unreachable!("t_0 >= 0 = t'_0 always stops the scan")
}

/// Breakpoints of the allocation rule in seller `i`'s own bid: the bids at
/// which one of its units swaps rank with another seller's unit, and the
/// bids at which a unit's own stopping inequality turns.
pub fn breakpoints(inst: &Instance, bids: &[Rational], i: usize) -> Result<Vec<Rational>> {
    check_len(inst.num_sellers(), bids.len())?;
    let margins = concave_margins(inst)?;
    let others = ranked_pairs(&margins, bids, Some(i));
    let mut out = vec![Rational::zero()];
    let mut own = Rational::zero();
    let mut prefix = vec![Rational::zero()];
    for p in &others {
        let next = prefix.last().unwrap() + &p.value;
        prefix.push(next);
    }
    for v in &margins[i] {
        own += v;
        if v.is_zero() {
            continue;
        }
        for p in &others {
            out.push(v * &p.cost / &p.value);
        }
        for s in &prefix {
            out.push(v * inst.budget() / (&own + s));
        }
    }
    Ok(out)
}

/// Exact threshold of a monotone step rule whose breakpoints all lie in
/// `candidates`: binary search over the open intervals between consecutive
/// candidates, probing each at its midpoint. Returns the right end of the last
/// interval where `sold` holds, 0 if it never holds, and `None` if it still
/// holds beyond every candidate.
pub fn threshold_by_breakpoints(
    candidates: impl IntoIterator<Item = Rational>,
    mut sold: impl FnMut(&Rational) -> Result<bool>,
) -> Result<Option<Rational>> {
    let mut pts: Vec<Rational> = candidates
        .into_iter()
        .filter(|c| *c >= Rational::zero())
        .collect();
    pts.push(Rational::zero());
    pts.sort();
    pts.dedup();
    let two = from_u32(2);
    let probe = |idx: usize| -> Rational {
        if idx + 1 < pts.len() {
            (&pts[idx] + &pts[idx + 1]) / &two
        } else {
            &pts[idx] + Rational::one()
        }
    };
    // interval idx is (pts[idx], pts[idx + 1]), the last one unbounded
    let intervals = pts.len();
    if sold(&probe(intervals - 1))? {
        return Ok(None);
    }
    if !sold(&probe(0))? {
        return Ok(Some(Rational::zero()));
    }
    let (mut lo, mut hi) = (0usize, intervals - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if sold(&probe(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(pts[lo + 1].clone()))
}

/// One deterministic branch of the greedy mechanism.
pub fn run_m_add(inst: &Instance, bids: &[Rational], branch: AddBranch) -> Result<Outcome> {
    check_len(inst.num_sellers(), bids.len())?;
    concave_margins(inst)?;
    match branch {
        AddBranch::Greedy => {
            let alloc = greedy_allocate(inst, bids)?;
            let mut payments = vec![Rational::zero(); inst.num_sellers()];
            for (i, &a) in alloc.counts().iter().enumerate() {
                if a > 0 {
                    payments[i] = seller_thresholds(inst, bids, i)?[..a as usize].iter().sum();
                }
            }
            Outcome::new(alloc, payments)
        }
        AddBranch::Star => star_outcome(inst, star_seller(inst)?),
        AddBranch::Bot => Ok(Outcome::empty(inst.num_sellers())),
    }
}

fn star_outcome(inst: &Instance, star: usize) -> Result<Outcome> {
    let m = inst.num_sellers();
    let mut payments = vec![Rational::zero(); m];
    payments[star] = inst.budget().clone();
    Outcome::new(Allocation::single(m, star, 1), payments)
}

fn symmetric_check(inst: &Instance) -> Result<()> {
    match inst.valuation() {
        Valuation::Symmetric { .. } => Ok(()),
        _ => Err(Error::WrongValuationClass(
            "the cost-ordered rule needs a symmetric valuation".into(),
        )),
    }
}

/// Allocation of the greedy branch for symmetric valuations: units ranked by
/// bid, taking the longest prefix whose last unit costs at most `B / k`.
pub fn sym_allocate(inst: &Instance, bids: &[Rational]) -> Result<Allocation> {
    check_len(inst.num_sellers(), bids.len())?;
    symmetric_check(inst)?;
    Ok(sym_rule(&inst.units(), bids, inst.budget()))
}

fn sym_rule(units: &[u32], bids: &[Rational], budget: &Rational) -> Allocation {
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| bids[a].cmp(&bids[b]).then(a.cmp(&b)));
    let mut counts = vec![0u32; units.len()];
    let mut rank = 0u32;
    for &i in &order {
        for _ in 0..units[i] {
            rank += 1;
            if &bids[i] * from_u32(rank) > *budget {
                return Allocation::new(counts);
            }
            counts[i] += 1;
        }
    }
    Allocation::new(counts)
}

/// Breakpoints of the symmetric rule in seller `i`'s bid.
pub fn sym_breakpoints(inst: &Instance, bids: &[Rational], i: usize) -> Vec<Rational> {
    let n = inst.total_units();
    let mut out: Vec<Rational> = (1..=n).map(|l| inst.budget() / from_u32(l)).collect();
    out.extend(
        bids.iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, c)| c.clone()),
    );
    out
}

/// Unit thresholds of seller `i` under the symmetric rule, found by
/// breakpoint search. Entry `j - 1` is `None` if unit `j` is sold at every bid.
pub fn sym_thresholds(inst: &Instance, bids: &[Rational], i: usize) -> Result<Vec<Option<Rational>>> {
    check_len(inst.num_sellers(), bids.len())?;
    symmetric_check(inst)?;
    let units = inst.units();
    let candidates = sym_breakpoints(inst, bids, i);
    let mut probe = bids.to_vec();
    (1..=units[i])
        .map(|j| {
            threshold_by_breakpoints(candidates.iter().cloned(), |b| {
                probe[i] = b.clone();
                Ok(sym_rule(&units, &probe, inst.budget()).counts()[i] >= j)
            })
        })
        .collect()
}

/// One deterministic branch of the symmetric-valuation mechanism.
pub fn run_m_sym(inst: &Instance, bids: &[Rational], branch: AddBranch) -> Result<Outcome> {
    check_len(inst.num_sellers(), bids.len())?;
    symmetric_check(inst)?;
    match branch {
        AddBranch::Greedy => {
            let alloc = sym_rule(&inst.units(), bids, inst.budget());
            let mut payments = vec![Rational::zero(); inst.num_sellers()];
            for (i, &a) in alloc.counts().iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let th = sym_thresholds(inst, bids, i)?;
                let mut total = Rational::zero();
                for t in &th[..a as usize] {
                    // a unit sold at every bid would be an unbounded payment;
                    // every unit's rank is at least 1, so B caps its threshold
                    total += t.as_ref().expect("thresholds are at most B");
                }
                payments[i] = total;
            }
            Outcome::new(alloc, payments)
        }
        AddBranch::Star => star_outcome(inst, star_seller(inst)?),
        AddBranch::Bot => Ok(Outcome::empty(inst.num_sellers())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Seller;
    use crate::rational::{int, ratio};

    fn example() -> Instance {
        Instance::new(
            vec![Seller::new(2, int(2)), Seller::new(1, int(3))],
            int(10),
            Valuation::concave_additive(vec![vec![int(6), int(4)], vec![int(5)]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn ranking_and_allocation() {
        let inst = example();
        let (pairs, k) = greedy_rank(&inst, &inst.costs()).unwrap();
        let order: Vec<(usize, u32)> = pairs.iter().map(|p| (p.seller, p.unit)).collect();
        assert_eq!(order, vec![(0, 1), (0, 2), (1, 1)]);
        assert_eq!(k, 3);
        assert_eq!(greedy_allocate(&inst, &inst.costs()).unwrap().counts(), &[2, 1]);
    }

    #[test]
    fn example_thresholds() {
        let inst = example();
        assert_eq!(threshold(&inst, 1, 1).unwrap(), ratio(10, 3));
        // ranked behind (2,1) the first unit still passes up to 6 * 10 / 11
        assert_eq!(threshold(&inst, 0, 1).unwrap(), ratio(60, 11));
        assert_eq!(threshold(&inst, 0, 2).unwrap(), ratio(8, 3));
        let out = run_m_add(&inst, &inst.costs(), AddBranch::Greedy).unwrap();
        assert_eq!(out.allocation().counts(), &[2, 1]);
        assert_eq!(out.payments(), &[ratio(268, 33), ratio(10, 3)]);
    }

    #[test]
    fn single_seller_threshold_is_t0() {
        let inst = Instance::new(
            vec![Seller::new(3, int(1))],
            int(6),
            Valuation::concave_additive(vec![vec![int(3), int(2), int(1)]]).unwrap(),
        )
        .unwrap();
        let th = seller_thresholds(&inst, &inst.costs(), 0).unwrap();
        assert_eq!(th, vec![int(6), ratio(12, 5), int(1)]);
    }

    #[test]
    fn observation_instance_buys_one_unit() {
        let inst = Instance::new(
            vec![Seller::new(3, int(5))],
            int(5),
            Valuation::bounded_knapsack(vec![int(1)]).unwrap(),
        )
        .unwrap();
        assert_eq!(greedy_allocate(&inst, &inst.costs()).unwrap().counts(), &[1]);
    }

    #[test]
    fn expensive_instance_is_empty() {
        let inst = Instance::new(
            vec![Seller::new(2, int(30)), Seller::new(1, int(40))],
            int(10),
            Valuation::bounded_knapsack(vec![int(2), int(3)]).unwrap(),
        )
        .unwrap();
        assert!(greedy_allocate(&inst, &inst.costs()).unwrap().is_zero());
        assert!(matches!(
            threshold(&inst, 0, 1),
            Err(Error::NoThreshold { seller: 0, unit: 1 })
        ));
    }

    #[test]
    fn rejects_non_concave_margins() {
        let inst = Instance::new(
            vec![Seller::new(2, int(1))],
            int(10),
            Valuation::additive(vec![vec![int(1), int(5)]]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            greedy_allocate(&inst, &inst.costs()),
            Err(Error::WrongValuationClass(_))
        ));
    }

    #[test]
    fn star_and_bot_branches() {
        let inst = example();
        let star = run_m_add(&inst, &inst.costs(), AddBranch::Star).unwrap();
        assert_eq!(star.allocation().counts(), &[1, 0]);
        assert_eq!(star.payments(), &[int(10), int(0)]);
        let bot = run_m_add(&inst, &inst.costs(), AddBranch::Bot).unwrap();
        assert_eq!(bot, Outcome::empty(2));
    }

    #[test]
    fn zero_cost_pairs_rank_first() {
        let inst = Instance::new(
            vec![Seller::new(1, int(1)), Seller::new(1, int(0))],
            int(1),
            Valuation::bounded_knapsack(vec![int(5), int(1)]).unwrap(),
        )
        .unwrap();
        let (pairs, k) = greedy_rank(&inst, &inst.costs()).unwrap();
        assert_eq!(pairs[0].seller, 1);
        assert!(pairs[0].rate().is_none());
        assert_eq!(k, 1);
    }

    #[test]
    fn breakpoint_search_finds_step() {
        let cands = vec![int(1), int(2), int(3)];
        let th = threshold_by_breakpoints(cands.clone(), |b| Ok(*b < int(2))).unwrap();
        assert_eq!(th, Some(int(2)));
        let th = threshold_by_breakpoints(cands.clone(), |_| Ok(false)).unwrap();
        assert_eq!(th, Some(int(0)));
        let th = threshold_by_breakpoints(cands, |_| Ok(true)).unwrap();
        assert_eq!(th, None);
    }

    fn sym_example() -> Instance {
        Instance::new(
            vec![Seller::new(2, int(1)), Seller::new(2, int(4))],
            int(8),
            Valuation::symmetric(vec![int(10), int(6), int(3), int(1)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn symmetric_rule_example() {
        let inst = sym_example();
        assert_eq!(sym_allocate(&inst, &inst.costs()).unwrap().counts(), &[2, 0]);
        let out = run_m_sym(&inst, &inst.costs(), AddBranch::Greedy).unwrap();
        // unit 1 survives up to min(B/1, c_2) = 4, unit 2 up to B/2 = 4
        assert_eq!(out.payments(), &[int(8), int(0)]);
    }

    #[test]
    fn symmetric_single_seller_takes_everything() {
        let inst = Instance::new(
            vec![Seller::new(4, int(2))],
            int(8),
            Valuation::symmetric(vec![int(4), int(3), int(2), int(1)]).unwrap(),
        )
        .unwrap();
        assert_eq!(sym_allocate(&inst, &inst.costs()).unwrap().counts(), &[4]);
        assert!(matches!(
            sym_allocate(&example(), &example().costs()),
            Err(Error::WrongValuationClass(_))
        ));
    }
}

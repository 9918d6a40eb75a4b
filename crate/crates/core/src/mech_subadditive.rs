//! Demand-oracle approximation of the budget-constrained optimum, the random
//! sampling posted-price mechanism, and their mix with the single-seller
//! mechanism for sub-additive valuations.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::mech_single_item::{run_m_one, OneBranch};
use crate::model::{check_len, Allocation, Instance, Outcome};
use crate::rational::{affordable_units, from_u32, to_f64, Rational};
use crate::valuation::Valuation;

/// Largest seller count for which partitions are enumerated.
pub const MAX_PARTITION_SELLERS: usize = 16;

/// Trace of one demand-oracle maximization run.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxRun {
    /// `n'_i`, zero outside the player set.
    pub caps: Vec<u32>,
    pub anchor: Rational,
    /// Grid values in scan order, largest first.
    pub grid: Vec<Rational>,
    pub candidates: Vec<Allocation>,
    pub winner: Allocation,
    pub winner_value: Rational,
}

/// Returns `S_Max` for the given players.
pub fn a_max(
    players: &[usize],
    units: &[u32],
    costs: &[Rational],
    budget: &Rational,
    valuation: &Valuation,
) -> Result<Allocation> {
    Ok(a_max_trace(players, units, costs, budget, valuation)?.winner)
}

pub fn a_max_trace(
    players: &[usize],
    units: &[u32],
    costs: &[Rational],
    budget: &Rational,
    valuation: &Valuation,
) -> Result<MaxRun> {
    let m_all = units.len();
    check_len(m_all, costs.len())?;
    for &i in players {
        if i >= m_all {
            return Err(Error::SellerOutOfRange {
                index: i,
                sellers: m_all,
            });
        }
    }
    let mut caps = vec![0u32; m_all];
    for &i in players {
        caps[i] = affordable_units(budget, &costs[i], units[i]);
    }
    if players.is_empty() {
        return Ok(MaxRun {
            caps,
            anchor: Rational::zero(),
            grid: Vec::new(),
            candidates: Vec::new(),
            winner: Allocation::zero(m_all),
            winner_value: Rational::zero(),
        });
    }

    let mut anchor = Rational::zero();
    for (pos, &i) in players.iter().enumerate() {
        let v = valuation.single_item_value(m_all, i, caps[i])?;
        if pos == 0 || v > anchor {
            anchor = v;
        }
    }
    let grid: Vec<Rational> = (1..=players.len() as u32)
        .rev()
        .map(|t| &anchor * from_u32(t))
        .collect();

    let two_b = budget * from_u32(2);
    let mut candidates = Vec::with_capacity(grid.len());
    let mut winner: Option<(Rational, Allocation)> = None;
    for v in &grid {
        let prices: Vec<Rational> = costs.iter().map(|c| v * c / &two_b).collect();
        let s = valuation.demand(&prices, &caps)?;
        let value_s = valuation.value(s.counts())?;
        let s_v = if value_s * from_u32(2) < *v {
            Allocation::zero(m_all)
        } else {
            project_prefix(&s, players, costs, budget)
        };
        let value = valuation.value(s_v.counts())?;
        if winner.as_ref().map_or(true, |(b, _)| &value > b) {
            winner = Some((value, s_v.clone()));
        }
        candidates.push(s_v);
    }
    let (winner_value, winner) = winner.expect("grid is non-empty");
    Ok(MaxRun {
        caps,
        anchor,
        grid,
        candidates,
        winner,
        winner_value,
    })
}

/// Keeps the longest prefix of players, ordered by `s_i c_i` decreasing,
/// whose spend fits the budget.
fn project_prefix(s: &Allocation, players: &[usize], costs: &[Rational], budget: &Rational) -> Allocation {
    let spend = |i: usize| from_u32(s.counts()[i]) * &costs[i];
    let mut order: Vec<(usize, Rational)> = players.iter().map(|&i| (i, spend(i))).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = vec![0u32; s.len()];
    let mut total = Rational::zero();
    for (i, sc) in order {
        total += sc;
        if &total > budget {
            break;
        }
        out[i] = s.counts()[i];
    }
    Allocation::new(out)
}

/// A split of the sellers: bit `i` set puts seller `i` in the sampling group
/// `T`, the rest form `T'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition(pub u64);

impl Partition {
    pub fn in_sample(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn sample(self, m: usize) -> Vec<usize> {
        (0..m).filter(|&i| self.in_sample(i)).collect()
    }

    pub fn rest(self, m: usize) -> Vec<usize> {
        (0..m).filter(|&i| !self.in_sample(i)).collect()
    }

    /// Swaps the roles of the two groups.
    pub fn complement(self, m: usize) -> Partition {
        Partition(!self.0 & ((1u64 << m) - 1))
    }

    pub fn check(self, m: usize) -> Result<()> {
        if m < 64 && self.0 >> m != 0 {
            return Err(Error::InvalidScenario(format!(
                "partition {self} names sellers beyond {m}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rand:0b{:b}", self.0)
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Accepts `rand:0b…`, `rand:0x…` or a decimal mask, with or without the
    /// `rand:` prefix.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidScenario(s.to_string());
        let body = s.strip_prefix("rand:").unwrap_or(s);
        let parsed = if let Some(bits) = body.strip_prefix("0b") {
            u64::from_str_radix(bits, 2)
        } else if let Some(hex) = body.strip_prefix("0x") {
            u64::from_str_radix(hex, 16)
        } else {
            body.parse::<u64>()
        };
        parsed.map(Partition).map_err(|_| bad())
    }
}

/// `log2 log2 n' / (64 log2 n')` with `n' = max(n, 4)`, so the factor stays
/// positive on tiny instances.
pub fn phi(n: u32) -> f64 {
    let n = n.max(4) as f64;
    n.log2().log2() / (64.0 * n.log2())
}

/// Trace of one realization of the sampling mechanism.
#[derive(Clone, Debug, PartialEq)]
pub struct RandRun {
    pub partition: Partition,
    /// Value of the allocation found for the sample group.
    pub sampled_value: Rational,
    /// Accepted round `k` and its allocation.
    pub accepted: Option<(u32, Allocation)>,
    pub rounds: u32,
}

/// Memo of A_Max results for one fixed instance. Keys carry the player set
/// and its costs; units, budget and valuation come from the instance the memo
/// is used with.
#[derive(Debug, Default)]
pub struct MaxMemo {
    map: HashMap<(Vec<usize>, Vec<Rational>), Allocation>,
}

impl MaxMemo {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&mut self, inst: &Instance, players: Vec<usize>, costs: Vec<Rational>) -> Result<Allocation> {
        let key_costs: Vec<Rational> = players.iter().map(|&i| costs[i].clone()).collect();
        let key = (players, key_costs);
        if let Some(a) = self.map.get(&key) {
            return Ok(a.clone());
        }
        let a = a_max(&key.0, &inst.units(), &costs, inst.budget(), inst.valuation())?;
        self.map.insert(key, a.clone());
        Ok(a)
    }
}

fn accepts(value: &Rational, sampled: &Rational, factor: f64) -> bool {
    if sampled.is_zero() {
        return !value.is_zero();
    }
    to_f64(value) >= factor * to_f64(sampled) - 1e-12
}

pub fn trace_m_rand(inst: &Instance, bids: &[Rational], partition: Partition) -> Result<RandRun> {
    trace_m_rand_with(inst, bids, partition, &mut MaxMemo::new())
}

pub fn trace_m_rand_with(
    inst: &Instance,
    bids: &[Rational],
    partition: Partition,
    memo: &mut MaxMemo,
) -> Result<RandRun> {
    let m = inst.num_sellers();
    check_len(m, bids.len())?;
    partition.check(m)?;
    let v = inst.valuation();
    let budget = inst.budget();
    let sample = memo.get(inst, partition.sample(m), bids.to_vec())?;
    let sampled_value = v.value(sample.counts())?;
    let rest = partition.rest(m);
    let rounds: u32 = rest.iter().map(|&i| inst.sellers()[i].units).sum();
    let factor = phi(inst.total_units());
    for k in 1..=rounds {
        let price = budget / from_u32(k);
        let t_k: Vec<usize> = rest.iter().copied().filter(|&i| bids[i] <= price).collect();
        let x = memo.get(inst, t_k, vec![price; m])?;
        if accepts(&v.value(x.counts())?, &sampled_value, factor) {
            return Ok(RandRun {
                partition,
                sampled_value,
                accepted: Some((k, x)),
                rounds,
            });
        }
    }
    Ok(RandRun {
        partition,
        sampled_value,
        accepted: None,
        rounds,
    })
}

pub fn run_m_rand(inst: &Instance, bids: &[Rational], partition: Partition) -> Result<Outcome> {
    run_m_rand_with(inst, bids, partition, &mut MaxMemo::new())
}

pub fn run_m_rand_with(
    inst: &Instance,
    bids: &[Rational],
    partition: Partition,
    memo: &mut MaxMemo,
) -> Result<Outcome> {
    let run = trace_m_rand_with(inst, bids, partition, memo)?;
    let m = inst.num_sellers();
    match run.accepted {
        None => Ok(Outcome::empty(m)),
        Some((k, x)) => {
            let price = inst.budget() / from_u32(k);
            let payments = x.counts().iter().map(|&a| from_u32(a) * &price).collect();
            Outcome::new(x, payments)
        }
    }
}

/// A realization of the mixed mechanism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubScenario {
    Rand(Partition),
    One(OneBranch),
}

impl fmt::Display for SubScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubScenario::Rand(p) => p.fmt(f),
            SubScenario::One(b) => b.fmt(f),
        }
    }
}

impl FromStr for SubScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.starts_with("rand:") {
            s.parse().map(SubScenario::Rand)
        } else {
            s.parse().map(SubScenario::One)
        }
    }
}

pub fn run_m_sub(inst: &Instance, bids: &[Rational], scenario: SubScenario) -> Result<Outcome> {
    match scenario {
        SubScenario::Rand(p) => run_m_rand(inst, bids, p),
        SubScenario::One(b) => run_m_one(inst, bids, b),
    }
}

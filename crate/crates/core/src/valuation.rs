//! Buyer valuations: the concrete families, value and demand oracles, and
//! class-membership checks.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{check_len, Allocation};
use crate::rational::{from_u32, Rational};

/// Largest number of candidate allocations that demand, classify and the
/// exhaustive optimum will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValuationClass {
    BoundedKnapsack,
    Symmetric,
    Additive,
    ConcaveAdditive,
    DiminishingReturn,
    Submodular,
    Subadditive,
}

impl ValuationClass {
    pub const ALL: [ValuationClass; 7] = [
        ValuationClass::BoundedKnapsack,
        ValuationClass::Symmetric,
        ValuationClass::Additive,
        ValuationClass::ConcaveAdditive,
        ValuationClass::DiminishingReturn,
        ValuationClass::Submodular,
        ValuationClass::Subadditive,
    ];

    /// The nested chain bounded knapsack, concave additive, diminishing
    /// return, submodular, subadditive.
    pub const CHAIN: [ValuationClass; 5] = [
        ValuationClass::BoundedKnapsack,
        ValuationClass::ConcaveAdditive,
        ValuationClass::DiminishingReturn,
        ValuationClass::Submodular,
        ValuationClass::Subadditive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ValuationClass::BoundedKnapsack => "bounded-knapsack",
            ValuationClass::Symmetric => "symmetric",
            ValuationClass::Additive => "additive",
            ValuationClass::ConcaveAdditive => "concave-additive",
            ValuationClass::DiminishingReturn => "diminishing-return",
            ValuationClass::Submodular => "submodular",
            ValuationClass::Subadditive => "subadditive",
        }
    }
}

impl fmt::Display for ValuationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A total value table over every allocation `a <= caps`, stored densely in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitTable {
    caps: Vec<u32>,
    values: Vec<Rational>,
    monotone: bool,
}

impl ExplicitTable {
    pub fn caps(&self) -> &[u32] {
        &self.caps
    }

    /// Whether the table was validated as monotone across all items, as
    /// opposed to only along each single item.
    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// `(allocation, value)` pairs in lexicographic order.
    pub fn entries(&self) -> Vec<(Vec<u32>, Rational)> {
        let mut out = Vec::with_capacity(self.values.len());
        for_each_allocation(&self.caps, |a| {
            out.push((a.to_vec(), self.values[out.len()].clone()));
        });
        out
    }

    fn index(&self, a: &[u32]) -> Result<usize> {
        check_len(self.caps.len(), a.len())?;
        let mut idx = 0usize;
        for (item, (&k, &cap)) in a.iter().zip(&self.caps).enumerate() {
            if k > cap {
                return Err(Error::AllocationOutOfRange { item, count: k, cap });
            }
            idx = idx * (cap as usize + 1) + k as usize;
        }
        Ok(idx)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    /// One value per item, shared by all of its units.
    BoundedKnapsack {
        values: Vec<Rational>,
    },
    /// Per-item marginal values, non-increasing along each item.
    ConcaveAdditive {
        margins: Vec<Vec<Rational>>,
    },
    /// Per-item marginal values in any order.
    Additive {
        margins: Vec<Vec<Rational>>,
    },
    /// Global marginal values indexed by the total number of units bought.
    Symmetric {
        margins: Vec<Rational>,
    },
    Explicit(ExplicitTable),
}

impl Valuation {
    pub fn bounded_knapsack(values: Vec<Rational>) -> Result<Self> {
        let v = Valuation::BoundedKnapsack { values };
        v.validate()?;
        Ok(v)
    }

    pub fn concave_additive(margins: Vec<Vec<Rational>>) -> Result<Self> {
        let v = Valuation::ConcaveAdditive { margins };
        v.validate()?;
        Ok(v)
    }

    pub fn additive(margins: Vec<Vec<Rational>>) -> Result<Self> {
        let v = Valuation::Additive { margins };
        v.validate()?;
        Ok(v)
    }

    pub fn symmetric(margins: Vec<Rational>) -> Result<Self> {
        let v = Valuation::Symmetric { margins };
        v.validate()?;
        Ok(v)
    }

    /// A monotone table; every allocation within `caps` must appear exactly once.
    pub fn explicit(caps: Vec<u32>, entries: Vec<(Vec<u32>, Rational)>) -> Result<Self> {
        Self::explicit_inner(caps, entries, true)
    }

    /// A table that only needs to be non-decreasing along each single item.
    pub fn explicit_per_item_monotone(caps: Vec<u32>, entries: Vec<(Vec<u32>, Rational)>) -> Result<Self> {
        Self::explicit_inner(caps, entries, false)
    }

    /// Tabulates `f` over every allocation within `caps` into a monotone table.
    pub fn explicit_from_fn(caps: Vec<u32>, f: impl Fn(&[u32]) -> Rational) -> Result<Self> {
        check_grid(&caps)?;
        let mut entries = Vec::new();
        for_each_allocation(&caps, |a| entries.push((a.to_vec(), f(a))));
        Self::explicit(caps, entries)
    }

    fn explicit_inner(caps: Vec<u32>, entries: Vec<(Vec<u32>, Rational)>, monotone: bool) -> Result<Self> {
        let size = check_grid(&caps)?;
        let mut slots: Vec<Option<Rational>> = vec![None; size];
        let mut table = ExplicitTable {
            caps,
            values: Vec::new(),
            monotone,
        };
        for (alloc, value) in entries {
            let idx = table
                .index(&alloc)
                .map_err(|e| Error::MalformedValuation(format!("table entry {alloc:?}: {e}")))?;
            if slots[idx].is_some() {
                return Err(Error::MalformedValuation(format!(
                    "duplicate table entry for {alloc:?}"
                )));
            }
            slots[idx] = Some(value);
        }
        let mut missing = None;
        let mut i = 0;
        for_each_allocation(&table.caps, |a| {
            if slots[i].is_none() && missing.is_none() {
                missing = Some(a.to_vec());
            }
            i += 1;
        });
        if let Some(a) = missing {
            return Err(Error::MalformedValuation(format!(
                "missing table entry for allocation {a:?}"
            )));
        }
        table.values = slots.into_iter().map(Option::unwrap).collect();
        let v = Valuation::Explicit(table);
        v.validate()?;
        Ok(v)
    }

    /// Checks normalization, non-negativity and the family's own shape rules.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedValuation(msg));
        match self {
            Valuation::BoundedKnapsack { values } => {
                if values.iter().any(Signed::is_negative) {
                    return bad("negative unit value".into());
                }
            }
            Valuation::ConcaveAdditive { margins } | Valuation::Additive { margins } => {
                for (i, row) in margins.iter().enumerate() {
                    if row.iter().any(Signed::is_negative) {
                        return bad(format!("negative margin for item {i}"));
                    }
                    if matches!(self, Valuation::ConcaveAdditive { .. })
                        && row.windows(2).any(|w| w[0] < w[1])
                    {
                        return bad(format!("margins of item {i} are not non-increasing"));
                    }
                }
            }
            Valuation::Symmetric { margins } => {
                if margins.iter().any(Signed::is_negative) {
                    return bad("negative margin".into());
                }
            }
            Valuation::Explicit(t) => {
                if !t.values[0].is_zero() {
                    return bad("value of the empty allocation must be 0".into());
                }
                if t.values.iter().any(Signed::is_negative) {
                    return bad("negative table value".into());
                }
                let strides = strides(&t.caps);
                let mut violation = None;
                let mut idx = 0usize;
                for_each_allocation(&t.caps, |a| {
                    for i in 0..a.len() {
                        if a[i] == t.caps[i] || violation.is_some() {
                            continue;
                        }
                        let along_item = a.iter().enumerate().all(|(j, &k)| j == i || k == 0);
                        if (t.monotone || along_item) && t.values[idx] > t.values[idx + strides[i]] {
                            violation = Some((a.to_vec(), i));
                        }
                    }
                    idx += 1;
                });
                if let Some((a, i)) = violation {
                    return bad(format!("not monotone: adding item {i} to {a:?} lowers the value"));
                }
            }
        }
        Ok(())
    }

    /// Number of items the valuation is defined over, where it fixes one.
    pub fn num_items(&self) -> Option<usize> {
        match self {
            Valuation::BoundedKnapsack { values } => Some(values.len()),
            Valuation::ConcaveAdditive { margins } | Valuation::Additive { margins } => Some(margins.len()),
            Valuation::Symmetric { .. } => None,
            Valuation::Explicit(t) => Some(t.caps.len()),
        }
    }

    /// Checks that the valuation is defined for sellers holding `units`.
    pub fn check_dims(&self, units: &[u32]) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedValuation(msg));
        if let Some(m) = self.num_items() {
            if m != units.len() {
                return bad(format!(
                    "valuation covers {m} items, instance has {}",
                    units.len()
                ));
            }
        }
        match self {
            Valuation::ConcaveAdditive { margins } | Valuation::Additive { margins } => {
                for (i, (row, &n)) in margins.iter().zip(units).enumerate() {
                    if row.len() != n as usize {
                        return bad(format!("item {i} has {} margins but {n} units", row.len()));
                    }
                }
            }
            Valuation::Symmetric { margins } => {
                let n: u32 = units.iter().sum();
                if margins.len() != n as usize {
                    return bad(format!("{} margins for {n} total units", margins.len()));
                }
            }
            Valuation::Explicit(t) => {
                if t.caps != units {
                    return bad(format!("table caps {:?} differ from units {units:?}", t.caps));
                }
            }
            Valuation::BoundedKnapsack { .. } => {}
        }
        Ok(())
    }

    fn check_caps(&self, caps: &[u32]) -> Result<()> {
        if let Some(m) = self.num_items() {
            check_len(m, caps.len())?;
        }
        match self {
            Valuation::ConcaveAdditive { margins } | Valuation::Additive { margins } => {
                for (item, (row, &c)) in margins.iter().zip(caps).enumerate() {
                    if c as usize > row.len() {
                        return Err(Error::AllocationOutOfRange {
                            item,
                            count: c,
                            cap: row.len() as u32,
                        });
                    }
                }
            }
            Valuation::Symmetric { margins } => {
                let total: u64 = caps.iter().map(|&c| c as u64).sum();
                if total > margins.len() as u64 {
                    return Err(Error::MalformedValuation(format!(
                        "{total} units exceed the {} symmetric margins",
                        margins.len()
                    )));
                }
            }
            Valuation::Explicit(t) => {
                for (item, (&c, &cap)) in caps.iter().zip(&t.caps).enumerate() {
                    if c > cap {
                        return Err(Error::AllocationOutOfRange { item, count: c, cap });
                    }
                }
            }
            Valuation::BoundedKnapsack { .. } => {}
        }
        Ok(())
    }

    /// Value oracle.
    pub fn value(&self, a: &[u32]) -> Result<Rational> {
        match self {
            Valuation::BoundedKnapsack { values } => {
                check_len(values.len(), a.len())?;
                Ok(values.iter().zip(a).map(|(v, &k)| v * from_u32(k)).sum())
            }
            Valuation::ConcaveAdditive { margins } | Valuation::Additive { margins } => {
                check_len(margins.len(), a.len())?;
                let mut total = Rational::zero();
                for (item, (row, &k)) in margins.iter().zip(a).enumerate() {
                    if k as usize > row.len() {
                        return Err(Error::AllocationOutOfRange {
                            item,
                            count: k,
                            cap: row.len() as u32,
                        });
                    }
                    for v in &row[..k as usize] {
                        total += v;
                    }
                }
                Ok(total)
            }
            Valuation::Symmetric { margins } => {
                let k: u64 = a.iter().map(|&x| x as u64).sum();
                if k > margins.len() as u64 {
                    return Err(Error::MalformedValuation(format!(
                        "{k} units exceed the {} symmetric margins",
                        margins.len()
                    )));
                }
                Ok(margins[..k as usize].iter().sum())
            }
            Valuation::Explicit(t) => Ok(t.values[t.index(a)?].clone()),
        }
    }

    pub fn value_of(&self, a: &Allocation) -> Result<Rational> {
        self.value(a.counts())
    }

    /// `V(count * e_i)` for an `m`-item allocation.
    pub fn single_item_value(&self, m: usize, i: usize, count: u32) -> Result<Rational> {
        self.value(Allocation::single(m, i, count).counts())
    }

    /// Per-item margin lists restricted to `caps`, for the additive families.
    pub fn margins_for(&self, caps: &[u32]) -> Option<Vec<Vec<Rational>>> {
        match self {
            Valuation::BoundedKnapsack { values } => Some(
                values
                    .iter()
                    .zip(caps)
                    .map(|(v, &c)| vec![v.clone(); c as usize])
                    .collect(),
            ),
            Valuation::ConcaveAdditive { margins } | Valuation::Additive { margins } => Some(
                margins
                    .iter()
                    .zip(caps)
                    .map(|(row, &c)| row[..(c as usize).min(row.len())].to_vec())
                    .collect(),
            ),
            _ => None,
        }
    }

    /// True for the families whose margins are non-increasing per item by
    /// construction or by data.
    pub fn is_concave_additive(&self) -> bool {
        match self {
            Valuation::BoundedKnapsack { .. } | Valuation::ConcaveAdditive { .. } => true,
            Valuation::Additive { margins } => margins.iter().all(|row| row.windows(2).all(|w| w[0] >= w[1])),
            _ => false,
        }
    }

    /// Demand oracle: the lexicographically smallest maximizer of
    /// `V(A) - sum_i a_i p_i` over `0 <= a_i <= caps[i]`.
    pub fn demand(&self, prices: &[Rational], caps: &[u32]) -> Result<Allocation> {
        check_len(caps.len(), prices.len())?;
        self.check_caps(caps)?;
        match self.margins_for(caps) {
            Some(margins) => Ok(Allocation::new(
                margins
                    .iter()
                    .zip(prices)
                    .map(|(row, p)| best_prefix(row, p))
                    .collect(),
            )),
            None => self.demand_by_enumeration(prices, caps),
        }
    }

    /// Exhaustive demand oracle, scanning allocations in lexicographic order.
    pub fn demand_by_enumeration(&self, prices: &[Rational], caps: &[u32]) -> Result<Allocation> {
        check_len(caps.len(), prices.len())?;
        self.check_caps(caps)?;
        check_grid(caps)?;
        // price_table[i][k] = k * p_i
        let price_table: Vec<Vec<Rational>> = prices
            .iter()
            .zip(caps)
            .map(|(p, &c)| (0..=c).map(|k| p * from_u32(k)).collect())
            .collect();
        let mut best: Option<(Rational, Vec<u32>)> = None;
        let mut err = None;
        for_each_allocation(caps, |a| {
            if err.is_some() {
                return;
            }
            let v = match self.value(a) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            let cost: Rational = a
                .iter()
                .enumerate()
                .map(|(i, &k)| &price_table[i][k as usize])
                .sum();
            let obj = v - cost;
            if best.as_ref().map_or(true, |(b, _)| &obj > b) {
                best = Some((obj, a.to_vec()));
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(Allocation::new(best.expect("grid is never empty").1))
    }

    /// `V(A + e_j) - V(A)`, with `A + e_j = A` once item `j` is at its cap.
    pub fn marginal(&self, a: &[u32], j: usize, caps: &[u32]) -> Result<Rational> {
        if a[j] >= caps[j] {
            return Ok(Rational::zero());
        }
        let mut b = a.to_vec();
        b[j] += 1;
        Ok(self.value(&b)? - self.value(a)?)
    }

    /// Every class label the valuation satisfies over the domain `a <= caps`.
    pub fn classify(&self, caps: &[u32]) -> Result<BTreeSet<ValuationClass>> {
        self.check_caps(caps)?;
        match self.margins_for(caps) {
            Some(margins) => Ok(classify_additive(&margins)),
            None => self.classify_by_enumeration(caps),
        }
    }

    /// Class membership by exhaustive quantifier enumeration over the capped
    /// domain.
    pub fn classify_by_enumeration(&self, caps: &[u32]) -> Result<BTreeSet<ValuationClass>> {
        self.check_caps(caps)?;
        check_grid(caps)?;
        let mut values = Vec::new();
        let mut err = None;
        for_each_allocation(caps, |a| match self.value(a) {
            Ok(v) => values.push(v),
            Err(e) => err = err.clone().or(Some(e)),
        });
        if let Some(e) = err {
            return Err(e);
        }
        let monotone = match self {
            Valuation::Explicit(t) => t.monotone,
            _ => true,
        };
        Ok(TableView::new(caps, &values).classify(monotone))
    }
}

/// Smallest count maximizing `sum_{k<=a} row[k] - a * price`.
fn best_prefix(row: &[Rational], price: &Rational) -> u32 {
    let mut best = Rational::zero();
    let mut best_a = 0;
    let mut running = Rational::zero();
    for (k, v) in row.iter().enumerate() {
        running += v - price;
        if running > best {
            best = running.clone();
            best_a = k as u32 + 1;
        }
    }
    best_a
}

fn classify_additive(margins: &[Vec<Rational>]) -> BTreeSet<ValuationClass> {
    use ValuationClass::*;
    let mut set: BTreeSet<ValuationClass> = [Additive, Submodular, Subadditive].into();
    let concave = margins.iter().all(|r| r.windows(2).all(|w| w[0] >= w[1]));
    let constant = margins.iter().all(|r| r.windows(2).all(|w| w[0] == w[1]));
    if concave {
        set.insert(ConcaveAdditive);
        set.insert(DiminishingReturn);
    }
    if constant {
        set.insert(BoundedKnapsack);
    }
    let live = margins.iter().filter(|r| !r.is_empty()).count();
    let first = margins.iter().flatten().next();
    if live <= 1 || margins.iter().flatten().all(|v| Some(v) == first) {
        set.insert(Symmetric);
    }
    set
}

/// Dense value table over a capped grid, for the exhaustive class checks.
struct TableView<'a> {
    caps: &'a [u32],
    strides: Vec<usize>,
    values: &'a [Rational],
}

impl<'a> TableView<'a> {
    fn new(caps: &'a [u32], values: &'a [Rational]) -> Self {
        TableView {
            caps,
            strides: strides(caps),
            values,
        }
    }

    fn at(&self, a: &[u32]) -> &Rational {
        let idx: usize = a.iter().zip(&self.strides).map(|(&k, s)| k as usize * s).sum();
        &self.values[idx]
    }

    fn delta(&self, idx: usize, a: &[u32], j: usize) -> Rational {
        if a[j] == self.caps[j] {
            Rational::zero()
        } else {
            &self.values[idx + self.strides[j]] - &self.values[idx]
        }
    }

    fn classify(&self, monotone: bool) -> BTreeSet<ValuationClass> {
        use ValuationClass::*;
        let m = self.caps.len();
        let mut set = BTreeSet::new();

        let single = |i: usize, k: u32| {
            let mut a = vec![0; m];
            a[i] = k;
            self.at(&a).clone()
        };
        let mut additive = true;
        let mut by_total: HashMap<u32, &Rational> = HashMap::new();
        let mut symmetric = true;
        let mut dr = true;
        let mut submod = true;
        let mut idx = 0usize;
        for_each_allocation(self.caps, |a| {
            let v = &self.values[idx];
            if additive {
                let sum: Rational = (0..m).map(|i| single(i, a[i])).sum();
                additive = &sum == v;
            }
            if symmetric {
                let total = a.iter().sum();
                match by_total.get(&total) {
                    Some(w) => symmetric = *w == v,
                    None => {
                        by_total.insert(total, v);
                    }
                }
            }
            for l in 0..m {
                if a[l] == self.caps[l] {
                    continue;
                }
                let mut up = a.to_vec();
                up[l] += 1;
                let up_idx = idx + self.strides[l];
                if dr {
                    dr = (0..m).all(|j| self.delta(idx, a, j) >= self.delta(up_idx, &up, j));
                }
                if submod {
                    for j in (l + 1)..m {
                        if a[j] == self.caps[j] {
                            continue;
                        }
                        let lhs = &self.values[up_idx] + &self.values[idx + self.strides[j]];
                        let rhs = v + &self.values[up_idx + self.strides[j]];
                        if lhs < rhs {
                            submod = false;
                            break;
                        }
                    }
                }
            }
            idx += 1;
        });
        let subadd = if monotone {
            self.subadditive_by_splits()
        } else {
            self.subadditive_by_pairs()
        };

        let item_margins = |i: usize| -> Vec<Rational> {
            (0..self.caps[i])
                .map(|k| single(i, k + 1) - single(i, k))
                .collect()
        };
        if additive {
            set.insert(Additive);
            let rows: Vec<Vec<Rational>> = (0..m).map(item_margins).collect();
            if rows.iter().all(|r| r.windows(2).all(|w| w[0] >= w[1])) {
                set.insert(ConcaveAdditive);
            }
            if rows.iter().all(|r| r.windows(2).all(|w| w[0] == w[1])) {
                set.insert(BoundedKnapsack);
            }
        }
        if symmetric {
            set.insert(Symmetric);
        }
        if dr {
            set.insert(DiminishingReturn);
        }
        if submod {
            set.insert(Submodular);
        }
        if subadd {
            set.insert(Subadditive);
        }
        set
    }

    // For a monotone V it suffices to check V(D) <= V(D|S) + V(D|S^c) over the
    // splits of the support of every D.
    fn subadditive_by_splits(&self) -> bool {
        let m = self.caps.len();
        let mut ok = true;
        let mut idx = 0usize;
        for_each_allocation(self.caps, |a| {
            if !ok {
                return;
            }
            let support: Vec<usize> = (0..m).filter(|&i| a[i] > 0).collect();
            let v = &self.values[idx];
            idx += 1;
            if support.len() < 2 {
                return;
            }
            // subsets containing the first support item cover each split once
            let rest = support.len() - 1;
            for mask in 0..(1u64 << rest) {
                let mut left = 0usize;
                let mut right = 0usize;
                for (pos, &i) in support.iter().enumerate() {
                    let in_left = pos == 0 || mask & (1 << (pos - 1)) != 0;
                    let part = a[i] as usize * self.strides[i];
                    if in_left {
                        left += part;
                    } else {
                        right += part;
                    }
                }
                if v > &(&self.values[left] + &self.values[right]) {
                    ok = false;
                    return;
                }
            }
        });
        ok
    }

    fn subadditive_by_pairs(&self) -> bool {
        let all: Vec<Vec<u32>> = {
            let mut v = Vec::new();
            for_each_allocation(self.caps, |a| v.push(a.to_vec()));
            v
        };
        for (i, a) in all.iter().enumerate() {
            for b in &all[i..] {
                let j: Vec<u32> = a.iter().zip(b).map(|(x, y)| *x.max(y)).collect();
                if self.at(&j) > &(self.at(a) + self.at(b)) {
                    return false;
                }
            }
        }
        true
    }
}

pub(crate) fn grid_size(caps: &[u32]) -> u128 {
    caps.iter().map(|&c| c as u128 + 1).product()
}

pub(crate) fn check_grid(caps: &[u32]) -> Result<usize> {
    let size = grid_size(caps);
    if size > ENUMERATION_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(size as usize)
}

fn strides(caps: &[u32]) -> Vec<usize> {
    let mut s = vec![1usize; caps.len()];
    for i in (0..caps.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * (caps[i + 1] as usize + 1);
    }
    s
}

/// Visits every allocation `a <= caps` in lexicographic order.
pub fn for_each_allocation(caps: &[u32], mut f: impl FnMut(&[u32])) {
    let mut a = vec![0u32; caps.len()];
    loop {
        f(&a);
        let mut i = caps.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if a[i] < caps[i] {
                a[i] += 1;
                break;
            }
            a[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use ValuationClass::*;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn lexicographic_enumeration() {
        let mut seen = Vec::new();
        for_each_allocation(&[1, 2], |a| seen.push(a.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![1, 2]
            ]
        );
        let mut count = 0;
        for_each_allocation(&[], |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn bounded_knapsack_value() {
        let v = Valuation::bounded_knapsack(ints(&[1])).unwrap();
        assert_eq!(v.value(&[5]).unwrap(), int(5));
        assert_eq!(v.value(&[0]).unwrap(), int(0));
    }

    #[test]
    fn symmetric_value_counts_total_units() {
        let v = Valuation::symmetric(ints(&[10, 6, 3, 1])).unwrap();
        assert_eq!(v.value(&[1, 1]).unwrap(), int(16));
        assert_eq!(v.value(&[2, 0]).unwrap(), int(16));
        assert!(v.value(&[3, 2]).is_err());
    }

    #[test]
    fn concave_requires_non_increasing_margins() {
        assert!(Valuation::concave_additive(vec![ints(&[4, 6])]).is_err());
        assert!(Valuation::additive(vec![ints(&[4, 6])]).is_ok());
        assert!(Valuation::additive(vec![ints(&[-1])]).is_err());
    }

    #[test]
    fn explicit_table_must_be_total_and_monotone() {
        let full = vec![
            (vec![0, 0], int(0)),
            (vec![1, 0], int(1)),
            (vec![0, 1], int(1)),
            (vec![1, 1], int(3)),
        ];
        assert!(Valuation::explicit(vec![1, 1], full.clone()).is_ok());
        let missing = full[..3].to_vec();
        let err = Valuation::explicit(vec![1, 1], missing).unwrap_err();
        assert!(matches!(err, Error::MalformedValuation(ref m) if m.contains("missing")));
        let mut dup = full.clone();
        dup.push((vec![1, 1], int(3)));
        assert!(Valuation::explicit(vec![1, 1], dup).is_err());
        let mut nonmono = full.clone();
        nonmono[3].1 = int(0);
        assert!(Valuation::explicit(vec![1, 1], nonmono.clone()).is_err());
        // only the single-item chains are checked in the relaxed form
        assert!(Valuation::explicit_per_item_monotone(vec![1, 1], nonmono).is_ok());
        let mut unnormalized = full;
        unnormalized[0].1 = int(1);
        assert!(Valuation::explicit(vec![1, 1], unnormalized).is_err());
    }

    #[test]
    fn demand_takes_units_above_price() {
        let v = Valuation::concave_additive(vec![ints(&[6, 4])]).unwrap();
        assert_eq!(v.demand(&[int(5)], &[2]).unwrap().counts(), &[1]);
        // a unit priced exactly at its value is skipped
        assert_eq!(v.demand(&[int(4)], &[2]).unwrap().counts(), &[1]);
        assert_eq!(v.demand(&[int(0)], &[2]).unwrap().counts(), &[2]);
    }

    #[test]
    fn demand_handles_non_concave_items() {
        let v = Valuation::additive(vec![ints(&[1, 10])]).unwrap();
        assert_eq!(v.demand(&[int(5)], &[2]).unwrap().counts(), &[2]);
        assert_eq!(v.demand(&[int(6)], &[2]).unwrap().counts(), &[0]);
        assert_eq!(v.demand(&[ratio(11, 2)], &[2]).unwrap().counts(), &[0]);
    }

    #[test]
    fn demand_respects_caps() {
        let v = Valuation::bounded_knapsack(ints(&[3, 3])).unwrap();
        assert_eq!(v.demand(&ints(&[0, 1]), &[1, 2]).unwrap().counts(), &[1, 2]);
        let v = Valuation::concave_additive(vec![ints(&[6, 4])]).unwrap();
        assert!(v.demand(&[int(0)], &[3]).is_err());
    }

    #[test]
    fn enumeration_guard() {
        let v = Valuation::bounded_knapsack(ints(&[1, 1, 1])).unwrap();
        let err = v
            .demand_by_enumeration(&ints(&[1, 1, 1]), &[100, 100, 100])
            .unwrap_err();
        assert!(matches!(err, Error::SearchSpaceTooLarge { .. }));
    }

    #[test]
    fn classify_bounded_knapsack() {
        let v = Valuation::bounded_knapsack(ints(&[1, 2])).unwrap();
        let labels = v.classify(&[2, 2]).unwrap();
        let expected: BTreeSet<_> = ValuationClass::ALL
            .into_iter()
            .filter(|c| *c != Symmetric)
            .collect();
        assert_eq!(labels, expected);
        let v = Valuation::bounded_knapsack(ints(&[2, 2])).unwrap();
        assert!(v.classify(&[2, 2]).unwrap().contains(&Symmetric));
    }

    #[test]
    fn classify_superadditive_pair() {
        let v = Valuation::explicit(
            vec![1, 1],
            vec![
                (vec![0, 0], int(0)),
                (vec![1, 0], int(1)),
                (vec![0, 1], int(1)),
                (vec![1, 1], int(3)),
            ],
        )
        .unwrap();
        let labels = v.classify(&[1, 1]).unwrap();
        assert!(!labels.contains(&Subadditive));
        assert!(!labels.contains(&Submodular));
        assert!(!labels.contains(&Additive));
    }

    #[test]
    fn classify_non_concave_additive() {
        let v = Valuation::additive(vec![ints(&[1, 10]), ints(&[2])]).unwrap();
        let labels = v.classify(&[2, 1]).unwrap();
        let expected: BTreeSet<_> = [Additive, Submodular, Subadditive].into();
        assert_eq!(labels, expected);
        assert_eq!(v.classify_by_enumeration(&[2, 1]).unwrap(), expected);
    }

    #[test]
    fn marginal_uses_cap_convention() {
        let v = Valuation::concave_additive(vec![ints(&[6, 4])]).unwrap();
        assert_eq!(v.marginal(&[1], 0, &[2]).unwrap(), int(4));
        assert_eq!(v.marginal(&[2], 0, &[2]).unwrap(), int(0));
    }
}

//! Seeded instance generators.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha
//! 0.3), so a seed fixes the instance bit for bit across platforms.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, Seller};
use crate::oracles::adversarial_single_seller;
use crate::rational::{from_u32, int, ratio, Rational};
use crate::valuation::{for_each_allocation, grid_size, Valuation, ValuationClass};

/// Attempts allowed to rejection sampling before giving up.
pub const RETRY_CAP: usize = 1000;

/// Largest table the sub-additive generator will build.
pub const EXPLICIT_GRID_LIMIT: u128 = 10_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    ConcaveAdditive,
    BoundedKnapsack,
    Symmetric,
    ExplicitSubadditive,
    Adversarial,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::ConcaveAdditive,
        Family::BoundedKnapsack,
        Family::Symmetric,
        Family::ExplicitSubadditive,
        Family::Adversarial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ConcaveAdditive => "concave-additive",
            Family::BoundedKnapsack => "bounded-knapsack",
            Family::Symmetric => "symmetric",
            Family::ExplicitSubadditive => "explicit-subadditive",
            Family::Adversarial => "adversarial",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .ok_or_else(|| Error::OutOfRange(format!("unknown family '{s}'")))
    }
}

/// Shape parameters. Unset fields are drawn from the seed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    pub sellers: Option<usize>,
    /// Units per seller (table caps for the explicit family).
    pub units: Option<Vec<u32>>,
    pub budget: Option<Rational>,
    /// Adversarial family: cost is `B / k`.
    pub k: Option<u32>,
}

pub fn generate(family: Family, params: &Params, seed: u64) -> Result<Instance> {
    let mut r = rng(seed);
    if let (Some(m), Some(u)) = (params.sellers, &params.units) {
        if m != u.len() {
            return Err(Error::LengthMismatch {
                expected: m,
                got: u.len(),
            });
        }
    }
    if params.units.as_ref().is_some_and(|u| u.is_empty()) || params.sellers == Some(0) {
        return Err(Error::OutOfRange("need at least one seller".into()));
    }
    let shape = |r: &mut ChaCha8Rng, max: u32| -> Vec<u32> {
        match &params.units {
            Some(u) => u.clone(),
            None => {
                let m = params.sellers.unwrap_or_else(|| r.gen_range(1..=5));
                (0..m).map(|_| r.gen_range(1..=max)).collect()
            }
        }
    };
    match family {
        Family::ConcaveAdditive => {
            let units = shape(&mut r, 4);
            let budget = pick_budget(&mut r, params);
            let v = concave_margins(&mut r, &units)?;
            priced(&mut r, units, budget, v)
        }
        Family::BoundedKnapsack => {
            let units = shape(&mut r, 4);
            let budget = pick_budget(&mut r, params);
            let v = Valuation::bounded_knapsack(units.iter().map(|_| int(r.gen_range(1..=20))).collect())?;
            priced(&mut r, units, budget, v)
        }
        Family::Symmetric => {
            let units = shape(&mut r, 4);
            let budget = pick_budget(&mut r, params);
            let v = symmetric_margins(&mut r, units.iter().sum());
            priced(&mut r, units, budget, v)
        }
        Family::ExplicitSubadditive => {
            let caps = match &params.units {
                Some(u) => u.clone(),
                None => {
                    let m = params.sellers.unwrap_or_else(|| r.gen_range(2..=4));
                    (0..m).map(|_| r.gen_range(1..=4)).collect()
                }
            };
            let budget = pick_budget(&mut r, params);
            let v = explicit_subadditive(&mut r, &caps)?;
            priced(&mut r, caps, budget, v)
        }
        Family::Adversarial => {
            let n = match &params.units {
                Some(u) if u.len() == 1 => u[0],
                Some(_) => return Err(Error::OutOfRange("adversarial instances have one seller".into())),
                None => r.gen_range(1..=16),
            };
            let budget = params.budget.clone().unwrap_or_else(|| from_u32(n));
            let k = params.k.unwrap_or(n);
            adversarial_single_seller(n, budget, k)
        }
    }
}

fn pick_budget(r: &mut ChaCha8Rng, params: &Params) -> Rational {
    params.budget.clone().unwrap_or_else(|| int(r.gen_range(4..=24)))
}

/// A cost in `(0, B]` with denominator up to 5, or 0 one time in ten.
fn draw_cost(r: &mut ChaCha8Rng, budget: &Rational) -> Rational {
    if r.gen_bool(0.1) {
        return int(0);
    }
    let den = r.gen_range(1..=5i64);
    let top = (budget * Rational::from_integer(den.into())).floor();
    let top: i64 = top.to_integer().try_into().unwrap_or(i64::MAX);
    ratio(r.gen_range(1..=top.max(1)), den)
}

fn priced(r: &mut ChaCha8Rng, units: Vec<u32>, budget: Rational, v: Valuation) -> Result<Instance> {
    if budget <= int(0) {
        return Err(Error::InvalidInstance("budget must be positive".into()));
    }
    let sellers = units
        .into_iter()
        .map(|n| Seller::new(n, draw_cost(r, &budget)))
        .collect();
    Instance::new(sellers, budget, v)
}

fn concave_margins(r: &mut ChaCha8Rng, units: &[u32]) -> Result<Valuation> {
    Valuation::concave_additive(
        units
            .iter()
            .map(|&n| {
                let mut row: Vec<i64> = (0..n).map(|_| r.gen_range(1..=20)).collect();
                row.sort_unstable_by(|a, b| b.cmp(a));
                row.into_iter().map(int).collect()
            })
            .collect(),
    )
}

fn symmetric_margins(r: &mut ChaCha8Rng, n: u32) -> Valuation {
    let mut row: Vec<i64> = (0..n).map(|_| r.gen_range(1..=20)).collect();
    row.sort_unstable_by(|a, b| b.cmp(a));
    Valuation::Symmetric {
        margins: row.into_iter().map(int).collect(),
    }
}

/// A maximum of additive clauses, lifted by a constant on every nonempty
/// allocation and then jittered on a few entries. Draws that fail the
/// monotone and sub-additive checks are rejected.
pub fn explicit_subadditive(r: &mut ChaCha8Rng, caps: &[u32]) -> Result<Valuation> {
    let size = grid_size(caps);
    if size > EXPLICIT_GRID_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: EXPLICIT_GRID_LIMIT,
        });
    }
    for _ in 0..RETRY_CAP {
        let clauses: Vec<Vec<i64>> = (0..r.gen_range(1..=3))
            .map(|_| caps.iter().map(|_| r.gen_range(0..=8)).collect())
            .collect();
        let lift = r.gen_range(0..=3i64);
        let mut entries = Vec::with_capacity(size as usize);
        for_each_allocation(caps, |a| {
            let best = clauses
                .iter()
                .map(|w| w.iter().zip(a).map(|(w, &k)| w * k as i64).sum::<i64>())
                .max()
                .unwrap_or(0);
            let lifted = if a.iter().all(|&k| k == 0) { 0 } else { best + lift };
            entries.push((a.to_vec(), int(lifted)));
        });
        for _ in 0..3 {
            let idx = r.gen_range(1..entries.len().max(2)).min(entries.len() - 1);
            if idx > 0 {
                entries[idx].1 += ratio(r.gen_range(-2..=2), 2);
            }
        }
        if entries.iter().any(|(_, v)| v < &int(0)) {
            continue;
        }
        let Ok(v) = Valuation::explicit(caps.to_vec(), entries) else {
            continue;
        };
        if v.classify(caps)?.contains(&ValuationClass::Subadditive) {
            return Ok(v);
        }
    }
    Err(Error::RetryCapExceeded(RETRY_CAP))
}

/// A table that rises along each single item with increasing steps, so it
/// is not concave, and is arbitrary off the axes.
pub fn explicit_per_item_monotone(r: &mut ChaCha8Rng, caps: &[u32]) -> Result<Valuation> {
    let m = caps.len();
    let axes: Vec<Vec<i64>> = caps
        .iter()
        .map(|&n| {
            let mut steps: Vec<i64> = (0..n).map(|_| r.gen_range(0..=10)).collect();
            steps.sort_unstable();
            let mut acc = 0;
            std::iter::once(0)
                .chain(steps.into_iter().map(|s| {
                    acc += s;
                    acc
                }))
                .collect()
        })
        .collect();
    let mut entries = Vec::new();
    let mut off_axis = Vec::new();
    for_each_allocation(caps, |a| off_axis.push(a.to_vec()));
    for a in off_axis {
        let nonzero: Vec<usize> = (0..m).filter(|&i| a[i] > 0).collect();
        let value = match nonzero.as_slice() {
            [] => 0,
            [i] => axes[*i][a[*i] as usize],
            _ => r.gen_range(0..=30),
        };
        entries.push((a, int(value)));
    }
    Valuation::explicit_per_item_monotone(caps.to_vec(), entries)
}

/// Concave-additive instances with at most five sellers and twelve units.
pub fn threshold_corpus(seed: u64, count: usize) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let m = r.gen_range(1..=5usize);
            let per = (12 / m as u32).min(4);
            let units: Vec<u32> = (0..m).map(|_| r.gen_range(1..=per)).collect();
            let budget = int(r.gen_range(4..=24));
            let v = concave_margins(&mut r, &units).expect("sorted margins");
            priced(&mut r, units, budget, v).expect("well-formed draw")
        })
        .collect()
}

pub fn symmetric_corpus(seed: u64, count: usize) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let m = r.gen_range(1..=4usize);
            let units: Vec<u32> = (0..m).map(|_| r.gen_range(1..=3)).collect();
            let budget = int(r.gen_range(4..=24));
            let v = symmetric_margins(&mut r, units.iter().sum());
            priced(&mut r, units, budget, v).expect("well-formed draw")
        })
        .collect()
}

/// Mixed families for the single-seller mechanism; every third instance is
/// an explicit table that is monotone only along each item.
pub fn single_item_corpus(seed: u64, count: usize) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count)
        .map(|t| {
            let m = r.gen_range(1..=4usize);
            let units: Vec<u32> = (0..m).map(|_| r.gen_range(1..=4)).collect();
            let budget = int(r.gen_range(4..=24));
            let v = match t % 3 {
                0 => explicit_per_item_monotone(&mut r, &units).expect("axis-monotone table"),
                1 => concave_margins(&mut r, &units).expect("sorted margins"),
                _ => Valuation::additive(
                    units
                        .iter()
                        .map(|&n| (0..n).map(|_| int(r.gen_range(0..=20))).collect())
                        .collect(),
                )
                .expect("non-negative margins"),
            };
            priced(&mut r, units, budget, v).expect("well-formed draw")
        })
        .collect()
}

/// Sub-additive explicit tables with at most `EXPLICIT_GRID_LIMIT` entries.
pub fn explicit_corpus(seed: u64, count: usize) -> Result<Vec<Instance>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let m = r.gen_range(2..=4usize);
        let mut caps: Vec<u32> = (0..m).map(|_| r.gen_range(1..=4)).collect();
        caps.shuffle(&mut r);
        if grid_size(&caps) > EXPLICIT_GRID_LIMIT {
            continue;
        }
        let budget = int(r.gen_range(4..=24));
        let v = explicit_subadditive(&mut r, &caps)?;
        out.push(priced(&mut r, caps, budget, v)?);
    }
    Ok(out)
}

//! Non-strategic benchmarks: exact budget-constrained optima and the
//! single-seller family used to bracket measured ratios.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{check_len, Allocation, Instance, Seller};
use crate::rational::{affordable_units, common_denominator, from_u32, int, Rational};
use crate::valuation::{check_grid, for_each_allocation, Valuation, ENUMERATION_LIMIT};

/// Budget-feasible optimum `argmax V(A)` s.t. `sum a_i c_i <= B`, with the
/// lexicographically smallest maximizer.
pub fn optimal_allocation(inst: &Instance) -> Result<(Allocation, Rational)> {
    optimal_with_caps(inst.valuation(), &inst.units(), &inst.costs(), inst.budget())
}

/// Optimum over `a <= caps`; a zero cap excludes that seller.
pub fn optimal_with_caps(
    valuation: &Valuation,
    caps: &[u32],
    costs: &[Rational],
    budget: &Rational,
) -> Result<(Allocation, Rational)> {
    check_len(caps.len(), costs.len())?;
    // units beyond floor(B / c_i) can never be part of a feasible allocation
    let caps: Vec<u32> = caps
        .iter()
        .zip(costs)
        .map(|(&n, c)| affordable_units(budget, c, n))
        .collect();
    match valuation.margins_for(&caps) {
        Some(margins) => knapsack_dp(&margins, costs, budget),
        None => optimal_by_enumeration(valuation, &caps, costs, budget),
    }
}

/// Exhaustive optimum; the reference the dynamic program is tested against.
pub fn optimal_by_enumeration(
    valuation: &Valuation,
    caps: &[u32],
    costs: &[Rational],
    budget: &Rational,
) -> Result<(Allocation, Rational)> {
    check_len(caps.len(), costs.len())?;
    check_grid(caps)?;
    let mut best: Option<(Rational, Vec<u32>)> = None;
    let mut err = None;
    for_each_allocation(caps, |a| {
        if err.is_some() {
            return;
        }
        let spent: Rational = a.iter().zip(costs).map(|(&k, c)| from_u32(k) * c).sum();
        if &spent > budget {
            return;
        }
        match valuation.value(a) {
            Ok(v) => {
                if best.as_ref().map_or(true, |(b, _)| &v > b) {
                    best = Some((v, a.to_vec()));
                }
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let (value, counts) = best.expect("the empty allocation is always feasible");
    Ok((Allocation::new(counts), value))
}

/// Grouped knapsack over items with integer weights `c_i * L`, where `L`
/// clears every denominator.
fn knapsack_dp(
    margins: &[Vec<Rational>],
    costs: &[Rational],
    budget: &Rational,
) -> Result<(Allocation, Rational)> {
    let m = margins.len();
    let scale = common_denominator(costs.iter().chain(std::iter::once(budget)));
    let scale = Rational::from_integer(scale);
    let to_int = |q: &Rational| -> BigInt { (q * &scale).to_integer() };
    let cap_big = to_int(budget);
    let weights_big: Vec<BigInt> = costs.iter().map(to_int).collect();
    let states: u128 = margins.iter().map(|r| r.len() as u128 + 1).sum::<u128>()
        * (cap_big.to_u128().unwrap_or(u128::MAX).saturating_add(1));
    let capacity = match cap_big.to_usize() {
        Some(c) if states <= ENUMERATION_LIMIT * 10 => c,
        _ => {
            return Err(Error::SearchSpaceTooLarge {
                size: states,
                limit: ENUMERATION_LIMIT * 10,
            })
        }
    };
    // every weight is at most the capacity once caps are affordable
    let weights: Vec<usize> = weights_big
        .iter()
        .zip(margins)
        .map(|(w, row)| {
            if row.is_empty() {
                0
            } else {
                w.to_usize().unwrap_or(usize::MAX)
            }
        })
        .collect();
    let prefix: Vec<Vec<Rational>> = margins
        .iter()
        .map(|row| {
            let mut acc = vec![Rational::zero()];
            for v in row {
                let next = acc.last().unwrap() + v;
                acc.push(next);
            }
            acc
        })
        .collect();

    // best[i][w]: optimum over items i.. with capacity w
    let mut best = vec![vec![Rational::zero(); capacity + 1]; m + 1];
    for i in (0..m).rev() {
        for w in 0..=capacity {
            let mut top = best[i + 1][w].clone();
            for a in 1..prefix[i].len() {
                let used = weights[i].saturating_mul(a);
                if used > w {
                    break;
                }
                let cand = &prefix[i][a] + &best[i + 1][w - used];
                if cand > top {
                    top = cand;
                }
            }
            best[i][w] = top;
        }
    }

    let mut counts = vec![0u32; m];
    let mut w = capacity;
    for i in 0..m {
        let target = &best[i][w];
        for a in 0..prefix[i].len() {
            let used = weights[i].saturating_mul(a);
            if used > w {
                break;
            }
            if &(&prefix[i][a] + &best[i + 1][w - used]) == target {
                counts[i] = a as u32;
                w -= used;
                break;
            }
        }
    }
    let value = best[0][capacity].clone();
    Ok((Allocation::new(counts), value))
}

/// The optimal single-item allocation `(i**, lambda**, V(lambda** e_i**))`.
pub fn optimal_single_item(inst: &Instance) -> Result<(usize, u32, Rational)> {
    single_item_at(inst.valuation(), &inst.units(), &inst.costs(), inst.budget())
}

/// Single-item optimum for an arbitrary cost profile. Zero costs count as an
/// unbounded floor, so such a seller offers all of its units.
pub fn single_item_at(
    valuation: &Valuation,
    units: &[u32],
    costs: &[Rational],
    budget: &Rational,
) -> Result<(usize, u32, Rational)> {
    check_len(units.len(), costs.len())?;
    let m = units.len();
    let mut best: Option<(usize, u32, Rational)> = None;
    for i in 0..m {
        let count = affordable_units(budget, &costs[i], units[i]);
        let v = valuation.single_item_value(m, i, count)?;
        if best.as_ref().map_or(true, |(_, _, b)| &v > b) {
            best = Some((i, count, v));
        }
    }
    best.ok_or_else(|| Error::InvalidInstance("no sellers".into()))
}

/// One seller with `n` units of value 1 each, priced at `B / k`.
pub fn adversarial_single_seller(n: u32, budget: Rational, k: u32) -> Result<Instance> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::OutOfRange(format!(
            "need 1 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    if !budget.is_positive() {
        return Err(Error::InvalidInstance("budget must be positive".into()));
    }
    let cost = &budget / from_u32(k);
    Instance::new(
        vec![Seller::new(n, cost)],
        budget,
        Valuation::bounded_knapsack(vec![int(1)])?,
    )
}

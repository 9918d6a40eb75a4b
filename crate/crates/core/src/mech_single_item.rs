//! The best-single-seller mechanism: buy as many units as the budget allows
//! from one seller, paying harmonic-style unit thresholds.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{check_len, Allocation, Instance, Outcome};
use crate::rational::{affordable_units, from_u32, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OneBranch {
    Fire,
    Skip,
}

impl fmt::Display for OneBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OneBranch::Fire => "one:fire",
            OneBranch::Skip => "one:skip",
        })
    }
}

impl FromStr for OneBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one:fire" | "fire" => Ok(OneBranch::Fire),
            "one:skip" | "skip" => Ok(OneBranch::Skip),
            _ => Err(Error::InvalidScenario(s.to_string())),
        }
    }
}

/// Everything the mechanism fixes from one bid profile.
#[derive(Clone, Debug, PartialEq)]
pub struct OneLottery {
    pub p_fire: f64,
    pub winner: usize,
    pub count: u32,
    /// Smallest `k` for which the winner stays first at cost `B / k`; 0 when
    /// nothing can be bought.
    pub crossover: u32,
    pub thresholds: Vec<Rational>,
}

impl OneLottery {
    pub fn payment(&self) -> Rational {
        self.thresholds.iter().sum()
    }
}

/// `1 / (1 + ln n)`.
pub fn fire_probability(n: u32) -> f64 {
    1.0 / (1.0 + (n as f64).ln())
}

/// Index of the first seller in value-decreasing order, lowest index on ties.
fn first(values: &[Rational]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

pub fn plan_m_one(inst: &Instance, bids: &[Rational]) -> Result<OneLottery> {
    let m = inst.num_sellers();
    check_len(m, bids.len())?;
    let budget = inst.budget();
    let v = inst.valuation();
    let mut values = Vec::with_capacity(m);
    for (i, s) in inst.sellers().iter().enumerate() {
        values.push(v.single_item_value(m, i, affordable_units(budget, &bids[i], s.units))?);
    }
    let winner = first(&values);
    let units = inst.sellers()[winner].units;
    let count = affordable_units(budget, &bids[winner], units);
    let p_fire = fire_probability(inst.total_units());
    if count == 0 {
        return Ok(OneLottery {
            p_fire,
            winner,
            count,
            crossover: 0,
            thresholds: Vec::new(),
        });
    }

    let mut probe = values.clone();
    let mut stays_first = |k: u32| -> Result<bool> {
        probe[winner] = v.single_item_value(m, winner, k.min(units))?;
        Ok(first(&probe) == winner)
    };
    assert!(
        stays_first(count)?,
        "the winner must stay first at cost B / lambda"
    );
    let mut crossover = count;
    for k in 1..count {
        if stays_first(k)? {
            crossover = k;
            break;
        }
    }
    let thresholds = (1..=count).map(|l| budget / from_u32(l.max(crossover))).collect();
    Ok(OneLottery {
        p_fire,
        winner,
        count,
        crossover,
        thresholds,
    })
}

pub fn run_m_one(inst: &Instance, bids: &[Rational], branch: OneBranch) -> Result<Outcome> {
    let m = inst.num_sellers();
    check_len(m, bids.len())?;
    if branch == OneBranch::Skip {
        return Ok(Outcome::empty(m));
    }
    let plan = plan_m_one(inst, bids)?;
    if plan.count == 0 {
        return Ok(Outcome::empty(m));
    }
    let mut payments = vec![Rational::zero(); m];
    payments[plan.winner] = plan.payment();
    Outcome::new(Allocation::single(m, plan.winner, plan.count), payments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Seller;
    use crate::rational::{harmonic, int};
    use crate::valuation::Valuation;

    #[test]
    fn two_seller_plan() {
        let inst = Instance::new(
            vec![Seller::new(3, int(1)), Seller::new(4, int(1))],
            int(3),
            Valuation::concave_additive(vec![
                vec![int(5), int(1), int(1)],
                vec![int(4), int(3), int(2), int(1)],
            ])
            .unwrap(),
        )
        .unwrap();
        let plan = plan_m_one(&inst, &inst.costs()).unwrap();
        assert_eq!((plan.winner, plan.count, plan.crossover), (1, 3, 3));
        assert_eq!(plan.thresholds, vec![int(1), int(1), int(1)]);
    }

    fn single_seller(b: i64) -> Instance {
        Instance::new(
            vec![Seller::new(5, int(b) / int(5))],
            int(b),
            Valuation::bounded_knapsack(vec![int(1)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_seller_harmonic_payment() {
        let inst = single_seller(10);
        let plan = plan_m_one(&inst, &inst.costs()).unwrap();
        assert_eq!((plan.winner, plan.count, plan.crossover), (0, 5, 1));
        let expected: Vec<Rational> = (1..=5).map(|l| int(10) / int(l)).collect();
        assert_eq!(plan.thresholds, expected);
        let out = run_m_one(&inst, &inst.costs(), OneBranch::Fire).unwrap();
        assert_eq!(out.payments()[0], int(10) * harmonic(5));
        assert!(crate::rational::to_f64(&harmonic(5)) <= 1.0 + 5f64.ln());
    }

    #[test]
    fn skip_and_empty_plans() {
        let inst = single_seller(10);
        assert_eq!(
            run_m_one(&inst, &inst.costs(), OneBranch::Skip).unwrap(),
            Outcome::empty(1)
        );
        let pricey = Instance::new(
            vec![Seller::new(2, int(5)), Seller::new(2, int(7))],
            int(3),
            Valuation::bounded_knapsack(vec![int(1), int(1)]).unwrap(),
        )
        .unwrap();
        let plan = plan_m_one(&pricey, &pricey.costs()).unwrap();
        assert_eq!(plan.count, 0);
        assert!(plan.thresholds.is_empty());
        assert_eq!(
            run_m_one(&pricey, &pricey.costs(), OneBranch::Fire).unwrap(),
            Outcome::empty(2)
        );
    }

    #[test]
    fn certain_fire_with_one_unit() {
        assert_eq!(fire_probability(1), 1.0);
    }

    #[test]
    fn branch_names() {
        assert_eq!("fire".parse::<OneBranch>().unwrap(), OneBranch::Fire);
        assert_eq!("one:skip".parse::<OneBranch>().unwrap(), OneBranch::Skip);
        assert_eq!(OneBranch::Fire.to_string(), "one:fire");
        assert!("one:maybe".parse::<OneBranch>().is_err());
    }
}

//! Procurement games: sellers, allocations, outcomes and seller utilities.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{from_u32, Rational};
use crate::valuation::Valuation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seller {
    pub units: u32,
    pub cost: Rational,
}

impl Seller {
    pub fn new(units: u32, cost: Rational) -> Self {
        Seller { units, cost }
    }
}

/// A complete procurement game: sellers with unit counts and true per-unit
/// costs, the buyer's budget and valuation.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    sellers: Vec<Seller>,
    budget: Rational,
    valuation: Valuation,
}

impl Instance {
    pub fn new(sellers: Vec<Seller>, budget: Rational, valuation: Valuation) -> Result<Self> {
        if sellers.is_empty() {
            return Err(Error::InvalidInstance("at least one seller is required".into()));
        }
        for (i, s) in sellers.iter().enumerate() {
            if s.units == 0 {
                return Err(Error::InvalidInstance(format!("seller {i} has no units")));
            }
            if s.cost.is_negative() {
                return Err(Error::InvalidInstance(format!("seller {i} has a negative cost")));
            }
        }
        if !budget.is_positive() {
            return Err(Error::InvalidInstance("budget must be positive".into()));
        }
        let units: Vec<u32> = sellers.iter().map(|s| s.units).collect();
        valuation.check_dims(&units)?;
        Ok(Instance {
            sellers,
            budget,
            valuation,
        })
    }

    pub fn sellers(&self) -> &[Seller] {
        &self.sellers
    }

    pub fn num_sellers(&self) -> usize {
        self.sellers.len()
    }

    /// Total number of units `n` over all sellers.
    pub fn total_units(&self) -> u32 {
        self.sellers.iter().map(|s| s.units).sum()
    }

    pub fn units(&self) -> Vec<u32> {
        self.sellers.iter().map(|s| s.units).collect()
    }

    pub fn costs(&self) -> Vec<Rational> {
        self.sellers.iter().map(|s| s.cost.clone()).collect()
    }

    pub fn budget(&self) -> &Rational {
        &self.budget
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    /// Same game with the true costs replaced.
    pub fn with_costs(&self, costs: &[Rational]) -> Result<Instance> {
        check_len(self.num_sellers(), costs.len())?;
        let sellers = self
            .sellers
            .iter()
            .zip(costs)
            .map(|(s, c)| Seller::new(s.units, c.clone()))
            .collect();
        Instance::new(sellers, self.budget.clone(), self.valuation.clone())
    }

    /// Builds an allocation after checking `a_i <= n_i`.
    pub fn allocation(&self, counts: Vec<u32>) -> Result<Allocation> {
        let a = Allocation::new(counts);
        self.check_allocation(&a)?;
        Ok(a)
    }

    pub fn check_allocation(&self, a: &Allocation) -> Result<()> {
        check_len(self.num_sellers(), a.len())?;
        for (item, (&count, s)) in a.counts().iter().zip(&self.sellers).enumerate() {
            if count > s.units {
                return Err(Error::AllocationOutOfRange {
                    item,
                    count,
                    cap: s.units,
                });
            }
        }
        Ok(())
    }

    pub fn value(&self, a: &Allocation) -> Result<Rational> {
        self.check_allocation(a)?;
        self.valuation.value(a.counts())
    }

    /// Total true cost `sum_i a_i c_i` of an allocation.
    pub fn cost_of(&self, a: &Allocation) -> Rational {
        a.counts()
            .iter()
            .zip(&self.sellers)
            .map(|(&k, s)| from_u32(k) * &s.cost)
            .sum()
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

/// Units bought from each seller.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation(Vec<u32>);

impl Allocation {
    pub fn new(counts: Vec<u32>) -> Self {
        Allocation(counts)
    }

    /// `A_bot`, nothing bought.
    pub fn zero(m: usize) -> Self {
        Allocation(vec![0; m])
    }

    /// `count` units of item `i` and nothing else.
    pub fn single(m: usize, i: usize, count: u32) -> Self {
        let mut v = vec![0; m];
        v[i] = count;
        Allocation(v)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn into_counts(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Componentwise `<=`.
    pub fn le(&self, other: &Allocation) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// Item-wise max.
pub fn join(a: &Allocation, b: &Allocation) -> Result<Allocation> {
    check_len(a.len(), b.len())?;
    Ok(Allocation(a.0.iter().zip(&b.0).map(|(x, y)| *x.max(y)).collect()))
}

/// Item-wise min.
pub fn meet(a: &Allocation, b: &Allocation) -> Result<Allocation> {
    check_len(a.len(), b.len())?;
    Ok(Allocation(a.0.iter().zip(&b.0).map(|(x, y)| *x.min(y)).collect()))
}

/// An allocation together with a payment profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    allocation: Allocation,
    payments: Vec<Rational>,
}

impl Outcome {
    pub fn new(allocation: Allocation, payments: Vec<Rational>) -> Result<Self> {
        check_len(allocation.len(), payments.len())?;
        for (i, (p, &a)) in payments.iter().zip(allocation.counts()).enumerate() {
            if p.is_negative() {
                return Err(Error::InvalidInstance(format!("negative payment to seller {i}")));
            }
            if a == 0 && !p.is_zero() {
                return Err(Error::InvalidInstance(format!(
                    "seller {i} is paid without selling"
                )));
            }
        }
        Ok(Outcome { allocation, payments })
    }

    pub fn empty(m: usize) -> Self {
        Outcome {
            allocation: Allocation::zero(m),
            payments: vec![Rational::zero(); m],
        }
    }

    pub fn allocation(&self) -> &Allocation {
        &self.allocation
    }

    pub fn payments(&self) -> &[Rational] {
        &self.payments
    }

    pub fn total_payment(&self) -> Rational {
        self.payments.iter().sum()
    }
}

/// `P_i - a_i c_i`.
pub fn utility(o: &Outcome, true_costs: &[Rational], i: usize) -> Result<Rational> {
    let m = o.allocation.len();
    if i >= m {
        return Err(Error::SellerOutOfRange { index: i, sellers: m });
    }
    check_len(m, true_costs.len())?;
    Ok(&o.payments[i] - from_u32(o.allocation.0[i]) * &true_costs[i])
}

pub fn is_budget_feasible(o: &Outcome, budget: &Rational) -> bool {
    &o.total_payment() <= budget
}

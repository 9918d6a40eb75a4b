//! Scenario enumeration and the property harness.
//!
//! Every randomized mechanism here is a lottery over deterministic branches.
//! Expectations are exact probability-weighted sums over those branches, and
//! truthfulness is checked branch by branch against a deviation grid that
//! contains every breakpoint of the allocation rule.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mech_additive::{self, run_m_add, run_m_sym, AddBranch, AddLottery};
use crate::mech_single_item::{fire_probability, plan_m_one, run_m_one, OneBranch};
use crate::mech_subadditive::{
    phi, run_m_rand_with, trace_m_rand_with, MaxMemo, Partition, MAX_PARTITION_SELLERS,
};
use crate::model::{check_len, utility, Allocation, Instance, Outcome};
use crate::oracles::{optimal_allocation, optimal_single_item, optimal_with_caps};
use crate::rational::{from_u32, to_f64, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MechanismId {
    MAdd,
    MSym,
    MOne,
    MRand,
    MSub,
    /// Self-test fixture: the greedy mechanism overpaying one unit of money
    /// per sold unit.
    MAddMutated,
}

impl MechanismId {
    pub const ALL: [MechanismId; 5] = [
        MechanismId::MAdd,
        MechanismId::MSym,
        MechanismId::MOne,
        MechanismId::MRand,
        MechanismId::MSub,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MechanismId::MAdd => "m_add",
            MechanismId::MSym => "m_sym",
            MechanismId::MOne => "m_one",
            MechanismId::MRand => "m_rand",
            MechanismId::MSub => "m_sub",
            MechanismId::MAddMutated => "m_add_mutated",
        }
    }

    fn uses_partitions(self) -> bool {
        matches!(self, MechanismId::MRand | MechanismId::MSub)
    }
}

impl fmt::Display for MechanismId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = MechanismId::ALL.into_iter().chain([MechanismId::MAddMutated]);
        for id in all {
            if id.name() == s || id.name().replace('_', "-") == s {
                return Ok(id);
            }
        }
        Err(Error::UnknownMechanism(s.to_string()))
    }
}

/// One deterministic branch of some mechanism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Add(AddBranch),
    One(OneBranch),
    Rand(Partition),
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Add(b) => b.fmt(f),
            Branch::One(b) => b.fmt(f),
            Branch::Rand(p) => p.fmt(f),
        }
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.starts_with("rand:") {
            return s.parse().map(Branch::Rand);
        }
        if let Ok(b) = s.parse() {
            return Ok(Branch::Add(b));
        }
        s.parse().map(Branch::One)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub mechanism: MechanismId,
    pub branch: Branch,
    pub probability: f64,
}

pub fn enumerate_scenarios(mech: MechanismId, inst: &Instance) -> Result<Vec<Scenario>> {
    let m = inst.num_sellers();
    let n = inst.total_units();
    let scenario = |branch, probability| Scenario {
        mechanism: mech,
        branch,
        probability,
    };
    let partitions = |weight: f64| -> Result<Vec<Scenario>> {
        if m > MAX_PARTITION_SELLERS {
            return Err(Error::SearchSpaceTooLarge {
                size: 1u128 << m.min(127),
                limit: 1u128 << MAX_PARTITION_SELLERS,
            });
        }
        let p = weight / (1u64 << m) as f64;
        Ok((0..1u64 << m)
            .map(|mask| scenario(Branch::Rand(Partition(mask)), p))
            .collect())
    };
    let one = |weight: f64| {
        let p = fire_probability(n);
        vec![
            scenario(Branch::One(OneBranch::Fire), weight * p),
            scenario(Branch::One(OneBranch::Skip), weight * (1.0 - p)),
        ]
    };
    Ok(match mech {
        MechanismId::MAdd | MechanismId::MSym | MechanismId::MAddMutated => {
            let lottery = AddLottery::new(inst)?;
            AddBranch::ALL
                .into_iter()
                .map(|b| scenario(Branch::Add(b), lottery.probability(b)))
                .collect()
        }
        MechanismId::MOne => one(1.0),
        MechanismId::MRand => partitions(1.0)?,
        MechanismId::MSub => {
            let mut all = partitions(0.5)?;
            all.extend(one(0.5));
            all
        }
    })
}

/// Runs branches of one mechanism on one instance, sharing memoized
/// subroutine results between calls.
pub struct Runner<'a> {
    mech: MechanismId,
    inst: &'a Instance,
    memo: MaxMemo,
}

impl<'a> Runner<'a> {
    pub fn new(mech: MechanismId, inst: &'a Instance) -> Self {
        Runner {
            mech,
            inst,
            memo: MaxMemo::new(),
        }
    }

    pub fn run(&mut self, bids: &[Rational], branch: Branch) -> Result<Outcome> {
        let inst = self.inst;
        let wrong = || {
            Err(Error::InvalidScenario(format!(
                "{branch} is not a branch of {}",
                self.mech
            )))
        };
        match (self.mech, branch) {
            (MechanismId::MAdd, Branch::Add(b)) => run_m_add(inst, bids, b),
            (MechanismId::MAddMutated, Branch::Add(b)) => {
                let out = run_m_add(inst, bids, b)?;
                if b != AddBranch::Greedy {
                    return Ok(out);
                }
                let payments = out
                    .payments()
                    .iter()
                    .zip(out.allocation().counts())
                    .map(|(p, &a)| p + from_u32(a))
                    .collect();
                Outcome::new(out.allocation().clone(), payments)
            }
            (MechanismId::MSym, Branch::Add(b)) => run_m_sym(inst, bids, b),
            (MechanismId::MOne | MechanismId::MSub, Branch::One(b)) => run_m_one(inst, bids, b),
            (MechanismId::MRand | MechanismId::MSub, Branch::Rand(p)) => {
                run_m_rand_with(inst, bids, p, &mut self.memo)
            }
            _ => wrong(),
        }
    }
}

/// Draws one scenario of `mech` from a seeded generator.
pub fn sample_scenario(mech: MechanismId, inst: &Instance, seed: u64) -> Result<Scenario> {
    let scenarios = enumerate_scenarios(mech, inst)?;
    let draw: f64 = crate::generate::rng(seed).gen();
    let mut acc = 0.0;
    for s in &scenarios {
        acc += s.probability;
        if draw < acc {
            return Ok(s.clone());
        }
    }
    // rounding can leave the total a hair below 1
    let last = scenarios
        .iter()
        .rev()
        .find(|s| s.probability > 0.0)
        .ok_or_else(|| Error::InvalidScenario("no scenario has positive probability".into()))?;
    Ok(last.clone())
}

/// Checks that `branch` is one of `mech`'s scenarios on `inst`.
pub fn scenario_of(mech: MechanismId, inst: &Instance, branch: Branch) -> Result<Scenario> {
    if let Branch::Rand(p) = branch {
        p.check(inst.num_sellers())?;
    }
    enumerate_scenarios(mech, inst)?
        .into_iter()
        .find(|s| s.branch == branch)
        .ok_or_else(|| Error::InvalidScenario(format!("{branch} is not a scenario of {mech}")))
}

pub fn run_branch(mech: MechanismId, inst: &Instance, bids: &[Rational], branch: Branch) -> Result<Outcome> {
    Runner::new(mech, inst).run(bids, branch)
}

/// A replayable counterexample.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub scenario: Branch,
    /// Bid profile; the entry of `seller` is that seller's true cost.
    pub bids: Vec<Rational>,
    pub seller: Option<usize>,
    pub deviation: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub witness: Option<Witness>,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String, witness: Option<Witness>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
            witness,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measured {
    pub expected_value: f64,
    /// The benchmark the ratio is taken against.
    pub optimum: Rational,
    pub ratio: f64,
    pub bound: Option<f64>,
    pub asserted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub digest: String,
    pub mechanism: MechanismId,
    pub checks: Vec<Check>,
    pub measured: Option<Measured>,
    /// Acceptance factor used by the sampling mechanism, when it applies.
    pub phi: Option<f64>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DstOptions {
    /// Number of uniform grid points on `(0, B]`.
    pub grid: u32,
    /// Also vary the opponents' bids on instances with at most two sellers.
    pub strict: bool,
}

impl Default for DstOptions {
    fn default() -> Self {
        DstOptions {
            grid: 64,
            strict: false,
        }
    }
}

fn ln_bound(n: u32) -> f64 {
    1.0 + (n as f64).ln()
}

/// Bids seller `i` is tested with, given the others' bids in `profile`.
pub fn deviation_grid(
    mech: MechanismId,
    inst: &Instance,
    profile: &[Rational],
    i: usize,
    grid: u32,
) -> Result<Vec<Rational>> {
    let budget = inst.budget();
    let n = inst.total_units();
    let mut bps: Vec<Rational> = (1..=n).map(|l| budget / from_u32(l)).collect();
    match mech {
        MechanismId::MAdd | MechanismId::MAddMutated => {
            bps.extend(mech_additive::breakpoints(inst, profile, i)?);
        }
        MechanismId::MSym => bps.extend(mech_additive::sym_breakpoints(inst, profile, i)),
        MechanismId::MOne | MechanismId::MRand | MechanismId::MSub => {}
    }
    let mut out = BTreeSet::new();
    out.insert(profile[i].clone());
    out.insert(Rational::zero());
    for t in 1..=grid {
        out.insert(budget * from_u32(t) / from_u32(grid));
    }
    let million = from_u32(1_000_000);
    for bp in bps {
        if bp < Rational::zero() {
            continue;
        }
        let delta = &bp / &million;
        out.insert(&bp + &delta);
        out.insert(&bp - &delta);
        out.insert(bp);
    }
    Ok(out.into_iter().collect())
}

fn opponent_profiles(inst: &Instance, i: usize, strict: bool) -> Vec<Vec<Rational>> {
    let truth = inst.costs();
    let m = inst.num_sellers();
    if !strict || m > 2 || m == 1 {
        return vec![truth];
    }
    let other = 1 - i;
    let mut values = vec![truth[other].clone()];
    for t in 1..=8u32 {
        values.push(inst.budget() * from_u32(t) / from_u32(8));
    }
    values.sort();
    values.dedup();
    values
        .into_iter()
        .map(|b| {
            let mut p = truth.clone();
            p[other] = b;
            p
        })
        .collect()
}

/// Unilateral-deviation truthfulness and individual rationality, per branch.
pub fn check_dst(mech: MechanismId, inst: &Instance, opts: &DstOptions) -> Result<Vec<Check>> {
    let scenarios = enumerate_scenarios(mech, inst)?;
    let mut runner = Runner::new(mech, inst);
    let mut tested = 0u64;
    let mut violations = 0u64;
    let mut ir_violations = 0u64;
    let mut dst_witness = None;
    let mut ir_witness = None;
    for s in &scenarios {
        for i in 0..inst.num_sellers() {
            for profile in opponent_profiles(inst, i, opts.strict) {
                let truthful = runner.run(&profile, s.branch)?;
                let u_true = utility(&truthful, &profile, i)?;
                if u_true < Rational::zero() {
                    ir_violations += 1;
                    ir_witness.get_or_insert(Witness {
                        scenario: s.branch,
                        bids: profile.clone(),
                        seller: Some(i),
                        deviation: None,
                    });
                }
                let mut bids = profile.clone();
                for b in deviation_grid(mech, inst, &profile, i, opts.grid)? {
                    if b == profile[i] {
                        continue;
                    }
                    bids[i] = b.clone();
                    let out = runner.run(&bids, s.branch)?;
                    tested += 1;
                    if utility(&out, &profile, i)? > u_true {
                        violations += 1;
                        dst_witness.get_or_insert(Witness {
                            scenario: s.branch,
                            bids: profile.clone(),
                            seller: Some(i),
                            deviation: Some(b),
                        });
                    }
                }
            }
        }
    }
    Ok(vec![
        Check::new(
            "dst",
            violations == 0,
            format!(
                "{tested} deviations over {} scenarios, {violations} profitable",
                scenarios.len()
            ),
            dst_witness,
        ),
        Check::new(
            "ir",
            ir_violations == 0,
            format!("{ir_violations} negative truthful utilities"),
            ir_witness,
        ),
    ])
}

/// Proven payment ceiling of one branch, if the branch has one.
#[derive(Clone, Debug, PartialEq)]
pub enum BranchBound {
    /// `total <= limit` exactly.
    Exact(Rational),
    /// `total <= limit + 1e-9` in floating point.
    Float(f64),
    None,
}

pub fn branch_bound(mech: MechanismId, inst: &Instance, branch: Branch) -> BranchBound {
    let b = inst.budget();
    let harmonic = ln_bound(inst.total_units()) * to_f64(b);
    match (mech, branch) {
        (MechanismId::MAddMutated, _) => BranchBound::None,
        (_, Branch::Add(AddBranch::Greedy)) => BranchBound::Float(harmonic),
        (_, Branch::Add(AddBranch::Star)) => BranchBound::Exact(b.clone()),
        (_, Branch::Add(AddBranch::Bot)) | (_, Branch::One(OneBranch::Skip)) => {
            BranchBound::Exact(Rational::zero())
        }
        (_, Branch::One(OneBranch::Fire)) => BranchBound::Float(harmonic),
        (_, Branch::Rand(_)) => BranchBound::Exact(b.clone()),
    }
}

fn within(total: &Rational, bound: &BranchBound) -> bool {
    match bound {
        BranchBound::Exact(limit) => total <= limit,
        BranchBound::Float(limit) => to_f64(total) <= limit + 1e-9,
        BranchBound::None => true,
    }
}

/// Exact probability-weighted expected payment at truthful bids.
pub fn expected_payment(mech: MechanismId, inst: &Instance) -> Result<f64> {
    let costs = inst.costs();
    let mut runner = Runner::new(mech, inst);
    let mut total = 0.0;
    for s in enumerate_scenarios(mech, inst)? {
        total += s.probability * to_f64(&runner.run(&costs, s.branch)?.total_payment());
    }
    Ok(total)
}

/// Expected budget in expectation, plus the per-branch ceilings.
pub fn check_budget(mech: MechanismId, inst: &Instance) -> Result<Vec<Check>> {
    let costs = inst.costs();
    let mut runner = Runner::new(mech, inst);
    let mut expected = 0.0;
    let mut heaviest: Option<(f64, Branch)> = None;
    let mut branch_fail = None;
    let mut branch_fail_count = 0;
    let scenarios = enumerate_scenarios(mech, inst)?;
    for s in &scenarios {
        let total = runner.run(&costs, s.branch)?.total_payment();
        let weighted = s.probability * to_f64(&total);
        expected += weighted;
        if heaviest.map_or(true, |(w, _)| weighted > w) {
            heaviest = Some((weighted, s.branch));
        }
        if !within(&total, &branch_bound(mech, inst, s.branch)) {
            branch_fail_count += 1;
            branch_fail.get_or_insert(Witness {
                scenario: s.branch,
                bids: costs.clone(),
                seller: None,
                deviation: None,
            });
        }
    }
    let budget = to_f64(inst.budget());
    let ok = expected <= budget + 1e-9;
    let witness = (!ok).then(|| Witness {
        scenario: heaviest.expect("at least one scenario").1,
        bids: costs.clone(),
        seller: None,
        deviation: None,
    });
    Ok(vec![
        Check::new(
            "budget",
            ok,
            format!("expected payment {expected:.9} against budget {budget}"),
            witness,
        ),
        Check::new(
            "branch-budget",
            branch_fail_count == 0,
            format!(
                "{branch_fail_count} of {} branches above their ceiling",
                scenarios.len()
            ),
            branch_fail,
        ),
    ])
}

/// Exact expected value at truthful bids.
pub fn expected_value(mech: MechanismId, inst: &Instance) -> Result<f64> {
    let costs = inst.costs();
    let mut runner = Runner::new(mech, inst);
    let mut total = 0.0;
    for s in enumerate_scenarios(mech, inst)? {
        let out = runner.run(&costs, s.branch)?;
        total += s.probability * to_f64(&inst.value(out.allocation())?);
    }
    Ok(total)
}

/// `512 (1 + ln n) / phi(n)`: the constant the sub-additive analysis chains to.
pub fn chain_constant(n: u32) -> f64 {
    512.0 * ln_bound(n) / phi(n)
}

fn ratio_of(optimum: f64, expected: f64) -> f64 {
    if optimum == 0.0 {
        1.0
    } else if expected == 0.0 {
        f64::INFINITY
    } else {
        optimum / expected
    }
}

/// Measured approximation ratio and the check against the proven bound.
pub fn measure_ratio(mech: MechanismId, inst: &Instance) -> Result<(Check, Measured)> {
    let n = inst.total_units();
    let expected = expected_value(mech, inst)?;
    let witness = || Witness {
        scenario: Branch::Add(AddBranch::Greedy),
        bids: inst.costs(),
        seller: None,
        deviation: None,
    };
    let measured = match mech {
        MechanismId::MOne => {
            let (_, _, single) = optimal_single_item(inst)?;
            let target = to_f64(&single) / ln_bound(n);
            let ok = (expected - target).abs() <= 1e-9 * target.abs().max(1.0);
            let m = Measured {
                expected_value: expected,
                ratio: ratio_of(to_f64(&single), expected),
                optimum: single,
                bound: Some(ln_bound(n)),
                asserted: true,
            };
            let detail = format!("expected {expected:.9}, single-item value over (1 + ln n) {target:.9}");
            let w = (!ok).then(|| Witness {
                scenario: Branch::One(OneBranch::Fire),
                ..witness()
            });
            return Ok((Check::new("ratio", ok, detail, w), m));
        }
        MechanismId::MAdd | MechanismId::MSym | MechanismId::MAddMutated => {
            let (_, opt) = optimal_allocation(inst)?;
            let bound = 4.0 * ln_bound(n);
            Measured {
                expected_value: expected,
                ratio: ratio_of(to_f64(&opt), expected),
                optimum: opt,
                bound: Some(bound),
                asserted: true,
            }
        }
        MechanismId::MRand | MechanismId::MSub => {
            let (_, opt) = optimal_allocation(inst)?;
            Measured {
                expected_value: expected,
                ratio: ratio_of(to_f64(&opt), expected),
                optimum: opt,
                bound: (mech == MechanismId::MSub).then(|| chain_constant(n)),
                asserted: false,
            }
        }
    };
    let ok = !measured.asserted
        || measured.ratio <= measured.bound.expect("asserted bounds exist") * (1.0 + 1e-12);
    let detail = match measured.bound {
        Some(b) => format!("ratio {:.6} against bound {b:.6}", measured.ratio),
        None => format!("ratio {:.6}, no bound", measured.ratio),
    };
    let w = (!ok).then(witness);
    Ok((Check::new("ratio", ok, detail, w), measured))
}

/// How often, over all partitions, the better group holds at least an
/// eighth of the optimum while not beating the other group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionEvent {
    /// Partitions where `V(opt over T') >= V(opt over T) >= V(A*) / 8`.
    pub hits: Vec<Partition>,
    pub total: u64,
    /// Whether `V(lambda** e_i**) < V(A*) / 2`, the regime the frequency
    /// bound is stated for.
    pub regime: bool,
}

impl PartitionEvent {
    pub fn frequency(&self) -> Rational {
        Rational::new((self.hits.len() as u64).into(), self.total.into())
    }
}

pub fn partition_event(inst: &Instance) -> Result<PartitionEvent> {
    let m = inst.num_sellers();
    if m > MAX_PARTITION_SELLERS {
        return Err(Error::SearchSpaceTooLarge {
            size: 1u128 << m.min(127),
            limit: 1u128 << MAX_PARTITION_SELLERS,
        });
    }
    let units = inst.units();
    let costs = inst.costs();
    let (_, opt) = optimal_allocation(inst)?;
    let (_, _, single) = optimal_single_item(inst)?;
    let group_opt = |mask: u64| -> Result<Rational> {
        let caps: Vec<u32> = (0..m)
            .map(|i| if mask >> i & 1 == 1 { units[i] } else { 0 })
            .collect();
        Ok(optimal_with_caps(inst.valuation(), &caps, &costs, inst.budget())?.1)
    };
    let total = 1u64 << m;
    let values: Vec<Rational> = (0..total).map(group_opt).collect::<Result<_>>()?;
    let eighth = &opt / from_u32(8);
    let hits = (0..total)
        .filter(|&mask| {
            let t = &values[mask as usize];
            let rest = &values[(!mask & (total - 1)) as usize];
            rest >= t && t >= &eighth
        })
        .map(Partition)
        .collect();
    Ok(PartitionEvent {
        hits,
        total,
        regime: single * from_u32(2) < opt,
    })
}

/// The partition-event frequency check and, on every hit, the bound
/// `V(A) + V(lambda** e_i**) >= phi(n) v` for the sampling mechanism's
/// outcome `A` and sampled value `v`.
pub fn check_partition_chain(inst: &Instance) -> Result<Vec<Check>> {
    let event = partition_event(inst)?;
    let freq = event.frequency();
    let quarter = Rational::new(1.into(), 4.into());
    let ok = !event.regime || freq >= quarter;
    let costs = inst.costs();
    let witness = (!ok).then(|| Witness {
        scenario: Branch::Rand(Partition(0)),
        bids: costs.clone(),
        seller: None,
        deviation: None,
    });
    let freq_check = Check::new(
        "partition-event",
        ok,
        format!(
            "{} of {} partitions{}",
            event.hits.len(),
            event.total,
            if event.regime {
                ""
            } else {
                " (outside the single-item-light regime)"
            }
        ),
        witness,
    );

    let (_, _, single) = optimal_single_item(inst)?;
    let factor = phi(inst.total_units());
    let mut memo = MaxMemo::new();
    let mut failed = None;
    let mut fails = 0;
    for &p in &event.hits {
        let run = trace_m_rand_with(inst, &costs, p, &mut memo)?;
        let got = match &run.accepted {
            Some((_, x)) => inst.value(x)?,
            None => Rational::zero(),
        };
        let lhs = to_f64(&(got + &single));
        if lhs < factor * to_f64(&run.sampled_value) - 1e-12 {
            fails += 1;
            failed.get_or_insert(Witness {
                scenario: Branch::Rand(p),
                bids: costs.clone(),
                seller: None,
                deviation: None,
            });
        }
    }
    let chain = Check::new(
        "chain",
        fails == 0,
        format!("{fails} of {} event partitions below phi(n) v", event.hits.len()),
        failed,
    );
    Ok(vec![freq_check, chain])
}

/// Runs every harness check for one mechanism on one instance.
pub fn verify_instance(
    mech: MechanismId,
    inst: &Instance,
    opts: &DstOptions,
    digest: &str,
) -> Result<Report> {
    let mut checks = check_dst(mech, inst, opts)?;
    checks.extend(check_budget(mech, inst)?);
    let (ratio, measured) = measure_ratio(mech, inst)?;
    checks.push(ratio);
    if mech.uses_partitions() {
        checks.extend(check_partition_chain(inst)?);
    }
    Ok(Report {
        digest: digest.to_string(),
        mechanism: mech,
        checks,
        measured: Some(measured),
        phi: mech.uses_partitions().then(|| phi(inst.total_units())),
    })
}

/// Re-runs the computation behind a failed check and reports whether the
/// failure reproduces.
pub fn replay_witness(mech: MechanismId, inst: &Instance, check: &Check) -> Result<bool> {
    let w = check
        .witness
        .as_ref()
        .ok_or_else(|| Error::InvalidScenario(format!("check {} has no witness", check.name)))?;
    check_len(inst.num_sellers(), w.bids.len())?;
    let mut runner = Runner::new(mech, inst);
    match check.name.as_str() {
        "dst" => {
            let i = w
                .seller
                .ok_or_else(|| Error::InvalidScenario("missing seller".into()))?;
            let dev = w
                .deviation
                .clone()
                .ok_or_else(|| Error::InvalidScenario("missing deviation".into()))?;
            let truthful = runner.run(&w.bids, w.scenario)?;
            let mut bids = w.bids.clone();
            bids[i] = dev;
            let deviated = runner.run(&bids, w.scenario)?;
            Ok(utility(&deviated, &w.bids, i)? > utility(&truthful, &w.bids, i)?)
        }
        "ir" => {
            let i = w
                .seller
                .ok_or_else(|| Error::InvalidScenario("missing seller".into()))?;
            let out = runner.run(&w.bids, w.scenario)?;
            Ok(utility(&out, &w.bids, i)? < Rational::zero())
        }
        "branch-budget" => {
            let out = runner.run(&w.bids, w.scenario)?;
            Ok(!within(
                &out.total_payment(),
                &branch_bound(mech, inst, w.scenario),
            ))
        }
        "budget" => Ok(expected_payment(mech, inst)? > to_f64(inst.budget()) + 1e-9),
        "ratio" => Ok(!measure_ratio(mech, inst)?.0.passed),
        "partition-event" | "chain" => {
            let checks = check_partition_chain(inst)?;
            Ok(checks.iter().any(|c| c.name == check.name && !c.passed))
        }
        other => Err(Error::InvalidScenario(format!("unknown check {other}"))),
    }
}

/// One step of the marginal value-rate greedy.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalStep {
    pub before: Allocation,
    /// `V(i | A)` for every item still available and affordable.
    pub marginals: Vec<Option<Rational>>,
    pub chosen: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTrace {
    pub steps: Vec<MarginalStep>,
    pub allocation: Allocation,
    pub remaining_budget: Rational,
}

/// The proportional-rate greedy: repeatedly add one unit of the affordable
/// item with the largest `V(i | A) / c_i`, lowest index on ties, until no
/// unit fits the remaining budget.
pub fn greedy_marginal(inst: &Instance, bids: &[Rational]) -> Result<MarginalTrace> {
    let m = inst.num_sellers();
    check_len(m, bids.len())?;
    let units = inst.units();
    let v = inst.valuation();
    let mut counts = vec![0u32; m];
    let mut remaining = inst.budget().clone();
    let mut steps = Vec::new();
    loop {
        let base = v.value(&counts)?;
        let mut marginals = vec![None; m];
        let mut best: Option<(usize, Option<Rational>)> = None;
        for i in 0..m {
            if counts[i] >= units[i] || bids[i] > remaining {
                continue;
            }
            counts[i] += 1;
            let gain = v.value(&counts)? - &base;
            counts[i] -= 1;
            let rate = if bids[i].is_zero() {
                None
            } else {
                Some(&gain / &bids[i])
            };
            marginals[i] = Some(gain);
            let better = match (&best, &rate) {
                (None, _) => true,
                (Some((_, None)), _) => false,
                (Some((_, Some(_))), None) => true,
                (Some((_, Some(b))), Some(r)) => r > b,
            };
            if better {
                best = Some((i, rate));
            }
        }
        let Some((chosen, _)) = best else { break };
        steps.push(MarginalStep {
            before: Allocation::new(counts.clone()),
            marginals,
            chosen,
        });
        counts[chosen] += 1;
        remaining -= &bids[chosen];
    }
    Ok(MarginalTrace {
        steps,
        allocation: Allocation::new(counts),
        remaining_budget: remaining,
    })
}

/// Probabilities of a scenario list, summed.
pub fn total_probability(scenarios: &[Scenario]) -> f64 {
    scenarios.iter().map(|s| s.probability).sum()
}

/// Convenience for tests and tools: `B / l` for `l = 1..=n`.
pub fn budget_fractions(inst: &Instance) -> Vec<Rational> {
    (1..=inst.total_units())
        .map(|l| inst.budget() / from_u32(l))
        .collect()
}

/// The single-item plan's winner count times its cost is covered by the
/// summed thresholds.
pub fn single_item_ir(inst: &Instance) -> Result<bool> {
    let plan = plan_m_one(inst, &inst.costs())?;
    let cost = &inst.sellers()[plan.winner].cost;
    Ok(plan.payment() >= from_u32(plan.count) * cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Seller;
    use crate::oracles::adversarial_single_seller;
    use crate::rational::{int, ratio};
    use crate::valuation::Valuation;

    fn example() -> Instance {
        Instance::new(
            vec![Seller::new(2, int(2)), Seller::new(1, int(3))],
            int(10),
            Valuation::concave_additive(vec![vec![int(6), int(4)], vec![int(5)]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scenario_probabilities() {
        let inst = adversarial_single_seller(5, int(5), 5).unwrap();
        let s = enumerate_scenarios(MechanismId::MAdd, &inst).unwrap();
        assert_eq!(s.len(), 3);
        assert!((s[0].probability - 0.19155).abs() < 1e-4);
        assert!((s[2].probability - 0.30845).abs() < 1e-4);
        let one = adversarial_single_seller(1, int(5), 1).unwrap();
        let s = enumerate_scenarios(MechanismId::MOne, &one).unwrap();
        assert_eq!((s[0].probability, s[1].probability), (1.0, 0.0));
        let three = Instance::new(
            vec![Seller::new(1, int(1)); 3],
            int(3),
            Valuation::bounded_knapsack(vec![int(1); 3]).unwrap(),
        )
        .unwrap();
        let s = enumerate_scenarios(MechanismId::MRand, &three).unwrap();
        assert_eq!(s.len(), 8);
        assert!(s.iter().all(|x| x.probability == 0.125));
        let s = enumerate_scenarios(MechanismId::MSub, &three).unwrap();
        assert_eq!(s.len(), 10);
        assert!((total_probability(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_text_round_trip() {
        for text in ["greedy", "star", "bot", "one:fire", "one:skip", "rand:0b101"] {
            let b: Branch = text.parse().unwrap();
            assert_eq!(b.to_string(), text);
        }
        assert_eq!("fire".parse::<Branch>().unwrap(), Branch::One(OneBranch::Fire));
        assert!("sideways".parse::<Branch>().is_err());
        assert_eq!("m-add".parse::<MechanismId>().unwrap(), MechanismId::MAdd);
        assert!("m_foo".parse::<MechanismId>().is_err());
    }

    #[test]
    fn branch_must_belong_to_mechanism() {
        let inst = example();
        let err = run_branch(
            MechanismId::MAdd,
            &inst,
            &inst.costs(),
            Branch::One(OneBranch::Fire),
        );
        assert!(matches!(err, Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn dst_passes_on_example() {
        let inst = example();
        let checks = check_dst(MechanismId::MAdd, &inst, &DstOptions::default()).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn mutated_payments_are_caught() {
        let inst = Instance::new(
            vec![Seller::new(2, ratio(5, 2))],
            int(4),
            Valuation::bounded_knapsack(vec![int(1)]).unwrap(),
        )
        .unwrap();
        let checks = check_dst(MechanismId::MAddMutated, &inst, &DstOptions::default()).unwrap();
        let dst = checks.iter().find(|c| c.name == "dst").unwrap();
        assert!(!dst.passed);
        assert!(replay_witness(MechanismId::MAddMutated, &inst, dst).unwrap());
        assert!(check_dst(MechanismId::MAdd, &inst, &DstOptions::default())
            .unwrap()
            .iter()
            .all(|c| c.passed));
    }

    #[test]
    fn star_branch_pays_budget() {
        let inst = example();
        let out = run_branch(
            MechanismId::MAdd,
            &inst,
            &inst.costs(),
            Branch::Add(AddBranch::Star),
        )
        .unwrap();
        assert_eq!(out.total_payment(), int(10));
        assert!(check_budget(MechanismId::MAdd, &inst)
            .unwrap()
            .iter()
            .all(|c| c.passed));
    }

    #[test]
    fn single_seller_ratio_bracket() {
        let inst = adversarial_single_seller(4, int(4), 4).unwrap();
        let (check, m) = measure_ratio(MechanismId::MAdd, &inst).unwrap();
        assert!(check.passed);
        assert!(m.ratio >= 4f64.ln() - 1e-6);
        let (check, m) = measure_ratio(MechanismId::MOne, &inst).unwrap();
        assert!(check.passed);
        assert!((m.ratio - (1.0 + 4f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn marginal_greedy_on_single_item() {
        let inst = Instance::new(
            vec![Seller::new(3, int(1))],
            int(3),
            Valuation::bounded_knapsack(vec![int(2)]).unwrap(),
        )
        .unwrap();
        let trace = greedy_marginal(&inst, &inst.costs()).unwrap();
        assert_eq!(trace.allocation.counts(), &[3]);
        assert_eq!(trace.steps.len(), 3);
    }
}

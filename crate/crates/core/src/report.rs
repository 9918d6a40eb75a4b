//! Report serialization: one JSON object per check, a CSV summary per
//! instance and mechanism, and the ratio-sweep table.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mech_subadditive::phi;
use crate::model::{Instance, Outcome};
use crate::oracles::adversarial_single_seller;
use crate::rational::{format_rational, from_u32, Rational};
use crate::verify::{measure_ratio, Check, MechanismId, Report, Scenario};

#[derive(Serialize)]
struct WitnessLine {
    scenario: String,
    bids: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seller: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<String>,
}

#[derive(Serialize)]
struct CheckLine<'a> {
    instance: &'a str,
    mechanism: &'a str,
    check: &'a str,
    passed: bool,
    detail: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessLine>,
}

fn check_line(report: &Report, c: &Check) -> String {
    let line = CheckLine {
        instance: &report.digest,
        mechanism: report.mechanism.name(),
        check: &c.name,
        passed: c.passed,
        detail: &c.detail,
        witness: c.witness.as_ref().map(|w| WitnessLine {
            scenario: w.scenario.to_string(),
            bids: w.bids.iter().map(format_rational).collect(),
            seller: w.seller,
            deviation: w.deviation.as_ref().map(format_rational),
        }),
    };
    serde_json::to_string(&line).expect("plain data serializes")
}

/// One JSON object per check, newline terminated.
pub fn json_lines(report: &Report) -> String {
    let mut out = String::new();
    for c in &report.checks {
        out.push_str(&check_line(report, c));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SkipLine<'a> {
    instance: &'a str,
    mechanism: &'a str,
    check: &'a str,
    skipped: bool,
    detail: &'a str,
}

/// A line for a mechanism that does not apply to an instance.
pub fn skipped_line(digest: &str, mech: MechanismId, reason: &str) -> String {
    let line = SkipLine {
        instance: digest,
        mechanism: mech.name(),
        check: "skipped",
        skipped: true,
        detail: reason,
    };
    serde_json::to_string(&line).expect("plain data serializes")
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    instance: &'a str,
    mechanism: &'a str,
    check: &'a str,
    passed: bool,
    detail: &'a str,
}

/// A failed line for a mechanism that errored on an instance.
pub fn error_line(digest: &str, mech: MechanismId, reason: &str) -> String {
    let line = ErrorLine {
        instance: digest,
        mechanism: mech.name(),
        check: "error",
        passed: false,
        detail: reason,
    };
    serde_json::to_string(&line).expect("plain data serializes")
}

/// One realized scenario, as printed by `run`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub mechanism: String,
    pub scenario: String,
    pub probability: f64,
    pub bids: Vec<String>,
    pub allocation: Vec<u32>,
    pub payments: Vec<String>,
    pub total_payment: String,
    pub value: String,
}

impl RunRecord {
    pub fn new(
        mech: MechanismId,
        scenario: &Scenario,
        bids: &[Rational],
        inst: &Instance,
        outcome: &Outcome,
    ) -> Result<Self> {
        Ok(RunRecord {
            mechanism: mech.name().to_string(),
            scenario: scenario.branch.to_string(),
            probability: scenario.probability,
            bids: bids.iter().map(format_rational).collect(),
            allocation: outcome.allocation().counts().to_vec(),
            payments: outcome.payments().iter().map(format_rational).collect(),
            total_payment: format_rational(&outcome.total_payment()),
            value: format_rational(&inst.value(outcome.allocation())?),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub instance: String,
    pub mechanism: String,
    pub ratio: Option<f64>,
    pub bound: Option<f64>,
    pub pass_count: usize,
    pub fail_count: usize,
}

impl SummaryRow {
    pub fn from_report(report: &Report) -> Self {
        let fails = report.failures().count();
        SummaryRow {
            instance: report.digest.clone(),
            mechanism: report.mechanism.name().to_string(),
            ratio: report.measured.as_ref().map(|m| m.ratio),
            bound: report.measured.as_ref().and_then(|m| m.bound),
            pass_count: report.checks.len() - fails,
            fail_count: fails,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::validation("csv", e.to_string())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    if rows.is_empty() {
        w.write_record([
            "instance",
            "mechanism",
            "ratio",
            "bound",
            "pass_count",
            "fail_count",
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::validation("csv", e.to_string()))
}

/// Measured ratios on the one-seller family with `n` units at cost `B / n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub m_add_ratio: f64,
    pub m_sub_ratio: f64,
    pub ln_n: f64,
    /// `4 (1 + ln n)`.
    pub add_bound: f64,
    pub phi: f64,
}

pub fn ratio_sweep(ns: impl IntoIterator<Item = u32>) -> Result<Vec<SweepRow>> {
    ns.into_iter()
        .map(|n| {
            let inst = adversarial_single_seller(n, from_u32(n), n)?;
            let (_, add) = measure_ratio(MechanismId::MAdd, &inst)?;
            let (_, sub) = measure_ratio(MechanismId::MSub, &inst)?;
            Ok(SweepRow {
                n,
                m_add_ratio: add.ratio,
                m_sub_ratio: sub.ratio,
                ln_n: (n as f64).ln(),
                add_bound: 4.0 * (1.0 + (n as f64).ln()),
                phi: phi(n),
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::validation("csv", e.to_string()))
}

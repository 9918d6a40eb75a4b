//! Instance files.
//!
//! ```json
//! {
//!   "version": "1",
//!   "budget": "10",
//!   "sellers": [{ "units": 2, "cost": "2" }, { "units": 1, "cost": "3" }],
//!   "valuation": { "type": "concave_additive", "margins": [["6", "4"], ["5"]] }
//! }
//! ```
//!
//! Every magnitude is a rational string. An optional `bids` array overrides
//! the bid profile used by `run`. Serialization is canonical: fixed field
//! order, explicit tables in lexicographic order.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Instance, Seller};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::valuation::Valuation;

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceFile {
    pub instance: Instance,
    pub bids: Option<Vec<Rational>>,
}

impl InstanceFile {
    pub fn new(instance: Instance) -> Self {
        InstanceFile { instance, bids: None }
    }

    /// The declared bids, or the true costs.
    pub fn bids(&self) -> Vec<Rational> {
        self.bids.clone().unwrap_or_else(|| self.instance.costs())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    version: String,
    budget: String,
    sellers: Vec<RawSeller>,
    valuation: RawValuation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bids: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeller {
    units: u32,
    cost: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawValuation {
    BoundedKnapsack {
        values: Vec<String>,
    },
    ConcaveAdditive {
        margins: Vec<Vec<String>>,
    },
    Additive {
        margins: Vec<Vec<String>>,
    },
    Symmetric {
        margins: Vec<String>,
    },
    Explicit {
        caps: Vec<u32>,
        table: Vec<RawEntry>,
        /// Only require monotonicity along each single item.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        per_item_monotone: bool,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    alloc: Vec<u32>,
    value: String,
}

fn rat(path: &str, s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|_| Error::validation(path, format!("not a rational: {s:?}")))
}

fn rats(path: &str, v: &[String]) -> Result<Vec<Rational>> {
    v.iter()
        .enumerate()
        .map(|(i, s)| rat(&format!("{path}[{i}]"), s))
        .collect()
}

fn rows(path: &str, v: &[Vec<String>]) -> Result<Vec<Vec<Rational>>> {
    v.iter()
        .enumerate()
        .map(|(i, r)| rats(&format!("{path}[{i}]"), r))
        .collect()
}

fn valuation_from_raw(raw: &RawValuation) -> Result<Valuation> {
    let wrap = |r: Result<Valuation>| r.map_err(|e| Error::validation("valuation", e.to_string()));
    match raw {
        RawValuation::BoundedKnapsack { values } => {
            wrap(Valuation::bounded_knapsack(rats("valuation.values", values)?))
        }
        RawValuation::ConcaveAdditive { margins } => {
            wrap(Valuation::concave_additive(rows("valuation.margins", margins)?))
        }
        RawValuation::Additive { margins } => wrap(Valuation::additive(rows("valuation.margins", margins)?)),
        RawValuation::Symmetric { margins } => {
            wrap(Valuation::symmetric(rats("valuation.margins", margins)?))
        }
        RawValuation::Explicit {
            caps,
            table,
            per_item_monotone,
        } => {
            let mut entries = Vec::with_capacity(table.len());
            for (i, e) in table.iter().enumerate() {
                entries.push((
                    e.alloc.clone(),
                    rat(&format!("valuation.table[{i}].value"), &e.value)?,
                ));
            }
            if *per_item_monotone {
                wrap(Valuation::explicit_per_item_monotone(caps.clone(), entries))
            } else {
                wrap(Valuation::explicit(caps.clone(), entries))
            }
        }
    }
}

fn valuation_to_raw(v: &Valuation) -> RawValuation {
    let strs = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>();
    match v {
        Valuation::BoundedKnapsack { values } => RawValuation::BoundedKnapsack { values: strs(values) },
        Valuation::ConcaveAdditive { margins } => RawValuation::ConcaveAdditive {
            margins: margins.iter().map(|r| strs(r)).collect(),
        },
        Valuation::Additive { margins } => RawValuation::Additive {
            margins: margins.iter().map(|r| strs(r)).collect(),
        },
        Valuation::Symmetric { margins } => RawValuation::Symmetric {
            margins: strs(margins),
        },
        Valuation::Explicit(t) => RawValuation::Explicit {
            caps: t.caps().to_vec(),
            table: t
                .entries()
                .into_iter()
                .map(|(alloc, value)| RawEntry {
                    alloc,
                    value: format_rational(&value),
                })
                .collect(),
            per_item_monotone: !t.is_monotone(),
        },
    }
}

pub fn parse_instance_file(text: &str) -> Result<InstanceFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::validation(if path.is_empty() { "$" } else { &path }, e.inner().to_string())
    })?;
    if raw.version != FORMAT_VERSION {
        return Err(Error::validation(
            "version",
            format!("unsupported version {:?}", raw.version),
        ));
    }
    let budget = rat("budget", &raw.budget)?;
    let mut sellers = Vec::with_capacity(raw.sellers.len());
    for (i, s) in raw.sellers.iter().enumerate() {
        sellers.push(Seller::new(s.units, rat(&format!("sellers[{i}].cost"), &s.cost)?));
    }
    let valuation = valuation_from_raw(&raw.valuation)?;
    let instance = Instance::new(sellers, budget, valuation).map_err(|e| {
        let path = match &e {
            Error::MalformedValuation(_) => "valuation",
            _ => "sellers",
        };
        Error::validation(path, e.to_string())
    })?;
    let bids = match &raw.bids {
        None => None,
        Some(b) => {
            let b = rats("bids", b)?;
            if b.len() != instance.num_sellers() {
                return Err(Error::validation(
                    "bids",
                    format!("{} bids for {} sellers", b.len(), instance.num_sellers()),
                ));
            }
            if let Some(i) = b.iter().position(|x| x < &Rational::from_integer(0.into())) {
                return Err(Error::validation(&format!("bids[{i}]"), "negative bid"));
            }
            Some(b)
        }
    };
    Ok(InstanceFile { instance, bids })
}

pub fn to_json(file: &InstanceFile) -> String {
    let inst = &file.instance;
    let raw = RawFile {
        version: FORMAT_VERSION.to_string(),
        budget: format_rational(inst.budget()),
        sellers: inst
            .sellers()
            .iter()
            .map(|s| RawSeller {
                units: s.units,
                cost: format_rational(&s.cost),
            })
            .collect(),
        valuation: valuation_to_raw(inst.valuation()),
        bids: file
            .bids
            .as_ref()
            .map(|b| b.iter().map(format_rational).collect()),
    };
    let mut out = serde_json::to_string_pretty(&raw).expect("plain data serializes");
    out.push('\n');
    out
}

/// First 12 hex digits of the SHA-256 of the canonical instance text.
pub fn digest(inst: &Instance) -> String {
    let text = to_json(&InstanceFile::new(inst.clone()));
    let hash = Sha256::digest(text.as_bytes());
    hex::encode(hash)[..12].to_string()
}

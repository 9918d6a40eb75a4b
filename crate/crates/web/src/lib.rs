//! Browser bindings for the demo page in `www/`. Every export takes and
//! returns plain strings; failures come back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use procure::io::parse_instance_file;
use procure::mech_additive::{greedy_allocate, run_m_add, seller_thresholds, AddBranch, AddLottery};
use procure::rational::{format_rational, from_u32, to_f64};
use procure::report::{ratio_sweep, write_sweep_csv};
use procure::{Rational, Result};

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn exact(q: &Rational) -> Value {
    json!({ "exact": format_rational(q), "approx": to_f64(q) })
}

fn m_add(text: &str) -> Result<Value> {
    let file = parse_instance_file(text)?;
    let inst = &file.instance;
    let bids = file.bids();
    let lottery = AddLottery::new(inst)?;
    let thresholds = (0..inst.num_sellers())
        .map(|i| {
            Ok(seller_thresholds(inst, &bids, i)?
                .iter()
                .map(exact)
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let branches = AddBranch::ALL
        .iter()
        .map(|&b| {
            let o = run_m_add(inst, &bids, b)?;
            Ok(json!({
                "branch": b.to_string(),
                "probability": lottery.probability(b),
                "allocation": o.allocation().counts(),
                "payments": o.payments().iter().map(exact).collect::<Vec<_>>(),
                "total": exact(&o.total_payment()),
                "value": exact(&inst.value(o.allocation())?),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "budget": exact(inst.budget()),
        "star_seller": lottery.star_seller,
        "thresholds": thresholds,
        "branches": branches,
    }))
}

/// All three branches of the additive mechanism, with every unit's threshold.
#[wasm_bindgen]
pub fn m_add_demo(instance_json: &str) -> String {
    respond(m_add(instance_json))
}

fn curve(text: &str, seller: usize, points: u32) -> Result<Value> {
    let file = parse_instance_file(text)?;
    let inst = &file.instance;
    let mut bids = file.bids();
    if seller >= inst.num_sellers() {
        return Err(procure::Error::SellerOutOfRange {
            index: seller,
            sellers: inst.num_sellers(),
        });
    }
    let thresholds = seller_thresholds(inst, &bids, seller)?;
    let points = points.max(2);
    let samples = (1..=points)
        .map(|k| {
            bids[seller] = inst.budget() * from_u32(k) / from_u32(points);
            let won = greedy_allocate(inst, &bids)?.counts()[seller];
            Ok(json!({ "bid": to_f64(&bids[seller]), "units": won }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "budget": to_f64(inst.budget()),
        "thresholds": thresholds.iter().map(exact).collect::<Vec<_>>(),
        "samples": samples,
    }))
}

/// Units the greedy branch buys from `seller` as its bid moves over `(0, B]`.
#[wasm_bindgen]
pub fn threshold_curve(instance_json: &str, seller: usize, points: u32) -> String {
    respond(curve(instance_json, seller, points))
}

fn sweep(from: u32, to: u32) -> Result<Value> {
    let rows = ratio_sweep(from.max(1)..=to)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    Ok(json!({ "csv": String::from_utf8_lossy(&buf) }))
}

/// Measured ratios on the one-seller family, as CSV text.
#[wasm_bindgen]
pub fn ratio_sweep_csv(from: u32, to: u32) -> String {
    respond(sweep(from, to))
}

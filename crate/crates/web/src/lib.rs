//! Browser bindings: pack an instance, play the adversary, run the killer.

use wasm_bindgen::prelude::wasm_bindgen;
use wasm_bindgen::JsValue;

use squarepack::adversary::{adversary_run, optimal_packing_for_transcript, slot_killer_instance};
use squarepack::bottomleft::{bl_run, BottomLeft};
use squarepack::io::{parse_instance, RunStats};
use squarepack::packing::{packing_height, Packing, Strategy};
use squarepack::scalar::Scalar;
use squarepack::slot::{slot_run, SlotAlgorithm};
use squarepack::svg::render_svg;

fn err(e: impl ToString) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn strategy(name: &str) -> Result<Box<dyn Strategy>, String> {
    match name {
        "bottomleft" => Ok(Box::new(BottomLeft::new())),
        "slot" => Ok(Box::new(SlotAlgorithm::new())),
        _ => Err(format!("unknown strategy {name:?}")),
    }
}

/// Packs the sides in `text` (one per line) and returns the stats followed
/// by an SVG drawing, separated by a blank line.
pub fn pack_text(name: &str, text: &str) -> Result<String, String> {
    let items = parse_instance(text).map_err(|e| e.to_string())?.items();
    let p: Packing = match name {
        "bottomleft" => bl_run(&items),
        "slot" => slot_run(&items).map(|s| s.packing().clone()),
        _ => return Err(format!("unknown strategy {name:?}")),
    }
    .map_err(|e| e.to_string())?;
    Ok(format!("{}\n\n{}", RunStats::of(&p), render_svg(&p, &[])))
}

pub fn adversary_text(name: &str, iterations: usize, eps: &str) -> Result<String, String> {
    let eps: Scalar = eps.parse().map_err(|e: squarepack::scalar::ParseScalarError| e.to_string())?;
    let mut s = strategy(name)?;
    let t = adversary_run(s.as_mut(), iterations, &eps).map_err(|e| e.to_string())?;
    let opt = packing_height(&optimal_packing_for_transcript(&t).map_err(|e| e.to_string())?);
    let ratio = &t.final_height() / &opt;
    Ok(format!("{}H {}\noptimum {opt}\nratio {ratio} (~{:.4})\n", t.to_text(), t.final_height(), ratio.to_f64()))
}

pub fn killer_text(k: u32, delta: &str, n: usize) -> Result<String, String> {
    let delta: Scalar = delta.parse().map_err(|e: squarepack::scalar::ParseScalarError| e.to_string())?;
    let items = slot_killer_instance(k, &delta, n).map_err(|e| e.to_string())?;
    let st = slot_run(&items).map_err(|e| e.to_string())?;
    Ok(RunStats::of(st.packing()).to_string())
}

#[wasm_bindgen]
pub fn pack(strategy: &str, text: &str) -> Result<String, JsValue> {
    pack_text(strategy, text).map_err(err)
}

#[wasm_bindgen]
pub fn adversary(strategy: &str, iterations: usize, eps: &str) -> Result<String, JsValue> {
    adversary_text(strategy, iterations, eps).map_err(err)
}

#[wasm_bindgen]
pub fn killer(k: u32, delta: &str, n: usize) -> Result<String, JsValue> {
    killer_text(k, delta, n).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_returns_stats_and_svg() {
        let out = pack_text("bottomleft", "1/2\n1/2\n3/5\n").unwrap();
        assert!(out.starts_with("n 3\nheight 11/10"));
        assert!(out.contains("<svg"));
        assert!(pack_text("nope", "1/2").is_err());
        assert!(pack_text("slot", "2").is_err());
    }

    #[test]
    fn adversary_and_killer() {
        assert!(adversary_text("slot", 2, "1/100").unwrap().contains("iter 2"));
        assert!(adversary_text("slot", 2, "x").is_err());
        assert!(killer_text(1, "1/64", 2).unwrap().contains("height 33/32"));
    }
}

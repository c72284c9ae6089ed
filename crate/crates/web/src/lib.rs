//! Browser bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON text so the page needs no glue
//! beyond `JSON.parse`. The `*_json` functions hold the logic and are
//! callable natively, which is how they are tested.

use pidkit::broja::decompose_broja;
use pidkit::decomp_input::decompose_input;
use pidkit::decomp_output::decompose_output;
use pidkit::deficiency::{degradation_test, input_deficiency, input_degradation_test, ORDER_TOL};
use pidkit::probcore::{
    binary_erasure, extended_erasure, format, forward_pair, validate_joint, Alphabet, JointDist,
    ShannonSummary, ValidateOptions, Var,
};
use pidkit::{DecompOptions, Decomposition, Error};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn block(d: &Decomposition) -> Value {
    json!({
        "ui_y": d.ui_y,
        "ui_z": d.ui_z,
        "si": d.si,
        "ci": d.ci,
        "converged": d.converged(),
    })
}

fn shannon(j: &JointDist) -> Value {
    let sh = ShannonSummary::of(j);
    json!({
        "i_sy": sh.i_sy,
        "i_sz": sh.i_sz,
        "i_sy_given_z": sh.i_sy_given_z,
        "i_sz_given_y": sh.i_sz_given_y,
        "i_s_yz": sh.i_s_yz,
    })
}

fn parse(text: &str) -> Result<JointDist, Error> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let opts = ValidateOptions {
        renormalize: true,
        ..ValidateOptions::default()
    };
    validate_joint(format::parse_json_value(&value)?, opts)
}

fn all_measures(j: &JointDist) -> Result<Value, Error> {
    let opts = DecompOptions {
        drop_null: true,
        ..DecompOptions::default()
    };
    Ok(json!({
        "shannon": shannon(j),
        "broja": block(&decompose_broja(j, &opts)?.decomposition),
        "output_deficiency": block(&decompose_output(j, &opts)?),
        "input_deficiency": block(&decompose_input(j, &opts)?),
    }))
}

/// All three decompositions of a distribution in the JSON file format.
/// Tables that do not sum to one are rescaled.
pub fn decompose_json(dist: &str) -> Result<String, Error> {
    let j = parse(dist)?;
    Ok(all_measures(&j)?.to_string())
}

/// The erasure family: `S` a fair bit, `Y` its erasure with probability
/// `eps_y`, `Z` a further erasure of `Y` with probability `eps_z`.
pub fn erasure_joint(eps_y: f64, eps_z: f64) -> Result<JointDist, Error> {
    if !(0.0..=1.0).contains(&eps_z) {
        return Err(Error::InvalidOptions(format!(
            "erasure probability {eps_z} outside [0,1]"
        )));
    }
    let first = binary_erasure(eps_y)?;
    let second = extended_erasure(eps_z)?;
    let mut table = Vec::with_capacity(18);
    for s in 0..2 {
        for y in 0..3 {
            for z in 0..3 {
                table.push(0.5 * first.get(s, y) * second.get(y, z));
            }
        }
    }
    let sym = Alphabet::new(["0", "e", "1"])?;
    JointDist::new(Alphabet::range(2), sym.clone(), sym, table)
}

/// Decompositions of the erasure family together with the input
/// deficiencies. These vanish whenever `Z` is not erased with certainty,
/// although the unique information of `Y` does not.
pub fn erasure_json(eps_y: f64, eps_z: f64) -> Result<String, Error> {
    let j = erasure_joint(eps_y, eps_z)?;
    let mut out = all_measures(&j)?;
    let opts = DecompOptions::default();
    let input_pairs = (
        forward_pair(&j, Var::Y, Var::S, true),
        forward_pair(&j, Var::Z, Var::S, true),
    );
    if let (Ok((py, kb)), Ok((pz, mb))) = input_pairs {
        out["input_deficiencies"] = json!({
            "z_covers_y": input_deficiency(&py, &mb, &kb, &opts.solver)?.value,
            "y_covers_z": input_deficiency(&pz, &kb, &mb, &opts.solver)?.value,
        });
    }
    out["distribution"] = format::to_json_value(&j);
    Ok(out.to_string())
}

/// Exact degradation tests in both directions, for the forward channels
/// out of `S` and for the reverse channels into `S`.
pub fn degradation_json(dist: &str) -> Result<String, Error> {
    let j = parse(dist)?;
    let (pi, mu) = forward_pair(&j, Var::S, Var::Z, true)?;
    let (_, kappa) = forward_pair(&j, Var::S, Var::Y, true)?;
    let (py, kb) = forward_pair(&j, Var::Y, Var::S, true)?;
    let (pz, mb) = forward_pair(&j, Var::Z, Var::S, true)?;
    let cert = |c: pidkit::deficiency::OrderCertificate| {
        json!({
            "holds": c.holds,
            "l1_gap": c.l1_gap,
            "randomizer": c.randomizer.filter(|_| c.holds).map(|r| r.to_rows()),
        })
    };
    Ok(json!({
        "degradation": {
            "z_covers_y": cert(degradation_test(&mu, &kappa, &pi, ORDER_TOL)?),
            "y_covers_z": cert(degradation_test(&kappa, &mu, &pi, ORDER_TOL)?),
        },
        "input_degraded": {
            "z_covers_y": cert(input_degradation_test(&mb, &kb, &py, ORDER_TOL)?),
            "y_covers_z": cert(input_degradation_test(&kb, &mb, &pz, ORDER_TOL)?),
        },
    })
    .to_string())
}

fn js(r: Result<String, Error>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn decompose(dist: &str) -> Result<String, JsError> {
    js(decompose_json(dist))
}

#[wasm_bindgen]
pub fn erasure(eps_y: f64, eps_z: f64) -> Result<String, JsError> {
    js(erasure_json(eps_y, eps_z))
}

#[wasm_bindgen]
pub fn degradation(dist: &str) -> Result<String, JsError> {
    js(degradation_json(dist))
}

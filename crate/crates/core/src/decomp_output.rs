//! Decomposition built from weighted output deficiencies.
//!
//! With `κ = P_{Y|S}`, `μ = P_{Z|S}`:
//!
//! ```text
//! UI(S;Y\Z) = max{δ(μ,κ), δ(κ,μ) + I(S;Y) − I(S;Z)}
//! SI        = min{I(S;Y) − δ(μ,κ), I(S;Z) − δ(κ,μ)}
//! CI        = min{I(S;Y|Z) − δ(μ,κ), I(S;Z|Y) − δ(κ,μ)}
//! ```
//!
//! and `UI(S;Z\Y)` symmetrically.

use crate::decomp::{Components, DecompOptions, Decomposition, Diagnostics, MeasureTag};
use crate::deficiency::output_deficiency;
use crate::error::Result;
use crate::probcore::{forward_pair, JointDist, ShannonSummary, Var};

pub fn decompose_output(joint: &JointDist, opts: &DecompOptions) -> Result<Decomposition> {
    let joint = if opts.drop_null {
        joint.drop_null(Var::S)?
    } else {
        joint.clone()
    };
    let (pi, kappa) = forward_pair(&joint, Var::S, Var::Y, false)?;
    let (_, mu) = forward_pair(&joint, Var::S, Var::Z, false)?;
    let d_yz = output_deficiency(&pi, &mu, &kappa, &opts.solver)?;
    let d_zy = output_deficiency(&pi, &kappa, &mu, &opts.solver)?;
    let sh = ShannonSummary::of(&joint);
    let raw = Components::from_deficiencies(&sh, d_yz.value, d_zy.value);
    let diagnostics = Diagnostics {
        converged: d_yz.converged && d_zy.converged,
        iterations: d_yz.iterations + d_zy.iterations,
        deficiencies: vec![("mu_kappa".into(), d_yz), ("kappa_mu".into(), d_zy)],
        ..Diagnostics::default()
    };
    Ok(Decomposition::new(
        raw,
        MeasureTag::OutputDeficiency,
        diagnostics,
    ))
}

//! Decomposition built from weighted input deficiencies of the reverse
//! channels `κ̄ = P_{S|Y}`, `μ̄ = P_{S|Z}`, and the projected information
//! it coincides with.

use serde::Serialize;

use crate::decomp::{Components, DecompOptions, Decomposition, Diagnostics, MeasureTag};
use crate::deficiency::{input_deficiency, ri_projection, RiProjection};
use crate::error::Result;
use crate::probcore::{forward_pair, JointDist, Prior, ShannonSummary, Var};

fn prepared(joint: &JointDist, drop_null: bool) -> Result<JointDist> {
    if drop_null {
        joint.drop_null(Var::Y)?.drop_null(Var::Z)
    } else {
        Ok(joint.clone())
    }
}

pub fn decompose_input(joint: &JointDist, opts: &DecompOptions) -> Result<Decomposition> {
    let joint = prepared(joint, opts.drop_null)?;
    let (pi_y, kappa_bar) = forward_pair(&joint, Var::Y, Var::S, false)?;
    let (pi_z, mu_bar) = forward_pair(&joint, Var::Z, Var::S, false)?;
    let d_yz = input_deficiency(&pi_y, &mu_bar, &kappa_bar, &opts.solver)?;
    let d_zy = input_deficiency(&pi_z, &kappa_bar, &mu_bar, &opts.solver)?;
    let sh = ShannonSummary::of(&joint);
    let raw = Components::from_deficiencies(&sh, d_yz.value, d_zy.value);
    let diagnostics = Diagnostics {
        converged: d_yz.converged && d_zy.converged,
        iterations: d_yz.iterations + d_zy.iterations,
        deficiencies: vec![
            ("mu_bar_kappa_bar".into(), d_yz),
            ("kappa_bar_mu_bar".into(), d_zy),
        ],
        ..Diagnostics::default()
    };
    Ok(Decomposition::new(
        raw,
        MeasureTag::InputDeficiency,
        diagnostics,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Projection {
    /// `I_S(Y↘Z)`: project each `P_{S|Y=y}` onto the hull of the `P_{S|Z=z}`.
    YOntoZ,
    ZOntoY,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedInfo {
    /// Bits.
    pub value: f64,
    pub per_y_projections: Vec<RiProjection>,
}

/// `I_S(Y↘Z) = Σ_y p(y) Σ_s p(s|y) log(Q_y(s)/p(s))`, where `Q_y` is the
/// reverse I-projection of `p(·|y)` onto `conv{p(·|z)}`.
pub fn projected_information(
    joint: &JointDist,
    direction: Projection,
    opts: &DecompOptions,
) -> Result<ProjectedInfo> {
    let joint = prepared(joint, opts.drop_null)?;
    let (from, onto) = match direction {
        Projection::YOntoZ => (Var::Y, Var::Z),
        Projection::ZOntoY => (Var::Z, Var::Y),
    };
    let (pi_from, rev_from) = forward_pair(&joint, from, Var::S, false)?;
    let (_, rev_onto) = forward_pair(&joint, onto, Var::S, false)?;
    let ns = joint.s().len();
    let pi_s = joint.marginal(&[Var::S]);
    let hull: Vec<Prior> = (0..rev_onto.n_in())
        .map(|z| Prior::new(joint.s().clone(), rev_onto.row(z).to_vec()))
        .collect::<Result<_>>()?;
    let mut value = 0.0;
    let mut per_y = Vec::with_capacity(rev_from.n_in());
    for (y, &w) in pi_from.mass().iter().enumerate() {
        let target = Prior::new(joint.s().clone(), rev_from.row(y).to_vec())?;
        let proj = ri_projection(&target, &hull, &opts.solver)?;
        let mut q = vec![0.0; ns];
        for (wz, h) in proj.weights.iter().zip(&hull) {
            for (qs, p) in q.iter_mut().zip(h.mass()) {
                *qs += wz * p;
            }
        }
        for (s, &t) in target.mass().iter().enumerate() {
            if t > 0.0 {
                value += w * t * (q[s] / pi_s[s]).log2();
            }
        }
        per_y.push(proj);
    }
    Ok(ProjectedInfo {
        value,
        per_y_projections: per_y,
    })
}

/// `min{I_S(Y↘Z), I_S(Z↘Y)}`.
pub fn si_red(joint: &JointDist, opts: &DecompOptions) -> Result<f64> {
    let a = projected_information(joint, Projection::YOntoZ, opts)?.value;
    let b = projected_information(joint, Projection::ZOntoY, opts)?.value;
    Ok(a.min(b))
}

//! Secret-key-rate bounds for a source `P(S, Y, Z)` where the legitimate
//! parties hold `S` and `Y` and the eavesdropper holds `Z`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::broja::ui_broja;
use crate::decomp::DecompOptions;
use crate::deficiency::{degradation_test, ORDER_TOL};
use crate::error::{Error, Result};
use crate::oracle::dirichlet;
use crate::probcore::{cond_mutual_info, forward_pair, mutual_info, JointDist, Var};

/// A unique information at or below this counts as zero.
pub const ZERO_UI: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActiveAdversary {
    /// One of the unique informations vanishes, so no key survives an
    /// active adversary.
    ZeroRate,
    /// Both are positive: the rate against an active adversary equals the
    /// two-way rate (which may itself be zero and is not computed).
    EqualsTwoWayRate,
    /// A solver did not converge and no unique information was certified
    /// to vanish.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkrReport {
    pub lower_trivial: f64,
    pub upper_trivial: f64,
    pub one_way_upper_ui: f64,
    /// Heuristic: a feasible value of the minimization, hence an upper bound.
    pub intrinsic_upper: f64,
    pub simulatable_y_by_z: bool,
    pub simulatable_s_by_z: bool,
    pub active_adversary: ActiveAdversary,
}

/// `(max{I(S;Y) − I(S;Z), I(Y;S) − I(Y;Z)}⁺, min{I(S;Y), I(S;Y|Z)})`.
pub fn skr_trivial_bounds(joint: &JointDist) -> (f64, f64) {
    let i_sy = mutual_info(joint, &[Var::S], &[Var::Y]);
    let i_sz = mutual_info(joint, &[Var::S], &[Var::Z]);
    let i_yz = mutual_info(joint, &[Var::Y], &[Var::Z]);
    let i_sy_z = cond_mutual_info(joint, &[Var::S], &[Var::Y], &[Var::Z]);
    let lower = (i_sy - i_sz).max(i_sy - i_yz).max(0.0);
    (lower, i_sy.min(i_sy_z))
}

/// `UI(S;Y\Z)`, an upper bound on the one-way rate from `S` to `Y`.
pub fn one_way_skr_upper(joint: &JointDist, opts: &DecompOptions) -> Result<f64> {
    Ok(ui_broja(joint, Var::Y, opts)?.decomposition.ui_y)
}

/// `I(S;Y|Z′)` for `Z′ = W(Z)`, in nats, with its gradient in `W`.
fn cmi_after(joint: &JointDist, w: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let (ns, ny, nz) = joint.dims();
    let mut q = vec![0.0; ns * ny * nz];
    for s in 0..ns {
        for y in 0..ny {
            for z in 0..nz {
                let p = joint.get(s, y, z);
                if p > 0.0 {
                    for (zp, &wz) in w[z * nz..(z + 1) * nz].iter().enumerate() {
                        q[(s * ny + y) * nz + zp] += p * wz;
                    }
                }
            }
        }
    }
    let mut qz = vec![0.0; nz];
    let mut qsz = vec![0.0; ns * nz];
    let mut qyz = vec![0.0; ny * nz];
    for s in 0..ns {
        for y in 0..ny {
            for z in 0..nz {
                let v = q[(s * ny + y) * nz + z];
                qz[z] += v;
                qsz[s * nz + z] += v;
                qyz[y * nz + z] += v;
            }
        }
    }
    // d I / d q(s,y,z') = ln[q q(z') / (q(s,z') q(y,z'))]
    let mut g = vec![0.0; ns * ny * nz];
    let mut f = 0.0;
    for s in 0..ns {
        for y in 0..ny {
            for z in 0..nz {
                let v = q[(s * ny + y) * nz + z];
                if v > 0.0 {
                    // Sum of logs: products of subnormal masses underflow.
                    let l = v.ln() + qz[z].ln() - qsz[s * nz + z].ln() - qyz[y * nz + z].ln();
                    f += v * l;
                    g[(s * ny + y) * nz + z] = l;
                }
            }
        }
    }
    if let Some(grad) = grad {
        grad.fill(0.0);
        for s in 0..ns {
            for y in 0..ny {
                for z in 0..nz {
                    let p = joint.get(s, y, z);
                    if p > 0.0 {
                        for zp in 0..nz {
                            grad[z * nz + zp] += p * g[(s * ny + y) * nz + zp];
                        }
                    }
                }
            }
        }
    }
    f.max(0.0)
}

/// Exponentiated-gradient descent over row-stochastic `W` from `w`.
fn descend(joint: &JointDist, mut w: Vec<f64>, max_iterations: usize, tol: f64) -> f64 {
    let nz = joint.dims().2;
    let mut grad = vec![0.0; nz * nz];
    let mut f = cmi_after(joint, &w, Some(&mut grad));
    let mut eta = 1.0;
    let mut trial = vec![0.0; nz * nz];
    for _ in 0..max_iterations {
        let mut accepted = false;
        while eta > 1e-12 {
            for z in 0..nz {
                let row = z * nz..(z + 1) * nz;
                let gmin = grad[row.clone()]
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                let mut sum = 0.0;
                for i in row.clone() {
                    trial[i] = w[i] * (-eta * (grad[i] - gmin)).exp();
                    sum += trial[i];
                }
                trial[row].iter_mut().for_each(|v| *v /= sum);
            }
            let ft = cmi_after(joint, &trial, None);
            if ft <= f {
                let done = f - ft <= tol * f.max(1e-300);
                std::mem::swap(&mut w, &mut trial);
                f = cmi_after(joint, &w, Some(&mut grad));
                eta *= 1.5;
                accepted = !done;
                break;
            }
            eta *= 0.5;
        }
        if !accepted || f == 0.0 {
            break;
        }
    }
    f
}

/// Heuristic upper estimate of `min_{P_{Z′|Z}} I(S;Y|Z′)` with `|Z′| = |Z|`.
///
/// Candidates are the identity channel (so the result never exceeds
/// `I(S;Y|Z)`), a constant channel (giving `I(S;Y)`), a slightly mixed
/// identity and `restarts` random channels, each refined by
/// exponentiated-gradient descent. The smallest value found is returned;
/// restart `r` depends only on `(opts.seed, r)`, so more restarts never
/// give a larger result.
pub fn intrinsic_information(
    joint: &JointDist,
    restarts: usize,
    opts: &DecompOptions,
) -> Result<f64> {
    opts.solver.validate()?;
    let nz = joint.dims().2;
    let max_it = opts.solver.max_iterations.min(20_000);
    let tol = opts.solver.tol_objective;
    let identity: Vec<f64> = (0..nz * nz)
        .map(|i| if i / nz == i % nz { 1.0 } else { 0.0 })
        .collect();
    let mut best = cmi_after(joint, &identity, None);
    let constant: Vec<f64> = (0..nz * nz)
        .map(|i| if i % nz == 0 { 1.0 } else { 0.0 })
        .collect();
    best = best.min(cmi_after(joint, &constant, None));
    if nz > 1 {
        let mix = 1e-3;
        let start: Vec<f64> = identity
            .iter()
            .map(|&v| (1.0 - mix) * v + mix / nz as f64)
            .collect();
        best = best.min(descend(joint, start, max_it, tol));
        for r in 0..restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(
                opts.solver.seed ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            let start: Vec<f64> = (0..nz).flat_map(|_| dirichlet(&mut rng, nz)).collect();
            best = best.min(descend(joint, start, max_it, tol));
        }
    }
    Ok(best / std::f64::consts::LN_2)
}

/// Whether `simulated` can be produced from `Z` by a channel while keeping
/// its joint law with the remaining variable:
///
/// * `Y`: `P_{Y|S}` is a garbling of `P_{Z|S}`
/// * `S`: `P_{S|Y}` is a garbling of `P_{Z|Y}`
pub fn simulatability(joint: &JointDist, simulated: Var) -> Result<bool> {
    let other = match simulated {
        Var::Y => Var::S,
        Var::S => Var::Y,
        Var::Z => return Err(Error::InvalidOptions("Z cannot simulate itself".into())),
    };
    let (prior, mu) = forward_pair(joint, other, Var::Z, true)?;
    let (_, kappa) = forward_pair(joint, other, simulated, true)?;
    Ok(degradation_test(&mu, &kappa, &prior, ORDER_TOL)?.holds)
}

/// Classifies the rate against an active adversary from `UI(S;Y\Z)` and
/// `UI(Y;S\Z)`. Both unique informations are evaluated at feasible points,
/// so a small value certifies `ZeroRate` even without convergence.
pub fn active_adversary_assessment(joint: &JointDist, opts: &DecompOptions) -> ActiveAdversary {
    let ui = |target| {
        ui_broja(joint, target, opts).ok().map(|r| {
            (
                r.decomposition
                    .diagnostics
                    .raw
                    .map_or(r.decomposition.ui_y, |c| c.ui_y),
                r.converged,
            )
        })
    };
    classify([ui(Var::Y), ui(Var::S)])
}

fn classify(runs: [Option<(f64, bool)>; 2]) -> ActiveAdversary {
    if runs.iter().flatten().any(|&(v, _)| v <= ZERO_UI) {
        ActiveAdversary::ZeroRate
    } else if runs.iter().all(|r| matches!(r, Some((_, true)))) {
        ActiveAdversary::EqualsTwoWayRate
    } else {
        ActiveAdversary::Indeterminate
    }
}

/// All bounds and assessments in one pass.
pub fn skr_report(joint: &JointDist, restarts: usize, opts: &DecompOptions) -> Result<SkrReport> {
    let (lower_trivial, upper_trivial) = skr_trivial_bounds(joint);
    let y_run = ui_broja(joint, Var::Y, opts)?;
    let s_run = ui_broja(joint, Var::S, opts).ok();
    let raw = |r: &crate::broja::BrojaResult| {
        r.decomposition
            .diagnostics
            .raw
            .map_or(r.decomposition.ui_y, |c| c.ui_y)
    };
    let active_adversary = classify([
        Some((raw(&y_run), y_run.converged)),
        s_run.as_ref().map(|r| (raw(r), r.converged)),
    ]);
    Ok(SkrReport {
        lower_trivial,
        upper_trivial,
        one_way_upper_ui: y_run.decomposition.ui_y,
        intrinsic_upper: intrinsic_information(joint, restarts, opts)?,
        simulatable_y_by_z: simulatability(joint, Var::Y)?,
        simulatable_s_by_z: simulatability(joint, Var::S)?,
        active_adversary,
    })
}

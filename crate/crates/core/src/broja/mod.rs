//! Minimum-synergy decomposition: `UI(S;Y\Z) = min_{Q∈Δ_P} I_Q(S;Y|Z)`,
//! where `Δ_P` holds the joints sharing `P`'s `(S,Y)` and `(S,Z)` marginals.
//!
//! The solver uses the reformulation
//! `min_Q min_λ Σ_s π(s) D(Q_{YZ|s} ‖ λ×μ_s)` with `λ: Z→Y`, alternating an
//! I-projection of `λ×μ_s` onto each fiber `{Q_Y = κ_s, Q_Z = μ_s}` (by
//! iterative proportional fitting) with `λ ← Q_{Y|Z}`.

mod ipf;
mod tensor;
mod transport;

pub use ipf::{ipf_projection, IpfOptions};
pub use tensor::{tensor, tensor_with_cap, MAX_TENSOR_SYMBOLS};
pub use transport::transport_margins;

use crate::accel::{self, DescentMap, Eval, StopRule};
use crate::decomp::{Components, DecompOptions, Decomposition, Diagnostics, MeasureTag};
use crate::error::{Error, Result};
use crate::probcore::{Channel, JointDist, ShannonSummary, Var};

/// Membership tolerance on the pair marginals.
pub const MARGIN_TOL: f64 = 1e-9;
/// Consecutive small-change iterations required before stopping.
const STALL_WINDOW: usize = 5;
/// Halve the smoothing mass this often.
const ANNEAL_EVERY: usize = 100;
/// Agreement required between the two unique-information runs.
pub const CROSS_CHECK_TOL: f64 = 1e-4;

const LN2: f64 = std::f64::consts::LN_2;

/// The set `Δ_P` of joints with the same `(S,Y)` and `(S,Z)` marginals as `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginPolytope {
    reference: JointDist,
    sy: Vec<f64>,
    sz: Vec<f64>,
}

impl MarginPolytope {
    pub fn new(reference: &JointDist) -> Self {
        MarginPolytope {
            sy: reference.marginal(&[Var::S, Var::Y]),
            sz: reference.marginal(&[Var::S, Var::Z]),
            reference: reference.clone(),
        }
    }

    pub fn reference(&self) -> &JointDist {
        &self.reference
    }

    pub fn sy(&self) -> &[f64] {
        &self.sy
    }

    pub fn sz(&self) -> &[f64] {
        &self.sz
    }

    /// Largest absolute deviation of `q`'s pair marginals from the reference,
    /// or infinity when the alphabets differ.
    pub fn margin_residual(&self, q: &JointDist) -> f64 {
        if q.s() != self.reference.s() || q.y() != self.reference.y() || q.z() != self.reference.z()
        {
            return f64::INFINITY;
        }
        let dev = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
        };
        dev(&q.marginal(&[Var::S, Var::Y]), &self.sy)
            .max(dev(&q.marginal(&[Var::S, Var::Z]), &self.sz))
    }

    pub fn contains(&self, q: &JointDist) -> bool {
        self.margin_residual(q) <= MARGIN_TOL
    }
}

/// Builds the polytope of `joint`.
pub fn polytope(joint: &JointDist) -> MarginPolytope {
    MarginPolytope::new(joint)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrojaResult {
    pub decomposition: Decomposition,
    /// A minimizer; not unique in general.
    pub q_star: JointDist,
    /// `Q*_{Y|Z}`.
    pub lambda_star: Channel,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `D(Q*‖λ×μ|π) − I_{Q*}(S;Y|Z)` for the `λ` that produced `Q*`.
    pub kkt_gap: f64,
    pub margin_residual: f64,
}

/// One `s` with positive mass: the rectangle `supp κ_s × supp μ_s` and the
/// margins that the fiber must match.
struct Fiber {
    s: usize,
    weight: f64,
    ys: Vec<usize>,
    zs: Vec<usize>,
    ky: Vec<f64>,
    mz: Vec<f64>,
}

struct AltMin {
    fibers: Vec<Fiber>,
    ny: usize,
    nz: usize,
    eps: f64,
    ipf: IpfOptions,
    /// Per-fiber projections from the last evaluation.
    q: Vec<Vec<f64>>,
    joint_yz: Vec<f64>,
}

impl AltMin {
    fn new(joint: &JointDist, eps: f64) -> Self {
        let (ns, ny, nz) = joint.dims();
        let mut fibers = Vec::new();
        for s in 0..ns {
            let mut ky = vec![0.0; ny];
            let mut mz = vec![0.0; nz];
            for y in 0..ny {
                for z in 0..nz {
                    let p = joint.get(s, y, z);
                    ky[y] += p;
                    mz[z] += p;
                }
            }
            let w: f64 = ky.iter().sum();
            if w <= 0.0 {
                continue;
            }
            let ys: Vec<usize> = (0..ny).filter(|&y| ky[y] > 0.0).collect();
            let zs: Vec<usize> = (0..nz).filter(|&z| mz[z] > 0.0).collect();
            fibers.push(Fiber {
                s,
                weight: w,
                ky: ys.iter().map(|&y| ky[y] / w).collect(),
                mz: zs.iter().map(|&z| mz[z] / w).collect(),
                ys,
                zs,
            });
        }
        let q = fibers
            .iter()
            .map(|f| vec![0.0; f.ys.len() * f.zs.len()])
            .collect();
        AltMin {
            fibers,
            ny,
            nz,
            eps,
            ipf: IpfOptions::default(),
            q,
            joint_yz: vec![0.0; nz * ny],
        }
    }

    fn smoothed(&self, lam: &[f64], z: usize, y: usize) -> f64 {
        (1.0 - self.eps) * lam[z * self.ny + y] + self.eps / self.ny as f64
    }

    /// `D(Q‖λ̃×μ|π)` for the current projections and the given `λ`.
    fn coupling_divergence(&self, lam: &[f64]) -> f64 {
        let mut d = 0.0;
        for (f, q) in self.fibers.iter().zip(&self.q) {
            let nzf = f.zs.len();
            for (i, &y) in f.ys.iter().enumerate() {
                for (j, &z) in f.zs.iter().enumerate() {
                    let v = q[i * nzf + j];
                    if v > 0.0 {
                        d += f.weight * v * (v / (self.smoothed(lam, z, y) * f.mz[j])).ln();
                    }
                }
            }
        }
        d / LN2
    }
}

impl DescentMap for AltMin {
    fn eval(&mut self, lam: &[f64], next: &mut [f64]) -> Eval {
        let (ny, nz) = (self.ny, self.nz);
        let mut residual: f64 = 0.0;
        self.joint_yz.fill(0.0);
        for k in 0..self.fibers.len() {
            let f = &self.fibers[k];
            let nzf = f.zs.len();
            let mut base = vec![0.0; f.ys.len() * nzf];
            for (i, &y) in f.ys.iter().enumerate() {
                for (j, &z) in f.zs.iter().enumerate() {
                    base[i * nzf + j] = self.smoothed(lam, z, y) * f.mz[j];
                }
            }
            let r = ipf::fit(&mut base, f.ys.len(), nzf, &f.ky, &f.mz, &self.ipf);
            residual = residual.max(r);
            for (i, &y) in f.ys.iter().enumerate() {
                for (j, &z) in f.zs.iter().enumerate() {
                    self.joint_yz[z * ny + y] += f.weight * base[i * nzf + j];
                }
            }
            self.q[k] = base;
        }
        // I_Q(S;Y|Z) = Σ q(s,y,z) log[q(s,y,z) q(z) / (q(s,z) q(y,z))]
        let qz: Vec<f64> = (0..nz)
            .map(|z| self.joint_yz[z * ny..(z + 1) * ny].iter().sum())
            .collect();
        let mut value = 0.0;
        for (f, q) in self.fibers.iter().zip(&self.q) {
            let nzf = f.zs.len();
            for (j, &z) in f.zs.iter().enumerate() {
                let col: f64 = (0..f.ys.len()).map(|i| q[i * nzf + j]).sum();
                for (i, &y) in f.ys.iter().enumerate() {
                    let v = q[i * nzf + j];
                    if v > 0.0 {
                        value +=
                            f.weight * v * (v * qz[z] / (col * self.joint_yz[z * ny + y])).ln();
                    }
                }
            }
        }
        for z in 0..nz {
            let row = &self.joint_yz[z * ny..(z + 1) * ny];
            let out = &mut next[z * ny..(z + 1) * ny];
            if qz[z] > 0.0 {
                for (o, &v) in out.iter_mut().zip(row) {
                    *o = v / qz[z];
                }
            } else {
                out.copy_from_slice(&lam[z * ny..(z + 1) * ny]);
            }
        }
        Eval {
            value: (value / LN2).max(0.0),
            residual,
        }
    }

    fn repair(&self, x: &mut [f64], anchor: &[f64]) {
        accel::repair_rows(x, anchor, self.ny, 1e-3);
    }

    fn on_iteration(&mut self, iteration: usize) {
        if iteration.is_multiple_of(ANNEAL_EVERY) {
            self.eps *= 0.5;
        }
    }
}

fn oriented(joint: &JointDist, target: Var) -> JointDist {
    match target {
        Var::Y => joint.clone(),
        Var::Z => joint.swap_yz(),
        Var::S => joint
            .permute([Var::Y, Var::S, Var::Z])
            .expect("fixed permutation is valid"),
    }
}

fn restore(q: JointDist, target: Var) -> JointDist {
    match target {
        Var::Y => q,
        Var::Z => q.swap_yz(),
        Var::S => q
            .permute([Var::Y, Var::S, Var::Z])
            .expect("fixed permutation is valid"),
    }
}

/// Solves `min_{Q∈Δ_P} I_Q(S;Y|Z)` on an already oriented joint.
fn solve(joint: &JointDist, opts: &DecompOptions) -> Result<BrojaResult> {
    opts.solver.validate()?;
    let joint = if opts.drop_null {
        joint.drop_null(Var::S)?
    } else {
        joint.clone()
    };
    if let Some(s) = joint.marginal(&[Var::S]).iter().position(|&p| p <= 0.0) {
        return Err(Error::NullSupport(joint.s().symbol(s).to_string()));
    }
    let (ns, ny, nz) = joint.dims();

    // λ⁰ = P_{Y|Z}
    let yz = joint.marginal(&[Var::Z, Var::Y]);
    let mut lam0 = vec![1.0 / ny as f64; nz * ny];
    for z in 0..nz {
        let row = &yz[z * ny..(z + 1) * ny];
        let m: f64 = row.iter().sum();
        if m > 0.0 {
            for y in 0..ny {
                lam0[z * ny + y] = row[y] / m;
            }
        }
    }

    let mut map = AltMin::new(&joint, opts.solver.smoothing_eps);
    let rule = StopRule {
        max_iterations: opts.solver.max_iterations,
        tol_residual: MARGIN_TOL,
        tol_objective: opts.solver.tol_objective,
        window: STALL_WINDOW,
    };
    let run = accel::run(&mut map, lam0, &rule);
    let kkt_gap = (map.coupling_divergence(&run.x) - run.value).max(0.0);

    let mut table = vec![0.0; ns * ny * nz];
    for (f, q) in map.fibers.iter().zip(&map.q) {
        let nzf = f.zs.len();
        for (i, &y) in f.ys.iter().enumerate() {
            for (j, &z) in f.zs.iter().enumerate() {
                table[(f.s * ny + y) * nz + z] = f.weight * q[i * nzf + j];
            }
        }
    }
    let q_star = JointDist::from_parts_unchecked(
        joint.s().clone(),
        joint.y().clone(),
        joint.z().clone(),
        table,
    );
    let margin_residual = MarginPolytope::new(&joint).margin_residual(&q_star);

    let mut lam = vec![1.0 / ny as f64; nz * ny];
    for z in 0..nz {
        let row = &map.joint_yz[z * ny..(z + 1) * ny];
        let m: f64 = row.iter().sum();
        if m > 0.0 {
            for y in 0..ny {
                lam[z * ny + y] = row[y] / m;
            }
        }
    }
    let lambda_star = Channel::from_flat_unchecked(joint.z().clone(), joint.y().clone(), lam);

    let sh = ShannonSummary::of(&joint);
    let ui = run.value;
    let raw = Components {
        ui_y: ui,
        si: sh.i_sy - ui,
        ui_z: sh.i_sz - sh.i_sy + ui,
        ci: sh.i_sy_given_z - ui,
    };
    let diagnostics = Diagnostics {
        converged: run.converged,
        iterations: run.iterations,
        objective_trace: run.trace.clone(),
        ..Diagnostics::default()
    };
    Ok(BrojaResult {
        decomposition: Decomposition::new(raw, MeasureTag::Broja, diagnostics),
        q_star,
        lambda_star,
        objective_trace: run.trace,
        converged: run.converged,
        iterations: run.iterations,
        kkt_gap,
        margin_residual,
    })
}

/// Minimum-synergy unique information of the variable `target` about the
/// other non-`Z` variable:
///
/// * `Y`: `UI(S;Y\Z)`
/// * `Z`: `UI(S;Z\Y)` (roles of `Y` and `Z` swapped)
/// * `S`: `UI(Y;S\Z)` (roles of `S` and `Y` swapped)
///
/// The components of the returned decomposition, `q_star` and
/// `lambda_star` are in the permuted roles; `q_star` is mapped back to the
/// original variable order.
pub fn ui_broja(joint: &JointDist, target: Var, opts: &DecompOptions) -> Result<BrojaResult> {
    let mut r = solve(&oriented(joint, target), opts)?;
    r.q_star = restore(r.q_star, target);
    Ok(r)
}

/// The full minimum-synergy decomposition. Runs both `UI(S;Y\Z)` and
/// `UI(S;Z\Y)`; every point of `Δ_P` satisfies
/// `I_Q(S;Y|Z) − I_Q(S;Z|Y) = I(S;Y) − I(S;Z)`, so the better of the two
/// minimizers determines all four components, and the other run serves
/// as a cross-check.
pub fn decompose_broja(joint: &JointDist, opts: &DecompOptions) -> Result<BrojaResult> {
    let y_run = ui_broja(joint, Var::Y, opts)?;
    let z_run = ui_broja(joint, Var::Z, opts)?;
    let j = if opts.drop_null {
        joint.drop_null(Var::S)?
    } else {
        joint.clone()
    };
    let sh = ShannonSummary::of(&j);
    let shift = sh.i_sy - sh.i_sz;
    let via_z = z_run.decomposition.ui_y + shift;
    let discrepancy = (y_run.decomposition.ui_y - via_z).abs();
    if discrepancy > CROSS_CHECK_TOL {
        return Err(Error::ConsistencyViolation(format!(
            "UI(S;Y\\Z) = {} but UI(S;Z\\Y) implies {}",
            y_run.decomposition.ui_y, via_z
        )));
    }
    let converged = y_run.converged && z_run.converged;
    let iterations = y_run.iterations + z_run.iterations;
    let mut best = if via_z
        < y_run
            .decomposition
            .diagnostics
            .raw
            .map_or(f64::INFINITY, |c| c.ui_y)
    {
        let mut r = z_run;
        let ui = r.decomposition.diagnostics.raw.map_or(0.0, |c| c.ui_y) + shift;
        // The swapped run reports λ: Y→Z; recompute Q*_{Y|Z} in original roles.
        r.lambda_star = forward_channel(&r.q_star);
        rebuild(r, &sh, ui)
    } else {
        let ui = y_run.decomposition.diagnostics.raw.map_or(0.0, |c| c.ui_y);
        rebuild(y_run, &sh, ui)
    };
    best.converged = converged;
    best.iterations = iterations;
    best.decomposition.diagnostics.converged = converged;
    best.decomposition.diagnostics.iterations = iterations;
    best.decomposition.diagnostics.cross_check = Some(discrepancy);
    Ok(best)
}

fn rebuild(mut r: BrojaResult, sh: &ShannonSummary, ui: f64) -> BrojaResult {
    let raw = Components {
        ui_y: ui,
        si: sh.i_sy - ui,
        ui_z: sh.i_sz - sh.i_sy + ui,
        ci: sh.i_sy_given_z - ui,
    };
    let diagnostics = std::mem::take(&mut r.decomposition.diagnostics);
    r.decomposition = Decomposition::new(raw, MeasureTag::Broja, diagnostics);
    r
}

/// `Q_{Y|Z}` of a joint, uniform on zero-mass `z`.
fn forward_channel(q: &JointDist) -> Channel {
    let (_, ny, nz) = q.dims();
    let zy = q.marginal(&[Var::Z, Var::Y]);
    let mut rows = vec![1.0 / ny as f64; nz * ny];
    for z in 0..nz {
        let m: f64 = zy[z * ny..(z + 1) * ny].iter().sum();
        if m > 0.0 {
            for y in 0..ny {
                rows[z * ny + y] = zy[z * ny + y] / m;
            }
        }
    }
    Channel::from_flat_unchecked(q.z().clone(), q.y().clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::{cond_mutual_info, Alphabet};

    fn bits() -> Alphabet {
        Alphabet::range(2)
    }

    fn xor() -> JointDist {
        JointDist::from_atoms(
            bits(),
            bits(),
            bits(),
            [
                ("0", "0", "0", 0.25),
                ("1", "0", "1", 0.25),
                ("1", "1", "0", 0.25),
                ("0", "1", "1", 0.25),
            ],
        )
        .unwrap()
    }

    fn rdn() -> JointDist {
        JointDist::from_atoms(
            bits(),
            bits(),
            bits(),
            [("0", "0", "0", 0.5), ("1", "1", "1", 0.5)],
        )
        .unwrap()
    }

    #[test]
    fn polytope_membership() {
        let p = xor();
        let poly = polytope(&p);
        assert!(poly.contains(&p));
        let mut t = p.table().to_vec();
        t[0] += 0.01;
        t[3] -= 0.01;
        let bent = JointDist::new(p.s().clone(), p.y().clone(), p.z().clone(), t).unwrap();
        assert!(!poly.contains(&bent));
    }

    #[test]
    fn xor_and_rdn() {
        let o = DecompOptions::default();
        let x = decompose_broja(&xor(), &o).unwrap();
        let d = &x.decomposition;
        assert!(d.ui_y < 1e-6 && d.ui_z < 1e-6 && d.si < 1e-6, "{d:?}");
        assert!((d.ci - 1.0).abs() < 1e-6);
        let r = decompose_broja(&rdn(), &o).unwrap();
        let d = &r.decomposition;
        assert!(d.ui_y < 1e-6 && d.ui_z < 1e-6 && d.ci < 1e-6, "{d:?}");
        assert!((d.si - 1.0).abs() < 1e-6);
    }

    #[test]
    fn q_star_is_feasible_and_attains_value() {
        let p = JointDist::new(
            bits(),
            bits(),
            bits(),
            vec![0.1, 0.2, 0.05, 0.15, 0.2, 0.05, 0.15, 0.1],
        )
        .unwrap();
        let r = ui_broja(&p, Var::Y, &DecompOptions::default()).unwrap();
        assert!(r.converged);
        assert!(polytope(&p).contains(&r.q_star));
        let i = cond_mutual_info(&r.q_star, &[Var::S], &[Var::Y], &[Var::Z]);
        assert!((i - r.decomposition.ui_y).abs() < 1e-9);
        assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    }
}

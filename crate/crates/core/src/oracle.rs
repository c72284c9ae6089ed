//! Brute-force references for tiny instances and seeded random instances.
//!
//! Oracle values are minima over finite grids of feasible points, so they
//! upper-bound the true minimum. The objectives are convex, which gives a
//! certified lower bound at any feasible point `x`:
//! `f* ≥ f(x) − gap(x)` with `gap(x) = max_{x'} ⟨∇f(x), x − x'⟩` (the
//! Frank–Wolfe gap). `resolution_bound` is the distance from the oracle
//! value to such a certified lower bound, so it bounds the oracle error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::probcore::{
    cond_mutual_info, optimal_risk, Alphabet, Channel, DecisionProblem, JointDist, Prior, Var,
};

const LN2: f64 = std::f64::consts::LN_2;

/// Added to every resolution bound to absorb floating-point error in the
/// objective evaluations.
const NUMERIC_FLOOR: f64 = 1e-9;

/// Hard cap on grid evaluations.
pub const MAX_EVALUATIONS: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Bits.
    pub value: f64,
    /// `|value − true minimum| ≤ resolution_bound`.
    pub resolution_bound: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeficiencyKind {
    Output,
    Input,
}

/// All points of the probability simplex on `n` symbols whose coordinates
/// are multiples of `1/k`.
fn simplex_grid(n: usize, k: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == n - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / k as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(n, left - c, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, k, &mut Vec::new(), &mut out);
    out
}

fn grid_divisions(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidOptions("grid step must lie in (0, 1]".into()));
    }
    Ok((1.0 / step).round().max(1.0) as usize)
}

/// Objective and Frank–Wolfe gap (nats) of `Σ_s π(s) D(κ_s ‖ λ∘μ_s)`.
fn output_objective(pi: &[f64], mu: &Channel, kappa: &Channel, lam: &[f64]) -> (f64, f64) {
    let (ny, nz) = (kappa.n_out(), mu.n_out());
    let mut f = 0.0;
    let mut g = vec![0.0; nz * ny];
    for (s, &p) in pi.iter().enumerate() {
        for y in 0..ny {
            let k = kappa.get(s, y);
            if p == 0.0 || k == 0.0 {
                continue;
            }
            let m: f64 = (0..nz).map(|z| mu.get(s, z) * lam[z * ny + y]).sum();
            if m <= 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            f += p * k * (k / m).ln();
            for z in 0..nz {
                g[z * ny + y] += p * k * mu.get(s, z) / m;
            }
        }
    }
    let gap = (0..nz)
        .map(|z| {
            let row = &g[z * ny..(z + 1) * ny];
            let max = row.iter().copied().fold(0.0, f64::max);
            max - row
                .iter()
                .zip(&lam[z * ny..(z + 1) * ny])
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .sum();
    (f, gap)
}

/// Objective and Frank–Wolfe gap (nats) of `D(t ‖ Σ_z w_z p_z)`.
fn mixture_objective(t: &[f64], points: &Channel, w: &[f64]) -> (f64, f64) {
    let ns = t.len();
    let m: Vec<f64> = (0..ns)
        .map(|s| (0..w.len()).map(|z| w[z] * points.get(z, s)).sum())
        .collect();
    let mut f = 0.0;
    for s in 0..ns {
        if t[s] > 0.0 {
            if m[s] <= 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            f += t[s] * (t[s] / m[s]).ln();
        }
    }
    let g: Vec<f64> = (0..w.len())
        .map(|z| {
            (0..ns)
                .filter(|&s| t[s] > 0.0)
                .map(|s| t[s] * points.get(z, s) / m[s])
                .sum()
        })
        .collect();
    let max = g.iter().copied().fold(0.0, f64::max);
    (f, max - g.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
}

/// Grid minimum of a weighted deficiency.
///
/// * `Output`: `min_λ Σ_s π(s) D(κ_s ‖ λ∘μ_s)` with `μ: S→Z`, `κ: S→Y`.
/// * `Input`: `min_λ̄ Σ_y π(y) D(κ̄_y ‖ μ̄ᵀλ̄_y)` with `μ̄: Z→S`, `κ̄: Y→S`
///   and `prior` over `Y`.
///
/// At most four free parameters are allowed.
pub fn grid_deficiency_oracle(
    prior: &Prior,
    mu: &Channel,
    kappa: &Channel,
    step: f64,
    kind: DeficiencyKind,
) -> Result<OracleResult> {
    let k = grid_divisions(step)?;
    match kind {
        DeficiencyKind::Output => {
            if mu.input() != kappa.input() || prior.alphabet() != mu.input() {
                return Err(Error::AlphabetMismatch(
                    "channels and prior must share S".into(),
                ));
            }
            let (ny, nz) = (kappa.n_out(), mu.n_out());
            if nz * (ny - 1) > 4 {
                return Err(Error::TooLarge(format!(
                    "{} free parameters (limit 4)",
                    nz * (ny - 1)
                )));
            }
            let rows = simplex_grid(ny, k);
            let total = (rows.len() as u64)
                .checked_pow(nz as u32)
                .unwrap_or(u64::MAX);
            if total > MAX_EVALUATIONS {
                return Err(Error::TooLarge(format!("{total} grid points")));
            }
            let mut idx = vec![0usize; nz];
            let mut lam = vec![0.0; nz * ny];
            let mut best = (f64::INFINITY, f64::INFINITY);
            for _ in 0..total {
                for z in 0..nz {
                    lam[z * ny..(z + 1) * ny].copy_from_slice(&rows[idx[z]]);
                }
                let (f, gap) = output_objective(prior.mass(), mu, kappa, &lam);
                if f < best.0 {
                    best = (f, gap);
                }
                for d in idx.iter_mut() {
                    *d += 1;
                    if *d < rows.len() {
                        break;
                    }
                    *d = 0;
                }
            }
            Ok(OracleResult {
                value: best.0 / LN2,
                resolution_bound: best.1 / LN2 + NUMERIC_FLOOR,
                evaluations: total,
            })
        }
        DeficiencyKind::Input => {
            if mu.output() != kappa.output() || prior.alphabet() != kappa.input() {
                return Err(Error::AlphabetMismatch(
                    "reverse channels must share S and the prior must match κ̄".into(),
                ));
            }
            let (ny, nz) = (kappa.n_in(), mu.n_in());
            if ny * (nz - 1) > 4 {
                return Err(Error::TooLarge(format!(
                    "{} free parameters (limit 4)",
                    ny * (nz - 1)
                )));
            }
            // The objective separates over y, so the product-grid minimum is
            // the sum of the per-y grid minima.
            let rows = simplex_grid(nz, k);
            let mut value = 0.0;
            let mut gap = 0.0;
            for (y, &p) in prior.mass().iter().enumerate() {
                let mut best = (f64::INFINITY, f64::INFINITY);
                for w in &rows {
                    let r = mixture_objective(kappa.row(y), mu, w);
                    if r.0 < best.0 {
                        best = r;
                    }
                }
                if p > 0.0 {
                    value += p * best.0;
                    gap += p * best.1;
                }
            }
            Ok(OracleResult {
                value: value / LN2,
                resolution_bound: gap / LN2 + NUMERIC_FLOOR,
                evaluations: (rows.len() as u64).pow(ny as u32),
            })
        }
    }
}

/// One segment fiber: `Q_s = [[t, a₀−t], [b₀−t, 1−a₀−b₀+t]]` on the support
/// rectangle `ys × zs`, or a single fixed point.
struct Segment {
    s: usize,
    weight: f64,
    ys: Vec<usize>,
    zs: Vec<usize>,
    a0: f64,
    b0: f64,
    lo: f64,
    hi: f64,
}

impl Segment {
    fn cells(&self, t: f64) -> Vec<((usize, usize), f64, f64)> {
        // ((y, z), Q_s(y,z), sign of dQ/dt)
        match (self.ys.len(), self.zs.len()) {
            (2, 2) => vec![
                ((self.ys[0], self.zs[0]), t, 1.0),
                ((self.ys[0], self.zs[1]), self.a0 - t, -1.0),
                ((self.ys[1], self.zs[0]), self.b0 - t, -1.0),
                ((self.ys[1], self.zs[1]), 1.0 - self.a0 - self.b0 + t, 1.0),
            ],
            _ => Vec::new(),
        }
    }
}

/// Grid minimum of `I_Q(S;Y|Z)` over `Δ_P`, for joints whose per-`s`
/// support rectangles are at most 2×2 (each fiber is a segment or a point).
/// Grid points are cell midpoints, so every evaluated `Q` lies in the
/// relative interior of its fiber.
pub fn grid_ui_oracle(joint: &JointDist, step: f64) -> Result<OracleResult> {
    let k = grid_divisions(step)?;
    let (ns, ny, nz) = joint.dims();
    let mut fixed = vec![0.0; ns * ny * nz];
    let mut segs = Vec::new();
    for s in 0..ns {
        let w: f64 = (0..ny)
            .flat_map(|y| (0..nz).map(move |z| (y, z)))
            .map(|(y, z)| joint.get(s, y, z))
            .sum();
        if w <= 0.0 {
            continue;
        }
        let ky: Vec<f64> = (0..ny)
            .map(|y| (0..nz).map(|z| joint.get(s, y, z)).sum::<f64>() / w)
            .collect();
        let mz: Vec<f64> = (0..nz)
            .map(|z| (0..ny).map(|y| joint.get(s, y, z)).sum::<f64>() / w)
            .collect();
        let ys: Vec<usize> = (0..ny).filter(|&y| ky[y] > 0.0).collect();
        let zs: Vec<usize> = (0..nz).filter(|&z| mz[z] > 0.0).collect();
        if ys.len() > 2 || zs.len() > 2 {
            return Err(Error::TooLarge(format!(
                "fiber of s = {} has dimension {}",
                joint.s().symbol(s),
                (ys.len() - 1) * (zs.len() - 1)
            )));
        }
        if ys.len() == 2 && zs.len() == 2 {
            let (a0, b0) = (ky[ys[0]], mz[zs[0]]);
            segs.push(Segment {
                s,
                weight: w,
                lo: (a0 + b0 - 1.0).max(0.0),
                hi: a0.min(b0),
                a0,
                b0,
                ys,
                zs,
            });
        } else {
            // A single point: the fiber is P_{YZ|s} itself.
            for y in 0..ny {
                for z in 0..nz {
                    fixed[(s * ny + y) * nz + z] = joint.get(s, y, z);
                }
            }
        }
    }
    let n_points: Vec<usize> = segs
        .iter()
        .map(|g| if g.hi > g.lo { k + 1 } else { 1 })
        .collect();
    let total = n_points
        .iter()
        .try_fold(1u64, |acc, &n| acc.checked_mul(n as u64))
        .unwrap_or(u64::MAX);
    if total > MAX_EVALUATIONS {
        return Err(Error::TooLarge(format!("{total} grid points")));
    }
    let build = |ts: &[f64]| {
        let mut table = fixed.clone();
        for (g, &t) in segs.iter().zip(ts) {
            for ((y, z), q, _) in g.cells(t) {
                table[(g.s * ny + y) * nz + z] = g.weight * q.max(0.0);
            }
        }
        JointDist::from_parts_unchecked(
            joint.s().clone(),
            joint.y().clone(),
            joint.z().clone(),
            table,
        )
    };

    // Grid points include the segment ends, so halving the step refines the
    // grid. The certificate needs finite gradients and is taken at the best
    // point in the relative interior of every segment.
    let mut idx = vec![0usize; segs.len()];
    let mut best = f64::INFINITY;
    let mut best_inner = (f64::INFINITY, Vec::new());
    for _ in 0..total {
        let ts: Vec<f64> = segs
            .iter()
            .zip(&idx)
            .zip(&n_points)
            .map(|((g, &i), &n)| {
                if n == 1 {
                    g.lo
                } else {
                    g.lo + i as f64 * (g.hi - g.lo) / k as f64
                }
            })
            .collect();
        let v = cond_mutual_info(&build(&ts), &[Var::S], &[Var::Y], &[Var::Z]);
        best = best.min(v);
        let inner = idx
            .iter()
            .zip(&n_points)
            .all(|(&i, &n)| n == 1 || (i > 0 && i < k));
        if inner && v < best_inner.0 {
            best_inner = (v, ts);
        }
        for (d, &n) in idx.iter_mut().zip(&n_points) {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    if best_inner.1.len() != segs.len() {
        // Only possible with k = 1 and a non-trivial segment.
        return Err(Error::InvalidOptions(
            "grid step too coarse for a certificate".into(),
        ));
    }

    // Frank–Wolfe gap over the box of segment parameters.
    let (f_inner, ts) = best_inner;
    let q = build(&ts);
    let qz = q.marginal(&[Var::Z]);
    let qsz = q.marginal(&[Var::S, Var::Z]);
    let qyz = q.marginal(&[Var::Y, Var::Z]);
    let mut gap = 0.0;
    for (g, &t) in segs.iter().zip(&ts) {
        if g.hi <= g.lo {
            continue;
        }
        let mut d = 0.0;
        for ((y, z), _, sign) in g.cells(t) {
            let v = q.get(g.s, y, z);
            d += sign
                * g.weight
                * (v.log2() + qz[z].log2() - qsz[g.s * nz + z].log2() - qyz[y * nz + z].log2());
        }
        gap += (d * (t - g.lo)).max(d * (t - g.hi));
    }
    let lower = f_inner - gap.max(0.0);
    Ok(OracleResult {
        value: best,
        resolution_bound: (best - lower).max(0.0) + NUMERIC_FLOOR,
        evaluations: total,
    })
}

/// Shape and randomness of a generated joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub sizes: (usize, usize, usize),
    pub seed: u64,
    /// Probability that an atom is forced to zero.
    pub sparsity: f64,
}

impl InstanceSpec {
    pub fn new(ns: usize, ny: usize, nz: usize, seed: u64) -> Self {
        InstanceSpec {
            sizes: (ns, ny, nz),
            seed,
            sparsity: 0.0,
        }
    }
}

/// Flat Dirichlet sample (normalized standard exponentials).
pub fn dirichlet(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Random joint, reproducible from the seed. Sparse instances keep at
/// least one atom.
pub fn random_joint(spec: InstanceSpec) -> JointDist {
    let (ns, ny, nz) = spec.sizes;
    assert!(
        ns > 0 && ny > 0 && nz > 0,
        "alphabet sizes must be positive"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = ns * ny * nz;
    let mut t = dirichlet(&mut rng, n);
    if spec.sparsity > 0.0 {
        let keep = rng.random_range(0..n);
        for (i, v) in t.iter_mut().enumerate() {
            if i != keep && rng.random::<f64>() < spec.sparsity {
                *v = 0.0;
            }
        }
        let s: f64 = t.iter().sum();
        t.iter_mut().for_each(|x| *x /= s);
    }
    JointDist::from_parts_unchecked(
        Alphabet::range(ns),
        Alphabet::range(ny),
        Alphabet::range(nz),
        t,
    )
}

/// Random channel with Dirichlet rows.
pub fn random_channel(n_in: usize, n_out: usize, seed: u64) -> Channel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<f64> = (0..n_in).flat_map(|_| dirichlet(&mut rng, n_out)).collect();
    Channel::from_flat_unchecked(Alphabet::range(n_in), Alphabet::range(n_out), rows)
}

/// Random full-support prior.
pub fn random_prior(n: usize, seed: u64) -> Prior {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Prior::new(Alphabet::range(n), dirichlet(&mut rng, n))
        .expect("Dirichlet sample is a distribution")
}

/// Random decision problem with `‖ℓ‖_∞ = 1`.
pub fn random_decision_problem(prior: &Prior, n_actions: usize, seed: u64) -> DecisionProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loss: Vec<f64> = (0..prior.len() * n_actions)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let norm = loss.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    if norm > 0.0 {
        loss.iter_mut().for_each(|l| *l /= norm);
    }
    DecisionProblem::new(prior.clone(), Alphabet::range(n_actions), loss).expect("finite loss")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskProbe {
    /// Largest observed `R(κ) − R(μ)`.
    pub kappa_minus_mu: f64,
    /// Largest observed `R(μ) − R(κ)`.
    pub mu_minus_kappa: f64,
}

/// Optimal-risk gaps over the 0–1 loss and `n_problems` random losses with
/// `‖ℓ‖_∞ = 1` and between 2 and `|Y| + |Z|` actions.
pub fn risk_dominance_probe(
    prior: &Prior,
    mu: &Channel,
    kappa: &Channel,
    n_problems: usize,
    seed: u64,
) -> Result<RiskProbe> {
    let mut probe = RiskProbe {
        kappa_minus_mu: f64::NEG_INFINITY,
        mu_minus_kappa: f64::NEG_INFINITY,
    };
    let mut record = |dp: &DecisionProblem| -> Result<()> {
        let d = optimal_risk(dp, kappa)? - optimal_risk(dp, mu)?;
        probe.kappa_minus_mu = probe.kappa_minus_mu.max(d);
        probe.mu_minus_kappa = probe.mu_minus_kappa.max(-d);
        Ok(())
    };
    record(&DecisionProblem::zero_one(prior.clone()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_actions = (kappa.n_out() + mu.n_out()).max(2);
    for _ in 0..n_problems {
        let na = rng.random_range(2..=max_actions);
        let dp = random_decision_problem(prior, na, rng.random());
        record(&dp)?;
    }
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::validate_joint;

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(simplex_grid(2, 4).len(), 5);
        assert_eq!(simplex_grid(3, 2).len(), 6);
        assert!(simplex_grid(3, 5)
            .iter()
            .all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn equal_channels_give_zero() {
        let mu = random_channel(2, 2, 3);
        let pi = random_prior(2, 4);
        let r = grid_deficiency_oracle(&pi, &mu, &mu, 0.05, DeficiencyKind::Output).unwrap();
        assert!(r.value.abs() < 1e-12 && r.resolution_bound < 1e-6, "{r:?}");
    }

    #[test]
    fn too_many_parameters() {
        let mu = random_channel(2, 3, 1);
        let kappa = random_channel(2, 3, 2);
        let e = grid_deficiency_oracle(
            &random_prior(2, 0),
            &mu,
            &kappa,
            0.1,
            DeficiencyKind::Output,
        );
        assert!(matches!(e, Err(Error::TooLarge(_))));
    }

    #[test]
    fn rdn_is_a_point() {
        let b = Alphabet::range(2);
        let j = JointDist::from_atoms(
            b.clone(),
            b.clone(),
            b,
            [("0", "0", "0", 0.5), ("1", "1", "1", 0.5)],
        )
        .unwrap();
        let r = grid_ui_oracle(&j, 0.01).unwrap();
        assert!(r.value.abs() < 1e-12);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn generators_are_deterministic_and_valid() {
        let spec = InstanceSpec::new(2, 2, 2, 99);
        assert_eq!(random_joint(spec), random_joint(spec));
        assert!(random_joint(spec).table().iter().all(|&p| p > 0.0));
        for seed in 0..1000 {
            let j = random_joint(InstanceSpec {
                sparsity: 0.3,
                ..InstanceSpec::new(2, 2, 2, seed)
            });
            let raw = crate::probcore::RawJoint {
                s: j.s().clone(),
                y: j.y().clone(),
                z: j.z().clone(),
                table: j.table().to_vec(),
            };
            validate_joint(raw, Default::default()).unwrap();
        }
    }

    #[test]
    fn probe_identity_vs_blind() {
        let a = Alphabet::range(2);
        let pi = Prior::uniform(a.clone());
        let p = risk_dominance_probe(
            &pi,
            &Channel::uniform(a.clone(), a.clone()),
            &Channel::identity(a),
            20,
            0,
        )
        .unwrap();
        assert!(p.mu_minus_kappa >= 0.5 - 1e-12);
        let only_zero_one = risk_dominance_probe(
            &pi,
            &Channel::uniform(Alphabet::range(2), Alphabet::range(2)),
            &Channel::identity(Alphabet::range(2)),
            0,
            0,
        )
        .unwrap();
        assert!((only_zero_one.mu_minus_kappa - 0.5).abs() < 1e-12);
        assert!(p.kappa_minus_mu <= 1e-12);
    }
}

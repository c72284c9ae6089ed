//! Weighted output and input deficiencies, degradation tests and witness
//! losses for the Blackwell order.
//!
//! `δ_o(μ,κ) = min_λ Σ_s π(s) D(κ_s ‖ (λ∘μ)_s)` measures how far `κ` is from
//! being a garbling of `μ`. `δ_i(μ̄,κ̄) = Σ_y π(y) min_{λ̄_y} D(κ̄_y ‖ μ̄ᵀλ̄_y)`
//! does the same with the randomization in front of the channel.
//!
//! Both are mixture-KL programs and are solved by multiplicative EM updates
//! with squared extrapolation. The stationarity residual reported is the
//! Frank–Wolfe gap, which bounds the distance to the optimum from above.

mod order;
mod witness;

pub use order::{degradation_test, input_degradation_test, OrderCertificate};
pub use witness::{witness_loss_search, SearchBudget};

use serde::Serialize;

use crate::accel::{self, DescentMap, Eval, StopRule};
use crate::error::{Error, Result};
use crate::probcore::{kl_slices, Alphabet, Channel, Prior};

const LN2: f64 = std::f64::consts::LN_2;

/// Floor applied to extrapolated points, relative to the last plain EM step.
const REPAIR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Relative change of the objective between iterations.
    pub tol_objective: f64,
    /// Stationarity (Frank–Wolfe gap) threshold, in bits.
    pub tol_kkt: f64,
    pub max_iterations: usize,
    /// Mass of the uniform component mixed into the model when the objective
    /// is infinite at the starting point.
    pub smoothing_eps: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_objective: 1e-10,
            tol_kkt: 1e-8,
            max_iterations: 100_000,
            smoothing_eps: 1e-12,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.tol_objective) && ok(self.tol_kkt) && ok(self.smoothing_eps))
            || self.max_iterations == 0
        {
            return Err(Error::InvalidOptions(
                "thresholds and iteration budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Default tolerance for the degradation LPs (L1 gap).
pub const ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyResult {
    /// Bits.
    pub value: f64,
    /// The minimizing `λ` (output side) or `λ̄` (input side).
    pub randomizer: Channel,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

impl DeficiencyResult {
    /// `Err(NotConverged)` when the solver stopped on its iteration budget.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.kkt_residual,
            })
        }
    }
}

fn stop_rule(opts: &SolverOptions) -> StopRule {
    StopRule {
        max_iterations: opts.max_iterations,
        tol_residual: opts.tol_kkt,
        tol_objective: opts.tol_objective,
        window: 1,
    }
}

fn normalize_rows(x: &mut [f64], block: usize) {
    for row in x.chunks_mut(block) {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            row.fill(1.0 / block as f64);
        }
    }
}

/// EM map for `λ ↦ Σ_s π(s) D(κ_s ‖ λ∘μ_s)`; `λ` is stored row-major `[z][y]`.
struct OutputMap<'a> {
    pi: &'a [f64],
    mu: &'a [f64],
    kappa: &'a [f64],
    ny: usize,
    nz: usize,
    m: Vec<f64>,
    g: Vec<f64>,
}

impl DescentMap for OutputMap<'_> {
    fn eval(&mut self, lam: &[f64], next: &mut [f64]) -> Eval {
        let (ny, nz) = (self.ny, self.nz);
        let mut value = 0.0;
        self.g.fill(0.0);
        for (s, &p) in self.pi.iter().enumerate() {
            let mu_s = &self.mu[s * nz..(s + 1) * nz];
            let m = &mut self.m[..ny];
            m.fill(0.0);
            for (z, &w) in mu_s.iter().enumerate() {
                if w > 0.0 {
                    for (mi, &l) in m.iter_mut().zip(&lam[z * ny..(z + 1) * ny]) {
                        *mi += w * l;
                    }
                }
            }
            for y in 0..ny {
                let k = self.kappa[s * ny + y];
                if p == 0.0 || k == 0.0 {
                    continue;
                }
                if m[y] <= 0.0 {
                    value = f64::INFINITY;
                    continue;
                }
                value += p * k * (k / m[y]).ln();
                let c = p * k / m[y];
                for (z, &w) in mu_s.iter().enumerate() {
                    self.g[z * ny + y] += c * w;
                }
            }
        }
        let mut gap = 0.0;
        for z in 0..nz {
            let g = &self.g[z * ny..(z + 1) * ny];
            let l = &lam[z * ny..(z + 1) * ny];
            let t: f64 = g.iter().zip(l).map(|(a, b)| a * b).sum();
            let gmax = g.iter().copied().fold(0.0, f64::max);
            gap += gmax - t;
            let out = &mut next[z * ny..(z + 1) * ny];
            if t > 0.0 {
                for ((o, &a), &b) in out.iter_mut().zip(g).zip(l) {
                    *o = a * b / t;
                }
            } else {
                out.copy_from_slice(l);
            }
        }
        Eval {
            value: value / LN2,
            residual: gap.max(0.0) / LN2,
        }
    }

    fn repair(&self, x: &mut [f64], anchor: &[f64]) {
        accel::repair_rows(x, anchor, self.ny, REPAIR_FLOOR);
    }
}

fn check_output_args(prior: &Prior, mu: &Channel, kappa: &Channel) -> Result<()> {
    if mu.input() != kappa.input() {
        return Err(Error::AlphabetMismatch(
            "both channels must read the same input alphabet".into(),
        ));
    }
    if prior.alphabet() != mu.input() {
        return Err(Error::AlphabetMismatch(
            "prior alphabet differs from the channel input".into(),
        ));
    }
    Ok(())
}

/// Weighted output deficiency `δ_o^π(μ,κ)` in bits: how much `κ` fails to be
/// a garbling `λ∘μ` of `μ`. The randomizer maps `μ`'s outputs to `κ`'s.
///
/// A run that exhausts `max_iterations` returns the best iterate with
/// `converged = false`.
pub fn output_deficiency(
    prior: &Prior,
    mu: &Channel,
    kappa: &Channel,
    opts: &SolverOptions,
) -> Result<DeficiencyResult> {
    opts.validate()?;
    check_output_args(prior, mu, kappa)?;
    let (ny, nz) = (kappa.n_out(), mu.n_out());
    let mut map = OutputMap {
        pi: prior.mass(),
        mu: mu.as_flat(),
        kappa: kappa.as_flat(),
        ny,
        nz,
        m: vec![0.0; ny],
        g: vec![0.0; nz * ny],
    };
    // The uniform start gives every output of κ positive model mass, so the
    // objective is finite from the first iterate and no smoothing is needed.
    let run = accel::run(&mut map, vec![1.0 / ny as f64; nz * ny], &stop_rule(opts));
    let mut lam = run.x;
    normalize_rows(&mut lam, ny);
    Ok(DeficiencyResult {
        value: run.value.max(0.0),
        randomizer: Channel::from_flat_unchecked(mu.output().clone(), kappa.output().clone(), lam),
        iterations: run.iterations,
        kkt_residual: run.residual,
        converged: run.converged,
        objective_trace: run.trace,
    })
}

/// Result of a reverse I-projection onto the convex hull of finitely many
/// distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct RiProjection {
    pub weights: Vec<f64>,
    /// `D(target ‖ Σ_z w_z p_z)` in bits.
    pub divergence: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

struct MixtureMap<'a> {
    target: &'a [f64],
    /// Hull points, row-major `[z][s]`.
    points: &'a [f64],
    ns: usize,
    m: Vec<f64>,
    g: Vec<f64>,
}

impl DescentMap for MixtureMap<'_> {
    fn eval(&mut self, w: &[f64], next: &mut [f64]) -> Eval {
        let ns = self.ns;
        self.m.fill(0.0);
        for (z, &wz) in w.iter().enumerate() {
            if wz > 0.0 {
                for (mi, &p) in self.m.iter_mut().zip(&self.points[z * ns..(z + 1) * ns]) {
                    *mi += wz * p;
                }
            }
        }
        let mut value = 0.0;
        for (s, &t) in self.target.iter().enumerate() {
            if t > 0.0 {
                value += if self.m[s] > 0.0 {
                    t * (t / self.m[s]).ln()
                } else {
                    f64::INFINITY
                };
            }
        }
        for (z, g) in self.g.iter_mut().enumerate() {
            let p = &self.points[z * ns..(z + 1) * ns];
            *g = (0..ns)
                .filter(|&s| self.target[s] > 0.0 && self.m[s] > 0.0)
                .map(|s| self.target[s] * p[s] / self.m[s])
                .sum();
        }
        let t: f64 = self.g.iter().zip(w).map(|(a, b)| a * b).sum();
        let gmax = self.g.iter().copied().fold(0.0, f64::max);
        if t > 0.0 {
            for ((o, &g), &wz) in next.iter_mut().zip(&self.g).zip(w) {
                *o = wz * g / t;
            }
        } else {
            next.copy_from_slice(w);
        }
        Eval {
            value: value / LN2,
            residual: (gmax - t).max(0.0) / LN2,
        }
    }

    fn repair(&self, x: &mut [f64], anchor: &[f64]) {
        accel::repair_rows(x, anchor, x.len(), REPAIR_FLOOR);
    }
}

fn ri_project_slices(
    target: &[f64],
    points: &[f64],
    nz: usize,
    opts: &SolverOptions,
) -> RiProjection {
    let ns = target.len();
    let finished = |weights: Vec<f64>, divergence: f64| RiProjection {
        weights,
        divergence,
        iterations: 0,
        kkt_residual: 0.0,
        converged: true,
        objective_trace: vec![divergence],
    };
    if nz == 1 {
        return finished(vec![1.0], kl_slices(target, points));
    }
    // Mass outside the union of the hull supports cannot be covered by any
    // mixture: the distance is infinite for every weight vector.
    let uncovered = (0..ns).any(|s| target[s] > 0.0 && (0..nz).all(|z| points[z * ns + s] <= 0.0));
    if uncovered {
        return finished(vec![1.0 / nz as f64; nz], f64::INFINITY);
    }
    let mut map = MixtureMap {
        target,
        points,
        ns,
        m: vec![0.0; ns],
        g: vec![0.0; nz],
    };
    let run = accel::run(&mut map, vec![1.0 / nz as f64; nz], &stop_rule(opts));
    let mut w = run.x;
    normalize_rows(&mut w, nz);
    RiProjection {
        weights: w,
        divergence: run.value.max(0.0),
        iterations: run.iterations,
        kkt_residual: run.residual,
        converged: run.converged,
        objective_trace: run.trace,
    }
}

/// Minimizes `D(target ‖ Σ_z w_z·hull_z)` over the simplex.
pub fn ri_projection(target: &Prior, hull: &[Prior], opts: &SolverOptions) -> Result<RiProjection> {
    opts.validate()?;
    if hull.is_empty() {
        return Err(Error::InvalidOptions("need at least one hull point".into()));
    }
    if hull.iter().any(|p| p.alphabet() != target.alphabet()) {
        return Err(Error::AlphabetMismatch(
            "hull points and target must share an alphabet".into(),
        ));
    }
    let points: Vec<f64> = hull.iter().flat_map(|p| p.mass().iter().copied()).collect();
    Ok(ri_project_slices(target.mass(), &points, hull.len(), opts))
}

/// Weighted input deficiency `δ_i^π(μ̄,κ̄)` in bits, where `μ̄: Z→S`,
/// `κ̄: Y→S` and the randomizer `λ̄: Y→Z` acts in front of `μ̄`. Solved as
/// one reverse I-projection per `y`.
pub fn input_deficiency(
    prior_y: &Prior,
    mu_bar: &Channel,
    kappa_bar: &Channel,
    opts: &SolverOptions,
) -> Result<DeficiencyResult> {
    opts.validate()?;
    if mu_bar.output() != kappa_bar.output() {
        return Err(Error::AlphabetMismatch(
            "reverse channels must share the output alphabet".into(),
        ));
    }
    if prior_y.alphabet() != kappa_bar.input() {
        return Err(Error::AlphabetMismatch(
            "prior alphabet differs from the input of κ̄".into(),
        ));
    }
    let nz = mu_bar.n_in();
    let per_y: Vec<RiProjection> = kappa_bar
        .rows()
        .map(|row| ri_project_slices(row, mu_bar.as_flat(), nz, opts))
        .collect();
    Ok(combine_projections(prior_y, mu_bar.input(), per_y))
}

fn combine_projections(
    prior_y: &Prior,
    z: &Alphabet,
    per_y: Vec<RiProjection>,
) -> DeficiencyResult {
    let w = prior_y.mass();
    let mut value = 0.0;
    let mut kkt = 0.0;
    for (p, r) in w.iter().zip(&per_y) {
        if *p > 0.0 {
            value += p * r.divergence;
            kkt += p * r.kkt_residual;
        }
    }
    let len = per_y
        .iter()
        .map(|r| r.objective_trace.len())
        .max()
        .unwrap_or(1);
    let trace = (0..len)
        .map(|k| {
            w.iter()
                .zip(&per_y)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, r)| p * r.objective_trace[k.min(r.objective_trace.len() - 1)])
                .sum()
        })
        .collect();
    let lam: Vec<f64> = per_y
        .iter()
        .flat_map(|r| r.weights.iter().copied())
        .collect();
    DeficiencyResult {
        value,
        randomizer: Channel::from_flat_unchecked(prior_y.alphabet().clone(), z.clone(), lam),
        iterations: per_y.iter().map(|r| r.iterations).max().unwrap_or(0),
        kkt_residual: kkt,
        converged: per_y.iter().all(|r| r.converged),
        objective_trace: trace,
    }
}

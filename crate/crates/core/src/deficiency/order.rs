//! Exact degradation tests as L1-fitting linear programs.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::probcore::{compose, Channel, Prior};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderCertificate {
    pub holds: bool,
    /// A randomizer realizing the order, present when it holds.
    #[serde(skip)]
    pub randomizer: Option<Channel>,
    /// Minimized weighted L1 distance between the target channel and the
    /// best garbling.
    pub l1_gap: f64,
}

pub(crate) fn lp_solve(pb: &Problem) -> Result<microlp::Solution> {
    let outcome = pb.solve().map_err(|e| Error::LpFailure(e.to_string()))?;
    if !outcome.is_optimal() {
        return Err(Error::LpFailure("no optimality certificate".into()));
    }
    outcome
        .into_solution()
        .map_err(|_| Error::LpFailure("solve interrupted".into()))
}

/// Minimizes `Σ_r w_r Σ_c |target[r][c] − Σ_k coeff·λ_k|` over row-stochastic
/// `λ` (`rows × cols`). `model(r, c)` lists `(λ index, coefficient)` terms.
fn l1_fit(
    weights: &[f64],
    target: &[f64],
    n_cols_target: usize,
    lam_shape: (usize, usize),
    model: impl Fn(usize, usize) -> Vec<(usize, f64)>,
) -> Result<Vec<f64>> {
    let (lr, lc) = lam_shape;
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let lam: Vec<Variable> = (0..lr * lc).map(|_| pb.add_var(0.0, (0.0, 1.0))).collect();
    for r in 0..lr {
        pb.add_constraint(
            lam[r * lc..(r + 1) * lc].iter().map(|&v| (v, 1.0)),
            ComparisonOp::Eq,
            1.0,
        );
    }
    for (r, &w) in weights.iter().enumerate() {
        for c in 0..n_cols_target {
            let t = pb.add_var(w, (0.0, f64::INFINITY));
            let terms = model(r, c);
            let goal = target[r * n_cols_target + c];
            // t ≥ goal − model and t ≥ model − goal
            let mut up: Vec<(Variable, f64)> = vec![(t, 1.0)];
            up.extend(terms.iter().map(|&(k, a)| (lam[k], a)));
            pb.add_constraint(up, ComparisonOp::Ge, goal);
            let mut down: Vec<(Variable, f64)> = vec![(t, 1.0)];
            down.extend(terms.iter().map(|&(k, a)| (lam[k], -a)));
            pb.add_constraint(down, ComparisonOp::Ge, -goal);
        }
    }
    let sol = lp_solve(&pb)?;
    let mut x: Vec<f64> = lam.iter().map(|&v| sol[v].max(0.0)).collect();
    for row in x.chunks_mut(lc) {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            row.fill(1.0 / lc as f64);
        }
    }
    Ok(x)
}

fn weighted_l1(weights: &[f64], a: &Channel, b: &Channel) -> f64 {
    weights
        .iter()
        .zip(a.rows().zip(b.rows()))
        .map(|(w, (x, y))| w * x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>())
        .sum()
}

fn certificate(gap: f64, lam: Channel, order_tol: f64) -> OrderCertificate {
    let holds = gap <= order_tol;
    OrderCertificate {
        holds,
        randomizer: holds.then_some(lam),
        l1_gap: gap,
    }
}

/// Decides whether `κ = λ∘μ` for some channel `λ` (κ is a garbling of μ),
/// weighting input rows by `prior`. The reported gap is recomputed from
/// the extracted randomizer, so `holds` is a checkable certificate.
pub fn degradation_test(
    mu: &Channel,
    kappa: &Channel,
    prior: &Prior,
    order_tol: f64,
) -> Result<OrderCertificate> {
    if mu.input() != kappa.input() || prior.alphabet() != mu.input() {
        return Err(Error::AlphabetMismatch(
            "channels and prior must share the input alphabet".into(),
        ));
    }
    let (ny, nz) = (kappa.n_out(), mu.n_out());
    let lam = l1_fit(prior.mass(), kappa.as_flat(), ny, (nz, ny), |s, y| {
        (0..nz)
            .filter(|&z| mu.get(s, z) != 0.0)
            .map(|z| (z * ny + y, mu.get(s, z)))
            .collect()
    })?;
    let lam = Channel::from_flat_unchecked(mu.output().clone(), kappa.output().clone(), lam);
    let gap = weighted_l1(prior.mass(), kappa, &compose(&lam, mu)?);
    Ok(certificate(gap, lam, order_tol))
}

/// Decides whether `κ̄ = μ̄∘λ̄` for some `λ̄: Y→Z` (κ̄ is input-degraded from
/// μ̄), weighting rows by `prior_y`.
pub fn input_degradation_test(
    mu_bar: &Channel,
    kappa_bar: &Channel,
    prior_y: &Prior,
    order_tol: f64,
) -> Result<OrderCertificate> {
    if mu_bar.output() != kappa_bar.output() || prior_y.alphabet() != kappa_bar.input() {
        return Err(Error::AlphabetMismatch(
            "reverse channels must share outputs and the prior must match κ̄".into(),
        ));
    }
    let (ns, nz) = (mu_bar.n_out(), mu_bar.n_in());
    let lam = l1_fit(
        prior_y.mass(),
        kappa_bar.as_flat(),
        ns,
        (kappa_bar.n_in(), nz),
        |y, s| {
            (0..nz)
                .filter(|&z| mu_bar.get(z, s) != 0.0)
                .map(|z| (y * nz + z, mu_bar.get(z, s)))
                .collect()
        },
    )?;
    let lam = Channel::from_flat_unchecked(kappa_bar.input().clone(), mu_bar.input().clone(), lam);
    let gap = weighted_l1(prior_y.mass(), kappa_bar, &compose(mu_bar, &lam)?);
    Ok(certificate(gap, lam, order_tol))
}

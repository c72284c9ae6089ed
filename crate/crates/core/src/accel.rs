//! Monotone fixed-point iteration with squared extrapolation.
//!
//! Every solver in the crate is a descent map `x ↦ F(x)` (an EM or
//! alternating-minimization step) with `f(F(x)) ≤ f(x)`. Each outer step
//! takes two plain steps `x1 = F(x)`, `x2 = F(x1)`, tries the extrapolated
//! point `xp = x - 2αr + α²v` with `r = x1 - x`, `v = x2 - 2x1 + x`, and
//! keeps `F(xp)` only when `f(xp) ≤ f(x1)`. Otherwise it falls back to `x2`.
//! Either way the recorded objective never increases.

pub(crate) struct Eval {
    pub value: f64,
    pub residual: f64,
}

pub(crate) trait DescentMap {
    /// Objective and stationarity residual at `x`; writes `F(x)` into `next`.
    fn eval(&mut self, x: &[f64], next: &mut [f64]) -> Eval;

    /// Restores feasibility of an extrapolated point. `anchor` is feasible.
    fn repair(&self, x: &mut [f64], anchor: &[f64]);

    /// Called once per outer iteration (annealing hooks).
    fn on_iteration(&mut self, _iteration: usize) {}
}

pub(crate) struct StopRule {
    pub max_iterations: usize,
    pub tol_residual: f64,
    pub tol_objective: f64,
    /// Consecutive iterations with relative change `≤ tol_objective` required.
    pub window: usize,
}

pub(crate) struct Run {
    pub x: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn rel_change(prev: f64, cur: f64) -> f64 {
    if prev == cur {
        return 0.0;
    }
    (prev - cur).abs() / cur.abs().max(1.0)
}

pub(crate) fn run<M: DescentMap>(map: &mut M, x0: Vec<f64>, rule: &StopRule) -> Run {
    let n = x0.len();
    let mut x = x0;
    let mut x1 = vec![0.0; n];
    let mut x2 = vec![0.0; n];
    let mut xp = vec![0.0; n];
    let mut x3 = vec![0.0; n];

    let mut cur = map.eval(&x, &mut x1);
    let mut trace = vec![cur.value];
    let mut streak = 0usize;
    let mut frozen = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    loop {
        if cur.residual <= rule.tol_residual && streak >= rule.window {
            converged = true;
            break;
        }
        if iterations >= rule.max_iterations || frozen >= 100 || !cur.value.is_finite() {
            break;
        }
        iterations += 1;
        map.on_iteration(iterations);

        let e1 = map.eval(&x1, &mut x2);
        let mut nr = 0.0;
        let mut nv = 0.0;
        for i in 0..n {
            let r = x1[i] - x[i];
            let v = x2[i] - 2.0 * x1[i] + x[i];
            nr += r * r;
            nv += v * v;
        }
        let mut accepted_extrapolation = false;
        if nv > 0.0 && nr.is_finite() && nv.is_finite() {
            let alpha = -(nr / nv).sqrt().max(1.0);
            if alpha < -1.0 {
                for i in 0..n {
                    let r = x1[i] - x[i];
                    let v = x2[i] - 2.0 * x1[i] + x[i];
                    xp[i] = x[i] - 2.0 * alpha * r + alpha * alpha * v;
                }
                map.repair(&mut xp, &x2);
                let ep = map.eval(&xp, &mut x3);
                if ep.value.is_finite() && ep.value <= e1.value {
                    std::mem::swap(&mut x, &mut x3);
                    accepted_extrapolation = true;
                }
            }
        }
        if !accepted_extrapolation {
            std::mem::swap(&mut x, &mut x2);
        }

        let prev = cur.value;
        cur = map.eval(&x, &mut x1);
        let rc = rel_change(prev, cur.value);
        streak = if rc <= rule.tol_objective {
            streak + 1
        } else {
            0
        };
        frozen = if rc <= f64::EPSILON { frozen + 1 } else { 0 };
        trace.push(cur.value);
    }

    Run {
        x,
        value: cur.value,
        residual: cur.residual,
        iterations,
        trace,
        converged,
    }
}

/// Lifts entries of `x` to at least `floor · anchor` and renormalizes each
/// consecutive block of `block` entries to sum to one.
pub(crate) fn repair_rows(x: &mut [f64], anchor: &[f64], block: usize, floor: f64) {
    for (row, arow) in x.chunks_mut(block).zip(anchor.chunks(block)) {
        for (v, &a) in row.iter_mut().zip(arow) {
            let lo = floor * a;
            if !(v.is_finite() && *v >= lo) {
                *v = lo;
            }
        }
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        } else {
            row.copy_from_slice(arow);
        }
    }
}

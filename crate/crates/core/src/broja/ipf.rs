//! I-projection onto a fiber `{Q on Y×Z : Q_Y = a, Q_Z = b}` by iterative
//! proportional fitting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpfOptions {
    /// Maximum absolute margin deviation at termination.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for IpfOptions {
    fn default() -> Self {
        IpfOptions {
            tol: 1e-13,
            max_iterations: 100_000,
        }
    }
}

/// Scaled matrix `base(y,z)·exp(α_y + β_z)` on the active rectangle.
struct Scaling<'a> {
    base: &'a [f64],
    rows: Vec<usize>,
    cols: Vec<usize>,
    nz: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Scaling<'_> {
    fn cell(&self, i: usize, j: usize) -> f64 {
        let b = self.base[self.rows[i] * self.nz + self.cols[j]];
        if b > 0.0 {
            b * (self.alpha[i] + self.beta[j]).exp()
        } else {
            0.0
        }
    }

    fn matrix(&self) -> Vec<f64> {
        let nc = self.cols.len();
        let mut m = vec![0.0; self.rows.len() * nc];
        for i in 0..self.rows.len() {
            for j in 0..nc {
                m[i * nc + j] = self.cell(i, j);
            }
        }
        m
    }

    fn sums(&self, m: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nc = self.cols.len();
        let mut r = vec![0.0; self.rows.len()];
        let mut c = vec![0.0; nc];
        for (i, row) in m.chunks(nc).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                r[i] += v;
                c[j] += v;
            }
        }
        (r, c)
    }

    /// Dual objective `Σ m − Σ a α − Σ b β` and margin residual.
    fn dual(&self, a: &[f64], b: &[f64]) -> (f64, f64) {
        let m = self.matrix();
        let (r, c) = self.sums(&m);
        let mut f: f64 = m.iter().sum();
        f -= a.iter().zip(&self.alpha).map(|(x, y)| x * y).sum::<f64>();
        f -= b.iter().zip(&self.beta).map(|(x, y)| x * y).sum::<f64>();
        (f, margin_gap(&r, &c, a, b))
    }

    fn sweep(&mut self, a: &[f64], b: &[f64]) -> f64 {
        let m = self.matrix();
        let (r, _) = self.sums(&m);
        for i in 0..r.len() {
            if r[i] > 0.0 {
                self.alpha[i] += (a[i] / r[i]).ln();
            }
        }
        let m = self.matrix();
        let (_, c) = self.sums(&m);
        for j in 0..c.len() {
            if c[j] > 0.0 {
                self.beta[j] += (b[j] / c[j]).ln();
            }
        }
        let m = self.matrix();
        let (r, c) = self.sums(&m);
        margin_gap(&r, &c, a, b)
    }

    /// One damped Newton step on the dual with the last `β` held fixed.
    /// Returns the new residual, or `None` when no progress is possible.
    fn newton(&mut self, a: &[f64], b: &[f64]) -> Option<f64> {
        let (nr, nc) = (self.rows.len(), self.cols.len());
        let n = nr + nc - 1;
        let m = self.matrix();
        let (r, c) = self.sums(&m);
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for i in 0..nr {
            g[i] = r[i] - a[i];
            h[(i, i)] = r[i];
        }
        for j in 0..nc - 1 {
            g[nr + j] = c[j] - b[j];
            h[(nr + j, nr + j)] = c[j];
            for i in 0..nr {
                h[(i, nr + j)] = m[i * nc + j];
                h[(nr + j, i)] = m[i * nc + j];
            }
        }
        let scale = (0..n).fold(0.0_f64, |s, k| s.max(h[(k, k)]));
        for k in 0..n {
            h[(k, k)] += 1e-14 * (1.0 + scale);
        }
        let d = -h.cholesky()?.solve(&g);
        let slope = g.dot(&d);
        let (f0, res0) = self.dual(a, b);
        let (a0, b0) = (self.alpha.clone(), self.beta.clone());
        let mut t = 1.0;
        while t > 1e-10 {
            for i in 0..nr {
                self.alpha[i] = a0[i] + t * d[i];
            }
            for j in 0..nc - 1 {
                self.beta[j] = b0[j] + t * d[nr + j];
            }
            let (f, res) = self.dual(a, b);
            if f.is_finite() && (f <= f0 + 1e-4 * t * slope || res < 0.5 * res0) {
                return Some(res);
            }
            t *= 0.5;
        }
        self.alpha = a0;
        self.beta = b0;
        None
    }
}

fn margin_gap(r: &[f64], c: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let rows = r.iter().zip(a).map(|(x, y)| (x - y).abs());
    let cols = c.iter().zip(b).map(|(x, y)| (x - y).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Scales `q` (row-major `ny × nz`) to row sums `a` and column sums `b`,
/// in place. Starts with proportional-fitting sweeps and switches to Newton
/// steps on the log-scalings when they slow down, which happens when the
/// projection lies close to the boundary. Returns the final margin residual.
pub(crate) fn fit(
    q: &mut [f64],
    ny: usize,
    nz: usize,
    a: &[f64],
    b: &[f64],
    opts: &IpfOptions,
) -> f64 {
    debug_assert_eq!(q.len(), ny * nz);
    let base = q.to_vec();
    let rows: Vec<usize> = (0..ny).filter(|&y| a[y] > 0.0).collect();
    let cols: Vec<usize> = (0..nz).filter(|&z| b[z] > 0.0).collect();
    let ra: Vec<f64> = rows.iter().map(|&y| a[y]).collect();
    let cb: Vec<f64> = cols.iter().map(|&z| b[z]).collect();
    q.fill(0.0);
    if rows.is_empty() || cols.is_empty() {
        return ra.iter().chain(&cb).fold(0.0, |m: f64, x| m.max(*x));
    }
    let mut sc = Scaling {
        base: &base,
        alpha: vec![0.0; rows.len()],
        beta: vec![0.0; cols.len()],
        rows,
        cols,
        nz,
    };
    let mut residual = f64::INFINITY;
    let mut used = 0;
    while used < opts.max_iterations.min(50) && residual > opts.tol {
        residual = sc.sweep(&ra, &cb);
        used += 1;
    }
    let mut newton_steps = 0;
    while residual > opts.tol && newton_steps < 100 {
        match sc.newton(&ra, &cb) {
            Some(r) => residual = r,
            None => break,
        }
        newton_steps += 1;
    }
    while residual > opts.tol && used < opts.max_iterations {
        residual = sc.sweep(&ra, &cb);
        used += 1;
    }
    let m = sc.matrix();
    let nc = sc.cols.len();
    for (i, &y) in sc.rows.iter().enumerate() {
        for (j, &z) in sc.cols.iter().enumerate() {
            q[y * nz + z] = m[i * nc + j];
        }
    }
    let (r, c) = sc.sums(&m);
    // A row or column of the active rectangle without base mass cannot be
    // matched at all.
    if r.iter().chain(&c).any(|&v| v <= 0.0) {
        return f64::INFINITY;
    }
    margin_gap(&r, &c, &ra, &cb)
}

/// `argmin D(Q‖base)` over distributions on `Y×Z` with margins `target_y`,
/// `target_z`. `base` is row-major `|Y| × |Z|`.
pub fn ipf_projection(
    base: &[f64],
    target_y: &[f64],
    target_z: &[f64],
    opts: &IpfOptions,
) -> Result<Vec<f64>> {
    let (ny, nz) = (target_y.len(), target_z.len());
    if base.len() != ny * nz {
        return Err(Error::DimensionMismatch(format!(
            "base needs {ny}x{nz} entries, got {}",
            base.len()
        )));
    }
    if base.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidOptions("base must be nonnegative".into()));
    }
    for y in 0..ny {
        if target_y[y] > 0.0 && base[y * nz..(y + 1) * nz].iter().all(|&v| v == 0.0) {
            return Err(Error::InfeasibleSupport(format!(
                "row {y} has no base mass"
            )));
        }
    }
    for z in 0..nz {
        if target_z[z] > 0.0 && (0..ny).all(|y| base[y * nz + z] == 0.0) {
            return Err(Error::InfeasibleSupport(format!(
                "column {z} has no base mass"
            )));
        }
    }
    let mut q = base.to_vec();
    let residual = fit(&mut q, ny, nz, target_y, target_z, opts);
    if residual > opts.tol {
        return Err(Error::NotConverged {
            iterations: opts.max_iterations,
            residual,
        });
    }
    Ok(q)
}

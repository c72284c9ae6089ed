//! Shannon quantities in bits.
//!
//! `0·log 0 = 0`; divergences return `f64::INFINITY` when the first argument
//! is not absolutely continuous w.r.t. the second.

use super::channel::Channel;
use super::dist::{JointDist, Prior, Var};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Entropy in bits of an (unnormalized is fine) nonnegative vector.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy(x: f64) -> f64 {
    entropy(&[x, 1.0 - x])
}

/// `D(p‖q)` in bits over raw slices.
pub fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

pub fn kl(p: &Prior, q: &Prior) -> Result<f64> {
    if p.alphabet() != q.alphabet() {
        return Err(Error::AlphabetMismatch(
            "kl over different alphabets".into(),
        ));
    }
    Ok(kl_slices(p.mass(), q.mass()))
}

/// `D(κ‖λ|π) = Σ_s π(s) D(κ_s‖λ_s)`.
pub fn kl_cond(kappa: &Channel, lambda: &Channel, prior: &Prior) -> Result<f64> {
    if kappa.input() != lambda.input()
        || kappa.output() != lambda.output()
        || kappa.input() != prior.alphabet()
    {
        return Err(Error::AlphabetMismatch(
            "conditional kl needs matching channels and prior".into(),
        ));
    }
    let mut d = 0.0;
    for (s, &w) in prior.mass().iter().enumerate() {
        if w > 0.0 {
            let k = kl_slices(kappa.row(s), lambda.row(s));
            if k.is_infinite() {
                return Ok(f64::INFINITY);
            }
            d += w * k;
        }
    }
    Ok(d)
}

fn union(a: &[Var], b: &[Var]) -> Vec<Var> {
    let mut v: Vec<Var> = a.to_vec();
    for x in b {
        if !v.contains(x) {
            v.push(*x);
        }
    }
    v
}

/// `I(A;B)` where `A` and `B` are sets of variables.
pub fn mutual_info(joint: &JointDist, a: &[Var], b: &[Var]) -> f64 {
    let ab = union(a, b);
    (joint.entropy(a) + joint.entropy(b) - joint.entropy(&ab)).max(0.0)
}

/// `I(A;B|C)`.
pub fn cond_mutual_info(joint: &JointDist, a: &[Var], b: &[Var], c: &[Var]) -> f64 {
    if c.is_empty() {
        return mutual_info(joint, a, b);
    }
    let ac = union(a, c);
    let bc = union(b, c);
    let abc = union(&ac, b);
    (joint.entropy(&ac) + joint.entropy(&bc) - joint.entropy(&abc) - joint.entropy(c)).max(0.0)
}

/// Coinformation `I(S;Y) - I(S;Y|Z)`; symmetric in its three arguments.
pub fn coinformation(joint: &JointDist) -> f64 {
    use Var::*;
    let co = mutual_info(joint, &[S], &[Y]) - cond_mutual_info(joint, &[S], &[Y], &[Z]);
    debug_assert!({
        let co_z = mutual_info(joint, &[S], &[Z]) - cond_mutual_info(joint, &[S], &[Z], &[Y]);
        let co_yz = mutual_info(joint, &[Y], &[Z]) - cond_mutual_info(joint, &[Y], &[Z], &[S]);
        (co - co_z).abs() <= 1e-10 && (co - co_yz).abs() <= 1e-10
    });
    co
}

/// The Shannon quantities every decomposition is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShannonSummary {
    pub i_sy: f64,
    pub i_sz: f64,
    pub i_sy_given_z: f64,
    pub i_sz_given_y: f64,
    pub i_s_yz: f64,
}

impl ShannonSummary {
    pub fn of(joint: &JointDist) -> Self {
        use Var::*;
        ShannonSummary {
            i_sy: mutual_info(joint, &[S], &[Y]),
            i_sz: mutual_info(joint, &[S], &[Z]),
            i_sy_given_z: cond_mutual_info(joint, &[S], &[Y], &[Z]),
            i_sz_given_y: cond_mutual_info(joint, &[S], &[Z], &[Y]),
            i_s_yz: mutual_info(joint, &[S], &[Y, Z]),
        }
    }
}

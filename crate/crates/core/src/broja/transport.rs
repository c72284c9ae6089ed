//! Moving a member of `Δ_P` to a nearby member of `Δ_{P′}`.

use crate::error::{Error, Result};
use crate::probcore::JointDist;

/// Entries above this magnitude below zero are real negatives; smaller ones
/// are rounding noise and are set to zero.
const NOISE: f64 = 1e-15;

/// Given `Q ∈ Δ_P`, returns `Q′ ∈ Δ_{P′}` with `‖Q − Q′‖₁ ≤ 5‖P − P′‖₁`.
///
/// Starts from the signed measure `M = Q + P′ − P`, which already has the
/// pair marginals of `P′`. Each negative atom `(s,y,z)` is repaired by
/// moving mass around a rectangle `(y,z),(y₁,z₁)` vs `(y₁,z),(y,z₁)` within
/// the same `s`, which leaves both pair marginals unchanged.
pub fn transport_margins(q: &JointDist, p: &JointDist, p_prime: &JointDist) -> Result<JointDist> {
    if q.dims() != p.dims() || p.dims() != p_prime.dims() {
        return Err(Error::AlphabetMismatch(
            "Q, P and P′ must live on the same alphabets".into(),
        ));
    }
    let (ns, ny, nz) = q.dims();
    let mut m: Vec<f64> = q
        .table()
        .iter()
        .zip(p.table())
        .zip(p_prime.table())
        .map(|((a, b), c)| a + (c - b))
        .collect();
    let at = |y: usize, z: usize| y * nz + z;
    let budget = 64 * ns * ny * nz * ny * nz;
    for s in 0..ns {
        let block = &mut m[s * ny * nz..(s + 1) * ny * nz];
        let mut steps = 0;
        while let Some(i0) = (0..ny * nz).find(|&i| block[i] < -NOISE) {
            let (y0, z0) = (i0 / nz, i0 % nz);
            let z1 = (0..nz)
                .filter(|&z| z != z0)
                .max_by(|&a, &b| block[at(y0, a)].total_cmp(&block[at(y0, b)]));
            let y1 = (0..ny)
                .filter(|&y| y != y0)
                .max_by(|&a, &b| block[at(a, z0)].total_cmp(&block[at(b, z0)]));
            let (Some(y1), Some(z1)) = (y1, z1) else {
                block[i0] = 0.0;
                continue;
            };
            let (a, b) = (block[at(y0, z1)], block[at(y1, z0)]);
            if a <= 0.0 || b <= 0.0 || steps > budget {
                // Only reachable through rounding: the margins force a
                // positive partner for any genuine negative.
                block[i0] = 0.0;
                continue;
            }
            let t = (-block[i0]).min(a).min(b);
            block[i0] += t;
            block[at(y1, z1)] += t;
            block[at(y0, z1)] -= t;
            block[at(y1, z0)] -= t;
            // Pin whichever entry hit the minimum to exactly zero.
            if t == -(block[i0] - t) {
                block[i0] = 0.0;
            }
            if t == a {
                block[at(y0, z1)] = 0.0;
            }
            if t == b {
                block[at(y1, z0)] = 0.0;
            }
            steps += 1;
        }
        for v in block.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    Ok(JointDist::from_parts_unchecked(
        q.s().clone(),
        q.y().clone(),
        q.z().clone(),
        m,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broja::polytope;
    use crate::probcore::Alphabet;

    fn joint(t: Vec<f64>) -> JointDist {
        let b = Alphabet::range(2);
        JointDist::new(b.clone(), b.clone(), b, t).unwrap()
    }

    #[test]
    fn unchanged_when_p_equals_p_prime() {
        let p = joint(vec![0.1, 0.2, 0.05, 0.15, 0.2, 0.05, 0.15, 0.1]);
        let q = transport_margins(&p, &p, &p).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn repairs_negative_atoms() {
        let p = joint(vec![0.25, 0.0, 0.0, 0.25, 0.25, 0.0, 0.0, 0.25]);
        let pp = joint(vec![0.0, 0.25, 0.25, 0.0, 0.25, 0.0, 0.0, 0.25]);
        let q = transport_margins(&p, &p, &pp).unwrap();
        assert!(q.table().iter().all(|&v| v >= 0.0));
        assert!(polytope(&pp).contains(&q));
        assert!(q.l1_distance(&p).unwrap() <= 5.0 * pp.l1_distance(&p).unwrap());
    }
}

#![allow(dead_code)]

use std::path::PathBuf;

use pidkit::oracle::{dirichlet, random_joint, InstanceSpec};
use pidkit::probcore::{format, Alphabet, Channel, JointDist, ValidateOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> JointDist {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"));
    format::load(&path, ValidateOptions::default()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Joint over `0..ns × 0..ny × 0..nz` built from `f(s, y, z)`.
pub fn joint_from_fn(
    ns: usize,
    ny: usize,
    nz: usize,
    f: impl Fn(usize, usize, usize) -> f64,
) -> JointDist {
    let mut t = Vec::with_capacity(ns * ny * nz);
    for s in 0..ns {
        for y in 0..ny {
            for z in 0..nz {
                t.push(f(s, y, z));
            }
        }
    }
    let total: f64 = t.iter().sum();
    t.iter_mut().for_each(|v| *v /= total);
    JointDist::new(
        Alphabet::range(ns),
        Alphabet::range(ny),
        Alphabet::range(nz),
        t,
    )
    .unwrap()
}

/// Random full-support joint with each alphabet size drawn from `lo..=hi`.
pub fn random_sized(rng: &mut impl Rng, lo: usize, hi: usize) -> JointDist {
    let spec = InstanceSpec::new(
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
        rng.random(),
    );
    random_joint(spec)
}

pub fn random_stochastic(rng: &mut impl Rng, n_in: usize, n_out: usize) -> Vec<f64> {
    (0..n_in).flat_map(|_| dirichlet(rng, n_out)).collect()
}

/// Push-forward of `j` under `(s, y, z) ↦ map(s, y, z)`, landing in
/// alphabets of the given sizes, with transition weights.
pub fn transform(
    j: &JointDist,
    sizes: (usize, usize, usize),
    kernel: impl Fn(usize, usize, usize) -> Vec<((usize, usize, usize), f64)>,
) -> JointDist {
    let (ns, ny, nz) = sizes;
    let mut t = vec![0.0; ns * ny * nz];
    for ([s, y, z], p) in j.atoms() {
        for ((a, b, c), w) in kernel(s, y, z) {
            t[(a * ny + b) * nz + c] += p * w;
        }
    }
    let total: f64 = t.iter().sum();
    t.iter_mut().for_each(|v| *v /= total);
    JointDist::new(
        Alphabet::range(ns),
        Alphabet::range(ny),
        Alphabet::range(nz),
        t,
    )
    .unwrap()
}

/// `S` passed through a random channel to `S′` with `k` symbols.
pub fn garble_s(rng: &mut impl Rng, j: &JointDist, k: usize) -> JointDist {
    let (ns, ny, nz) = j.dims();
    let w = random_stochastic(rng, ns, k);
    transform(j, (k, ny, nz), |s, y, z| {
        (0..k).map(|a| ((a, y, z), w[s * k + a])).collect()
    })
}

/// `Y` passed through a random channel to `Y′` with `k` symbols.
pub fn garble_y(rng: &mut impl Rng, j: &JointDist, k: usize) -> JointDist {
    let (ns, ny, nz) = j.dims();
    let w = random_stochastic(rng, ny, k);
    transform(j, (ns, k, nz), |s, y, z| {
        (0..k).map(|b| ((s, b, z), w[y * k + b])).collect()
    })
}

/// Eve additionally sees `Z′ ~ W(·|s,y,z)` with `k` symbols; the new `Z` is `(Z, Z′)`.
pub fn side_information(rng: &mut impl Rng, j: &JointDist, k: usize) -> JointDist {
    let (ns, ny, nz) = j.dims();
    let w = random_stochastic(rng, ns * ny * nz, k);
    transform(j, (ns, ny, nz * k), |s, y, z| {
        let row = ((s * ny + y) * nz + z) * k;
        (0..k).map(|c| ((s, y, z * k + c), w[row + c])).collect()
    })
}

/// `f(S)` announced publicly: `Y ↦ (Y, f(S))`, `Z ↦ (Z, f(S))`.
pub fn public_announcement(j: &JointDist, f: &[usize], k: usize) -> JointDist {
    let (ns, ny, nz) = j.dims();
    transform(j, (ns, ny * k, nz * k), |s, y, z| {
        vec![((s, y * k + f[s], z * k + f[s]), 1.0)]
    })
}

/// Forgets the second coordinate of `S = (S₁, S₂)` and `Y = (Y₁, Y₂)`, where
/// `S₂` and `Y₂` have `bs` and `by` symbols.
pub fn restrict_range(j: &JointDist, bs: usize, by: usize) -> JointDist {
    let (ns, ny, nz) = j.dims();
    transform(j, (ns / bs, ny / by, nz), |s, y, z| {
        vec![((s / bs, y / by, z), 1.0)]
    })
}

/// `(1 − t)P + tR` for a random joint `R`, with `ε = ‖P − P′‖₁ / 2`.
pub fn perturb(rng: &mut impl Rng, j: &JointDist, t: f64) -> (JointDist, f64) {
    let (ns, ny, nz) = j.dims();
    let r = random_joint(InstanceSpec {
        sparsity: 0.3,
        ..InstanceSpec::new(ns, ny, nz, rng.random())
    });
    let table: Vec<f64> = j
        .table()
        .iter()
        .zip(r.table())
        .map(|(p, q)| (1.0 - t) * p + t * q)
        .collect();
    let p2 = JointDist::new(j.s().clone(), j.y().clone(), j.z().clone(), table).unwrap();
    let eps = j.l1_distance(&p2).unwrap() / 2.0;
    (p2, eps)
}

pub fn binary_entropy(x: f64) -> f64 {
    pidkit::probcore::binary_entropy(x)
}

pub fn channel(input: usize, output: usize, rows: Vec<f64>) -> Channel {
    Channel::from_flat(Alphabet::range(input), Alphabet::range(output), rows).unwrap()
}

use crate::error::{Error, Result};
use crate::probcore::{Alphabet, JointDist};

/// Default cap on the size of each product alphabet.
pub const MAX_TENSOR_SYMBOLS: usize = 256;

/// Product distribution on `((S₁,S₂), (Y₁,Y₂), (Z₁,Z₂))`.
pub fn tensor(a: &JointDist, b: &JointDist) -> Result<JointDist> {
    tensor_with_cap(a, b, MAX_TENSOR_SYMBOLS)
}

pub fn tensor_with_cap(a: &JointDist, b: &JointDist, cap: usize) -> Result<JointDist> {
    let (as_, ay, az) = a.dims();
    let (bs, by, bz) = b.dims();
    for n in [as_ * bs, ay * by, az * bz] {
        if n > cap {
            return Err(Error::AlphabetTooLarge(n));
        }
    }
    let s = Alphabet::product(a.s(), b.s());
    let y = Alphabet::product(a.y(), b.y());
    let z = Alphabet::product(a.z(), b.z());
    let (ny, nz) = (ay * by, az * bz);
    let mut table = vec![0.0; s.len() * ny * nz];
    for ([s1, y1, z1], p) in a.atoms().filter(|(_, p)| *p > 0.0) {
        for ([s2, y2, z2], r) in b.atoms().filter(|(_, r)| *r > 0.0) {
            let (si, yi, zi) = (s1 * bs + s2, y1 * by + y2, z1 * bz + z2);
            table[(si * ny + yi) * nz + zi] = p * r;
        }
    }
    Ok(JointDist::from_parts_unchecked(s, y, z, table))
}

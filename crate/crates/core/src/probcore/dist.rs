use std::fmt;

use serde::{Deserialize, Serialize};

use super::alphabet::Alphabet;
use super::channel::Channel;
use crate::error::{Error, Result};

/// Tolerance on total mass and on channel row sums.
pub const MASS_TOL: f64 = 1e-9;

/// One of the three variables of a joint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    S,
    Y,
    Z,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::S, Var::Y, Var::Z];

    fn axis(self) -> usize {
        match self {
            Var::S => 0,
            Var::Y => 1,
            Var::Z => 2,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Var::S => "S",
            Var::Y => "Y",
            Var::Z => "Z",
        };
        f.write_str(s)
    }
}

/// A probability vector over an alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    alphabet: Alphabet,
    mass: Vec<f64>,
}

impl Prior {
    pub fn new(alphabet: Alphabet, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != alphabet.len() {
            return Err(Error::DimensionMismatch(format!(
                "prior has {} entries for an alphabet of {}",
                mass.len(),
                alphabet.len()
            )));
        }
        check_mass(&mass, MASS_TOL)?;
        Ok(Prior { alphabet, mass })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.len();
        Prior {
            alphabet,
            mass: vec![1.0 / n as f64; n],
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn full_support(&self) -> bool {
        self.mass.iter().all(|&p| p > 0.0)
    }
}

fn check_mass(mass: &[f64], tol: f64) -> Result<f64> {
    for (index, &value) in mass.iter().enumerate() {
        if value.is_nan() || value < 0.0 {
            return Err(Error::NegativeMass { index, value });
        }
    }
    let total: f64 = mass.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > tol {
        return Err(Error::MassNotOne(total));
    }
    Ok(total)
}

/// Options for [`validate_joint`].
#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub tolerance: f64,
    /// Divide by the total mass instead of rejecting tables that do not sum to one.
    pub renormalize: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            tolerance: MASS_TOL,
            renormalize: false,
        }
    }
}

/// An unvalidated joint table `table[(s*|Y| + y)*|Z| + z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawJoint {
    pub s: Alphabet,
    pub y: Alphabet,
    pub z: Alphabet,
    pub table: Vec<f64>,
}

/// Checks a raw table and returns a normalized [`JointDist`].
pub fn validate_joint(raw: RawJoint, opts: ValidateOptions) -> Result<JointDist> {
    let RawJoint { s, y, z, mut table } = raw;
    let expected = s.len() * y.len() * z.len();
    if table.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "table has {} entries, alphabets require {expected}",
            table.len()
        )));
    }
    for (index, &value) in table.iter().enumerate() {
        if value.is_nan() || value < 0.0 {
            return Err(Error::NegativeMass { index, value });
        }
    }
    let total: f64 = table.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::MassNotOne(total));
    }
    if !opts.renormalize && (total - 1.0).abs() > opts.tolerance {
        return Err(Error::MassNotOne(total));
    }
    if total != 1.0 {
        table.iter_mut().for_each(|p| *p /= total);
    }
    Ok(JointDist { s, y, z, table })
}

/// A joint distribution of three finite variables `(S, Y, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    s: Alphabet,
    y: Alphabet,
    z: Alphabet,
    table: Vec<f64>,
}

impl JointDist {
    /// Shorthand for [`validate_joint`] with default options.
    pub fn new(s: Alphabet, y: Alphabet, z: Alphabet, table: Vec<f64>) -> Result<Self> {
        validate_joint(RawJoint { s, y, z, table }, ValidateOptions::default())
    }

    /// Builds a joint from `(s, y, z, p)` atoms given by label.
    pub fn from_atoms<'a, I>(s: Alphabet, y: Alphabet, z: Alphabet, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str, f64)>,
    {
        let mut table = vec![0.0; s.len() * y.len() * z.len()];
        for (a, b, c, p) in atoms {
            let i = s
                .index_of(a)
                .ok_or_else(|| Error::Parse(format!("unknown s label `{a}`")))?;
            let j = y
                .index_of(b)
                .ok_or_else(|| Error::Parse(format!("unknown y label `{b}`")))?;
            let k = z
                .index_of(c)
                .ok_or_else(|| Error::Parse(format!("unknown z label `{c}`")))?;
            table[(i * y.len() + j) * z.len() + k] += p;
        }
        JointDist::new(s, y, z, table)
    }

    /// Wraps a table already known to be valid (used by internal transforms).
    pub(crate) fn from_parts_unchecked(
        s: Alphabet,
        y: Alphabet,
        z: Alphabet,
        table: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(table.len(), s.len() * y.len() * z.len());
        JointDist { s, y, z, table }
    }

    pub fn s(&self) -> &Alphabet {
        &self.s
    }

    pub fn y(&self) -> &Alphabet {
        &self.y
    }

    pub fn z(&self) -> &Alphabet {
        &self.z
    }

    pub fn alphabet(&self, v: Var) -> &Alphabet {
        match v {
            Var::S => &self.s,
            Var::Y => &self.y,
            Var::Z => &self.z,
        }
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.s.len(), self.y.len(), self.z.len())
    }

    #[inline]
    pub fn index(&self, s: usize, y: usize, z: usize) -> usize {
        (s * self.y.len() + y) * self.z.len() + z
    }

    #[inline]
    pub fn get(&self, s: usize, y: usize, z: usize) -> f64 {
        self.table[self.index(s, y, z)]
    }

    /// Iterates `((s, y, z), p)` in index order.
    pub fn atoms(&self) -> impl Iterator<Item = ([usize; 3], f64)> + '_ {
        let (_, ny, nz) = self.dims();
        self.table.iter().enumerate().map(move |(i, &p)| {
            let z = i % nz;
            let y = (i / nz) % ny;
            let s = i / (nz * ny);
            ([s, y, z], p)
        })
    }

    /// Marginal over `vars`, flattened row-major in the order given.
    pub fn marginal(&self, vars: &[Var]) -> Vec<f64> {
        let sizes: Vec<usize> = vars.iter().map(|&v| self.alphabet(v).len()).collect();
        let mut out = vec![0.0; sizes.iter().product()];
        for (idx, p) in self.atoms() {
            let mut key = 0;
            for (&v, &n) in vars.iter().zip(&sizes) {
                key = key * n + idx[v.axis()];
            }
            out[key] += p;
        }
        out
    }

    /// Shannon entropy in bits of the marginal over `vars`.
    pub fn entropy(&self, vars: &[Var]) -> f64 {
        super::measures::entropy(&self.marginal(vars))
    }

    /// Relabels roles: the new `S`, `Y`, `Z` are the old `order[0]`,
    /// `order[1]`, `order[2]`.
    pub fn permute(&self, order: [Var; 3]) -> Result<JointDist> {
        let mut seen = [false; 3];
        for v in order {
            seen[v.axis()] = true;
        }
        if seen.iter().any(|&b| !b) {
            return Err(Error::InvalidOptions(
                "permutation must use each variable once".into(),
            ));
        }
        let s = self.alphabet(order[0]).clone();
        let y = self.alphabet(order[1]).clone();
        let z = self.alphabet(order[2]).clone();
        let (ny, nz) = (y.len(), z.len());
        let mut table = vec![0.0; s.len() * ny * nz];
        for (idx, p) in self.atoms() {
            let (a, b, c) = (
                idx[order[0].axis()],
                idx[order[1].axis()],
                idx[order[2].axis()],
            );
            table[(a * ny + b) * nz + c] = p;
        }
        Ok(JointDist { s, y, z, table })
    }

    /// The same distribution with the roles of `Y` and `Z` exchanged.
    pub fn swap_yz(&self) -> JointDist {
        self.permute([Var::S, Var::Z, Var::Y])
            .expect("fixed permutation is valid")
    }

    /// Total-variation style L1 distance between two tables on equal alphabets.
    pub fn l1_distance(&self, other: &JointDist) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::AlphabetMismatch(
                "joint tables differ in shape".into(),
            ));
        }
        Ok(self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Removes symbols of `var` that carry no mass.
    pub fn drop_null(&self, var: Var) -> Result<JointDist> {
        let m = self.marginal(&[var]);
        let keep: Vec<usize> = (0..m.len()).filter(|&i| m[i] > 0.0).collect();
        if keep.len() == m.len() {
            return Ok(self.clone());
        }
        let mut alph = [self.s.clone(), self.y.clone(), self.z.clone()];
        alph[var.axis()] = self.alphabet(var).select(&keep)?;
        let mut remap = vec![usize::MAX; m.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let [s, y, z] = alph;
        let (ny, nz) = (y.len(), z.len());
        let mut table = vec![0.0; s.len() * ny * nz];
        for (mut idx, p) in self.atoms() {
            let r = remap[idx[var.axis()]];
            if r == usize::MAX {
                continue;
            }
            idx[var.axis()] = r;
            table[(idx[0] * ny + idx[1]) * nz + idx[2]] = p;
        }
        Ok(JointDist { s, y, z, table })
    }
}

/// Splits the `(target, observed)` pair marginal into the target marginal and
/// the conditional channel `target -> observed`.
///
/// Zero-mass target symbols are rejected with [`Error::NullSupport`] unless
/// `drop_null` is set, in which case they are pruned from the prior's alphabet.
pub fn forward_pair(
    joint: &JointDist,
    target: Var,
    observed: Var,
    drop_null: bool,
) -> Result<(Prior, Channel)> {
    if target == observed {
        return Err(Error::InvalidOptions(
            "target and observed variable must differ".into(),
        ));
    }
    let in_alph = joint.alphabet(target);
    let out_alph = joint.alphabet(observed).clone();
    let pair = joint.marginal(&[target, observed]);
    let no = out_alph.len();
    let mut keep = Vec::with_capacity(in_alph.len());
    let mut prior = Vec::with_capacity(in_alph.len());
    for i in 0..in_alph.len() {
        let row_mass: f64 = pair[i * no..(i + 1) * no].iter().sum();
        if row_mass > 0.0 {
            keep.push(i);
            prior.push(row_mass);
        } else if !drop_null {
            return Err(Error::NullSupport(in_alph.symbol(i).to_string()));
        }
    }
    let mut rows = Vec::with_capacity(keep.len() * no);
    for (&i, &m) in keep.iter().zip(&prior) {
        rows.extend(pair[i * no..(i + 1) * no].iter().map(|p| p / m));
    }
    let in_alph = in_alph.select(&keep)?;
    let total: f64 = prior.iter().sum();
    prior.iter_mut().for_each(|p| *p /= total);
    Ok((
        Prior::new(in_alph.clone(), prior)?,
        Channel::from_flat(in_alph, out_alph, rows)?,
    ))
}

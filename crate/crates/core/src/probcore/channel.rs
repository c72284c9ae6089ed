use super::alphabet::Alphabet;
use super::dist::{Prior, MASS_TOL};
use crate::error::{Error, Result};

/// A row-stochastic matrix: `row(i)[j]` is the probability of output `j`
/// given input `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    input: Alphabet,
    output: Alphabet,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(input: Alphabet, output: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != input.len() || rows.iter().any(|r| r.len() != output.len()) {
            return Err(Error::DimensionMismatch(format!(
                "channel needs {}x{} entries",
                input.len(),
                output.len()
            )));
        }
        Channel::from_flat(input, output, rows.concat())
    }

    pub fn from_flat(input: Alphabet, output: Alphabet, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != input.len() * output.len() {
            return Err(Error::DimensionMismatch(format!(
                "channel needs {}x{} entries, got {}",
                input.len(),
                output.len(),
                rows.len()
            )));
        }
        let no = output.len();
        for (row, chunk) in rows.chunks(no).enumerate() {
            for (j, &v) in chunk.iter().enumerate() {
                if v.is_nan() || v < 0.0 {
                    return Err(Error::NegativeMass {
                        index: row * no + j,
                        value: v,
                    });
                }
            }
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > MASS_TOL {
                return Err(Error::InvalidChannel { row, sum });
            }
        }
        Ok(Channel {
            input,
            output,
            rows,
        })
    }

    /// Internal constructor for matrices that are stochastic by construction.
    pub(crate) fn from_flat_unchecked(input: Alphabet, output: Alphabet, rows: Vec<f64>) -> Self {
        debug_assert_eq!(rows.len(), input.len() * output.len());
        Channel {
            input,
            output,
            rows,
        }
    }

    pub fn identity(alphabet: Alphabet) -> Self {
        let n = alphabet.len();
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            rows[i * n + i] = 1.0;
        }
        Channel {
            input: alphabet.clone(),
            output: alphabet,
            rows,
        }
    }

    /// Every input produces the same output distribution.
    pub fn constant(input: Alphabet, output: &Prior) -> Self {
        let rows = output.mass().repeat(input.len());
        Channel {
            input,
            output: output.alphabet().clone(),
            rows,
        }
    }

    pub fn uniform(input: Alphabet, output: Alphabet) -> Self {
        let u = 1.0 / output.len() as f64;
        let rows = vec![u; input.len() * output.len()];
        Channel {
            input,
            output,
            rows,
        }
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn n_in(&self) -> usize {
        self.input.len()
    }

    pub fn n_out(&self) -> usize {
        self.output.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.output.len();
        &self.rows[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.output.len())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.output.len() + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// `self ∘ pre`: first `pre`, then `self`.
    pub fn after(&self, pre: &Channel) -> Result<Channel> {
        compose(self, pre)
    }

    /// Distribution of the output when the input is drawn from `prior`.
    pub fn push_forward(&self, prior: &Prior) -> Result<Prior> {
        if prior.alphabet() != &self.input {
            return Err(Error::AlphabetMismatch(
                "prior alphabet differs from channel input".into(),
            ));
        }
        let mut out = vec![0.0; self.n_out()];
        for (p, row) in prior.mass().iter().zip(self.rows()) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += p * r;
            }
        }
        Prior::new(self.output.clone(), out)
    }

    /// Largest absolute row-sum deviation from one.
    pub fn stochasticity_defect(&self) -> f64 {
        self.rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Composition `post ∘ pre`: `rows[s] = Σ_z pre[s][z] · post[z][·]`.
pub fn compose(post: &Channel, pre: &Channel) -> Result<Channel> {
    if post.input != pre.output {
        return Err(Error::AlphabetMismatch(format!(
            "cannot compose: inner output has {} symbols, outer input has {}",
            pre.n_out(),
            post.n_in()
        )));
    }
    let (ns, nm, no) = (pre.n_in(), pre.n_out(), post.n_out());
    let mut rows = vec![0.0; ns * no];
    for s in 0..ns {
        let out = &mut rows[s * no..(s + 1) * no];
        for m in 0..nm {
            let w = pre.rows[s * nm + m];
            if w == 0.0 {
                continue;
            }
            for (o, &q) in out.iter_mut().zip(post.row(m)) {
                *o += w * q;
            }
        }
    }
    Ok(Channel {
        input: pre.input.clone(),
        output: post.output.clone(),
        rows,
    })
}

/// Binary erasure channel on `{0,1}` with output alphabet `{0,e,1}`.
pub fn binary_erasure(eps: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidOptions(format!(
            "erasure probability {eps} outside [0,1]"
        )));
    }
    Channel::new(
        Alphabet::range(2),
        Alphabet::new(["0", "e", "1"])?,
        vec![vec![1.0 - eps, eps, 0.0], vec![0.0, eps, 1.0 - eps]],
    )
}

/// Erasure channel on `{0,e,1}` that keeps `e` fixed.
pub fn extended_erasure(eps: f64) -> Result<Channel> {
    let a = Alphabet::new(["0", "e", "1"])?;
    Channel::new(
        a.clone(),
        a,
        vec![
            vec![1.0 - eps, eps, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, eps, 1.0 - eps],
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_law() {
        let mu = Channel::new(
            Alphabet::range(2),
            Alphabet::range(3),
            vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.4, 0.0]],
        )
        .unwrap();
        let id = Channel::identity(Alphabet::range(3));
        assert_eq!(compose(&id, &mu).unwrap(), mu);
    }

    #[test]
    fn erasure_concatenation() {
        let (e1, e2) = (1.0 / 6.0, 1.0 / 5.0);
        let c = compose(&extended_erasure(e2).unwrap(), &binary_erasure(e1).unwrap()).unwrap();
        let expect = binary_erasure(1.0 - (1.0 - e1) * (1.0 - e2)).unwrap();
        for (a, b) in c.as_flat().iter().zip(expect.as_flat()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((c.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_is_absorbing() {
        let out = Prior::new(Alphabet::range(2), vec![0.3, 0.7]).unwrap();
        let k = Channel::constant(Alphabet::range(3), &out);
        let mu = Channel::new(
            Alphabet::range(2),
            Alphabet::range(3),
            vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.4, 0.0]],
        )
        .unwrap();
        let c = compose(&k, &mu).unwrap();
        for row in c.rows() {
            assert!((row[0] - 0.3).abs() < 1e-15 && (row[1] - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn compose_checks_alphabets() {
        let a = Channel::identity(Alphabet::range(2));
        let b = Channel::identity(Alphabet::range(3));
        assert!(matches!(compose(&a, &b), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            Channel::new(Alphabet::range(1), Alphabet::range(2), vec![vec![0.5, 0.6]]),
            Err(Error::InvalidChannel { row: 0, .. })
        ));
    }
}

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered, nonempty set of distinct symbol labels.
///
/// The order is fixed at construction and is the index order used by every
/// table, channel and reduction in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        let mut seen = HashSet::with_capacity(symbols.len());
        for sym in &symbols {
            if !seen.insert(sym.as_str()) {
                return Err(Error::InvalidAlphabet(format!("duplicate label `{sym}`")));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// The alphabet `{"0", "1", ..., "n-1"}`.
    pub fn range(n: usize) -> Self {
        assert!(n > 0, "alphabet size must be positive");
        Alphabet {
            symbols: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    /// Pairs `(a,b)` in row-major order, labelled `"a,b"` (parenthesised
    /// when a label already contains a comma).
    pub fn product(a: &Alphabet, b: &Alphabet) -> Self {
        let wrap = |s: &str| {
            if s.contains(',') {
                format!("({s})")
            } else {
                s.to_string()
            }
        };
        let mut symbols = Vec::with_capacity(a.len() * b.len());
        for x in &a.symbols {
            for y in &b.symbols {
                symbols.push(format!("{},{}", wrap(x), wrap(y)));
            }
        }
        Alphabet { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }

    /// Sub-alphabet keeping the listed indices, in the given order.
    pub(crate) fn select(&self, keep: &[usize]) -> Result<Self> {
        Alphabet::new(keep.iter().map(|&i| self.symbols[i].clone()))
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_duplicates() {
        assert!(matches!(
            Alphabet::new(Vec::<String>::new()),
            Err(Error::InvalidAlphabet(_))
        ));
        assert!(matches!(
            Alphabet::new(["a", "b", "a"]),
            Err(Error::InvalidAlphabet(_))
        ));
    }

    #[test]
    fn product_labels() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        let b = Alphabet::new(["x", "y,z"]).unwrap();
        let p = Alphabet::product(&a, &b);
        assert_eq!(p.symbols(), ["0,x", "0,(y,z)", "1,x", "1,(y,z)"]);
        assert_eq!(p.index_of("1,x"), Some(2));
    }
}

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Named points, interned to dense indices `0..len()`.
#[derive(Clone, Debug, Default)]
pub struct PointSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

/// Characters that cannot appear in a point label.
const RESERVED: &[char] = &['|', ',', '(', ')', ';', '#', ':'];

pub fn is_valid_label(label: &str) -> bool {
    !label.is_empty()
        && !label
            .chars()
            .any(|c| c.is_whitespace() || RESERVED.contains(&c))
}

impl PointSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = Self::new();
        for l in labels {
            let l = l.into();
            if set.index.contains_key(&l) {
                return Err(Error::Invalid(format!("duplicate point label {l:?}")));
            }
            set.intern(&l)?;
        }
        Ok(set)
    }

    /// Points named `{prefix}1 .. {prefix}n`.
    pub fn numbered(n: usize, prefix: &str) -> Self {
        let mut set = Self::new();
        for i in 1..=n {
            set.intern(&format!("{prefix}{i}"))
                .expect("generated labels are valid");
        }
        set
    }

    /// Returns the index of `label`, adding it if it is new.
    pub fn intern(&mut self, label: &str) -> Result<usize> {
        if let Some(&i) = self.index.get(label) {
            return Ok(i);
        }
        if !is_valid_label(label) {
            return Err(Error::InvalidLabel(label.to_string()));
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        Ok(i)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::PointOutOfRange {
                index: i,
                len: self.len(),
            })
        }
    }
}

/// Two point sets are equal when they name the same points, regardless of interning order.
impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.labels.iter().all(|l| other.index.contains_key(l))
    }
}

impl Eq for PointSet {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_dense_and_stable() {
        let mut p = PointSet::new();
        assert_eq!(p.intern("b").unwrap(), 0);
        assert_eq!(p.intern("a").unwrap(), 1);
        assert_eq!(p.intern("b").unwrap(), 0);
        assert_eq!(p.len(), 2);
        assert_eq!(p.name(1), "a");
    }

    #[test]
    fn rejects_reserved_characters() {
        for bad in ["", "a b", "a|b", "a,b", "(a", "a)", "a;", "a#", "tree:"] {
            assert!(!is_valid_label(bad), "{bad:?}");
        }
        assert!(is_valid_label("x_1.2-α"));
    }

    #[test]
    fn equality_ignores_order() {
        let a = PointSet::from_labels(["a", "b"]).unwrap();
        let b = PointSet::from_labels(["b", "a"]).unwrap();
        assert_eq!(a, b);
        assert!(PointSet::from_labels(["a", "a"]).is_err());
    }
}

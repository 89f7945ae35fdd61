//! Index sets over `{0, .., universe-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sorted, duplicate-free set of column indices drawn from `0..universe`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    universe: usize,
}

impl SupportSet {
    /// Builds a support from arbitrary-order indices. Duplicates and
    /// out-of-range indices are rejected.
    pub fn new(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::arg(format!(
                "duplicate index in support {indices:?}"
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= universe {
                return Err(Error::arg(format!(
                    "index {last} out of range for universe {universe}"
                )));
            }
        }
        Ok(Self { indices, universe })
    }

    /// Caller guarantees `indices` is strictly increasing and below `universe`.
    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>, universe: usize) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.last().is_none_or(|&i| i < universe));
        Self { indices, universe }
    }

    pub fn empty(universe: usize) -> Self {
        Self {
            indices: Vec::new(),
            universe,
        }
    }

    pub fn full(universe: usize) -> Self {
        Self {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.universe - self.len());
        let mut it = self.indices.iter().peekable();
        for i in 0..self.universe {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        Self::from_sorted_unchecked(out, self.universe)
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.universe, other.universe);
        let (a, b) = (&self.indices, &other.indices);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self::from_sorted_unchecked(out, self.universe.max(other.universe))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let out = self.iter().filter(|&i| other.contains(i)).collect();
        Self::from_sorted_unchecked(out, self.universe)
    }

    /// Elements of `self` that are not in `other`.
    pub fn difference(&self, other: &Self) -> Self {
        let out = self.iter().filter(|&i| !other.contains(i)).collect();
        Self::from_sorted_unchecked(out, self.universe)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|i| other.contains(i))
    }
}

impl std::fmt::Display for SupportSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_sorts_and_validates() {
        let s = SupportSet::new(vec![3, 0, 2], 4).unwrap();
        assert_eq!(s.indices(), &[0, 2, 3]);
        assert!(SupportSet::new(vec![1, 1], 4).is_err());
        assert!(SupportSet::new(vec![4], 4).is_err());
    }

    #[test]
    fn set_algebra() {
        let a = SupportSet::new(vec![0, 2, 5], 6).unwrap();
        let b = SupportSet::new(vec![2, 3], 6).unwrap();
        assert_eq!(a.union(&b).indices(), &[0, 2, 3, 5]);
        assert_eq!(a.intersection(&b).indices(), &[2]);
        assert_eq!(a.difference(&b).indices(), &[0, 5]);
        assert_eq!(a.complement().indices(), &[1, 3, 4]);
        assert!(a.intersection(&b).is_subset(&a));
        assert_eq!(a.to_string(), "{0,2,5}");
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A set of feature indices kept in strictly ascending order.
///
/// The sorted form is canonical, so derived `Eq`/`Hash`/`Ord` compare sets,
/// and `Ord` is the lexicographic order used by every tie-break.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSubset(Vec<usize>);

impl FeatureSubset {
    /// Builds a subset from arbitrary indices, sorting and deduplicating them.
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        FeatureSubset(v)
    }

    pub fn singleton(index: usize) -> Self {
        FeatureSubset(vec![index])
    }

    /// Every index of `0..n`.
    pub fn full(n: usize) -> Self {
        FeatureSubset((0..n).collect())
    }

    /// Subset whose members are the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        FeatureSubset((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn with(&self, index: usize) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&index) {
            v.insert(pos, index);
        }
        FeatureSubset(v)
    }

    pub fn without(&self, index: usize) -> Self {
        FeatureSubset(self.0.iter().copied().filter(|&i| i != index).collect())
    }

    pub fn is_subset_of(&self, other: &FeatureSubset) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    /// Checks that the subset is non-empty and every index is below `n_features`.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::EmptySubset);
        }
        match self.0.iter().find(|&&i| i >= n_features) {
            Some(&index) => Err(Error::FeatureOutOfRange { index, n_features }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<usize> for FeatureSubset {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        FeatureSubset::new(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let s = FeatureSubset::new([3, 1, 3, 0]);
        assert_eq!(s.indices(), &[0, 1, 3]);
        assert_eq!(s, FeatureSubset::new([0, 3, 1]));
        assert_eq!(s.with(2).indices(), &[0, 1, 2, 3]);
        assert_eq!(s.with(1), s);
        assert_eq!(s.without(1).indices(), &[0, 3]);
        assert_eq!(s.to_string(), "{0,1,3}");
    }

    #[test]
    fn lexicographic_order() {
        assert!(FeatureSubset::new([0, 5]) < FeatureSubset::new([1]));
        assert!(FeatureSubset::new([0, 1]) < FeatureSubset::new([0, 2]));
        assert!(FeatureSubset::new([0]) < FeatureSubset::new([0, 1]));
    }

    #[test]
    fn validation() {
        assert!(matches!(
            FeatureSubset::default().validate(3),
            Err(Error::EmptySubset)
        ));
        assert!(matches!(
            FeatureSubset::new([4]).validate(3),
            Err(Error::FeatureOutOfRange { index: 4, .. })
        ));
        assert!(FeatureSubset::from_mask(0b101).validate(3).is_ok());
    }
}

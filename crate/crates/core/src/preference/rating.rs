use serde::{Deserialize, Serialize};

use super::PreferenceError;

/// A 0-5 rating; 0 means the variant was skipped as faulty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Rating(u8);

impl Rating {
    pub const SKIP: Rating = Rating(0);
    pub const MAX: Rating = Rating(5);

    pub fn new(value: u8) -> Result<Self, PreferenceError> {
        if value > 5 {
            return Err(PreferenceError::InvalidRating(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_skip(self) -> bool {
        self.0 == 0
    }
}

impl TryFrom<u8> for Rating {
    type Error = PreferenceError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Rating> for u8 {
    fn from(r: Rating) -> u8 {
        r.0
    }
}

/// `preferred` was rated strictly higher than `less_preferred`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PreferencePair {
    pub preferred: usize,
    pub less_preferred: usize,
}

impl PreferencePair {
    pub fn new(preferred: usize, less_preferred: usize) -> Result<Self, PreferenceError> {
        if preferred == less_preferred {
            return Err(PreferenceError::SelfPair(preferred));
        }
        Ok(Self {
            preferred,
            less_preferred,
        })
    }

    pub fn offset(self, by: usize) -> Self {
        Self {
            preferred: self.preferred + by,
            less_preferred: self.less_preferred + by,
        }
    }
}

/// One pair for every two entries with `rating(i) > rating(j) >= 1`.
/// Skipped entries and ties contribute nothing.
pub fn ratings_to_pairs(ratings: &[(usize, Rating)]) -> Vec<PreferencePair> {
    let mut pairs = Vec::new();
    for &(i, ri) in ratings {
        for &(j, rj) in ratings {
            if ri > rj && !rj.is_skip() {
                pairs.push(PreferencePair {
                    preferred: i,
                    less_preferred: j,
                });
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn rated(values: &[u8]) -> Vec<(usize, Rating)> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i + 1, Rating::new(v).unwrap()))
            .collect()
    }

    fn set(pairs: &[(usize, usize)]) -> BTreeSet<PreferencePair> {
        pairs.iter().map(|&(a, b)| PreferencePair::new(a, b).unwrap()).collect()
    }

    #[test]
    fn four_variants_rated_3_4_5_1() {
        let got: BTreeSet<_> = ratings_to_pairs(&rated(&[3, 4, 5, 1])).into_iter().collect();
        assert_eq!(got, set(&[(2, 1), (3, 1), (3, 2), (1, 4), (2, 4), (3, 4)]));
    }

    #[test]
    fn ties_give_nothing() {
        assert!(ratings_to_pairs(&rated(&[4, 4, 4, 4])).is_empty());
    }

    #[test]
    fn skips_give_nothing() {
        let got = ratings_to_pairs(&rated(&[0, 5, 0, 2]));
        assert_eq!(got, vec![PreferencePair::new(2, 4).unwrap()]);
    }

    #[test]
    fn rating_bounds() {
        assert!(Rating::new(6).is_err());
        assert!(serde_json::from_str::<Rating>("7").is_err());
        assert_eq!(serde_json::from_str::<Rating>("5").unwrap(), Rating::MAX);
    }

    #[test]
    fn self_pair_rejected() {
        assert!(PreferencePair::new(3, 3).is_err());
    }
}

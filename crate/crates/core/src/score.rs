//! The 1-6 rubric score scale used throughout the harness.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of rubric levels. The scale is fixed even when a sample does not
/// realize every level; metrics weight disagreements against all six.
pub const NUM_LEVELS: usize = 6;

/// A validated rubric score in 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(u8);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("score {0} outside the 1-6 rubric scale")]
pub struct ScoreOutOfRange(pub i64);

impl Score {
    pub const MIN: Score = Score(1);
    pub const MAX: Score = Score(6);

    pub fn new(value: i64) -> Result<Self, ScoreOutOfRange> {
        if (1..=6).contains(&value) {
            Ok(Score(value as u8))
        } else {
            Err(ScoreOutOfRange(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based index into a per-level array.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < NUM_LEVELS, "level index {index} out of range");
        Score(index as u8 + 1)
    }

    /// All six levels in ascending order.
    pub fn all() -> impl Iterator<Item = Score> {
        (1..=6).map(|v| Score(v))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<i64> for Score {
    type Error = ScoreOutOfRange;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Score::new(value)
    }
}

impl From<Score> for u8 {
    fn from(score: Score) -> u8 {
        score.0
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        Score::new(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_full_scale() {
        for v in 1..=6 {
            assert_eq!(Score::new(v).unwrap().value(), v as u8);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(Score::new(0), Err(ScoreOutOfRange(0)));
        assert_eq!(Score::new(7), Err(ScoreOutOfRange(7)));
        assert_eq!(Score::new(-3), Err(ScoreOutOfRange(-3)));
    }

    #[test]
    fn index_round_trips() {
        for s in Score::all() {
            assert_eq!(Score::from_index(s.index()), s);
        }
    }

    #[test]
    fn deserialize_validates() {
        assert!(serde_json::from_str::<Score>("4").is_ok());
        assert!(serde_json::from_str::<Score>("7").is_err());
        assert!(serde_json::from_str::<Score>("0").is_err());
    }
}

//! Shared value types: epochs, duration sequences, capacities and sample paths.

use std::fmt;
use std::ops::Deref;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SimError};

/// A simulated time instant.
pub type Epoch = f64;

/// What a duration sequence feeds into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Interarrival,
    Service,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Interarrival => "interarrival",
            Role::Service => "service",
        })
    }
}

/// An ordered list of nonnegative, finite durations.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationSequence {
    items: Vec<f64>,
    role: Role,
}

impl DurationSequence {
    pub fn new(items: Vec<f64>, role: Role) -> Result<Self> {
        if let Some((index, &value)) = items
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(SimError::NegativeDuration { role, index, value });
        }
        Ok(Self { items, role })
    }

    pub fn interarrivals(items: Vec<f64>) -> Result<Self> {
        Self::new(items, Role::Interarrival)
    }

    pub fn services(items: Vec<f64>) -> Result<Self> {
        Self::new(items, Role::Service)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.items
    }

    /// Checks that at least `horizon` items are available.
    pub fn require(&self, horizon: usize, node: Option<usize>) -> Result<&[f64]> {
        if self.items.len() < horizon {
            return Err(SimError::InputLength {
                role: self.role,
                node,
                needed: horizon,
                got: self.items.len(),
            });
        }
        Ok(&self.items[..horizon])
    }
}

impl Deref for DurationSequence {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.items
    }
}

/// A buffer size or initial population that may be infinite.
///
/// Serialized as a nonnegative integer or the string `"unbounded"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Capacity {
    Finite(usize),
    #[default]
    Unbounded,
}

impl Capacity {
    pub fn finite(self) -> Option<usize> {
        match self {
            Capacity::Finite(n) => Some(n),
            Capacity::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Capacity::Unbounded)
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(n) => write!(f, "{n}"),
            Capacity::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Capacity {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Capacity::Finite(n) => serializer.serialize_u64(*n as u64),
            Capacity::Unbounded => serializer.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Capacity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct CapacityVisitor;

        impl Visitor<'_> for CapacityVisitor {
            type Value = Capacity;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative integer or \"unbounded\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Capacity, E> {
                Ok(Capacity::Finite(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Capacity, E> {
                if v < 0 {
                    return Err(E::custom(format!("capacity must be nonnegative, got {v}")));
                }
                Ok(Capacity::Finite(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Capacity, E> {
                match v {
                    "unbounded" | "inf" | "infinite" => Ok(Capacity::Unbounded),
                    other => Err(E::custom(format!("unknown capacity {other:?}"))),
                }
            }
        }

        deserializer.deserialize_any(CapacityVisitor)
    }
}

/// Per-node arrival and departure epochs of one realization.
///
/// For single-server models `arrivals[n][k]` and `departures[n][k]` belong to
/// the k-th customer served at node `n` (0-based). For the multi-server queue
/// `completions` holds completion epochs in arrival order and `departures[0]`
/// is the sorted departure sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T = Epoch> {
    pub arrivals: Vec<Vec<T>>,
    pub departures: Vec<Vec<T>>,
    pub completions: Option<Vec<T>>,
    pub horizon: usize,
}

impl<T> SamplePath<T> {
    pub fn node_count(&self) -> usize {
        self.departures.len()
    }

    /// Departure sequence of the last node; the system departures of a tandem.
    pub fn system_departures(&self) -> &[T] {
        self.departures.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(matches!(
            DurationSequence::services(vec![1.0, -0.5]),
            Err(SimError::NegativeDuration { index: 1, .. })
        ));
        assert!(DurationSequence::services(vec![f64::NAN]).is_err());
        assert!(DurationSequence::services(vec![0.0, 2.0]).is_ok());
    }

    #[test]
    fn require_reports_length() {
        let seq = DurationSequence::interarrivals(vec![1.0, 1.0]).unwrap();
        let err = seq.require(3, None).unwrap_err();
        assert_eq!(
            err,
            SimError::InputLength {
                role: Role::Interarrival,
                node: None,
                needed: 3,
                got: 2
            }
        );
    }
}

//! The (max, min, +) operations the recursion engines are written against.
//!
//! Every engine is generic over [`Ops`], so the same code evaluates plain
//! epochs ([`Exact`]) and epochs carrying a derivative ([`Tangents`]).

use std::cell::Cell;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

/// A time-like value supporting the arithmetic used by recursions and metrics.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// A value with no parameter dependence.
    fn constant(value: f64) -> Self;

    fn value(self) -> f64;

    /// Maximum, keeping `self` on equal values.
    fn sup(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    fn zero() -> Self {
        Self::constant(0.0)
    }
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }

    fn value(self) -> f64 {
        self
    }
}

/// Binary max and min as applied by the engines.
pub trait Ops {
    type T: Scalar;

    fn max(&self, a: Self::T, b: Self::T) -> Self::T;
    fn min(&self, a: Self::T, b: Self::T) -> Self::T;
}

/// Plain epoch arithmetic.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exact;

impl Ops for Exact {
    type T = f64;

    fn max(&self, a: f64, b: f64) -> f64 {
        a.max(b)
    }

    fn min(&self, a: f64, b: f64) -> f64 {
        a.min(b)
    }
}

/// An epoch together with its derivative with respect to a scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TangentEpoch {
    pub value: f64,
    pub tangent: f64,
}

impl TangentEpoch {
    pub fn new(value: f64, tangent: f64) -> Self {
        Self { value, tangent }
    }
}

impl Add for TangentEpoch {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.tangent + rhs.tangent)
    }
}

impl Sub for TangentEpoch {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.tangent - rhs.tangent)
    }
}

impl Mul for TangentEpoch {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.tangent * rhs.value + self.value * rhs.tangent,
        )
    }
}

impl Div for TangentEpoch {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let v = self.value / rhs.value;
        Self::new(
            v,
            (self.tangent * rhs.value - self.value * rhs.tangent) / (rhs.value * rhs.value),
        )
    }
}

impl Scalar for TangentEpoch {
    fn constant(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    fn value(self) -> f64 {
        self.value
    }
}

/// Tangent propagation: max/min select the tangent of the winning operand,
/// the left one on equal values.
///
/// Equal values with different tangents are points where the path is not
/// differentiable; they are counted in `ties`.
#[derive(Debug, Default)]
pub struct Tangents {
    ties: Cell<u64>,
}

impl Tangents {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ties(&self) -> u64 {
        self.ties.get()
    }

    fn note_tie(&self, a: TangentEpoch, b: TangentEpoch) {
        if a.value == b.value && a.tangent != b.tangent {
            self.ties.set(self.ties.get() + 1);
        }
    }
}

impl Ops for Tangents {
    type T = TangentEpoch;

    fn max(&self, a: TangentEpoch, b: TangentEpoch) -> TangentEpoch {
        self.note_tie(a, b);
        if b.value > a.value {
            b
        } else {
            a
        }
    }

    fn min(&self, a: TangentEpoch, b: TangentEpoch) -> TangentEpoch {
        self.note_tie(a, b);
        if b.value < a.value {
            b
        } else {
            a
        }
    }
}

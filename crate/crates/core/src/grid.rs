//! Periodic grid, nodal state and model parameters.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid that fits the five-point stencils.
pub const MIN_NODES: usize = 5;

/// Periodic index: `j mod m` mapped into `0..m`.
#[inline]
pub fn wrap(j: i64, m: usize) -> usize {
    debug_assert!(m >= 1);
    j.rem_euclid(m as i64) as usize
}

/// Uniform periodic grid on `[0, L)` with nodes `x_j = j h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    m: usize,
    length: f64,
    h: f64,
}

impl GridSpec {
    pub fn new(m: usize, length: f64) -> Result<Self> {
        if m < MIN_NODES {
            return Err(Error::GridTooSmall { m, min: MIN_NODES });
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::BadLength(length));
        }
        Ok(Self {
            m,
            length,
            h: length / m as f64,
        })
    }

    /// `m` nodes on `[0, 2π)`.
    pub fn periodic_2pi(m: usize) -> Result<Self> {
        Self::new(m, 2.0 * PI)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.x(j)).collect()
    }

    #[inline]
    pub fn wrap(&self, j: i64) -> usize {
        wrap(j, self.m)
    }

    /// Samples `f` at the nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Result<StateVector> {
        StateVector::new(*self, self.nodes().into_iter().map(f).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    Linf,
}

/// Nodal values `u_j` tied to the grid they were sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: GridSpec,
    values: Vec<f64>,
}

impl StateVector {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.m() {
            return Err(Error::LengthMismatch {
                expected: grid.m(),
                got: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.m()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.m()])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a periodic index.
    #[inline]
    pub fn at(&self, j: i64) -> f64 {
        self.values[self.grid.wrap(j)]
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// `self - other`, rejecting states from different grids.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Self::new(self.grid, values)
    }

    /// Cyclic shift: `(S u)_j = u_{j-s}`.
    pub fn shifted(&self, s: i64) -> Self {
        let values = (0..self.grid.m() as i64).map(|j| self.at(j - s)).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Reflection-negation `(σu)_j = -u_{-j}`, the discrete form of `x → -x, u → -u`.
    pub fn reflected_negated(&self) -> Self {
        let values = (0..self.grid.m() as i64).map(|j| -self.at(-j)).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2 => (self.grid.h() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt(),
            NormKind::Linf => self.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs())),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Free-function form of [`StateVector::norm`].
pub fn norm(u: &StateVector, kind: NormKind) -> f64 {
    u.norm(kind)
}

/// Linear growth `R` and element coupling `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub r: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(r: f64, gamma: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::BadGrowth(r));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::BadGamma(gamma));
        }
        Ok(Self { r, gamma })
    }

    /// Fully coupled model, `gamma = 1`.
    pub fn coupled(r: f64) -> Result<Self> {
        Self::new(r, 1.0)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { r: 2.0, gamma: 1.0 }
    }
}

/// Which set of terms the discrete right-hand side keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationLevel {
    /// Second-order conventional differences, errors `O(h²)`.
    #[serde(rename = "conventional")]
    Conventional,
    /// Adds the fourth-order `R` correction and the quadratic nonlinear block.
    #[serde(rename = "first")]
    FirstCorrection,
    /// Adds the cubic nonlinear blocks.
    #[serde(rename = "second")]
    SecondCorrection,
    /// The closed low-order model written with everything on one side.
    #[serde(rename = "eq3")]
    LowOrderEq3,
}

impl TruncationLevel {
    pub const ALL: [TruncationLevel; 4] = [
        TruncationLevel::Conventional,
        TruncationLevel::FirstCorrection,
        TruncationLevel::SecondCorrection,
        TruncationLevel::LowOrderEq3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TruncationLevel::Conventional => "conventional",
            TruncationLevel::FirstCorrection => "first",
            TruncationLevel::SecondCorrection => "second",
            TruncationLevel::LowOrderEq3 => "eq3",
        }
    }
}

impl fmt::Display for TruncationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TruncationLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conventional" => Ok(Self::Conventional),
            "first" | "firstcorrection" => Ok(Self::FirstCorrection),
            "second" | "secondcorrection" => Ok(Self::SecondCorrection),
            "eq3" | "loworder" | "loworder_eq3" => Ok(Self::LowOrderEq3),
            other => Err(Error::UnknownScheme(other.to_string())),
        }
    }
}

//! Discrete right-hand sides `du_j/dt = g_j(u)` of the holistic finite-difference models.
//!
//! Every level is a cumulative truncation of one centre-manifold expansion in the
//! coupling parameter `gamma`, except [`TruncationLevel::LowOrderEq3`], which is the
//! closed low-order model at `gamma = 1` written out term by term. At `gamma = 1` the
//! first correction and the low-order model are algebraically identical.
//!
//! Two coefficients of the published expansion are read differently from how they
//! were typeset; see [`Corrections`].

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ModelParams, StateVector, TruncationLevel};

/// Exact rational coefficient, converted to `f64` once at compile time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub const fn new(num: i64, den: i64) -> Self {
        Self { num, den }
    }

    pub const fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

const HALF: f64 = Rational::new(1, 2).value();
const TWELFTH: f64 = Rational::new(1, 12).value();
const SIXTEENTH: f64 = Rational::new(1, 16).value();
const FORTY_EIGHTH: f64 = Rational::new(1, 48).value();
const ONE_20TH: f64 = Rational::new(1, 120).value();
const CUBIC_SCALE: f64 = Rational::new(1, 60480).value();

/// Which reading of the two suspect terms in the quadratic and cubic blocks to use.
///
/// `squares`: in the `1/48h` block the lone `-3u_{j+1}` and `+3u_{j-1}` are read as
/// `-3u_{j+1}²` and `+3u_{j-1}²`. Without it the first correction no longer matches
/// the low-order model.
///
/// `mirror`: in the cubic block the `u_{j-1}²` bracket is read as
/// `(10u_{j-2} - 20u_{j-1} + 235u_j)`, the mirror image of the `u_{j+1}²` bracket.
/// Without it the scheme loses the `x → -x, u → -u` symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corrections {
    pub squares: bool,
    pub mirror: bool,
}

impl Corrections {
    /// The terms exactly as typeset.
    pub const PRINTED: Corrections = Corrections {
        squares: false,
        mirror: false,
    };
    pub const CORRECTED: Corrections = Corrections {
        squares: true,
        mirror: true,
    };
}

impl Default for Corrections {
    fn default() -> Self {
        Self::CORRECTED
    }
}

/// Tendency `g_j` at every node plus what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsEvaluation {
    pub tendency: Vec<f64>,
    pub level: TruncationLevel,
    pub params: ModelParams,
}

/// Five-point neighbourhood `u_{j-2} .. u_{j+2}`.
#[derive(Clone, Copy)]
struct Stencil {
    mm: f64,
    m: f64,
    c: f64,
    p: f64,
    pp: f64,
}

impl Stencil {
    #[inline]
    fn gather(u: &[f64], j: usize) -> Self {
        let n = u.len();
        Self {
            mm: u[(j + n - 2) % n],
            m: u[(j + n - 1) % n],
            c: u[j],
            p: u[(j + 1) % n],
            pp: u[(j + 2) % n],
        }
    }

    #[inline]
    fn second_difference(&self) -> f64 {
        self.p - 2.0 * self.c + self.m
    }

    #[inline]
    fn fourth_difference(&self) -> f64 {
        self.pp - 4.0 * self.p + 6.0 * self.c - 4.0 * self.m + self.mm
    }

    /// The bracket of the `gamma²/48h` block.
    #[inline]
    fn quadratic_block(&self, squares: bool) -> f64 {
        let (sp, sm) = if squares {
            (self.p * self.p, self.m * self.m)
        } else {
            (self.p, self.m)
        };
        self.pp * self.p + 3.0 * self.pp * self.c - 3.0 * sp - 3.0 * self.p * self.c
            + 3.0 * self.m * self.c
            + 3.0 * sm
            - 3.0 * self.mm * self.c
            - self.mm * self.m
    }

    /// The bracket of the `gamma² h²/60480` block.
    #[inline]
    fn cubic_block(&self, mirror: bool) -> f64 {
        let Stencil { mm, m, c, p, pp } = *self;
        let far_left = if mirror { mm } else { m };
        c * c * (-30.0 * pp - 170.0 * p + 256.0 * c - 170.0 * m - 30.0 * mm)
            + c * (-126.0 * pp * p - 54.0 * p * m - 126.0 * mm * m)
            + p * p * (10.0 * pp - 20.0 * p + 235.0 * c)
            + m * m * (10.0 * far_left - 20.0 * m + 235.0 * c)
    }
}

/// Evaluates `g` into `out` for nodal values on a periodic grid of spacing `h`.
///
/// Hot path for the time integrator; `u` and `out` must have the same length `>= 5`.
pub fn tendency_into(
    u: &[f64],
    h: f64,
    params: ModelParams,
    level: TruncationLevel,
    corrections: Corrections,
    out: &mut [f64],
) {
    assert_eq!(u.len(), out.len());
    let ModelParams { r, gamma } = params;
    let g2 = gamma * gamma;
    let h2 = h * h;
    let h4 = h2 * h2;

    for (j, slot) in out.iter_mut().enumerate() {
        let s = Stencil::gather(u, j);
        let d2 = s.second_difference();
        let d4 = s.fourth_difference();

        *slot = match level {
            TruncationLevel::LowOrderEq3 => {
                let advect = s.c * (-s.pp + 9.0 * s.p - 9.0 * s.m + s.mm) * SIXTEENTH / h
                    + (s.p * s.p - s.m * s.m) * SIXTEENTH / h
                    - (s.pp * s.p - s.mm * s.m) * FORTY_EIGHTH / h;
                let growth =
                    r * (-s.pp + 16.0 * s.p - 30.0 * s.c + 16.0 * s.m - s.mm) * TWELFTH / h2;
                -(advect + growth + d4 / h4)
            }
            _ => {
                let mut g =
                    -gamma * r / h2 * d2 - gamma * HALF / h * s.c * (s.p - s.m) - g2 / h4 * d4;
                if level >= TruncationLevel::FirstCorrection {
                    g += g2 * r * TWELFTH / h2 * d4;
                    g += g2 * FORTY_EIGHTH / h * s.quadratic_block(corrections.squares);
                }
                if level >= TruncationLevel::SecondCorrection {
                    g += gamma * h2 * ONE_20TH * s.c * s.c * d2;
                    g += g2 * h2 * CUBIC_SCALE * s.cubic_block(corrections.mirror);
                }
                g
            }
        };
    }
}

/// `du_j/dt` for the chosen truncation with the corrected coefficient reading.
pub fn rhs(u: &StateVector, params: ModelParams, level: TruncationLevel) -> RhsEvaluation {
    rhs_with(u, params, level, Corrections::default())
}

pub fn rhs_with(
    u: &StateVector,
    params: ModelParams,
    level: TruncationLevel,
    corrections: Corrections,
) -> RhsEvaluation {
    let mut tendency = vec![0.0; u.len()];
    tendency_into(
        u.values(),
        u.grid().h(),
        params,
        level,
        corrections,
        &mut tendency,
    );
    RhsEvaluation {
        tendency,
        level,
        params,
    }
}

/// Linear part of `g` only (nonlinear blocks dropped).
fn linear_tendency_at(
    u: &[f64],
    j: usize,
    h: f64,
    params: ModelParams,
    level: TruncationLevel,
) -> f64 {
    let ModelParams { r, gamma } = params;
    let s = Stencil::gather(u, j);
    let h2 = h * h;
    let d2 = s.second_difference();
    let d4 = s.fourth_difference();
    match level {
        TruncationLevel::LowOrderEq3 => {
            -r * (-s.pp + 16.0 * s.p - 30.0 * s.c + 16.0 * s.m - s.mm) * TWELFTH / h2
                - d4 / (h2 * h2)
        }
        TruncationLevel::Conventional => -gamma * r / h2 * d2 - gamma * gamma / (h2 * h2) * d4,
        TruncationLevel::FirstCorrection | TruncationLevel::SecondCorrection => {
            -gamma * r / h2 * d2 - gamma * gamma / (h2 * h2) * d4
                + gamma * gamma * r * TWELFTH / h2 * d4
        }
    }
}

/// Only the `R`-proportional part of `g` (growth term probe).
pub fn growth_term(u: &StateVector, params: ModelParams, level: TruncationLevel) -> Vec<f64> {
    let h = u.grid().h();
    let without_r = ModelParams { r: 0.0, ..params };
    (0..u.len())
        .map(|j| {
            linear_tendency_at(u.values(), j, h, params, level)
                - linear_tendency_at(u.values(), j, h, without_r, level)
        })
        .collect()
}

/// Advective form `u_j (u_{j+1} - u_{j-1}) / 2h`.
pub fn nonlinear_advective(u: &StateVector, grid: &GridSpec) -> Vec<f64> {
    let h = grid.h();
    (0..u.len() as i64)
        .map(|j| u.at(j) * (u.at(j + 1) - u.at(j - 1)) / (2.0 * h))
        .collect()
}

/// Conservative form `(u_{j+1}² - u_{j-1}²) / 4h`.
pub fn nonlinear_conservative(u: &StateVector, grid: &GridSpec) -> Vec<f64> {
    let h = grid.h();
    (0..u.len() as i64)
        .map(|j| (u.at(j + 1).powi(2) - u.at(j - 1).powi(2)) / (4.0 * h))
        .collect()
}

/// Growth rate of the linearised scheme on the mode `cos(k x_j)`.
///
/// Obtained by applying the linear stencil to the sampled mode and reading off the
/// factor at `x_0`, where the mode equals one.
pub fn linear_symbol(
    k: usize,
    params: ModelParams,
    grid: &GridSpec,
    level: TruncationLevel,
) -> Result<f64> {
    let max = grid.m() / 2;
    if k > max {
        return Err(Error::WavenumberOutOfRange { k, max });
    }
    let wavenumber = 2.0 * std::f64::consts::PI * k as f64 / grid.length();
    let mode: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|x| (wavenumber * x).cos())
        .collect();
    Ok(linear_tendency_at(&mode, 0, grid.h(), params, level))
}

/// Largest linear decay rate `max_k |symbol(k)|`, used to cap explicit steps.
pub fn fastest_linear_rate(params: ModelParams, grid: &GridSpec, level: TruncationLevel) -> f64 {
    (0..=grid.m() / 2)
        .filter_map(|k| linear_symbol(k, params, grid, level).ok())
        .fold(0.0, |acc: f64, s| acc.max(s.abs()))
}

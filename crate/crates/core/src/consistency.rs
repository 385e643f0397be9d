//! Observed truncation orders: apply a discrete right-hand side to a smooth
//! periodic field, subtract the exact continuum value at the nodes and fit the
//! decay of the max-norm residual against `h`.

use std::f64::consts::PI;
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{GridSpec, ModelParams, StateVector, TruncationLevel};
use crate::rhs::{growth_term, nonlinear_advective, nonlinear_conservative, rhs};

/// A periodic field with closed-form derivatives up to fourth order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticField {
    /// `(wavenumber, amplitude, phase)` terms of `Σ a sin(k x + φ)` plus a constant.
    pub modes: Vec<(f64, f64, f64)>,
    pub offset: f64,
    pub length: f64,
}

impl AnalyticField {
    /// `a sin x` on `[0, 2π)`.
    pub fn sine(amplitude: f64) -> Self {
        Self {
            modes: vec![(1.0, amplitude, 0.0)],
            offset: 0.0,
            length: 2.0 * PI,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            modes: Vec::new(),
            offset: c,
            length: 2.0 * PI,
        }
    }

    /// `d`-th derivative at `x`.
    pub fn derivative(&self, d: u32, x: f64) -> f64 {
        let base = if d == 0 { self.offset } else { 0.0 };
        self.modes.iter().fold(base, |acc, &(k, a, phi)| {
            // d/dx sin(θ) shifts the phase by π/2
            acc + a * k.powi(d as i32) * (k * x + phi + d as f64 * PI / 2.0).sin()
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            modes: self.modes.iter().map(|&(k, a, p)| (k, s * a, p)).collect(),
            offset: s * self.offset,
            length: self.length,
        }
    }
}

/// Which part of the right-hand side is compared with its continuum counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// `R`-proportional terms against `-R u_xx`.
    LinearR,
    /// Whole tendency against `-(u u_x + R u_xx + u_xxxx)`.
    Full,
    /// `u_j (u_{j+1} - u_{j-1}) / 2h` against `u u_x`.
    Advective,
    /// `(u_{j+1}² - u_{j-1}²) / 4h` against `u u_x`.
    Conservative,
}

impl Probe {
    pub fn name(&self) -> &'static str {
        match self {
            Probe::LinearR => "linear_r",
            Probe::Full => "full",
            Probe::Advective => "advective",
            Probe::Conservative => "conservative",
        }
    }
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub scheme: TruncationLevel,
    pub probe: Probe,
    pub m_values: Vec<usize>,
    /// Max-norm residual for each entry of `m_values`.
    pub residuals: Vec<f64>,
    /// Grids left out of the fit because their residual was exactly zero.
    pub excluded: Vec<usize>,
    /// Least-squares slope of `log residual` against `log h` on the finest three usable grids.
    pub fitted_order: Option<f64>,
}

/// Max-norm residual of one probe on one grid.
pub fn residual(
    field: &AnalyticField,
    params: ModelParams,
    level: TruncationLevel,
    probe: Probe,
    m: usize,
) -> Result<f64> {
    let grid = GridSpec::new(m, field.length)?;
    let u = grid.sample(|x| field.derivative(0, x))?;
    let discrete = discrete_probe(&u, &grid, params, level, probe);
    let residual = grid
        .nodes()
        .iter()
        .zip(&discrete)
        .map(|(&x, d)| (d - continuum_probe(field, params, probe, x)).abs())
        .fold(0.0, f64::max);
    Ok(residual)
}

fn discrete_probe(
    u: &StateVector,
    grid: &GridSpec,
    params: ModelParams,
    level: TruncationLevel,
    probe: Probe,
) -> Vec<f64> {
    match probe {
        Probe::LinearR => growth_term(u, params, level),
        Probe::Full => rhs(u, params, level).tendency,
        Probe::Advective => nonlinear_advective(u, grid),
        Probe::Conservative => nonlinear_conservative(u, grid),
    }
}

fn continuum_probe(field: &AnalyticField, params: ModelParams, probe: Probe, x: f64) -> f64 {
    let u = field.derivative(0, x);
    let ux = field.derivative(1, x);
    let uxx = field.derivative(2, x);
    let uxxxx = field.derivative(4, x);
    match probe {
        Probe::LinearR => -params.r * uxx,
        Probe::Full => -(u * ux + params.r * uxx + uxxxx),
        Probe::Advective | Probe::Conservative => u * ux,
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Residuals over `m_list` and the observed order `p` in `residual ~ h^p`.
pub fn observed_order(
    field: &AnalyticField,
    params: ModelParams,
    level: TruncationLevel,
    probe: Probe,
    m_list: &[usize],
) -> Result<OrderEstimate> {
    if m_list.len() < 3 {
        return Err(Error::BadConfig("need at least three grid levels".into()));
    }
    if m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadConfig("grid levels must increase".into()));
    }
    let residuals = m_list
        .iter()
        .map(|&m| residual(field, params, level, probe, m))
        .collect::<Result<Vec<_>>>()?;

    let mut excluded = Vec::new();
    let mut usable = Vec::new();
    for (&m, &r) in m_list.iter().zip(&residuals) {
        if r > 0.0 {
            usable.push((m, r));
        } else {
            warn!("{level}/{probe}: zero residual at m = {m}, excluded from fit");
            excluded.push(m);
        }
    }
    let finest = &usable[usable.len().saturating_sub(3)..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = finest
        .iter()
        .map(|&(m, r)| ((field.length / m as f64).ln(), r.ln()))
        .unzip();
    let fitted_order = if finest.len() >= 2 {
        fit_slope(&xs, &ys)
    } else {
        None
    };

    Ok(OrderEstimate {
        scheme: level,
        probe,
        m_values: m_list.to_vec(),
        residuals,
        excluded,
        fitted_order,
    })
}

/// Runs [`observed_order`] for every `(scheme, probe)` pair.
pub fn order_table(
    field: &AnalyticField,
    params: ModelParams,
    jobs: &[(TruncationLevel, Probe)],
    m_list: &[usize],
    exec: Execution,
) -> Result<Vec<OrderEstimate>> {
    exec.map(jobs, |&(level, probe)| {
        observed_order(field, params, level, probe, m_list)
    })
    .into_iter()
    .collect()
}

/// Scaling exponent `q` in `residual ~ a^q` at fixed `m`, from amplitudes `a`.
///
/// Separates amplitude dependence from grid dependence for the nonlinear blocks.
pub fn amplitude_order(
    field: &AnalyticField,
    params: ModelParams,
    level: TruncationLevel,
    probe: Probe,
    m: usize,
    amplitudes: &[f64],
) -> Result<Option<f64>> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &a in amplitudes {
        let r = residual(&field.scaled(a), params, level, probe, m)?;
        if r > 0.0 {
            xs.push(a.ln());
            ys.push(r.ln());
        }
    }
    Ok(fit_slope(&xs, &ys))
}

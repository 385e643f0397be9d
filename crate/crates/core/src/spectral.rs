//! Fourier pseudospectral reference solutions of `u_t + u u_x + R u_xx + u_xxxx = 0`
//! on a periodic domain.
//!
//! The linear part `R κ² - κ⁴` is propagated exactly with an integrating factor
//! and the nonlinear term `-(u²/2)_x` is stepped with an adaptive Lawson form of
//! Dormand-Prince 5(4). All exponentials that appear have arguments
//! `L (c_i - c_j) dt` with `c_i >= c_j`, so stiff modes only ever decay.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, StateVector};
use crate::integrator::{IntegrationStatus, Trajectory};

/// Fraction of total energy allowed in the upper third of the retained band.
pub const RESOLUTION_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    /// Number of collocation points, a power of two `>= 64`.
    pub n: usize,
    pub dealias: bool,
    pub r: f64,
    pub length: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl SpectralConfig {
    pub fn new(n: usize, r: f64, t_end: f64, output_times: Vec<f64>) -> Self {
        Self {
            n,
            dealias: true,
            r,
            length: 2.0 * PI,
            t_start: 0.0,
            t_end,
            output_times,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::BadSpectralConfig(msg.to_string()));
        if !self.n.is_power_of_two() || self.n < 64 {
            return bad("N must be a power of two >= 64");
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad("domain length must be positive");
        }
        if !self.r.is_finite() {
            return bad("R must be finite");
        }
        if self.t_end.partial_cmp(&self.t_start) != Some(std::cmp::Ordering::Greater) {
            return bad("need t_end > t_start");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.output_times.is_empty()
            || self.output_times.windows(2).any(|w| w[1] <= w[0])
            || self.output_times[0] < self.t_start
            || *self.output_times.last().unwrap() > self.t_end
        {
            return bad("output times must be increasing and inside the span");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.length)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub trajectory: Trajectory,
    /// Largest fraction of energy seen in the upper third of the retained band.
    pub tail_energy_fraction: f64,
    pub under_resolved: bool,
    /// Largest imaginary part left by the inverse transform at any output time.
    pub max_imag_residue: f64,
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Transform workspace and spectral operators for one solve.
struct Workspace {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `R κ² - κ⁴` per mode.
    linear: Vec<f64>,
    /// `-i κ / 2` per mode, zero where dealiased or at Nyquist.
    half_derivative: Vec<Complex64>,
    keep: Vec<bool>,
    /// Upper third of the retained band, for the resolution check.
    tail: Vec<bool>,
    scratch: Vec<Complex64>,
}

impl Workspace {
    fn new(cfg: &SpectralConfig) -> Self {
        let n = cfg.n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let cutoff = if cfg.dealias { n / 3 } else { n / 2 - 1 };
        let mut linear = vec![0.0; n];
        let mut half_derivative = vec![Complex64::new(0.0, 0.0); n];
        let mut keep = vec![false; n];
        let mut tail = vec![false; n];
        for idx in 0..n {
            let k = signed_mode(idx, n);
            let kappa = 2.0 * PI * k as f64 / cfg.length;
            linear[idx] = cfg.r * kappa * kappa - kappa.powi(4);
            let kept = k.unsigned_abs() as usize <= cutoff;
            keep[idx] = kept;
            if kept {
                half_derivative[idx] = Complex64::new(0.0, -0.5 * kappa);
            }
            tail[idx] = kept && 3 * k.unsigned_abs() as usize > 2 * cutoff;
        }
        Self {
            n,
            forward,
            inverse,
            linear,
            half_derivative,
            keep,
            tail,
            scratch: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    fn to_spectral(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (c, &k) in buf.iter_mut().zip(&self.keep) {
            if !k {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        buf
    }

    fn to_physical(&self, spec: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spec.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Spectral nonlinear tendency `-(u²/2)_x` of the dealiased field.
    fn nonlinear(&mut self, spec: &[Complex64], out: &mut [Complex64]) {
        self.scratch.copy_from_slice(spec);
        self.inverse.process(&mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for c in self.scratch.iter_mut() {
            let u = *c * scale;
            *c = u * u;
        }
        self.forward.process(&mut self.scratch);
        for ((o, s), d) in out.iter_mut().zip(&self.scratch).zip(&self.half_derivative) {
            *o = d * s;
        }
    }

    fn tail_fraction(&self, spec: &[Complex64]) -> f64 {
        let (mut total, mut tail) = (0.0, 0.0);
        for (c, &t) in spec.iter().zip(&self.tail) {
            let e = c.norm_sqr();
            total += e;
            if t {
                tail += e;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}

/// Signed wavenumber index of FFT slot `idx`.
fn signed_mode(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// Solves from `u(x, t_start) = ic(x)` and returns real-space states on the `N`-point grid.
pub fn reference_solve<F: Fn(f64) -> f64>(ic: F, cfg: &SpectralConfig) -> Result<SpectralSolution> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let mut ws = Workspace::new(cfg);
    let n = cfg.n;
    let zero = Complex64::new(0.0, 0.0);

    let initial: Vec<f64> = grid.nodes().into_iter().map(ic).collect();
    let mut spec = ws.to_spectral(&initial);

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        accepted_steps: 0,
        rejected_steps: 0,
        rhs_evaluations: 0,
        status: IntegrationStatus::Success,
    };
    let mut tail_max = ws.tail_fraction(&spec);
    let mut imag_max: f64 = 0.0;

    let mut emit =
        |spec: &[Complex64], t: f64, ws: &Workspace, traj: &mut Trajectory| -> Result<()> {
            let phys = ws.to_physical(spec);
            imag_max = phys.iter().fold(imag_max, |m, c| m.max(c.im.abs()));
            traj.times.push(t);
            traj.states
                .push(StateVector::new(grid, phys.iter().map(|c| c.re).collect())?);
            Ok(())
        };

    let mut t = cfg.t_start;
    let mut next_out = 0;
    while next_out < cfg.output_times.len() && cfg.output_times[next_out] <= t {
        emit(&spec, cfg.output_times[next_out], &ws, &mut traj)?;
        next_out += 1;
    }

    let mut k: Vec<Vec<Complex64>> = vec![vec![zero; n]; 7];
    let mut stage = vec![zero; n];
    let mut new_spec = vec![zero; n];
    let mut err = vec![zero; n];
    ws.nonlinear(&spec, &mut k[0]);
    traj.rhs_evaluations += 1;

    let span = cfg.t_end - cfg.t_start;
    let mut dt = (span / 100.0).min(1e-3);
    let mut err_prev: f64 = 1e-4;
    let mut last_rejected = false;

    while next_out < cfg.output_times.len() {
        if traj.accepted_steps + traj.rejected_steps >= cfg.max_steps {
            traj.status = IntegrationStatus::MaxStepsExceeded;
            break;
        }
        if dt < 16.0 * f64::EPSILON * t.abs().max(span) {
            traj.status = IntegrationStatus::StepSizeUnderflow;
            break;
        }
        let target = cfg.output_times[next_out];
        let lands = t + dt >= target;
        let h = if lands { target - t } else { dt };

        for i in 1..7 {
            for idx in 0..n {
                let l = ws.linear[idx];
                let mut acc = spec[idx] * (l * C[i] * h).exp();
                for (j, kj) in k.iter().enumerate().take(i) {
                    if A[i][j] != 0.0 {
                        acc += kj[idx] * (h * A[i][j] * (l * (C[i] - C[j]) * h).exp());
                    }
                }
                stage[idx] = acc;
            }
            if i == 6 {
                new_spec.copy_from_slice(&stage);
            }
            ws.nonlinear(&stage, &mut k[i]);
        }
        traj.rhs_evaluations += 6;

        for idx in 0..n {
            let l = ws.linear[idx];
            let mut e = zero;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[idx] * (h * E[j] * (l * (1.0 - C[j]) * h).exp());
                }
            }
            err[idx] = e;
        }
        let old_phys = ws.to_physical(&spec);
        let new_phys = ws.to_physical(&new_spec);
        let err_phys = ws.to_physical(&err);
        let err_norm = old_phys
            .iter()
            .zip(&new_phys)
            .zip(&err_phys)
            .map(|((a, b), e)| e.norm() / (cfg.abs_tol + cfg.rel_tol * a.re.abs().max(b.re.abs())))
            .fold(0.0, f64::max);

        if !err_norm.is_finite() || err_norm > 1.0 {
            traj.rejected_steps += 1;
            let factor = if err_norm.is_finite() {
                (0.9 * err_norm.powf(-0.17)).max(0.2)
            } else {
                0.5
            };
            dt = h * factor.min(1.0);
            last_rejected = true;
            continue;
        }

        traj.accepted_steps += 1;
        t = if lands { target } else { t + h };
        std::mem::swap(&mut spec, &mut new_spec);
        k.swap(0, 6);
        tail_max = tail_max.max(ws.tail_fraction(&spec));
        while next_out < cfg.output_times.len() && cfg.output_times[next_out] <= t {
            emit(&spec, cfg.output_times[next_out], &ws, &mut traj)?;
            next_out += 1;
        }

        let e = err_norm.max(1e-10);
        let mut factor = (0.9 * e.powf(-0.17) * err_prev.powf(0.04)).clamp(0.2, 10.0);
        if last_rejected {
            factor = factor.min(1.0);
        }
        err_prev = e;
        last_rejected = false;
        // a step shortened to land on an output time keeps the previous proposal
        dt = if lands && h < dt {
            dt.min(h * factor).max(dt * factor.min(1.0))
        } else {
            h * factor
        };
    }

    Ok(SpectralSolution {
        trajectory: traj,
        tail_energy_fraction: tail_max,
        under_resolved: tail_max > RESOLUTION_THRESHOLD,
        max_imag_residue: imag_max,
    })
}

/// Restricts a fine-grid state to `grid`: nodal extraction when the grids nest,
/// trigonometric interpolation otherwise.
pub fn sample_state(fine: &StateVector, grid: &GridSpec) -> Result<StateVector> {
    let fg = fine.grid();
    let rel = (fg.length() - grid.length()).abs() / grid.length();
    if rel > 1e-12 {
        return Err(Error::GridMismatch);
    }
    let (n, m) = (fg.m(), grid.m());
    if n % m == 0 {
        let stride = n / m;
        let values = (0..m).map(|j| fine.values()[j * stride]).collect();
        return StateVector::new(*grid, values);
    }

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut spec: Vec<Complex64> = fine
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft.process(&mut spec);
    let values = grid
        .nodes()
        .iter()
        .map(|&x| {
            let mut acc = 0.0;
            for (idx, c) in spec.iter().enumerate() {
                let k = signed_mode(idx, n);
                let phase = 2.0 * PI * k as f64 * x / fg.length();
                let term = (c * Complex64::from_polar(1.0, phase)).re;
                // Nyquist mode contributes as a cosine split between ±N/2
                acc += if n % 2 == 0 && idx == n / 2 {
                    c.re * (PI * n as f64 * x / fg.length()).cos()
                } else {
                    term
                };
            }
            acc / n as f64
        })
        .collect();
    StateVector::new(*grid, values)
}

/// Samples every state of a fine-grid trajectory onto `grid`.
pub fn sample_at(traj: &Trajectory, grid: &GridSpec) -> Result<Trajectory> {
    let states = traj
        .states
        .iter()
        .map(|s| sample_state(s, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        states,
        ..traj.clone()
    })
}

//! Adaptive Dormand-Prince 5(4) integration with PI step control and the
//! method's native fourth-order dense output.

use log::debug;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ModelParams, StateVector, TruncationLevel};
use crate::rhs::{fastest_linear_rate, tendency_into, Corrections};

/// Length of the stability interval of DP5 on the negative real axis.
pub const STABILITY_RADIUS: f64 = 3.3;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller gains
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub output_times: Vec<f64>,
    pub initial_step: Option<f64>,
    /// Hard cap on the step size, e.g. from a linear stability estimate.
    pub max_step: Option<f64>,
}

impl IntegrationConfig {
    /// `n_out` uniformly spaced output times covering `[t_start, t_end]`.
    pub fn uniform(t_start: f64, t_end: f64, n_out: usize, rel_tol: f64, abs_tol: f64) -> Self {
        let output_times = uniform_times(t_start, t_end, n_out);
        Self {
            t_start,
            t_end,
            rel_tol,
            abs_tol,
            max_steps: 1_000_000,
            output_times,
            initial_step: None,
            max_step: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::BadIntegrationConfig(msg.to_string()));
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return bad("need finite t_end > t_start");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if self.output_times.is_empty() {
            return bad("no output times");
        }
        if self.output_times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("output times must be strictly increasing");
        }
        let (first, last) = (self.output_times[0], *self.output_times.last().unwrap());
        if first < self.t_start || last > self.t_end {
            return bad("output times outside integration span");
        }
        if matches!(self.initial_step, Some(h) if h.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater))
        {
            return bad("initial step must be positive");
        }
        if matches!(self.max_step, Some(h) if h.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater))
        {
            return bad("max step must be positive");
        }
        Ok(())
    }
}

/// `n` points from `t0` to `t1` inclusive (`n >= 2`), or just `t1` when `n == 1`.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t1],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationStatus {
    Success,
    MaxStepsExceeded,
    StepSizeUnderflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub status: IntegrationStatus,
}

impl Trajectory {
    pub fn succeeded(&self) -> bool {
        self.status == IntegrationStatus::Success
    }

    pub fn last(&self) -> Option<&StateVector> {
        self.states.last()
    }
}

fn error_norm(y0: &[f64], y1: &[f64], err: &[f64], rtol: f64, atol: f64) -> f64 {
    y0.iter()
        .zip(y1)
        .zip(err)
        .map(|((a, b), e)| (e / (atol + rtol * a.abs().max(b.abs()))).abs())
        .fold(0.0, f64::max)
}

fn rms(v: &[f64], y: &[f64], rtol: f64, atol: f64) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(x, yi)| (x / (atol + rtol * yi.abs())).powi(2))
        .sum();
    (s / v.len() as f64).sqrt()
}

/// Curvature-based starting step from two trial evaluations.
fn initial_step<F>(f: &F, t0: f64, y0: &[f64], f0: &[f64], cfg: &IntegrationConfig) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let (rtol, atol) = (cfg.rel_tol, cfg.abs_tol);
    let d0 = rms(y0, y0, rtol, atol);
    let d1 = rms(f0, y0, rtol, atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + h0, &y1, &mut f1);
    let df: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&df, y0, rtol, atol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1)
}

/// Integrates `du/dt = f(t, u)` from `u0`, reporting states at `cfg.output_times`.
///
/// On failure the trajectory holds every output time reached so far.
pub fn integrate<F>(f: F, u0: &StateVector, cfg: &IntegrationConfig) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    cfg.validate()?;
    let grid = *u0.grid();
    let n = u0.len();
    let span = cfg.t_end - cfg.t_start;
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY).min(span);

    let mut traj = Trajectory {
        times: Vec::with_capacity(cfg.output_times.len()),
        states: Vec::with_capacity(cfg.output_times.len()),
        accepted_steps: 0,
        rejected_steps: 0,
        rhs_evaluations: 0,
        status: IntegrationStatus::Success,
    };

    let mut t = cfg.t_start;
    let mut y = u0.values().to_vec();
    let mut next_out = 0;
    while next_out < cfg.output_times.len() && cfg.output_times[next_out] <= t {
        traj.times.push(cfg.output_times[next_out]);
        traj.states.push(u0.clone());
        next_out += 1;
    }

    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1);
    traj.rhs_evaluations += 1;

    let mut h = match cfg.initial_step {
        Some(h0) => h0,
        None => {
            traj.rhs_evaluations += 1;
            initial_step(&f, t, &y, &k1, cfg)
        }
    }
    .min(max_step);

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut err_prev: f64 = 1e-4;
    let mut last_rejected = false;

    while next_out < cfg.output_times.len() {
        if traj.accepted_steps + traj.rejected_steps >= cfg.max_steps {
            traj.status = IntegrationStatus::MaxStepsExceeded;
            break;
        }
        let min_step = 16.0 * f64::EPSILON * t.abs().max(span);
        if h < min_step {
            traj.status = IntegrationStatus::StepSizeUnderflow;
            break;
        }
        let last_step = t + h >= cfg.t_end;
        if last_step {
            h = cfg.t_end - t;
        }

        for i in 0..n {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &stage, &mut k2);
        for i in 0..n {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &stage, &mut k3);
        for i in 0..n {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &stage, &mut k4);
        for i in 0..n {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &stage, &mut k5);
        for i in 0..n {
            stage[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &stage, &mut k6);
        for i in 0..n {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &y_new, &mut k7);
        traj.rhs_evaluations += 6;
        for i in 0..n {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }

        let finite = y_new.iter().chain(&k7).all(|v| v.is_finite());
        let err_norm = if finite {
            error_norm(&y, &y_new, &err, cfg.rel_tol, cfg.abs_tol)
        } else {
            f64::INFINITY
        };

        if !err_norm.is_finite() {
            traj.rejected_steps += 1;
            last_rejected = true;
            h *= 0.5;
            continue;
        }

        if err_norm > 1.0 {
            traj.rejected_steps += 1;
            let factor = (SAFETY * err_norm.powf(-ALPHA)).max(MIN_FACTOR);
            h *= factor.min(1.0);
            last_rejected = true;
            continue;
        }

        // accepted: emit dense output inside (t, t + h]
        let t_new = if last_step { cfg.t_end } else { t + h };
        while next_out < cfg.output_times.len() && cfg.output_times[next_out] <= t_new {
            let t_out = cfg.output_times[next_out];
            let values = if t_out == t_new {
                y_new.clone()
            } else {
                let theta = (t_out - t) / h;
                let theta1 = 1.0 - theta;
                (0..n)
                    .map(|i| {
                        let ydiff = y_new[i] - y[i];
                        let bspl = h * k1[i] - ydiff;
                        let r4 = ydiff - h * k7[i] - bspl;
                        let r5 = h
                            * (D1 * k1[i]
                                + D3 * k3[i]
                                + D4 * k4[i]
                                + D5 * k5[i]
                                + D6 * k6[i]
                                + D7 * k7[i]);
                        y[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)))
                    })
                    .collect()
            };
            traj.times.push(t_out);
            traj.states.push(StateVector::new(grid, values)?);
            next_out += 1;
        }

        traj.accepted_steps += 1;
        t = t_new;
        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut k1, &mut k7);

        let err_norm = err_norm.max(1e-10);
        let mut factor = SAFETY * err_norm.powf(-ALPHA) * err_prev.powf(BETA);
        factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
        if last_rejected {
            factor = factor.min(1.0);
        }
        err_prev = err_norm;
        last_rejected = false;
        h = (h * factor).min(max_step);
    }

    debug!(
        "integration finished: status {:?}, {} accepted, {} rejected",
        traj.status, traj.accepted_steps, traj.rejected_steps
    );
    Ok(traj)
}

/// Largest explicit step that keeps the fastest linear mode inside the stability interval.
pub fn stability_step_limit(params: ModelParams, grid: &GridSpec, level: TruncationLevel) -> f64 {
    let rate = fastest_linear_rate(params, grid, level);
    if rate > 0.0 {
        0.9 * STABILITY_RADIUS / rate
    } else {
        f64::INFINITY
    }
}

/// Integrates one finite-difference scheme, with the step capped by its linear stability limit.
pub fn integrate_scheme(
    u0: &StateVector,
    params: ModelParams,
    level: TruncationLevel,
    corrections: Corrections,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    let grid = *u0.grid();
    let limit = stability_step_limit(params, &grid, level);
    let mut cfg = cfg.clone();
    cfg.max_step = Some(cfg.max_step.unwrap_or(f64::INFINITY).min(limit));
    let h = grid.h();
    integrate(
        move |_t, u, out| tendency_into(u, h, params, level, corrections, out),
        u0,
        &cfg,
    )
}

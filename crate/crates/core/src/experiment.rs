//! Scheme-versus-oracle comparison runs and their output files.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{GridSpec, ModelParams, NormKind, StateVector, TruncationLevel};
use crate::integrator::{integrate_scheme, uniform_times, IntegrationConfig, Trajectory};
use crate::rhs::Corrections;
use crate::spectral::{reference_solve, sample_at, SpectralConfig};

/// Nodes on either side of the oracle maximum that count as the peak region.
pub const PEAK_HALF_WIDTH: i64 = 1;

/// Contour spacing used by the emitted plotting script.
pub const CONTOUR_INTERVAL: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialCondition {
    /// `amplitude · sin x` (in units of the domain's fundamental wavenumber).
    Sine { amplitude: f64 },
    /// `Σ amplitude · sin(k κ₁ x + phase)`.
    Fourier { modes: Vec<(u32, f64, f64)> },
    /// Uniform random sine and cosine coefficients in `[-1, 1]` for modes `1..=cutoff`.
    Random { seed: u64, cutoff: u32 },
}

impl InitialCondition {
    /// Expands to explicit `(k, amplitude, phase)` modes.
    pub fn modes(&self) -> Vec<(u32, f64, f64)> {
        match self {
            InitialCondition::Sine { amplitude } => vec![(1, *amplitude, 0.0)],
            InitialCondition::Fourier { modes } => modes.clone(),
            InitialCondition::Random { seed, cutoff } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut modes = Vec::new();
                for k in 1..=*cutoff {
                    let s: f64 = rng.gen_range(-1.0..=1.0);
                    let c: f64 = rng.gen_range(-1.0..=1.0);
                    modes.push((k, s, 0.0));
                    modes.push((k, c, PI / 2.0));
                }
                modes
            }
        }
    }

    pub fn evaluator(&self, length: f64) -> impl Fn(f64) -> f64 {
        let modes = self.modes();
        let kappa = 2.0 * PI / length;
        move |x| {
            modes
                .iter()
                .map(|&(k, a, p)| a * (k as f64 * kappa * x + p).sin())
                .sum()
        }
    }

    fn is_zero(&self) -> bool {
        self.modes().iter().all(|&(_, a, _)| a == 0.0)
    }
}

/// Everything needed to reproduce one comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "R")]
    pub r: f64,
    pub m: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub gamma: f64,
    pub t_end: f64,
    /// Number of uniformly spaced output times in `[0, t_end]`.
    pub output_count: usize,
    pub schemes: Vec<TruncationLevel>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub oracle_n: usize,
    pub oracle_rel_tol: f64,
    pub oracle_abs_tol: f64,
    pub dealias: bool,
    pub ic: InitialCondition,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            r: 2.0,
            m: 8,
            length: 2.0 * PI,
            gamma: 1.0,
            t_end: 1.0,
            output_count: 51,
            schemes: TruncationLevel::ALL.to_vec(),
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            oracle_n: 128,
            oracle_rel_tol: 1e-10,
            oracle_abs_tol: 1e-12,
            dealias: true,
            ic: InitialCondition::Sine { amplitude: 10.0 },
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::BadConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.m, self.length)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.r, self.gamma)
    }

    pub fn output_times(&self) -> Vec<f64> {
        uniform_times(0.0, self.t_end, self.output_count)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadConfig(msg));
        self.grid()?;
        self.params()?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.output_count < 2 {
            return bad("output_count must be at least 2".into());
        }
        if self.schemes.is_empty() {
            return bad("no schemes requested".into());
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return bad("schemes listed more than once".into());
        }
        if !(self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.oracle_rel_tol > 0.0
            && self.oracle_abs_tol > 0.0)
        {
            return bad("tolerances must be positive".into());
        }
        if !self.oracle_n.is_power_of_two() || self.oracle_n < 64 {
            return bad(format!(
                "oracle_n must be a power of two >= 64, got {}",
                self.oracle_n
            ));
        }
        if self.oracle_n < 4 * self.m {
            return bad(format!(
                "oracle_n = {} is below 4 m = {}",
                self.oracle_n,
                4 * self.m
            ));
        }
        if self
            .ic
            .modes()
            .iter()
            .any(|&(_, a, p)| !(a.is_finite() && p.is_finite()))
        {
            return bad("initial condition has non-finite coefficients".into());
        }
        Ok(())
    }

    pub fn integration_config(&self) -> IntegrationConfig {
        IntegrationConfig::uniform(
            0.0,
            self.t_end,
            self.output_count,
            self.rel_tol,
            self.abs_tol,
        )
    }

    pub fn spectral_config(&self) -> SpectralConfig {
        SpectralConfig {
            n: self.oracle_n,
            dealias: self.dealias,
            r: self.r,
            length: self.length,
            t_start: 0.0,
            t_end: self.t_end,
            output_times: self.output_times(),
            rel_tol: self.oracle_rel_tol,
            abs_tol: self.oracle_abs_tol,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeReport {
    pub scheme: TruncationLevel,
    pub succeeded: bool,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    pub max_l2: f64,
    pub max_linf: f64,
    /// Max over time of the error in the peak region of the oracle.
    pub peak_linf: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub n: usize,
    pub succeeded: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub tail_energy_fraction: f64,
    pub under_resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub config_hash: String,
    pub times: Vec<f64>,
    pub schemes: Vec<SchemeReport>,
    pub oracle: OracleSummary,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Not written to any output file, so reruns stay byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl ErrorReport {
    pub fn all_succeeded(&self) -> bool {
        self.oracle.succeeded && self.schemes.iter().all(|s| s.succeeded)
    }

    pub fn scheme(&self, level: TruncationLevel) -> Option<&SchemeReport> {
        self.schemes.iter().find(|s| s.scheme == level)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "config_hash {}", self.config_hash);
        let _ = writeln!(out, "tolerances rel {} abs {}", self.rel_tol, self.abs_tol);
        let _ = writeln!(
            out,
            "oracle N {} steps {} rejected {} tail_energy {:e} resolved {} status {}",
            self.oracle.n,
            self.oracle.accepted_steps,
            self.oracle.rejected_steps,
            self.oracle.tail_energy_fraction,
            !self.oracle.under_resolved,
            if self.oracle.succeeded {
                "ok"
            } else {
                "failed"
            },
        );
        let _ = writeln!(
            out,
            "scheme,status,max_L2,max_Linf,peak_Linf,steps,rejected,rhs_evals"
        );
        for s in &self.schemes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.scheme,
                if s.succeeded { "ok" } else { "failed" },
                s.max_l2,
                s.max_linf,
                s.peak_linf,
                s.accepted_steps,
                s.rejected_steps,
                s.rhs_evaluations
            );
        }
        out
    }
}

/// Full result of [`run_comparison`]: trajectories plus the error report.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub config: ExperimentConfig,
    pub report: ErrorReport,
    /// Oracle on its own fine grid.
    pub oracle: Trajectory,
    /// Oracle sampled at the model nodes.
    pub oracle_sampled: Trajectory,
    pub schemes: Vec<(TruncationLevel, Trajectory)>,
}

/// Max over `t` of the error at the oracle's maximum node and its neighbours.
fn peak_error(scheme: &Trajectory, oracle: &Trajectory) -> f64 {
    scheme
        .states
        .iter()
        .zip(&oracle.states)
        .map(|(s, o)| {
            let peak = o
                .values()
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| {
                    if v > best.1 {
                        (j, v)
                    } else {
                        best
                    }
                })
                .0 as i64;
            (-PEAK_HALF_WIDTH..=PEAK_HALF_WIDTH)
                .map(|d| (s.at(peak + d) - o.at(peak + d)).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn scheme_report(
    level: TruncationLevel,
    traj: &Trajectory,
    oracle: &Trajectory,
) -> Result<SchemeReport> {
    let mut l2 = Vec::with_capacity(traj.states.len());
    let mut linf = Vec::with_capacity(traj.states.len());
    for (s, o) in traj.states.iter().zip(&oracle.states) {
        let d = s.difference(o)?;
        l2.push(d.norm(NormKind::L2));
        linf.push(d.norm(NormKind::Linf));
    }
    let succeeded = traj.succeeded() && traj.states.len() == oracle.states.len();
    Ok(SchemeReport {
        scheme: level,
        succeeded,
        max_l2: l2.iter().copied().fold(0.0, f64::max),
        max_linf: linf.iter().copied().fold(0.0, f64::max),
        peak_linf: peak_error(traj, oracle),
        l2,
        linf,
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        rhs_evaluations: traj.rhs_evaluations,
    })
}

enum Job {
    Oracle,
    Scheme(TruncationLevel),
}

enum JobOutput {
    Oracle(crate::spectral::SpectralSolution),
    Scheme(TruncationLevel, Trajectory),
}

/// Integrates every requested scheme and the spectral oracle from the same initial condition.
pub fn run_comparison(cfg: &ExperimentConfig, exec: Execution) -> Result<Comparison> {
    cfg.validate()?;
    let start = Instant::now();
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let ic = cfg.ic.evaluator(cfg.length);
    let u0 = grid.sample(&ic)?;
    let int_cfg = cfg.integration_config();
    let spec_cfg = cfg.spectral_config();

    let mut jobs = vec![Job::Oracle];
    jobs.extend(cfg.schemes.iter().map(|&l| Job::Scheme(l)));
    let outputs = exec.map(&jobs, |job| -> Result<JobOutput> {
        match job {
            Job::Oracle => Ok(JobOutput::Oracle(reference_solve(&ic, &spec_cfg)?)),
            Job::Scheme(level) => {
                let traj = integrate_scheme(&u0, params, *level, Corrections::default(), &int_cfg)?;
                Ok(JobOutput::Scheme(*level, traj))
            }
        }
    });

    let mut oracle = None;
    let mut schemes = Vec::new();
    for out in outputs {
        match out? {
            JobOutput::Oracle(sol) => oracle = Some(sol),
            JobOutput::Scheme(level, traj) => schemes.push((level, traj)),
        }
    }
    let oracle = oracle.expect("oracle job always runs");
    let oracle_sampled = sample_at(&oracle.trajectory, &grid)?;

    let reports = schemes
        .iter()
        .map(|(level, traj)| scheme_report(*level, traj, &oracle_sampled))
        .collect::<Result<Vec<_>>>()?;

    let report = ErrorReport {
        config_hash: cfg.hash(),
        times: cfg.output_times(),
        schemes: reports,
        oracle: OracleSummary {
            n: cfg.oracle_n,
            succeeded: oracle.trajectory.succeeded(),
            accepted_steps: oracle.trajectory.accepted_steps,
            rejected_steps: oracle.trajectory.rejected_steps,
            tail_energy_fraction: oracle.tail_energy_fraction,
            under_resolved: oracle.under_resolved && !cfg.ic.is_zero(),
        },
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        wall_time_s: start.elapsed().as_secs_f64(),
    };

    Ok(Comparison {
        config: cfg.clone(),
        report,
        oracle: oracle.trajectory,
        oracle_sampled,
        schemes,
    })
}

/// `t,x_0,..,x_{m-1}` rows, one per output time.
pub fn fields_csv(traj: &Trajectory) -> String {
    let m = traj.states.first().map_or(0, StateVector::len);
    let mut out = String::from("t");
    for j in 0..m {
        let _ = write!(out, ",x_{j}");
    }
    out.push('\n');
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let _ = write!(out, "{t}");
        for v in s.values() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn errors_csv(report: &ErrorReport) -> String {
    let mut out = String::from("t,scheme,L2,Linf\n");
    for s in &report.schemes {
        for ((t, l2), linf) in report.times.iter().zip(&s.l2).zip(&s.linf) {
            let _ = writeln!(out, "{t},{},{l2},{linf}", s.scheme);
        }
    }
    out
}

/// Matplotlib script drawing oracle and scheme contours over `[0, π]`.
pub fn plot_script(cfg: &ExperimentConfig) -> String {
    let schemes: Vec<String> = cfg.schemes.iter().map(|s| format!("\"{s}\"")).collect();
    format!(
        r#"#!/usr/bin/env python3
# Contours of u(x, t): oracle solid, schemes dotted/dashed/dash-dotted.
# Only [0, pi] is drawn; the solution is odd about x = pi for odd data.
import csv, math, os
import numpy as np
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
LENGTH = {length}
INTERVAL = {interval}
SCHEMES = [{schemes}]
STYLES = {{"conventional": ":", "first": "--", "second": "-.", "eq3": (0, (1, 3))}}

def load(name):
    with open(os.path.join(HERE, name)) as fh:
        rows = list(csv.reader(fh))[1:]
    t = np.array([float(r[0]) for r in rows])
    u = np.array([[float(v) for v in r[1:]] for r in rows])
    x = np.arange(u.shape[1]) * LENGTH / u.shape[1]
    # close the periodic domain
    x = np.append(x, LENGTH)
    u = np.hstack([u, u[:, :1]])
    return x, t, u

x, t, u = load("fields_oracle.csv")
lo = INTERVAL * math.floor(u.min() / INTERVAL)
hi = INTERVAL * math.ceil(u.max() / INTERVAL)
levels = np.arange(lo, hi + INTERVAL, INTERVAL)
fig, ax = plt.subplots(figsize=(6, 5))
ax.contour(x, t, u, levels=levels, colors="k", linestyles="-")
for name in SCHEMES:
    xs, ts, us = load("fields_" + name + ".csv")
    ax.contour(xs, ts, us, levels=levels, colors="k", linestyles=STYLES.get(name, "--"))
ax.set_xlim(0.0, min(math.pi, LENGTH))
ax.set_xlabel("x")
ax.set_ylabel("t")
fig.savefig(os.path.join(HERE, "contours.png"), dpi=150)
"#,
        length = cfg.length,
        interval = CONTOUR_INTERVAL,
        schemes = schemes.join(", "),
    )
}

/// Writes the field, error, report and plotting files into `dir`.
pub fn write_outputs(cmp: &Comparison, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (level, traj) in &cmp.schemes {
        fs::write(dir.join(format!("fields_{level}.csv")), fields_csv(traj))?;
    }
    fs::write(dir.join("fields_oracle.csv"), fields_csv(&cmp.oracle))?;
    fs::write(dir.join("errors.csv"), errors_csv(&cmp.report))?;
    fs::write(dir.join("report.txt"), cmp.report.summary())?;
    fs::write(dir.join("config.toml"), cmp.config.to_toml())?;
    fs::write(dir.join("plot_contours.py"), plot_script(&cmp.config))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::IntegrationStatus;

    #[test]
    fn defaults_match_reference_setup() {
        let cfg = ExperimentConfig::default();
        assert_eq!((cfg.r, cfg.m, cfg.gamma, cfg.t_end), (2.0, 8, 1.0, 1.0));
        assert_eq!(cfg.length, 2.0 * PI);
        assert_eq!(cfg.ic, InitialCondition::Sine { amplitude: 10.0 });
        assert_eq!(cfg.output_times().len(), 51);
        assert_eq!(cfg.schemes, TruncationLevel::ALL.to_vec());
        assert_eq!(cfg.oracle_n, 128);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn toml_round_trip_is_idempotent() {
        let cfg = ExperimentConfig {
            ic: InitialCondition::Fourier {
                modes: vec![(1, 2.0, 0.0), (3, -0.5, 1.0)],
            },
            ..Default::default()
        };
        let once = cfg.to_toml();
        let parsed = ExperimentConfig::from_toml(&once).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.to_toml(), once);
    }

    #[test]
    fn bad_configs_rejected() {
        let cfg = ExperimentConfig {
            m: 4,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            oracle_n: 16,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            m: 64,
            oracle_n: 128,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            gamma: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            schemes: vec![TruncationLevel::Conventional, TruncationLevel::Conventional],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml("R = 2.0\nbogus = 1").is_err());
    }

    #[test]
    fn random_ic_is_seeded() {
        let a = InitialCondition::Random { seed: 7, cutoff: 3 };
        let b = InitialCondition::Random { seed: 7, cutoff: 3 };
        let c = InitialCondition::Random { seed: 8, cutoff: 3 };
        assert_eq!(a.modes(), b.modes());
        assert_ne!(a.modes(), c.modes());
        assert_eq!(a.modes().len(), 6);
    }

    #[test]
    fn zero_amplitude_run_has_zero_errors() {
        let cfg = ExperimentConfig {
            ic: InitialCondition::Sine { amplitude: 0.0 },
            output_count: 5,
            oracle_n: 64,
            ..Default::default()
        };
        let cmp = run_comparison(&cfg, Execution::Sequential).unwrap();
        assert!(cmp.report.all_succeeded());
        for s in &cmp.report.schemes {
            assert_eq!(s.max_l2, 0.0);
            assert_eq!(s.max_linf, 0.0);
        }
        assert!(cmp
            .oracle
            .states
            .iter()
            .all(|s| s.norm(NormKind::Linf) == 0.0));
    }

    #[test]
    fn csv_layout() {
        let grid = GridSpec::new(5, 5.0).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![
                StateVector::zeros(grid),
                StateVector::constant(grid, 0.1).unwrap(),
            ],
            accepted_steps: 1,
            rejected_steps: 0,
            rhs_evaluations: 7,
            status: IntegrationStatus::Success,
        };
        let csv = fields_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_0,x_1,x_2,x_3,x_4");
        assert_eq!(lines[2], "0.5,0.1,0.1,0.1,0.1,0.1");
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }
}

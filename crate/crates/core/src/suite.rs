//! Named verification suites with machine-readable pass/fail summaries.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::consistency::{observed_order, AnalyticField, Probe};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::experiment::{run_comparison, ExperimentConfig};
use crate::grid::{wrap, GridSpec, ModelParams, NormKind, StateVector, TruncationLevel};
use crate::rhs::{linear_symbol, nonlinear_conservative, rhs, rhs_with, Corrections};
use crate::series::coth_half_series;
use crate::spectral::{reference_solve, sample_at};

const SUITE_SEED: u64 = 0x5eed;
const SAMPLES: usize = 100;
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Properties,
    Consistency,
    Figure1,
}

impl SuiteKind {
    pub fn name(&self) -> &'static str {
        match self {
            SuiteKind::Properties => "properties",
            SuiteKind::Consistency => "consistency",
            SuiteKind::Figure1 => "figure1",
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "properties" => Ok(SuiteKind::Properties),
            "consistency" => Ok(SuiteKind::Consistency),
            "figure1" => Ok(SuiteKind::Figure1),
            other => Err(Error::BadConfig(format!("unknown suite `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: SuiteKind,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite report serializes")
    }
}

/// Runs a suite; with `out_dir` also writes `suite_<kind>.json` there.
pub fn run_suite(kind: SuiteKind, out_dir: Option<&Path>, exec: Execution) -> Result<SuiteReport> {
    let checks = match kind {
        SuiteKind::Properties => property_checks()?,
        SuiteKind::Consistency => consistency_checks()?,
        SuiteKind::Figure1 => figure1_checks(exec)?,
    };
    let report = SuiteReport {
        suite: kind,
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("suite_{kind}.json")), report.to_json())?;
    }
    Ok(report)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, x| a.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

fn random_state(rng: &mut ChaCha8Rng, grid: GridSpec) -> Result<StateVector> {
    StateVector::new(
        grid,
        (0..grid.m()).map(|_| rng.gen_range(-10.0..10.0)).collect(),
    )
}

/// Worst relative violation of `rhs(σu) = σ rhs(u)` for both shift and reflection.
fn equivariance_defect(
    u: &StateVector,
    params: ModelParams,
    level: TruncationLevel,
    corrections: Corrections,
) -> Result<(f64, f64)> {
    let g = StateVector::new(*u.grid(), rhs_with(u, params, level, corrections).tendency)?;
    let scale = g.norm(NormKind::Linf).max(1.0);
    let mut shift: f64 = 0.0;
    for s in 1..u.len() as i64 {
        let lhs = rhs_with(&u.shifted(s), params, level, corrections).tendency;
        shift = shift.max(max_diff(&lhs, g.shifted(s).values()) / scale);
    }
    let lhs = rhs_with(&u.reflected_negated(), params, level, corrections).tendency;
    let refl = max_diff(&lhs, g.reflected_negated().values()) / scale;
    Ok((shift, refl))
}

fn property_checks() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let grid = GridSpec::periodic_2pi(8)?;
    let mut checks = Vec::new();

    let coeffs = coth_half_series(6)?;
    let got: Vec<String> = coeffs
        .iter()
        .map(|c| format!("{}/{}", c.numerator, c.denominator))
        .collect();
    checks.push(Check::new(
        "operator_coefficients",
        got == ["1/1", "1/12", "-1/720", "1/30240"],
        got.join(" "),
    ));

    let wrap_ok = (-50i64..50).all(|j| {
        let w = wrap(j, 8);
        w < 8 && wrap(j + 8, 8) == w && wrap(w as i64, 8) == w
    });
    checks.push(Check::new("wrap_periodic", wrap_ok, "j in -50..50, m = 8"));

    let mut homog: f64 = 0.0;
    for _ in 0..SAMPLES {
        let u = random_state(&mut rng, grid)?;
        let c = rng.gen_range(-5.0..5.0);
        for kind in [NormKind::L2, NormKind::Linf] {
            let lhs = u.scaled(c)?.norm(kind);
            let rhs = c.abs() * u.norm(kind);
            homog = homog.max((lhs - rhs).abs() / (1.0 + rhs));
        }
    }
    checks.push(Check::new(
        "norm_homogeneity",
        homog <= REL_TOL,
        format!("max rel defect {homog:e}"),
    ));

    let mut fixed: f64 = 0.0;
    for _ in 0..SAMPLES {
        let c: f64 = rng.gen_range(-10.0..10.0);
        let params = ModelParams::new(
            rng.gen_range(0.0..4.0),
            [0.0, 0.5, 1.0][rng.gen_range(0..3)],
        )?;
        let u = StateVector::constant(grid, c)?;
        for level in TruncationLevel::ALL {
            fixed = fixed.max(max_abs(&rhs(&u, params, level).tendency) / (1.0 + c.abs().powi(3)));
        }
    }
    checks.push(Check::new(
        "fixed_point_invariance",
        fixed <= REL_TOL,
        format!("max scaled |g| {fixed:e}"),
    ));

    let mut cross: f64 = 0.0;
    let mut shift: f64 = 0.0;
    let mut refl: f64 = 0.0;
    let mut telescope: f64 = 0.0;
    for _ in 0..SAMPLES {
        let u = random_state(&mut rng, grid)?;
        let params = ModelParams::coupled(rng.gen_range(0.0..4.0))?;
        let a = rhs(&u, params, TruncationLevel::FirstCorrection).tendency;
        let b = rhs(&u, params, TruncationLevel::LowOrderEq3).tendency;
        cross = cross.max(max_diff(&a, &b) / max_abs(&b).max(1.0));
        for level in TruncationLevel::ALL {
            let (s, r) = equivariance_defect(&u, params, level, Corrections::default())?;
            shift = shift.max(s);
            refl = refl.max(r);
        }
        telescope = telescope.max(nonlinear_conservative(&u, &grid).iter().sum::<f64>().abs());
    }
    checks.push(Check::new(
        "cross_equivalence",
        cross <= REL_TOL,
        format!("max rel diff {cross:e}"),
    ));
    checks.push(Check::new(
        "translation_equivariance",
        shift <= REL_TOL,
        format!("max rel defect {shift:e}"),
    ));
    checks.push(Check::new(
        "reflection_equivariance",
        refl <= REL_TOL,
        format!("max rel defect {refl:e}"),
    ));
    checks.push(Check::new(
        "conservative_telescoping",
        telescope <= 1e-10,
        format!("max |sum| {telescope:e}"),
    ));

    // each printed reading must break either equivalence or the reflection symmetry
    let u = random_state(&mut rng, grid)?;
    let params = ModelParams::coupled(2.0)?;
    let mut pinned = true;
    let mut details = Vec::new();
    for (label, corr) in [
        (
            "printed_squares",
            Corrections {
                squares: false,
                mirror: true,
            },
        ),
        (
            "printed_mirror",
            Corrections {
                squares: true,
                mirror: false,
            },
        ),
    ] {
        let a = rhs_with(&u, params, TruncationLevel::FirstCorrection, corr).tendency;
        let b = rhs(&u, params, TruncationLevel::LowOrderEq3).tendency;
        let equiv = max_diff(&a, &b) / max_abs(&b).max(1.0);
        let (_, r) = equivariance_defect(&u, params, TruncationLevel::SecondCorrection, corr)?;
        let broken = equiv > REL_TOL || r > REL_TOL;
        pinned &= broken;
        details.push(format!("{label}: equiv {equiv:e} reflection {r:e}"));
    }
    checks.push(Check::new("corrections_pinned", pinned, details.join("; ")));

    let symbol_ok = TruncationLevel::ALL.iter().all(|&level| {
        linear_symbol(0, params, &grid, level) == Ok(0.0)
            && (1..=4).all(|k| {
                linear_symbol(k, ModelParams { r: 0.0, gamma: 1.0 }, &grid, level)
                    .is_ok_and(|s| s < 0.0)
            })
    });
    checks.push(Check::new(
        "symbol_signs",
        symbol_ok,
        "k = 0 neutral, R = 0 damped",
    ));

    Ok(checks)
}

fn consistency_checks() -> Result<Vec<Check>> {
    let field = AnalyticField::sine(1.0);
    let params = ModelParams::coupled(2.0)?;
    let ms = [8, 16, 32, 64];
    let mut checks = Vec::new();
    let in_band = |p: Option<f64>, lo: f64, hi: f64| p.is_some_and(|p| (lo..=hi).contains(&p));

    for (level, lo, hi) in [
        (TruncationLevel::Conventional, 1.8, 2.2),
        (TruncationLevel::FirstCorrection, 3.8, 4.2),
        (TruncationLevel::SecondCorrection, 3.8, 4.2),
        (TruncationLevel::LowOrderEq3, 3.8, 4.2),
    ] {
        let est = observed_order(&field, params, level, Probe::LinearR, &ms)?;
        checks.push(Check::new(
            &format!("linear_r_order_{level}"),
            in_band(est.fitted_order, lo, hi),
            format!("order {:?}, expected [{lo}, {hi}]", est.fitted_order),
        ));
        let full = observed_order(&field, params, level, Probe::Full, &ms)?;
        checks.push(Check::new(
            &format!("full_residual_decreasing_{level}"),
            full.residuals.windows(2).all(|w| w[1] < w[0]),
            format!("{:?}", full.residuals),
        ));
    }
    for probe in [Probe::Advective, Probe::Conservative] {
        let est = observed_order(&field, params, TruncationLevel::Conventional, probe, &ms)?;
        checks.push(Check::new(
            &format!("nonlinear_order_{probe}"),
            in_band(est.fitted_order, 1.8, 2.2),
            format!("order {:?}", est.fitted_order),
        ));
    }
    Ok(checks)
}

fn figure1_checks(exec: Execution) -> Result<Vec<Check>> {
    let cfg = ExperimentConfig::default();
    let cmp = run_comparison(&cfg, exec)?;
    let report = &cmp.report;
    let get = |level| {
        report
            .scheme(level)
            .expect("default config runs every scheme")
    };
    let conv = get(TruncationLevel::Conventional);
    let first = get(TruncationLevel::FirstCorrection);
    let second = get(TruncationLevel::SecondCorrection);

    let mut checks = vec![Check::new("all_runs_succeeded", report.all_succeeded(), "")];
    checks.push(Check::new(
        "l2_ordering",
        first.max_l2 < conv.max_l2 && second.max_l2 < conv.max_l2,
        format!(
            "conventional {} first {} second {}",
            conv.max_l2, first.max_l2, second.max_l2
        ),
    ));
    checks.push(Check::new(
        "peak_ordering",
        first.peak_linf < conv.peak_linf && second.peak_linf < conv.peak_linf,
        format!(
            "conventional {} first {} second {}",
            conv.peak_linf, first.peak_linf, second.peak_linf
        ),
    ));

    let mut fine_cfg = cfg.spectral_config();
    fine_cfg.n = 2 * cfg.oracle_n;
    let fine = reference_solve(cfg.ic.evaluator(cfg.length), &fine_cfg)?;
    let fine_sampled = sample_at(&fine.trajectory, &cfg.grid()?)?;
    let drift = fine_sampled
        .states
        .iter()
        .zip(&cmp.oracle_sampled.states)
        .map(|(a, b)| a.difference(b).map(|d| d.norm(NormKind::Linf)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "oracle_self_convergence",
        drift < 1e-6,
        format!("N vs 2N drift {drift:e}"),
    ));
    checks.push(Check::new(
        "oracle_resolved",
        !report.oracle.under_resolved,
        format!("tail energy {:e}", report.oracle.tail_energy_fraction),
    ));
    Ok(checks)
}

//! Exit criteria. Each test prints one `AC<n> PASS|FAIL` line (visible with
//! `--nocapture`) and then asserts on the same condition.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use ks_holistic::consistency::{observed_order, AnalyticField, Probe};
use ks_holistic::experiment::{run_comparison, ExperimentConfig};
use ks_holistic::integrator::uniform_times;
use ks_holistic::integrator::{integrate_scheme, IntegrationConfig};
use ks_holistic::spectral::{reference_solve, sample_at, SpectralConfig};
use ks_holistic::{
    rhs, rhs_with, Corrections, Execution, GridSpec, ModelParams, NormKind, StateVector,
    TruncationLevel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REL: f64 = 1e-12;

fn report(id: u32, passed: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let ok = passed && elapsed < limit;
    println!(
        "AC{id} {} ({:.3}s of {:.0}s) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    assert!(passed, "AC{id} failed: {detail}");
    assert!(elapsed < limit, "AC{id} exceeded its time budget");
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, x| a.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

fn random_state(rng: &mut ChaCha8Rng, grid: GridSpec) -> StateVector {
    StateVector::new(
        grid,
        (0..grid.m()).map(|_| rng.gen_range(-10.0..10.0)).collect(),
    )
    .unwrap()
}

#[test]
fn ac1_operator_coefficients() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_holistic-ks"))
        .args(["coefficients", "--max-order", "6"])
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    let text = String::from_utf8(out.stdout).unwrap();
    let expected = "order,numerator,denominator\n0,1,1\n2,1,12\n4,-1,720\n6,1,30240\n";
    report(
        1,
        out.status.success() && text == expected,
        elapsed,
        Duration::from_secs(1),
        &text.trim().replace('\n', " | "),
    );
}

#[test]
fn ac2_fixed_point_invariance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = GridSpec::periodic_2pi(8).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c: f64 = rng.gen_range(-10.0..=10.0);
        let params = ModelParams::new(
            rng.gen_range(0.0..=4.0),
            [0.0, 0.5, 1.0][rng.gen_range(0..3)],
        )
        .unwrap();
        let u = StateVector::constant(grid, c).unwrap();
        for level in TruncationLevel::ALL {
            worst = worst.max(max_abs(&rhs(&u, params, level).tendency) / (1.0 + c.abs().powi(3)));
        }
    }
    report(
        2,
        worst <= REL,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("max |g|/(1+|c|^3) = {worst:e}"),
    );
}

#[test]
fn ac3_scheme_cross_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = GridSpec::periodic_2pi(8).unwrap();
    assert!((grid.h() - PI / 4.0).abs() < 1e-15);

    let mut corrected: f64 = 0.0;
    // with a reading disabled, the worst of (equivalence defect, reflection defect)
    let mut printed_squares: f64 = 0.0;
    let mut printed_mirror: f64 = 0.0;
    let no_squares = Corrections {
        squares: false,
        mirror: true,
    };
    let no_mirror = Corrections {
        squares: true,
        mirror: false,
    };
    for _ in 0..100 {
        let u = random_state(&mut rng, grid);
        let params = ModelParams::coupled(rng.gen_range(0.0..=4.0)).unwrap();
        let eq3 = rhs(&u, params, TruncationLevel::LowOrderEq3).tendency;
        let scale = max_abs(&eq3).max(1.0);
        let first = rhs(&u, params, TruncationLevel::FirstCorrection).tendency;
        corrected = corrected.max(max_diff(&first, &eq3) / scale);

        for (corr, slot) in [
            (no_squares, &mut printed_squares),
            (no_mirror, &mut printed_mirror),
        ] {
            let first = rhs_with(&u, params, TruncationLevel::FirstCorrection, corr).tendency;
            let equiv = max_diff(&first, &eq3) / scale;
            let g = rhs_with(&u, params, TruncationLevel::SecondCorrection, corr).tendency;
            let g = StateVector::new(grid, g).unwrap();
            let lhs = rhs_with(
                &u.reflected_negated(),
                params,
                TruncationLevel::SecondCorrection,
                corr,
            )
            .tendency;
            let refl =
                max_diff(&lhs, g.reflected_negated().values()) / g.norm(NormKind::Linf).max(1.0);
            *slot = slot.max(equiv.max(refl));
        }
    }
    let passed = corrected <= REL && printed_squares > REL && printed_mirror > REL;
    report(
        3,
        passed,
        start.elapsed(),
        Duration::from_secs(1),
        &format!(
            "corrected rel diff {corrected:e}; printed squares defect {printed_squares:e}; printed mirror defect {printed_mirror:e}"
        ),
    );
}

#[test]
fn ac4_equivariances() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = GridSpec::periodic_2pi(8).unwrap();
    let mut shift: f64 = 0.0;
    let mut refl: f64 = 0.0;
    for _ in 0..100 {
        let u = random_state(&mut rng, grid);
        let params = ModelParams::new(rng.gen_range(0.0..=4.0), rng.gen_range(0.0..=1.0)).unwrap();
        for level in TruncationLevel::ALL {
            let g = StateVector::new(grid, rhs(&u, params, level).tendency).unwrap();
            let scale = g.norm(NormKind::Linf).max(1.0);
            for s in 1..8 {
                let lhs = rhs(&u.shifted(s), params, level).tendency;
                shift = shift.max(max_diff(&lhs, g.shifted(s).values()) / scale);
            }
            let lhs = rhs(&u.reflected_negated(), params, level).tendency;
            refl = refl.max(max_diff(&lhs, g.reflected_negated().values()) / scale);
        }
    }
    report(
        4,
        shift <= REL && refl <= REL,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("translation {shift:e}, reflection-negation {refl:e}"),
    );
}

#[test]
fn ac5_consistency_orders() {
    let start = Instant::now();
    let field = AnalyticField::sine(1.0);
    let params = ModelParams::coupled(2.0).unwrap();
    let ms = [16, 32, 64];
    let conv = observed_order(
        &field,
        params,
        TruncationLevel::Conventional,
        Probe::LinearR,
        &ms,
    )
    .unwrap()
    .fitted_order
    .unwrap();
    let first = observed_order(
        &field,
        params,
        TruncationLevel::FirstCorrection,
        Probe::LinearR,
        &ms,
    )
    .unwrap()
    .fitted_order
    .unwrap();

    // independent check: residual of the 3-point difference on sin x is R |1 - sinc²(h/2)| max|sin x_j|
    let h = 2.0 * PI / 64.0;
    let closed = 2.0 * (1.0 - ((h / 2.0).sin() / (h / 2.0)).powi(2));
    let measured = observed_order(
        &field,
        params,
        TruncationLevel::Conventional,
        Probe::LinearR,
        &ms,
    )
    .unwrap()
    .residuals[2];
    let matches_closed_form = (closed - measured).abs() <= 1e-9 * closed;

    report(
        5,
        (1.8..=2.2).contains(&conv) && (3.8..=4.2).contains(&first) && matches_closed_form,
        start.elapsed(),
        Duration::from_secs(5),
        &format!("conventional {conv:.4}, first {first:.4}"),
    );
}

#[test]
fn ac6_figure1_ordering() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let cmp = run_comparison(&cfg, Execution::Parallel).unwrap();
    let r = &cmp.report;
    let conv = r.scheme(TruncationLevel::Conventional).unwrap();
    let first = r.scheme(TruncationLevel::FirstCorrection).unwrap();
    let second = r.scheme(TruncationLevel::SecondCorrection).unwrap();

    let mut fine_cfg: SpectralConfig = cfg.spectral_config();
    fine_cfg.n = 256;
    let fine = reference_solve(cfg.ic.evaluator(cfg.length), &fine_cfg).unwrap();
    let fine = sample_at(&fine.trajectory, &cfg.grid().unwrap()).unwrap();
    let drift = fine
        .states
        .iter()
        .zip(&cmp.oracle_sampled.states)
        .map(|(a, b)| a.difference(b).unwrap().norm(NormKind::Linf))
        .fold(0.0, f64::max);

    let passed = r.all_succeeded()
        && drift < 1e-6
        && first.max_l2 < conv.max_l2
        && second.max_l2 < conv.max_l2
        && first.peak_linf < conv.peak_linf
        && second.peak_linf < conv.peak_linf;
    report(
        6,
        passed,
        start.elapsed(),
        Duration::from_secs(30),
        &format!(
            "max L2: conventional {:.4} first {:.4} second {:.4}; peak Linf: {:.4} {:.4} {:.4}; oracle drift {drift:e}",
            conv.max_l2, first.max_l2, second.max_l2, conv.peak_linf, first.peak_linf, second.peak_linf
        ),
    );
}

#[test]
fn ac7_oracle_physics() {
    let start = Instant::now();
    let times = uniform_times(0.0, 1.0, 51);

    let eps = 1e-6;
    let lin = reference_solve(
        |x| eps * x.sin(),
        &SpectralConfig::new(128, 2.0, 1.0, times.clone()),
    )
    .unwrap();
    let last = lin.trajectory.last().unwrap();
    let n = last.len() as f64;
    let amp = last
        .grid()
        .nodes()
        .iter()
        .zip(last.values())
        .map(|(x, u)| u * x.sin())
        .sum::<f64>()
        * 2.0
        / n;
    let growth_err = (amp / eps - 1f64.exp()).abs() / 1f64.exp();

    let sol = reference_solve(
        |x| 10.0 * x.sin(),
        &SpectralConfig::new(128, 2.0, 1.0, times),
    )
    .unwrap();
    let mut anti: f64 = 0.0;
    let mut mean: f64 = 0.0;
    for s in &sol.trajectory.states {
        // u(x) = -u(2π - x)
        anti = anti.max(
            s.difference(&s.reflected_negated())
                .unwrap()
                .norm(NormKind::Linf),
        );
        mean = mean.max(s.mean().abs());
    }
    report(
        7,
        growth_err < 1e-4 && anti < 1e-8 && mean < 1e-10 && sol.trajectory.succeeded(),
        start.elapsed(),
        Duration::from_secs(10),
        &format!("growth rel err {growth_err:e}, antisymmetry {anti:e}, mean {mean:e}"),
    );
}

#[test]
fn ac8_integrator_self_convergence() {
    let start = Instant::now();
    let grid = GridSpec::periodic_2pi(8).unwrap();
    let u0 = grid.sample(|x| 10.0 * x.sin()).unwrap();
    let params = ModelParams::coupled(2.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut deterministic = true;
    for level in TruncationLevel::ALL {
        let run = |rtol: f64, atol: f64| {
            let cfg = IntegrationConfig::uniform(0.0, 1.0, 51, rtol, atol);
            integrate_scheme(&u0, params, level, Corrections::default(), &cfg).unwrap()
        };
        let base = run(1e-8, 1e-10);
        let half = run(0.5e-8, 0.5e-10);
        assert!(base.succeeded() && half.succeeded());
        let d = base
            .last()
            .unwrap()
            .difference(half.last().unwrap())
            .unwrap();
        worst = worst.max(d.norm(NormKind::Linf));
        let again = run(1e-8, 1e-10);
        deterministic &= again == base
            && again.states.iter().zip(&base.states).all(|(a, b)| {
                a.values()
                    .iter()
                    .zip(b.values())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
            });
    }
    report(
        8,
        worst < 1e-6 && deterministic,
        start.elapsed(),
        Duration::from_secs(30),
        &format!("max final-state change {worst:e}, bitwise deterministic {deterministic}"),
    );
}

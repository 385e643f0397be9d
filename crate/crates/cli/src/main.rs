use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ks_holistic::consistency::{order_table, AnalyticField, Probe};
use ks_holistic::experiment::{run_comparison, write_outputs, ExperimentConfig};
use ks_holistic::series::coth_half_series;
use ks_holistic::suite::{run_suite, SuiteKind};
use ks_holistic::{Error, Execution, ModelParams, TruncationLevel};

const EXIT_NUMERICAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "holistic-ks",
    version,
    about = "Holistic finite differences for the Kuramoto-Sivashinsky equation"
)]
struct Cli {
    /// Run independent jobs one after another instead of on the thread pool.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the schemes and the spectral reference, then write fields and errors.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        /// conventional | first | second | eq3 (repeatable)
        #[arg(long = "scheme")]
        schemes: Vec<String>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long = "oracle-n")]
        oracle_n: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the effective config as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Observed truncation orders as CSV.
    Consistency {
        /// Comma-separated scheme names.
        #[arg(long, default_value = "conventional,first,second,eq3")]
        schemes: String,
        #[arg(long = "m", default_value = "8,16,32,64")]
        m: String,
        /// Comma-separated probes: linear_r, full, advective, conservative.
        #[arg(long, default_value = "linear_r,full")]
        probes: String,
        #[arg(long = "R", default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Field amplitude of the sin x probe.
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Taylor coefficients of (z/2)coth(z/2) as exact rationals.
    Coefficients {
        #[arg(long = "max-order", allow_negative_numbers = true)]
        max_order: i64,
    },
    /// Run a verification suite: properties | consistency | figure1.
    Suite {
        kind: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn parse_list<T, F>(text: &str, parse: F) -> Result<Vec<T>, Failure>
where
    F: Fn(&str) -> Result<T, Failure>,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

fn parse_probe(s: &str) -> Result<Probe, Failure> {
    match s {
        "linear_r" => Ok(Probe::LinearR),
        "full" => Ok(Probe::Full),
        "advective" => Ok(Probe::Advective),
        "conservative" => Ok(Probe::Conservative),
        other => Err(Failure::Config(format!("unknown probe `{other}`"))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Compare {
            config,
            r,
            m,
            schemes,
            gamma,
            t_end,
            oracle_n,
            out,
            print_config,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(r) = r {
                cfg.r = r;
            }
            if let Some(m) = m {
                cfg.m = m;
            }
            if !schemes.is_empty() {
                cfg.schemes = schemes
                    .iter()
                    .map(|s| s.parse::<TruncationLevel>())
                    .collect::<Result<_, _>>()?;
            }
            if let Some(g) = gamma {
                cfg.gamma = g;
            }
            if let Some(t) = t_end {
                cfg.t_end = t;
            }
            if let Some(n) = oracle_n {
                cfg.oracle_n = n;
            }
            cfg.validate()?;
            if print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }

            let cmp = run_comparison(&cfg, exec)?;
            write_outputs(&cmp, &out)?;
            print!("{}", cmp.report.summary());
            eprintln!(
                "wall time {:.3} s, output in {}",
                cmp.report.wall_time_s,
                out.display()
            );
            if !cmp.report.all_succeeded() {
                return Err(Failure::Numerical(
                    "integration failed for at least one run".into(),
                ));
            }
            Ok(())
        }
        Command::Consistency {
            schemes,
            m,
            probes,
            r,
            gamma,
            amplitude,
            out,
        } => {
            let schemes = parse_list(&schemes, |s| {
                s.parse::<TruncationLevel>().map_err(Failure::from)
            })?;
            let ms = parse_list(&m, |s| {
                s.parse::<usize>()
                    .map_err(|_| Failure::Config(format!("bad grid size `{s}`")))
            })?;
            let probes = parse_list(&probes, parse_probe)?;
            let params = ModelParams::new(r, gamma)?;
            let jobs: Vec<_> = schemes
                .iter()
                .flat_map(|&s| probes.iter().map(move |&p| (s, p)))
                .collect();
            let table = order_table(&AnalyticField::sine(amplitude), params, &jobs, &ms, exec)?;

            let mut csv = String::from("scheme,probe,m,residual,fitted_order\n");
            for est in &table {
                let order = est
                    .fitted_order
                    .map_or(String::from("NaN"), |p| p.to_string());
                for (m, res) in est.m_values.iter().zip(&est.residuals) {
                    let _ = writeln!(csv, "{},{},{m},{res},{order}", est.scheme, est.probe);
                }
            }
            match out {
                Some(path) => {
                    fs::write(path, csv).map_err(|e| Failure::Numerical(e.to_string()))?
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Coefficients { max_order } => {
            let coeffs = coth_half_series(max_order)?;
            println!("order,numerator,denominator");
            for c in coeffs {
                println!("{c}");
            }
            Ok(())
        }
        Command::Suite { kind, out } => {
            let kind: SuiteKind = kind.parse()?;
            let report = run_suite(kind, Some(&out), exec)?;
            for c in &report.checks {
                println!(
                    "{} {} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if report.passed {
                Ok(())
            } else {
                let names: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
                Err(Failure::Numerical(format!("failed: {}", names.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

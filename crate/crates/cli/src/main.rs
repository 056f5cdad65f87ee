use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tdfinite::harness::{
    bound_preview, geometric_grid, rate_sweep, run_experiment, solve_summary, with_jobs, ExperimentConfig,
};
use tdfinite::io::{read_instance, InstanceDoc};
use tdfinite::verify::{run_checks, Check, CheckReport, VerifyConfig};
use tdfinite::Error;

#[derive(Parser)]
#[command(name = "tdfinite", version, about = "Finite-time checks for linear TD learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration (an experiment config, or for `solve` an instance).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print θ*, V_μ and instance constants.
    Solve(Common),
    /// Run a Monte Carlo experiment against its bound.
    Run(Common),
    /// Fit the convergence rate over a geometric grid of horizons.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        t_min: usize,
        #[arg(long, default_value_t = 1_000_000)]
        t_max: usize,
        #[arg(long, default_value_t = 4)]
        points: usize,
        /// Fail unless the full-grid slope lies in `LO,HI`.
        #[arg(long, value_parser = parse_range)]
        expect_slope: Option<(f64, f64)>,
        /// Fail unless the last-decade slope lies in `LO,HI`.
        #[arg(long, value_parser = parse_range)]
        expect_last_decade: Option<(f64, f64)>,
    },
    /// Check the structural lemmas on generated instances.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated check names, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Print the bound a configuration is checked against.
    Bounds(Common),
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

enum Failure {
    Check(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = Result<(), Failure>;

fn need_config(c: &Common) -> Result<&Path, Error> {
    c.config.as_deref().ok_or_else(|| Error::Config {
        field: "--config".into(),
        message: "a configuration file is required".into(),
    })
}

fn experiment(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::read(need_config(c)?)?;
    if let Some(seed) = c.seed {
        cfg.master_seed = seed;
    }
    if let Some(dir) = &c.out_dir {
        cfg.output.dir = Some(dir.clone());
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), Error> {
    let io = |source| Error::Io {
        path: dir.join(name).display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(name), text).map_err(io)
}

fn show_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn solve(c: &Common) -> Outcome {
    let path = need_config(c)?;
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let loaded = if text.contains("\"schema_version\"") {
        ExperimentConfig::read(path)?.load_instance()?
    } else {
        InstanceDoc::from_json(&text).and_then(|d| d.load()).or_else(|_| read_instance(path))?
    };
    let s = solve_summary(&loaded)?;
    let json = serde_json::to_string_pretty(&s).expect("summary serializes");
    if let Some(dir) = &c.out_dir {
        write_file(dir, "solve.json", &(json.clone() + "\n"))?;
    }
    match c.format {
        Format::Json => println!("{json}"),
        Format::Text | Format::Csv => {
            let sep = if c.format == Format::Csv { "," } else { "=" };
            println!("theta_star{sep}{}", show_vec(&s.theta_star));
            println!("v_mu{sep}{}", show_vec(&s.v_mu));
            println!("pi{sep}{}", show_vec(&s.pi));
            println!("omega{sep}{:?}", s.omega);
            println!("r_max{sep}{:?}", s.r_max);
            println!("sigma_sq{sep}{:?}", s.sigma_sq);
            println!("radius_bound{sep}{:?}", s.radius_bound);
            println!("residual{sep}{:?}", s.residual);
            if let Some(st) = &s.stopping {
                println!("q_star{sep}{}", show_vec(&st.q_star));
                println!("optstop_theta_star{sep}{}", show_vec(&st.theta_star));
                println!("suboptimality_bound{sep}{:?}", st.suboptimality_bound);
            }
        }
    }
    Ok(())
}

fn run(c: &Common) -> Outcome {
    let cfg = experiment(c)?;
    let out = with_jobs(c.jobs, || run_experiment(&cfg))??;
    if let Some(dir) = &cfg.output.dir {
        out.write_artifacts(dir, cfg.output.trial_csv)?;
    }
    let r = &out.report;
    match c.format {
        Format::Json => println!("{}", r.to_json()),
        Format::Csv => {
            println!("trial,statistic");
            for (i, v) in out.per_trial.iter().enumerate() {
                println!("{i},{v}");
            }
        }
        Format::Text => println!(
            "{} T={} trials={} mean={:.6e} ci95={:.3e} bound={:.6e} satisfied={}",
            r.bound_name, r.horizon, r.trials, r.empirical_mean, r.empirical_ci95, r.bound_value, r.satisfied
        ),
    }
    if r.satisfied {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} not satisfied", r.bound_name)))
    }
}

fn sweep(
    c: &Common,
    grid: Vec<usize>,
    expect_slope: Option<(f64, f64)>,
    expect_last_decade: Option<(f64, f64)>,
) -> Outcome {
    let cfg = experiment(c)?;
    let report = with_jobs(c.jobs, || rate_sweep(&cfg, &grid))??;
    if let Some(dir) = &cfg.output.dir {
        write_file(dir, "sweep.json", &(report.to_json() + "\n"))?;
        write_file(dir, "sweep.csv", &report.to_csv())?;
    }
    match c.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Csv => print!("{}", report.to_csv()),
        Format::Text => {
            for p in &report.points {
                println!("T={} mean={:.6e} ci95={:.3e}", p.horizon, p.empirical_mean, p.empirical_ci95);
            }
            println!(
                "slope={:.4} ± {:.4} last_decade_slope={:.4}",
                report.fit.slope, report.fit.slope_ci95, report.last_decade.slope
            );
        }
    }
    let outside = |v: f64, r: Option<(f64, f64)>| r.is_some_and(|(lo, hi)| !(lo..=hi).contains(&v));
    if outside(report.fit.slope, expect_slope) || outside(report.last_decade.slope, expect_last_decade) {
        return Err(Failure::Check("slope outside the expected range".into()));
    }
    Ok(())
}

fn verify(c: &Common, suite: &str, instances: Option<usize>, draws: Option<usize>) -> Outcome {
    let checks = Check::parse_suite(suite)?;
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            serde_json::from_str::<VerifyConfig>(&text).map_err(Error::from)?
        }
        None => VerifyConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = instances {
        cfg.instances = n;
    }
    if let Some(n) = draws {
        cfg.draws = n;
    }
    cfg.generator.validate()?;
    let reports: Vec<CheckReport> = with_jobs(c.jobs, || run_checks(&checks, &cfg))??;
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    if let Some(dir) = &c.out_dir {
        write_file(dir, "verify.json", &(json.clone() + "\n"))?;
    }
    match c.format {
        Format::Json => println!("{json}"),
        Format::Csv => {
            println!("check_name,instances_tested,max_violation,worst_master_seed,worst_instance,passed");
            for r in &reports {
                println!(
                    "{},{},{:e},{},{},{}",
                    r.check_name, r.instances_tested, r.max_violation, r.worst_seed.0, r.worst_seed.1, r.passed
                );
            }
        }
        Format::Text => {
            for r in &reports {
                println!(
                    "{:<22} {} instances={} max_violation={:.3e} worst=({}, {})",
                    r.check_name,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.instances_tested,
                    r.max_violation,
                    r.worst_seed.0,
                    r.worst_seed.1
                );
            }
        }
    }
    if reports.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Check("lemma check failed".into()))
    }
}

fn bounds(c: &Common) -> Outcome {
    let cfg = experiment(c)?;
    let p = bound_preview(&cfg)?;
    let json = serde_json::to_string_pretty(&p).expect("preview serializes");
    match c.format {
        Format::Json => println!("{json}"),
        Format::Csv => println!("bound_name,T,bound_value\n{},{},{:?}", p.bound_name, p.horizon, p.bound_value),
        Format::Text => println!("{} T={} bound={:?}", p.bound_name, p.horizon, p.bound_value),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(c) => solve(c),
        Command::Run(c) => run(c),
        Command::Sweep {
            common,
            t_min,
            t_max,
            points,
            expect_slope,
            expect_last_decade,
        } => {
            if *points < 2 || *t_min < 1 || t_max <= t_min {
                Err(Failure::Error(Error::Config {
                    field: "--points".into(),
                    message: "need points >= 2 and 1 <= t_min < t_max".into(),
                }))
            } else {
                sweep(common, geometric_grid(*t_min, *t_max, *points), *expect_slope, *expect_last_decade)
            }
        }
        Command::Verify {
            common,
            suite,
            instances,
            draws,
        } => verify(common, suite, *instances, *draws),
        Command::Bounds(c) => bounds(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::config::{ExperimentConfig, ScheduleSpec, SCHEMA_VERSION};
use super::experiment::{mean_ci95, Prepared, Statistic};
use crate::algorithms::Recording;
use crate::error::{Error, Result};

/// `points` horizons spaced geometrically from `lo` to `hi`, rounded.
pub fn geometric_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    assert!(points >= 2 && lo >= 1 && hi > lo);
    let ratio = (hi as f64 / lo as f64).powf(1.0 / (points - 1) as f64);
    (0..points)
        .map(|i| (lo as f64 * ratio.powi(i as i32)).round() as usize)
        .collect()
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.len() < 4 {
        return Err(Error::config("grid", "needs at least 4 horizons"));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("grid", "horizons must be positive and increasing"));
    }
    let ratios: Vec<f64> = grid.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    let first = ratios[0];
    if ratios.iter().any(|r| (r / first - 1.0).abs() > 0.02) {
        return Err(Error::config("grid", "horizons must be geometrically spaced"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Student-t 95% half-width of the slope (zero with two points).
    pub slope_ci95: f64,
}

/// Least-squares line through `(x, y)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_ci95 = if x.len() > 2 {
        let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (ssr / (n - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, n - 2.0).expect("valid dof").inverse_cdf(0.975);
        t * se
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        slope_ci95,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub empirical_mean: f64,
    pub empirical_ci95: f64,
    /// `None` when the bound's preconditions fail at this horizon.
    pub bound_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub bound_name: String,
    pub statistic: Statistic,
    pub trials: usize,
    pub master_seed: u64,
    pub points: Vec<SweepPoint>,
    /// Fit of `ln(mean)` against `ln T` over the whole grid.
    pub fit: LineFit,
    /// Same fit restricted to `T ≥ T_max/10`.
    pub last_decade: LineFit,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,empirical_mean,empirical_ci95,bound_value\n");
        for p in &self.points {
            let b = p.bound_value.map(|b| b.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{}\n", p.horizon, p.empirical_mean, p.empirical_ci95, b));
        }
        s
    }
}

/// Empirical error at each horizon of `grid` and log-log slope fits. Trial
/// `i` uses the same stream at every horizon; schedules that do not depend on
/// `T` are run once to the largest horizon and read at checkpoints.
pub fn rate_sweep(cfg: &ExperimentConfig, grid: &[usize]) -> Result<SweepReport> {
    check_grid(grid)?;
    let prepared = Prepared::new(cfg)?;
    let stat = prepared.statistic;
    let t_max = *grid.last().expect("non-empty grid");

    // per_trial[trial][grid index]
    let per_trial: Vec<Vec<f64>> = if prepared.spec == ScheduleSpec::RobustSqrt {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|trial| {
                grid.iter()
                    .map(|&t| {
                        let run = prepared.run_trial(cfg.master_seed, trial, t, Recording::default())?;
                        Ok(stat.of_record(run.records.last().expect("final record")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?
    } else {
        let recording = Recording {
            stride: 0,
            checkpoints: grid.to_vec(),
        };
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let run = prepared.run_trial(cfg.master_seed, trial, t_max, recording.clone())?;
                Ok(grid
                    .iter()
                    .map(|&t| {
                        let r = run.records.iter().find(|r| r.t == t).expect("checkpoint recorded");
                        stat.of_record(r)
                    })
                    .collect())
            })
            .collect::<Result<_>>()?
    };

    let points: Vec<SweepPoint> = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let column: Vec<f64> = per_trial.iter().map(|row| row[k]).collect();
            let (mean, ci) = mean_ci95(&column);
            SweepPoint {
                horizon: t,
                empirical_mean: mean,
                empirical_ci95: ci,
                bound_value: prepared.bound(t).ok(),
            }
        })
        .collect();
    let logs = |pts: &[SweepPoint]| -> (Vec<f64>, Vec<f64>) {
        pts.iter()
            .map(|p| ((p.horizon as f64).ln(), p.empirical_mean.ln()))
            .unzip()
    };
    let (x, y) = logs(&points);
    let fit = fit_line(&x, &y);
    let tail: Vec<SweepPoint> = points
        .iter()
        .filter(|p| p.horizon as f64 >= t_max as f64 / 10.0 * (1.0 - 1e-9))
        .cloned()
        .collect();
    let (x, y) = logs(&tail);
    let last_decade = fit_line(&x, &y);
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        bound_name: prepared.kind.name().to_string(),
        statistic: stat,
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        points,
        fit,
        last_decade,
    })
}

//! Seeded Monte Carlo sweeps over one scenario parameter.
//!
//! Trial `t` draws its placement from seed `base_seed + t` at every axis
//! value, so neighbouring axis values compare the same network. Trials are
//! the unit of parallel work; results are reassembled in trial order, so the
//! output does not depend on the worker count.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use covert_route_core::routing::{route, RouteError};
use covert_route_core::{CovertBudget, RandomScenario, Regime};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Delta,
    /// Relay count; Alice and Bob are always present in addition.
    NNodes,
    NWardens,
    Alpha,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Delta => "delta",
            SweepAxis::NNodes => "n_nodes",
            SweepAxis::NWardens => "n_wardens",
            SweepAxis::Alpha => "alpha",
        }
    }

    pub fn is_count(self) -> bool {
        matches!(self, SweepAxis::NNodes | SweepAxis::NWardens)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delta" => Ok(SweepAxis::Delta),
            "n_nodes" => Ok(SweepAxis::NNodes),
            "n_wardens" => Ok(SweepAxis::NWardens),
            "alpha" => Ok(SweepAxis::Alpha),
            other => Err(format!("unknown axis {other:?} (expected delta, n_nodes, n_wardens or alpha)")),
        }
    }
}

/// How placements relate across axis values within one trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DrawMode {
    /// Every axis value reuses the trial seed; relay and warden populations
    /// at a larger count extend the ones at a smaller count.
    #[default]
    Nested,
    /// Every axis value gets its own placement seed derived from the trial
    /// seed and the value index.
    Independent,
}

/// Parameters held fixed while the axis varies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseParams {
    pub n_relays: usize,
    pub n_wardens: usize,
    pub dimension: f64,
    pub alpha: f64,
    pub delta: f64,
    pub node_noise: f64,
    pub warden_noise: f64,
}

impl Default for BaseParams {
    fn default() -> Self {
        Self {
            n_relays: 30,
            n_wardens: 30,
            dimension: 100.0,
            alpha: 3.0,
            delta: 0.05,
            node_noise: 1.0,
            warden_noise: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub base: BaseParams,
    pub trials: usize,
    pub base_seed: u64,
    pub regimes: Vec<Regime>,
    pub draw_mode: DrawMode,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidSpec(msg));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.values.is_empty() {
            return bad("value list is empty".into());
        }
        if self.regimes.is_empty() {
            return bad("regime set is empty".into());
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return bad("values must be strictly increasing".into());
        }
        for &v in &self.values {
            let params = self.params_at(v).map_err(HarnessError::InvalidSpec)?;
            CovertBudget::new(params.1).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
            params.0.generate(0).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        }
        Ok(())
    }

    /// Placement parameters and covertness budget at one axis value.
    fn params_at(&self, value: f64) -> Result<(RandomScenario, f64), String> {
        let b = &self.base;
        let mut placement = RandomScenario {
            n_relays: b.n_relays,
            n_wardens: b.n_wardens,
            dimension: b.dimension,
            alpha: b.alpha,
            node_noise: b.node_noise,
            warden_noise: b.warden_noise,
        };
        let mut delta = b.delta;
        let count = || {
            if value.is_finite() && value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(format!("{} values must be nonnegative integers (got {value})", self.axis))
            }
        };
        match self.axis {
            SweepAxis::Delta => delta = value,
            SweepAxis::NNodes => placement.n_relays = count()?,
            SweepAxis::NWardens => placement.n_wardens = count()?,
            SweepAxis::Alpha => placement.alpha = value,
        }
        Ok((placement, delta))
    }

    fn placement_seed(&self, trial_seed: u64, value_index: usize) -> u64 {
        match self.draw_mode {
            DrawMode::Nested => trial_seed,
            DrawMode::Independent => mix(trial_seed ^ (value_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        }
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub rate_coeff: f64,
    pub delay_coeff: f64,
    /// Hop count of the chosen path.
    pub path_len: usize,
    pub path_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub axis_value: f64,
    pub regime: Regime,
    pub trial: usize,
    /// Placement seed actually used.
    pub seed: u64,
    pub outcome: Result<TrialOutcome, String>,
}

/// Aggregate for one `(axis value, regime)` cell.
///
/// `rate_raw.len() + failures == trials`; means are over successful trials.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub axis_value: f64,
    pub regime: Regime,
    pub rate_raw: Vec<f64>,
    pub delay_raw: Vec<f64>,
    pub seeds: Vec<u64>,
    pub failures: usize,
    pub mean_rate: f64,
    pub mean_delay: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub axis: SweepAxis,
    /// Ordered by axis value, then regime (in the order given), then trial.
    pub records: Vec<TrialRecord>,
    /// Ordered by axis value, then regime.
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    pub fn failures(&self) -> usize {
        self.cells.iter().map(|c| c.failures).sum()
    }
}

fn run_trial(spec: &SweepSpec, trial: usize) -> Vec<TrialRecord> {
    let trial_seed = spec.base_seed.wrapping_add(trial as u64);
    let mut out = Vec::with_capacity(spec.values.len() * spec.regimes.len());
    for (j, &value) in spec.values.iter().enumerate() {
        let seed = spec.placement_seed(trial_seed, j);
        let (placement, delta) = spec.params_at(value).expect("spec validated");
        let budget = CovertBudget::new(delta).expect("spec validated");
        let scenario = placement.generate(seed);
        for &regime in &spec.regimes {
            let outcome = match &scenario {
                Err(e) => Err(e.to_string()),
                Ok(s) => match route(s, &budget, regime) {
                    Ok(r) => Ok(TrialOutcome {
                        rate_coeff: r.plan.allocation.rate_coeff,
                        delay_coeff: r.plan.allocation.delay_coeff,
                        path_len: r.path.hop_count(),
                        path_cost: r.path_cost,
                    }),
                    Err(RouteError::Unconstrained { .. }) => Err("no wardens: covert rate unconstrained".into()),
                    Err(e) => Err(e.to_string()),
                },
            };
            out.push(TrialRecord { axis_value: value, regime, trial, seed, outcome });
        }
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and standard error (sample standard deviation over `sqrt(k)`); a
/// single sample has standard error 0.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, if xs.is_empty() { f64::NAN } else { 0.0 });
    }
    let k = xs.len() as f64;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

/// Runs every trial of `spec` on a pool of `jobs` workers (`0` lets the pool
/// pick one per core).
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<ExperimentResult, HarnessError> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let per_trial: Vec<Vec<TrialRecord>> =
        pool.install(|| (0..spec.trials).into_par_iter().map(|t| run_trial(spec, t)).collect());

    let cells_per_trial = spec.values.len() * spec.regimes.len();
    let mut records = Vec::with_capacity(cells_per_trial * spec.trials);
    let mut cells = Vec::with_capacity(cells_per_trial);
    for cell in 0..cells_per_trial {
        let column: Vec<&TrialRecord> = per_trial.iter().map(|recs| &recs[cell]).collect();
        let first = column[0];
        let ok: Vec<&TrialOutcome> = column.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let rate_raw: Vec<f64> = ok.iter().map(|o| o.rate_coeff).collect();
        let delay_raw: Vec<f64> = ok.iter().map(|o| o.delay_coeff).collect();
        cells.push(CellResult {
            axis_value: first.axis_value,
            regime: first.regime,
            mean_rate: mean(&rate_raw),
            mean_delay: mean(&delay_raw),
            rate_raw,
            delay_raw,
            seeds: column.iter().map(|r| r.seed).collect(),
            failures: column.len() - ok.len(),
        });
        records.extend(column.into_iter().cloned());
    }
    Ok(ExperimentResult { axis: spec.axis, records, cells })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub axis_value: f64,
    pub regime: Regime,
    pub mean_rate: f64,
    pub mean_delay: f64,
    pub stderr_rate: f64,
    pub stderr_delay: f64,
    /// Successful trials behind the means.
    pub trials: usize,
}

pub fn summarize(result: &ExperimentResult) -> Vec<SummaryRow> {
    result
        .cells
        .iter()
        .map(|c| {
            let (mean_rate, stderr_rate) = mean_and_stderr(&c.rate_raw);
            let (mean_delay, stderr_delay) = mean_and_stderr(&c.delay_raw);
            SummaryRow {
                axis_value: c.axis_value,
                regime: c.regime,
                mean_rate,
                mean_delay,
                stderr_rate,
                stderr_delay,
                trials: c.rate_raw.len(),
            }
        })
        .collect()
}

pub const RAW_HEADER: &str = "axis,axis_value,regime,trial,seed,rate_coeff,delay_coeff,path_len,path_cost";
pub const SUMMARY_HEADER: &str =
    "axis,axis_value,regime,mean_rate_coeff,mean_delay_coeff,stderr_rate,stderr_delay,trials";

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_axis_value(axis: SweepAxis, v: f64) -> String {
    if axis.is_count() {
        format!("{}", v as u64)
    } else {
        fmt_f64(v)
    }
}

/// Failed trials are written with `NaN` metrics and `path_len` 0.
pub fn write_raw_csv<W: Write>(result: &ExperimentResult, mut w: W) -> io::Result<()> {
    writeln!(w, "{RAW_HEADER}")?;
    for r in &result.records {
        let (rate, delay, len, cost) = match &r.outcome {
            Ok(o) => (o.rate_coeff, o.delay_coeff, o.path_len, o.path_cost),
            Err(_) => (f64::NAN, f64::NAN, 0, f64::NAN),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            result.axis,
            fmt_axis_value(result.axis, r.axis_value),
            r.regime,
            r.trial,
            r.seed,
            fmt_f64(rate),
            fmt_f64(delay),
            len,
            fmt_f64(cost)
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(result: &ExperimentResult, mut w: W) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for row in summarize(result) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            result.axis,
            fmt_axis_value(result.axis, row.axis_value),
            row.regime,
            fmt_f64(row.mean_rate),
            fmt_f64(row.mean_delay),
            fmt_f64(row.stderr_rate),
            fmt_f64(row.stderr_delay),
            row.trials
        )?;
    }
    Ok(())
}

/// Path of the summary file that accompanies a raw CSV: `runs.csv` becomes
/// `runs.summary.csv`.
pub fn summary_path(raw: &std::path::Path) -> std::path::PathBuf {
    let stem = match raw.extension() {
        Some(ext) if ext == "csv" => raw.file_stem(),
        _ => raw.file_name(),
    };
    let stem = stem.map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    raw.with_file_name(format!("{stem}.summary.csv"))
}

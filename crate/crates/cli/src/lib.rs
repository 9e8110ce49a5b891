//! `esr-bell`: reproducible CSV/JSON reports for detection bounds, CHSH angle
//! scans, hidden-variable simulations and sequential-measurement tables.

pub mod config;
pub mod report;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use esr_core::bchsh::{detection_bound, min_detection_bound, ScanGrid};
use esr_core::esr::{generalized_correlation, sequential_distribution_factored};
use esr_core::lhv::{model_by_name, simulate_chsh, ChshSimulation};
use esr_core::quantum::{ProjectiveObservable, Subsystem};
use esr_core::{DetectionModel, GeneralizedObservable};

pub use config::{AngleSpec, DetectionSpec, DirectionSpec, ExperimentConfig, Format, StateSpec};
use report::*;

/// Bad flags or configuration; the binary exits with status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        1
    }
}

#[derive(Debug, Parser)]
#[command(name = "esr-bell", version, about = "Detection-weighted CHSH reports")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for Monte Carlo runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads. Output does not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Singlet detection bound for a setting, and its minimum over a coplanar grid.
    Bound(BoundArgs),
    /// Standard and modified CHSH values over every coplanar grid quadruple.
    Scan(ScanArgs),
    /// Monte Carlo run of a hidden-variable model at one CHSH setting.
    Simulate(SimulateArgs),
    /// Absolute outcome table of two far-apart spin measurements.
    Sequential(SequentialArgs),
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// `tsirelson`, `a,a',b,b'` in degrees, or four `x,y,z` vectors separated by `;`.
    #[arg(long)]
    pub angles: Option<String>,
    /// Grid step in degrees for the minimum.
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// `singlet`, `maximally-mixed`, `werner:<v>` or a JSON 4x4 matrix.
    #[arg(long)]
    pub state: Option<String>,
    /// One detection probability, or four for `A(a),A(a'),B(b),B(b')`.
    #[arg(long)]
    pub pd: Option<String>,
    /// Multiplies every detection probability.
    #[arg(long)]
    pub apparatus_factor: Option<f64>,
    /// Grid step in degrees.
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `gisin-gisin`, `always-detect` or `constant`.
    #[arg(long)]
    pub model: Option<String>,
    /// Measurement setting, as for `bound`.
    #[arg(long)]
    pub angles: Option<String>,
    /// Number of trials.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SequentialArgs {
    /// State, as for `scan`.
    #[arg(long)]
    pub state: Option<String>,
    /// Direction on the first qubit: `x`, `-z`, an angle in degrees, or `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Direction on the second qubit.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Detection probability of the first observable.
    #[arg(long)]
    pub pd_a: Option<f64>,
    /// Detection probability of the second observable.
    #[arg(long)]
    pub pd_b: Option<f64>,
    /// Multiplies both detection probabilities.
    #[arg(long)]
    pub apparatus_factor: Option<f64>,
    /// No-registration outcome of the first observable.
    #[arg(long, allow_hyphen_values = true)]
    pub a0: Option<f64>,
    /// No-registration outcome of the second observable.
    #[arg(long, allow_hyphen_values = true)]
    pub b0: Option<f64>,
}

fn with_factor(pd: Option<DetectionSpec>, factor: Option<f64>, base: &Option<DetectionSpec>) -> Option<DetectionSpec> {
    if pd.is_none() && factor.is_none() {
        return None;
    }
    let factor = factor.or_else(|| base.as_ref().and_then(DetectionSpec::factor));
    let pd = match pd.or_else(|| base.clone()).unwrap_or(DetectionSpec::Uniform(1.0)) {
        DetectionSpec::Full { pd, .. } => pd,
        other => Box::new(other),
    };
    Some(DetectionSpec::Full { pd, apparatus_factor: factor })
}

impl Cli {
    /// Flags layered over the config file, if any.
    pub fn resolve(&self) -> Result<ExperimentConfig, UsageError> {
        let file = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let mut flags = ExperimentConfig {
            seed: self.seed,
            format: self.format,
            workers: self.workers.map(|w| w as usize),
            ..Default::default()
        };
        match &self.command {
            Command::Bound(a) => {
                flags.angles = a.angles.as_deref().map(AngleSpec::parse).transpose()?;
                flags.grid_step = a.grid_step;
            }
            Command::Scan(a) => {
                flags.state = a.state.as_deref().map(StateSpec::parse).transpose()?;
                let pd = a.pd.as_deref().map(DetectionSpec::parse).transpose()?;
                flags.detection = with_factor(pd, a.apparatus_factor, &file.detection);
                flags.grid_step = a.grid_step;
            }
            Command::Simulate(a) => {
                flags.model = a.model.clone();
                flags.angles = a.angles.as_deref().map(AngleSpec::parse).transpose()?;
                flags.trials = a.trials;
            }
            Command::Sequential(a) => {
                flags.state = a.state.as_deref().map(StateSpec::parse).transpose()?;
                flags.a = a.a.as_deref().map(DirectionSpec::parse).transpose()?;
                flags.b = a.b.as_deref().map(DirectionSpec::parse).transpose()?;
                flags.a0 = a.a0;
                flags.b0 = a.b0;
                let pd = if a.pd_a.is_some() || a.pd_b.is_some() {
                    let base = file.clone().detection(2)?;
                    Some(DetectionSpec::Values(vec![a.pd_a.unwrap_or(base[0]), a.pd_b.unwrap_or(base[1])]))
                } else {
                    None
                };
                flags.detection = with_factor(pd, a.apparatus_factor, &file.detection);
            }
        }
        Ok(flags.or(file))
    }
}

/// Executes the parsed command, writing the report to `out`.
pub fn run(cli: &Cli, out: &mut (dyn Write + Send)) -> anyhow::Result<()> {
    let cfg = cli.resolve()?;
    let workers = cfg.workers()?;
    let mut exec = move || -> anyhow::Result<()> {
        match &cli.command {
            Command::Bound(_) => cmd_bound(&cfg, out),
            Command::Scan(_) => cmd_scan(&cfg, out),
            Command::Simulate(_) => cmd_simulate(&cfg, workers, out),
            Command::Sequential(_) => cmd_sequential(&cfg, out),
        }
    };
    match (workers, &cli.command) {
        (Some(w), Command::Bound(_) | Command::Scan(_)) => {
            rayon::ThreadPoolBuilder::new().num_threads(w).build().context("cannot start worker pool")?.install(exec)
        }
        _ => exec(),
    }
}

fn write_json<T: serde::Serialize>(value: &T, out: &mut (dyn Write + Send)) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn snap_degrees(rad: f64, step_deg: f64) -> f64 {
    (rad.to_degrees() / step_deg).round() * step_deg
}

pub fn bound_report(cfg: &ExperimentConfig) -> anyhow::Result<BoundReport> {
    let (setting, angles_deg) = cfg.setting()?;
    let step = cfg.grid_step(config::DEFAULT_BOUND_STEP)?;
    let bound = detection_bound(&setting);
    let min = min_detection_bound(step.to_radians())?;
    let min_setting = min.at.setting();
    Ok(BoundReport {
        schema_version: SCHEMA_VERSION,
        command: "bound".into(),
        angles_deg,
        directions: setting.directions().map(|d| d.components()),
        denominator: setting.dot_denominator(),
        bound,
        no_registration_lower_bound: 1.0 - bound,
        grid_step_deg: step,
        grid_minimum: BoundRow {
            angles_deg: Some(min.at.angles.map(|a| snap_degrees(a, step))),
            directions: min_setting.directions().map(|d| d.components()),
            denominator: min.at.value,
            bound: min.bound,
            no_registration_lower_bound: min.no_registration_lower_bound,
        },
    })
}

fn cmd_bound(cfg: &ExperimentConfig, out: &mut (dyn Write + Send)) -> anyhow::Result<()> {
    let report = bound_report(cfg)?;
    match cfg.format() {
        Format::Csv => report.write_csv(out)?,
        Format::Json => write_json(&report, out)?,
    }
    Ok(())
}

fn cmd_scan(cfg: &ExperimentConfig, out: &mut (dyn Write + Send)) -> anyhow::Result<()> {
    let state = cfg.state()?;
    let step = cfg.grid_step(config::DEFAULT_SCAN_STEP)?;
    let k = cfg.apparatus_factor()?;
    let pd = cfg.detection(4)?;
    let pd = [pd[0] * k, pd[1] * k, pd[2] * k, pd[3] * k];
    let grid = ScanGrid::with_role_detection(&state, pd, step.to_radians())?;
    let n = grid.angles().len();
    let record = |index: usize| -> anyhow::Result<ScanRecord> {
        let row = grid.row(index);
        let r = row.report?;
        let idx = [index / (n * n * n), (index / (n * n)) % n, (index / n) % n, index % n];
        let [a, ap, b, bp] = idx.map(|i| i as f64 * step);
        Ok(ScanRecord {
            a_deg: a,
            aprime_deg: ap,
            b_deg: b,
            bprime_deg: bp,
            pd_a: r.detection_probs[0],
            pd_aprime: r.detection_probs[1],
            pd_b: r.detection_probs[2],
            pd_bprime: r.detection_probs[3],
            standard_lhs: r.standard_lhs,
            modified_lhs: r.modified_lhs,
            bound: r.bound,
            standard_violated: r.standard_violated,
            modified_violated: r.modified_violated,
        })
    };
    match cfg.format() {
        Format::Csv => {
            writeln!(out, "{SCAN_COLUMNS}")?;
            for i in 0..grid.len() {
                record(i)?.write_csv(out)?;
            }
        }
        Format::Json => {
            // Streamed so large grids never sit in memory as one document.
            write!(
                out,
                "{{\"schema_version\":{SCHEMA_VERSION},\"command\":\"scan\",\"state\":{},\"grid_step_deg\":{},\"apparatus_factor\":{},\"rows\":[",
                serde_json::to_string(state.label())?,
                serde_json::to_string(&step)?,
                serde_json::to_string(&k)?
            )?;
            for i in 0..grid.len() {
                if i > 0 {
                    write!(out, ",")?;
                }
                writeln!(out)?;
                serde_json::to_writer(&mut *out, &record(i)?)?;
            }
            writeln!(out, "\n]}}")?;
        }
    }
    Ok(())
}

pub fn simulate_report(sim: &ChshSimulation, angles_deg: Option<[f64; 4]>) -> SimulateReport {
    let pairs = sim
        .summary
        .settings
        .iter()
        .enumerate()
        .map(|(i, t)| PairRecord {
            pair: PAIR_NAMES[i].to_string(),
            a: t.a.components(),
            b: t.b.components(),
            responses: t.responses,
            micro_correlation: sim.micro_correlations[i].into(),
            conditional_correlation: sim.conditional_correlations[i].into(),
            all_sample_freq: sim.fair_sampling[i].all_sample_freq.into(),
            detected_freq: sim.fair_sampling[i].detected_freq.into(),
            divergence: sim.fair_sampling[i].divergence.into(),
        })
        .collect();
    SimulateReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate".into(),
        model: sim.summary.model.clone(),
        seed: sim.summary.seed,
        trials: sim.summary.n_trials,
        angles_deg,
        micro_chsh: sim.micro_chsh.into(),
        conditional_chsh: sim.conditional_chsh.into(),
        modified_chsh: sim.modified_chsh.into(),
        detection: sim.detection.map(Into::into),
        pairs,
    }
}

fn cmd_simulate(cfg: &ExperimentConfig, workers: Option<usize>, out: &mut (dyn Write + Send)) -> anyhow::Result<()> {
    let model = model_by_name(cfg.model()).map_err(|e| UsageError(e.to_string()))?;
    let (setting, angles_deg) = cfg.setting()?;
    let trials = cfg.trials()?;
    let seed = cfg.seed();
    eprintln!("simulating {trials} trials of model {} with seed {seed}", model.name());
    let sim = simulate_chsh(&model, &setting, trials, seed, workers)?;
    let report = simulate_report(&sim, angles_deg);
    match cfg.format() {
        Format::Csv => report.write_csv(out)?,
        Format::Json => write_json(&report, out)?,
    }
    Ok(())
}

pub fn sequential_report(cfg: &ExperimentConfig) -> anyhow::Result<SequentialReport> {
    let state = cfg.state()?;
    let (a, b) = (cfg.direction_a()?, cfg.direction_b()?);
    let [pd_a, pd_b] = <[f64; 2]>::try_from(cfg.detection(2)?).expect("two values");
    let k = cfg.apparatus_factor()?;
    let first = GeneralizedObservable::with_no_registration_outcome(
        ProjectiveObservable::spin(&a, Subsystem::First),
        cfg.a0.unwrap_or(0.0),
    )
    .map_err(|e| UsageError(e.to_string()))?;
    let second = GeneralizedObservable::with_no_registration_outcome(
        ProjectiveObservable::spin(&b, Subsystem::Second),
        cfg.b0.unwrap_or(0.0),
    )
    .map_err(|e| UsageError(e.to_string()))?;
    let det = DetectionModel::new()
        .with_entry(state.label(), first.label(), pd_a)?
        .with_entry(state.label(), second.label(), pd_b)?
        .with_apparatus_factor(k)?;
    let dist = sequential_distribution_factored(&state, &first, &second, &det)?;
    let entries = dist
        .entries()
        .iter()
        .map(|e| {
            let second = e.second.expect("sequential entries carry two outcomes");
            SequentialRecord {
                a: e.first.value(),
                b: second.value(),
                a_registered: e.first.is_registered(),
                b_registered: second.is_registered(),
                conditional: e.conditional,
                detection: e.detection,
                probability: e.probability,
            }
        })
        .collect();
    Ok(SequentialReport {
        schema_version: SCHEMA_VERSION,
        command: "sequential".into(),
        state: state.label().to_string(),
        a: a.components(),
        b: b.components(),
        pd_a: det.for_observable(&state, &first)?,
        pd_b: det.for_observable(&state, &second)?,
        entries,
        total: dist.total(),
        correlation: generalized_correlation(&state, &first, &second, &det)?,
    })
}

fn cmd_sequential(cfg: &ExperimentConfig, out: &mut (dyn Write + Send)) -> anyhow::Result<()> {
    let report = sequential_report(cfg)?;
    match cfg.format() {
        Format::Csv => report.write_csv(out)?,
        Format::Json => write_json(&report, out)?,
    }
    Ok(())
}

//! The experiment subcommands. Trials fan out over the current rayon pool
//! and are reduced in trial order, so results do not depend on the number of
//! threads.

use multibeam::array::bf_gain;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method, SweepParameter};
use crate::error::ExperimentError;
use crate::output::{line_chart, Cell, CsvTable, Series};
use crate::scenario::{MethodOutcome, OutcomeStatus, Scenario};

/// Columns shared by the aggregate runs, after the leading key columns.
const METRIC_COLUMNS: [&str; 7] = [
    "method",
    "trials",
    "mean_normalized_rx_power",
    "mean_waveform_mse",
    "relaxed",
    "infeasible",
    "failed",
];

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: CsvTable,
    pub svg: Option<String>,
    /// Global solves that ended infeasible or numerically failed.
    pub hard_failures: usize,
}

/// Per-method totals over a set of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    /// Trials that produced weights; the means run over these.
    pub used: usize,
    pub mean_rx: f64,
    pub mean_mse: f64,
    pub relaxed: usize,
    pub infeasible: usize,
    pub failed: usize,
}

fn aggregate(method: Method, outcomes: impl Iterator<Item = MethodOutcome>) -> Aggregate {
    let mut agg = Aggregate {
        method,
        used: 0,
        mean_rx: 0.0,
        mean_mse: 0.0,
        relaxed: 0,
        infeasible: 0,
        failed: 0,
    };
    for o in outcomes {
        match o.status {
            OutcomeStatus::Ok => {}
            OutcomeStatus::Relaxed => agg.relaxed += 1,
            OutcomeStatus::Infeasible => agg.infeasible += 1,
            OutcomeStatus::Failed => agg.failed += 1,
        }
        if o.w.is_some() {
            agg.used += 1;
            agg.mean_rx += o.normalized_rx;
            agg.mean_mse += o.waveform_mse;
        }
    }
    if agg.used > 0 {
        agg.mean_rx /= agg.used as f64;
        agg.mean_mse /= agg.used as f64;
    } else {
        agg.mean_rx = f64::NAN;
        agg.mean_mse = f64::NAN;
    }
    agg
}

/// Evaluates `methods` on trials `0..trials` of `scenario`.
pub fn run_trials(scenario: &Scenario, methods: &[Method], trials: usize) -> Result<Vec<Aggregate>, ExperimentError> {
    let per_trial: Vec<Vec<MethodOutcome>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let h = scenario.channel(t)?;
            methods.iter().map(|&m| scenario.evaluate(m, &h, t)).collect()
        })
        .collect::<Result<_, multibeam::BeamError>>()?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(k, &m)| aggregate(m, per_trial.iter().map(|row| row[k].clone())))
        .collect())
}

fn header(keys: &[&'static str]) -> Vec<&'static str> {
    keys.iter().chain(METRIC_COLUMNS.iter()).copied().collect()
}

fn metric_cells(a: &Aggregate) -> Vec<Cell> {
    vec![
        a.method.name().into(),
        a.used.into(),
        a.mean_rx.into(),
        a.mean_mse.into(),
        a.relaxed.into(),
        a.infeasible.into(),
        a.failed.into(),
    ]
}

fn rx_chart(title: &str, x_label: &str, methods: &[Method], rows: &[(f64, Vec<Aggregate>)]) -> String {
    let series: Vec<Series> = methods
        .iter()
        .enumerate()
        .map(|(k, m)| Series {
            label: m.name().to_string(),
            points: rows.iter().map(|(x, aggs)| (*x, aggs[k].mean_rx)).collect(),
        })
        .collect();
    line_chart(title, x_label, "mean normalized received power", &series, None)
}

fn finish(
    command: &str,
    cfg: &ExperimentConfig,
    keys: &[&'static str],
    key_cells: impl Fn(f64) -> Vec<Cell>,
    rows: &[(f64, Vec<Aggregate>)],
    chart: Option<String>,
) -> RunOutput {
    let mut csv = CsvTable::new(header(keys));
    csv.stamp(command, &cfg.hash(), cfg.seed);
    let mut hard_failures = 0;
    for (x, aggs) in rows {
        for a in aggs {
            hard_failures += a.failed;
            let mut row = key_cells(*x);
            row.extend(metric_cells(a));
            csv.push(row);
        }
    }
    RunOutput {
        csv,
        svg: chart,
        hard_failures,
    }
}

/// Mean metrics per scanning direction.
pub fn run_directions(cfg: &ExperimentConfig, svg: bool) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &d in &cfg.scan.directions_deg {
        let scenario = Scenario::new(cfg, d)?;
        rows.push((d, run_trials(&scenario, &cfg.methods, cfg.trials)?));
    }
    let chart = svg.then(|| rx_chart("Received power per scanning direction", "scanning direction (deg)", &cfg.methods, &rows));
    Ok(finish("directions", cfg, &["direction_deg"], |d| vec![d.into()], &rows, chart))
}

/// Mean metrics while one constraint threshold varies.
pub fn run_sweep(cfg: &ExperimentConfig, svg: bool) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let sweep = &cfg.sweep;
    let mut rows = Vec::new();
    for &v in &sweep.values {
        let mut local = cfg.clone();
        match sweep.parameter {
            SweepParameter::Cs => local.combiner.c_s = v,
            SweepParameter::Csp => local.combiner.c_sp = v,
            SweepParameter::Cp => local.combiner.c_p = v,
        }
        let scenario = Scenario::new(&local, sweep.direction_deg)?;
        rows.push((v, run_trials(&scenario, &cfg.methods, cfg.trials)?));
    }
    let name = sweep.parameter.to_string();
    let chart = svg.then(|| rx_chart(&format!("Received power versus {name}"), &name, &cfg.methods, &rows));
    Ok(finish(
        "sweep",
        cfg,
        &["parameter", "value"],
        |v| vec![name.as_str().into(), v.into()],
        &rows,
        chart,
    ))
}

/// Mean metrics versus the number of channel paths.
pub fn run_paths(cfg: &ExperimentConfig, svg: bool) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &l in &cfg.paths.values {
        let mut local = cfg.clone();
        local.channel.paths = l;
        let scenario = Scenario::new(&local, cfg.paths.direction_deg)?;
        rows.push((l as f64, run_trials(&scenario, &cfg.methods, cfg.trials)?));
    }
    let chart = svg.then(|| rx_chart("Received power versus number of paths", "paths", &cfg.methods, &rows));
    Ok(finish("paths", cfg, &["paths"], |l| vec![(l as usize).into()], &rows, chart))
}

/// Gain floor of the emitted patterns, in dB.
pub const PATTERN_FLOOR_DB: f64 = -60.0;

/// Beam patterns of the pattern methods on the channel of trial 0.
pub fn run_pattern(cfg: &ExperimentConfig, svg: bool) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let scenario = Scenario::new(cfg, cfg.pattern.direction_deg)?;
    let h = scenario.channel(0)?;
    let n = cfg.pattern.points;
    let angles: Vec<f64> = (0..n).map(|i| -90.0 + 180.0 * i as f64 / (n - 1) as f64).collect();
    let outcomes: Vec<MethodOutcome> = cfg
        .pattern
        .methods
        .par_iter()
        .map(|&m| scenario.evaluate(m, &h, 0))
        .collect::<Result<_, _>>()?;

    let mut csv = CsvTable::new(vec!["angle_deg", "method", "gain_db"]);
    csv.stamp("pattern", &cfg.hash(), cfg.seed);
    let mut series = Vec::new();
    let mut hard_failures = 0;
    for o in &outcomes {
        if o.status == OutcomeStatus::Failed {
            hard_failures += 1;
        }
        let Some(w) = &o.w else { continue };
        let mut points = Vec::with_capacity(n);
        for &deg in &angles {
            let g = bf_gain(deg.to_radians(), w)?;
            let db = (10.0 * g.log10()).max(PATTERN_FLOOR_DB);
            csv.push(vec![deg.into(), o.method.name().into(), db.into()]);
            points.push((deg, db));
        }
        series.push(Series {
            label: o.method.name().to_string(),
            points,
        });
    }
    let chart = svg.then(|| {
        line_chart(
            &format!("Beam patterns, scanning at {} deg", cfg.pattern.direction_deg),
            "angle (deg)",
            "gain (dB)",
            &series,
            Some(PATTERN_FLOOR_DB),
        )
    });
    Ok(RunOutput {
        csv,
        svg: chart,
        hard_failures,
    })
}

//! Experiment orchestration.
//!
//! A sweep runs one scenario across a grid of horizons and seeds. Each cell
//! is an independent simulation, so the grid may run on all cores; results
//! are collected back in grid order, which keeps the CSV byte-identical to a
//! sequential run. The CSV carries its configuration as `#` comments, so a
//! results file is reproducible without the scenario file at hand.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::engine::{run, RunOptions};
use crate::metrics::{MetricsReport, RestOutcome, Scope};
use crate::network::Horizon;
use crate::scenario::Scenario;

/// One grid cell. Failures are carried, not bailed on, so one diverging run
/// cannot spoil a whole sweep.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub horizon: Horizon,
    pub seed: u64,
    pub outcome: Result<MetricsReport, String>,
}

pub fn sweep(
    base: &Scenario,
    horizons: &[Horizon],
    seeds: &[u64],
    scope: Scope,
    parallel: bool,
    opts: &RunOptions,
) -> Vec<RunRow> {
    let cells: Vec<(Horizon, u64)> = horizons
        .iter()
        .flat_map(|&h| seeds.iter().map(move |&s| (h, s)))
        .collect();
    let run_cell = |&(horizon, seed): &(Horizon, u64)| -> RunRow {
        let mut scenario = base.clone();
        scenario.management.horizon = horizon;
        scenario.run.seed = seed;
        let outcome = run(&scenario, opts)
            .map_err(|e| e.to_string())
            .and_then(|out| out.report(scope).map_err(|e| e.to_string()));
        RunRow {
            horizon,
            seed,
            outcome,
        }
    };
    if parallel {
        cells.par_iter().map(run_cell).collect()
    } else {
        cells.iter().map(run_cell).collect()
    }
}

/// Writes the manifest, header and rows. Failed cells become trailing `#`
/// comments instead of rows.
pub fn write_csv<W: Write>(w: &mut W, scenario: &Scenario, rows: &[RunRow]) -> io::Result<()> {
    let m = &scenario.management;
    writeln!(w, "# scenario = {}", scenario.name)?;
    writeln!(
        w,
        "# stations = {}, aisd_m = {:.2}",
        scenario.network.station_count(),
        scenario.distances.aisd_m()
    )?;
    writeln!(
        w,
        "# fleet = {}, speed_mps = {}, boarding_s = {}, alighting_s = {}",
        scenario.fleet.size,
        scenario.fleet.speed_mps,
        scenario.fleet.boarding_s,
        scenario.fleet.alighting_s
    )?;
    writeln!(
        w,
        "# demand = {}, heavy_phase_s = {}, drain_window_s = {}",
        scenario.demand.kind_label, scenario.run.heavy_phase_s, scenario.run.drain_window_s
    )?;
    writeln!(
        w,
        "# weights: standing = {}, dist = {}, queue = {}, inbound = {}, berth = {}",
        m.w_standing, m.w_dist, m.w_queue, m.w_inbound, m.w_berth
    )?;
    writeln!(
        w,
        "# thresholds: call_queue = {}, surplus = {}, deficit = {}; balance_period_s = {}, tick_s = {}",
        m.call_queue_threshold, m.surplus_threshold, m.deficit_threshold, m.balance_period_s, m.tick_s
    )?;
    match &m.adaptive {
        Some(a) => writeln!(
            w,
            "# adaptive: queue_upper = {}, queue_lower = {}, step = {}, range = [{}, {}], period_s = {}",
            a.queue_upper, a.queue_lower, a.step, a.h_min, a.h_max, a.period_s
        )?,
        None => writeln!(w, "# adaptive: off")?,
    }
    writeln!(w, "{}", MetricsReport::CSV_HEADER)?;
    for row in rows {
        if let Ok(report) = &row.outcome {
            writeln!(w, "{}", report.csv_row())?;
        }
    }
    for row in rows {
        if let Err(e) = &row.outcome {
            writeln!(w, "# run failed: horizon = {}, seed = {}: {e}", row.horizon, row.seed)?;
        }
    }
    Ok(())
}

/// Median, min and max over the finite-or-infinite values of one cell group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

fn stats(mut xs: Vec<f64>) -> Stats {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let median = if n % 2 == 1 {
        xs[n / 2]
    } else {
        // An even count averages the middle pair; infinity dominates, so a
        // half-censored group reports a censored median.
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    };
    Stats {
        median,
        min: xs[0],
        max: xs[n - 1],
    }
}

/// Per-horizon aggregation over seeds. Rest times use infinity for censored
/// runs so the order statistics stay meaningful.
#[derive(Clone, Debug)]
pub struct Aggregate {
    pub horizon: Horizon,
    pub runs: usize,
    pub awt_s: Stats,
    pub aql_groups: Stats,
    pub maxql_groups: Stats,
    pub rest_min: Stats,
}

/// Groups successful rows by horizon, in first-appearance order.
pub fn aggregate(rows: &[RunRow]) -> Vec<Aggregate> {
    let mut horizons: Vec<Horizon> = Vec::new();
    for row in rows {
        if row.outcome.is_ok() && !horizons.contains(&row.horizon) {
            horizons.push(row.horizon);
        }
    }
    horizons
        .into_iter()
        .map(|h| {
            let group: Vec<&MetricsReport> = rows
                .iter()
                .filter(|r| r.horizon == h)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let pull = |f: &dyn Fn(&MetricsReport) -> f64| -> Vec<f64> {
                group.iter().map(|r| f(r)).collect()
            };
            Aggregate {
                horizon: h,
                runs: group.len(),
                awt_s: stats(pull(&|r| r.awt_s)),
                aql_groups: stats(pull(&|r| r.aql_groups)),
                maxql_groups: stats(pull(&|r| r.maxql_groups as f64)),
                rest_min: stats(pull(&|r| match r.rest {
                    RestOutcome::Minutes(m) => m,
                    RestOutcome::Censored => f64::INFINITY,
                })),
            }
        })
        .collect()
}

fn trim(v: f64, decimals: usize) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.decimals$}")
    }
}

fn horizon_label(h: Horizon) -> String {
    match h {
        Horizon::Unlimited => "no horizon".to_string(),
        Horizon::Limited(v) => trim(v, 2),
    }
}

fn censored_label(drain_window_s: f64) -> String {
    format!(">{}h", trim(drain_window_s / 3600.0, 1))
}

fn cell(s: Stats, decimals: usize, censored: &str) -> String {
    let one = |v: f64| {
        if v.is_infinite() {
            censored.to_string()
        } else {
            trim(v, decimals)
        }
    };
    let mut out = one(s.median);
    if s.min != s.max {
        out.push_str(&format!(" ({}..{})", one(s.min), one(s.max)));
    }
    out
}

/// Renders the per-horizon summary table. Cells hold the seed median, with
/// the min..max range appended when seeds disagree.
pub fn emit_table(aggregates: &[Aggregate], include_rest: bool, drain_window_s: f64) -> String {
    let censored = censored_label(drain_window_s);
    let mut header = vec![
        "Horizon".to_string(),
        "AWT [s]".to_string(),
        "AQL [groups]".to_string(),
        "maxQL [groups]".to_string(),
    ];
    if include_rest {
        header.push("Rest [min]".to_string());
    }
    let mut table = vec![header];
    for a in aggregates {
        let mut row = vec![
            horizon_label(a.horizon),
            cell(a.awt_s, 1, &censored),
            cell(a.aql_groups, 2, &censored),
            cell(a.maxql_groups, 1, &censored),
        ];
        if include_rest {
            row.push(cell(a.rest_min, 1, &censored));
        }
        table.push(row);
    }
    let cols = table[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in table.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| format!("{:<width$}", v, width = widths[c]))
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;

use prt_sim::engine::{run, RunOptions};
use prt_sim::management::AdaptiveParams;
use prt_sim::metrics::Scope;
use prt_sim::network::Horizon;
use prt_sim::scenario::load_scenario;
use prt_sim::sweep::{aggregate, emit_table, sweep, write_csv, RunRow};

/// Simulates a PRT scenario across communication horizons and seeds.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Horizons to sweep, e.g. `0.5,1.0,1.5,inf`; defaults to the scenario's
    #[arg(long, value_delimiter = ',')]
    horizon: Vec<String>,
    /// Seeds to replicate each horizon with; defaults to the scenario's
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a per-horizon summary table
    #[arg(long)]
    table: bool,
    /// Write an event trace here; needs exactly one horizon and one seed
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Turn on the adaptive horizon controller (defaults) if the scenario
    /// does not configure one
    #[arg(long)]
    adaptive: bool,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let mut scenario = load_scenario(&args.scenario)
        .with_context(|| format!("loading {}", args.scenario.display()))?;
    for notice in &scenario.notices {
        eprintln!("note: {notice}");
    }
    let horizons: Vec<Horizon> = if args.horizon.is_empty() {
        vec![scenario.management.horizon]
    } else {
        args.horizon
            .iter()
            .map(|h| {
                h.parse()
                    .map_err(|e| anyhow::anyhow!("--horizon `{h}`: {e}"))
            })
            .collect::<Result<_>>()?
    };
    let seeds = if args.seed.is_empty() {
        vec![scenario.run.seed]
    } else {
        args.seed.clone()
    };
    if args.adaptive && scenario.management.adaptive.is_none() {
        scenario.management.adaptive = Some(AdaptiveParams::default());
    }

    let rows = if let Some(trace_path) = &args.trace {
        if horizons.len() != 1 || seeds.len() != 1 {
            bail!("--trace needs exactly one horizon and one seed");
        }
        scenario.management.horizon = horizons[0];
        scenario.run.seed = seeds[0];
        let opts = RunOptions {
            collect_trace: true,
            ..Default::default()
        };
        let output = run(&scenario, &opts)?;
        write_trace(trace_path, &scenario, &output)
            .with_context(|| format!("writing {}", trace_path.display()))?;
        let report = output.report(Scope::Network)?;
        vec![RunRow {
            horizon: horizons[0],
            seed: seeds[0],
            outcome: Ok(report),
        }]
    } else {
        sweep(
            &scenario,
            &horizons,
            &seeds,
            Scope::Network,
            true,
            &RunOptions::default(),
        )
    };

    if let Some(path) = &args.out {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        write_csv(&mut w, &scenario, &rows)?;
        w.flush()?;
        if args.table {
            print!(
                "{}",
                emit_table(&aggregate(&rows), true, scenario.run.drain_window_s)
            );
        }
    } else if args.table {
        eprintln!("note: table mode skips the CSV dump; use --out to keep both");
        print!(
            "{}",
            emit_table(&aggregate(&rows), true, scenario.run.drain_window_s)
        );
    } else {
        let stdout = std::io::stdout();
        let mut w = stdout.lock();
        write_csv(&mut w, &scenario, &rows)?;
    }

    let failures: Vec<&RunRow> = rows.iter().filter(|r| r.outcome.is_err()).collect();
    for f in &failures {
        if let Err(e) = &f.outcome {
            eprintln!(
                "run failed: horizon = {}, seed = {}: {e}",
                f.horizon, f.seed
            );
        }
    }
    if !failures.is_empty() {
        bail!("{} of {} runs failed", failures.len(), rows.len());
    }
    Ok(())
}

fn write_trace(
    path: &PathBuf,
    scenario: &prt_sim::Scenario,
    output: &prt_sim::RunOutput,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "time_s\tevent\tstation\tvehicle\torder")?;
    let name = |s: prt_sim::StationId| scenario.network.station(s).name.clone();
    let mut lines: Vec<(f64, String)> = Vec::new();
    for t in output.trace.as_deref().unwrap_or_default() {
        lines.push((
            t.time_s,
            format!(
                "{}\t{}\t{}\t{}\t{}",
                t.time_s,
                t.event,
                t.station.map(name).unwrap_or_else(|| "-".into()),
                t.vehicle.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                t.order.map(|o| o.0.to_string()).unwrap_or_else(|| "-".into()),
            ),
        ));
    }
    for d in &output.dispatches {
        lines.push((
            d.time_s,
            format!(
                "{}\tdispatch_{}\t{} -> {}\t{}\t-",
                d.time_s,
                d.reason.label(),
                name(d.from),
                name(d.to),
                d.vehicle
            ),
        ));
    }
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, line) in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

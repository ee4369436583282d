//! Replays a micro scenario and narrates every event, so the engine's exact
//! timing can be checked against a paper-and-pencil trace.
//!
//! ```text
//! cargo run --example hand_trace [-- path/to/scenario.toml]
//! ```

use prt_sim::engine::{run, RunOptions};
use prt_sim::{load_scenario, Scope};

fn main() -> anyhow::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/scenarios/micro_two_station_remote.toml"
        )
        .into()
    });
    let scenario = load_scenario(&path)?;
    println!(
        "{}: {} stations, fleet {}, {} scripted orders\n",
        scenario.name,
        scenario.network.station_count(),
        scenario.fleet.size,
        scenario.demand.scripted.len()
    );

    let out = run(
        &scenario,
        &RunOptions {
            collect_trace: true,
            collect_queue_log: false,
        },
    )?;

    let name = |s: prt_sim::StationId| scenario.network.station(s).name.clone();
    let mut lines: Vec<(f64, u8, String)> = Vec::new();
    for t in out.trace.as_ref().unwrap() {
        if t.event == "tick" {
            continue;
        }
        let mut parts = vec![format!("{:<16}", t.event)];
        if let Some(s) = t.station {
            parts.push(format!("at {}", name(s)));
        }
        if let Some(v) = t.vehicle {
            parts.push(format!("vehicle v{}", v.0));
        }
        if let Some(o) = t.order {
            parts.push(format!("order #{}", o.0));
        }
        lines.push((t.time_s, 0, parts.join(" ")));
    }
    for d in &out.dispatches {
        lines.push((
            d.time_s,
            1,
            format!(
                "{:<16} v{} {} -> {}",
                format!("dispatch {:?}", d.reason).to_lowercase(),
                d.vehicle.0,
                name(d.from),
                name(d.to)
            ),
        ));
    }
    lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (t, _, line) in &lines {
        println!("t = {t:>6.1} s  {line}");
    }

    let report = out.report(Scope::Network)?;
    println!(
        "\nserved {}/{} groups, AWT {:.1} s, {} calls / {} expels / {} balance moves",
        report.served,
        report.generated,
        report.awt_s,
        report.dispatch_calls,
        report.dispatch_expels,
        report.dispatch_balance
    );
    Ok(())
}

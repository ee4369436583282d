//! A stadium letting out: one venue floods the network with departing groups
//! for two hours. Every served group strands a vehicle somewhere else, so
//! the venue lives off called-in empties. The table shows service collapsing
//! as the horizon narrows; at half an AISD the venue can only see two
//! stations and the queue never drains.
//!
//! ```text
//! cargo run --release --example event_outbound
//! ```

use prt_sim::engine::{run, RunOptions};
use prt_sim::{aggregate, emit_table, load_scenario, sweep, Horizon, Scope};

fn main() -> anyhow::Result<()> {
    let scenario = load_scenario(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/city_event_outbound.toml"
    ))?;
    let venue = scenario.event_station.expect("event scenario has a venue");
    let horizons = [
        Horizon::Unlimited,
        Horizon::Limited(1.5),
        Horizon::Limited(1.0),
        Horizon::Limited(0.5),
    ];
    let seeds = [1, 2, 3, 4, 5];
    println!(
        "{}: crowd flows out of {}, median (min..max) over {} seeds\n",
        scenario.name,
        scenario.network.station(venue).name,
        seeds.len()
    );
    let rows = sweep(
        &scenario,
        &horizons,
        &seeds,
        Scope::Network,
        true,
        &RunOptions::default(),
    );
    println!(
        "{}",
        emit_table(&aggregate(&rows), true, scenario.run.drain_window_s)
    );

    // Nearly all of the queueing happens at the venue itself.
    let mut narrow = scenario.clone();
    narrow.management.horizon = Horizon::Limited(0.5);
    let out = run(&narrow, &RunOptions::default())?;
    let at_venue = out.report(Scope::Station(venue))?;
    let network = out.report(Scope::Network)?;
    println!(
        "\nseed {} at horizon 0.5: the venue pulls {} of the network's {} calls \
         and holds maxQL {} of {}",
        narrow.run.seed,
        at_venue.dispatch_calls,
        network.dispatch_calls,
        at_venue.maxql_groups,
        network.maxql_groups
    );
    Ok(())
}

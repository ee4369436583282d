//! A stadium filling up: eleven stations feed one venue for two hours.
//! Vehicles pile up at the venue, so its station must expel empties fast
//! enough to keep berths free, and the feeders must get empties back. Narrow
//! horizons choke that return flow: at half an AISD the backlog outlives the
//! two-hour drain window.
//!
//! ```text
//! cargo run --release --example event_inbound
//! ```

use prt_sim::engine::{run, RunOptions};
use prt_sim::{aggregate, emit_table, load_scenario, sweep, Horizon, Scope};

fn main() -> anyhow::Result<()> {
    let scenario = load_scenario(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/city_event_inbound.toml"
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
        "{}: crowd flows into {}, median (min..max) over {} seeds\n",
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

    // The venue itself never queues much; the pain lives at the feeders.
    let mut narrow = scenario.clone();
    narrow.management.horizon = Horizon::Limited(0.5);
    let out = run(&narrow, &RunOptions::default())?;
    let at_venue = out.report(Scope::Station(venue))?;
    let network = out.report(Scope::Network)?;
    println!(
        "\nseed {} at horizon 0.5: venue expels {} empties and its own maxQL is {}, \
         while the network maxQL reaches {}",
        narrow.run.seed, at_venue.dispatch_expels, at_venue.maxql_groups, network.maxql_groups
    );
    Ok(())
}

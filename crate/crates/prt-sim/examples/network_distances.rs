//! Prints the shortest-path structure of a scenario's network: the full
//! station-to-station distance matrix, the average inter-station distance
//! (AISD) that normalizes every horizon, and the neighborhood each station
//! sees at a few representative horizons.
//!
//! Run with:
//!
//! ```text
//! cargo run --example network_distances [-- path/to/scenario.toml]
//! ```

use prt_sim::{horizon_table, load_scenario, Horizon, StationId};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/city_uniform.toml").into());
    let scenario = load_scenario(&path)?;
    let net = &scenario.network;
    let dm = &scenario.distances;
    let n = net.station_count();

    println!("network: {} ({} stations, {} links)", scenario.name, n, net.links().count());
    println!("AISD: {:.1} m\n", dm.aisd_m());

    print!("{:>6}", "");
    for j in 0..n {
        print!("{:>7}", net.station(StationId(j)).name);
    }
    println!();
    for i in 0..n {
        print!("{:>6}", net.station(StationId(i)).name);
        for j in 0..n {
            if i == j {
                print!("{:>7}", ".");
            } else {
                print!("{:>7.0}", dm.distance_m(StationId(i), StationId(j)));
            }
        }
        println!();
    }

    for h in [0.5, 1.0, 1.5] {
        let table = horizon_table(dm, Horizon::Limited(h))?;
        println!("\nneighborhoods at horizon {h} (radius {:.1} m):", h * dm.aisd_m());
        for i in 0..n {
            let names: Vec<&str> = table
                .neighbors(StationId(i))
                .iter()
                .map(|&s| net.station(s).name.as_str())
                .collect();
            println!("  {:>2}: {}", net.station(StationId(i)).name, names.join(" "));
        }
    }
    Ok(())
}

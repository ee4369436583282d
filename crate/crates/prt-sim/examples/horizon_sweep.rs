//! The batch workflow: sweep any scenario over a horizon and seed grid and
//! stream the full CSV (with its scenario-echo header) to stdout, ready for a
//! spreadsheet or pandas.
//!
//! ```text
//! cargo run --release --example horizon_sweep -- \
//!     [scenario.toml] [horizons (comma separated)] [seeds (comma separated)]
//! ```

use std::io::Write;

use prt_sim::engine::RunOptions;
use prt_sim::{load_scenario, sweep, write_csv, Horizon, Scope};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/city_uniform.toml").into()
    });
    let horizons: Vec<Horizon> = match args.next() {
        Some(list) => list
            .split(',')
            .map(|h| h.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|e| anyhow::anyhow!("bad horizon list: {e}"))?,
        None => vec![
            Horizon::Unlimited,
            Horizon::Limited(1.5),
            Horizon::Limited(1.0),
            Horizon::Limited(0.5),
        ],
    };
    let seeds: Vec<u64> = match args.next() {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()?,
        None => vec![1, 2, 3],
    };

    let scenario = load_scenario(&path)?;
    let rows = sweep(
        &scenario,
        &horizons,
        &seeds,
        Scope::Network,
        true,
        &RunOptions::default(),
    );
    let mut stdout = std::io::stdout().lock();
    write_csv(&mut stdout, &scenario, &rows)?;
    stdout.flush()?;
    Ok(())
}

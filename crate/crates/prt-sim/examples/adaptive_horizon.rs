//! Starts the stadium-outbound scenario at the hopeless half-AISD horizon,
//! once with the horizon fixed and once under the adaptive controller, then
//! prints the controller's trajectory. The fixed run censors; the adaptive
//! run widens until the backlog drains and narrows again afterwards.
//!
//! ```text
//! cargo run --release --example adaptive_horizon
//! ```

use prt_sim::engine::{run, RunOptions};
use prt_sim::management::AdaptiveParams;
use prt_sim::{load_scenario, Horizon, RestOutcome, Scope};

fn main() -> anyhow::Result<()> {
    let base = load_scenario(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/city_event_outbound.toml"
    ))?;

    let mut fixed = base.clone();
    fixed.management.horizon = Horizon::Limited(0.5);
    let fixed_out = run(&fixed, &RunOptions::default())?;
    let fixed_report = fixed_out.report(Scope::Network)?;

    let mut adaptive = base.clone();
    adaptive.management.horizon = Horizon::Limited(0.5);
    adaptive.management.adaptive = Some(AdaptiveParams::default());
    let adaptive_out = run(&adaptive, &RunOptions::default())?;
    let adaptive_report = adaptive_out.report(Scope::Network)?;

    let rest = |r: RestOutcome| match r {
        RestOutcome::Minutes(m) => format!("{m:.1} min"),
        RestOutcome::Censored => format!(">{}h", base.run.drain_window_s / 3600.0),
    };
    println!("stadium outbound, seed {}, starting horizon 0.5 AISD\n", base.run.seed);
    println!(
        "{:<22} {:>10} {:>12} {:>10}",
        "", "AWT [s]", "maxQL", "Rest"
    );
    println!(
        "{:<22} {:>10.1} {:>12} {:>10}",
        "fixed horizon",
        fixed_report.awt_s,
        fixed_report.maxql_groups,
        rest(fixed_report.rest)
    );
    println!(
        "{:<22} {:>10.1} {:>12} {:>10}",
        "adaptive controller",
        adaptive_report.awt_s,
        adaptive_report.maxql_groups,
        rest(adaptive_report.rest)
    );

    println!("\ncontroller trajectory (time -> horizon):");
    let mut last_shown = 0.5;
    for &(t, h) in &adaptive_out.horizon_log {
        let dir = if h > last_shown { "widened" } else { "narrowed" };
        println!("  t = {:>7.0} s  {dir} to {h:.1}", t);
        last_shown = h;
    }
    println!(
        "  ended at {} after {} adjustments",
        adaptive_out.final_horizon,
        adaptive_out.horizon_log.len()
    );
    Ok(())
}

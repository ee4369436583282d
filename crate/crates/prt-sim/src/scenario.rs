//! Scenario files: the on-disk description of a network, fleet, demand and
//! management configuration.
//!
//! Loading validates everything up front and resolves station names to ids,
//! so the simulator core never sees strings. Omitted settings fall back to
//! defaults and leave a notice behind; emitting a loaded scenario writes the
//! resolved values back out, which makes any run reproducible from its own
//! echo.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{
    build_demand, DemandKind, DemandPhase, GroupSizeDistribution, OrderSeed, PhaseArrival,
    MAX_GROUP_SIZE,
};
use crate::management::{AdaptiveParams, ManagementParams};
use crate::network::{
    build_distance_matrix, DistanceMatrix, Horizon, Link, Network, Router, Station, StationId,
};

pub const DEFAULT_BERTHS: usize = 4;
pub const DEFAULT_FLEET_PER_STATION: usize = 3;
pub const DEFAULT_SPEED_MPS: f64 = 10.0;
pub const DEFAULT_BOARDING_S: f64 = 20.0;
pub const DEFAULT_ALIGHTING_S: f64 = 20.0;
pub const DEFAULT_HEAVY_PHASE_S: f64 = 7200.0;
pub const DEFAULT_DRAIN_WINDOW_S: f64 = 7200.0;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FleetParams {
    pub size: usize,
    pub speed_mps: f64,
    pub boarding_s: f64,
    pub alighting_s: f64,
    /// Initial station per vehicle; `None` spreads the fleet round-robin.
    pub placement: Option<Vec<StationId>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunParams {
    /// Length of the heavy demand window, starting at t = 0.
    pub heavy_phase_s: f64,
    /// Extra time after the heavy window for the system to drain.
    pub drain_window_s: f64,
    pub seed: u64,
}

impl RunParams {
    pub fn end_s(&self) -> f64 {
        self.heavy_phase_s + self.drain_window_s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandConfig {
    /// `uniform`, `event_inbound`, `event_outbound` or `custom`.
    pub kind_label: String,
    pub phases: Vec<DemandPhase>,
    pub scripted: Vec<OrderSeed>,
}

/// A fully resolved, validated scenario, ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub network: Network,
    pub distances: DistanceMatrix,
    pub router: Router,
    pub fleet: FleetParams,
    pub demand: DemandConfig,
    pub management: ManagementParams,
    pub run: RunParams,
    /// Venue station of the event scenarios; also handy as a report scope.
    pub event_station: Option<StationId>,
    /// Human-readable record of every default that was filled in.
    pub notices: Vec<String>,
}

impl Scenario {
    /// Programmatic construction; validates exactly like file loading.
    pub fn assemble(
        name: String,
        network: Network,
        fleet: FleetParams,
        demand: DemandConfig,
        management: ManagementParams,
        run: RunParams,
        event_station: Option<StationId>,
    ) -> Result<Self, ScenarioError> {
        let distances =
            build_distance_matrix(&network).map_err(|e| invalid("network", e))?;
        let router = Router::new(&network).map_err(|e| invalid("network", e))?;
        let scenario = Self {
            name,
            network,
            distances,
            router,
            fleet,
            demand,
            management,
            run,
            event_station,
            notices: Vec::new(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.network.station_count();
        for (name, v) in [
            ("fleet.speed_mps", self.fleet.speed_mps),
            ("fleet.boarding_s", self.fleet.boarding_s),
            ("fleet.alighting_s", self.fleet.alighting_s),
            ("run.heavy_phase_s", self.run.heavy_phase_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.run.drain_window_s >= 0.0) || !self.run.drain_window_s.is_finite() {
            return Err(invalid(
                "run.drain_window_s",
                format!("must be nonnegative and finite, got {}", self.run.drain_window_s),
            ));
        }
        if let Some(placement) = &self.fleet.placement {
            if placement.len() != self.fleet.size {
                return Err(invalid(
                    "fleet.placement",
                    format!(
                        "lists {} stations for a fleet of {}",
                        placement.len(),
                        self.fleet.size
                    ),
                ));
            }
        }
        self.management
            .validate()
            .map_err(|e| invalid("management", e))?;
        for (i, phase) in self.demand.phases.iter().enumerate() {
            phase
                .validate(n)
                .map_err(|e| invalid(format!("demand.phases[{i}]"), e))?;
        }
        for (i, o) in self.demand.scripted.iter().enumerate() {
            let path = format!("demand.orders[{i}]");
            if o.origin == o.destination {
                return Err(invalid(path, "origin and destination coincide"));
            }
            if !(1..=MAX_GROUP_SIZE as u8).contains(&o.size) {
                return Err(invalid(path, format!("group size {} out of 1..=4", o.size)));
            }
            if !(o.created_at_s >= 0.0) || o.created_at_s >= self.run.end_s() {
                return Err(invalid(
                    path,
                    format!("time {} s outside the run [0, {})", o.created_at_s, self.run.end_s()),
                ));
            }
        }
        Ok(())
    }

    /// Serializes the resolved configuration back to TOML.
    pub fn emit_toml(&self) -> String {
        let doc = ScenarioDoc {
            name: Some(self.name.clone()),
            network: NetworkDoc {
                stations: self
                    .network
                    .stations()
                    .map(|(_, s)| StationDoc {
                        name: s.name.clone(),
                        berths: Some(s.berth_count),
                    })
                    .collect(),
                links: self
                    .network
                    .links()
                    .map(|(_, l)| LinkDoc {
                        from: self.network.station(l.from).name.clone(),
                        to: self.network.station(l.to).name.clone(),
                        length_m: l.length_m,
                    })
                    .collect(),
            },
            fleet: Some(FleetDoc {
                size: Some(self.fleet.size),
                speed_mps: Some(self.fleet.speed_mps),
                boarding_s: Some(self.fleet.boarding_s),
                alighting_s: Some(self.fleet.alighting_s),
                placement: self.fleet.placement.as_ref().map(|list| {
                    list.iter()
                        .map(|&s| self.network.station(s).name.clone())
                        .collect()
                }),
            }),
            demand: DemandDoc {
                kind: self.demand.kind_label.clone(),
                event_station: self
                    .event_station
                    .map(|s| self.network.station(s).name.clone()),
                phases: if self.demand.kind_label == "custom" {
                    self.demand
                        .phases
                        .iter()
                        .map(|p| PhaseDoc {
                            label: Some(p.label.clone()),
                            start_s: p.start_s,
                            end_s: p.end_s,
                            group_probs: Some(p.group_dist.probs()),
                            arrivals: p
                                .arrivals
                                .iter()
                                .map(|a| ArrivalDoc {
                                    origin: self.network.station(a.origin).name.clone(),
                                    mean_interarrival_min: a.mean_interarrival_min,
                                    destinations: DestinationsDoc::Weights(
                                        a.dest_weights
                                            .iter()
                                            .enumerate()
                                            .filter(|&(_, &w)| w > 0.0)
                                            .map(|(j, &w)| {
                                                (self.network.station(StationId(j)).name.clone(), w)
                                            })
                                            .collect(),
                                    ),
                                })
                                .collect(),
                        })
                        .collect()
                } else {
                    Vec::new()
                },
                orders: self
                    .demand
                    .scripted
                    .iter()
                    .map(|o| OrderDoc {
                        t_s: o.created_at_s,
                        from: self.network.station(o.origin).name.clone(),
                        to: self.network.station(o.destination).name.clone(),
                        size: o.size,
                    })
                    .collect(),
            },
            management: Some(self.management.into()),
            run: Some(RunDoc {
                heavy_phase_s: Some(self.run.heavy_phase_s),
                drain_window_s: Some(self.run.drain_window_s),
                seed: Some(self.run.seed),
            }),
        };
        toml::to_string_pretty(&doc).expect("resolved scenario serializes")
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: Option<String>,
    network: NetworkDoc,
    fleet: Option<FleetDoc>,
    demand: DemandDoc,
    management: Option<ManagementDoc>,
    run: Option<RunDoc>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    stations: Vec<StationDoc>,
    links: Vec<LinkDoc>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct StationDoc {
    name: String,
    berths: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    from: String,
    to: String,
    length_m: f64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct FleetDoc {
    size: Option<usize>,
    speed_mps: Option<f64>,
    boarding_s: Option<f64>,
    alighting_s: Option<f64>,
    placement: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
struct DemandDoc {
    kind: String,
    event_station: Option<String>,
    phases: Vec<PhaseDoc>,
    orders: Vec<OrderDoc>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct PhaseDoc {
    label: Option<String>,
    start_s: f64,
    end_s: f64,
    group_probs: Option<[f64; MAX_GROUP_SIZE]>,
    arrivals: Vec<ArrivalDoc>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct ArrivalDoc {
    origin: String,
    mean_interarrival_min: f64,
    destinations: DestinationsDoc,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
enum DestinationsDoc {
    /// `"uniform"`: every other station equally likely.
    Keyword(String),
    /// Explicit weights by station name; omitted stations get weight 0.
    Weights(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct OrderDoc {
    t_s: f64,
    from: String,
    to: String,
    size: u8,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
struct ManagementDoc {
    horizon: Option<Horizon>,
    w_standing: Option<f64>,
    w_dist: Option<f64>,
    w_queue: Option<f64>,
    w_inbound: Option<f64>,
    w_berth: Option<f64>,
    call_queue_threshold: Option<usize>,
    surplus_threshold: Option<usize>,
    deficit_threshold: Option<usize>,
    balance_period_s: Option<f64>,
    tick_s: Option<f64>,
    adaptive: Option<AdaptiveParams>,
}

impl From<ManagementParams> for ManagementDoc {
    fn from(p: ManagementParams) -> Self {
        Self {
            horizon: Some(p.horizon),
            w_standing: Some(p.w_standing),
            w_dist: Some(p.w_dist),
            w_queue: Some(p.w_queue),
            w_inbound: Some(p.w_inbound),
            w_berth: Some(p.w_berth),
            call_queue_threshold: Some(p.call_queue_threshold),
            surplus_threshold: Some(p.surplus_threshold),
            deficit_threshold: Some(p.deficit_threshold),
            balance_period_s: Some(p.balance_period_s),
            tick_s: Some(p.tick_s),
            adaptive: p.adaptive,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
struct RunDoc {
    heavy_phase_s: Option<f64>,
    drain_window_s: Option<f64>,
    seed: Option<u64>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    parse_scenario(&text, &fallback)
}

pub fn parse_scenario(text: &str, fallback_name: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text)?;
    resolve(doc, fallback_name)
}

fn resolve(doc: ScenarioDoc, fallback_name: &str) -> Result<Scenario, ScenarioError> {
    let mut notices = Vec::new();
    let name = doc.name.unwrap_or_else(|| fallback_name.to_string());

    let mut unberthed = Vec::new();
    let stations: Vec<Station> = doc
        .network
        .stations
        .iter()
        .map(|s| {
            if s.berths.is_none() {
                unberthed.push(s.name.clone());
            }
            Station {
                name: s.name.clone(),
                berth_count: s.berths.unwrap_or(DEFAULT_BERTHS),
            }
        })
        .collect();
    if !unberthed.is_empty() {
        notices.push(format!(
            "network: stations without a berth count default to {DEFAULT_BERTHS}: {}",
            unberthed.join(", ")
        ));
    }
    let lookup = |path: String, name: &str, stations: &[Station]| -> Result<StationId, ScenarioError> {
        stations
            .iter()
            .position(|s| s.name == name)
            .map(StationId)
            .ok_or_else(|| invalid(path, format!("unknown station `{name}`")))
    };
    let links = doc
        .network
        .links
        .iter()
        .enumerate()
        .map(|(i, l)| {
            Ok(Link {
                from: lookup(format!("network.links[{i}].from"), &l.from, &stations)?,
                to: lookup(format!("network.links[{i}].to"), &l.to, &stations)?,
                length_m: l.length_m,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    let network = Network::new(stations, links).map_err(|e| invalid("network", e))?;
    let n = network.station_count();

    let fleet_doc = doc.fleet.unwrap_or_default();
    let size = match fleet_doc.size {
        Some(s) => s,
        None => {
            let s = DEFAULT_FLEET_PER_STATION * n;
            notices.push(format!(
                "fleet.size not set; defaulting to {DEFAULT_FLEET_PER_STATION} per station = {s}"
            ));
            s
        }
    };
    let placement = fleet_doc
        .placement
        .map(|names| {
            names
                .iter()
                .enumerate()
                .map(|(i, name)| find_station(&network, format!("fleet.placement[{i}]"), name))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let fleet = FleetParams {
        size,
        speed_mps: fleet_doc.speed_mps.unwrap_or(DEFAULT_SPEED_MPS),
        boarding_s: fleet_doc.boarding_s.unwrap_or(DEFAULT_BOARDING_S),
        alighting_s: fleet_doc.alighting_s.unwrap_or(DEFAULT_ALIGHTING_S),
        placement,
    };

    let run_doc = doc.run.unwrap_or_default();
    let run = RunParams {
        heavy_phase_s: run_doc.heavy_phase_s.unwrap_or(DEFAULT_HEAVY_PHASE_S),
        drain_window_s: run_doc.drain_window_s.unwrap_or(DEFAULT_DRAIN_WINDOW_S),
        seed: run_doc.seed.unwrap_or(DEFAULT_SEED),
    };

    let management_doc = doc.management.unwrap_or_default();
    let defaults = ManagementParams::default();
    let horizon = match management_doc.horizon {
        Some(h) => h,
        None => {
            notices.push(
                "management.horizon not set; defaulting to unlimited visibility".to_string(),
            );
            Horizon::Unlimited
        }
    };
    let management = ManagementParams {
        horizon,
        w_standing: management_doc.w_standing.unwrap_or(defaults.w_standing),
        w_dist: management_doc.w_dist.unwrap_or(defaults.w_dist),
        w_queue: management_doc.w_queue.unwrap_or(defaults.w_queue),
        w_inbound: management_doc.w_inbound.unwrap_or(defaults.w_inbound),
        w_berth: management_doc.w_berth.unwrap_or(defaults.w_berth),
        call_queue_threshold: management_doc
            .call_queue_threshold
            .unwrap_or(defaults.call_queue_threshold),
        surplus_threshold: management_doc
            .surplus_threshold
            .unwrap_or(defaults.surplus_threshold),
        deficit_threshold: management_doc
            .deficit_threshold
            .unwrap_or(defaults.deficit_threshold),
        balance_period_s: management_doc
            .balance_period_s
            .unwrap_or(defaults.balance_period_s),
        tick_s: management_doc.tick_s.unwrap_or(defaults.tick_s),
        adaptive: management_doc.adaptive,
    };

    let event_station = doc
        .demand
        .event_station
        .as_deref()
        .map(|name| find_station(&network, "demand.event_station".into(), name))
        .transpose()?;

    let kind_label = doc.demand.kind.clone();
    let builtin = match kind_label.as_str() {
        "uniform" => Some(DemandKind::Uniform),
        "event_inbound" => Some(DemandKind::EventInbound),
        "event_outbound" => Some(DemandKind::EventOutbound),
        "custom" => None,
        other => {
            return Err(invalid(
                "demand.kind",
                format!("unknown kind `{other}` (expected uniform, event_inbound, event_outbound or custom)"),
            ))
        }
    };
    let phases = match builtin {
        Some(kind) => {
            if !doc.demand.phases.is_empty() {
                return Err(invalid(
                    "demand.phases",
                    format!("only allowed with kind = \"custom\", not `{kind_label}`"),
                ));
            }
            if matches!(kind, DemandKind::EventInbound | DemandKind::EventOutbound)
                && event_station.is_none()
            {
                return Err(invalid(
                    "demand.event_station",
                    format!("required for kind = \"{kind_label}\""),
                ));
            }
            build_demand(kind, &network, event_station, run.heavy_phase_s, run.end_s())
                .map_err(|e| invalid("demand", e))?
        }
        None => doc
            .demand
            .phases
            .iter()
            .enumerate()
            .map(|(i, p)| resolve_phase(i, p, &network))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let scripted = doc
        .demand
        .orders
        .iter()
        .enumerate()
        .map(|(i, o)| {
            Ok(OrderSeed {
                created_at_s: o.t_s,
                origin: find_station(&network, format!("demand.orders[{i}].from"), &o.from)?,
                destination: find_station(&network, format!("demand.orders[{i}].to"), &o.to)?,
                size: o.size,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let mut scenario = Scenario::assemble(
        name,
        network,
        fleet,
        DemandConfig {
            kind_label,
            phases,
            scripted,
        },
        management,
        run,
        event_station,
    )?;
    scenario.notices = notices;
    Ok(scenario)
}

fn resolve_phase(
    index: usize,
    doc: &PhaseDoc,
    network: &Network,
) -> Result<DemandPhase, ScenarioError> {
    let path = format!("demand.phases[{index}]");
    let n = network.station_count();
    let group_dist = match doc.group_probs {
        Some(probs) => GroupSizeDistribution::new(probs)
            .map_err(|e| invalid(format!("{path}.group_probs"), e))?,
        None => GroupSizeDistribution::uniform(),
    };
    let arrivals = doc
        .arrivals
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let apath = format!("{path}.arrivals[{j}]");
            let origin = network
                .station_by_name(&a.origin)
                .ok_or_else(|| invalid(format!("{apath}.origin"), format!("unknown station `{}`", a.origin)))?;
            let dest_weights = match &a.destinations {
                DestinationsDoc::Keyword(word) if word == "uniform" => (0..n)
                    .map(|k| if k == origin.0 { 0.0 } else { 1.0 })
                    .collect(),
                DestinationsDoc::Keyword(word) => {
                    return Err(invalid(
                        format!("{apath}.destinations"),
                        format!("unknown keyword `{word}` (expected \"uniform\" or a weight table)"),
                    ))
                }
                DestinationsDoc::Weights(map) => {
                    let mut weights = vec![0.0; n];
                    for (name, &w) in map {
                        let s = network.station_by_name(name).ok_or_else(|| {
                            invalid(
                                format!("{apath}.destinations"),
                                format!("unknown station `{name}`"),
                            )
                        })?;
                        weights[s.0] = w;
                    }
                    weights
                }
            };
            Ok(PhaseArrival {
                origin,
                mean_interarrival_min: a.mean_interarrival_min,
                dest_weights,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(DemandPhase {
        label: doc
            .label
            .clone()
            .unwrap_or_else(|| format!("phase {index}")),
        start_s: doc.start_s,
        end_s: doc.end_s,
        group_dist,
        arrivals,
    })
}

fn find_station(
    network: &Network,
    path: String,
    name: &str,
) -> Result<StationId, ScenarioError> {
    network
        .station_by_name(name)
        .ok_or_else(|| invalid(path, format!("unknown station `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[network.stations]]
name = "A"

[[network.stations]]
name = "B"

[[network.links]]
from = "A"
to = "B"
length_m = 500.0

[[network.links]]
from = "B"
to = "A"
length_m = 500.0

[demand]
kind = "uniform"
"#;

    #[test]
    fn minimal_scenario_fills_defaults_with_notices() {
        let s = parse_scenario(MINIMAL, "minimal").unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.fleet.size, 2 * DEFAULT_FLEET_PER_STATION);
        assert_eq!(s.fleet.speed_mps, DEFAULT_SPEED_MPS);
        assert_eq!(s.management.horizon, Horizon::Unlimited);
        assert_eq!(s.run.seed, DEFAULT_SEED);
        assert_eq!(s.network.station(StationId(0)).berth_count, DEFAULT_BERTHS);
        assert!(s.notices.iter().any(|n| n.contains("fleet.size")));
        assert!(s.notices.iter().any(|n| n.contains("management.horizon")));
        assert!(s.notices.iter().any(|n| n.contains("berth count")));
        assert_eq!(s.demand.phases.len(), 1);
    }

    #[test]
    fn unknown_link_endpoint_is_reported_with_its_path() {
        let text = MINIMAL.replace("to = \"A\"", "to = \"Z\"");
        let err = parse_scenario(&text, "broken").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("network.links[1].to"), "{msg}");
        assert!(msg.contains("`Z`"), "{msg}");
    }

    #[test]
    fn disconnected_network_is_rejected_at_load() {
        let text =MINIMAL.replace(
            "[[network.links]]\nfrom = \"B\"\nto = \"A\"\nlength_m = 500.0\n",
            "",
        );
        let err = parse_scenario(&text, "oneway").unwrap_err();
        assert!(err.to_string().contains("strongly connected"), "{err}");
    }

    #[test]
    fn event_kind_requires_a_venue() {
        let text = MINIMAL.replace("kind = \"uniform\"", "kind = \"event_inbound\"");
        let err = parse_scenario(&text, "x").unwrap_err();
        assert!(err.to_string().contains("demand.event_station"), "{err}");
        let text = MINIMAL.replace(
            "kind = \"uniform\"",
            "kind = \"event_inbound\"\nevent_station = \"B\"",
        );
        let s = parse_scenario(&text, "x").unwrap();
        assert_eq!(s.event_station, Some(StationId(1)));
        assert_eq!(s.demand.phases.len(), 2);
    }

    #[test]
    fn phases_clash_with_builtin_kinds() {
        let text = format!(
            "{MINIMAL}\n[[demand.phases]]\nstart_s = 0.0\nend_s = 10.0\narrivals = []\n"
        );
        let err = parse_scenario(&text, "x").unwrap_err();
        assert!(err.to_string().contains("demand.phases"), "{err}");
    }

    #[test]
    fn custom_phases_resolve_names_and_weights() {
        let text = r#"
[[network.stations]]
name = "A"
[[network.stations]]
name = "B"
[[network.stations]]
name = "C"

[[network.links]]
from = "A"
to = "B"
length_m = 100.0
[[network.links]]
from = "B"
to = "C"
length_m = 100.0
[[network.links]]
from = "C"
to = "A"
length_m = 100.0

[demand]
kind = "custom"

[[demand.phases]]
start_s = 0.0
end_s = 600.0
group_probs = [1.0, 0.0, 0.0, 0.0]

[[demand.phases.arrivals]]
origin = "A"
mean_interarrival_min = 2.0
destinations = { B = 3.0, C = 1.0 }

[[demand.phases.arrivals]]
origin = "B"
mean_interarrival_min = 4.0
destinations = "uniform"
"#;
        let s = parse_scenario(text, "custom").unwrap();
        let phase = &s.demand.phases[0];
        assert_eq!(phase.arrivals[0].dest_weights, vec![0.0, 3.0, 1.0]);
        assert_eq!(phase.arrivals[1].dest_weights, vec![1.0, 0.0, 1.0]);
        assert_eq!(phase.group_dist.probs(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn scripted_orders_validate() {
        let text = format!("{MINIMAL}\n[[demand.orders]]\nt_s = 10.0\nfrom = \"A\"\nto = \"A\"\nsize = 2\n");
        let err = parse_scenario(&text, "x").unwrap_err();
        assert!(err.to_string().contains("coincide"), "{err}");
        let text = format!("{MINIMAL}\n[[demand.orders]]\nt_s = 1e9\nfrom = \"A\"\nto = \"B\"\nsize = 2\n");
        let err = parse_scenario(&text, "x").unwrap_err();
        assert!(err.to_string().contains("outside the run"), "{err}");
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let text = format!("{MINIMAL}\n[management]\nhorizont = 1.5\n");
        assert!(matches!(
            parse_scenario(&text, "x").unwrap_err(),
            ScenarioError::Parse(_)
        ));
    }

    #[test]
    fn negative_horizon_is_rejected_in_toml() {
        let text = format!("{MINIMAL}\n[management]\nhorizon = -1.0\n");
        assert!(parse_scenario(&text, "x").is_err());
    }

    #[test]
    fn horizon_accepts_inf_keyword() {
        let text = format!("{MINIMAL}\n[management]\nhorizon = \"inf\"\n");
        let s = parse_scenario(&text, "x").unwrap();
        assert_eq!(s.management.horizon, Horizon::Unlimited);
        assert!(!s.notices.iter().any(|n| n.contains("management.horizon")));
    }

    #[test]
    fn emitted_scenario_round_trips() {
        let text = format!(
            "{MINIMAL}\n[management]\nhorizon = 1.5\n\n[management.adaptive]\nstep = 0.25\n\n[fleet]\nsize = 4\n\n[run]\nseed = 9\n"
        );
        let original = parse_scenario(&text, "rt").unwrap();
        let emitted = original.emit_toml();
        let reloaded = parse_scenario(&emitted, "rt2").unwrap();
        assert_eq!(reloaded.name, original.name);
        assert_eq!(reloaded.management, original.management);
        assert_eq!(reloaded.fleet, original.fleet);
        assert_eq!(reloaded.run, original.run);
        assert_eq!(reloaded.demand.phases, original.demand.phases);
        assert_eq!(reloaded.network, original.network);
        assert!(reloaded.notices.is_empty(), "{:?}", reloaded.notices);
    }
}

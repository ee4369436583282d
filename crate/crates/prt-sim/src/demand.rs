//! Transit-order generation.
//!
//! Orders arrive at each station as a Poisson process, realized by sampling
//! exponential inter-arrival gaps. Overlapping demand phases superpose
//! independent streams, which is how an event surge rides on top of the
//! everyday background traffic. Every stream draws from its own counter-mode
//! RNG keyed by (master seed, station, phase), so regenerating a scenario
//! with the same seed reproduces the exact same order list no matter how
//! phases are iterated.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use thiserror::Error;

use crate::network::{Network, StationId};

/// Group sizes are 1..=4 people; a group never splits across vehicles.
pub const MAX_GROUP_SIZE: usize = 4;

/// Event crowd size used by the built-in event scenarios.
pub const EVENT_PARTICIPANTS: f64 = 4219.0;
/// The event rush is calibrated over a two-hour heavy window.
pub const EVENT_WINDOW_H: f64 = 2.0;
/// Everyday background demand at every station, in groups per hour.
pub const BACKGROUND_GROUPS_PER_H: f64 = 4.0;
/// Mean inter-order gap per station in the uniform scenario, in minutes.
pub const UNIFORM_MEAN_INTERARRIVAL_MIN: f64 = 0.856;

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("group size probabilities must be nonnegative and sum to 1, got {0:?}")]
    BadGroupProbs([f64; MAX_GROUP_SIZE]),
    #[error("mean inter-arrival time must be positive and finite, got {0} min")]
    BadMeanInterarrival(f64),
    #[error("destination weights must be nonnegative with at least one positive entry")]
    AllZeroWeights,
    #[error("destination weight for the origin station itself must be zero")]
    SelfWeight,
    #[error("expected {expected} destination weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("phase must satisfy start < end, got [{start_s}, {end_s}]")]
    EmptyPhase { start_s: f64, end_s: f64 },
}

/// Probability of a group having 1, 2, 3 or 4 members.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupSizeDistribution {
    probs: [f64; MAX_GROUP_SIZE],
}

impl GroupSizeDistribution {
    pub fn new(probs: [f64; MAX_GROUP_SIZE]) -> Result<Self, DemandError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(DemandError::BadGroupProbs(probs));
        }
        Ok(Self { probs })
    }

    /// Default when nothing is known about travelers: each size equally likely.
    pub fn uniform() -> Self {
        Self { probs: [0.25; 4] }
    }

    /// Arrivals heading to a mass event skew toward larger groups.
    pub fn event_inbound() -> Self {
        Self {
            probs: [0.1, 0.2, 0.4, 0.3],
        }
    }

    /// Departures after a mass event skew even larger.
    pub fn event_outbound() -> Self {
        Self {
            probs: [0.05, 0.05, 0.3, 0.6],
        }
    }

    pub fn probs(&self) -> [f64; MAX_GROUP_SIZE] {
        self.probs
    }

    /// Expected persons per group.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }
}

/// Gap until the next order at one station, in seconds.
pub fn sample_interarrival_s(mean_min: f64, rng: &mut impl Rng) -> Result<f64, DemandError> {
    if !(mean_min > 0.0) || !mean_min.is_finite() {
        return Err(DemandError::BadMeanInterarrival(mean_min));
    }
    let rate_per_s = 1.0 / (mean_min * 60.0);
    let exp = Exp::new(rate_per_s).expect("rate is positive and finite");
    Ok(exp.sample(rng))
}

pub fn sample_group_size(dist: &GroupSizeDistribution, rng: &mut impl Rng) -> u8 {
    let idx = WeightedIndex::new(dist.probs)
        .expect("validated at construction")
        .sample(rng);
    (idx + 1) as u8
}

/// Picks a destination from per-station weights. The origin's own weight must
/// be zero, so a group never travels to where it already is.
pub fn sample_destination(
    origin: StationId,
    weights: &[f64],
    rng: &mut impl Rng,
) -> Result<StationId, DemandError> {
    if weights[origin.0] != 0.0 {
        return Err(DemandError::SelfWeight);
    }
    let idx = WeightedIndex::new(weights)
        .map_err(|_| DemandError::AllZeroWeights)?
        .sample(rng);
    Ok(StationId(idx))
}

/// One Poisson stream: a station emitting orders at a fixed mean rate with
/// fixed destination weights, active over the surrounding phase's window.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseArrival {
    pub origin: StationId,
    pub mean_interarrival_min: f64,
    /// One weight per station; `weights[origin] == 0`.
    pub dest_weights: Vec<f64>,
}

/// A time window during which a set of stations emits orders. Phases may
/// overlap; their streams are independent and superpose.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandPhase {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
    pub group_dist: GroupSizeDistribution,
    pub arrivals: Vec<PhaseArrival>,
}

impl DemandPhase {
    pub fn validate(&self, n_stations: usize) -> Result<(), DemandError> {
        if !(self.start_s < self.end_s) || !self.start_s.is_finite() || !self.end_s.is_finite() {
            return Err(DemandError::EmptyPhase {
                start_s: self.start_s,
                end_s: self.end_s,
            });
        }
        for a in &self.arrivals {
            if !(a.mean_interarrival_min > 0.0) || !a.mean_interarrival_min.is_finite() {
                return Err(DemandError::BadMeanInterarrival(a.mean_interarrival_min));
            }
            if a.dest_weights.len() != n_stations {
                return Err(DemandError::WeightCount {
                    expected: n_stations,
                    got: a.dest_weights.len(),
                });
            }
            if a.dest_weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(DemandError::AllZeroWeights);
            }
            if a.dest_weights[a.origin.0] != 0.0 {
                return Err(DemandError::SelfWeight);
            }
            if a.dest_weights.iter().all(|&w| w == 0.0) {
                return Err(DemandError::AllZeroWeights);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OrderId(pub u64);

/// A group wanting to travel. Waiting time runs from `created_at_s` until
/// boarding starts.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitOrder {
    pub id: OrderId,
    pub origin: StationId,
    pub destination: StationId,
    pub size: u8,
    pub created_at_s: f64,
}

/// A hand-placed order, used by scripted scenarios and tests.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderSeed {
    pub created_at_s: f64,
    pub origin: StationId,
    pub destination: StationId,
    pub size: u8,
}

fn stream_rng(master_seed: u64, origin: usize, phase: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(origin as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(phase as u64).to_le_bytes());
    key[24..32].copy_from_slice(b"ordergen");
    ChaCha8Rng::from_seed(key)
}

/// Realizes every phase into a single order list, merged with any scripted
/// orders, sorted by creation time and numbered in that order.
pub fn generate_orders(
    phases: &[DemandPhase],
    scripted: &[OrderSeed],
    n_stations: usize,
    master_seed: u64,
) -> Result<Vec<TransitOrder>, DemandError> {
    let mut raw: Vec<(f64, usize, usize, OrderSeed)> = Vec::new();
    for (pi, phase) in phases.iter().enumerate() {
        phase.validate(n_stations)?;
        for arrival in &phase.arrivals {
            let mut rng = stream_rng(master_seed, arrival.origin.0, pi);
            let mut t = phase.start_s;
            loop {
                t += sample_interarrival_s(arrival.mean_interarrival_min, &mut rng)?;
                if t >= phase.end_s {
                    break;
                }
                let size = sample_group_size(&phase.group_dist, &mut rng);
                let destination = sample_destination(arrival.origin, &arrival.dest_weights, &mut rng)?;
                raw.push((
                    t,
                    pi,
                    arrival.origin.0,
                    OrderSeed {
                        created_at_s: t,
                        origin: arrival.origin,
                        destination,
                        size,
                    },
                ));
            }
        }
    }
    for seed in scripted {
        raw.push((seed.created_at_s, usize::MAX, seed.origin.0, seed.clone()));
    }
    // Sort key includes phase and origin so exact time ties still order
    // deterministically.
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, _, seed))| TransitOrder {
            id: OrderId(i as u64),
            origin: seed.origin,
            destination: seed.destination,
            size: seed.size,
            created_at_s: seed.created_at_s,
        })
        .collect())
}

/// The three built-in demand patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemandKind {
    /// Every station emits alike all through the heavy window.
    Uniform,
    /// Every other station sends the event crowd toward one venue station.
    EventInbound,
    /// The venue station sends the crowd home everywhere else.
    EventOutbound,
}

/// Builds the demand phases for a built-in pattern.
///
/// Event rates spread [`EVENT_PARTICIPANTS`] over [`EVENT_WINDOW_H`] and
/// divide by the expected group size, so the configured heavy window length
/// changes how long the rush lasts but not its intensity. The background
/// stream keeps every station alive at [`BACKGROUND_GROUPS_PER_H`] until the
/// end of the run, which is what the drain window measures against.
pub fn build_demand(
    kind: DemandKind,
    net: &Network,
    event_station: Option<StationId>,
    heavy_end_s: f64,
    run_end_s: f64,
) -> Result<Vec<DemandPhase>, DemandError> {
    let n = net.station_count();
    let uniform_weights = |origin: StationId| -> Vec<f64> {
        (0..n).map(|j| if j == origin.0 { 0.0 } else { 1.0 }).collect()
    };
    let background = DemandPhase {
        label: "background".into(),
        start_s: 0.0,
        end_s: run_end_s,
        group_dist: GroupSizeDistribution::uniform(),
        arrivals: (0..n)
            .map(|i| PhaseArrival {
                origin: StationId(i),
                mean_interarrival_min: 60.0 / BACKGROUND_GROUPS_PER_H,
                dest_weights: uniform_weights(StationId(i)),
            })
            .collect(),
    };
    let phases = match kind {
        DemandKind::Uniform => vec![DemandPhase {
            label: "uniform".into(),
            start_s: 0.0,
            end_s: heavy_end_s,
            group_dist: GroupSizeDistribution::uniform(),
            arrivals: (0..n)
                .map(|i| PhaseArrival {
                    origin: StationId(i),
                    mean_interarrival_min: UNIFORM_MEAN_INTERARRIVAL_MIN,
                    dest_weights: uniform_weights(StationId(i)),
                })
                .collect(),
        }],
        DemandKind::EventInbound => {
            let venue = event_station.expect("event scenarios carry a venue station");
            let dist = GroupSizeDistribution::event_inbound();
            // Crowd split evenly over the other stations, by persons.
            let groups_per_h =
                EVENT_PARTICIPANTS / EVENT_WINDOW_H / (n - 1) as f64 / dist.mean();
            let mut venue_weights = vec![0.0; n];
            venue_weights[venue.0] = 1.0;
            vec![
                DemandPhase {
                    label: "event inbound".into(),
                    start_s: 0.0,
                    end_s: heavy_end_s,
                    group_dist: dist,
                    arrivals: (0..n)
                        .filter(|&i| i != venue.0)
                        .map(|i| PhaseArrival {
                            origin: StationId(i),
                            mean_interarrival_min: 60.0 / groups_per_h,
                            dest_weights: venue_weights.clone(),
                        })
                        .collect(),
                },
                background,
            ]
        }
        DemandKind::EventOutbound => {
            let venue = event_station.expect("event scenarios carry a venue station");
            let dist = GroupSizeDistribution::event_outbound();
            let groups_per_h = EVENT_PARTICIPANTS / EVENT_WINDOW_H / dist.mean();
            vec![
                DemandPhase {
                    label: "event outbound".into(),
                    start_s: 0.0,
                    end_s: heavy_end_s,
                    group_dist: dist,
                    arrivals: vec![PhaseArrival {
                        origin: venue,
                        mean_interarrival_min: 60.0 / groups_per_h,
                        dest_weights: uniform_weights(venue),
                    }],
                },
                background,
            ]
        }
    };
    for phase in &phases {
        phase.validate(n)?;
    }
    Ok(phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Link, Station};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn ring_network(n: usize) -> Network {
        let stations = (0..n)
            .map(|i| Station {
                name: format!("S{i}"),
                berth_count: 4,
            })
            .collect();
        let links = (0..n)
            .map(|i| Link {
                from: StationId(i),
                to: StationId((i + 1) % n),
                length_m: 500.0,
            })
            .collect();
        Network::new(stations, links).unwrap()
    }

    #[test]
    fn group_means_match_their_definitions() {
        assert!((GroupSizeDistribution::uniform().mean() - 2.5).abs() < 1e-12);
        assert!((GroupSizeDistribution::event_inbound().mean() - 2.9).abs() < 1e-12);
        assert!((GroupSizeDistribution::event_outbound().mean() - 3.45).abs() < 1e-12);
    }

    #[test]
    fn group_probs_validate() {
        assert!(GroupSizeDistribution::new([0.5, 0.5, 0.0, 0.0]).is_ok());
        assert!(GroupSizeDistribution::new([0.5, 0.6, 0.0, 0.0]).is_err());
        assert!(GroupSizeDistribution::new([-0.1, 0.6, 0.5, 0.0]).is_err());
    }

    #[test]
    fn interarrival_mean_converges() {
        let mut r = rng(7);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_interarrival_s(2.0, &mut r).unwrap();
        }
        let mean_s = sum / n as f64;
        // Expected 120 s; 1% is ~4 sigma at this sample size.
        assert!((mean_s - 120.0).abs() < 1.2, "mean {mean_s}");
    }

    #[test]
    fn interarrival_rejects_bad_mean() {
        let mut r = rng(1);
        assert_eq!(
            sample_interarrival_s(0.0, &mut r).unwrap_err(),
            DemandError::BadMeanInterarrival(0.0)
        );
        assert!(sample_interarrival_s(f64::INFINITY, &mut r).is_err());
    }

    #[test]
    fn group_size_point_mass() {
        let dist = GroupSizeDistribution::new([0.0, 0.0, 1.0, 0.0]).unwrap();
        let mut r = rng(2);
        for _ in 0..100 {
            assert_eq!(sample_group_size(&dist, &mut r), 3);
        }
    }

    #[test]
    fn group_size_frequencies_track_probabilities() {
        let dist = GroupSizeDistribution::event_outbound();
        let mut r = rng(3);
        let n = 100_000;
        let mut counts = [0u32; 4];
        for _ in 0..n {
            counts[sample_group_size(&dist, &mut r) as usize - 1] += 1;
        }
        for (i, p) in dist.probs().iter().enumerate() {
            let freq = counts[i] as f64 / n as f64;
            assert!((freq - p).abs() < 0.01, "size {} freq {freq} vs {p}", i + 1);
        }
    }

    #[test]
    fn destination_sampling_respects_weights() {
        let mut r = rng(4);
        let weights = [0.0, 3.0, 1.0];
        let mut counts = [0u32; 3];
        for _ in 0..40_000 {
            counts[sample_destination(StationId(0), &weights, &mut r).unwrap().0] += 1;
        }
        assert_eq!(counts[0], 0);
        let ratio = counts[1] as f64 / counts[2] as f64;
        assert!((ratio - 3.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn destination_sampling_rejects_degenerate_weights() {
        let mut r = rng(5);
        assert_eq!(
            sample_destination(StationId(0), &[0.0, 0.0], &mut r).unwrap_err(),
            DemandError::AllZeroWeights
        );
        assert_eq!(
            sample_destination(StationId(0), &[1.0, 1.0], &mut r).unwrap_err(),
            DemandError::SelfWeight
        );
    }

    #[test]
    fn generated_orders_are_sorted_numbered_and_in_window() {
        let net = ring_network(4);
        let phases = build_demand(DemandKind::Uniform, &net, None, 3600.0, 7200.0).unwrap();
        let orders = generate_orders(&phases, &[], 4, 42).unwrap();
        assert!(!orders.is_empty());
        for (i, o) in orders.iter().enumerate() {
            assert_eq!(o.id, OrderId(i as u64));
            assert!(o.created_at_s > 0.0 && o.created_at_s < 3600.0);
            assert_ne!(o.origin, o.destination);
            assert!((1..=4).contains(&o.size));
            if i > 0 {
                assert!(orders[i - 1].created_at_s <= o.created_at_s);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_orders_exactly() {
        let net = ring_network(5);
        let phases =
            build_demand(DemandKind::EventInbound, &net, Some(StationId(2)), 7200.0, 14400.0)
                .unwrap();
        let a = generate_orders(&phases, &[], 5, 99).unwrap();
        let b = generate_orders(&phases, &[], 5, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_orders(&phases, &[], 5, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scripted_orders_merge_into_the_stream() {
        let scripted = vec![
            OrderSeed {
                created_at_s: 10.0,
                origin: StationId(0),
                destination: StationId(1),
                size: 2,
            },
            OrderSeed {
                created_at_s: 5.0,
                origin: StationId(1),
                destination: StationId(0),
                size: 1,
            },
        ];
        let orders = generate_orders(&[], &scripted, 2, 1).unwrap();
        assert_eq!(orders.len(), 2);
        assert_eq!(orders[0].created_at_s, 5.0);
        assert_eq!(orders[0].id, OrderId(0));
        assert_eq!(orders[1].created_at_s, 10.0);
    }

    #[test]
    fn event_inbound_rates_and_targets() {
        let net = ring_network(12);
        let venue = StationId(8);
        let phases =
            build_demand(DemandKind::EventInbound, &net, Some(venue), 7200.0, 14400.0).unwrap();
        assert_eq!(phases.len(), 2);
        let event = &phases[0];
        assert_eq!(event.arrivals.len(), 11);
        for a in &event.arrivals {
            assert_ne!(a.origin, venue);
            // 4219 persons / 2 h / 11 stations / 2.9 persons per group.
            let groups_per_h = 60.0 / a.mean_interarrival_min;
            assert!((groups_per_h - 66.13).abs() < 0.02, "rate {groups_per_h}");
            // All demand aims at the venue.
            for (j, &w) in a.dest_weights.iter().enumerate() {
                assert_eq!(w > 0.0, j == venue.0);
            }
        }
        let background = &phases[1];
        assert_eq!(background.arrivals.len(), 12);
        assert_eq!(background.end_s, 14400.0);
        assert_eq!(background.arrivals[0].mean_interarrival_min, 15.0);
    }

    #[test]
    fn event_outbound_rate_combines_to_published_mean_gap() {
        let net = ring_network(12);
        let venue = StationId(8);
        let phases =
            build_demand(DemandKind::EventOutbound, &net, Some(venue), 7200.0, 14400.0).unwrap();
        let event = &phases[0];
        assert_eq!(event.arrivals.len(), 1);
        assert_eq!(event.arrivals[0].origin, venue);
        let event_rate = 60.0 / event.arrivals[0].mean_interarrival_min;
        // 4219 persons / 2 h / 3.45 persons per group.
        assert!((event_rate - 611.4).abs() < 0.1, "rate {event_rate}");
        // Superposed with the venue's background stream the mean gap between
        // orders shrinks to roughly 0.0976 min.
        let combined = event_rate + BACKGROUND_GROUPS_PER_H;
        let mean_gap_min = 60.0 / combined;
        assert!((mean_gap_min - 0.0976).abs() < 2e-4, "gap {mean_gap_min}");
    }

    #[test]
    fn uniform_demand_covers_every_station() {
        let net = ring_network(12);
        let phases = build_demand(DemandKind::Uniform, &net, None, 7200.0, 14400.0).unwrap();
        assert_eq!(phases.len(), 1);
        assert_eq!(phases[0].arrivals.len(), 12);
        for a in &phases[0].arrivals {
            assert_eq!(a.mean_interarrival_min, UNIFORM_MEAN_INTERARRIVAL_MIN);
        }
    }

    #[test]
    fn phase_validation_catches_bad_windows_and_weights() {
        let phase = DemandPhase {
            label: "bad".into(),
            start_s: 100.0,
            end_s: 100.0,
            group_dist: GroupSizeDistribution::uniform(),
            arrivals: vec![],
        };
        assert!(matches!(
            phase.validate(3),
            Err(DemandError::EmptyPhase { .. })
        ));
        let phase = DemandPhase {
            label: "bad".into(),
            start_s: 0.0,
            end_s: 100.0,
            group_dist: GroupSizeDistribution::uniform(),
            arrivals: vec![PhaseArrival {
                origin: StationId(0),
                mean_interarrival_min: 1.0,
                dest_weights: vec![0.0, 1.0],
            }],
        };
        assert_eq!(
            phase.validate(3),
            Err(DemandError::WeightCount {
                expected: 3,
                got: 2
            })
        );
    }
}

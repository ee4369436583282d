//! Distributed empty-vehicle management.
//!
//! Every decision is taken by one station using only snapshots of stations
//! inside its communication horizon. There is no central dispatcher: a
//! station with waiting passengers calls an empty vehicle in, a station with
//! a jammed apron expels one, and a periodic balancing pass tops up stations
//! that have run dry. Scores normalize distance by the AISD so the same
//! weights work on networks of any size.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Horizon, StationId};

/// What one station tells its neighbors about itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationSnapshot {
    pub station: StationId,
    /// Empty vehicles idling on berths, ready to be sent away.
    pub standing_empty: usize,
    pub free_berths: usize,
    /// Waiting groups, head of queue first.
    pub queue_len: usize,
    /// Empty vehicles already underway toward this station.
    pub inbound_empty: usize,
    /// Occupied vehicles already underway toward this station.
    pub inbound_full: usize,
}

/// A neighbor as seen by the issuing station: its snapshot plus the two
/// directed distances between them.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborCandidate {
    pub snapshot: StationSnapshot,
    /// Driving distance issuer -> neighbor, the way an expelled vehicle goes.
    pub dist_from_issuer_m: f64,
    /// Driving distance neighbor -> issuer, the way a called vehicle comes.
    pub dist_to_issuer_m: f64,
}

/// Everything a station may legally consult for one decision. The simulator
/// only ever fills `candidates` with stations inside the issuer's horizon,
/// which is what keeps the protocol local.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodView {
    pub issuer: StationSnapshot,
    pub aisd_m: f64,
    pub candidates: Vec<NeighborCandidate>,
}

impl NeighborhoodView {
    /// Messages exchanged to build this view: one request plus one reply per
    /// polled neighbor.
    pub fn message_count(&self) -> u64 {
        2 * self.candidates.len() as u64
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ManagementError {
    #[error("{name} must be nonnegative and finite, got {value}")]
    BadWeight { name: &'static str, value: f64 },
    #[error("{name} must be positive and finite, got {value}")]
    BadPeriod { name: &'static str, value: f64 },
    #[error("adaptive horizon bounds must satisfy 0 <= min <= max, got [{min}, {max}]")]
    BadHorizonBounds { min: f64, max: f64 },
    #[error("adaptive step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("adaptive thresholds must satisfy lower < upper, got lower {lower}, upper {upper}")]
    BadQueueThresholds { lower: usize, upper: usize },
}

/// Hysteresis controller that widens the horizon under congestion and
/// narrows it again once queues stay short.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveParams {
    /// Widen when the worst station queue in the window reaches this.
    pub queue_upper: usize,
    /// Narrow when the worst station queue in the window stays below this.
    pub queue_lower: usize,
    /// Horizon change per adjustment, in AISD multiples.
    pub step: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// How often the controller looks at the window and decides.
    pub period_s: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            queue_upper: 10,
            queue_lower: 2,
            step: 0.5,
            h_min: 0.5,
            h_max: 2.0,
            period_s: 60.0,
        }
    }
}

impl AdaptiveParams {
    pub fn validate(&self) -> Result<(), ManagementError> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(ManagementError::BadStep(self.step));
        }
        if !(self.h_min >= 0.0) || !(self.h_max >= self.h_min) || !self.h_max.is_finite() {
            return Err(ManagementError::BadHorizonBounds {
                min: self.h_min,
                max: self.h_max,
            });
        }
        if self.queue_lower >= self.queue_upper {
            return Err(ManagementError::BadQueueThresholds {
                lower: self.queue_lower,
                upper: self.queue_upper,
            });
        }
        if !(self.period_s > 0.0) || !self.period_s.is_finite() {
            return Err(ManagementError::BadPeriod {
                name: "adaptive.period_s",
                value: self.period_s,
            });
        }
        Ok(())
    }
}

/// Tunable knobs of the management layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManagementParams {
    pub horizon: Horizon,
    /// Donor score: reward per standing empty at the donor.
    pub w_standing: f64,
    /// Score penalty per AISD of driving distance.
    pub w_dist: f64,
    /// Donor score: penalty per waiting group at the donor.
    pub w_queue: f64,
    /// Donor score: penalty per occupied vehicle already heading there.
    pub w_inbound: f64,
    /// Recipient score: reward per free berth at the target.
    pub w_berth: f64,
    /// A station calls once its queue reaches this length.
    pub call_queue_threshold: usize,
    /// Balancing only taps donors holding more standing empties than this.
    pub surplus_threshold: usize,
    /// Balancing only feeds stations holding fewer standing empties than this.
    pub deficit_threshold: usize,
    pub balance_period_s: f64,
    /// Cadence of the housekeeping tick (call retries, stuck-vehicle relief).
    pub tick_s: f64,
    pub adaptive: Option<AdaptiveParams>,
}

impl Default for ManagementParams {
    fn default() -> Self {
        Self {
            horizon: Horizon::Unlimited,
            w_standing: 1.0,
            w_dist: 1.0,
            w_queue: 1.0,
            w_inbound: 0.5,
            w_berth: 1.0,
            call_queue_threshold: 1,
            surplus_threshold: 4,
            deficit_threshold: 1,
            balance_period_s: 60.0,
            tick_s: 10.0,
            adaptive: None,
        }
    }
}

impl ManagementParams {
    pub fn validate(&self) -> Result<(), ManagementError> {
        for (name, value) in [
            ("w_standing", self.w_standing),
            ("w_dist", self.w_dist),
            ("w_queue", self.w_queue),
            ("w_inbound", self.w_inbound),
            ("w_berth", self.w_berth),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(ManagementError::BadWeight { name, value });
            }
        }
        for (name, value) in [
            ("balance_period_s", self.balance_period_s),
            ("tick_s", self.tick_s),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ManagementError::BadPeriod { name, value });
            }
        }
        if let Some(a) = &self.adaptive {
            a.validate()?;
        }
        Ok(())
    }
}

/// How attractive a neighbor is as a source of one empty vehicle. `dist_m`
/// is the distance the vehicle would drive, candidate to issuer.
pub fn score_donor(c: &StationSnapshot, dist_m: f64, aisd_m: f64, p: &ManagementParams) -> f64 {
    p.w_standing * c.standing_empty as f64
        - p.w_dist * (dist_m / aisd_m)
        - p.w_queue * c.queue_len as f64
        - p.w_inbound * c.inbound_full as f64
}

/// How attractive a neighbor is as a sink for one expelled vehicle. `dist_m`
/// is issuer to candidate, the distance the vehicle would drive.
pub fn score_recipient(c: &StationSnapshot, dist_m: f64, aisd_m: f64, p: &ManagementParams) -> f64 {
    p.w_berth * c.free_berths as f64
        - p.w_dist * (dist_m / aisd_m)
        - p.w_standing * c.standing_empty as f64
}

/// Whether a station should request an empty vehicle at all: passengers are
/// waiting, nothing is standing by, and no empty is already on its way to
/// cover the queue.
pub fn wants_call(own: &StationSnapshot, p: &ManagementParams) -> bool {
    own.queue_len >= p.call_queue_threshold
        && own.standing_empty == 0
        && own.inbound_empty < own.queue_len
}

/// Whether a balancing pass should top this station up: even counting help
/// already underway it sits below the deficit threshold. No queue needs to
/// exist yet; balancing pre-positions vehicles ahead of demand.
pub fn wants_balance(own: &StationSnapshot, p: &ManagementParams) -> bool {
    own.standing_empty + own.inbound_empty < p.deficit_threshold
}

fn best_by<F: Fn(&NeighborCandidate) -> f64>(
    candidates: impl Iterator<Item = usize>,
    view: &NeighborhoodView,
    travel_dist: impl Fn(&NeighborCandidate) -> f64,
    score: F,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64, StationId)> = None;
    for i in candidates {
        let c = &view.candidates[i];
        let s = score(c);
        let d = travel_dist(c);
        let id = c.snapshot.station;
        // Ties break toward the shorter trip, then the lower station id.
        let better = match best {
            None => true,
            Some((_, bs, bd, bid)) => {
                s > bs || (s == bs && (d < bd || (d == bd && id < bid)))
            }
        };
        if better {
            best = Some((i, s, d, id));
        }
    }
    best.map(|(i, s, _, _)| (i, s))
}

/// Picks the donor for a call: the best-scoring neighbor that actually has a
/// standing empty. Returns `None` when no neighbor has one, however good or
/// bad the scores look; a queue-length-zero donor at distance one AISD
/// scores exactly 0 and is still dispatched from.
pub fn choose_call_donor(view: &NeighborhoodView, p: &ManagementParams) -> Option<StationId> {
    best_by(
        (0..view.candidates.len()).filter(|&i| view.candidates[i].snapshot.standing_empty > 0),
        view,
        |c| c.dist_to_issuer_m,
        |c| score_donor(&c.snapshot, c.dist_to_issuer_m, view.aisd_m, p),
    )
    .map(|(i, _)| view.candidates[i].snapshot.station)
}

/// Picks where an expelled vehicle goes: the best-scoring neighbor with a
/// free berth if any scores positive, otherwise the nearest neighbor with a
/// free berth. `None` when every neighbor's apron is full too.
pub fn choose_expel_target(view: &NeighborhoodView, p: &ManagementParams) -> Option<StationId> {
    let with_berth = || {
        (0..view.candidates.len()).filter(|&i| view.candidates[i].snapshot.free_berths > 0)
    };
    let best = best_by(
        with_berth(),
        view,
        |c| c.dist_from_issuer_m,
        |c| score_recipient(&c.snapshot, c.dist_from_issuer_m, view.aisd_m, p),
    )?;
    if best.1 > 0.0 {
        return Some(view.candidates[best.0].snapshot.station);
    }
    // All scores nonpositive: dump the vehicle at the nearest open apron.
    best_by(
        with_berth(),
        view,
        |c| c.dist_from_issuer_m,
        |c| -c.dist_from_issuer_m,
    )
    .map(|(i, _)| view.candidates[i].snapshot.station)
}

/// Last-resort expel for a station whose holding lane is occupied while
/// every neighbor reports a full apron: push the empty to the nearest
/// neighbor anyway. It may queue off-berth there, but the berth freed here
/// admits the waiting arrival, and the displaced pressure hops from station
/// to station until it meets an open berth. Without this rule a saturated
/// neighborhood can pin passengers inside an arrived vehicle forever.
pub fn choose_forced_expel_target(view: &NeighborhoodView) -> Option<StationId> {
    best_by(
        0..view.candidates.len(),
        view,
        |c| c.dist_from_issuer_m,
        |c| -c.dist_from_issuer_m,
    )
    .map(|(i, _)| view.candidates[i].snapshot.station)
}

/// Picks a donor for one balancing transfer, skipping donors already tapped
/// in this pass. Only neighbors holding a genuine surplus qualify.
pub fn choose_balance_donor(
    view: &NeighborhoodView,
    p: &ManagementParams,
    already_tapped: &[StationId],
) -> Option<StationId> {
    best_by(
        (0..view.candidates.len()).filter(|&i| {
            let c = &view.candidates[i];
            c.snapshot.standing_empty > p.surplus_threshold
                && !already_tapped.contains(&c.snapshot.station)
        }),
        view,
        |c| c.dist_to_issuer_m,
        |c| score_donor(&c.snapshot, c.dist_to_issuer_m, view.aisd_m, p),
    )
    .map(|(i, _)| view.candidates[i].snapshot.station)
}

/// One adjustment of the adaptive horizon given the worst queue length seen
/// since the previous adjustment. Between the two thresholds the horizon
/// stays put, which is the hysteresis band that stops it from oscillating.
pub fn adapt_horizon(window_max_queue: usize, current_h: f64, p: &AdaptiveParams) -> f64 {
    if window_max_queue >= p.queue_upper {
        (current_h + p.step).min(p.h_max)
    } else if window_max_queue < p.queue_lower {
        (current_h - p.step).max(p.h_min)
    } else {
        current_h
    }
}

/// Tracks the worst observed queue between adjustments.
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveController {
    pub params: AdaptiveParams,
    window_max_queue: usize,
}

impl AdaptiveController {
    pub fn new(params: AdaptiveParams) -> Self {
        Self {
            params,
            window_max_queue: 0,
        }
    }

    pub fn observe_queue(&mut self, len: usize) {
        self.window_max_queue = self.window_max_queue.max(len);
    }

    /// Closes the window and returns the horizon to use next.
    pub fn adjust(&mut self, current_h: f64) -> f64 {
        let h = adapt_horizon(self.window_max_queue, current_h, &self.params);
        self.window_max_queue = 0;
        h
    }
}

/// Why an empty vehicle was sent somewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DispatchReason {
    /// Pulled in by a station with waiting passengers.
    Call,
    /// Pushed out by a station with no free berth for an arriving vehicle.
    Expel,
    /// Moved by the periodic balancing pass.
    Balance,
}

impl DispatchReason {
    pub fn label(&self) -> &'static str {
        match self {
            DispatchReason::Call => "call",
            DispatchReason::Expel => "expel",
            DispatchReason::Balance => "balance",
        }
    }
}

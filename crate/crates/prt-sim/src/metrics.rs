//! Run statistics.
//!
//! Waiting time runs from order creation to the start of boarding. Queue
//! lengths are integrated over time, so the average is a true time-weighted
//! mean and not a sample average; the maximum additionally counts spikes of
//! zero duration. The rest time measures how long after the heavy demand
//! window the system still needs to board everyone who showed up during it.

use thiserror::Error;

use crate::network::{Horizon, StationId};

/// Compensated accumulator. Waiting-time sums over millions of entries must
/// not drift, and plain f64 addition does.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("order at station {station} would board {wait_s} s before being created")]
    NegativeWait { station: StationId, wait_s: f64 },
    #[error("queue at station {station} observed at {to_s} s after {from_s} s")]
    TimeRegression {
        station: StationId,
        from_s: f64,
        to_s: f64,
    },
    #[error("scope references station #{0} outside the network")]
    UnknownStation(usize),
}

/// Time-weighted queue statistics for one station.
#[derive(Clone, Debug, Default)]
struct QueueTracker {
    last_t_s: f64,
    last_len: usize,
    integral: KahanSum,
    max_len: usize,
}

impl QueueTracker {
    fn observe(&mut self, station: StationId, t_s: f64, len: usize) -> Result<(), MetricsError> {
        if t_s < self.last_t_s {
            return Err(MetricsError::TimeRegression {
                station,
                from_s: self.last_t_s,
                to_s: t_s,
            });
        }
        self.integral.add(self.last_len as f64 * (t_s - self.last_t_s));
        self.last_t_s = t_s;
        self.last_len = len;
        // Even a zero-duration spike counts toward the maximum.
        self.max_len = self.max_len.max(len);
        Ok(())
    }

    /// Integral over [0, t_end] without mutating the tracker.
    fn closed_integral(&self, t_end_s: f64) -> f64 {
        let mut total = self.integral;
        total.add(self.last_len as f64 * (t_end_s - self.last_t_s));
        total.value()
    }
}

#[derive(Clone, Debug, Default)]
struct PerStation {
    wait_sum: KahanSum,
    wait_count: u64,
    queue: QueueTracker,
    generated: u64,
    served: u64,
    /// Orders created before the heavy-phase deadline that have not boarded.
    pre_deadline_outstanding: u64,
    /// Last instant the outstanding counter dropped to zero.
    last_drained_s: Option<f64>,
    calls: u64,
    expels: u64,
    balances: u64,
    messages: u64,
}

/// Which slice of the network a report covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Network,
    Station(StationId),
}

/// Rest time: minutes past the heavy-phase end until the last group that
/// appeared during the heavy phase has boarded. `Censored` means the run
/// ended first and the true value lies beyond the drain window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RestOutcome {
    Minutes(f64),
    Censored,
}

/// Run identity echoed into every report row.
#[derive(Clone, Debug)]
pub struct RunMeta {
    pub scenario: String,
    pub horizon: Horizon,
    pub seed: u64,
    pub fleet: usize,
    pub duration_s: f64,
    pub station_names: Vec<String>,
}

/// Collects everything during a run; reports are cut from it afterwards,
/// once per requested scope.
#[derive(Clone, Debug)]
pub struct MetricsAccumulator {
    stations: Vec<PerStation>,
    network_wait_sum: KahanSum,
    network_wait_count: u64,
    heavy_end_s: f64,
    t_end_s: f64,
}

impl MetricsAccumulator {
    pub fn new(n_stations: usize, heavy_end_s: f64, t_end_s: f64) -> Self {
        Self {
            stations: vec![PerStation::default(); n_stations],
            network_wait_sum: KahanSum::default(),
            network_wait_count: 0,
            heavy_end_s,
            t_end_s,
        }
    }

    /// An order entered the system at its origin station.
    pub fn register_order(&mut self, origin: StationId, created_at_s: f64) {
        let st = &mut self.stations[origin.0];
        st.generated += 1;
        if created_at_s < self.heavy_end_s {
            st.pre_deadline_outstanding += 1;
        }
    }

    /// An order started boarding; its wait ends here.
    pub fn record_wait(
        &mut self,
        origin: StationId,
        created_at_s: f64,
        boarding_start_s: f64,
    ) -> Result<(), MetricsError> {
        let wait_s = boarding_start_s - created_at_s;
        if wait_s < 0.0 {
            return Err(MetricsError::NegativeWait {
                station: origin,
                wait_s,
            });
        }
        let st = &mut self.stations[origin.0];
        st.wait_sum.add(wait_s);
        st.wait_count += 1;
        self.network_wait_sum.add(wait_s);
        self.network_wait_count += 1;
        if created_at_s < self.heavy_end_s {
            st.pre_deadline_outstanding -= 1;
            if st.pre_deadline_outstanding == 0 {
                st.last_drained_s = Some(boarding_start_s);
            }
        }
        Ok(())
    }

    pub fn observe_queue(
        &mut self,
        station: StationId,
        t_s: f64,
        len: usize,
    ) -> Result<(), MetricsError> {
        self.stations[station.0].queue.observe(station, t_s, len)
    }

    /// An order reached its destination; attributed to its origin.
    pub fn note_served(&mut self, origin: StationId) {
        self.stations[origin.0].served += 1;
    }

    pub fn note_dispatch(&mut self, issuer: StationId, reason: crate::management::DispatchReason) {
        use crate::management::DispatchReason::*;
        let st = &mut self.stations[issuer.0];
        match reason {
            Call => st.calls += 1,
            Expel => st.expels += 1,
            Balance => st.balances += 1,
        }
    }

    pub fn note_messages(&mut self, issuer: StationId, count: u64) {
        self.stations[issuer.0].messages += count;
    }

    pub fn generated(&self) -> u64 {
        self.stations.iter().map(|s| s.generated).sum()
    }

    pub fn served(&self) -> u64 {
        self.stations.iter().map(|s| s.served).sum()
    }

    fn rest(&self, scope: Scope) -> RestOutcome {
        let (outstanding, last_drained) = match scope {
            Scope::Station(s) => (
                self.stations[s.0].pre_deadline_outstanding,
                self.stations[s.0].last_drained_s,
            ),
            Scope::Network => (
                self.stations.iter().map(|s| s.pre_deadline_outstanding).sum(),
                // The network drains when its slowest station does.
                self.stations
                    .iter()
                    .filter_map(|s| s.last_drained_s)
                    .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t)))),
            ),
        };
        if outstanding > 0 {
            return RestOutcome::Censored;
        }
        match last_drained {
            // Drained during the heavy phase (or nothing to drain): no rest.
            None => RestOutcome::Minutes(0.0),
            Some(t) => RestOutcome::Minutes(((t - self.heavy_end_s) / 60.0).max(0.0)),
        }
    }

    pub fn report(&self, scope: Scope, meta: &RunMeta) -> Result<MetricsReport, MetricsError> {
        if let Scope::Station(s) = scope {
            if s.0 >= self.stations.len() {
                return Err(MetricsError::UnknownStation(s.0));
            }
        }
        let pick = |f: &dyn Fn(&PerStation) -> u64| -> u64 {
            match scope {
                Scope::Station(s) => f(&self.stations[s.0]),
                Scope::Network => self.stations.iter().map(|s| f(s)).sum(),
            }
        };
        let (wait_sum, wait_count) = match scope {
            Scope::Station(s) => (
                self.stations[s.0].wait_sum.value(),
                self.stations[s.0].wait_count,
            ),
            Scope::Network => (self.network_wait_sum.value(), self.network_wait_count),
        };
        let awt_s = if wait_count == 0 {
            0.0
        } else {
            wait_sum / wait_count as f64
        };
        let aql_groups = match scope {
            Scope::Station(s) => self.stations[s.0].queue.closed_integral(self.t_end_s) / self.t_end_s,
            Scope::Network => {
                let total: f64 = self
                    .stations
                    .iter()
                    .map(|s| s.queue.closed_integral(self.t_end_s))
                    .sum();
                total / (self.stations.len() as f64 * self.t_end_s)
            }
        };
        let maxql_groups = match scope {
            Scope::Station(s) => self.stations[s.0].queue.max_len,
            Scope::Network => self.stations.iter().map(|s| s.queue.max_len).max().unwrap_or(0),
        };
        let scope_label = match scope {
            Scope::Network => "network".to_string(),
            Scope::Station(s) => meta.station_names[s.0].clone(),
        };
        Ok(MetricsReport {
            scenario: meta.scenario.clone(),
            horizon: meta.horizon,
            seed: meta.seed,
            scope: scope_label,
            awt_s,
            aql_groups,
            maxql_groups,
            rest: self.rest(scope),
            served: pick(&|s| s.served),
            generated: pick(&|s| s.generated),
            dispatch_calls: pick(&|s| s.calls),
            dispatch_expels: pick(&|s| s.expels),
            dispatch_balance: pick(&|s| s.balances),
            messages: pick(&|s| s.messages),
            fleet: meta.fleet,
            duration_s: meta.duration_s,
        })
    }
}

/// One row of results: a (scenario, horizon, seed, scope) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    pub horizon: Horizon,
    pub seed: u64,
    pub scope: String,
    pub awt_s: f64,
    pub aql_groups: f64,
    pub maxql_groups: usize,
    pub rest: RestOutcome,
    pub served: u64,
    pub generated: u64,
    pub dispatch_calls: u64,
    pub dispatch_expels: u64,
    pub dispatch_balance: u64,
    pub messages: u64,
    pub fleet: usize,
    pub duration_s: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "scenario,horizon,seed,scope,awt_s,aql_groups,\
maxql_groups,rest_min,rest_censored,served,generated,dispatch_calls,dispatch_expels,\
dispatch_balance,messages";

    pub fn csv_row(&self) -> String {
        let (rest_min, rest_censored) = match self.rest {
            RestOutcome::Minutes(m) => (format!("{m:.2}"), 0),
            RestOutcome::Censored => (String::new(), 1),
        };
        format!(
            "{},{},{},{},{:.3},{:.4},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.horizon,
            self.seed,
            self.scope,
            self.awt_s,
            self.aql_groups,
            self.maxql_groups,
            rest_min,
            rest_censored,
            self.served,
            self.generated,
            self.dispatch_calls,
            self.dispatch_expels,
            self.dispatch_balance,
            self.messages,
        )
    }
}

//! Deterministic discrete-event core.
//!
//! A single clock, a binary heap of timestamped events, and handlers that
//! move vehicles between berths, links, and an off-berth holding area. Ties
//! at one instant resolve by a fixed event-kind order and then by insertion
//! sequence, so a run is a pure function of its scenario and seed. All
//! management hooks (calls on arrival, tick retries, balancing) funnel
//! through [`Sim::dispatch_empty`], which also enforces that every decision
//! stayed inside the issuer's horizon.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::demand::{generate_orders, DemandError, OrderId, TransitOrder};
use crate::management::{
    choose_balance_donor, choose_call_donor, choose_expel_target, choose_forced_expel_target,
    wants_balance, wants_call,
    AdaptiveController, DispatchReason, ManagementError, ManagementParams, NeighborCandidate,
    NeighborhoodView, StationSnapshot,
};
use crate::metrics::{MetricsAccumulator, MetricsError, MetricsReport, RunMeta, Scope};
use crate::network::{
    horizon_table, DistanceMatrix, Horizon, HorizonTable, Network, NetworkError, Router, StationId,
};
use crate::scenario::Scenario;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VehicleId(pub usize);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Management(#[from] ManagementError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("vehicle {0} is not idle at a berth")]
    VehicleNotIdle(VehicleId),
    #[error("empty-vehicle dispatch must leave the station, `{0}` to itself requested")]
    SameStation(String),
    #[error("fleet of {fleet} exceeds the {berths} berths available")]
    FleetTooLarge { fleet: usize, berths: usize },
    #[error("initial placement overflows the berths at `{0}`")]
    PlacementOverflow(String),
    #[error("deadlock: {queued} orders can never be served by an empty fleet")]
    Deadlock { queued: usize },
    #[error("adaptive management needs a finite starting horizon")]
    AdaptiveNeedsFiniteHorizon,
}

#[derive(Clone, Debug, PartialEq)]
pub enum VehicleState {
    IdleAtBerth(StationId),
    Boarding {
        station: StationId,
        order: TransitOrder,
    },
    Alighting {
        station: StationId,
        order: TransitOrder,
    },
    EnRoute {
        to: StationId,
        arrive_s: f64,
        /// `Some` when carrying passengers, `None` on an empty run.
        order: Option<TransitOrder>,
    },
    /// Arrived but every berth is taken; waits off-berth in FIFO order.
    Holding {
        station: StationId,
        order: Option<TransitOrder>,
    },
}

#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: VehicleId,
    pub state: VehicleState,
}

#[derive(Clone, Debug)]
struct StationOps {
    berth_count: usize,
    occupied_berths: usize,
    queue: VecDeque<TransitOrder>,
    /// Empty vehicles idling on berths; ordered so "first" is well defined.
    idle: BTreeSet<VehicleId>,
    holding: VecDeque<VehicleId>,
    inbound_empty: usize,
    inbound_full: usize,
}

#[derive(Clone, Debug)]
enum EventKind {
    VehicleArrival(VehicleId),
    AlightComplete(VehicleId),
    BoardingComplete(VehicleId),
    OrderArrival(TransitOrder),
    ManagementTick,
    EndOfRun,
}

impl EventKind {
    /// Tie rank at one instant: vehicles land and finish before new orders
    /// are looked at, housekeeping runs after the instant's traffic, and the
    /// end of the run is always last.
    fn rank(&self) -> u8 {
        match self {
            EventKind::VehicleArrival(_) => 0,
            EventKind::AlightComplete(_) => 1,
            EventKind::BoardingComplete(_) => 2,
            EventKind::OrderArrival(_) => 3,
            EventKind::ManagementTick => 4,
            EventKind::EndOfRun => 5,
        }
    }
}

#[derive(Debug)]
struct Event {
    time_s: f64,
    rank: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time_s
            .total_cmp(&other.time_s)
            .then(self.rank.cmp(&other.rank))
            .then(self.seq.cmp(&other.seq))
    }
}

/// An empty-vehicle relocation, kept for the dispatch log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispatchRecord {
    pub time_s: f64,
    pub vehicle: VehicleId,
    pub from: StationId,
    pub to: StationId,
    pub reason: DispatchReason,
}

/// One line of the event trace, for debugging and the hand-trace example.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub time_s: f64,
    pub event: &'static str,
    pub station: Option<StationId>,
    pub vehicle: Option<VehicleId>,
    pub order: Option<OrderId>,
}

/// Instantaneous queue length right after a change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueueSample {
    pub time_s: f64,
    pub station: StationId,
    pub len: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub collect_trace: bool,
    pub collect_queue_log: bool,
}

/// Everything a finished run hands back.
#[derive(Clone, Debug)]
pub struct RunOutput {
    metrics: MetricsAccumulator,
    meta: RunMeta,
    pub dispatches: Vec<DispatchRecord>,
    pub trace: Option<Vec<TraceRecord>>,
    pub queue_log: Option<Vec<QueueSample>>,
    /// Every horizon change the adaptive controller made: (time, multiple).
    /// Empty when adaptivity is off or never triggered.
    pub horizon_log: Vec<(f64, f64)>,
    /// Where the adaptive controller left the horizon; equals the configured
    /// horizon when adaptivity is off.
    pub final_horizon: Horizon,
}

impl RunOutput {
    pub fn report(&self, scope: Scope) -> Result<MetricsReport, MetricsError> {
        self.metrics.report(scope, &self.meta)
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, EngineError> {
    let mut sim = Sim::new(scenario, opts)?;
    sim.run_to_end()?;
    Ok(sim.into_output())
}

pub struct Sim {
    net: Network,
    dm: DistanceMatrix,
    router: Router,
    params: ManagementParams,
    htable: HorizonTable,
    speed_mps: f64,
    boarding_s: f64,
    alighting_s: f64,
    t_end_s: f64,
    clock_s: f64,
    events: BinaryHeap<Reverse<Event>>,
    seq: u64,
    stations: Vec<StationOps>,
    vehicles: Vec<Vehicle>,
    metrics: MetricsAccumulator,
    dispatches: Vec<DispatchRecord>,
    trace: Option<Vec<TraceRecord>>,
    queue_log: Option<Vec<QueueSample>>,
    adaptive: Option<AdaptiveController>,
    tick_no: u64,
    balance_no: u64,
    adapt_no: u64,
    horizon_log: Vec<(f64, f64)>,
    meta: RunMeta,
    ended: bool,
}

impl Sim {
    pub fn new(scenario: &Scenario, opts: &RunOptions) -> Result<Self, EngineError> {
        let net = scenario.network.clone();
        let n = net.station_count();
        let params = scenario.management;
        params.validate()?;
        if params.adaptive.is_some() && params.horizon == Horizon::Unlimited {
            return Err(EngineError::AdaptiveNeedsFiniteHorizon);
        }
        let dm = scenario.distances.clone();
        let htable = horizon_table(&dm, params.horizon)?;
        let t_end_s = scenario.run.heavy_phase_s + scenario.run.drain_window_s;
        let orders = generate_orders(
            &scenario.demand.phases,
            &scenario.demand.scripted,
            n,
            scenario.run.seed,
        )?;
        if scenario.fleet.size == 0 && !orders.is_empty() {
            return Err(EngineError::Deadlock {
                queued: orders.len(),
            });
        }
        let total_berths: usize = net.stations().map(|(_, s)| s.berth_count).sum();
        if scenario.fleet.size > total_berths {
            return Err(EngineError::FleetTooLarge {
                fleet: scenario.fleet.size,
                berths: total_berths,
            });
        }
        let mut stations: Vec<StationOps> = net
            .stations()
            .map(|(_, s)| StationOps {
                berth_count: s.berth_count,
                occupied_berths: 0,
                queue: VecDeque::new(),
                idle: BTreeSet::new(),
                holding: VecDeque::new(),
                inbound_empty: 0,
                inbound_full: 0,
            })
            .collect();
        let mut vehicles = Vec::with_capacity(scenario.fleet.size);
        for v in 0..scenario.fleet.size {
            let home = match &scenario.fleet.placement {
                Some(list) => {
                    let s = list[v];
                    if stations[s.0].occupied_berths >= stations[s.0].berth_count {
                        return Err(EngineError::PlacementOverflow(
                            net.station(s).name.clone(),
                        ));
                    }
                    s
                }
                // Round-robin, skipping stations whose berths filled up.
                None => {
                    let mut s = v % n;
                    let mut tried = 0;
                    while stations[s].occupied_berths >= stations[s].berth_count {
                        s = (s + 1) % n;
                        tried += 1;
                        debug_assert!(tried <= n, "fleet fits: checked above");
                    }
                    StationId(s)
                }
            };
            stations[home.0].occupied_berths += 1;
            stations[home.0].idle.insert(VehicleId(v));
            vehicles.push(Vehicle {
                id: VehicleId(v),
                state: VehicleState::IdleAtBerth(home),
            });
        }
        let meta = RunMeta {
            scenario: scenario.name.clone(),
            horizon: params.horizon,
            seed: scenario.run.seed,
            fleet: scenario.fleet.size,
            duration_s: t_end_s,
            station_names: net.stations().map(|(_, s)| s.name.clone()).collect(),
        };
        let mut sim = Self {
            net,
            dm,
            router: scenario.router.clone(),
            params,
            htable,
            speed_mps: scenario.fleet.speed_mps,
            boarding_s: scenario.fleet.boarding_s,
            alighting_s: scenario.fleet.alighting_s,
            t_end_s,
            clock_s: 0.0,
            events: BinaryHeap::new(),
            seq: 0,
            stations,
            vehicles,
            metrics: MetricsAccumulator::new(n, scenario.run.heavy_phase_s, t_end_s),
            dispatches: Vec::new(),
            trace: opts.collect_trace.then(Vec::new),
            queue_log: opts.collect_queue_log.then(Vec::new),
            adaptive: params.adaptive.map(AdaptiveController::new),
            tick_no: 1,
            balance_no: 0,
            adapt_no: 0,
            horizon_log: Vec::new(),
            meta,
            ended: false,
        };
        for order in orders {
            sim.schedule(order.created_at_s, EventKind::OrderArrival(order));
        }
        let first_tick = sim.params.tick_s;
        if first_tick <= t_end_s {
            sim.schedule(first_tick, EventKind::ManagementTick);
        }
        sim.schedule(t_end_s, EventKind::EndOfRun);
        Ok(sim)
    }

    pub fn clock_s(&self) -> f64 {
        self.clock_s
    }

    pub fn snapshot(&self, s: StationId) -> StationSnapshot {
        let st = &self.stations[s.0];
        StationSnapshot {
            station: s,
            standing_empty: st.idle.len(),
            free_berths: st.berth_count - st.occupied_berths,
            queue_len: st.queue.len(),
            inbound_empty: st.inbound_empty,
            inbound_full: st.inbound_full,
        }
    }

    fn schedule(&mut self, time_s: f64, kind: EventKind) {
        debug_assert!(time_s.is_finite() && time_s >= self.clock_s);
        let ev = Event {
            time_s,
            rank: kind.rank(),
            seq: self.seq,
            kind,
        };
        self.seq += 1;
        self.events.push(Reverse(ev));
    }

    pub fn run_to_end(&mut self) -> Result<(), EngineError> {
        while let Some(Reverse(ev)) = self.events.pop() {
            debug_assert!(ev.time_s >= self.clock_s, "event queue went backwards");
            self.clock_s = ev.time_s;
            self.trace_event(&ev);
            match ev.kind {
                EventKind::OrderArrival(order) => self.handle_order_arrival(order)?,
                EventKind::VehicleArrival(v) => self.handle_vehicle_arrival(v)?,
                EventKind::BoardingComplete(v) => self.handle_boarding_complete(v)?,
                EventKind::AlightComplete(v) => self.handle_alight_complete(v)?,
                EventKind::ManagementTick => self.handle_tick()?,
                EventKind::EndOfRun => {
                    self.audit();
                    self.ended = true;
                }
            }
            if self.ended {
                return Ok(());
            }
        }
        // The end-of-run event is always scheduled, so an empty heap means
        // the simulation lost it; treat as a wedged run.
        Err(EngineError::Deadlock {
            queued: self.stations.iter().map(|s| s.queue.len()).sum(),
        })
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput {
            metrics: self.metrics,
            meta: self.meta,
            dispatches: self.dispatches,
            trace: self.trace,
            queue_log: self.queue_log,
            horizon_log: self.horizon_log,
            final_horizon: self.htable.horizon(),
        }
    }

    fn trace_event(&mut self, ev: &Event) {
        let Some(trace) = &mut self.trace else { return };
        let (label, station, vehicle, order) = match &ev.kind {
            EventKind::OrderArrival(o) => ("order", Some(o.origin), None, Some(o.id)),
            EventKind::VehicleArrival(v) => {
                let to = match &self.vehicles[v.0].state {
                    VehicleState::EnRoute { to, .. } => Some(*to),
                    _ => None,
                };
                ("vehicle_arrival", to, Some(*v), None)
            }
            EventKind::BoardingComplete(v) => ("boarding_done", None, Some(*v), None),
            EventKind::AlightComplete(v) => ("alight_done", None, Some(*v), None),
            EventKind::ManagementTick => ("tick", None, None, None),
            EventKind::EndOfRun => ("end", None, None, None),
        };
        trace.push(TraceRecord {
            time_s: ev.time_s,
            event: label,
            station,
            vehicle,
            order,
        });
    }

    fn queue_changed(&mut self, s: StationId) -> Result<(), EngineError> {
        let len = self.stations[s.0].queue.len();
        self.metrics.observe_queue(s, self.clock_s, len)?;
        if let Some(ctrl) = &mut self.adaptive {
            ctrl.observe_queue(len);
        }
        if let Some(log) = &mut self.queue_log {
            log.push(QueueSample {
                time_s: self.clock_s,
                station: s,
                len,
            });
        }
        Ok(())
    }

    /// Polls every neighbor inside the horizon; the message cost of doing so
    /// is booked to the issuer.
    fn neighborhood_view(&mut self, issuer: StationId) -> NeighborhoodView {
        let candidates: Vec<NeighborCandidate> = self
            .htable
            .neighbors(issuer)
            .iter()
            .map(|&peer| NeighborCandidate {
                snapshot: self.snapshot(peer),
                dist_from_issuer_m: self.dm.distance_m(issuer, peer),
                dist_to_issuer_m: self.dm.distance_m(peer, issuer),
            })
            .collect();
        let view = NeighborhoodView {
            issuer: self.snapshot(issuer),
            aisd_m: self.dm.aisd_m(),
            candidates,
        };
        self.metrics.note_messages(issuer, view.message_count());
        view
    }

    fn handle_order_arrival(&mut self, order: TransitOrder) -> Result<(), EngineError> {
        let s = order.origin;
        self.metrics.register_order(s, order.created_at_s);
        let st = &mut self.stations[s.0];
        if st.queue.is_empty() && !st.idle.is_empty() {
            // Immediate boarding never touches the queue, so no spike shows
            // up in the queue statistics.
            let v = *st.idle.iter().next().unwrap();
            st.idle.remove(&v);
            self.start_boarding(s, v, order)?;
        } else {
            st.queue.push_back(order);
            self.queue_changed(s)?;
            self.serve_queue(s)?;
            if !self.stations[s.0].queue.is_empty() {
                self.try_call(s)?;
            }
        }
        Ok(())
    }

    /// Pairs waiting orders with idle vehicles until one side runs out.
    fn serve_queue(&mut self, s: StationId) -> Result<(), EngineError> {
        loop {
            let st = &mut self.stations[s.0];
            let Some(&v) = st.idle.iter().next() else { return Ok(()) };
            let Some(order) = st.queue.pop_front() else { return Ok(()) };
            st.idle.remove(&v);
            self.queue_changed(s)?;
            self.start_boarding(s, v, order)?;
        }
    }

    /// The vehicle must already hold a berth at `s`.
    fn start_boarding(
        &mut self,
        s: StationId,
        v: VehicleId,
        order: TransitOrder,
    ) -> Result<(), EngineError> {
        self.metrics.record_wait(s, order.created_at_s, self.clock_s)?;
        let done = self.clock_s + self.boarding_s;
        self.vehicles[v.0].state = VehicleState::Boarding { station: s, order };
        self.schedule(done, EventKind::BoardingComplete(v));
        Ok(())
    }

    fn handle_boarding_complete(&mut self, v: VehicleId) -> Result<(), EngineError> {
        let (s, order) = match std::mem::replace(
            &mut self.vehicles[v.0].state,
            VehicleState::IdleAtBerth(StationId(0)),
        ) {
            VehicleState::Boarding { station, order } => (station, order),
            other => unreachable!("boarding completion in state {other:?}"),
        };
        let route = self.router.route(&self.net, s, order.destination)?;
        let arrive_s = self.clock_s + route.length_m / self.speed_mps;
        let dest = order.destination;
        self.vehicles[v.0].state = VehicleState::EnRoute {
            to: dest,
            arrive_s,
            order: Some(order),
        };
        self.stations[s.0].occupied_berths -= 1;
        self.stations[dest.0].inbound_full += 1;
        self.schedule(arrive_s, EventKind::VehicleArrival(v));
        self.admit_from_holding(s)?;
        Ok(())
    }

    fn handle_vehicle_arrival(&mut self, v: VehicleId) -> Result<(), EngineError> {
        let (to, order) = match std::mem::replace(
            &mut self.vehicles[v.0].state,
            VehicleState::IdleAtBerth(StationId(0)),
        ) {
            VehicleState::EnRoute { to, order, .. } => (to, order),
            other => unreachable!("arrival in state {other:?}"),
        };
        let st = &mut self.stations[to.0];
        if order.is_some() {
            st.inbound_full -= 1;
        } else {
            st.inbound_empty -= 1;
        }
        if st.occupied_berths < st.berth_count {
            self.berth(v, to, order)?;
        } else {
            st.holding.push_back(v);
            self.vehicles[v.0].state = VehicleState::Holding { station: to, order };
            // A jammed apron asks the neighborhood for somewhere to push an
            // idle empty; if that works the berth it frees admits us now.
            self.try_expel(to)?;
        }
        Ok(())
    }

    /// Seats an arriving vehicle on a free berth and decides what it does.
    fn berth(
        &mut self,
        v: VehicleId,
        s: StationId,
        order: Option<TransitOrder>,
    ) -> Result<(), EngineError> {
        let st = &mut self.stations[s.0];
        debug_assert!(st.occupied_berths < st.berth_count);
        st.occupied_berths += 1;
        match order {
            Some(order) => {
                self.vehicles[v.0].state = VehicleState::Alighting { station: s, order };
                self.schedule(self.clock_s + self.alighting_s, EventKind::AlightComplete(v));
            }
            None => {
                if let Some(order) = st.queue.pop_front() {
                    self.queue_changed(s)?;
                    self.start_boarding(s, v, order)?;
                } else {
                    self.vehicles[v.0].state = VehicleState::IdleAtBerth(s);
                    self.stations[s.0].idle.insert(v);
                }
            }
        }
        Ok(())
    }

    fn handle_alight_complete(&mut self, v: VehicleId) -> Result<(), EngineError> {
        let (s, order) = match std::mem::replace(
            &mut self.vehicles[v.0].state,
            VehicleState::IdleAtBerth(StationId(0)),
        ) {
            VehicleState::Alighting { station, order } => (station, order),
            other => unreachable!("alighting completion in state {other:?}"),
        };
        self.metrics.note_served(order.origin);
        if let Some(next) = self.stations[s.0].queue.pop_front() {
            self.queue_changed(s)?;
            self.start_boarding(s, v, next)?;
        } else {
            self.vehicles[v.0].state = VehicleState::IdleAtBerth(s);
            self.stations[s.0].idle.insert(v);
        }
        Ok(())
    }

    /// Admits holders in arrival order while berths are free.
    fn admit_from_holding(&mut self, s: StationId) -> Result<(), EngineError> {
        loop {
            let st = &mut self.stations[s.0];
            if st.occupied_berths >= st.berth_count {
                return Ok(());
            }
            let Some(v) = st.holding.pop_front() else { return Ok(()) };
            let order = match std::mem::replace(
                &mut self.vehicles[v.0].state,
                VehicleState::IdleAtBerth(StationId(0)),
            ) {
                VehicleState::Holding { order, .. } => order,
                other => unreachable!("holding admission in state {other:?}"),
            };
            self.berth(v, s, order)?;
        }
    }

    fn try_call(&mut self, s: StationId) -> Result<(), EngineError> {
        let own = self.snapshot(s);
        if !wants_call(&own, &self.params) {
            return Ok(());
        }
        let view = self.neighborhood_view(s);
        if let Some(donor) = choose_call_donor(&view, &self.params) {
            let v = *self.stations[donor.0].idle.iter().next().expect("donor snapshot had a standing empty");
            self.dispatch_empty(v, s, DispatchReason::Call)?;
        }
        Ok(())
    }

    fn try_expel(&mut self, s: StationId) -> Result<(), EngineError> {
        if self.stations[s.0].idle.is_empty() {
            // Nothing idle to push out; the apron clears when a boarding
            // vehicle departs.
            return Ok(());
        }
        let view = self.neighborhood_view(s);
        let target = choose_expel_target(&view, &self.params).or_else(|| {
            // A vehicle is stuck in the holding lane and every neighbor's
            // apron is full: force the empty toward the nearest neighbor so
            // the freed berth admits the holder. The displaced empty may keep
            // hopping, but it lands wherever a berth first opens.
            if self.stations[s.0].holding.is_empty() {
                None
            } else {
                choose_forced_expel_target(&view)
            }
        });
        if let Some(target) = target {
            let v = *self.stations[s.0].idle.iter().next().unwrap();
            self.dispatch_empty(v, target, DispatchReason::Expel)?;
        }
        Ok(())
    }

    fn balance_pass(&mut self) -> Result<(), EngineError> {
        let mut tapped: Vec<StationId> = Vec::new();
        for i in 0..self.stations.len() {
            let s = StationId(i);
            let own = self.snapshot(s);
            if !wants_balance(&own, &self.params) {
                continue;
            }
            let view = self.neighborhood_view(s);
            if let Some(donor) = choose_balance_donor(&view, &self.params, &tapped) {
                tapped.push(donor);
                let v = *self.stations[donor.0].idle.iter().next().expect("balance donor had a surplus");
                self.dispatch_empty(v, s, DispatchReason::Balance)?;
            }
        }
        Ok(())
    }

    fn handle_tick(&mut self) -> Result<(), EngineError> {
        self.audit();
        // Adapt first so this tick's decisions already use the new horizon.
        if let Some(ctrl) = &mut self.adaptive {
            let due_s = (self.adapt_no + 1) as f64 * ctrl.params.period_s;
            if self.clock_s >= due_s {
                self.adapt_no += 1;
                let current = match self.htable.horizon() {
                    Horizon::Limited(h) => h,
                    Horizon::Unlimited => unreachable!("checked at construction"),
                };
                let next = ctrl.adjust(current);
                if next != current {
                    self.htable = horizon_table(&self.dm, Horizon::Limited(next))?;
                    self.horizon_log.push((self.clock_s, next));
                }
            }
        }
        for i in 0..self.stations.len() {
            self.try_call(StationId(i))?;
        }
        for i in 0..self.stations.len() {
            if !self.stations[i].holding.is_empty() && !self.stations[i].idle.is_empty() {
                self.try_expel(StationId(i))?;
            }
        }
        let balance_due_s = (self.balance_no + 1) as f64 * self.params.balance_period_s;
        if self.clock_s >= balance_due_s {
            self.balance_no += 1;
            self.balance_pass()?;
        }
        self.tick_no += 1;
        let next_s = self.tick_no as f64 * self.params.tick_s;
        if next_s <= self.t_end_s {
            self.schedule(next_s, EventKind::ManagementTick);
        }
        Ok(())
    }

    /// Sends an idle empty from its berth to another station. Everything the
    /// management layer decides funnels through here, so this is where
    /// horizon locality is enforced.
    pub fn dispatch_empty(
        &mut self,
        v: VehicleId,
        to: StationId,
        reason: DispatchReason,
    ) -> Result<(), EngineError> {
        let from = match self.vehicles[v.0].state {
            VehicleState::IdleAtBerth(s) => s,
            _ => return Err(EngineError::VehicleNotIdle(v)),
        };
        if from == to {
            return Err(EngineError::SameStation(self.net.station(from).name.clone()));
        }
        // Calls and balancing are issued by the receiving station, expulsion
        // by the sending one. Either way the counterpart must be visible.
        let issuer = match reason {
            DispatchReason::Call | DispatchReason::Balance => to,
            DispatchReason::Expel => from,
        };
        let peer = if issuer == to { from } else { to };
        assert!(
            self.htable.contains(issuer, peer),
            "management decision escaped the horizon: {reason:?} {from} -> {to} at {}",
            self.clock_s
        );
        let route = self.router.route(&self.net, from, to)?;
        let arrive_s = self.clock_s + route.length_m / self.speed_mps;
        self.stations[from.0].idle.remove(&v);
        self.stations[from.0].occupied_berths -= 1;
        self.stations[to.0].inbound_empty += 1;
        self.vehicles[v.0].state = VehicleState::EnRoute {
            to,
            arrive_s,
            order: None,
        };
        self.schedule(arrive_s, EventKind::VehicleArrival(v));
        self.dispatches.push(DispatchRecord {
            time_s: self.clock_s,
            vehicle: v,
            from,
            to,
            reason,
        });
        self.metrics.note_dispatch(issuer, reason);
        self.admit_from_holding(from)?;
        Ok(())
    }

    /// Cross-checks every redundant counter against the vehicle states.
    /// Cheap enough to keep on at every tick in every build.
    fn audit(&self) {
        let n = self.stations.len();
        let mut occupied = vec![0usize; n];
        let mut idle = vec![0usize; n];
        let mut holding = vec![0usize; n];
        let mut inbound_empty = vec![0usize; n];
        let mut inbound_full = vec![0usize; n];
        let mut in_flight_orders = 0u64;
        for v in &self.vehicles {
            match &v.state {
                VehicleState::IdleAtBerth(s) => {
                    occupied[s.0] += 1;
                    idle[s.0] += 1;
                    assert!(
                        self.stations[s.0].idle.contains(&v.id),
                        "{} idle but not in the idle set of {s}",
                        v.id
                    );
                }
                VehicleState::Boarding { station, .. } => {
                    occupied[station.0] += 1;
                    in_flight_orders += 1;
                }
                VehicleState::Alighting { station, .. } => {
                    occupied[station.0] += 1;
                    in_flight_orders += 1;
                }
                VehicleState::EnRoute { to, order, .. } => {
                    if order.is_some() {
                        inbound_full[to.0] += 1;
                        in_flight_orders += 1;
                    } else {
                        inbound_empty[to.0] += 1;
                    }
                }
                VehicleState::Holding { station, order } => {
                    holding[station.0] += 1;
                    if order.is_some() {
                        in_flight_orders += 1;
                    }
                }
            }
        }
        let mut queued = 0u64;
        for (i, st) in self.stations.iter().enumerate() {
            let at = format!("station {i} at {} s", self.clock_s);
            assert_eq!(st.occupied_berths, occupied[i], "berth count drifted, {at}");
            assert!(st.occupied_berths <= st.berth_count, "berths overfull, {at}");
            assert_eq!(st.idle.len(), idle[i], "idle set drifted, {at}");
            assert_eq!(st.holding.len(), holding[i], "holding drifted, {at}");
            assert_eq!(st.inbound_empty, inbound_empty[i], "inbound empty drifted, {at}");
            assert_eq!(st.inbound_full, inbound_full[i], "inbound full drifted, {at}");
            let mut last = f64::NEG_INFINITY;
            for o in &st.queue {
                assert!(o.created_at_s >= last, "queue out of FIFO order, {at}");
                last = o.created_at_s;
            }
            queued += st.queue.len() as u64;
        }
        assert_eq!(
            self.metrics.generated(),
            self.metrics.served() + queued + in_flight_orders,
            "order conservation broken at {} s",
            self.clock_s
        );
    }
}

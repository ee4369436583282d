//! Track graph, shortest-path distances, and horizon neighborhoods.
//!
//! Stations are connected by one-way links, so distances are asymmetric.
//! Management decisions are phrased in terms of the all-pairs shortest-path
//! matrix and its mean over ordered station pairs, the average inter-station
//! distance (AISD). The AISD normalizes the communication horizon so that it
//! can be stated as a unitless ratio instead of meters and compared across
//! networks of different size.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Index of a station within its [`Network`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StationId(pub usize);

/// Index of a one-way link within its [`Network`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LinkId(pub usize);

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Station {
    pub name: String,
    /// Berths available for stopped vehicles (boarding, alighting, idling).
    pub berth_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub from: StationId,
    pub to: StationId,
    pub length_m: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("network needs at least 2 stations, got {0}")]
    TooFewStations(usize),
    #[error("duplicate station name `{0}`")]
    DuplicateStation(String),
    #[error("link {index}: unknown station `{name}`")]
    UnknownStation { index: usize, name: String },
    #[error("link {index} ({from} -> {to}): length must be positive and finite, got {length_m}")]
    BadLength {
        index: usize,
        from: String,
        to: String,
        length_m: f64,
    },
    #[error("station `{from}` cannot reach station `{to}`: track graph is not strongly connected")]
    UnreachablePair { from: String, to: String },
    #[error("horizon must be nonnegative and not NaN, got {0}")]
    BadHorizon(f64),
    #[error("route endpoints must differ, got station `{0}` twice")]
    SameStation(String),
}

/// A directed track graph. Construction checks station names and link
/// endpoints; strong connectivity is checked when the distance matrix is
/// built, which every loader does before handing the network to a simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    stations: Vec<Station>,
    links: Vec<Link>,
    /// Outgoing links per station, sorted by target station id so that every
    /// traversal visits candidates in a deterministic order.
    out_links: Vec<Vec<LinkId>>,
}

impl Network {
    pub fn new(stations: Vec<Station>, links: Vec<Link>) -> Result<Self, NetworkError> {
        if stations.len() < 2 {
            return Err(NetworkError::TooFewStations(stations.len()));
        }
        for (i, s) in stations.iter().enumerate() {
            if stations[..i].iter().any(|t| t.name == s.name) {
                return Err(NetworkError::DuplicateStation(s.name.clone()));
            }
        }
        for (index, l) in links.iter().enumerate() {
            for end in [l.from, l.to] {
                if end.0 >= stations.len() {
                    return Err(NetworkError::UnknownStation {
                        index,
                        name: format!("#{}", end.0),
                    });
                }
            }
            if !(l.length_m > 0.0) || !l.length_m.is_finite() {
                return Err(NetworkError::BadLength {
                    index,
                    from: stations[l.from.0].name.clone(),
                    to: stations[l.to.0].name.clone(),
                    length_m: l.length_m,
                });
            }
        }
        let mut out_links: Vec<Vec<LinkId>> = vec![Vec::new(); stations.len()];
        for (i, l) in links.iter().enumerate() {
            out_links[l.from.0].push(LinkId(i));
        }
        for outs in &mut out_links {
            outs.sort_by_key(|&l| (links[l.0].to, l));
        }
        Ok(Self {
            stations,
            links,
            out_links,
        })
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn station(&self, id: StationId) -> &Station {
        &self.stations[id.0]
    }

    pub fn stations(&self) -> impl Iterator<Item = (StationId, &Station)> {
        self.stations.iter().enumerate().map(|(i, s)| (StationId(i), s))
    }

    pub fn station_by_name(&self, name: &str) -> Option<StationId> {
        self.stations.iter().position(|s| s.name == name).map(StationId)
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn links(&self) -> impl Iterator<Item = (LinkId, &Link)> {
        self.links.iter().enumerate().map(|(i, l)| (LinkId(i), l))
    }

    pub fn out_links(&self, from: StationId) -> &[LinkId] {
        &self.out_links[from.0]
    }
}

/// All-pairs shortest-path distances plus their mean over ordered pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    d: Vec<Vec<f64>>,
    aisd_m: f64,
}

impl DistanceMatrix {
    /// Shortest driving distance in meters; 0 on the diagonal.
    pub fn distance_m(&self, from: StationId, to: StationId) -> f64 {
        self.d[from.0][to.0]
    }

    /// Mean of `distance_m(i, j)` over all ordered pairs with `i != j`.
    pub fn aisd_m(&self) -> f64 {
        self.aisd_m
    }

    pub fn station_count(&self) -> usize {
        self.d.len()
    }
}

/// Dijkstra from one source over the sorted adjacency lists.
fn shortest_from(net: &Network, src: StationId) -> Vec<f64> {
    let n = net.station_count();
    let mut dist = vec![f64::INFINITY; n];
    dist[src.0] = 0.0;
    // Ordering keys are (distance, station id); f64 is totally ordered here
    // because link lengths are finite and nonnegative.
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, src)));
    let mut settled = vec![false; n];
    while let Some(Reverse((_, u))) = heap.pop() {
        if settled[u.0] {
            continue;
        }
        settled[u.0] = true;
        for &lid in net.out_links(u) {
            let l = net.link(lid);
            let cand = dist[u.0] + l.length_m;
            if cand < dist[l.to.0] {
                dist[l.to.0] = cand;
                heap.push(Reverse((cand.to_bits(), l.to)));
            }
        }
    }
    dist
}

/// Builds the full distance matrix and AISD. Fails if any ordered pair is
/// unreachable, which is how strong connectivity is enforced at load time.
pub fn build_distance_matrix(net: &Network) -> Result<DistanceMatrix, NetworkError> {
    let n = net.station_count();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        d.push(shortest_from(net, StationId(i)));
    }
    let mut sum = 0.0;
    for (i, row) in d.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            if !v.is_finite() {
                return Err(NetworkError::UnreachablePair {
                    from: net.station(StationId(i)).name.clone(),
                    to: net.station(StationId(j)).name.clone(),
                });
            }
            sum += v;
        }
    }
    let pairs = (n * (n - 1)) as f64;
    Ok(DistanceMatrix { d, aisd_m: sum / pairs })
}

/// Communication horizon of the management layer, stated as a multiple of
/// the AISD. `Unlimited` restores global visibility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Limited(f64),
    Unlimited,
}

impl Horizon {
    pub fn validate(self) -> Result<Self, NetworkError> {
        match self {
            Horizon::Limited(h) if !(h >= 0.0) || !h.is_finite() => Err(NetworkError::BadHorizon(h)),
            other => Ok(other),
        }
    }

    /// Distance threshold in meters, `None` when unlimited.
    pub fn threshold_m(self, aisd_m: f64) -> Option<f64> {
        match self {
            Horizon::Limited(h) => Some(h * aisd_m),
            Horizon::Unlimited => None,
        }
    }

    /// CSV representation uses `inf` for the unlimited case.
    pub fn as_f64(self) -> f64 {
        match self {
            Horizon::Limited(h) => h,
            Horizon::Unlimited => f64::INFINITY,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Limited(h) => write!(f, "{h}"),
            Horizon::Unlimited => write!(f, "inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, NetworkError> {
        match s.trim() {
            "inf" | "unlimited" => Ok(Horizon::Unlimited),
            other => {
                let h: f64 = other.parse().map_err(|_| NetworkError::BadHorizon(f64::NAN))?;
                Horizon::Limited(h).validate()
            }
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Horizon::Limited(h) => ser.serialize_f64(*h),
            Horizon::Unlimited => ser.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(de)? {
            Repr::Num(h) => Horizon::Limited(h).validate().map_err(serde::de::Error::custom),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Which stations each station may exchange management messages with.
///
/// `j` is a neighbor of `i` when `distance_m(i, j) <= horizon * AISD`, with
/// the boundary included. Neighborhoods are directional because distances
/// are, and a station is never its own neighbor.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonTable {
    horizon: Horizon,
    neighbors: Vec<Vec<StationId>>,
}

impl HorizonTable {
    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    /// Neighbors of `s`, sorted ascending by station id.
    pub fn neighbors(&self, s: StationId) -> &[StationId] {
        &self.neighbors[s.0]
    }

    pub fn contains(&self, issuer: StationId, peer: StationId) -> bool {
        self.neighbors[issuer.0].binary_search(&peer).is_ok()
    }
}

pub fn horizon_table(dm: &DistanceMatrix, horizon: Horizon) -> Result<HorizonTable, NetworkError> {
    let horizon = horizon.validate()?;
    let n = dm.station_count();
    let threshold = horizon.threshold_m(dm.aisd_m());
    let mut neighbors = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::new();
        for j in 0..n {
            if i == j {
                continue;
            }
            let within = match threshold {
                Some(t) => dm.distance_m(StationId(i), StationId(j)) <= t,
                None => true,
            };
            if within {
                row.push(StationId(j));
            }
        }
        neighbors.push(row);
    }
    Ok(HorizonTable { horizon, neighbors })
}

/// A concrete shortest path: the links to drive, in order.
#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub links: Vec<LinkId>,
    pub length_m: f64,
}

/// Precomputed next-hop table for every destination. Among equally short
/// continuations the link toward the lowest next-station id wins, so route
/// choice is deterministic and independent of insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct Router {
    /// `dist_to[t][v]`: shortest distance from v to destination t.
    dist_to: Vec<Vec<f64>>,
    /// `next[t][v]`: first link of the chosen route from v toward t.
    next: Vec<Vec<Option<LinkId>>>,
}

impl Router {
    pub fn new(net: &Network) -> Result<Self, NetworkError> {
        let n = net.station_count();
        // Reverse adjacency for the backward Dijkstra per destination.
        let mut in_links: Vec<Vec<LinkId>> = vec![Vec::new(); n];
        for (lid, l) in net.links() {
            in_links[l.to.0].push(lid);
        }
        let mut dist_to = Vec::with_capacity(n);
        let mut next = Vec::with_capacity(n);
        for t in 0..n {
            let mut dist = vec![f64::INFINITY; n];
            dist[t] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0u64, StationId(t))));
            let mut settled = vec![false; n];
            while let Some(Reverse((_, u))) = heap.pop() {
                if settled[u.0] {
                    continue;
                }
                settled[u.0] = true;
                for &lid in &in_links[u.0] {
                    let l = net.link(lid);
                    let cand = dist[u.0] + l.length_m;
                    if cand < dist[l.from.0] {
                        dist[l.from.0] = cand;
                        heap.push(Reverse((cand.to_bits(), l.from)));
                    }
                }
            }
            let mut next_row = vec![None; n];
            for v in 0..n {
                if v == t {
                    continue;
                }
                if !dist[v].is_finite() {
                    return Err(NetworkError::UnreachablePair {
                        from: net.station(StationId(v)).name.clone(),
                        to: net.station(StationId(t)).name.clone(),
                    });
                }
                // The relaxation that set dist[v] guarantees at least one
                // exact match, so the route always makes progress.
                next_row[v] = net
                    .out_links(StationId(v))
                    .iter()
                    .copied()
                    .find(|&lid| {
                        let l = net.link(lid);
                        l.length_m + dist[l.to.0] == dist[v]
                    });
                debug_assert!(next_row[v].is_some());
            }
            dist_to.push(dist);
            next.push(next_row);
        }
        Ok(Self { dist_to, next })
    }

    pub fn route(&self, net: &Network, from: StationId, to: StationId) -> Result<Route, NetworkError> {
        if from == to {
            return Err(NetworkError::SameStation(net.station(from).name.clone()));
        }
        let mut links = Vec::new();
        let mut length_m = 0.0;
        let mut cur = from;
        while cur != to {
            let lid = self.next[to.0][cur.0].expect("router built over strongly connected graph");
            let l = net.link(lid);
            links.push(lid);
            length_m += l.length_m;
            cur = l.to;
        }
        Ok(Route { links, length_m })
    }
}

/// One-shot convenience around [`Router`] for callers outside the simulator.
pub fn route(net: &Network, from: StationId, to: StationId) -> Result<Route, NetworkError> {
    Router::new(net)?.route(net, from, to)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn station(name: &str) -> Station {
        Station {
            name: name.to_string(),
            berth_count: 2,
        }
    }

    fn link(from: usize, to: usize, length_m: f64) -> Link {
        Link {
            from: StationId(from),
            to: StationId(to),
            length_m,
        }
    }

    /// Two stations on a loop of two 500 m links.
    fn two_station_loop() -> Network {
        Network::new(
            vec![station("A"), station("B")],
            vec![link(0, 1, 500.0), link(1, 0, 500.0)],
        )
        .unwrap()
    }

    /// Triangle with a shortcut: A->B 1 km, B->C 2 km, C->A 3 km, A->C 3 km.
    fn asymmetric_triangle() -> Network {
        Network::new(
            vec![station("A"), station("B"), station("C")],
            vec![
                link(0, 1, 1000.0),
                link(1, 2, 2000.0),
                link(2, 0, 3000.0),
                link(0, 2, 3000.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn two_station_distances_and_aisd() {
        let dm = build_distance_matrix(&two_station_loop()).unwrap();
        assert_eq!(dm.distance_m(StationId(0), StationId(1)), 500.0);
        assert_eq!(dm.distance_m(StationId(1), StationId(0)), 500.0);
        assert_eq!(dm.distance_m(StationId(0), StationId(0)), 0.0);
        assert_eq!(dm.aisd_m(), 500.0);
    }

    #[test]
    fn asymmetric_triangle_distances() {
        let dm = build_distance_matrix(&asymmetric_triangle()).unwrap();
        let d = |i, j| dm.distance_m(StationId(i), StationId(j));
        assert_eq!(d(0, 1), 1000.0);
        assert_eq!(d(0, 2), 3000.0);
        assert_eq!(d(1, 2), 2000.0);
        assert_eq!(d(1, 0), 5000.0); // B -> C -> A
        assert_eq!(d(2, 0), 3000.0);
        assert_eq!(d(2, 1), 4000.0); // C -> A -> B
        assert_eq!(dm.aisd_m(), 3000.0);
    }

    #[test]
    fn unreachable_pair_is_rejected() {
        // B has no way back to A.
        let net = Network::new(
            vec![station("A"), station("B")],
            vec![link(0, 1, 500.0)],
        )
        .unwrap();
        let err = build_distance_matrix(&net).unwrap_err();
        assert_eq!(
            err,
            NetworkError::UnreachablePair {
                from: "B".into(),
                to: "A".into()
            }
        );
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(
            Network::new(vec![station("A")], vec![]).unwrap_err(),
            NetworkError::TooFewStations(1)
        );
        assert_eq!(
            Network::new(vec![station("A"), station("A")], vec![]).unwrap_err(),
            NetworkError::DuplicateStation("A".into())
        );
        assert!(matches!(
            Network::new(
                vec![station("A"), station("B")],
                vec![link(0, 1, 500.0), link(1, 0, 0.0)]
            ),
            Err(NetworkError::BadLength { index: 1, .. })
        ));
        assert!(matches!(
            Network::new(vec![station("A"), station("B")], vec![link(0, 2, 500.0)]),
            Err(NetworkError::UnknownStation { index: 0, .. })
        ));
    }

    #[test]
    fn horizon_half_on_triangle() {
        // AISD 3 km, threshold 1.5 km: only A reaches anyone (A->B 1 km).
        let dm = build_distance_matrix(&asymmetric_triangle()).unwrap();
        let t = horizon_table(&dm, Horizon::Limited(0.5)).unwrap();
        assert_eq!(t.neighbors(StationId(0)), &[StationId(1)]);
        assert_eq!(t.neighbors(StationId(1)), &[] as &[StationId]);
        assert_eq!(t.neighbors(StationId(2)), &[] as &[StationId]);
        assert!(t.contains(StationId(0), StationId(1)));
        assert!(!t.contains(StationId(1), StationId(0)));
    }

    #[test]
    fn horizon_boundary_is_inclusive() {
        // Threshold exactly 1000 m keeps the 1000 m pair inside.
        let dm = build_distance_matrix(&asymmetric_triangle()).unwrap();
        let t = horizon_table(&dm, Horizon::Limited(1.0 / 3.0)).unwrap();
        assert_eq!(t.neighbors(StationId(0)), &[StationId(1)]);
    }

    #[test]
    fn unlimited_horizon_sees_everyone() {
        let dm = build_distance_matrix(&asymmetric_triangle()).unwrap();
        let t = horizon_table(&dm, Horizon::Unlimited).unwrap();
        for i in 0..3 {
            assert_eq!(t.neighbors(StationId(i)).len(), 2);
        }
    }

    #[test]
    fn horizon_zero_isolates_every_station() {
        let dm = build_distance_matrix(&asymmetric_triangle()).unwrap();
        let t = horizon_table(&dm, Horizon::Limited(0.0)).unwrap();
        for i in 0..3 {
            assert!(t.neighbors(StationId(i)).is_empty());
        }
    }

    #[test]
    fn negative_horizon_is_rejected() {
        let dm = build_distance_matrix(&asymmetric_triangle()).unwrap();
        assert_eq!(
            horizon_table(&dm, Horizon::Limited(-0.5)).unwrap_err(),
            NetworkError::BadHorizon(-0.5)
        );
    }

    #[test]
    fn horizon_parses_and_prints() {
        assert_eq!("inf".parse::<Horizon>().unwrap(), Horizon::Unlimited);
        assert_eq!("1.5".parse::<Horizon>().unwrap(), Horizon::Limited(1.5));
        assert!("-1".parse::<Horizon>().is_err());
        assert_eq!(Horizon::Unlimited.to_string(), "inf");
        assert_eq!(Horizon::Limited(0.5).to_string(), "0.5");
    }

    #[test]
    fn route_follows_shortest_path() {
        let net = asymmetric_triangle();
        let r = route(&net, StationId(1), StationId(0)).unwrap();
        assert_eq!(r.length_m, 5000.0);
        assert_eq!(r.links.len(), 2);
        let first = net.link(r.links[0]);
        assert_eq!((first.from, first.to), (StationId(1), StationId(2)));
    }

    #[test]
    fn route_breaks_ties_toward_lowest_station_id() {
        // Two equal-length routes from A(0) to D(3): via B(1) or via C(2).
        let net = Network::new(
            vec![station("A"), station("B"), station("C"), station("D")],
            vec![
                link(0, 1, 100.0),
                link(0, 2, 100.0),
                link(1, 3, 100.0),
                link(2, 3, 100.0),
                link(3, 0, 100.0),
            ],
        )
        .unwrap();
        let r = route(&net, StationId(0), StationId(3)).unwrap();
        assert_eq!(net.link(r.links[0]).to, StationId(1));
        assert_eq!(r.length_m, 200.0);
    }

    #[test]
    fn route_rejects_equal_endpoints() {
        let net = two_station_loop();
        assert_eq!(
            route(&net, StationId(0), StationId(0)).unwrap_err(),
            NetworkError::SameStation("A".into())
        );
    }
}

//! Oracles and generators shared by the integration suites. Everything here
//! is deliberately naive: slow, obvious code that the fast implementations
//! are checked against.

#![allow(dead_code)]

use std::path::PathBuf;

use prt_sim::engine::QueueSample;
use prt_sim::network::{Link, Network, Station, StationId};
use rand::Rng;

/// Absolute path of a bundled scenario file.
pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
}

/// All-pairs shortest paths by relaxing every edge until nothing changes.
/// With integer edge lengths every sum is exact in f64, so a correct
/// implementation must match this bit for bit.
pub fn oracle_apsp(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    loop {
        let mut changed = false;
        for src in 0..n {
            for &(u, v, len) in edges {
                let through = dist[src][u] + len;
                if through < dist[src][v] {
                    dist[src][v] = through;
                    changed = true;
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Mean of the off-diagonal entries, the textbook definition of AISD.
pub fn oracle_aisd(dist: &[Vec<f64>]) -> f64 {
    let n = dist.len();
    let mut sum = 0.0;
    for (i, row) in dist.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if i != j {
                sum += d;
            }
        }
    }
    sum / (n * (n - 1)) as f64
}

/// A random digraph that is strongly connected by construction: a random
/// Hamiltonian cycle plus extra edges, with integer lengths so float sums
/// stay exact. At most 40 edges, matching small real networks.
pub fn random_strongly_connected(rng: &mut impl Rng) -> (usize, Vec<(usize, usize, f64)>) {
    let n = rng.random_range(2..=12);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        let from = order[i];
        let to = order[(i + 1) % n];
        edges.push((from, to, rng.random_range(1..=9999) as f64));
    }
    let extra = rng.random_range(0..=(40 - n).min(28));
    for _ in 0..extra {
        let from = rng.random_range(0..n);
        let mut to = rng.random_range(0..n);
        if to == from {
            to = (to + 1) % n;
        }
        edges.push((from, to, rng.random_range(1..=9999) as f64));
    }
    (n, edges)
}

/// Wraps raw edges into a validated `Network` with interchangeable stations.
pub fn network_from_edges(n: usize, edges: &[(usize, usize, f64)], berths: usize) -> Network {
    let stations: Vec<Station> = (0..n)
        .map(|i| Station {
            name: format!("n{i}"),
            berth_count: berths,
        })
        .collect();
    let links = edges
        .iter()
        .map(|&(from, to, len)| Link {
            from: StationId(from),
            to: StationId(to),
            length_m: len,
        })
        .collect::<Vec<_>>();
    Network::new(stations, links).expect("generated graph is valid")
}

/// Rebuilds the total queued-group count over time from the per-station
/// change log and samples it every `dt_s` on [t0_s, t1_s].
pub fn total_queue_series(
    log: &[QueueSample],
    n_stations: usize,
    t0_s: f64,
    t1_s: f64,
    dt_s: f64,
) -> Vec<f64> {
    let mut per_station = vec![0usize; n_stations];
    let mut total = 0usize;
    let mut samples = Vec::new();
    let mut next_t = t0_s;
    for entry in log {
        while next_t <= t1_s && entry.time_s > next_t {
            samples.push(total as f64);
            next_t += dt_s;
        }
        total = total + entry.len - per_station[entry.station.0];
        per_station[entry.station.0] = entry.len;
    }
    while next_t <= t1_s {
        samples.push(total as f64);
        next_t += dt_s;
    }
    samples
}

/// Slope of a least-squares line through block means, reported as a t
/// statistic. Averaging adjacent samples into `blocks` means first knocks
/// out most of the autocorrelation that would otherwise shrink the standard
/// error.
pub fn drift_t_stat(samples: &[f64], blocks: usize) -> (f64, f64) {
    assert!(blocks >= 3 && samples.len() >= blocks);
    let per = samples.len() / blocks;
    let means: Vec<f64> = (0..blocks)
        .map(|b| {
            let chunk = &samples[b * per..(b + 1) * per];
            chunk.iter().sum::<f64>() / per as f64
        })
        .collect();
    let k = blocks as f64;
    let xbar = (k - 1.0) / 2.0;
    let ybar = means.iter().sum::<f64>() / k;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (b, &y) in means.iter().enumerate() {
        let dx = b as f64 - xbar;
        sxx += dx * dx;
        sxy += dx * (y - ybar);
    }
    let slope = sxy / sxx;
    let residual_ss: f64 = means
        .iter()
        .enumerate()
        .map(|(b, &y)| {
            let fit = ybar + slope * (b as f64 - xbar);
            (y - fit) * (y - fit)
        })
        .sum();
    let se = (residual_ss / (k - 2.0) / sxx).sqrt();
    let t = if se == 0.0 { 0.0 } else { slope / se };
    (slope, t)
}

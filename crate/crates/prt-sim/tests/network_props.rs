//! Property tests over random strongly connected digraphs: the distance
//! matrix against a brute-force oracle, routing against the matrix, and the
//! horizon neighborhoods against their definition.

mod common;

use common::{network_from_edges, oracle_aisd, oracle_apsp, random_strongly_connected};
use prt_sim::network::{build_distance_matrix, horizon_table, Horizon, Router, StationId};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn shortest_paths_match_exhaustive_relaxation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, edges) = random_strongly_connected(&mut rng);
        let net = network_from_edges(n, &edges, 2);
        let dm = build_distance_matrix(&net).unwrap();
        let oracle = oracle_apsp(n, &edges);
        for i in 0..n {
            for j in 0..n {
                // Integer lengths keep both sides exact, so no tolerance.
                prop_assert_eq!(dm.distance_m(StationId(i), StationId(j)), oracle[i][j]);
            }
        }
        let aisd = oracle_aisd(&oracle);
        prop_assert!((dm.aisd_m() - aisd).abs() <= 1e-12 * aisd);
    }

    #[test]
    fn distances_obey_triangle_inequality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, edges) = random_strongly_connected(&mut rng);
        let net = network_from_edges(n, &edges, 2);
        let dm = build_distance_matrix(&net).unwrap();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (i, j, k) = (StationId(i), StationId(j), StationId(k));
                    prop_assert!(dm.distance_m(i, k) <= dm.distance_m(i, j) + dm.distance_m(j, k));
                }
            }
        }
    }

    #[test]
    fn routes_realize_matrix_distances(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, edges) = random_strongly_connected(&mut rng);
        let net = network_from_edges(n, &edges, 2);
        let dm = build_distance_matrix(&net).unwrap();
        let router = Router::new(&net).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let route = router.route(&net, StationId(i), StationId(j)).unwrap();
                prop_assert_eq!(route.length_m, dm.distance_m(StationId(i), StationId(j)));
                // The links must chain from origin to destination.
                let mut at = StationId(i);
                for lid in &route.links {
                    let link = net.link(*lid);
                    prop_assert_eq!(link.from, at);
                    at = link.to;
                }
                prop_assert_eq!(at, StationId(j));
            }
        }
    }

    #[test]
    fn wider_horizons_only_gain_neighbors(seed in any::<u64>(), h1 in 0.1f64..3.0, h2 in 0.1f64..3.0) {
        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, edges) = random_strongly_connected(&mut rng);
        let net = network_from_edges(n, &edges, 2);
        let dm = build_distance_matrix(&net).unwrap();
        let narrow = horizon_table(&dm, Horizon::Limited(lo)).unwrap();
        let wide = horizon_table(&dm, Horizon::Limited(hi)).unwrap();
        let unlimited = horizon_table(&dm, Horizon::Unlimited).unwrap();
        for s in 0..n {
            let s = StationId(s);
            for peer in narrow.neighbors(s) {
                prop_assert!(wide.contains(s, *peer));
            }
            prop_assert_eq!(unlimited.neighbors(s).len(), n - 1);
            prop_assert!(!narrow.contains(s, s));
        }
    }

    #[test]
    fn neighborhoods_define_membership_by_distance(seed in any::<u64>(), h in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, edges) = random_strongly_connected(&mut rng);
        let net = network_from_edges(n, &edges, 2);
        let dm = build_distance_matrix(&net).unwrap();
        let table = horizon_table(&dm, Horizon::Limited(h)).unwrap();
        let radius = h * dm.aisd_m();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (i, j) = (StationId(i), StationId(j));
                prop_assert_eq!(table.contains(i, j), dm.distance_m(i, j) <= radius);
            }
        }
    }

    #[test]
    fn power_of_two_rescaling_keeps_neighborhoods(seed in any::<u64>(), h in 0.1f64..3.0) {
        // Scaling every length by a power of two commutes with float
        // rounding, so the neighbor relation must not move at all.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, edges) = random_strongly_connected(&mut rng);
        for scale in [0.5f64, 4.0, 1024.0] {
            let scaled: Vec<_> = edges.iter().map(|&(u, v, l)| (u, v, l * scale)).collect();
            let base_dm = build_distance_matrix(&network_from_edges(n, &edges, 2)).unwrap();
            let scaled_dm = build_distance_matrix(&network_from_edges(n, &scaled, 2)).unwrap();
            let base = horizon_table(&base_dm, Horizon::Limited(h)).unwrap();
            let moved = horizon_table(&scaled_dm, Horizon::Limited(h)).unwrap();
            for s in 0..n {
                prop_assert_eq!(base.neighbors(StationId(s)), moved.neighbors(StationId(s)));
            }
        }
    }
}

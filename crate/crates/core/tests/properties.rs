//! Property tests over random configurations: loop-configuration invariants,
//! incremental counts, the repair identities, flow/height duality, snapshot
//! round trips and SAW symmetry.

use onmodel::lattice::{HexDomain, TorusLattice};
use onmodel::loop_core::{loops_surrounding, surrounding_loop_lengths, validate, LoopConfig};
use onmodel::loop_samplers::delta_counts;
use onmodel::loop_structure::repair_identities;
use onmodel::representations::{flow_from_height, height_from_flow, PlanarGraph};
use onmodel::rng::make_rng;
use onmodel::saw::{enumerate_saw, enumerate_saw_from};
use onmodel::snapshot::{LoopSnapshot, Snapshot, SpinSnapshot};
use onmodel::spin_core::SpinConfig;
use proptest::prelude::*;

/// ω = △_{z ∈ S} ∂z for a set S of inner faces, given as a selection bitmap.
fn config_from_faces(d: &HexDomain, pick: &[bool]) -> LoopConfig {
    d.faces()
        .iter()
        .zip(pick.iter().cycle())
        .filter(|(_, &p)| p)
        .fold(LoopConfig::empty(), |cfg, (&z, _)| cfg.flip_face(d.hex(z)))
}

fn face_picks() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(prop::bool::weighted(0.3), 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn face_sums_are_loop_configurations(pick in face_picks()) {
        let d = HexDomain::hexagon(4).unwrap();
        let cfg = config_from_faces(&d, &pick);
        let edges: Vec<_> = cfg.edges().iter().copied().collect();
        let valid = validate(&edges, &d).unwrap();
        let mask = valid.to_mask(&d).unwrap();
        prop_assert_eq!(LoopConfig::from_mask(&d, &mask), valid.clone());
        let (o, l) = valid.counts(&d).unwrap();
        prop_assert_eq!(o, edges.len());
        let loops = valid.loops(&d).unwrap();
        prop_assert_eq!(loops.len(), l);
        prop_assert_eq!(loops.iter().map(|lp| lp.len()).sum::<usize>(), o);
        prop_assert!(loops.iter().all(|lp| lp.len() >= 6 && lp.len() % 2 == 0));
    }

    #[test]
    fn incremental_counts_match_recount(pick in face_picks(), which in 0usize..1000) {
        let d = HexDomain::hexagon(4).unwrap();
        let cfg = config_from_faces(&d, &pick);
        let mut mask = cfg.to_mask(&d).unwrap();
        let before = mask.clone();
        let z = d.faces()[which % d.faces().len()];
        let (o0, l0) = cfg.counts(&d).unwrap();
        let (o1, l1) = cfg.flip_face(d.hex(z)).counts(&d).unwrap();
        prop_assert_eq!(delta_counts(&d, &mut mask, z), (o1 as i64 - o0 as i64, l1 as i64 - l0 as i64));
        prop_assert_eq!(mask, before);
    }

    #[test]
    fn surrounding_fast_path_matches_loop_geometry(pick in face_picks()) {
        let d = HexDomain::hexagon(3).unwrap();
        let cfg = config_from_faces(&d, &pick);
        let mask = cfg.to_mask(&d).unwrap();
        for &v in d.domain_vertices() {
            let mut fast = surrounding_loop_lengths(&d, &mask, v);
            fast.sort_unstable();
            let mut slow: Vec<usize> = loops_surrounding(&cfg, &d, &d.vertex(v)).unwrap().iter().map(|x| x.1).collect();
            slow.sort_unstable();
            prop_assert_eq!(fast, slow);
        }
    }

    #[test]
    fn repair_identities_hold_on_arbitrary_configurations(pick in face_picks()) {
        let d = HexDomain::hexagon(5).unwrap();
        prop_assume!(d.is_type(0));
        let cfg = config_from_faces(&d, &pick);
        let id = repair_identities(&d, &cfg.to_mask(&d).unwrap());
        prop_assert!(id.is_ok(), "{:?}", id.err());
        let id = id.unwrap();
        prop_assert!(id.identities_hold && id.inequalities_hold && id.repaired_valid);
    }

    #[test]
    fn height_and_flow_round_trip(w in 2usize..6, h in 2usize..6, seed in any::<u64>()) {
        let g = PlanarGraph::grid(w, h);
        let mut rng = make_rng(seed, 0);
        use rand::Rng as _;
        let mut f: Vec<i64> = (0..g.n_faces).map(|_| rng.gen_range(-5..=5)).collect();
        f[g.outer as usize] = 0;
        let flow = flow_from_height(&g, &f).unwrap();
        prop_assert!(g.divergence(&flow).iter().all(|&x| x == 0));
        prop_assert_eq!(height_from_flow(&g, &flow).unwrap(), f);
    }

    #[test]
    fn flow_violations_are_rejected(w in 2usize..5, h in 2usize..5, e in 0usize..100) {
        let g = PlanarGraph::grid(w, h);
        let mut flow = vec![0i64; g.edges.len()];
        flow[e % g.edges.len()] = 1;
        prop_assert!(height_from_flow(&g, &flow).is_err());
    }

    #[test]
    fn spin_snapshots_round_trip(n in 1usize..4, l in 1usize..4, seed in any::<u64>()) {
        let lat = TorusLattice::new(2, l).unwrap();
        let cfg = SpinConfig::random(n, lat.len(), &mut make_rng(seed, 0));
        let snap = Snapshot::Spin(SpinSnapshot::new(&cfg, &lat, serde_json::json!({"seed": seed})).unwrap());
        let back = Snapshot::from_json(&snap.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &snap);
        let Snapshot::Spin(s) = back else { unreachable!() };
        let (lat2, cfg2) = s.restore().unwrap();
        prop_assert_eq!(lat2.len(), lat.len());
        prop_assert_eq!(cfg2.values(), cfg.values());
    }

    #[test]
    fn loop_snapshots_round_trip(pick in face_picks()) {
        let d = HexDomain::hexagon(3).unwrap();
        let cfg = config_from_faces(&d, &pick);
        let snap = Snapshot::Loop(LoopSnapshot::new(&d, &cfg, serde_json::json!({})).unwrap());
        let back = Snapshot::from_json(&snap.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &snap);
        let Snapshot::Loop(s) = back else { unreachable!() };
        let (d2, cfg2) = s.restore().unwrap();
        prop_assert_eq!(d2.faces().len(), d.faces().len());
        prop_assert_eq!(cfg2, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn saw_counts_do_not_depend_on_the_origin(a in -20i32..20, b in -20i32..20, mirror in any::<bool>()) {
        let base = enumerate_saw(10).unwrap();
        let moved = enumerate_saw_from((a, b), mirror, 10).unwrap();
        for k in 0..=10 {
            prop_assert_eq!(base.s(k), moved.s(k));
        }
    }
}

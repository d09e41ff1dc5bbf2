//! Property tests over the geometry kernels and metrics.

use proptest::prelude::*;

use hps_core::geom::{convex_hull, hull_volume, Point3};
use hps_core::inertia::{point_inertia, unvech, vech};
use hps_core::metrics::{gce, use_error, SegPair};
use hps_core::segment::htc_edge_cost;

fn point_strategy() -> impl Strategy<Value = Point3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hull_contains_inputs(points in prop::collection::vec(point_strategy(), 8..80)) {
        if let Ok(hull) = convex_hull(&points) {
            let tol = 1e-9 * hull.bbox_diagonal();
            for p in &points {
                for i in 0..hull.faces().len() {
                    let [a, _, _] = hull.face_points(i);
                    let n = hull.face_normal(i);
                    prop_assert!(n.dot(&(p - a)) <= tol);
                }
            }
            prop_assert!(hull.is_watertight());
            prop_assert!(hull_volume(&hull).unwrap() >= 0.0);
        }
    }

    #[test]
    fn vech_materialization_round_trips(values in prop::array::uniform6(-10.0f64..10.0)) {
        let m = unvech(&values);
        prop_assert_eq!(vech(&m), values);
        prop_assert!((m - m.transpose()).abs().max() == 0.0);
    }

    #[test]
    fn point_inertia_is_psd(p in point_strategy(), mass in 0.0f64..10.0) {
        let inertia = point_inertia(&p, mass);
        let eig = nalgebra::SymmetricEigen::new(inertia);
        for lambda in eig.eigenvalues.iter() {
            prop_assert!(*lambda >= -1e-12);
        }
    }

    #[test]
    fn segmentation_metrics_bounded_and_permutation_invariant(
        labels in prop::collection::vec((0u32..5, 0u32..4), 4..120),
        shift in 1u32..97,
    ) {
        let pred: Vec<u32> = labels.iter().map(|&(p, _)| p).collect();
        let truth: Vec<u32> = labels.iter().map(|&(_, t)| t).collect();
        let pair = SegPair::new(&pred, &truth).unwrap();
        let u = use_error(&pair);
        let g = gce(&pair);
        prop_assert!((0.0..=1.0).contains(&u));
        prop_assert!((0.0..=1.0).contains(&g));

        let perm = |l: u32| (l + shift) * 3;
        let pred2: Vec<u32> = pred.iter().map(|&l| perm(l)).collect();
        let truth2: Vec<u32> = truth.iter().map(|&l| perm(l)).collect();
        let pair2 = SegPair::new(&pred2, &truth2).unwrap();
        prop_assert!((use_error(&pair2) - u).abs() < 1e-12);
        prop_assert!((gce(&pair2) - g).abs() < 1e-12);
    }

    #[test]
    fn merge_cost_branches_are_separated(
        hull_excess in 0.0f64..10.0,
        vol in 0.01f64..10.0,
        si in 1usize..100,
        sj in 1usize..100,
        extra in 0usize..100,
    ) {
        let n = si + sj + extra;
        let tol = 1e-6;
        let cost = htc_edge_cost(vol + hull_excess, vol, si, sj, n, tol);
        prop_assert!(cost >= 0.0);
        if hull_excess > tol {
            // concave merges always cost more than any convex merge
            prop_assert!(cost > 1.0);
        } else {
            prop_assert!(cost <= 1.0);
        }
    }
}

use supnorm_core::hecke::{
    build_tree, hecke_row_sum_violations, sphere_row_sum_violations, verify_hecke_orders, verify_sphere_recursion,
};

#[test]
fn sphere_recursion_through_the_radius() {
    for (p, radius) in [(2u64, 8u32), (3, 6), (5, 5)] {
        let tree = build_tree(p, radius).unwrap();
        for k in 1..radius {
            let r = verify_sphere_recursion(&tree, k).unwrap();
            assert!(r.passed, "p={p} k={k}: {:?}", r.first_mismatch);
        }
    }
}

#[test]
fn interior_row_sums() {
    for p in [2u64, 3, 5] {
        let tree = build_tree(p, 5).unwrap();
        for n in 0..=5 {
            assert!(hecke_row_sum_violations(&tree, n).unwrap().is_empty());
            assert!(sphere_row_sum_violations(&tree, n).unwrap().is_empty());
        }
    }
}

#[test]
fn relation_fails_past_the_interior() {
    // The identity only holds where the walks fit; at the boundary shell
    // truncation breaks it, which the interior restriction avoids.
    let tree = build_tree(2, 4).unwrap();
    assert!(verify_hecke_orders(&tree, 2, 2).unwrap().passed);
    assert!(verify_hecke_orders(&tree, 3, 2).is_err());
}

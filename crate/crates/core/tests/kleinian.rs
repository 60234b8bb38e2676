mod common;

use common::*;
use proptest::prelude::*;
use qfsurf_core::circle::{inversion_in_circle, SphereCircle};
use qfsurf_core::kleinian::*;
use qfsurf_core::polyline::SpherePolyline;
use qfsurf_core::vec3::{Mat3, Vec3};
use qfsurf_core::{Circle, ChainError, Mobius, Point};
use rand::Rng;
use std::f64::consts::{PI, TAU};

fn equator_chain(delta: f64) -> CoveringChain {
    build_chain(&SpherePolyline::equator(64), delta).unwrap()
}

/// Caps of radius alpha centred on the equator meet orthogonally iff
/// cos(spacing) = cos^2(alpha); for 2L equal caps the spacing is pi / L.
fn closed_form_radius(l: usize) -> f64 {
    (PI / l as f64).cos().sqrt().acos()
}

/// Smallest delta admitting the 2L-cap equator chain.
fn delta_for(l: usize) -> f64 {
    closed_form_radius(l) * 1.01
}

#[test]
fn equator_chain_matches_closed_form_spacing() {
    let chain = equator_chain(0.3);
    assert_eq!(chain.len(), 16);
    let alpha = closed_form_radius(8);
    for i in 0..16 {
        assert!((chain.radii[i] - alpha).abs() < 1e-12, "radius {}", chain.radii[i]);
        let spacing = chain.centers[i].angle_to(chain.centers[(i + 1) % 16]);
        assert!((spacing - TAU / 16.0).abs() < 1e-12);
        assert!(chain.centers[i].z.abs() < 1e-15);
    }
    let check = chain.check();
    assert!(check.ok, "{:?}", check.failures);
    assert!(check.max_orthogonality_residual < 1e-8);
}

#[test]
fn orthogonal_spacing_agrees_with_plain_formula() {
    for &(a, b) in &[(0.3, 0.2), (1e-3, 2e-3), (0.7, 0.01)] {
        let plain = (f64::cos(a) * f64::cos(b)).acos();
        assert!((orthogonal_spacing(a, b) - plain).abs() < 1e-9 * plain.max(1.0) + 1e-12);
    }
}

#[test]
fn consecutive_circles_are_orthogonal_by_inversive_product() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(400, 0.3, 3.0)).unwrap(), 0.12).unwrap();
    for i in 0..chain.len() {
        let j = (i + 1) % chain.len();
        let k = chain.circles[i].inversive_product(&chain.circles[j]);
        assert!(k.abs() < 1e-8, "pair {i}: {k}");
    }
}

#[test]
fn chain_covers_curve_at_ten_thousand_samples() {
    let line = SpherePolyline::new(wobbly_curve(300, 0.4, 2.0)).unwrap();
    let chain = build_chain(&line, 0.1).unwrap();
    for k in 0..10_000 {
        let p = line.point_at(line.length() * k as f64 / 10_000.0);
        assert!(chain.covering_disk(p).is_some(), "sample {k} uncovered");
    }
    for (c, a) in chain.centers.iter().zip(&chain.radii) {
        assert!(line.distance_to(*c) < 1e-9);
        assert!(*a <= 0.1);
    }
}

#[test]
fn nonadjacent_disks_are_disjoint_brute_force() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(200, 0.5, 4.0)).unwrap(), 0.08).unwrap();
    let n = chain.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            assert!(chain.circles[i].closed_disks_disjoint(&chain.circles[j], 0.0), "{i} {j}");
        }
    }
}

#[test]
fn obstacles_are_avoided() {
    let line = SpherePolyline::equator(128);
    // A cap just north of the equator near longitude -pi/2.
    let obstacle = cap_at(0.25, -PI / 2.0, 0.1);
    let opts = ChainOptions { obstacles: vec![obstacle], ..Default::default() };
    let chain = build_chain_with(&line, 0.2, &opts).unwrap();
    for c in &chain.circles {
        assert!(c.closed_disks_disjoint(&obstacle, 0.0));
    }
    assert!(chain.check().ok);
}

#[test]
fn corners_get_forced_centres() {
    // Spherical square: four great-circle arcs.
    let sq: Vec<Point> = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
        .iter()
        .map(|&(x, y)| Vec3::new(x * 0.5, y * 0.5, 1.0).normalized())
        .collect();
    let line = SpherePolyline::new(sq.clone()).unwrap();
    let opts = ChainOptions { corners: vec![0, 1, 2, 3], ..Default::default() };
    let chain = build_chain_with(&line, 0.1, &opts).unwrap();
    for v in &sq {
        assert!(chain.centers.iter().any(|c| c.angle_to(*v) < 1e-12));
    }
    assert!(chain.check().ok, "{:?}", chain.check().failures);
}

#[test]
fn oversized_delta_for_tight_curve_is_clamped_not_overlapping() {
    // Two nearly parallel strands: radii follow the clearance, not delta.
    let line = SpherePolyline::new(wobbly_curve(600, 0.05, 1.0)).unwrap();
    let chain = build_chain(&line, 0.9).unwrap();
    assert!(chain.check().ok);
}

#[test]
fn self_intersecting_polyline_is_rejected() {
    let bow: Vec<Point> = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]
        .iter()
        .map(|&(x, y)| Vec3::new(x * 0.3, y * 0.3, 1.0).normalized())
        .collect();
    let err = build_chain(&SpherePolyline::new(bow).unwrap(), 0.05).unwrap_err();
    assert!(matches!(err, ChainError::InvalidPolyline(_)), "{err}");
}

#[test]
fn chain_round_trips_through_json() {
    let chain = equator_chain(0.3);
    let s = serde_json::to_string(&chain).unwrap();
    let back: CoveringChain = serde_json::from_str(&s).unwrap();
    assert_eq!(back, chain);
}

#[test]
fn relations_hold_for_equator_chains() {
    for l in [3usize, 4, 5, 8] {
        let chain = equator_chain(delta_for(l));
        assert_eq!(chain.len(), 2 * l, "L = {l}");
        let group = InversionGroup::new(chain).unwrap();
        let report = verify_relations(&group, 1e-9);
        assert!(report.pass, "L = {l}: {:?}", report.failures);
        assert!(group.generators_f.iter().all(|f| f.is_reversing()));
        assert!(group.generators_g.iter().all(|g| !g.is_reversing()));
    }
}

#[test]
fn relations_hold_for_non_fuchsian_chain() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(300, 0.3, 3.0)).unwrap(), 0.15).unwrap();
    let report = verify_relations(&InversionGroup::new(chain).unwrap(), 1e-9);
    assert!(report.pass, "{:?}", report.failures);
}

#[test]
fn perturbed_radius_breaks_g_square() {
    let chain = equator_chain(0.3);
    let mut radii = chain.radii.clone();
    radii[3] += 1e-3;
    let bad = CoveringChain::from_caps(chain.centers.clone(), radii, chain.target_curve.clone(), 0.31).unwrap();
    let report = verify_relations(&InversionGroup::new(bad.clone()).unwrap(), 1e-9);
    assert!(!report.pass);
    assert!(report.failures.iter().any(|f| f.starts_with("g_3^2") || f.starts_with("g_4^2")));
    assert!(report.max_f_square < 1e-10);
    assert!(!bad.check().ok);
}

#[test]
fn product_relation_for_l3() {
    let group = InversionGroup::new(equator_chain(delta_for(3))).unwrap();
    assert_eq!(group.chain.len(), 6);
    assert!(verify_relations(&group, 1e-9).product < 1e-9);
}

#[test]
fn word_evaluation() {
    let group = InversionGroup::new(equator_chain(0.3)).unwrap();
    let w = GroupWord { letters: vec![2, 3, 2, 3] };
    assert!(w.is_reduced() && w.is_even());
    // (f2 f3)^2 = g2^2 = id.
    assert!(group.evaluate(&w).distance_to_identity() < 1e-9);
    assert!(!GroupWord { letters: vec![1, 1] }.is_reduced());
}

/// Orbifold Euler characteristic of the sphere with 2L cone points of angle
/// pi, doubled for the surface cover; genus from chi = 2 - 2g.
fn euler_genus(l: usize) -> usize {
    let chi_orbifold = 2.0 - (2 * l) as f64 * (1.0 - 0.5);
    let chi_surface = 2.0 * chi_orbifold;
    ((2.0 - chi_surface) / 2.0).round() as usize
}

#[test]
fn genus_matches_euler_characteristic() {
    for l in [3usize, 4, 5, 8] {
        let chain = equator_chain(delta_for(l));
        assert_eq!(genus_of_quotient(&chain), l - 1);
        assert_eq!(genus_of_quotient(&chain), euler_genus(l));
    }
}

// --- pair products --------------------------------------------------------

fn cap_at(lat: f64, lon: f64, alpha: f64) -> Circle {
    let c = Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin());
    SphereCircle::cap(c, alpha).unwrap()
}

#[test]
fn disjoint_pair_is_loxodromic_with_fixed_points_in_disks() {
    let mut r = rng(11);
    for _ in 0..50 {
        let (c1, c2) = random_disjoint_pair(&mut r);
        match classify_pair_product(&c1, &c2) {
            PairClass::Loxodromic { fixed } => {
                for p in fixed {
                    assert!(c1.closed_disk_contains(p, 1e-9) || c2.closed_disk_contains(p, 1e-9));
                }
                let in1 = fixed.iter().filter(|p| c1.closed_disk_contains(**p, 1e-9)).count();
                assert_eq!(in1, 1);
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn tangent_pair_is_parabolic_at_tangency() {
    let mut r = rng(12);
    for _ in 0..30 {
        let c = random_unit(&mut r);
        let dir = c.cross(random_unit(&mut r)).normalized();
        let (a1, a2) = (r.gen_range(0.1..1.0), r.gen_range(0.1..1.0));
        let rot = |t: f64| Mat3::rotation(dir, t).apply(c);
        let c1 = SphereCircle::cap(c, a1).unwrap();
        let c2 = SphereCircle::cap(rot(a1 + a2), a2).unwrap();
        let touch = rot(a1);
        match classify_pair_product(&c1, &c2) {
            PairClass::Parabolic { fixed } => assert!((fixed - touch).norm() < 1e-8, "{}", (fixed - touch).norm()),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn orthogonal_pair_is_elliptic_with_intersection_fixed_points() {
    let mut r = rng(13);
    for _ in 0..30 {
        let (a1, a2) = (r.gen_range(0.1..1.2), r.gen_range(0.1..1.2));
        let c1 = cap_at(0.0, 0.0, a1);
        let c2 = cap_at(0.0, orthogonal_spacing(a1, a2), a2);
        let (p, q) = qfsurf_core::circle::intersection_points(&c1, &c2).unwrap();
        match classify_pair_product(&c1, &c2) {
            PairClass::EllipticOrder2 { fixed } => {
                let d = |x: Point| fixed.iter().map(|f| (*f - x).norm()).fold(f64::INFINITY, f64::min);
                assert!(d(p) < 1e-8 && d(q) < 1e-8);
            }
            other => panic!("{other:?}"),
        }
        // Orthogonal inversions commute.
        let f1 = inversion_in_circle(&c1).unwrap();
        let f2 = inversion_in_circle(&c2).unwrap();
        for _ in 0..100 {
            let x = random_unit(&mut r);
            let lhs = f1.compose(&f2).apply_sphere(x);
            let rhs = f2.compose(&f1).apply_sphere(x);
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }
}

#[test]
fn other_angles_classify_as_other() {
    // Circles meeting at 60 degrees: g is elliptic of order 3.
    let (a1, a2) = (0.5f64, 0.5f64);
    let spacing = (a1.cos() * a2.cos() + 0.5 * a1.sin() * a2.sin()).acos();
    let c1 = cap_at(0.0, 0.0, a1);
    let c2 = cap_at(0.0, spacing, a2);
    assert_eq!(classify_pair_product(&c1, &c2), PairClass::Other);
}

#[test]
fn squared_trace_matches_inversive_product() {
    // Oracle: for inversions in two circles, tr^2(f1 f2) = 4 <C1, C2>^2.
    let mut r = rng(14);
    for _ in 0..100 {
        let c1 = SphereCircle::cap(random_unit(&mut r), r.gen_range(0.05..1.4)).unwrap();
        let c2 = SphereCircle::cap(random_unit(&mut r), r.gen_range(0.05..1.4)).unwrap();
        let g = inversion_in_circle(&c1).unwrap().compose(&inversion_in_circle(&c2).unwrap());
        let t2 = g.trace() * g.trace();
        let k = c1.inversive_product(&c2);
        assert!((t2.re - 4.0 * k * k).abs() < 1e-8 * (1.0 + t2.norm()), "{t2} vs {}", 4.0 * k * k);
        assert!(t2.im.abs() < 1e-8 * (1.0 + t2.norm()));
    }
}

// --- limit set ------------------------------------------------------------

#[test]
fn fuchsian_cloud_lies_on_the_equator() {
    let group = InversionGroup::new(equator_chain(0.3)).unwrap();
    let cloud = limit_set(&group, 1e-3, 40);
    assert!(cloud.points.len() > 1000);
    for p in &cloud.points {
        assert!(p.z.abs() < 1e-6, "{p:?}");
    }
    assert_eq!(cloud.unpruned, 0);
    assert!(cloud.warning().is_none());
}

// The z's are fixed points of the elliptic g's, not limit points: on the
// equator chain each one sits off the circle by exactly its latitude.
#[test]
fn intersection_points_sit_off_the_fuchsian_cloud_by_their_latitude() {
    let chain = equator_chain(0.3);
    let group = InversionGroup::new(chain.clone()).unwrap();
    let tol = 1e-3;
    let cloud = limit_set(&group, tol, 40);
    for (i, pair) in chain.intersections.iter().enumerate() {
        for z in pair {
            let d = cloud.points.iter().map(|p| p.angle_to(*z)).fold(f64::INFINITY, f64::min);
            let lat = z.z.asin().abs();
            assert!(lat > 0.1, "z_{i} latitude {lat}");
            assert!((d - lat).abs() < tol, "z_{i}: {d} vs {lat}");
        }
    }
}

#[test]
fn cloud_lies_in_union_of_disks() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(200, 0.3, 3.0)).unwrap(), 0.15).unwrap();
    let group = InversionGroup::new(chain.clone()).unwrap();
    let cloud = limit_set(&group, 1e-3, 60);
    for p in &cloud.points {
        assert!(chain.circles.iter().any(|c| c.closed_disk_contains(*p, 1e-12)), "{p:?}");
    }
}

#[test]
fn coarser_pruning_never_adds_points() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(200, 0.3, 3.0)).unwrap(), 0.15).unwrap();
    let group = InversionGroup::new(chain).unwrap();
    let mut prev = usize::MAX;
    for tol in [5e-4, 1e-3, 2e-3, 4e-3, 8e-3] {
        let n = limit_set(&group, tol, 60).points.len();
        assert!(n <= prev, "tol {tol}: {n} > {prev}");
        prev = n;
    }
}

/// Largest spherical stretch factor of `g` over `pts`, by finite differences.
fn max_stretch(g: &Mobius, pts: &[Point]) -> f64 {
    let h = 1e-6;
    pts.iter()
        .map(|&p| {
            let t = p.cross(if p.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) }).normalized();
            let q = (p + t * h).normalized();
            g.apply_sphere(p).angle_to(g.apply_sphere(q)) / p.angle_to(q)
        })
        .fold(1.0, f64::max)
}

// A cloud point sits up to prune_tol/2 from the true limit set, and g can
// stretch that error, so the resolution bound is scaled by g's stretch.
#[test]
fn cloud_is_invariant_under_even_generators() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(200, 0.3, 3.0)).unwrap(), 0.15).unwrap();
    let group = InversionGroup::new(chain).unwrap();
    let tol = 2e-3;
    let cloud = limit_set(&group, tol, 60);
    for i in [0usize, 5, 11] {
        let g = &group.generators_g[i % group.generators_g.len()];
        let moved: Vec<Point> = cloud.points.iter().map(|p| g.apply_sphere(*p)).collect();
        let k = max_stretch(g, &cloud.points).max(max_stretch(&g.inverse(), &cloud.points));
        let h = hausdorff(&moved, &cloud.points);
        assert!(h <= 2.0 * tol * k, "g_{i}: {h} with stretch {k}");
    }
}

#[test]
fn equator_cloud_is_invariant_up_to_stretch() {
    let group = InversionGroup::new(equator_chain(0.3)).unwrap();
    let tol = 1e-3;
    let cloud = limit_set(&group, tol, 40);
    for g in &group.generators_g {
        let moved: Vec<Point> = cloud.points.iter().map(|p| g.apply_sphere(*p)).collect();
        let k = max_stretch(g, &cloud.points).max(max_stretch(&g.inverse(), &cloud.points));
        let h = hausdorff(&moved, &cloud.points);
        assert!(h <= 2.0 * tol * k, "{h} with stretch {k}");
    }
}

#[test]
fn halving_prune_tol_stays_close() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(200, 0.3, 3.0)).unwrap(), 0.15).unwrap();
    let group = InversionGroup::new(chain).unwrap();
    let coarse = limit_set(&group, 4e-3, 60);
    let fine = limit_set(&group, 2e-3, 60);
    assert!(hausdorff(&coarse.points, &fine.points) <= 4e-3);
}

#[test]
fn limit_set_is_deterministic_across_thread_counts() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(200, 0.3, 3.0)).unwrap(), 0.15).unwrap();
    let group = InversionGroup::new(chain).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&limit_set(&group, 2e-3, 60)).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(4));
}

#[test]
fn max_depth_cut_is_reported() {
    let group = InversionGroup::new(equator_chain(0.3)).unwrap();
    let cloud = limit_set(&group, 1e-6, 3);
    assert!(cloud.unpruned > 0);
    assert!(cloud.warning().is_some());
    assert!(cloud.depth <= 3);
}

#[test]
fn thinning_respects_resolution() {
    let mut r = rng(15);
    let pts: Vec<Point> = (0..3000).map(|_| random_unit(&mut r)).collect();
    let kept = thin_points(pts.clone(), 0.05);
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            assert!((kept[i] - kept[j]).norm() >= 0.05);
        }
    }
    // Every dropped point is near a kept one.
    assert!(directed_hausdorff(&pts, &kept) < 0.05);
}

#[test]
fn chaos_game_points_lie_on_fuchsian_circle() {
    let group = InversionGroup::new(equator_chain(0.3)).unwrap();
    let pts = chaos_game(&group, 2000, 7);
    assert_eq!(pts.len(), 2000);
    assert!(pts.iter().all(|p| p.z.abs() < 1e-9));
}

// --- neighbourhood and regions -------------------------------------------

#[test]
fn neighborhood_holds_for_equator_and_fails_when_shifted() {
    let chain = equator_chain(0.3);
    let group = InversionGroup::new(chain.clone()).unwrap();
    let cloud = limit_set(&group, 1e-3, 40);
    let rep = neighborhood_report(&cloud, &chain);
    assert!(rep.pass && rep.max_distance < 1e-9);
    assert!(verify_neighborhood(&cloud, &chain));
    let shift = 2.0 * chain.delta;
    let mut moved = cloud.clone();
    for p in moved.points.iter_mut() {
        *p = (*p * shift.cos() + Vec3::e3() * shift.sin()).normalized();
    }
    assert!(!verify_neighborhood(&moved, &chain));
}

#[test]
fn neighborhood_holds_for_wobbly_chain() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(200, 0.3, 3.0)).unwrap(), 0.15).unwrap();
    let cloud = limit_set(&InversionGroup::new(chain.clone()).unwrap(), 1e-3, 60);
    let rep = neighborhood_report(&cloud, &chain);
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn equator_regions() {
    let chain = equator_chain(0.3);
    let reg = regions(&chain).unwrap();
    assert_eq!(reg.component_count(), 2);
    assert_eq!(reg.side_of(Vec3::e3()), Side::Plus);
    assert_eq!(reg.side_of(-Vec3::e3()), Side::Minus);
    for c in &chain.centers {
        assert_eq!(reg.side_of(*c), Side::Covered);
    }
    let north = SphereCircle::cap(Vec3::e3(), 0.3).unwrap();
    assert_eq!(reg.side_of_circle(&north, 32), Side::Plus);
}

#[test]
fn reversed_curve_swaps_sides() {
    let mut v = SpherePolyline::equator(64).vertices().to_vec();
    v.reverse();
    let chain = build_chain(&SpherePolyline::new(v).unwrap(), 0.3).unwrap();
    let reg = regions(&chain).unwrap();
    assert_eq!(reg.side_of(Vec3::e3()), Side::Minus);
    assert_eq!(reg.side_of(-Vec3::e3()), Side::Plus);
}

#[test]
fn regions_of_wobbly_curve_follow_latitude() {
    let chain = build_chain(&SpherePolyline::new(wobbly_curve(300, 0.3, 3.0)).unwrap(), 0.1).unwrap();
    let reg = regions(&chain).unwrap();
    let mut r = rng(16);
    for _ in 0..2000 {
        let p = random_unit(&mut r);
        let phi = p.y.atan2(p.x);
        let zc = 0.3 * (3.0 * phi).sin();
        let side = reg.side_of(p);
        if (p.z - zc).abs() > 0.25 {
            let want = if p.z > zc { Side::Plus } else { Side::Minus };
            assert_eq!(side, want, "{p:?}");
        }
    }
}

#[test]
fn broken_nerve_is_an_error() {
    let chain = equator_chain(0.3);
    let mut radii = chain.radii.clone();
    radii[0] = 0.6;
    let bad = CoveringChain::from_caps(chain.centers.clone(), radii, chain.target_curve.clone(), 0.6).unwrap();
    assert!(regions(&bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn built_chains_satisfy_invariants(amp in 0.0f64..0.5, k in 1u32..4, delta in 0.05f64..0.3) {
        let line = SpherePolyline::new(wobbly_curve(240, amp, k as f64)).unwrap();
        let chain = build_chain(&line, delta).unwrap();
        prop_assert!(chain.len() % 2 == 0 && chain.len() >= 6);
        let check = chain.check();
        prop_assert!(check.ok, "{:?}", check.failures);
        prop_assert!(check.max_orthogonality_residual < 1e-8);
        let report_len = chain.len();
        let report = verify_relations(&InversionGroup::new(chain).unwrap(), 1e-9);
        prop_assert!(report.max_f_square < 1e-9 && report.max_g_square < 1e-9, "{:?}", report.failures);
        // The product relation is exact in real arithmetic; in floating point
        // its error grows like machine epsilon times the square of the largest
        // partial product per factor. The constant 16 is empirical.
        let bound = 1e-9f64.max(16.0 * f64::EPSILON * report.conditioning.powi(2) * report_len as f64);
        prop_assert!(report.product < bound, "{} vs {bound}", report.product);
    }
}

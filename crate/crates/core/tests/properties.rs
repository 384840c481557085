use coverplan_core::corpus::{random_convex_polygon, random_simple_polygon};
use coverplan_core::covergrid::{best_heading, headings, CoverageGrid};
use coverplan_core::decompose::decompose_msa;
use coverplan_core::geometry::{
    is_convex, msa_direction, point_segment_distance, signed_area, simplify_polyline,
    triangulate_ear_clip, Point2, Polygon,
};
use coverplan_core::replan::{area_error, classify_inliers, decide, ReplanAction};
use coverplan_core::sweep::{boustrophedon_polygon, sweep_count_for_span};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shoelace(v: &[Point2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

fn simple_polygon(seed: u64, n: usize) -> Polygon {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_simple_polygon(&mut rng, n, 10.0)
}

fn convex_polygon(seed: u64, n: usize) -> Polygon {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_convex_polygon(&mut rng, n, 4.0, 2.5)
}

/// Sutherland-Hodgman clip of convex `subject` by convex `clip`.
fn convex_intersection(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let side = |p: Point2| (b - a).cross(p - a);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let (p, q) = (input[j], input[(j + 1) % input.len()]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                out.push(p + (q - p) * (sp / (sp - sq)));
            }
        }
        if out.is_empty() {
            break;
        }
    }
    out
}

/// Perpendicular extent of `p` measured from edge `i`, by brute force.
fn brute_span(p: &Polygon, i: usize) -> f64 {
    let (a, b) = p.edge(i);
    let u = (b - a) * (1.0 / a.distance(b));
    p.vertices()
        .iter()
        .map(|&v| u.cross(v - a).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signed_area_flips_under_reversal(seed in any::<u64>(), n in 3usize..30) {
        let p = simple_polygon(seed, n);
        let mut rev = p.vertices().to_vec();
        rev.reverse();
        let a = signed_area(p.vertices()).unwrap();
        let b = signed_area(&rev).unwrap();
        prop_assert!((a + b).abs() <= 1e-9 * a.abs());
        prop_assert!((a - shoelace(p.vertices())).abs() <= 1e-9 * a.abs());
    }

    #[test]
    fn simplify_is_idempotent_and_faithful(
        pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..60),
        tol in 0.01f64..2.0,
    ) {
        let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        let once = simplify_polyline(&pts, tol);
        prop_assert_eq!(once.first(), pts.first());
        prop_assert_eq!(once.last(), pts.last());
        prop_assert_eq!(simplify_polyline(&once, tol), once.clone());
        for p in &pts {
            let d = once
                .windows(2)
                .map(|w| point_segment_distance(*p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(once.len() < 2 || d <= tol + 1e-9);
        }
    }

    #[test]
    fn ear_clipping_gives_n_minus_2_triangles(seed in any::<u64>(), n in 3usize..30, start in 0usize..30) {
        let p = simple_polygon(seed, n);
        let tris = triangulate_ear_clip(&p, start % n).unwrap();
        prop_assert_eq!(tris.len(), n - 2);
        let total: f64 = tris
            .iter()
            .map(|t| shoelace(&[p.vertex(t[0]), p.vertex(t[1]), p.vertex(t[2])]))
            .sum();
        for t in &tris {
            prop_assert!(shoelace(&[p.vertex(t[0]), p.vertex(t[1]), p.vertex(t[2])]) > 0.0);
        }
        prop_assert!((total - p.area()).abs() <= 1e-9 * p.area());
    }

    #[test]
    fn decomposition_is_a_convex_partition(seed in any::<u64>(), n in 5usize..26, k in 0usize..26) {
        let p = simple_polygon(seed, n);
        let cells = decompose_msa(&p, p.vertex(k % n), 0.25).unwrap();
        let total: f64 = cells.iter().map(|c| c.polygon.area()).sum();
        prop_assert!((total - p.area()).abs() <= 1e-9 * p.area());
        for c in &cells {
            let v = c.polygon.vertices();
            let m = v.len();
            prop_assert!((0..m).all(|i| (v[(i + 1) % m] - v[i]).cross(v[(i + 2) % m] - v[(i + 1) % m]) >= -1e-9));
        }
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                let overlap = convex_intersection(cells[i].polygon.vertices(), cells[j].polygon.vertices());
                let a = if overlap.len() < 3 { 0.0 } else { shoelace(&overlap).abs() };
                prop_assert!(a <= 1e-7 * p.area(), "cells {} and {} overlap by {}", i, j, a);
            }
        }
    }

    #[test]
    fn msa_minimizes_span_and_turns(seed in any::<u64>(), n in 3usize..16, r in 0.1f64..1.0) {
        let p = convex_polygon(seed, n);
        prop_assert!(is_convex(&p));
        let msa = msa_direction(&p).unwrap();
        let best = brute_span(&p, msa.edge_index);
        prop_assert!((best - msa.span).abs() <= 1e-9);
        let turns = |s: f64| sweep_count_for_span(s, r).saturating_sub(1);
        for i in 0..p.len() {
            prop_assert!(best <= brute_span(&p, i) + 1e-9);
            prop_assert!(turns(best) <= turns(brute_span(&p, i)));
        }
    }

    #[test]
    fn sweeps_cover_convex_cells(seed in any::<u64>(), n in 3usize..12) {
        let p = convex_polygon(seed, n);
        let r = 0.25;
        let path = boustrophedon_polygon(&p, r).unwrap();
        let mut grid = CoverageGrid::new(&p, r / 5.0).unwrap();
        grid.stamp_path(&path.waypoints, r);
        prop_assert!(grid.coverage_ratio().unwrap() >= 0.98);
    }

    #[test]
    fn coverage_is_monotone(seed in any::<u64>(), steps in prop::collection::vec((-5.0f64..5.0, -3.0f64..3.0), 1..20)) {
        let p = convex_polygon(seed, 6);
        let mut grid = CoverageGrid::new(&p, 0.05).unwrap();
        let mut last = 0.0;
        let mut prev = Point2::new(0.0, 0.0);
        for (x, y) in steps {
            let next = Point2::new(x, y);
            let gained = grid.stamp_segment(prev, next, 0.25);
            let ratio = grid.coverage_ratio().unwrap();
            prop_assert!(gained >= 0.0);
            prop_assert!(ratio >= last && ratio <= 1.0);
            last = ratio;
            prev = next;
        }
    }

    #[test]
    fn best_heading_matches_stamp_and_recount(
        seed in any::<u64>(),
        path in prop::collection::vec((-4.0f64..4.0, -2.5f64..2.5), 0..6),
        (x, y) in (-4.0f64..4.0, -2.5f64..2.5),
    ) {
        let p = convex_polygon(seed, 7);
        let r = 0.25;
        let mut grid = CoverageGrid::new(&p, r / 5.0).unwrap();
        let path: Vec<Point2> = path.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        grid.stamp_path(&path, r);
        let pose = Point2::new(x, y);
        let cands = headings(16);
        let (theta, gain) = best_heading(&grid, pose, 0.05, r, &cands).unwrap();
        let recount = |g: &CoverageGrid| {
            let f = g.frame();
            (0..f.height)
                .flat_map(|iy| (0..f.width).map(move |ix| (ix, iy)))
                .filter(|&(ix, iy)| g.is_covered(ix, iy))
                .count()
        };
        let before = recount(&grid);
        let mut expected: Option<(f64, f64)> = None;
        for &c in &cands {
            let mut g = grid.clone();
            g.stamp(pose + Point2::from_angle(c) * 0.05, r);
            let a = (recount(&g) - before) as f64 * grid.frame().cell_area();
            if expected.is_none_or(|(_, b)| a > b) {
                expected = Some((c, a));
            }
        }
        prop_assert_eq!((theta, gain), expected.unwrap());
    }

    #[test]
    fn decide_is_pure_and_strict(err in 0.0f64..10.0, thr in 0.0f64..10.0, seed in any::<u64>()) {
        let p = convex_polygon(seed, 5);
        let pose = p.vertex(0);
        let a = decide(err, thr, &p, pose);
        prop_assert_eq!(a.clone(), decide(err, thr, &p, pose));
        prop_assert_eq!(matches!(a, ReplanAction::ReplanFrom { .. }), err > thr);
        prop_assert_eq!(decide(thr, thr, &p, pose), ReplanAction::Continue);
    }

    #[test]
    fn matching_boundary_has_no_area_error(seed in any::<u64>(), n in 3usize..20) {
        let p = simple_polygon(seed, n);
        let (inliers, outliers) = classify_inliers(p.vertices(), &p, 1e-9);
        prop_assert!(outliers.is_empty());
        prop_assert_eq!(area_error(p.vertices(), &inliers).unwrap(), 0.0);
    }
}

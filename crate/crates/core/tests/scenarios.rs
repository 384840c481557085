use coverplan_core::geometry::{point_segment_distance, Point2, Polygon};
use coverplan_core::replan::replan_threshold;
use coverplan_core::sim::{run, EventOp, ReplanKind, WorldEvent, WorldSpec};
use coverplan_core::stitch::{plan_area, CoveragePlan};

const R: f64 = 0.25;

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
    Polygon::new(vec![
        Point2::new(x0, y0),
        Point2::new(x1, y0),
        Point2::new(x1, y1),
        Point2::new(x0, y1),
    ])
    .unwrap()
}

fn room() -> (Polygon, CoveragePlan) {
    let room = rect(0.0, 0.0, 10.0, 6.0);
    let plan = plan_area(&room, room.vertex(0), R).unwrap().plan;
    (room, plan)
}

/// Wall-side box `w` wide and `d` deep centered on the top wall.
fn wall_box(w: f64, d: f64) -> Polygon {
    rect(5.0 - w / 2.0, 6.0 - d, 5.0 + w / 2.0, 6.0)
}

fn with_box(room: &Polygon, b: Polygon) -> WorldSpec {
    let mut spec = WorldSpec::new(room.clone());
    spec.events.push(WorldEvent {
        time: 10.0,
        op: EventOp::AddObstacle,
        geometry: b,
    });
    spec
}

#[test]
fn static_room_follows_plan_exactly() {
    let (room, plan) = room();
    let report = run(&WorldSpec::new(room.clone()), plan.clone(), 0).unwrap();
    assert_eq!(report.visited_waypoints, plan.waypoints);
    assert!(report.metrics.completed);
    assert!(report.metrics.coverage_ratio >= 0.98);
    assert!(report.replans.is_empty());
    for p in &report.trajectory {
        assert!(room.contains(*p) || room.distance_to_boundary(*p) <= 1e-9, "{p:?} left the room");
        let d = plan
            .waypoints
            .windows(2)
            .map(|w| point_segment_distance(*p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(d <= 1e-9);
    }
}

#[test]
fn threshold_of_the_room() {
    let (_, plan) = room();
    // Every sweep line spans the 10 m length.
    assert!((replan_threshold(&plan, R).unwrap() - 2.5).abs() < 1e-9);
}

#[test]
fn bite_above_threshold_replans_once() {
    let (room, plan) = room();
    let thr = replan_threshold(&plan, R).unwrap();
    let b = wall_box(2.5, 2.0 * thr / 2.5);
    assert!((b.area() - 2.0 * thr).abs() < 1e-9);
    let report = run(&with_box(&room, b), plan, 0).unwrap();
    assert_eq!(report.metrics.replan_events, 1);
    assert_eq!(report.metrics.forced_replans, 0);
    assert_eq!(report.replans[0].kind, ReplanKind::Area);
    assert!(report.replans[0].error > thr);
    assert!(report.metrics.completed);
}

#[test]
fn bite_below_threshold_keeps_the_plan() {
    let (room, plan) = room();
    let thr = replan_threshold(&plan, R).unwrap();
    let b = wall_box(1.25, 0.5 * thr / 1.25);
    assert!((b.area() - 0.5 * thr).abs() < 1e-9);
    let bite = b.area();
    let report = run(&with_box(&room, b), plan, 0).unwrap();
    assert_eq!(report.metrics.replan_events, 0);
    assert!(report.metrics.coverage_ratio >= 1.0 - bite / room.area() - 1e-9);
}

#[test]
fn pose_noise_stays_in_envelope() {
    let (room, plan) = room();
    let sigma = 0.01;
    for seed in 1..=3 {
        let mut spec = WorldSpec::new(room.clone());
        spec.robot.pose_noise_sigma = sigma;
        let report = run(&spec, plan.clone(), seed).unwrap();
        assert!(report.replans.is_empty(), "seed {seed} replanned");
        for p in &report.trajectory {
            let d = plan
                .waypoints
                .windows(2)
                .map(|w| point_segment_distance(*p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 5.0 * sigma, "seed {seed}: {p:?} is {d} from the plan");
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let (room, plan) = room();
    let mut spec = with_box(&room, wall_box(2.5, 2.0));
    spec.robot.pose_noise_sigma = 0.01;
    let a = run(&spec, plan.clone(), 42).unwrap();
    let b = run(&spec, plan, 42).unwrap();
    assert_eq!(a, b);
}

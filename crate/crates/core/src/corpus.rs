//! Seeded random polygons for tests, benchmarks and the `report` corpus.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Point2, Polygon};

/// Star-shaped simple polygon with `n` vertices around the origin.
///
/// Angles are jittered around an even spacing and radii drawn from
/// `[0.35, 1] · radius`, which keeps every vertex visible from the center and
/// so guarantees simplicity.
pub fn random_simple_polygon<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Polygon {
    assert!(n >= 3);
    loop {
        let step = TAU / n as f64;
        let phase = rng.random_range(0.0..TAU);
        let vertices: Vec<Point2> = (0..n)
            .map(|k| {
                let theta = phase + step * (k as f64 + rng.random_range(-0.3..0.3));
                let rho = radius * rng.random_range(0.35..1.0);
                Point2::from_angle(theta) * rho
            })
            .collect();
        if let Ok(p) = Polygon::new(vertices) {
            if min_vertex_angle_ok(&p) {
                return p;
            }
        }
    }
}

/// Convex polygon with `n` vertices on an ellipse with semi-axes `a ≥ b`.
pub fn random_convex_polygon<R: Rng>(rng: &mut R, n: usize, a: f64, b: f64) -> Polygon {
    assert!(n >= 3);
    loop {
        let step = TAU / n as f64;
        let phase = rng.random_range(0.0..TAU);
        let vertices: Vec<Point2> = (0..n)
            .map(|k| {
                let theta = phase + step * (k as f64 + rng.random_range(-0.25..0.25));
                Point2::new(a * libm::cos(theta), b * libm::sin(theta))
            })
            .collect();
        if let Ok(p) = Polygon::new(vertices) {
            return p;
        }
    }
}

/// Rejects near-degenerate spikes (interior angle under ~8°).
fn min_vertex_angle_ok(p: &Polygon) -> bool {
    let n = p.len();
    (0..n).all(|i| {
        let a = p.vertex(i + n - 1) - p.vertex(i);
        let b = p.vertex(i + 1) - p.vertex(i);
        let c = a.dot(b) / (a.norm() * b.norm());
        c < 0.99
    })
}

/// `count` simple polygons with vertex counts in `min_n..=max_n` and radii in
/// `[8, 20]` m, reproducible from `seed`.
pub fn seeded_corpus(seed: u64, count: usize, min_n: usize, max_n: usize) -> Vec<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(min_n..=max_n);
            let radius = rng.random_range(8.0..20.0);
            random_simple_polygon(&mut rng, n, radius)
        })
        .collect()
}

/// Convex counterpart of [`seeded_corpus`].
pub fn seeded_convex_corpus(seed: u64, count: usize, min_n: usize, max_n: usize) -> Vec<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(min_n..=max_n);
            let a = rng.random_range(3.0..6.0);
            let b = a * rng.random_range(0.5..1.0);
            random_convex_polygon(&mut rng, n, a, b)
        })
        .collect()
}

//! Random polygon generators for experiments, fixtures and tests.

use std::f64::consts::TAU;

use rand::Rng;

use crate::geometry::{Point, Polygon};

/// Angles in `[0, 2π)`, sorted, each gap at least `min_gap_frac·2π/n`.
fn spaced_angles<R: Rng + ?Sized>(rng: &mut R, n: usize, min_gap_frac: f64) -> Vec<f64> {
    let base = TAU / n as f64;
    let jitter = 0.5 * (1.0 - min_gap_frac) * base;
    let phase = rng.random_range(0.0..TAU);
    (0..n)
        .map(|k| phase + k as f64 * base + rng.random_range(-jitter..=jitter))
        .collect()
}

/// Convex polygon: `n` vertices on an ellipse with random axes and tilt.
pub fn convex_polygon<R: Rng + ?Sized>(rng: &mut R, n: usize, center: Point, radius: f64) -> Polygon {
    let angles = spaced_angles(rng, n, 0.4);
    let aspect = rng.random_range(0.5..=1.0);
    let tilt = rng.random_range(0.0..TAU);
    let (s, c) = tilt.sin_cos();
    let pts = angles
        .iter()
        .map(|a| {
            let (x, y) = (radius * a.cos(), radius * aspect * a.sin());
            Point::new(center.x + c * x - s * y, center.y + s * x + c * y)
        })
        .collect();
    Polygon::new(pts).expect("finite generated vertices")
}

/// Star-shaped (hence simple) polygon with radii in `[r_min, r_max]`.
pub fn star_polygon<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    center: Point,
    r_min: f64,
    r_max: f64,
) -> Polygon {
    let angles = spaced_angles(rng, n, 0.3);
    let pts = angles
        .iter()
        .map(|a| {
            let r = rng.random_range(r_min..=r_max);
            Point::new(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect();
    Polygon::new(pts).expect("finite generated vertices")
}

/// Rotated rectangle with the given side lengths.
pub fn rotated_rect(center: Point, width: f64, height: f64, angle: f64) -> Polygon {
    let (s, c) = angle.sin_cos();
    let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
    let pts = corners
        .iter()
        .map(|(u, v)| {
            let (x, y) = (u * width, v * height);
            Point::new(center.x + c * x - s * y, center.y + s * x + c * y)
        })
        .collect();
    Polygon::new(pts).expect("finite generated vertices")
}

/// Curved text-like band: an arc-shaped strip sampled with `per_side`
/// points along each long side.
pub fn curved_band(center: Point, radius: f64, thickness: f64, sweep: f64, per_side: usize) -> Polygon {
    let per_side = per_side.max(2);
    let start = -std::f64::consts::FRAC_PI_2 - 0.5 * sweep;
    let arc = |r: f64, k: usize| {
        let a = start + sweep * k as f64 / (per_side - 1) as f64;
        Point::new(center.x + r * a.cos(), center.y + radius + r * a.sin())
    };
    let outer = radius + 0.5 * thickness;
    let inner = radius - 0.5 * thickness;
    let mut pts: Vec<Point> = (0..per_side).map(|k| arc(outer, k)).collect();
    pts.extend((0..per_side).rev().map(|k| arc(inner, k)));
    Polygon::new(pts).expect("finite generated vertices")
}

/// Largest vertex-to-vertex distance.
pub fn diameter(poly: &Polygon) -> f64 {
    let v = poly.vertices();
    let mut best: f64 = 0.0;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            best = best.max(v[i].distance(v[j]));
        }
    }
    best
}

//! Independent oracles shared by the integration suites. Nothing here calls
//! into the code path it is used to check.
#![allow(dead_code)]

use polytext::{Point, Polygon};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
    Polygon::new(vec![
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
    ])
    .unwrap()
}

pub fn xy(p: &Polygon) -> Vec<(f64, f64)> {
    p.vertices().iter().map(|v| (v.x, v.y)).collect()
}

/// Ear-clipping triangulation; returns the summed unsigned triangle area.
pub fn ear_clip_area(pts: &[(f64, f64)]) -> f64 {
    let tri = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        0.5 * ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0))
    };
    // orientation from the lowest-leftmost vertex
    let orient = {
        let n = pts.len();
        let k = (0..n)
            .min_by(|&i, &j| pts[i].partial_cmp(&pts[j]).unwrap())
            .unwrap();
        tri(pts[(k + n - 1) % n], pts[k], pts[(k + 1) % n]).signum()
    };
    let inside_tri = |p: (f64, f64), a, b, c| {
        let s1 = tri(a, b, p) * orient;
        let s2 = tri(b, c, p) * orient;
        let s3 = tri(c, a, p) * orient;
        s1 > 0.0 && s2 > 0.0 && s3 > 0.0
    };
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut total = 0.0;
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (a, b, c) = (pts[idx[(k + m - 1) % m]], pts[idx[k]], pts[idx[(k + 1) % m]]);
            if tri(a, b, c) * orient <= 0.0 {
                continue;
            }
            let blocked = idx
                .iter()
                .any(|&j| ![a, b, c].contains(&pts[j]) && inside_tri(pts[j], a, b, c));
            if !blocked {
                total += tri(a, b, c).abs();
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        assert!(clipped, "ear clipping stalled; polygon not simple?");
    }
    total + tri(pts[idx[0]], pts[idx[1]], pts[idx[2]]).abs()
}

/// Sum of pairwise consecutive distances, closing edge included.
pub fn direct_perimeter(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        })
        .sum()
}

/// Textbook crossing-number test (no boundary handling).
pub fn pnpoly(pts: &[(f64, f64)], x: f64, y: f64) -> bool {
    let n = pts.len();
    let mut c = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = pts[i];
        let (xj, yj) = pts[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            c = !c;
        }
        j = i;
    }
    c
}

/// Distance from a point to the closest point of a closed polyline.
pub fn boundary_distance(pts: &[(f64, f64)], x: f64, y: f64) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let (ex, ey) = (b.0 - a.0, b.1 - a.1);
            let l2 = ex * ex + ey * ey;
            let t = if l2 == 0.0 { 0.0 } else { (((x - a.0) * ex + (y - a.1) * ey) / l2).clamp(0.0, 1.0) };
            ((x - a.0 - t * ex).powi(2) + (y - a.1 - t * ey).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Gap between the nearest and second-nearest edge distance, counting edges
/// whose nearest points coincide (a shared vertex) as one.
pub fn nearest_edge_gap(pts: &[(f64, f64)], x: f64, y: f64) -> f64 {
    let n = pts.len();
    let mut near: Vec<(f64, (f64, f64))> = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let (ex, ey) = (b.0 - a.0, b.1 - a.1);
            let t = (((x - a.0) * ex + (y - a.1) * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
            let q = (a.0 + t * ex, a.1 + t * ey);
            (((x - q.0).powi(2) + (y - q.1).powi(2)).sqrt(), q)
        })
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first = near[0];
    near.iter()
        .skip(1)
        .find(|(_, q)| (q.0 - first.1 .0).abs() + (q.1 - first.1 .1).abs() > 1e-9)
        .map_or(f64::INFINITY, |(d, _)| d - first.0)
}

/// Central differences of a scalar function.
pub fn finite_diff<F: FnMut(&[f64]) -> f64>(x: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    out
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let s: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    d / s.max(1e-12)
}

/// Star-shaped simple polygon around `c` with radii in `[r0, r1]`.
pub fn random_star<R: Rng>(rng: &mut R, n: usize, c: (f64, f64), r0: f64, r1: f64) -> Polygon {
    let base = std::f64::consts::TAU / n as f64;
    let phase = rng.random_range(0.0..base);
    let pts = (0..n)
        .map(|k| {
            let a = phase + base * (k as f64 + rng.random_range(-0.3..0.3));
            let r = rng.random_range(r0..r1);
            Point::new(c.0 + r * a.cos(), c.1 + r * a.sin())
        })
        .collect();
    Polygon::new(pts).unwrap()
}

/// Convex polygon: points on a circle at sorted random angles.
pub fn random_convex<R: Rng>(rng: &mut R, n: usize, c: (f64, f64), r: f64) -> Polygon {
    let base = std::f64::consts::TAU / n as f64;
    let phase = rng.random_range(0.0..base);
    let pts = (0..n)
        .map(|k| {
            let a = phase + base * (k as f64 + rng.random_range(-0.3..0.3));
            Point::new(c.0 + r * a.cos(), c.1 + r * a.sin())
        })
        .collect();
    Polygon::new(pts).unwrap()
}

/// Sum of smooth-L1 over all coordinates for one explicit alignment.
pub fn aligned_smooth_l1(pred: &[f64], gt: &[f64], shift: usize) -> f64 {
    let n = pred.len() / 2;
    let f = |x: f64| if x.abs() < 1.0 { 0.5 * x * x } else { x.abs() - 0.5 };
    (0..n)
        .map(|i| {
            let k = (i + shift) % n;
            f(pred[2 * i] - gt[2 * k]) + f(pred[2 * i + 1] - gt[2 * k + 1])
        })
        .sum()
}

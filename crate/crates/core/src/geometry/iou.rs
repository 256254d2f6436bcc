use std::cmp::Ordering;

use super::polygon::{Point, Polygon};

/// Grid resolution used when either polygon is concave.
pub const DEFAULT_IOU_RESOLUTION: usize = 512;

/// Intersection-over-union of two polygons.
///
/// Convex pairs are clipped exactly; anything else is estimated by sampling
/// cell centers on a `resolution × resolution` grid over the union's
/// bounding box. Degenerate inputs give 0.
pub fn polygon_iou(a: &Polygon, b: &Polygon, resolution: usize) -> f64 {
    if a.is_degenerate() || b.is_degenerate() {
        return 0.0;
    }
    if a.vertices() == b.vertices() {
        return 1.0;
    }
    let (a, b) = canonical_order(a, b);
    if a.is_convex() && b.is_convex() {
        iou_convex_ordered(a, b)
    } else {
        iou_grid(a, b, resolution)
    }
}

/// Exact IoU for convex polygons via Sutherland–Hodgman clipping.
///
/// Returns `None` when either polygon is not convex.
pub fn iou_convex(a: &Polygon, b: &Polygon) -> Option<f64> {
    if !(a.is_convex() && b.is_convex()) {
        return None;
    }
    if a.is_degenerate() || b.is_degenerate() {
        return Some(0.0);
    }
    let (a, b) = canonical_order(a, b);
    Some(iou_convex_ordered(a, b))
}

fn iou_convex_ordered(a: &Polygon, b: &Polygon) -> f64 {
    let (area_a, area_b) = (a.area(), b.area());
    let inter = clip_convex(a, b).map(|p| polygon_area(&p)).unwrap_or(0.0);
    let inter = inter.clamp(0.0, area_a.min(area_b));
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

// Fixed argument order makes the clipping result, and so the IoU,
// bit-identical under swapping the inputs.
fn canonical_order<'a>(a: &'a Polygon, b: &'a Polygon) -> (&'a Polygon, &'a Polygon) {
    let key = |p: &Polygon| p.to_flat();
    let (ka, kb) = (key(a), key(b));
    let ord = ka
        .iter()
        .zip(&kb)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(ka.len().cmp(&kb.len()));
    if ord == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let s: f64 = (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum();
    0.5 * s.abs()
}

/// Clips convex `subject` by convex `clip`; both may have either orientation.
fn clip_convex(subject: &Polygon, clip: &Polygon) -> Option<Vec<Point>> {
    let subject = subject.normalized();
    let clip = clip.normalized();
    let mut output: Vec<Point> = subject.vertices().to_vec();
    for (ca, cb) in clip.edges() {
        if output.is_empty() {
            return None;
        }
        let edge = cb.sub(ca);
        if edge.norm() == 0.0 {
            continue;
        }
        let inside = |p: Point| edge.cross(p.sub(ca)) >= 0.0;
        let input = std::mem::take(&mut output);
        let m = input.len();
        for i in 0..m {
            let cur = input[i];
            let prev = input[(i + m - 1) % m];
            let (cur_in, prev_in) = (inside(cur), inside(prev));
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(prev, cur, ca, cb));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(prev, cur, ca, cb));
            }
        }
    }
    (output.len() >= 3).then_some(output)
}

fn line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let r = q.sub(p);
    let s = b.sub(a);
    let denom = r.cross(s);
    if denom == 0.0 {
        return p;
    }
    let t = a.sub(p).cross(s) / denom;
    p.add(r.scale(t))
}

/// Grid estimate of IoU, counting cell centers over the union bounding box
/// with the even-odd rule.
pub fn iou_grid(a: &Polygon, b: &Polygon, resolution: usize) -> f64 {
    if a.is_degenerate() || b.is_degenerate() {
        return 0.0;
    }
    let bbox = a.bbox().union(&b.bbox());
    let (w, h) = (bbox.width(), bbox.height());
    if w <= 0.0 || h <= 0.0 || resolution == 0 {
        return 0.0;
    }
    let cw = w / resolution as f64;
    let ch = h / resolution as f64;
    let mut row_a = vec![false; resolution];
    let mut row_b = vec![false; resolution];
    let mut xs = Vec::new();
    let (mut inter, mut union) = (0u64, 0u64);
    for row in 0..resolution {
        let y = bbox.min.y + (row as f64 + 0.5) * ch;
        fill_row(a, y, bbox.min.x, cw, &mut xs, &mut row_a);
        fill_row(b, y, bbox.min.x, cw, &mut xs, &mut row_b);
        for (&ia, &ib) in row_a.iter().zip(&row_b) {
            inter += (ia && ib) as u64;
            union += (ia || ib) as u64;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

// Marks cells of one scanline whose centers pass the crossing-parity test.
fn fill_row(poly: &Polygon, y: f64, x0: f64, cw: f64, xs: &mut Vec<f64>, row: &mut [bool]) {
    row.fill(false);
    xs.clear();
    for (a, b) in poly.edges() {
        if (a.y > y) != (b.y > y) {
            xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
    }
    xs.sort_by(f64::total_cmp);
    let res = row.len() as f64;
    for span in xs.chunks_exact(2) {
        let start = ((span[0] - x0) / cw - 0.5).ceil().clamp(0.0, res) as usize;
        let end = ((span[1] - x0) / cw - 0.5).ceil().clamp(0.0, res) as usize;
        for cell in &mut row[start..end.max(start)] {
            *cell = true;
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[allow(clippy::should_implement_trait)]
impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Point) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min: Point::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Point::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }
}

/// Closed polygon in image coordinates (x right, y down).
///
/// [`Polygon::new`] normalizes the vertex order to screen-clockwise, which
/// under y-down coordinates is a positive shoelace sum. The first vertex is
/// kept in place when the order is flipped. [`Polygon::from_ordered`] keeps
/// the order exactly as given; predictions and optimizer iterates use it so
/// that vertex indices stay stable under perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let mut poly = Self::from_ordered(vertices)?;
        if poly.signed_area() < 0.0 {
            poly.vertices[1..].reverse();
        }
        Ok(poly)
    }

    pub fn from_ordered(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "vertex {i} has a non-finite coordinate"
            )));
        }
        Ok(Self { vertices })
    }

    /// Builds from interleaved `x0, y0, x1, y1, ...` keeping the given order.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "odd coordinate count {}",
                coords.len()
            )));
        }
        Self::from_ordered(
            coords
                .chunks_exact(2)
                .map(|c| Point::new(c[0], c[1]))
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    /// Iterator over `(start, end)` of every edge, closing edge last.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let v = &self.vertices;
        v.iter()
            .copied()
            .zip(v[1..].iter().copied().chain(std::iter::once(v[0])))
    }

    /// Shoelace area; positive for screen-clockwise order in y-down
    /// coordinates.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn bbox(&self) -> BBox {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for p in &self.vertices[1..] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BBox { min, max }
    }

    /// Area centroid; falls back to the vertex mean for degenerate polygons.
    pub fn centroid(&self) -> Point {
        let a = self.signed_area();
        if a.abs() < 1e-300 {
            let n = self.vertices.len() as f64;
            let s = self
                .vertices
                .iter()
                .fold(Point::default(), |acc, p| acc.add(*p));
            return s.scale(1.0 / n);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn is_degenerate(&self) -> bool {
        let scale = {
            let b = self.bbox();
            b.width().max(b.height())
        };
        scale == 0.0 || self.area() <= 1e-12 * scale * scale
    }

    /// Even-odd membership with boundary points counted as inside.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if point_on_segment(p, a, b) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Membership of the cell centers `x0 + (j + 0.5)·dx` on the scanline
    /// at `y`, identical to calling [`Polygon::contains`] on each.
    ///
    /// Parity comes from the sorted edge crossings; cells that fall in the
    /// tolerance band of an edge are re-tested with the full predicate.
    pub fn scan_row(&self, y: f64, x0: f64, dx: f64, out: &mut [bool]) {
        let mut crossings = Vec::new();
        let mut near: Vec<(f64, f64)> = Vec::new();
        for (a, b) in self.edges() {
            if (a.y > y) != (b.y > y) {
                crossings.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
            let (ex, ey) = (b.x - a.x, b.y - a.y);
            let tol = 2e-10 * ex.abs().max(ey.abs()).max(1.0);
            if y < a.y.min(b.y) - tol || y > a.y.max(b.y) + tol {
                continue;
            }
            let (lo, hi) = if ey == 0.0 {
                (a.x.min(b.x), a.x.max(b.x))
            } else {
                let s0 = ((y - tol - a.y) / ey).clamp(0.0, 1.0);
                let s1 = ((y + tol - a.y) / ey).clamp(0.0, 1.0);
                let (xa, xb) = (a.x + s0 * ex, a.x + s1 * ex);
                (xa.min(xb), xa.max(xb))
            };
            near.push((lo - tol, hi + tol));
        }
        crossings.sort_by(f64::total_cmp);

        // number of crossings strictly right of the current cell center
        let mut passed = 0;
        for (j, slot) in out.iter_mut().enumerate() {
            let x = x0 + (j as f64 + 0.5) * dx;
            if near.iter().any(|&(lo, hi)| x >= lo && x <= hi) {
                *slot = self.contains(Point::new(x, y));
                continue;
            }
            while passed < crossings.len() && crossings[passed] <= x {
                passed += 1;
            }
            *slot = (crossings.len() - passed) % 2 == 1;
        }
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        self.edges().any(|(a, b)| point_on_segment(p, a, b))
    }

    /// True when all turns share one direction and the boundary winds once.
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        let mut sign = 0.0_f64;
        let mut turning = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            let e1 = b.sub(a);
            let e2 = c.sub(b);
            if e1.norm() == 0.0 || e2.norm() == 0.0 {
                continue;
            }
            let cr = e1.cross(e2);
            let scale = e1.norm() * e2.norm();
            if cr.abs() > 1e-12 * scale {
                if sign == 0.0 {
                    sign = cr.signum();
                } else if cr.signum() != sign {
                    return false;
                }
            }
            turning += cr.atan2(e1.dot(e2));
        }
        sign != 0.0 && (turning.abs() - std::f64::consts::TAU).abs() < 1e-6
    }

    /// No two non-adjacent edges touch and no adjacent pair folds back.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        let edges: Vec<(Point, Point)> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if adjacent {
                    // shared vertex; reject only collinear overlap
                    let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    let u = p.sub(shared);
                    let v = q.sub(shared);
                    if u.cross(v).abs() <= 1e-12 * u.norm() * v.norm() && u.dot(v) > 0.0 {
                        return false;
                    }
                } else if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Cyclic relabeling: vertex `i` of the result is vertex `(i + shift) % n`.
    pub fn rotated(&self, shift: usize) -> Polygon {
        let n = self.vertices.len();
        Polygon {
            vertices: (0..n).map(|i| self.vertices[(i + shift) % n]).collect(),
        }
    }

    pub fn translated(&self, d: Point) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|p| p.add(d)).collect(),
        }
    }

    pub fn scaled_about(&self, center: Point, s: f64) -> Polygon {
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|p| center.add(p.sub(center).scale(s)))
                .collect(),
        }
    }

    /// Same polygon with the vertex order flipped to a positive shoelace sum.
    pub fn normalized(&self) -> Polygon {
        let mut out = self.clone();
        if out.signed_area() < 0.0 {
            out.vertices[1..].reverse();
        }
        out
    }

    /// `n` points at uniform arc-length spacing, starting at the first
    /// vertex and walking in the existing vertex order.
    pub fn resample(&self, n: usize) -> Result<Polygon> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "resample count must be at least 3, got {n}"
            )));
        }
        let m = self.vertices.len();
        let lengths: Vec<f64> = self.edges().map(|(a, b)| a.distance(b)).collect();
        let total: f64 = lengths.iter().sum();
        if total == 0.0 {
            return Ok(Polygon {
                vertices: vec![self.vertices[0]; n],
            });
        }
        let mut cumulative = Vec::with_capacity(m + 1);
        cumulative.push(0.0);
        for len in &lengths {
            cumulative.push(cumulative.last().unwrap() + len);
        }

        let spacing = total / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut edge = 0;
        for k in 0..n {
            let t = k as f64 * spacing;
            while edge + 1 < m && cumulative[edge + 1] <= t {
                edge += 1;
            }
            // skip zero-length edges so the interpolation is well defined
            while edge + 1 < m && lengths[edge] == 0.0 {
                edge += 1;
            }
            let a = self.vertices[edge];
            let b = self.vertices[(edge + 1) % m];
            let frac = ((t - cumulative[edge]) / lengths[edge]).clamp(0.0, 1.0);
            out.push(a.add(b.sub(a).scale(frac)));
        }
        Ok(Polygon { vertices: out })
    }
}

/// Minimum distance from `p` to any point of the boundary.
pub fn distance_to_boundary(poly: &Polygon, p: Point) -> f64 {
    poly.edges()
        .map(|(a, b)| segment_projection(p, a, b).1)
        .fold(f64::INFINITY, f64::min)
}

/// Projection of `p` onto segment `ab`: clamped parameter and distance.
pub(crate) fn segment_projection(p: Point, a: Point, b: Point) -> (f64, f64) {
    let e = b.sub(a);
    let len2 = e.dot(e);
    let t = if len2 > 0.0 {
        (p.sub(a).dot(e) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (t, p.distance(a.add(e.scale(t))))
}

fn point_on_segment(p: Point, a: Point, b: Point) -> bool {
    // cheap reject outside the padded segment bbox
    let tol = 2e-10 * (b.x - a.x).abs().max((b.y - a.y).abs()).max(1.0);
    if p.x < a.x.min(b.x) - tol
        || p.x > a.x.max(b.x) + tol
        || p.y < a.y.min(b.y) - tol
        || p.y > a.y.max(b.y) + tol
    {
        return false;
    }
    let e = b.sub(a);
    let len2 = e.dot(e);
    let t = if len2 > 0.0 {
        (p.sub(a).dot(e) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = p.sub(a.add(e.scale(t)));
    d.dot(d) <= 1e-20 * len2.max(1.0)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    point_on_segment(a, c, d)
        || point_on_segment(b, c, d)
        || point_on_segment(c, a, b)
        || point_on_segment(d, a, b)
}

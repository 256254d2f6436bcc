use crate::error::{Error, Result};

use super::polygon::{Point, Polygon};

/// Square sampling window: `resolution × resolution` cells covering
/// `[origin.x, origin.x + width] × [origin.y, origin.y + height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: Point,
    pub width: f64,
    pub height: f64,
    pub resolution: usize,
}

impl Frame {
    pub fn new(origin: Point, width: f64, height: f64, resolution: usize) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "frame extent must be positive, got {width} x {height}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidInput("frame origin is not finite".into()));
        }
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "frame resolution must be at least 2, got {resolution}"
            )));
        }
        Ok(Self {
            origin,
            width,
            height,
            resolution,
        })
    }

    /// Bounding box of all polygons, padded by `pad` of its extent on every
    /// side, then squared by padding the short axis symmetrically.
    pub fn square_around(polys: &[&Polygon], pad: f64, resolution: usize) -> Result<Self> {
        let mut iter = polys.iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidInput("no polygons to frame".into()))?;
        let bbox = iter.fold(first.bbox(), |acc, p| acc.union(&p.bbox()));
        let (w, h) = (bbox.width(), bbox.height());
        let side = w.max(h) * (1.0 + 2.0 * pad);
        if side <= 0.0 {
            return Err(Error::InvalidInput(
                "polygons have zero extent; frame is degenerate".into(),
            ));
        }
        let center = Point::new(0.5 * (bbox.min.x + bbox.max.x), 0.5 * (bbox.min.y + bbox.max.y));
        Frame::new(
            Point::new(center.x - 0.5 * side, center.y - 0.5 * side),
            side,
            side,
            resolution,
        )
    }

    pub fn cell_width(&self) -> f64 {
        self.width / self.resolution as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.height / self.resolution as f64
    }

    pub fn cell_count(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_width(),
            self.origin.y + (row as f64 + 0.5) * self.cell_height(),
        )
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Row-major occupancy grid with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    resolution: usize,
    data: Vec<f64>,
}

impl Mask {
    pub fn zeros(resolution: usize) -> Self {
        Self {
            resolution,
            data: vec![0.0; resolution * resolution],
        }
    }

    pub fn from_data(resolution: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != resolution * resolution {
            return Err(Error::ShapeMismatch(format!(
                "mask of resolution {resolution} needs {} cells, got {}",
                resolution * resolution,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("mask value {v} outside [0, 1]")));
        }
        Ok(Self { resolution, data })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.resolution + col]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// Cell value 1 iff the cell center is inside the polygon (boundary
/// inclusive). Degenerate polygons give an empty mask.
pub fn rasterize_hard(poly: &Polygon, frame: &Frame) -> Mask {
    let mut mask = Mask::zeros(frame.resolution);
    if poly.is_degenerate() {
        return mask;
    }
    let res = frame.resolution;
    let mut inside = vec![false; res];
    for row in 0..res {
        let y = frame.cell_center(row, 0).y;
        poly.scan_row(y, frame.origin.x, frame.cell_width(), &mut inside);
        for (cell, &hit) in mask.data[row * res..(row + 1) * res].iter_mut().zip(&inside) {
            if hit {
                *cell = 1.0;
            }
        }
    }
    mask
}

/// Per-cell derivative of the soft occupancy. Only the two endpoints of the
/// nearest edge carry weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrad {
    pub edge: usize,
    pub d_start: Point,
    pub d_end: Point,
}

/// Soft mask plus its Jacobian w.r.t. the polygon vertices.
#[derive(Debug, Clone)]
pub struct SoftMask {
    pub mask: Mask,
    grads: Vec<CellGrad>,
    vertex_count: usize,
}

impl SoftMask {
    pub fn cell_grad(&self, cell: usize) -> &CellGrad {
        &self.grads[cell]
    }

    /// Dense gradient of one cell w.r.t. the interleaved vertex coordinates.
    pub fn dense_gradient(&self, cell: usize) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.vertex_count];
        self.scatter(cell, 1.0, &mut out);
        out
    }

    /// Vector-Jacobian product: `Σ_cells weight[cell] · ∂mask[cell]/∂vertices`.
    pub fn vjp(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.grads.len());
        let mut out = vec![0.0; 2 * self.vertex_count];
        for (cell, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                self.scatter(cell, w, &mut out);
            }
        }
        out
    }

    fn scatter(&self, cell: usize, w: f64, out: &mut [f64]) {
        let g = &self.grads[cell];
        let i = g.edge;
        let j = (i + 1) % self.vertex_count;
        out[2 * i] += w * g.d_start.x;
        out[2 * i + 1] += w * g.d_start.y;
        out[2 * j] += w * g.d_end.x;
        out[2 * j + 1] += w * g.d_end.y;
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Signed-distance sigmoid rasterizer.
///
/// Each cell holds `sigmoid(s·d/tau)` with `d` the distance from the cell
/// center to the nearest boundary point and `s = +1` inside, `-1` outside.
/// Nearest-edge ties go to the lowest edge index.
pub fn rasterize_soft(poly: &Polygon, frame: &Frame, tau: f64) -> Result<SoftMask> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    let n = poly.len();
    let res = frame.resolution;
    let zero = CellGrad {
        edge: 0,
        d_start: Point::default(),
        d_end: Point::default(),
    };
    if poly.is_degenerate() {
        return Ok(SoftMask {
            mask: Mask::zeros(res),
            grads: vec![zero; res * res],
            vertex_count: n,
        });
    }
    let orientation = poly.signed_area().signum();
    let verts = poly.vertices();

    let mut data = Vec::with_capacity(res * res);
    let mut grads = Vec::with_capacity(res * res);
    // (start, direction, 1/|direction|²) per edge
    let edges: Vec<(Point, Point, f64)> = poly
        .edges()
        .map(|(a, b)| {
            let e = b.sub(a);
            let len2 = e.dot(e);
            (a, e, if len2 > 0.0 { 1.0 / len2 } else { 0.0 })
        })
        .collect();
    let mut inside = vec![false; res];
    for row in 0..res {
        let y = frame.cell_center(row, 0).y;
        poly.scan_row(y, frame.origin.x, frame.cell_width(), &mut inside);
        for (col, &is_inside) in inside.iter().enumerate() {
            let p = frame.cell_center(row, col);
            let mut best = (0usize, 0.0, f64::INFINITY);
            for (i, &(a, e, inv_len2)) in edges.iter().enumerate() {
                let w = p.sub(a);
                let t = (w.dot(e) * inv_len2).clamp(0.0, 1.0);
                let d = w.sub(e.scale(t));
                let d2 = d.dot(d);
                if d2 < best.2 {
                    best = (i, t, d2);
                }
            }
            let (edge, t, d) = (best.0, best.1, best.2.sqrt());
            let a = verts[edge];
            let b = verts[(edge + 1) % n];
            let sign = if is_inside { 1.0 } else { -1.0 };
            let v = sigmoid(sign * d / tau);

            // gradient of the signed distance w.r.t. a moving boundary point
            let outward = if d > 1e-12 * frame.width {
                let q = a.add(b.sub(a).scale(t));
                p.sub(q).scale(-sign / d)
            } else {
                let e = b.sub(a);
                let len = e.norm();
                if len > 0.0 {
                    Point::new(e.y, -e.x).scale(orientation / len)
                } else {
                    Point::default()
                }
            };
            let k = v * (1.0 - v) / tau;
            data.push(v);
            grads.push(CellGrad {
                edge,
                d_start: outward.scale(k * (1.0 - t)),
                d_end: outward.scale(k * t),
            });
        }
    }
    Ok(SoftMask {
        mask: Mask { resolution: res, data },
        grads,
        vertex_count: n,
    })
}

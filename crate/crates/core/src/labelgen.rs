//! Per-level target maps from polygon annotations, and the inverse decode.
//!
//! An annotation is routed to every feature level whose text-level bounds
//! contain its area/perimeter ratio. On those levels each cell whose center
//! lies inside the (resampled) polygon becomes positive, and its coordinate
//! target holds the vertex offsets from the cell center divided by the
//! level's grid size.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub index: usize,
    pub map_size: usize,
    pub grid_size: f64,
    pub lower: f64,
    pub upper: f64,
}

impl LevelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) {
            return Err(Error::InvalidInput(format!(
                "level {}: lower bound {} not below upper bound {}",
                self.index, self.lower, self.upper
            )));
        }
        if !(self.grid_size > 0.0) || self.map_size == 0 {
            return Err(Error::InvalidInput(format!(
                "level {}: grid size and map size must be positive",
                self.index
            )));
        }
        Ok(())
    }

    /// Image-space pixel a cell stands for: `((col + 0.5)·g, (row + 0.5)·g)`.
    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point::new(
            (col as f64 + 0.5) * self.grid_size,
            (row as f64 + 0.5) * self.grid_size,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.map_size * self.map_size
    }

    pub fn contains_ratio(&self, r: f64) -> bool {
        self.lower <= r && r <= self.upper
    }
}

/// Feature map sizes, strides and text-level bounds for the seven levels.
pub const LEVEL_TABLE: [LevelSpec; 7] = [
    LevelSpec { index: 0, map_size: 64, grid_size: 8.0, lower: 1.2, upper: 10.0 },
    LevelSpec { index: 1, map_size: 32, grid_size: 16.0, lower: 7.2, upper: 20.0 },
    LevelSpec { index: 2, map_size: 16, grid_size: 32.0, lower: 14.4, upper: 35.2 },
    LevelSpec { index: 3, map_size: 8, grid_size: 64.0, lower: 28.8, upper: 49.0 },
    LevelSpec { index: 4, map_size: 6, grid_size: 85.0, lower: 38.9, upper: 85.4 },
    LevelSpec { index: 5, map_size: 4, grid_size: 128.0, lower: 57.6, upper: 140.8 },
    LevelSpec { index: 6, map_size: 2, grid_size: 256.0, lower: 115.2, upper: 268.8 },
];

pub fn default_levels() -> Vec<LevelSpec> {
    LEVEL_TABLE.to_vec()
}

/// Resample count for quadrilateral datasets.
pub const QUAD_VERTICES: usize = 4;
/// Resample count for curved-text datasets.
pub const CURVED_VERTICES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub polygon: Polygon,
    /// Don't-care region: excluded from training loss and from scoring.
    pub ignore: bool,
    pub text: Option<String>,
}

impl Annotation {
    pub fn new(polygon: Polygon) -> Self {
        Self {
            polygon,
            ignore: false,
            text: None,
        }
    }

    pub fn ignored(polygon: Polygon) -> Self {
        Self {
            polygon,
            ignore: true,
            text: Some("###".into()),
        }
    }
}

/// Area over perimeter, the reference scale used for level routing.
pub fn text_ratio(poly: &Polygon) -> Result<f64> {
    let perimeter = poly.perimeter();
    if !(perimeter > 0.0) {
        return Err(Error::InvalidInput("polygon has zero perimeter".into()));
    }
    Ok(poly.area() / perimeter)
}

/// Every level whose `[lower, upper]` holds the polygon's text ratio. The
/// bounds overlap, so an instance can land on two levels.
pub fn text_level(poly: &Polygon, levels: &[LevelSpec]) -> Result<Vec<usize>> {
    let r = text_ratio(poly)?;
    Ok(levels
        .iter()
        .filter(|l| l.contains_ratio(r))
        .map(|l| l.index)
        .collect())
}

/// The `n` vertices an annotation is regressed to. Polygons that already
/// have `n` vertices are used as annotated; others are resampled by arc
/// length from their first vertex.
pub fn target_vertices(poly: &Polygon, n: usize) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "vertex count must be at least 3, got {n}"
        )));
    }
    if poly.len() == n {
        Ok(poly.clone())
    } else {
        poly.resample(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    Negative,
    Positive,
    Ignore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelTargets {
    pub spec: LevelSpec,
    n: usize,
    labels: Vec<CellLabel>,
    instances: Vec<Option<usize>>,
    offsets: Vec<f64>,
}

impl LevelTargets {
    fn empty(spec: LevelSpec, n: usize) -> Self {
        let cells = spec.cell_count();
        Self {
            spec,
            n,
            labels: vec![CellLabel::Negative; cells],
            instances: vec![None; cells],
            offsets: vec![0.0; cells * 2 * n],
        }
    }

    fn idx(&self, row: usize, col: usize) -> usize {
        assert!(row < self.spec.map_size && col < self.spec.map_size);
        row * self.spec.map_size + col
    }

    pub fn label(&self, row: usize, col: usize) -> CellLabel {
        self.labels[self.idx(row, col)]
    }

    pub fn labels(&self) -> &[CellLabel] {
        &self.labels
    }

    pub fn instance(&self, row: usize, col: usize) -> Option<usize> {
        self.instances[self.idx(row, col)]
    }

    /// Normalized `x0, y0, x1, y1, ...` targets; `None` unless positive.
    pub fn offsets(&self, row: usize, col: usize) -> Option<&[f64]> {
        let i = self.idx(row, col);
        (self.labels[i] == CellLabel::Positive)
            .then(|| &self.offsets[i * 2 * self.n..(i + 1) * 2 * self.n])
    }

    /// Row-major dense offsets, zero at non-positive cells.
    pub fn dense_offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// `(row, col)` of every positive cell in row-major order.
    pub fn positive_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.spec.map_size;
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == CellLabel::Positive)
            .map(move |(i, _)| (i / m, i % m))
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == CellLabel::Positive).count()
    }

    /// Classification targets with ignore cells as `None`.
    pub fn class_targets(&self) -> Vec<Option<bool>> {
        self.labels
            .iter()
            .map(|l| match l {
                CellLabel::Negative => Some(false),
                CellLabel::Positive => Some(true),
                CellLabel::Ignore => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetMaps {
    pub n: usize,
    pub levels: Vec<LevelTargets>,
}

impl TargetMaps {
    pub fn level(&self, index: usize) -> Option<&LevelTargets> {
        self.levels.iter().find(|l| l.spec.index == index)
    }

    pub fn positive_count(&self) -> usize {
        self.levels.iter().map(LevelTargets::positive_count).sum()
    }

    /// Line-oriented text form for fixture diffing.
    ///
    /// ```text
    /// # polytext-targets n=<n> levels=<count>
    /// pos <level> <row> <col> <instance> <x0> <y0> ... <x(n-1)> <y(n-1)>
    /// ign <level> <row> <col>
    /// ```
    ///
    /// Records are ordered by level then row-major cell; floats are written
    /// in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# polytext-targets n={} levels={}\n",
            self.n,
            self.levels.len()
        );
        for level in &self.levels {
            let m = level.spec.map_size;
            for (i, label) in level.labels.iter().enumerate() {
                let (row, col) = (i / m, i % m);
                match label {
                    CellLabel::Positive => {
                        let _ = write!(
                            out,
                            "pos {} {} {} {}",
                            level.spec.index,
                            row,
                            col,
                            level.instances[i].unwrap_or(usize::MAX)
                        );
                        for v in level.offsets(row, col).unwrap_or(&[]) {
                            let _ = write!(out, " {v:?}");
                        }
                        out.push('\n');
                    }
                    CellLabel::Ignore => {
                        let _ = writeln!(out, "ign {} {} {}", level.spec.index, row, col);
                    }
                    CellLabel::Negative => {}
                }
            }
        }
        out
    }

    /// Parses [`TargetMaps::to_text`] output against a level table.
    pub fn from_text(text: &str, levels: &[LevelSpec]) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let n = header
            .split_whitespace()
            .find_map(|t| t.strip_prefix("n="))
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|_| header.starts_with("# polytext-targets"))
            .ok_or(Error::Parse {
                line: 1,
                message: format!("bad header {header:?}"),
            })?;
        let mut maps = TargetMaps {
            n,
            levels: levels.iter().map(|s| LevelTargets::empty(*s, n)).collect(),
        };
        for (i, line) in lines {
            let line_no = i + 1;
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| err(format!("bad integer {s:?}: {e}")))
            };
            let expected = match fields[0] {
                "pos" => 5 + 2 * n,
                "ign" => 4,
                tag => return Err(err(format!("unknown record tag {tag:?}"))),
            };
            if fields.len() != expected {
                return Err(err(format!(
                    "expected {expected} fields, got {}",
                    fields.len()
                )));
            }
            let (level, row, col) = (int(fields[1])?, int(fields[2])?, int(fields[3])?);
            let lt = maps
                .levels
                .iter_mut()
                .find(|l| l.spec.index == level)
                .ok_or_else(|| err(format!("unknown level {level}")))?;
            if row >= lt.spec.map_size || col >= lt.spec.map_size {
                return Err(err(format!("cell ({row}, {col}) outside level {level}")));
            }
            let idx = row * lt.spec.map_size + col;
            if fields[0] == "ign" {
                lt.labels[idx] = CellLabel::Ignore;
                continue;
            }
            lt.labels[idx] = CellLabel::Positive;
            lt.instances[idx] = Some(int(fields[4])?);
            for (k, f) in fields[5..].iter().enumerate() {
                lt.offsets[idx * 2 * n + k] = f
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad number {f:?}: {e}")))?;
            }
        }
        Ok(maps)
    }
}

/// Builds the target maps for one image.
///
/// Instances claim cells smallest-area first, so when two positives overlap
/// the smaller one keeps the cell. Don't-care annotations turn the
/// remaining negative cells they cover into ignore cells.
pub fn encode(annotations: &[Annotation], levels: &[LevelSpec], n: usize) -> Result<TargetMaps> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "vertex count must be at least 3, got {n}"
        )));
    }
    for l in levels {
        l.validate()?;
    }
    let mut maps = TargetMaps {
        n,
        levels: levels.iter().map(|s| LevelTargets::empty(*s, n)).collect(),
    };

    let mut order: Vec<usize> = (0..annotations.len()).collect();
    order.sort_by(|&a, &b| {
        annotations[a]
            .polygon
            .area()
            .total_cmp(&annotations[b].polygon.area())
    });

    for &id in &order {
        let ann = &annotations[id];
        if ann.ignore || ann.polygon.perimeter() == 0.0 {
            continue;
        }
        let assigned = text_level(&ann.polygon, levels)?;
        let target = target_vertices(&ann.polygon, n)?;
        for lt in maps
            .levels
            .iter_mut()
            .filter(|l| assigned.contains(&l.spec.index))
        {
            for (row, col) in covered_cells(&target, &lt.spec) {
                let idx = row * lt.spec.map_size + col;
                if lt.labels[idx] == CellLabel::Positive {
                    continue;
                }
                lt.labels[idx] = CellLabel::Positive;
                lt.instances[idx] = Some(id);
                let center = lt.spec.cell_center(row, col);
                let g = lt.spec.grid_size;
                let dst = &mut lt.offsets[idx * 2 * n..(idx + 1) * 2 * n];
                for (k, v) in target.vertices().iter().enumerate() {
                    let o = normalize_offset(*v, center, g);
                    dst[2 * k] = o.x;
                    dst[2 * k + 1] = o.y;
                }
            }
        }
    }

    for ann in annotations.iter().filter(|a| a.ignore) {
        if ann.polygon.perimeter() == 0.0 {
            continue;
        }
        let assigned = text_level(&ann.polygon, levels)?;
        let target = target_vertices(&ann.polygon, n)?;
        for lt in maps
            .levels
            .iter_mut()
            .filter(|l| assigned.contains(&l.spec.index))
        {
            for (row, col) in covered_cells(&target, &lt.spec) {
                let idx = row * lt.spec.map_size + col;
                if lt.labels[idx] == CellLabel::Negative {
                    lt.labels[idx] = CellLabel::Ignore;
                }
            }
        }
    }
    Ok(maps)
}

/// Encodes many images independently.
pub fn encode_batch(
    images: &[Vec<Annotation>],
    levels: &[LevelSpec],
    n: usize,
    exec: Exec,
) -> Result<Vec<TargetMaps>> {
    exec.map_slice(images, |anns| encode(anns, levels, n))
        .into_iter()
        .collect()
}

// Cells of a level whose center lies inside the polygon, scanning only the
// polygon's bounding box.
fn covered_cells(poly: &Polygon, spec: &LevelSpec) -> Vec<(usize, usize)> {
    let b = poly.bbox();
    let g = spec.grid_size;
    let m = spec.map_size as isize;
    let lo = |v: f64| ((v / g - 0.5).floor() as isize).clamp(0, m);
    let hi = |v: f64| ((v / g - 0.5).ceil() as isize + 1).clamp(0, m);
    let mut cells = Vec::new();
    for row in lo(b.min.y)..hi(b.max.y) {
        for col in lo(b.min.x)..hi(b.max.x) {
            let (row, col) = (row as usize, col as usize);
            if poly.contains(spec.cell_center(row, col)) {
                cells.push((row, col));
            }
        }
    }
    cells
}

/// `(vertex - center) / grid_size`, componentwise.
pub fn normalize_offset(vertex: Point, center: Point, grid_size: f64) -> Point {
    Point::new(
        (vertex.x - center.x) / grid_size,
        (vertex.y - center.y) / grid_size,
    )
}

pub fn denormalize_offset(offset: Point, center: Point, grid_size: f64) -> Point {
    Point::new(
        center.x + offset.x * grid_size,
        center.y + offset.y * grid_size,
    )
}

/// Inverse of the offset normalization at one cell.
pub fn decode_cell(
    offsets: &[f64],
    level: usize,
    row: usize,
    col: usize,
    levels: &[LevelSpec],
) -> Result<Polygon> {
    let spec = levels
        .iter()
        .find(|l| l.index == level)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown level {level}")))?;
    if !offsets.len().is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "odd offset count {}",
            offsets.len()
        )));
    }
    if let Some(v) = offsets.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite offset {v}")));
    }
    let center = spec.cell_center(row, col);
    let g = spec.grid_size;
    Polygon::from_ordered(
        offsets
            .chunks_exact(2)
            .map(|o| denormalize_offset(Point::new(o[0], o[1]), center, g))
            .collect(),
    )
}

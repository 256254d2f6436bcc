//! Inference-side decoding, polygon NMS and the evaluation protocol.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polygon_iou, Point, Polygon, DEFAULT_IOU_RESOLUTION};
use crate::labelgen::{decode_cell, Annotation, LevelSpec, TargetMaps};
use crate::par::Exec;

pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.7;
pub const DEFAULT_NMS_IOU: f64 = 0.3;
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub polygon: Polygon,
    pub confidence: f64,
    pub level: usize,
    pub row: usize,
    pub col: usize,
}

/// Flat serialized form of a [`Detection`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub polygon: Vec<[f64; 2]>,
    pub confidence: f64,
    pub level: usize,
    pub row: usize,
    pub col: usize,
}

impl Detection {
    pub fn to_record(&self) -> DetectionRecord {
        DetectionRecord {
            polygon: self.polygon.vertices().iter().map(|p| [p.x, p.y]).collect(),
            confidence: self.confidence,
            level: self.level,
            row: self.row,
            col: self.col,
        }
    }

    pub fn from_record(record: DetectionRecord) -> Result<Self> {
        if !(0.0..=1.0).contains(&record.confidence) {
            return Err(Error::InvalidInput(format!(
                "confidence {} outside [0, 1]",
                record.confidence
            )));
        }
        Ok(Self {
            polygon: Polygon::from_ordered(record.polygon.into_iter().map(Point::from).collect())?,
            confidence: record.confidence,
            level: record.level,
            row: record.row,
            col: record.col,
        })
    }
}

/// Network output for one level: `map_size²` scores and
/// `map_size² × 2n` normalized coordinates, both row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPrediction {
    pub scores: Vec<f64>,
    pub coords: Vec<f64>,
}

impl LevelPrediction {
    /// Ideal predictions: score 1 at every positive cell and the encoded
    /// offsets as coordinates.
    pub fn from_targets(maps: &TargetMaps) -> Vec<LevelPrediction> {
        maps.levels
            .iter()
            .map(|lt| LevelPrediction {
                scores: lt
                    .labels()
                    .iter()
                    .map(|l| if *l == crate::labelgen::CellLabel::Positive { 1.0 } else { 0.0 })
                    .collect(),
                coords: lt.dense_offsets().to_vec(),
            })
            .collect()
    }
}

/// One detection per cell whose score exceeds `threshold`.
pub fn decode_detections(
    preds: &[LevelPrediction],
    levels: &[LevelSpec],
    threshold: f64,
) -> Result<Vec<Detection>> {
    if preds.len() != levels.len() {
        return Err(Error::InvalidInput(format!(
            "{} prediction levels for {} level specs",
            preds.len(),
            levels.len()
        )));
    }
    let mut out = Vec::new();
    for (pred, spec) in preds.iter().zip(levels) {
        let cells = spec.cell_count();
        if pred.scores.len() != cells {
            return Err(Error::InvalidInput(format!(
                "level {}: expected {cells} scores, got {}",
                spec.index,
                pred.scores.len()
            )));
        }
        if pred.coords.len() % (2 * cells) != 0 || pred.coords.len() < 6 * cells {
            return Err(Error::InvalidInput(format!(
                "level {}: coordinate map of {} values does not hold 2n >= 6 values per cell",
                spec.index,
                pred.coords.len()
            )));
        }
        let width = pred.coords.len() / cells;
        for (cell, &score) in pred.scores.iter().enumerate() {
            if score > threshold {
                let (row, col) = (cell / spec.map_size, cell % spec.map_size);
                let offsets = &pred.coords[cell * width..(cell + 1) * width];
                out.push(Detection {
                    polygon: decode_cell(offsets, spec.index, row, col, levels)?,
                    confidence: score.clamp(0.0, 1.0),
                    level: spec.index,
                    row,
                    col,
                });
            }
        }
    }
    Ok(out)
}

/// Indices sorted by descending confidence, ties kept in input order.
fn by_confidence(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    order
}

/// Greedy polygon NMS with the default IoU resolution.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    nms_with_resolution(dets, iou_threshold, DEFAULT_IOU_RESOLUTION)
}

/// Keeps detections in descending confidence; drops any whose IoU with an
/// already kept one exceeds `iou_threshold`.
pub fn nms_with_resolution(dets: &[Detection], iou_threshold: f64, resolution: usize) -> Vec<Detection> {
    let mut kept: Vec<&Detection> = Vec::new();
    for i in by_confidence(dets) {
        let d = &dets[i];
        if kept
            .iter()
            .all(|k| polygon_iou(&k.polygon, &d.polygon, resolution) <= iou_threshold)
        {
            kept.push(d);
        }
    }
    kept.into_iter().cloned().collect()
}

/// Row-major `a.len() × b.len()` IoU matrix.
pub fn iou_matrix(a: &[Polygon], b: &[Polygon], resolution: usize, exec: Exec) -> Vec<f64> {
    let cols = b.len();
    exec.map_indexed(a.len() * cols, |k| {
        polygon_iou(&a[k / cols], &b[k % cols], resolution)
    })
}

/// Additive match counts; sum per image, then derive ratios.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub ignored: usize,
    pub iou_sum: f64,
}

impl Add for EvalCounts {
    type Output = EvalCounts;

    fn add(self, o: EvalCounts) -> EvalCounts {
        EvalCounts {
            true_positives: self.true_positives + o.true_positives,
            false_positives: self.false_positives + o.false_positives,
            false_negatives: self.false_negatives + o.false_negatives,
            ignored: self.ignored + o.ignored,
            iou_sum: self.iou_sum + o.iou_sum,
        }
    }
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, o: EvalCounts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mean_iou: f64,
    pub counts: EvalCounts,
}

impl EvalReport {
    pub fn from_counts(counts: EvalCounts) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let tp = counts.true_positives;
        let precision = ratio(tp, tp + counts.false_positives);
        let recall = ratio(tp, tp + counts.false_negatives);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let mean_iou = if tp == 0 { 0.0 } else { counts.iou_sum / tp as f64 };
        Self {
            precision,
            recall,
            f_measure,
            mean_iou,
            counts,
        }
    }
}

/// Single-image evaluation with the default IoU resolution.
pub fn evaluate(preds: &[Detection], gts: &[Annotation], match_iou: f64) -> EvalReport {
    EvalReport::from_counts(evaluate_counts(preds, gts, match_iou, DEFAULT_IOU_RESOLUTION, Exec::Sequential))
}

/// Greedy one-to-one matching of one image.
///
/// Predictions are visited by descending confidence. Each takes the
/// unmatched non-ignore ground truth of highest IoU when that IoU reaches
/// `match_iou`. A prediction whose best overlap is with a don't-care region
/// (also at least `match_iou`) is dropped from both counts.
pub fn evaluate_counts(
    preds: &[Detection],
    gts: &[Annotation],
    match_iou: f64,
    resolution: usize,
    exec: Exec,
) -> EvalCounts {
    let pred_polys: Vec<Polygon> = preds.iter().map(|d| d.polygon.clone()).collect();
    let gt_polys: Vec<Polygon> = gts.iter().map(|a| a.polygon.clone()).collect();
    let ious = iou_matrix(&pred_polys, &gt_polys, resolution, exec);
    let cols = gts.len();

    let mut matched = vec![false; gts.len()];
    let mut counts = EvalCounts::default();
    for p in by_confidence(preds) {
        let row = &ious[p * cols..(p + 1) * cols];
        let mut best_care: Option<(usize, f64)> = None;
        let mut best_ignore = 0.0_f64;
        for (g, &iou) in row.iter().enumerate() {
            if gts[g].ignore {
                best_ignore = best_ignore.max(iou);
            } else if !matched[g] && best_care.is_none_or(|(_, b)| iou > b) {
                best_care = Some((g, iou));
            }
        }
        let care_iou = best_care.map_or(0.0, |(_, v)| v);
        if best_ignore >= match_iou && best_ignore > care_iou {
            counts.ignored += 1;
        } else if let Some((g, iou)) = best_care.filter(|(_, v)| *v >= match_iou) {
            matched[g] = true;
            counts.true_positives += 1;
            counts.iou_sum += iou;
        } else {
            counts.false_positives += 1;
        }
    }
    counts.false_negatives = gts
        .iter()
        .zip(&matched)
        .filter(|(g, m)| !g.ignore && !**m)
        .count();
    counts
}

/// Evaluates many images and aggregates counts before taking ratios.
pub fn evaluate_batch(
    images: &[(Vec<Detection>, Vec<Annotation>)],
    match_iou: f64,
    exec: Exec,
) -> EvalReport {
    let per_image = exec.map_slice(images, |(preds, gts)| {
        evaluate_counts(preds, gts, match_iou, DEFAULT_IOU_RESOLUTION, Exec::Sequential)
    });
    EvalReport::from_counts(per_image.into_iter().fold(EvalCounts::default(), Add::add))
}

//! Annotation parsers, detection records and PGM mask output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detect::{Detection, DetectionRecord};
use crate::error::{Error, Result};
use crate::geometry::{Mask, Point, Polygon};
use crate::labelgen::{default_levels, Annotation, LevelSpec};

/// Transcription marking a don't-care region.
pub const DONT_CARE: &str = "###";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnotationFormat {
    #[serde(rename = "icdar2015-quad")]
    IcdarQuad,
    #[serde(rename = "curved-14pt")]
    Curved14,
    #[serde(rename = "polygon-json")]
    PolygonJson,
}

impl AnnotationFormat {
    pub fn tag(self) -> &'static str {
        match self {
            AnnotationFormat::IcdarQuad => "icdar2015-quad",
            AnnotationFormat::Curved14 => "curved-14pt",
            AnnotationFormat::PolygonJson => "polygon-json",
        }
    }

    pub fn parse(self, contents: &str) -> Result<Vec<Annotation>> {
        match self {
            AnnotationFormat::IcdarQuad => parse_icdar_quad(contents),
            AnnotationFormat::Curved14 => parse_curved_14pt(contents),
            AnnotationFormat::PolygonJson => parse_polygon_json(contents),
        }
    }
}

impl FromStr for AnnotationFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "icdar2015-quad" => Ok(AnnotationFormat::IcdarQuad),
            "curved-14pt" => Ok(AnnotationFormat::Curved14),
            "polygon-json" => Ok(AnnotationFormat::PolygonJson),
            other => Err(Error::InvalidArgument(format!("unknown annotation format {other:?}"))),
        }
    }
}

/// Where a dataset lives and how to read it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub format: AnnotationFormat,
    pub root: std::path::PathBuf,
    pub n: usize,
    pub levels: Option<Vec<LevelSpec>>,
}

impl DatasetSpec {
    pub fn new(format: AnnotationFormat, root: impl Into<std::path::PathBuf>, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("n must be at least 3, got {n}")));
        }
        Ok(Self {
            format,
            root: root.into(),
            n,
            levels: None,
        })
    }

    pub fn levels(&self) -> Vec<LevelSpec> {
        self.levels.clone().unwrap_or_else(default_levels)
    }
}

fn content_lines(contents: &str) -> impl Iterator<Item = (usize, &str)> {
    contents
        .trim_start_matches('\u{feff}')
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_coords(fields: &[&str], line: usize) -> Result<Vec<Point>> {
    let values = fields
        .iter()
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("bad coordinate {:?}", f.trim()),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parse {
            line,
            message: format!("non-finite coordinate {v}"),
        });
    }
    Ok(values.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
}

/// `x1,y1,...,x4,y4,transcription` per line. The transcription may itself
/// contain commas; `###` marks a don't-care region.
pub fn parse_icdar_quad(contents: &str) -> Result<Vec<Annotation>> {
    content_lines(contents)
        .map(|(line, text)| {
            let fields: Vec<&str> = text.split(',').collect();
            if fields.len() < 9 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 8 coordinates and a transcription, got {} fields", fields.len()),
                });
            }
            let polygon = Polygon::new(parse_coords(&fields[..8], line)?)
                .map_err(|e| Error::Parse { line, message: e.to_string() })?;
            let transcription = fields[8..].join(",");
            Ok(Annotation {
                polygon,
                ignore: transcription.trim() == DONT_CARE,
                text: Some(transcription),
            })
        })
        .collect()
}

/// Exactly 28 comma-separated values (14 points) per line.
pub fn parse_curved_14pt(contents: &str) -> Result<Vec<Annotation>> {
    content_lines(contents)
        .map(|(line, text)| {
            let fields: Vec<&str> = text.split(',').collect();
            if fields.len() != 28 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 28 values, got {}", fields.len()),
                });
            }
            let polygon = Polygon::new(parse_coords(&fields, line)?)
                .map_err(|e| Error::Parse { line, message: e.to_string() })?;
            Ok(Annotation::new(polygon))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonRecord {
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub ignore: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// A JSON array of `{"points": [[x, y], ...], "ignore": bool, "text": ...}`.
pub fn parse_polygon_json(contents: &str) -> Result<Vec<Annotation>> {
    let records: Vec<serde_json::Value> = serde_json::from_str(contents).map_err(|e| Error::Schema {
        record: 0,
        message: format!("expected a JSON array of polygon records: {e}"),
    })?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, value)| {
            let schema = |message: String| Error::Schema { record: i, message };
            let rec: PolygonRecord = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
            if rec.points.len() < 3 {
                return Err(schema(format!("needs at least 3 points, got {}", rec.points.len())));
            }
            let polygon = Polygon::new(rec.points.into_iter().map(Point::from).collect())
                .map_err(|e| schema(e.to_string()))?;
            Ok(Annotation {
                polygon,
                ignore: rec.ignore,
                text: rec.text,
            })
        })
        .collect()
}

pub fn write_polygon_json(annotations: &[Annotation]) -> String {
    let records: Vec<PolygonRecord> = annotations
        .iter()
        .map(|a| PolygonRecord {
            points: a.polygon.vertices().iter().map(|p| [p.x, p.y]).collect(),
            ignore: a.ignore,
            text: a.text.clone(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("plain records serialize")
}

/// Reads a file and parses it with the given format.
pub fn read_annotations(path: &Path, format: AnnotationFormat) -> Result<Vec<Annotation>> {
    let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    format.parse(&contents)
}

/// One JSON object per line.
pub fn detections_to_jsonl(dets: &[Detection]) -> String {
    let mut out = String::new();
    for d in dets {
        let _ = writeln!(
            out,
            "{}",
            serde_json::to_string(&d.to_record()).expect("plain records serialize")
        );
    }
    out
}

pub fn detections_from_jsonl(contents: &str) -> Result<Vec<Detection>> {
    content_lines(contents)
        .map(|(line, text)| {
            let rec: DetectionRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            Detection::from_record(rec).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Plain-text PGM (P2), maxval 255, each cell `round(v·255)` half up.
pub fn mask_to_pgm(mask: &Mask) -> String {
    let res = mask.resolution();
    let mut out = format!("P2 {res} {res} 255\n");
    for row in 0..res {
        let line: Vec<String> = (0..res)
            .map(|col| ((mask.get(row, col) * 255.0 + 0.5).floor() as u8).to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_mask_pgm(mask: &Mask, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(mask_to_pgm(mask).as_bytes())
        .map_err(|e| Error::io(path, e))
}

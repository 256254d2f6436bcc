//! Run configuration, stored as TOML.
//!
//! ```toml
//! n = 4
//! score_threshold = 0.7
//! nms_iou = 0.3
//! match_iou = 0.5
//! iou_resolution = 512
//!
//! [loss]
//! lambda_cls = 40.0
//! # ... every LossConfig field, all optional
//!
//! [[levels]]          # optional; replaces the built-in level table
//! index = 0
//! map_size = 64
//! grid_size = 8.0
//! lower = 1.2
//! upper = 10.0
//! ```
//!
//! Missing keys take their defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{DEFAULT_MATCH_IOU, DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESHOLD};
use crate::error::{Error, Result};
use crate::geometry::DEFAULT_IOU_RESOLUTION;
use crate::labelgen::{default_levels, LevelSpec, QUAD_VERTICES};
use crate::losses::LossConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub score_threshold: f64,
    pub nms_iou: f64,
    pub match_iou: f64,
    pub iou_resolution: usize,
    pub loss: LossConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LevelSpec>>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: QUAD_VERTICES,
            score_threshold: DEFAULT_SCORE_THRESHOLD,
            nms_iou: DEFAULT_NMS_IOU,
            match_iou: DEFAULT_MATCH_IOU,
            iou_resolution: DEFAULT_IOU_RESOLUTION,
            loss: LossConfig::default(),
            levels: None,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn levels(&self) -> Vec<LevelSpec> {
        self.levels.clone().unwrap_or_else(default_levels)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidInput(format!("n must be at least 3, got {}", self.n)));
        }
        for (name, v) in [
            ("score_threshold", self.score_threshold),
            ("nms_iou", self.nms_iou),
            ("match_iou", self.match_iou),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if let Some(levels) = &self.levels {
            for l in levels {
                l.validate()?;
            }
        }
        self.loss.validate()
    }
}

//! Training losses with analytic gradients.
//!
//! * [`cls_loss`]: focal loss over a score grid.
//! * [`reg_loss`]: smooth-L1 vertex regression minimized over cyclic
//!   relabelings of the ground truth, so no canonical first vertex is
//!   needed.
//! * [`acc_loss`]: L1 distance between a soft-rendered predicted mask and
//!   the hard ground-truth mask.
//! * [`total_loss`]: the weighted sum, with the accuracy weight switched
//!   after a fixed iteration.

mod accuracy;
mod candidates;
mod focal;
mod regression;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use accuracy::{acc_loss, acc_loss_in_frame, mask_frame, MASK_PADDING};
pub use candidates::{sample_candidates, Candidate};
pub use focal::{binary_cross_entropy, cls_loss, PROB_CLAMP};
pub use regression::{reg_loss, reg_pair, smooth_l1, RegLoss, RegPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_cls: f64,
    pub lambda_reg: f64,
    pub lambda_acc_initial: f64,
    pub lambda_acc_final: f64,
    pub lambda_acc_switch_iteration: u64,
    pub alpha: f64,
    pub gamma: f64,
    /// Soft-raster temperature as a fraction of the mask frame side.
    pub tau: f64,
    pub mask_resolution: usize,
    pub candidate_count: usize,
    pub candidate_min_iou: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_cls: 40.0,
            lambda_reg: 1.0,
            lambda_acc_initial: 0.01,
            lambda_acc_final: 1.0,
            lambda_acc_switch_iteration: 60_000,
            alpha: 0.25,
            gamma: 2.0,
            tau: 1.0 / 64.0,
            mask_resolution: 64,
            candidate_count: 256,
            candidate_min_iou: 0.5,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("lambda_cls", self.lambda_cls),
            ("lambda_reg", self.lambda_reg),
            ("lambda_acc_initial", self.lambda_acc_initial),
            ("lambda_acc_final", self.lambda_acc_final),
        ];
        for (name, w) in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {w}")));
            }
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidInput(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.mask_resolution < 8 {
            return Err(Error::InvalidInput(format!(
                "mask_resolution must be >= 8, got {}",
                self.mask_resolution
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidInput(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }

    /// Accuracy-loss weight in effect at `iteration`.
    pub fn lambda_acc_at(&self, iteration: u64) -> f64 {
        if iteration < self.lambda_acc_switch_iteration {
            self.lambda_acc_initial
        } else {
            self.lambda_acc_final
        }
    }
}

/// Scalar loss plus partial derivatives keyed by input name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossValue {
    pub value: f64,
    pub gradients: BTreeMap<String, Vec<f64>>,
}

impl LossValue {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            gradients: BTreeMap::new(),
        }
    }

    pub fn with_gradient(mut self, key: impl Into<String>, grad: Vec<f64>) -> Self {
        self.gradients.insert(key.into(), grad);
        self
    }

    pub fn gradient(&self, key: &str) -> Option<&[f64]> {
        self.gradients.get(key).map(Vec::as_slice)
    }

    /// Euclidean norm over all gradient entries.
    pub fn grad_norm(&self) -> f64 {
        self.gradients
            .values()
            .flatten()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    fn accumulate(&mut self, other: &LossValue, weight: f64) {
        self.value += weight * other.value;
        for (key, grad) in &other.gradients {
            let slot = self
                .gradients
                .entry(key.clone())
                .or_insert_with(|| vec![0.0; grad.len()]);
            for (s, g) in slot.iter_mut().zip(grad) {
                *s += weight * g;
            }
        }
    }
}

/// `λ_cls·cls + λ_reg·reg + λ_acc(iteration)·acc`; gradients under the same
/// key are summed with the same weights.
pub fn total_loss(
    cls: &LossValue,
    reg: &LossValue,
    acc: &LossValue,
    config: &LossConfig,
    iteration: u64,
) -> Result<LossValue> {
    for (name, v) in [("cls", cls.value), ("reg", reg.value), ("acc", acc.value)] {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("{name} loss is not finite")));
        }
    }
    let mut total = LossValue::default();
    total.accumulate(cls, config.lambda_cls);
    total.accumulate(reg, config.lambda_reg);
    total.accumulate(acc, config.lambda_acc_at(iteration));
    Ok(total)
}

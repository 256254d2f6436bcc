use crate::error::{Error, Result};

use super::LossValue;

/// Scores are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before taking logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Focal loss summed over cells; `None` targets are ignored cells and
/// contribute neither value nor gradient.
///
/// Gradient key: `"scores"`, one entry per cell.
pub fn cls_loss(scores: &[f64], targets: &[Option<bool>], alpha: f64, gamma: f64) -> Result<LossValue> {
    if scores.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} targets",
            scores.len(),
            targets.len()
        )));
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; scores.len()];
    for (i, (&s, t)) in scores.iter().zip(targets).enumerate() {
        let Some(positive) = *t else { continue };
        let clamped = s.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let (v, d) = if positive {
            focal_term(clamped, alpha, gamma)
        } else {
            // the negative term is the positive one mirrored at 1 - p
            let (v, d) = focal_term(1.0 - clamped, 1.0 - alpha, gamma);
            (v, -d)
        };
        value += v;
        if s == clamped {
            grad[i] = d;
        }
    }
    Ok(LossValue::new(value).with_gradient("scores", grad))
}

// -a (1-p)^g ln p and its derivative in p
fn focal_term(p: f64, a: f64, g: f64) -> (f64, f64) {
    let q = 1.0 - p;
    let ln_p = p.ln();
    let qg = q.powf(g);
    let value = -a * qg * ln_p;
    let mut d = -a * qg / p;
    if g != 0.0 {
        d += a * g * q.powf(g - 1.0) * ln_p;
    }
    (value, d)
}

/// Plain binary cross-entropy per cell, same clamping as [`cls_loss`].
pub fn binary_cross_entropy(score: f64, positive: bool) -> f64 {
    let p = score.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if positive {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

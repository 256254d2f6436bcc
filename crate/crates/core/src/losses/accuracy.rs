use crate::error::Result;
use crate::geometry::{rasterize_hard, rasterize_soft, Frame, Polygon};

use super::{LossConfig, LossValue};

/// Fractional padding added on each side of the mask frame.
pub const MASK_PADDING: f64 = 0.05;

/// Square frame around both polygons used to normalize the masks.
pub fn mask_frame(pred: &Polygon, gt: &Polygon, resolution: usize) -> Result<Frame> {
    Frame::square_around(&[pred, gt], MASK_PADDING, resolution)
}

/// Mean absolute difference between the soft-rendered prediction and the
/// hard ground-truth mask.
///
/// The frame is rebuilt from both polygons on every call and is treated as
/// a constant for the gradient (key `"pred"`, interleaved vertex
/// coordinates).
pub fn acc_loss(pred: &Polygon, gt: &Polygon, config: &LossConfig) -> Result<LossValue> {
    let frame = mask_frame(pred, gt, config.mask_resolution)?;
    acc_loss_in_frame(pred, gt, &frame, config.tau * frame.width)
}

/// [`acc_loss`] in a caller-supplied frame; `tau` is in pixels.
pub fn acc_loss_in_frame(pred: &Polygon, gt: &Polygon, frame: &Frame, tau: f64) -> Result<LossValue> {
    let soft = rasterize_soft(pred, frame, tau)?;
    let hard = rasterize_hard(gt, frame);
    let cells = frame.cell_count() as f64;
    let mut value = 0.0;
    let weights: Vec<f64> = soft
        .mask
        .data()
        .iter()
        .zip(hard.data())
        .map(|(s, h)| {
            let d = s - h;
            value += d.abs();
            if d == 0.0 {
                0.0
            } else {
                d.signum() / cells
            }
        })
        .collect();
    let grad = soft.vjp(&weights);
    Ok(LossValue::new(value / cells).with_gradient("pred", grad))
}

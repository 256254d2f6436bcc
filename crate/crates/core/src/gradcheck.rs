//! Central finite-difference checks for the analytic loss gradients.

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{Frame, Polygon};
use crate::losses::{acc_loss_in_frame, mask_frame, reg_pair, LossConfig};

/// Central difference of `f` at `x` along every coordinate.
pub fn central_difference<F>(x: &[f64], h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖analytic − numeric‖ / max(‖numeric‖, floor)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / scale.max(floor)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GradCheck {
    pub loss: &'static str,
    pub value: f64,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub relative_error: f64,
}

/// Checks the regression gradient at `pred` against `gt`.
pub fn check_reg(pred: &Polygon, gt: &Polygon, h: f64) -> Result<GradCheck> {
    let x = pred.to_flat();
    let target = gt.to_flat();
    let pair = reg_pair(&x, &target)?;
    let numeric = central_difference(&x, h, |p| {
        reg_pair(p, &target).map(|r| r.value).unwrap_or(f64::NAN)
    });
    Ok(GradCheck {
        loss: "reg",
        value: pair.value,
        relative_error: relative_error(&pair.grad, &numeric, 1e-12),
        analytic: pair.grad,
        numeric,
    })
}

/// Checks the accuracy-loss gradient with the mask frame held fixed at the
/// one built from the unperturbed pair. `h` is a fraction of frame width.
pub fn check_acc(pred: &Polygon, gt: &Polygon, config: &LossConfig, h: f64) -> Result<GradCheck> {
    let frame: Frame = mask_frame(pred, gt, config.mask_resolution)?;
    let tau = config.tau * frame.width;
    let at = acc_loss_in_frame(pred, gt, &frame, tau)?;
    let analytic = at.gradient("pred").unwrap_or(&[]).to_vec();
    let step = h * frame.width;
    let numeric = central_difference(&pred.to_flat(), step, |p| {
        Polygon::from_flat(p)
            .and_then(|poly| acc_loss_in_frame(&poly, gt, &frame, tau))
            .map(|l| l.value)
            .unwrap_or(f64::NAN)
    });
    Ok(GradCheck {
        loss: "acc",
        value: at.value,
        relative_error: relative_error(&analytic, &numeric, 1e-12),
        analytic,
        numeric,
    })
}

use crate::error::{Error, Result};
use crate::geometry::Polygon;

use super::LossValue;

/// Smooth-L1 value and derivative: `0.5x²` inside `|x| < 1`, `|x| - 0.5`
/// outside.
pub fn smooth_l1(x: f64) -> (f64, f64) {
    if x.abs() < 1.0 {
        (0.5 * x * x, x)
    } else {
        (x.abs() - 0.5, x.signum())
    }
}

/// Cyclic-min regression loss of one prediction/ground-truth pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RegPair {
    pub value: f64,
    /// Gradient w.r.t. the interleaved predicted coordinates.
    pub grad: Vec<f64>,
    /// Ground-truth shift `j` aligned with prediction vertex 0.
    pub rotation: usize,
}

/// Evaluates every cyclic shift `j` of the ground truth,
/// `Σ_i smooth_l1(pred_i - gt_{(i+j) mod n})` per coordinate, and keeps the
/// smallest. Ties go to the smallest `j`; the gradient is that of the
/// winning shift only.
pub fn reg_pair(pred: &[f64], gt: &[f64]) -> Result<RegPair> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidArgument(format!(
            "vertex count mismatch: prediction has {}, ground truth {}",
            pred.len() / 2,
            gt.len() / 2
        )));
    }
    if pred.len() < 2 || !pred.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "expected interleaved x,y coordinates, got {} values",
            pred.len()
        )));
    }
    let n = pred.len() / 2;
    let shifted_sum = |j: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let k = (i + j) % n;
            s += smooth_l1(pred[2 * i] - gt[2 * k]).0;
            s += smooth_l1(pred[2 * i + 1] - gt[2 * k + 1]).0;
        }
        s
    };
    let mut best = (0, shifted_sum(0));
    for j in 1..n {
        let v = shifted_sum(j);
        if v < best.1 {
            best = (j, v);
        }
    }
    let (rotation, value) = best;
    let mut grad = vec![0.0; 2 * n];
    for i in 0..n {
        let k = (i + rotation) % n;
        grad[2 * i] = smooth_l1(pred[2 * i] - gt[2 * k]).1;
        grad[2 * i + 1] = smooth_l1(pred[2 * i + 1] - gt[2 * k + 1]).1;
    }
    Ok(RegPair {
        value,
        grad,
        rotation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegLoss {
    /// Summed over pairs; gradient key `"pred/<m>"` for pair `m`.
    pub loss: LossValue,
    pub rotations: Vec<usize>,
}

/// Regression loss over aligned prediction/ground-truth lists in
/// normalized offset units.
pub fn reg_loss(pred: &[Polygon], gt: &[Polygon]) -> Result<RegLoss> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions vs {} ground truths",
            pred.len(),
            gt.len()
        )));
    }
    let mut loss = LossValue::new(0.0);
    let mut rotations = Vec::with_capacity(pred.len());
    for (m, (p, g)) in pred.iter().zip(gt).enumerate() {
        let pair = reg_pair(&p.to_flat(), &g.to_flat())?;
        loss.value += pair.value;
        loss.gradients.insert(format!("pred/{m}"), pair.grad);
        rotations.push(pair.rotation);
    }
    Ok(RegLoss { loss, rotations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn smooth_l1_examples() {
        assert_eq!(smooth_l1(0.0), (0.0, 0.0));
        assert_eq!(smooth_l1(1.0).0, 0.5);
        assert!(smooth_l1(1.0 - 1e-12).0 - 0.5 < 1e-11);
        assert_eq!(smooth_l1(2.0), (1.5, 1.0));
        assert_eq!(smooth_l1(-2.0), (1.5, -1.0));
        assert_eq!(smooth_l1(-0.5), (0.125, -0.5));
    }

    #[test]
    fn rotated_ground_truth_gives_zero() {
        let p = Polygon::from_flat(&[0.0, 0.0, 2.0, 0.0, 2.0, 1.0, 0.0, 1.0]).unwrap();
        for j in 0..4 {
            let out = reg_loss(std::slice::from_ref(&p), &[p.rotated(j)]).unwrap();
            assert_eq!(out.loss.value, 0.0);
            // gt shift that lines up with pred vertex 0
            assert_eq!(p.rotated(j).rotated(out.rotations[0]), p);
        }
    }

    #[test]
    fn single_offset_vertex() {
        let gt = Polygon::from_flat(&[0.0, 0.0, 5.0, 0.0, 5.0, 5.0, 0.0, 5.0]).unwrap();
        let mut v = gt.vertices().to_vec();
        v[2] = Point::new(5.5, 5.0);
        let pred = Polygon::from_ordered(v).unwrap();
        let out = reg_loss(&[pred], &[gt]).unwrap();
        assert_eq!(out.loss.value, 0.125);
        assert_eq!(out.loss.gradient("pred/0").unwrap()[4], 0.5);
    }

    #[test]
    fn mismatched_vertex_count() {
        let a = Polygon::from_flat(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = Polygon::from_flat(&[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(reg_loss(&[a], &[b]), Err(Error::InvalidArgument(_))));
    }
}

mod common;

use common::{aligned_smooth_l1, boundary_distance, finite_diff, rect, rel_err, rng, xy};
use polytext::geometry::{rasterize_hard, Frame};
use polytext::losses::{
    acc_loss, acc_loss_in_frame, cls_loss, mask_frame, reg_loss, reg_pair, sample_candidates,
    smooth_l1, total_loss, Candidate, LossConfig, LossValue,
};
use polytext::synth::{convex_polygon, star_polygon};
use polytext::{Point, Polygon};
use proptest::prelude::*;
use rand::Rng;

fn star(seed: u64, n: usize) -> Polygon {
    star_polygon(&mut rng(seed), n, Point::new(0.0, 0.0), 1.0, 4.0)
}

proptest! {
    #[test]
    fn reg_value_is_min_over_alignments(seed in any::<u64>(), n in 3usize..17, scale in 0.1..3.0f64) {
        let mut r = rng(seed);
        let gt = star(seed, n);
        let pred: Vec<f64> = gt.to_flat().iter().map(|v| v + scale * r.random_range(-1.0..1.0)).collect();
        let gt = gt.to_flat();
        let oracle = (0..n).map(|j| aligned_smooth_l1(&pred, &gt, j)).fold(f64::INFINITY, f64::min);
        let got = reg_pair(&pred, &gt).unwrap();
        prop_assert!((got.value - oracle).abs() <= 1e-12 * oracle.max(1.0));
        let at = aligned_smooth_l1(&pred, &gt, got.rotation);
        prop_assert!((got.value - at).abs() <= 1e-12 * at.max(1.0));
    }

    #[test]
    fn reg_loss_ignores_ground_truth_start(seed in any::<u64>(), n in 3usize..17, shift in 0usize..16) {
        let gt = star(seed, n);
        let pred = star(seed.wrapping_add(1), n);
        let a = reg_loss(std::slice::from_ref(&pred), std::slice::from_ref(&gt)).unwrap();
        let b = reg_loss(&[pred], &[gt.rotated(shift % n)]).unwrap();
        prop_assert_eq!(a.loss.value, b.loss.value);
        prop_assert_eq!(a.loss.gradient("pred/0"), b.loss.gradient("pred/0"));
        prop_assert_eq!((a.rotations[0] + n - shift % n) % n, b.rotations[0]);
    }

    #[test]
    fn focal_gradient_matches_differences(
        scores in prop::collection::vec(0.01..0.99f64, 1..20),
        seed in any::<u64>(),
        gamma in 0.0..3.0f64,
    ) {
        let mut r = rng(seed);
        let targets: Vec<Option<bool>> = scores
            .iter()
            .map(|_| match r.random_range(0..3) { 0 => None, 1 => Some(false), _ => Some(true) })
            .collect();
        let l = cls_loss(&scores, &targets, 0.25, gamma).unwrap();
        let numeric = finite_diff(&scores, 1e-6, |s| cls_loss(s, &targets, 0.25, gamma).unwrap().value);
        prop_assert!(rel_err(l.gradient("scores").unwrap(), &numeric) < 1e-5);
        for (g, t) in l.gradient("scores").unwrap().iter().zip(&targets) {
            if t.is_none() {
                prop_assert_eq!(*g, 0.0);
            }
        }
    }

    #[test]
    fn total_loss_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, it in 0u64..120_000) {
        let cfg = LossConfig::default();
        let cls = LossValue::new(a.abs()).with_gradient("scores", vec![a, b]);
        let reg = LossValue::new(b.abs()).with_gradient("pred", vec![b, c, a]);
        let acc = LossValue::new(c.abs()).with_gradient("pred", vec![c, a, b]);
        let t = total_loss(&cls, &reg, &acc, &cfg, it).unwrap();
        let w = cfg.lambda_acc_at(it);
        let expected = 40.0 * a.abs() + b.abs() + w * c.abs();
        prop_assert!((t.value - expected).abs() <= 1e-12 * expected.max(1.0));
        let g = t.gradient("pred").unwrap();
        for (k, (x, y)) in [(b, c), (c, a), (a, b)].iter().enumerate() {
            prop_assert!((g[k] - (x + w * y)).abs() <= 1e-12 * (x.abs() + y.abs()).max(1.0));
        }
        prop_assert_eq!(t.gradient("scores").unwrap(), &[40.0 * a, 40.0 * b][..]);
    }
}

#[test]
fn smooth_l1_is_continuous_at_the_kink() {
    let (below, d_below) = smooth_l1(1.0 - 1e-9);
    let (above, d_above) = smooth_l1(1.0 + 1e-9);
    assert!((below - above).abs() < 1e-8);
    assert!((d_below - d_above).abs() < 1e-8);
}

#[test]
fn acc_loss_of_identical_shapes_is_confined_to_the_band() {
    let cfg = LossConfig::default();
    let mut r = rng(31);
    for _ in 0..10 {
        let p = star_polygon(&mut r, 8, Point::new(0.0, 0.0), 5.0, 10.0);
        let frame = mask_frame(&p, &p, cfg.mask_resolution).unwrap();
        let tau = cfg.tau * frame.width;
        let loss = acc_loss(&p, &p, &cfg).unwrap().value;
        // cells beyond tau·ln 99 of the boundary each contribute under 0.01
        let band = tau * 99f64.ln();
        let near = (0..frame.cell_count())
            .filter(|&c| {
                let q = frame.cell_center(c / 64, c % 64);
                boundary_distance(&xy(&p), q.x, q.y) <= band
            })
            .count() as f64;
        let bound = near / frame.cell_count() as f64 + 0.01;
        assert!(loss <= bound, "loss {loss} bound {bound}");
        assert!(loss > 0.0);
    }
}

#[test]
fn acc_loss_of_disjoint_shapes_counts_both_areas() {
    let cfg = LossConfig::default();
    let a = rect(0.0, 0.0, 10.0, 10.0);
    let b = rect(20.0, 20.0, 30.0, 30.0);
    let frame = mask_frame(&a, &b, 64).unwrap();
    let f = rasterize_hard(&a, &frame).sum() / frame.cell_count() as f64;
    let loss = acc_loss(&a, &b, &cfg).unwrap().value;
    assert!((loss - 2.0 * f).abs() < 0.02, "loss {loss}, 2f {}", 2.0 * f);
}

#[test]
fn acc_loss_shrinks_as_prediction_grows_into_target() {
    let cfg = LossConfig::default();
    let mut r = rng(32);
    for _ in 0..10 {
        let gt = convex_polygon(&mut r, 6, Point::new(0.0, 0.0), 10.0);
        let frame = Frame::square_around(&[&gt], 0.1, 64).unwrap();
        let tau = cfg.tau * frame.width;
        let c = gt.centroid();
        let values: Vec<f64> = [0.5, 0.7, 0.9, 1.0]
            .iter()
            .map(|&s| acc_loss_in_frame(&gt.scaled_about(c, s), &gt, &frame, tau).unwrap().value)
            .collect();
        assert!(values.windows(2).all(|w| w[0] > w[1]), "{values:?}");
    }
}

#[test]
fn acc_gradient_pulls_prediction_toward_target() {
    let cfg = LossConfig::default();
    let gt = rect(0.0, 0.0, 10.0, 10.0);
    let pred = gt.translated(Point::new(2.0, 0.0));
    let g = acc_loss(&pred, &gt, &cfg).unwrap();
    let grad = g.gradient("pred").unwrap();
    // descent moves every vertex left
    let sum_x: f64 = grad.iter().step_by(2).sum();
    assert!(sum_x > 0.0, "{grad:?}");
}

#[test]
fn candidate_sampling_respects_threshold_and_count() {
    let cfg = LossConfig::default();
    let p = rect(0.0, 0.0, 1.0, 1.0);
    let mut r = rng(33);
    let pairs: Vec<Candidate> = (0..2000)
        .map(|_| Candidate { pred: p.clone(), gt: p.clone(), iou: r.random_range(0.0..1.0) })
        .collect();
    let picked = sample_candidates(&pairs, &cfg, 9);
    assert_eq!(picked.len(), 256);
    assert!(picked.windows(2).all(|w| w[0] < w[1]));
    assert!(picked.iter().all(|&i| pairs[i].iou > 0.5));
    assert_eq!(picked, sample_candidates(&pairs, &cfg, 9));
}

#[test]
fn mismatched_inputs_are_errors() {
    let cfg = LossConfig::default();
    assert!(cls_loss(&[0.5], &[], 0.25, 2.0).is_err());
    assert!(reg_pair(&[0.0; 8], &[0.0; 6]).is_err());
    assert!(reg_loss(&[rect(0.0, 0.0, 1.0, 1.0)], &[]).is_err());
    let nan = LossValue::new(f64::NAN);
    let one = LossValue::new(1.0);
    assert!(total_loss(&nan, &one, &one, &cfg, 0).is_err());
    let mut bad = cfg.clone();
    bad.tau = 0.0;
    assert!(bad.validate().is_err());
}

mod common;

use common::{boundary_distance, direct_perimeter, ear_clip_area, pnpoly, rect, rel_err, rng, xy};
use polytext::geometry::{
    iou_convex, iou_grid, polygon_iou, rasterize_hard, rasterize_soft, Frame,
};
use polytext::synth::{convex_polygon, star_polygon};
use polytext::{Point, Polygon};
use proptest::prelude::*;
use rand::Rng;

fn star_strategy(max_n: usize) -> impl Strategy<Value = Polygon> {
    (3..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        star_polygon(&mut rng(seed), n, Point::new(0.0, 0.0), 1.0, 5.0)
    })
}

fn convex_strategy() -> impl Strategy<Value = Polygon> {
    (3usize..10, any::<u64>(), -4.0..4.0f64, -4.0..4.0f64, 2.0..6.0f64).prop_map(
        |(n, seed, x, y, r)| convex_polygon(&mut rng(seed), n, Point::new(x, y), r),
    )
}

proptest! {
    #[test]
    fn area_matches_ear_clipping(p in star_strategy(20)) {
        let oracle = ear_clip_area(&xy(&p));
        prop_assert!((p.area() - oracle).abs() <= 1e-9 * oracle.max(1.0));
        prop_assert!(p.signed_area() > 0.0);
    }

    #[test]
    fn perimeter_matches_direct_sum(p in star_strategy(20)) {
        prop_assert!((p.perimeter() - direct_perimeter(&xy(&p))).abs() < 1e-9);
    }

    #[test]
    fn rotation_preserves_measures(p in star_strategy(16), shift in 0usize..16) {
        let q = p.rotated(shift);
        prop_assert!((q.area() - p.area()).abs() < 1e-9);
        prop_assert!((q.perimeter() - p.perimeter()).abs() < 1e-9);
    }

    #[test]
    fn contains_agrees_with_crossing_number(
        p in star_strategy(12),
        x in -6.0..6.0f64,
        y in -6.0..6.0f64,
    ) {
        let pts = xy(&p);
        // the oracle has no boundary convention, so skip points right on it
        prop_assume!(boundary_distance(&pts, x, y) > 1e-9);
        prop_assert_eq!(p.contains(Point::new(x, y)), pnpoly(&pts, x, y));
    }

    #[test]
    fn resample_keeps_first_vertex_and_spacing(p in star_strategy(12), n in 3usize..40) {
        let q = p.resample(n).unwrap();
        prop_assert_eq!(q.len(), n);
        prop_assert_eq!(q.vertices()[0], p.vertices()[0]);
        for v in q.vertices() {
            prop_assert!(p.on_boundary(*v) || boundary_distance(&xy(&p), v.x, v.y) < 1e-9);
        }
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in convex_strategy(), b in convex_strategy()) {
        let ab = polygon_iou(&a, &b, 256);
        let ba = polygon_iou(&b, &a, 256);
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn grid_iou_tracks_exact_iou(a in convex_strategy(), b in convex_strategy()) {
        let exact = iou_convex(&a, &b).unwrap();
        prop_assert!((iou_grid(&a, &b, 512) - exact).abs() < 0.01);
    }

    #[test]
    fn hard_mask_is_binary_and_matches_contains(p in star_strategy(12)) {
        let frame = Frame::square_around(&[&p], 0.1, 32).unwrap();
        let mask = rasterize_hard(&p, &frame);
        prop_assert!(mask.is_binary());
        for row in 0..32 {
            for col in 0..32 {
                let inside = p.contains(frame.cell_center(row, col));
                prop_assert_eq!(mask.get(row, col) == 1.0, inside);
            }
        }
    }

    #[test]
    fn soft_mask_stays_in_unit_interval(p in star_strategy(12), tau in 0.01..2.0f64) {
        let frame = Frame::square_around(&[&p], 0.1, 32).unwrap();
        let soft = rasterize_soft(&p, &frame, tau).unwrap();
        prop_assert!(soft.mask.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn l_shape_matches_union_of_rectangles() {
    let l = Polygon::new(
        [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]
            .map(Point::from)
            .to_vec(),
    )
    .unwrap();
    assert_eq!(l.area(), 3.0);
    assert!(!l.is_convex());
    let union = |x: f64, y: f64| {
        ((0.0..=2.0).contains(&x) && (0.0..=1.0).contains(&y))
            || ((0.0..=1.0).contains(&x) && (0.0..=2.0).contains(&y))
    };
    let mut r = rng(11);
    for _ in 0..5000 {
        let (x, y) = (r.random_range(-0.5..2.5), r.random_range(-0.5..2.5));
        assert_eq!(l.contains(Point::new(x, y)), union(x, y), "({x}, {y})");
    }
    // square [0,2]^2 against the L: 3 / 4
    let sq = rect(0.0, 0.0, 2.0, 2.0);
    assert!((polygon_iou(&l, &sq, 512) - 0.75).abs() < 0.01);
}

#[test]
fn soft_gradient_matches_finite_differences() {
    let mut r = rng(12);
    for _ in 0..10 {
        let p = convex_polygon(&mut r, 6, Point::new(0.0, 0.0), 10.0);
        let frame = Frame::square_around(&[&p], 0.1, 32).unwrap();
        let tau = frame.width / 32.0;
        let soft = rasterize_soft(&p, &frame, tau).unwrap();
        let h = 1e-4 * frame.width;
        let pts = xy(&p);
        // cells on a corner bisector have a kinked distance; leave them out
        let weights: Vec<f64> = (0..frame.cell_count())
            .map(|cell| {
                let w = r.random_range(-1.0..1.0);
                let c = frame.cell_center(cell / 32, cell % 32);
                if common::nearest_edge_gap(&pts, c.x, c.y) < 10.0 * h { 0.0 } else { w }
            })
            .collect();
        let analytic = soft.vjp(&weights);
        let numeric = common::finite_diff(&p.to_flat(), h, |x| {
            let q = Polygon::from_flat(x).unwrap();
            let m = rasterize_soft(&q, &frame, tau).unwrap().mask;
            m.data().iter().zip(&weights).map(|(a, w)| a * w).sum()
        });
        assert!(rel_err(&analytic, &numeric) < 1e-3, "{analytic:?} vs {numeric:?}");
    }
}

// Cells farther than the exclusion band from the boundary converge to the
// hard mask as tau shrinks. A band of tau alone leaves sigmoid(1) = 0.73
// at its edge, so the band is tau·ln(99), where the sigmoid reaches 0.99.
#[test]
fn soft_mask_approaches_hard_mask() {
    let mut r = rng(13);
    for _ in 0..10 {
        let p = star_polygon(&mut r, 9, Point::new(0.0, 0.0), 4.0, 10.0);
        let frame = Frame::square_around(&[&p], 0.1, 64).unwrap();
        let hard = rasterize_hard(&p, &frame);
        for tau in [1e-2, 1e-3, 1e-6].map(|f| f * frame.width) {
            let soft = rasterize_soft(&p, &frame, tau).unwrap().mask;
            let band = tau * 99f64.ln();
            for row in 0..64 {
                for col in 0..64 {
                    let c = frame.cell_center(row, col);
                    if boundary_distance(&xy(&p), c.x, c.y) <= band {
                        continue;
                    }
                    assert!((soft.get(row, col) - hard.get(row, col)).abs() < 0.01);
                }
            }
        }
        // at a vanishing temperature no cell center sits inside the band
        let tiny = rasterize_soft(&p, &frame, 1e-9 * frame.width).unwrap().mask;
        let worst = tiny
            .data()
            .iter()
            .zip(hard.data())
            .map(|(a, b)| (a - b).abs())
            .filter(|d| *d != 0.5)
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "worst {worst}");
    }
}

#[test]
fn degenerate_inputs() {
    let flat = Polygon::from_flat(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0]).unwrap();
    assert!(flat.is_degenerate());
    let sq = rect(0.0, 0.0, 1.0, 1.0);
    assert_eq!(polygon_iou(&flat, &sq, 64), 0.0);
    assert!(Polygon::from_flat(&[0.0, 0.0, 1.0, 1.0]).is_err());
    assert!(Polygon::from_flat(&[0.0, f64::NAN, 1.0, 1.0, 0.0, 1.0]).is_err());
    assert!(Frame::new(Point::new(0.0, 0.0), 1.0, 1.0, 1).is_err());
    let frame = Frame::new(Point::new(0.0, 0.0), 4.0, 4.0, 8).unwrap();
    assert_eq!(rasterize_hard(&flat, &frame).sum(), 0.0);
    assert!(rasterize_soft(&sq, &frame, 0.0).is_err());
}

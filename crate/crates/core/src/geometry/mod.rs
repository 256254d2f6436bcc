//! Polygon primitives: area, membership, resampling, IoU and rasterization.

mod iou;
mod polygon;
mod raster;

pub use iou::{iou_convex, iou_grid, polygon_iou, DEFAULT_IOU_RESOLUTION};
pub use polygon::{distance_to_boundary, BBox, Point, Polygon};
pub use raster::{rasterize_hard, rasterize_soft, CellGrad, Frame, Mask, SoftMask};

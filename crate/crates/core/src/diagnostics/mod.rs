//! Decoder diagnostics: indicatrix polygons and determinant heatmaps.

pub mod heatmap;
pub mod hull;
pub mod indicatrix;

pub use heatmap::{det_heatmap, heatmap_from_dets, heatmap_to_csv, quantile_type7, HeatmapValues};
pub use hull::{
    convex_hull, latent_grid, point_in_convex, point_in_polygon, points_of, polygon_area, polygon_diameter, LatentGrid,
    Point,
};
pub use indicatrix::{
    indicatrices, indicatrices_from_text, indicatrices_to_text, indicatrix_at, indicatrix_from_metric,
    scale_indicatrices, Indicatrix,
};

use crate::autodiff::Tensor;
use crate::error::Result;
use crate::geometry::pullback_metrics;
use crate::nn::Mlp;
use crate::scalar::Scalar;

/// Condition number of the pullback metric at each point; `None` where the
/// metric is not positive definite.
pub fn condition_numbers<T: Scalar>(decoder: &Mlp<T>, points: &[Point<T>]) -> Result<Vec<Option<T>>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let z = Tensor::matrix(points.len(), 2, points.iter().flatten().copied().collect())?;
    Ok(pullback_metrics(decoder, &z)?
        .iter()
        .map(|g| g.condition_number().ok())
        .collect())
}

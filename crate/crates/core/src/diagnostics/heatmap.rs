use std::fmt::Write as _;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::geometry::pullback_metrics;
use crate::nn::Mlp;
use crate::scalar::Scalar;

/// Below this magnitude the mean log-determinant is treated as zero and the
/// heatmap falls back to centering instead of dividing.
pub const MEAN_EPS: f64 = 1e-12;

/// Per-point heatmap values.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapValues<T> {
    /// Clipped values; `None` where the determinant was not positive.
    pub values: Vec<Option<T>>,
    /// Values before clipping.
    pub raw: Vec<Option<T>>,
    /// 5% and 95% quantiles of the valid raw values.
    pub clip_bounds: (T, T),
    /// The mean log-determinant was too close to zero to divide by.
    pub centered_fallback: bool,
}

impl<T: Scalar> HeatmapValues<T> {
    pub fn excluded(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Quantile with linear interpolation between order statistics (R type 7).
/// `sorted` must be ascending and nonempty.
pub fn quantile_type7<T: Scalar>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = T::lit(h - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Normalizes log-determinants to `log det / mean(log det) − 1`, falling
/// back to `log det − mean` when the mean is within [`MEAN_EPS`] of zero.
pub fn normalize_logdets<T: Scalar>(logdets: &[Option<T>]) -> Result<(Vec<Option<T>>, bool)> {
    let valid: Vec<T> = logdets.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::Degenerate("no positive determinants to normalize".into()));
    }
    // exact for constant input
    let x0 = valid[0];
    let mean = x0 + valid.iter().map(|&x| x - x0).sum::<T>() / T::lit(valid.len() as f64);
    let fallback = mean.abs() < T::lit(MEAN_EPS);
    let out = logdets
        .iter()
        .map(|v| v.map(|x| if fallback { x - mean } else { x / mean - T::one() }))
        .collect();
    Ok((out, fallback))
}

/// Heatmap values from determinants; non-positive entries are excluded.
pub fn heatmap_from_dets<T: Scalar>(dets: &[T]) -> Result<HeatmapValues<T>> {
    let logdets: Vec<Option<T>> = dets
        .iter()
        .map(|&d| if d > T::zero() { Some(d.ln()) } else { None })
        .collect();
    let (raw, centered_fallback) = normalize_logdets(&logdets)?;
    let mut sorted: Vec<T> = raw.iter().flatten().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = quantile_type7(&sorted, 0.05);
    let hi = quantile_type7(&sorted, 0.95);
    let values = raw.iter().map(|v| v.map(|x| x.max(lo).min(hi))).collect();
    Ok(HeatmapValues {
        values,
        raw,
        clip_bounds: (lo, hi),
        centered_fallback,
    })
}

/// Determinant heatmap of a decoder at the embedding points `z`.
pub fn det_heatmap<T: Scalar>(decoder: &Mlp<T>, z: &Tensor<T>) -> Result<HeatmapValues<T>> {
    let dets: Vec<T> = pullback_metrics(decoder, z)?.iter().map(|g| g.gen_jac_det()).collect();
    heatmap_from_dets(&dets)
}

/// `x,y,value` rows; excluded points get an empty value.
pub fn heatmap_to_csv<T: Scalar>(z: &Tensor<T>, heat: &HeatmapValues<T>) -> String {
    let mut s = String::from("x,y,value\n");
    for (i, v) in heat.values.iter().enumerate() {
        let value = v.map(|x| format!("{:?}", x.as_f64())).unwrap_or_default();
        let _ = writeln!(s, "{:?},{:?},{}", z.get2(i, 0).as_f64(), z.get2(i, 1).as_f64(), value);
    }
    s
}

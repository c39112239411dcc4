use std::fmt::Write as _;

use crate::autodiff::Tensor;
use crate::diagnostics::hull::{convex_hull, polygon_area, polygon_diameter, Point};
use crate::error::{Error, Result};
use crate::geometry::{pullback_metrics, PullbackMetric};
use crate::nn::Mlp;
use crate::scalar::Scalar;

/// Unit ball of the pullback metric at `center`, as a convex polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicatrix<T> {
    pub center: Point<T>,
    /// Counterclockwise vertices in latent coordinates. Empty when degenerate.
    pub vertices: Vec<Point<T>>,
    /// Shoelace area of the unscaled polygon.
    pub raw_area: T,
    /// The metric was not positive definite, so the indicatrix is unbounded.
    pub degenerate: bool,
}

impl<T: Scalar> Indicatrix<T> {
    /// Shoelace area of the current vertices.
    pub fn area(&self) -> T {
        polygon_area(&self.vertices)
    }

    pub fn diameter(&self) -> T {
        polygon_diameter(&self.vertices)
    }

    fn degenerate_at(center: Point<T>) -> Self {
        Self {
            center,
            vertices: Vec::new(),
            raw_area: T::infinity(),
            degenerate: true,
        }
    }
}

/// Indicatrix of a 2×2 metric: directions `θ_i = 2πi/n` on the unit circle,
/// each scaled to unit metric length, then hulled and shifted to `center`.
pub fn indicatrix_from_metric<T: Scalar>(
    g: &PullbackMetric<T>,
    center: Point<T>,
    n_samples: usize,
) -> Result<Indicatrix<T>> {
    if g.dim() != 2 {
        return Err(Error::LatentDim(g.dim()));
    }
    if n_samples < 3 {
        return Err(Error::Invalid(format!("need at least 3 directions, got {n_samples}")));
    }
    let mut local = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let theta = T::lit(2.0 * std::f64::consts::PI * i as f64 / n_samples as f64);
        let v = [theta.cos(), theta.sin()];
        let norm2 = g.inner(&v, &v);
        if !(norm2 > T::zero()) || !norm2.is_finite() {
            return Ok(Indicatrix::degenerate_at(center));
        }
        let s = norm2.sqrt();
        local.push([v[0] / s, v[1] / s]);
    }
    let hull = match convex_hull(&local) {
        Ok(h) => h,
        Err(Error::Degenerate(_)) => return Ok(Indicatrix::degenerate_at(center)),
        Err(e) => return Err(e),
    };
    if g.eigenvalues()[1] <= T::zero() {
        return Ok(Indicatrix::degenerate_at(center));
    }
    let raw_area = polygon_area(&hull);
    let vertices = hull.iter().map(|v| [v[0] + center[0], v[1] + center[1]]).collect();
    Ok(Indicatrix {
        center,
        vertices,
        raw_area,
        degenerate: false,
    })
}

/// Indicatrix of the decoder's pullback metric at one latent point.
pub fn indicatrix_at<T: Scalar>(decoder: &Mlp<T>, p: Point<T>, n_samples: usize) -> Result<Indicatrix<T>> {
    Ok(indicatrices(decoder, &[p], n_samples)?.remove(0))
}

/// Indicatrices at many latent points.
pub fn indicatrices<T: Scalar>(decoder: &Mlp<T>, points: &[Point<T>], n_samples: usize) -> Result<Vec<Indicatrix<T>>> {
    if decoder.input_dim() != 2 {
        return Err(Error::LatentDim(decoder.input_dim()));
    }
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let z = Tensor::matrix(points.len(), 2, points.iter().flatten().copied().collect())?;
    pullback_metrics(decoder, &z)?
        .iter()
        .zip(points)
        .map(|(g, &p)| indicatrix_from_metric(g, p, n_samples))
        .collect()
}

/// Scales all polygons about their centers by one common factor so that the
/// median diameter of the non-degenerate ones is `target_fraction · spacing`.
pub fn scale_indicatrices<T: Scalar>(
    items: &[Indicatrix<T>],
    target_fraction: T,
    spacing: T,
) -> Result<Vec<Indicatrix<T>>> {
    if items.is_empty() {
        return Err(Error::Invalid("no indicatrices to scale".into()));
    }
    let mut diams: Vec<T> = items
        .iter()
        .filter(|i| !i.degenerate)
        .map(Indicatrix::diameter)
        .collect();
    if diams.is_empty() {
        return Ok(items.to_vec());
    }
    diams.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = diams.len();
    let median = if k % 2 == 1 {
        diams[k / 2]
    } else {
        (diams[k / 2 - 1] + diams[k / 2]) / T::lit(2.0)
    };
    if !(median > T::zero()) {
        return Err(Error::Degenerate("median indicatrix diameter is zero".into()));
    }
    let factor = target_fraction * spacing / median;
    Ok(items
        .iter()
        .map(|ind| {
            let c = ind.center;
            Indicatrix {
                vertices: ind
                    .vertices
                    .iter()
                    .map(|v| [c[0] + (v[0] - c[0]) * factor, c[1] + (v[1] - c[1]) * factor])
                    .collect(),
                ..ind.clone()
            }
        })
        .collect())
}

/// Line-oriented text form:
///
/// ```text
/// indicatrix <index> <cx> <cy> <raw_area> <degenerate 0|1> <vertex count>
/// <x> <y>
/// ...
/// ```
pub fn indicatrices_to_text<T: Scalar>(items: &[Indicatrix<T>]) -> String {
    let mut s = String::from("# indicatrix index cx cy raw_area degenerate n_vertices, then one vertex per line\n");
    for (i, ind) in items.iter().enumerate() {
        let _ = writeln!(
            s,
            "indicatrix {i} {:?} {:?} {:?} {} {}",
            ind.center[0].as_f64(),
            ind.center[1].as_f64(),
            ind.raw_area.as_f64(),
            u8::from(ind.degenerate),
            ind.vertices.len()
        );
        for v in &ind.vertices {
            let _ = writeln!(s, "{:?} {:?}", v[0].as_f64(), v[1].as_f64());
        }
    }
    s
}

/// Inverse of [`indicatrices_to_text`].
pub fn indicatrices_from_text(text: &str) -> Result<Vec<Indicatrix<f64>>> {
    let mut out: Vec<Indicatrix<f64>> = Vec::new();
    let mut pending = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |detail: &str| Error::Parse {
            line: line_no,
            detail: detail.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("not a number: {s}")));
        if fields[0] == "indicatrix" {
            if pending != 0 {
                return Err(bad("previous indicatrix is missing vertices"));
            }
            if fields.len() != 7 {
                return Err(bad("indicatrix header needs 7 fields"));
            }
            pending = fields[6].parse().map_err(|_| bad("bad vertex count"))?;
            out.push(Indicatrix {
                center: [num(fields[2])?, num(fields[3])?],
                vertices: Vec::with_capacity(pending),
                raw_area: num(fields[4])?,
                degenerate: fields[5] == "1",
            });
        } else {
            if pending == 0 || fields.len() != 2 {
                return Err(bad("unexpected vertex line"));
            }
            out.last_mut()
                .expect("header seen")
                .vertices
                .push([num(fields[0])?, num(fields[1])?]);
            pending -= 1;
        }
    }
    if pending != 0 {
        return Err(Error::Parse {
            line: text.lines().count(),
            detail: "truncated vertex list".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn metric(a: f64, b: f64, d: f64) -> PullbackMetric<f64> {
        PullbackMetric {
            g: Tensor::matrix(2, 2, vec![a, b, b, d]).unwrap(),
            base_point: vec![0.0, 0.0],
        }
    }

    #[test]
    fn identity_metric_gives_unit_circle() {
        let ind = indicatrix_from_metric(&metric(1.0, 0.0, 1.0), [0.0, 0.0], 256).unwrap();
        assert!(!ind.degenerate);
        assert_eq!(ind.vertices.len(), 256);
        assert!((ind.raw_area - PI).abs() / PI < 0.01);
        let radii: Vec<f64> = ind.vertices.iter().map(|v| v[0].hypot(v[1])).collect();
        let ratio = radii.iter().cloned().fold(0.0, f64::max) / radii.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(ratio < 1.01);
    }

    #[test]
    fn diagonal_metric_gives_ellipse() {
        let ind = indicatrix_from_metric(&metric(4.0, 0.0, 1.0), [1.0, 2.0], 256).unwrap();
        let xs: Vec<f64> = ind.vertices.iter().map(|v| v[0] - 1.0).collect();
        let ys: Vec<f64> = ind.vertices.iter().map(|v| v[1] - 2.0).collect();
        let ax = xs.iter().cloned().fold(0.0, f64::max);
        let ay = ys.iter().cloned().fold(0.0, f64::max);
        assert!((ay / ax - 2.0).abs() / 2.0 < 0.01);
        assert!((ax - 0.5).abs() < 1e-12);
    }

    #[test]
    fn indefinite_metric_is_flagged() {
        let ind = indicatrix_from_metric(&metric(1.0, 0.0, 0.0), [0.0, 0.0], 64).unwrap();
        assert!(ind.degenerate);
        assert!(ind.vertices.is_empty());
    }

    #[test]
    fn scaling_hits_target_and_keeps_area_ratios() {
        let a = indicatrix_from_metric(&metric(1.0, 0.0, 1.0), [0.0, 0.0], 64).unwrap();
        let b = indicatrix_from_metric(&metric(4.0, 0.5, 2.0), [3.0, 0.0], 64).unwrap();
        let one = scale_indicatrices(std::slice::from_ref(&a), 0.8, 0.5).unwrap();
        assert!((one[0].diameter() - 0.4).abs() < 1e-12);
        let again = scale_indicatrices(&one, 0.8, 0.5).unwrap();
        for (x, y) in again[0].vertices.iter().zip(&one[0].vertices) {
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
        let both = scale_indicatrices(&[a.clone(), b.clone()], 0.3, 1.0).unwrap();
        let before = a.area() / b.area();
        let after = both[0].area() / both[1].area();
        assert!((before - after).abs() < 1e-12 * before);
    }

    #[test]
    fn text_round_trip() {
        let items = vec![
            indicatrix_from_metric(&metric(2.0, 0.1, 1.0), [0.5, -0.25], 8).unwrap(),
            indicatrix_from_metric(&metric(1.0, 0.0, 0.0), [1.0, 1.0], 8).unwrap(),
        ];
        let text = indicatrices_to_text(&items);
        let back = indicatrices_from_text(&text).unwrap();
        assert_eq!(back, items);
    }
}

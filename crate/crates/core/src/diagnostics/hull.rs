use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point in the plane.
pub type Point<T> = [T; 2];

fn cross<T: Scalar>(o: Point<T>, a: Point<T>, b: Point<T>) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by Andrew's monotone chain, counterclockwise, starting at the
/// lowest-x (then lowest-y) point. Collinear boundary points are dropped.
pub fn convex_hull<T: Scalar>(points: &[Point<T>]) -> Result<Vec<Point<T>>> {
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::NonFinite { op: "convex_hull" });
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "hull needs 3 distinct points, got {}",
            pts.len()
        )));
    }
    let mut hull: Vec<Point<T>> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::Degenerate("all points are collinear".into()));
    }
    Ok(hull)
}

/// Inclusive containment test for a counterclockwise convex polygon.
pub fn point_in_convex<T: Scalar>(p: Point<T>, poly: &[Point<T>]) -> bool {
    let n = poly.len();
    let scale = poly
        .iter()
        .flat_map(|q| [q[0].abs(), q[1].abs()])
        .fold(p[0].abs().max(p[1].abs()), T::max)
        .max(T::one());
    let tol = T::lit(1e-12) * scale * scale;
    (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], p) >= -tol)
}

/// Even-odd ray casting test for an arbitrary simple polygon. Points on the
/// boundary may land on either side.
pub fn point_in_polygon<T: Scalar>(p: Point<T>, poly: &[Point<T>]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Signed shoelace area, positive for counterclockwise polygons.
pub fn polygon_area<T: Scalar>(poly: &[Point<T>]) -> T {
    let n = poly.len();
    let mut s = T::zero();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        s = s + a[0] * b[1] - b[0] * a[1];
    }
    s / T::lit(2.0)
}

/// Largest distance between two vertices.
pub fn polygon_diameter<T: Scalar>(poly: &[Point<T>]) -> T {
    let mut d = T::zero();
    for (i, a) in poly.iter().enumerate() {
        for b in &poly[i + 1..] {
            d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
    }
    d
}

/// Rows of a two-column matrix as points.
pub fn points_of<T: Scalar>(z: &Tensor<T>) -> Result<Vec<Point<T>>> {
    if z.rank() != 2 || z.cols() != 2 {
        return Err(Error::shape("points", format!("expected [m x 2], got {:?}", z.shape())));
    }
    Ok((0..z.rows()).map(|i| [z.get2(i, 0), z.get2(i, 1)]).collect())
}

/// Regular grid over the bounding box of `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid<T> {
    /// Grid nodes inside the convex hull of `z`, row by row from the bottom.
    pub points: Vec<Point<T>>,
    /// Smaller of the two axis spacings.
    pub spacing: T,
    pub hull: Vec<Point<T>>,
}

/// `steps × steps` grid over the bounding box of `z`, endpoints included,
/// keeping nodes inside or on the convex hull of `z`.
pub fn latent_grid<T: Scalar>(z: &Tensor<T>, steps: usize) -> Result<LatentGrid<T>> {
    let pts = points_of(z)?;
    if pts.is_empty() {
        return Err(Error::Invalid("empty embedding".into()));
    }
    if steps < 2 {
        return Err(Error::Invalid(format!("grid needs at least 2 steps, got {steps}")));
    }
    let hull = convex_hull(&pts)?;
    if !(polygon_area(&hull) > T::zero()) {
        return Err(Error::Degenerate("embedding has zero area".into()));
    }
    let lo = [0, 1].map(|k| pts.iter().map(|p| p[k]).fold(T::infinity(), T::min));
    let hi = [0, 1].map(|k| pts.iter().map(|p| p[k]).fold(T::neg_infinity(), T::max));
    let denom = T::lit((steps - 1) as f64);
    let step = [0, 1].map(|k| (hi[k] - lo[k]) / denom);
    let at = |k: usize, i: usize| {
        if i == steps - 1 {
            hi[k]
        } else {
            lo[k] + step[k] * T::lit(i as f64)
        }
    };
    let mut points = Vec::new();
    for iy in 0..steps {
        for ix in 0..steps {
            let p = [at(0, ix), at(1, iy)];
            if point_in_convex(p, &hull) {
                points.push(p);
            }
        }
    }
    Ok(LatentGrid {
        points,
        spacing: step[0].min(step[1]),
        hull,
    })
}

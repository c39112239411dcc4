use rayon::prelude::*;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) fn sqdist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

pub(crate) fn check_pair<T: Scalar>(x: &Tensor<T>, z: &Tensor<T>) -> Result<usize> {
    if x.rank() != 2 || z.rank() != 2 || x.rows() != z.rows() {
        return Err(Error::shape(
            "metrics",
            format!("inputs {:?} and embedding {:?}", x.shape(), z.shape()),
        ));
    }
    if !x.is_finite() || !z.is_finite() {
        return Err(Error::NonFinite { op: "metrics" });
    }
    Ok(x.rows())
}

/// Other points ordered by distance to `i`, ties by ascending index.
pub(crate) fn neighbor_order<T: Scalar>(data: &Tensor<T>, i: usize) -> Vec<usize> {
    let xi = data.row(i);
    let mut d: Vec<(T, usize)> = (0..data.rows())
        .filter(|&j| j != i)
        .map(|j| (sqdist(xi, data.row(j)), j))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d.into_iter().map(|(_, j)| j).collect()
}

fn check_ks(ks: &[usize], m: usize) -> Result<()> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Invalid(
            "neighborhood sizes must be nonempty and positive".into(),
        ));
    }
    let kmax = *ks.iter().max().expect("nonempty");
    if m <= kmax {
        return Err(Error::Invalid(format!(
            "need more than {kmax} points for k = {kmax}, got {m}"
        )));
    }
    Ok(())
}

/// `k = 10, 20, …, 200`.
pub fn default_ks() -> Vec<usize> {
    (10..=200).step_by(10).collect()
}

/// Fraction of embedding neighbors that are also data neighbors, averaged
/// over points and then over `ks`.
pub fn knn_recall<T: Scalar>(x: &Tensor<T>, z: &Tensor<T>, ks: &[usize]) -> Result<f64> {
    let m = check_pair(x, z)?;
    check_ks(ks, m)?;
    let kmax = *ks.iter().max().expect("checked");
    // hits[i][t] = overlap count for ks[t]
    let hits: Vec<Vec<usize>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let nx = neighbor_order(x, i);
            let nz = neighbor_order(z, i);
            let mut rank_x = vec![usize::MAX; m];
            for (r, &j) in nx.iter().take(kmax).enumerate() {
                rank_x[j] = r;
            }
            ks.iter()
                .map(|&k| nz[..k].iter().filter(|&&j| rank_x[j] < k).count())
                .collect()
        })
        .collect();
    let mut total = 0.0;
    for (t, &k) in ks.iter().enumerate() {
        let s: usize = hits.iter().map(|h| h[t]).sum();
        total += s as f64 / (m * k) as f64;
    }
    Ok(total / ks.len() as f64)
}

/// Trustworthiness, averaged over `ks`.
pub fn trustworthiness<T: Scalar>(x: &Tensor<T>, z: &Tensor<T>, ks: &[usize]) -> Result<f64> {
    let m = check_pair(x, z)?;
    check_ks(ks, m)?;
    for &k in ks {
        if 2 * m <= 3 * k + 1 {
            return Err(Error::Invalid(format!("k = {k} too large for {m} points")));
        }
    }
    let penalties: Vec<Vec<usize>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let nx = neighbor_order(x, i);
            let nz = neighbor_order(z, i);
            let mut rank_x = vec![0usize; m];
            for (r, &j) in nx.iter().enumerate() {
                rank_x[j] = r + 1;
            }
            ks.iter()
                .map(|&k| nz[..k].iter().filter(|&&j| rank_x[j] > k).map(|&j| rank_x[j] - k).sum())
                .collect()
        })
        .collect();
    let mut total = 0.0;
    let mf = m as f64;
    for (t, &k) in ks.iter().enumerate() {
        let s: usize = penalties.iter().map(|p| p[t]).sum();
        let kf = k as f64;
        total += 1.0 - 2.0 / (mf * kf * (2.0 * mf - 3.0 * kf - 1.0)) * s as f64;
    }
    Ok(total / ks.len() as f64)
}

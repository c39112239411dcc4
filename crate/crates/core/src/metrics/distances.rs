use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::metrics::neighbors::{check_pair, sqdist};
use crate::scalar::Scalar;

/// `Σ_{i<j} (d_X(i,j) − d_Z(i,j))²`.
pub fn stress<T: Scalar>(x: &Tensor<T>, z: &Tensor<T>) -> Result<f64> {
    let m = check_pair(x, z)?;
    if m < 2 {
        return Err(Error::Invalid("stress needs at least 2 points".into()));
    }
    let mut s = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let dx = sqdist(x.row(i), x.row(j)).as_f64().sqrt();
            let dz = sqdist(z.row(i), z.row(j)).as_f64().sqrt();
            s += (dx - dz) * (dx - dz);
        }
    }
    Ok(s)
}

/// 1-based ranks with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("zero variance in correlation".into()));
    }
    Ok(sab / (saa.sqrt() * sbb.sqrt()))
}

fn spearman_of_pairs<T: Scalar>(
    x: &Tensor<T>,
    z: &Tensor<T>,
    pairs: impl Iterator<Item = (usize, usize)>,
) -> Result<f64> {
    let (dx, dz): (Vec<f64>, Vec<f64>) = pairs
        .map(|(i, j)| {
            (
                sqdist(x.row(i), x.row(j)).as_f64().sqrt(),
                sqdist(z.row(i), z.row(j)).as_f64().sqrt(),
            )
        })
        .unzip();
    pearson(&average_ranks(&dx), &average_ranks(&dz))
}

/// Spearman correlation between the pairwise distances of `x` and `z` over all pairs.
pub fn spearman_distances<T: Scalar>(x: &Tensor<T>, z: &Tensor<T>) -> Result<f64> {
    let m = check_pair(x, z)?;
    if m < 3 {
        return Err(Error::Invalid("spearman needs at least 3 points".into()));
    }
    spearman_of_pairs(x, z, (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))))
}

/// Spearman correlation over `n_pairs` random pairs drawn with a seeded generator.
pub fn spearman_distances_sampled<T: Scalar>(x: &Tensor<T>, z: &Tensor<T>, n_pairs: usize, seed: u64) -> Result<f64> {
    let m = check_pair(x, z)?;
    if m < 3 {
        return Err(Error::Invalid("spearman needs at least 3 points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|_| {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    spearman_of_pairs(x, z, pairs.into_iter())
}

fn densities<T: Scalar>(data: &Tensor<T>, sigma: f64) -> Result<Vec<f64>> {
    let m = data.rows();
    let maxd2 = (0..m)
        .into_par_iter()
        .map(|i| {
            (i + 1..m)
                .map(|j| sqdist(data.row(i), data.row(j)).as_f64())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    if !(maxd2 > 0.0) {
        return Err(Error::Degenerate("point set has zero diameter".into()));
    }
    let f: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| (-sqdist(data.row(i), data.row(j)).as_f64() / (sigma * maxd2)).exp())
                .sum()
        })
        .collect();
    let total: f64 = f.iter().sum();
    Ok(f.into_iter().map(|v| v / total).collect())
}

/// `KL(f_X ‖ f_Z)` between normalized kernel densities with bandwidth `σ`
/// relative to each set's squared diameter.
pub fn kl_sigma<T: Scalar>(x: &Tensor<T>, z: &Tensor<T>, sigma: f64) -> Result<f64> {
    let m = check_pair(x, z)?;
    if !(sigma > 0.0) {
        return Err(Error::Invalid(format!("sigma must be positive, got {sigma}")));
    }
    if m < 2 {
        return Err(Error::Invalid("KL needs at least 2 points".into()));
    }
    let p = densities(x, sigma)?;
    let q = densities(z, sigma)?;
    Ok(p.iter().zip(&q).map(|(&p, &q)| p * (p.ln() - q.ln())).sum())
}

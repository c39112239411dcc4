//! Brute-force reference implementations shared by several test targets.
#![allow(dead_code)]

use geomae::datasets::{LandRaster, ANTARCTICA, OCEAN};

pub fn dist_matrix(p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    p.iter()
        .map(|a| {
            p.iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

/// 1-based rank of each other point by distance from `i`, ties by index.
pub fn rank_table(d: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let m = d.len();
    (0..m)
        .map(|i| {
            let mut r = vec![0; m];
            for j in 0..m {
                if j != i {
                    r[j] = 1
                        + (0..m)
                            .filter(|&q| q != i && q != j && (d[i][q] < d[i][j] || (d[i][q] == d[i][j] && q < j)))
                            .count();
                }
            }
            r
        })
        .collect()
}

pub fn oracle_knn(x: &[Vec<f64>], z: &[Vec<f64>], ks: &[usize]) -> f64 {
    let (rx, rz) = (rank_table(&dist_matrix(x)), rank_table(&dist_matrix(z)));
    let m = x.len();
    let mut total = 0.0;
    for &k in ks {
        let mut hits = 0usize;
        for i in 0..m {
            hits += (0..m).filter(|&j| j != i && rz[i][j] <= k && rx[i][j] <= k).count();
        }
        total += hits as f64 / (m * k) as f64;
    }
    total / ks.len() as f64
}

pub fn oracle_trust(x: &[Vec<f64>], z: &[Vec<f64>], ks: &[usize]) -> f64 {
    let (rx, rz) = (rank_table(&dist_matrix(x)), rank_table(&dist_matrix(z)));
    let m = x.len();
    let mf = m as f64;
    let mut total = 0.0;
    for &k in ks {
        let mut penalty = 0usize;
        for i in 0..m {
            for j in 0..m {
                if j != i && rz[i][j] <= k && rx[i][j] > k {
                    penalty += rx[i][j] - k;
                }
            }
        }
        let kf = k as f64;
        total += 1.0 - 2.0 / (mf * kf * (2.0 * mf - 3.0 * kf - 1.0)) * penalty as f64;
    }
    total / ks.len() as f64
}

pub fn oracle_stress(x: &[Vec<f64>], z: &[Vec<f64>]) -> f64 {
    let (dx, dz) = (dist_matrix(x), dist_matrix(z));
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            s += (dx[i][j] - dz[i][j]).powi(2);
        }
    }
    s
}

/// Ranks as `1 + #smaller + (#equal − 1)/2`.
pub fn count_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_spearman(x: &[Vec<f64>], z: &[Vec<f64>]) -> f64 {
    let (dx, dz) = (dist_matrix(x), dist_matrix(z));
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            a.push(dx[i][j]);
            b.push(dz[i][j]);
        }
    }
    let (ra, rb) = (count_ranks(&a), count_ranks(&b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(p, q)| (p - ma) * (q - mb)).sum();
    let va: f64 = ra.iter().map(|p| (p - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|q| (q - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn oracle_density(p: &[Vec<f64>], sigma: f64) -> Vec<f64> {
    let d = dist_matrix(p);
    let diam2 = d.iter().flatten().fold(0.0f64, |a, &v| a.max(v * v));
    let f: Vec<f64> = d
        .iter()
        .map(|row| row.iter().map(|v| (-(v * v) / (sigma * diam2)).exp()).sum())
        .collect();
    let total: f64 = f.iter().sum();
    f.iter().map(|v| v / total).collect()
}

pub fn oracle_kl(x: &[Vec<f64>], z: &[Vec<f64>], sigma: f64) -> f64 {
    let (p, q) = (oracle_density(x, sigma), oracle_density(z, sigma));
    p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum()
}

/// Land fraction outside Antarctica by midpoint integration of cos(lat) over
/// each raster row.
pub fn land_fraction_oracle(r: &LandRaster) -> f64 {
    let (rows, cols) = r.dims();
    let res = r.resolution() as f64;
    let sub = 64;
    let (mut land, mut total) = (0.0, 0.0);
    for row in 0..rows {
        let land_cells = (0..cols)
            .filter(|&c| !matches!(r.cell(row, c), OCEAN | ANTARCTICA))
            .count() as f64;
        for s in 0..sub {
            let lat = 90.0 - res * (row as f64 + (s as f64 + 0.5) / sub as f64);
            let w = lat.to_radians().cos();
            land += w * land_cells;
            total += w * cols as f64;
        }
    }
    land / total
}

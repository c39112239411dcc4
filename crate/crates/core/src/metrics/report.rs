use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::metrics::distances::{kl_sigma, spearman_distances, spearman_distances_sampled, stress};
use crate::metrics::neighbors::{check_pair, default_ks, knn_recall, trustworthiness};
use crate::metrics::ranks::RankReport;
use crate::scalar::Scalar;

/// Column order of the report: name, higher is better.
pub const METRICS: [(&str, bool); 6] = [
    ("KL0.1", false),
    ("kNN", true),
    ("Trust", true),
    ("Stress", false),
    ("KL100", false),
    ("Spear", true),
];

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Fraction of points evaluated, in `(0, 1]`.
    pub subsample: f64,
    pub seed: u64,
    pub ks: Vec<usize>,
    /// Above this many evaluated points Spearman uses sampled pairs.
    pub spearman_full_limit: usize,
    pub spearman_pairs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            subsample: 0.1,
            seed: 0,
            ks: default_ks(),
            spearman_full_limit: 2000,
            spearman_pairs: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMeta {
    pub ks: Vec<usize>,
    pub n_points: usize,
    pub n_evaluated: usize,
    pub subsample: f64,
    pub seed: u64,
    /// `None` when Spearman used all pairs.
    pub spearman_pairs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub label: String,
    /// Values in [`METRICS`] order.
    pub values: [f64; 6],
    pub meta: EvalMeta,
}

impl MetricsReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        METRICS.iter().position(|(n, _)| *n == name).map(|i| self.values[i])
    }
}

/// Sorted indices of a seeded random subset of `round(fraction · m)` rows.
pub fn subsample_indices(m: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Invalid(format!(
            "subsample fraction must be in (0, 1], got {fraction}"
        )));
    }
    let n = ((m as f64 * fraction).round() as usize).clamp(1.min(m), m);
    if n == m {
        return Ok((0..m).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, m, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// All six metrics on a seeded subsample shared by `x` and `z`.
pub fn evaluate_all<T: Scalar>(label: &str, x: &Tensor<T>, z: &Tensor<T>, opts: &EvalOptions) -> Result<MetricsReport> {
    let m = check_pair(x, z)?;
    let idx = subsample_indices(m, opts.subsample, opts.seed)?;
    let xs = x.select_rows(&idx);
    let zs = z.select_rows(&idx);
    let n = idx.len();
    let (spear, pairs) = if n > opts.spearman_full_limit {
        (
            spearman_distances_sampled(&xs, &zs, opts.spearman_pairs, opts.seed)?,
            Some(opts.spearman_pairs),
        )
    } else {
        (spearman_distances(&xs, &zs)?, None)
    };
    let values = [
        kl_sigma(&xs, &zs, 0.1)?,
        knn_recall(&xs, &zs, &opts.ks)?,
        trustworthiness(&xs, &zs, &opts.ks)?,
        stress(&xs, &zs)?,
        kl_sigma(&xs, &zs, 100.0)?,
        spear,
    ];
    Ok(MetricsReport {
        label: label.to_string(),
        values,
        meta: EvalMeta {
            ks: opts.ks.clone(),
            n_points: m,
            n_evaluated: n,
            subsample: opts.subsample,
            seed: opts.seed,
            spearman_pairs: pairs,
        },
    })
}

pub fn reports_to_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from("embedding");
    for (name, _) in METRICS {
        s.push(',');
        s.push_str(name);
    }
    s.push_str(",n_points,n_evaluated,subsample,seed,k_min,k_max,spearman_pairs\n");
    for r in reports {
        s.push_str(&r.label);
        for v in r.values {
            let _ = write!(s, ",{v:?}");
        }
        let _ = writeln!(
            s,
            ",{},{},{:?},{},{},{},{}",
            r.meta.n_points,
            r.meta.n_evaluated,
            r.meta.subsample,
            r.meta.seed,
            r.meta.ks.iter().min().unwrap_or(&0),
            r.meta.ks.iter().max().unwrap_or(&0),
            r.meta.spearman_pairs.map_or("all".to_string(), |p| p.to_string())
        );
    }
    s
}

fn cell(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

/// Aligned text table, one row per embedding, optionally with rank columns.
pub fn reports_to_table(reports: &[MetricsReport], ranks: Option<&RankReport>) -> String {
    let mut header: Vec<String> = vec!["embedding".into()];
    header.extend(
        METRICS
            .iter()
            .map(|(n, hb)| format!("{n} {}", if *hb { "(+)" } else { "(-)" })),
    );
    if ranks.is_some() {
        header.push("<Rank>".into());
    }
    let mut rows: Vec<Vec<String>> = vec![header];
    for (i, r) in reports.iter().enumerate() {
        let mut row = vec![r.label.clone()];
        row.extend(r.values.iter().map(|&v| cell(v)));
        if let Some(rk) = ranks {
            row.push(format!("{:.2}", rk.mean_rank[i]));
        }
        rows.push(row);
    }
    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| {
                if c == 0 {
                    format!("{v:<w$}", w = widths[c])
                } else {
                    format!("{v:>w$}", w = widths[c])
                }
            })
            .collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identity_embedding_is_perfect() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Tensor::matrix(40, 3, (0..120).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let opts = EvalOptions {
            subsample: 1.0,
            ks: vec![5, 10],
            ..EvalOptions::default()
        };
        let r = evaluate_all("x", &x, &x, &opts).unwrap();
        assert_eq!(r.values, [0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        assert!(reports_to_csv(&[r.clone()]).starts_with("embedding,KL0.1,kNN,Trust,Stress,KL100,Spear,"));
        assert!(reports_to_table(&[r], None).lines().count() == 2);
    }

    #[test]
    fn subsample_is_seeded() {
        let a = subsample_indices(1000, 0.1, 3).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, subsample_indices(1000, 0.1, 3).unwrap());
        assert_ne!(a, subsample_indices(1000, 0.1, 4).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample_indices(7, 1.0, 0).unwrap(), (0..7).collect::<Vec<_>>());
        assert!(subsample_indices(7, 0.0, 0).is_err());
    }
}

use crate::error::{Error, Result};
use crate::metrics::distances::average_ranks;

/// Scores of several models on several datasets, one value per metric.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    /// Metric names with `true` when higher is better.
    pub metrics: Vec<(String, bool)>,
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    /// `values[dataset][model][metric]`.
    pub values: Vec<Vec<Vec<Option<f64>>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub models: Vec<String>,
    pub metrics: Vec<String>,
    /// `metric_ranks[model][metric]`: rank averaged over datasets.
    pub metric_ranks: Vec<Vec<f64>>,
    /// Mean of `metric_ranks[model]` over metrics.
    pub mean_rank: Vec<f64>,
}

/// Ranks models per dataset and metric (1 = best, ties share the mean
/// position), averages over datasets, then over metrics.
pub fn aggregate_ranks(table: &RankTable) -> Result<RankReport> {
    let (nd, nm, nk) = (table.datasets.len(), table.models.len(), table.metrics.len());
    if nd == 0 || nm == 0 || nk == 0 {
        return Err(Error::Invalid("rank table needs datasets, models and metrics".into()));
    }
    if table.values.len() != nd
        || table
            .values
            .iter()
            .any(|d| d.len() != nm || d.iter().any(|m| m.len() != nk))
    {
        return Err(Error::shape("aggregate_ranks", "value table does not match its labels"));
    }
    let mut sums = vec![vec![0.0; nk]; nm];
    for (d, per_model) in table.values.iter().enumerate() {
        for (k, (name, higher_better)) in table.metrics.iter().enumerate() {
            let column = (0..nm)
                .map(|m| {
                    per_model[m][k]
                        .filter(|v| v.is_finite())
                        .map(|v| if *higher_better { -v } else { v })
                        .ok_or_else(|| {
                            Error::Invalid(format!(
                                "missing {name} for model {} on dataset {}",
                                table.models[m], table.datasets[d]
                            ))
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            for (m, r) in average_ranks(&column).into_iter().enumerate() {
                sums[m][k] += r;
            }
        }
    }
    let metric_ranks: Vec<Vec<f64>> = sums
        .into_iter()
        .map(|row| row.into_iter().map(|s| s / nd as f64).collect())
        .collect();
    let mean_rank = metric_ranks.iter().map(|r| r.iter().sum::<f64>() / nk as f64).collect();
    Ok(RankReport {
        models: table.models.clone(),
        metrics: table.metrics.iter().map(|(n, _)| n.clone()).collect(),
        metric_ranks,
        mean_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(values: Vec<Vec<Vec<Option<f64>>>>, models: &[&str]) -> RankTable {
        RankTable {
            metrics: vec![("kNN".into(), true), ("Stress".into(), false)],
            models: models.iter().map(|s| s.to_string()).collect(),
            datasets: (0..values.len()).map(|d| format!("d{d}")).collect(),
            values,
        }
    }

    #[test]
    fn single_model_ranks_first() {
        let r = aggregate_ranks(&table(vec![vec![vec![Some(0.5), Some(3.0)]]], &["a"])).unwrap();
        assert_eq!(r.mean_rank, vec![1.0]);
    }

    #[test]
    fn dominant_model() {
        let v = vec![
            vec![vec![Some(0.9), Some(1.0)], vec![Some(0.5), Some(2.0)]],
            vec![vec![Some(0.8), Some(0.1)], vec![Some(0.7), Some(0.2)]],
        ];
        let r = aggregate_ranks(&table(v, &["a", "b"])).unwrap();
        assert_eq!(r.mean_rank, vec![1.0, 2.0]);
    }

    #[test]
    fn ties_share_positions() {
        let v = vec![vec![
            vec![Some(0.9), Some(1.0)],
            vec![Some(0.9), Some(1.0)],
            vec![Some(0.1), Some(5.0)],
        ]];
        let r = aggregate_ranks(&table(v, &["a", "b", "c"])).unwrap();
        assert_eq!(r.mean_rank, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn missing_cell_is_an_error() {
        let v = vec![vec![vec![Some(0.9), None], vec![Some(0.5), Some(2.0)]]];
        assert!(aggregate_ranks(&table(v, &["a", "b"])).is_err());
    }
}

//! Rank aggregation on the published per-dataset metric table, checked
//! against the published aggregated ranks.

use geomae::metrics::{aggregate_ranks, RankTable, METRICS};

#[path = "support/published.rs"]
mod published;
use published::{published, EXPECTED, MODELS};

fn table(datasets: &[(&'static str, [[f64; 6]; 7])]) -> RankTable {
    RankTable {
        metrics: METRICS.iter().map(|(n, hb)| (n.to_string(), *hb)).collect(),
        models: MODELS.iter().map(|s| s.to_string()).collect(),
        datasets: datasets.iter().map(|(d, _)| d.to_string()).collect(),
        values: datasets
            .iter()
            .map(|(_, rows)| rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect())
            .collect(),
    }
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

#[test]
fn published_aggregate_ranks_are_reproduced() {
    let report = aggregate_ranks(&table(&published())).unwrap();
    for (m, expected) in EXPECTED.iter().enumerate() {
        for k in 0..6 {
            assert_eq!(
                round1(report.metric_ranks[m][k]),
                expected[k],
                "{} {}",
                MODELS[m],
                METRICS[k].0
            );
        }
        assert_eq!(round1(report.mean_rank[m]), expected[6], "{} mean rank", MODELS[m]);
    }
}

#[test]
fn mean_rank_ordering_matches_published_column() {
    let report = aggregate_ranks(&table(&published())).unwrap();
    let mut order: Vec<usize> = (0..7).collect();
    order.sort_by(|&a, &b| report.mean_rank[a].partial_cmp(&report.mean_rank[b]).unwrap());
    let names: Vec<&str> = order.iter().map(|&i| MODELS[i]).collect();
    assert_eq!(
        names,
        ["Geom AE", "Topo AE", "UMAP AE", "UMAP", "PCA", "t-SNE", "Vanilla AE"]
    );
}

#[test]
fn mnist_alone_ranks_lower_kl_first() {
    let mnist: Vec<_> = published().into_iter().take(1).collect();
    let report = aggregate_ranks(&table(&mnist)).unwrap();
    // KL0.1 on MNIST: Topo 0.094 is best, Vanilla 0.133 second, UMAP 0.19 last
    assert_eq!(report.metric_ranks[2][0], 1.0);
    assert_eq!(report.metric_ranks[1][0], 2.0);
    assert_eq!(report.metric_ranks[4][0], 7.0);
    // Spear is higher-better: Topo 0.64 best, t-SNE 0.3 worst
    assert_eq!(report.metric_ranks[2][5], 1.0);
    assert_eq!(report.metric_ranks[5][5], 7.0);
}

#[test]
fn unbroken_ties_share_ranks() {
    let mut data = published();
    // restore the published three-way tie on FashionMNIST Trust
    for m in [0, 3, 4] {
        data[1].1[m][2] = 0.971;
    }
    let fm: Vec<_> = data.into_iter().skip(1).take(1).collect();
    let report = aggregate_ranks(&table(&fm)).unwrap();
    for m in [0, 3, 4] {
        assert_eq!(report.metric_ranks[m][2], 2.0);
    }
}

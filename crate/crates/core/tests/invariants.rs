//! Randomized invariants over generated inputs.

use geomae::autodiff::Tensor;
use geomae::datasets::{read_csv, write_csv_to, EmbeddingFrame, LABEL_COLUMN};
use geomae::diagnostics::heatmap::heatmap_from_dets;
use geomae::diagnostics::hull::{convex_hull, point_in_convex};
use geomae::geometry::{geometric_loss_value, DetOptions};
use geomae::metrics::{knn_recall, spearman_distances, trustworthiness};
use geomae::nn::Mlp;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor<f64>> {
    prop::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |d| Tensor::matrix(rows, cols, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn det_loss_is_nonnegative(seed in 0u64..10_000, z in matrix(16, 2)) {
        let dec = Mlp::<f64>::init(&[2, 8, 8, 3], seed).unwrap();
        let opts = DetOptions { det_floor: Some(1e-300) };
        let v = geometric_loss_value(&dec, &z, &opts).unwrap();
        prop_assert!(v >= 0.0);
    }

    #[test]
    fn hull_contains_every_point(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..60)) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
        if let Ok(hull) = convex_hull(&pts) {
            if hull.len() >= 3 {
                for p in &pts {
                    prop_assert!(point_in_convex(*p, &hull));
                }
            }
        }
    }

    #[test]
    fn heatmap_values_stay_in_clip_bounds(dets in prop::collection::vec(1e-3f64..1e3, 2..200)) {
        let h = heatmap_from_dets(&dets).unwrap();
        let (lo, hi) = h.clip_bounds;
        prop_assert!(lo <= hi);
        for v in h.values.iter().flatten() {
            prop_assert!(*v >= lo && *v <= hi);
        }
    }

    #[test]
    fn rank_metrics_ignore_uniform_scaling(x in matrix(20, 3), z in matrix(20, 2)) {
        let scaled = Tensor::matrix(20, 2, z.data().iter().map(|v| 3.0 * v).collect()).unwrap();
        let ks = [2, 5];
        prop_assert_eq!(knn_recall(&x, &z, &ks).unwrap(), knn_recall(&x, &scaled, &ks).unwrap());
        prop_assert_eq!(trustworthiness(&x, &z, &ks).unwrap(), trustworthiness(&x, &scaled, &ks).unwrap());
        let (a, b) = (spearman_distances(&x, &z).unwrap(), spearman_distances(&x, &scaled).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip(x in matrix(7, 3), labels in prop::collection::vec(-3i64..20, 7)) {
        let frame = EmbeddingFrame::new(x, labels).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &frame).unwrap();
        let back = read_csv(buf.as_slice(), LABEL_COLUMN).unwrap();
        prop_assert_eq!(back.x, frame.x);
        prop_assert_eq!(back.labels, frame.labels);
    }
}

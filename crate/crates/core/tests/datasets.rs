//! Toy manifold generators checked against closed forms and an area oracle.

use geomae::datasets::{
    earth_generate, generate, lat_lon, read_csv, standardize, swiss_roll, write_csv_to, DatasetKind, LandRaster,
    LABEL_COLUMN,
};

#[path = "support/oracles.rs"]
mod oracles;
use oracles::land_fraction_oracle;

#[test]
fn earth_acceptance_matches_land_area() {
    let raster = LandRaster::bundled();
    let expected = land_fraction_oracle(&raster);
    let (frame, stats) = earth_generate(100_000, 11, &raster).unwrap();
    let rate = stats.acceptance_rate();
    assert!(
        (rate - expected).abs() / expected < 0.02,
        "rate {rate} vs area {expected}"
    );
    for i in 0..frame.len() {
        let p = frame.x.row(i);
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let (lat, lon) = lat_lon([p[0], p[1], p[2]]);
        assert_eq!(raster.code_at(lat, lon) as i64, frame.labels[i]);
    }
}

#[test]
fn swiss_roll_points_lie_on_the_surface() {
    let (frame, ts) = swiss_roll(2000, 3).unwrap();
    for (i, t) in ts.iter().enumerate() {
        let p = frame.x.row(i);
        assert!((0.0..21.0).contains(&p[0]));
        assert!((p[1] - t * t.sin()).abs() < 1e-12 && (p[2] - t * t.cos()).abs() < 1e-12);
        assert!((p[1].hypot(p[2]) - t).abs() < 1e-12);
    }
    assert!(frame.labels.iter().all(|l| (0..6).contains(l)));
}

#[test]
fn hemisphere_is_upper_unit_sphere() {
    let f = generate(DatasetKind::Hemisphere, 1000, 5).unwrap();
    for i in 0..f.len() {
        let p = f.x.row(i);
        assert!(p[2] >= 0.0);
        assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn generators_are_seeded() {
    for kind in [
        DatasetKind::Earth,
        DatasetKind::SwissRoll,
        DatasetKind::Hemisphere,
        DatasetKind::TwoMoons3d,
    ] {
        let a = generate(kind, 300, 9).unwrap();
        assert_eq!(a, generate(kind, 300, 9).unwrap(), "{kind}");
        assert_ne!(a.x, generate(kind, 300, 10).unwrap().x, "{kind}");
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let f = generate(DatasetKind::TwoMoons3d, 200, 2).unwrap();
    let mut buf = Vec::new();
    write_csv_to(&mut buf, &f).unwrap();
    let back = read_csv(buf.as_slice(), LABEL_COLUMN).unwrap();
    assert_eq!(back.x, f.x);
    assert_eq!(back.labels, f.labels);
}

#[test]
fn standardized_columns_have_zero_mean_unit_variance() {
    let s = standardize(&generate(DatasetKind::SwissRoll, 1000, 1).unwrap()).unwrap();
    let x = &s.frame.x;
    for j in 0..x.cols() {
        let col: Vec<f64> = (0..x.rows()).map(|i| x.get2(i, j)).collect();
        let mu = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / col.len() as f64;
        assert!(mu.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }
}

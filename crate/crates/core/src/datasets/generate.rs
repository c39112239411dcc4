use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::autodiff::Tensor;
use crate::datasets::frame::EmbeddingFrame;
use crate::datasets::raster::{LandRaster, ANTARCTICA, CONTINENTS, OCEAN};
use crate::error::{Error, Result};

/// Uniform point on the unit sphere from a normalized Gaussian vector.
pub fn sphere_point<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 1e-12 {
            return [v[0] / r, v[1] / r, v[2] / r];
        }
    }
}

/// Latitude and longitude in degrees.
pub fn lat_lon(p: [f64; 3]) -> (f64, f64) {
    (p[2].clamp(-1.0, 1.0).asin().to_degrees(), p[1].atan2(p[0]).to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingStats {
    pub attempts: u64,
    pub accepted: u64,
}

impl SamplingStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.attempts as f64
    }
}

/// `n` points drawn uniformly from the land of `raster` outside Antarctica,
/// labeled by continent code.
pub fn earth_generate(n: usize, seed: u64, raster: &LandRaster) -> Result<(EmbeddingFrame, SamplingStats)> {
    let eligible = |c: u8| c != OCEAN && c != ANTARCTICA;
    if raster.area_fraction(eligible) <= 0.0 {
        return Err(Error::Invalid("raster has no land outside Antarctica".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(3 * n);
    let mut labels = Vec::with_capacity(n);
    let mut stats = SamplingStats {
        attempts: 0,
        accepted: 0,
    };
    while labels.len() < n {
        let p = sphere_point(&mut rng);
        stats.attempts += 1;
        let (lat, lon) = lat_lon(p);
        let code = raster.code_at(lat, lon);
        if eligible(code) {
            data.extend_from_slice(&p);
            labels.push(code as i64);
            stats.accepted += 1;
        }
    }
    let mut frame = EmbeddingFrame::new(Tensor::matrix(n, 3, data)?, labels)?;
    frame.names = CONTINENTS.iter().map(|s| s.to_string()).collect();
    Ok((frame, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Earth,
    SwissRoll,
    Hemisphere,
    TwoMoons3d,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Earth => "earth",
            DatasetKind::SwissRoll => "swiss_roll",
            DatasetKind::Hemisphere => "hemisphere",
            DatasetKind::TwoMoons3d => "two_moons_3d",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "earth" => Ok(DatasetKind::Earth),
            "swiss_roll" => Ok(DatasetKind::SwissRoll),
            "hemisphere" => Ok(DatasetKind::Hemisphere),
            "two_moons_3d" => Ok(DatasetKind::TwoMoons3d),
            other => Err(Error::Invalid(format!("unknown dataset kind {other:?}"))),
        }
    }
}

/// Range of the swiss roll angle `t`.
pub const SWISS_ROLL_T: (f64, f64) = (1.5 * PI, 4.5 * PI);
/// Range of the swiss roll height `h`.
pub const SWISS_ROLL_H: (f64, f64) = (0.0, 21.0);

/// Swiss roll `(h, t sin t, t cos t)` with `t ~ U(1.5π, 4.5π)`, `h ~ U(0, 21)`.
/// Labels split the `t` range into 6 equal bands. Also returns `t` per point.
pub fn swiss_roll(n: usize, seed: u64) -> Result<(EmbeddingFrame, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(3 * n);
    let mut labels = Vec::with_capacity(n);
    let mut ts = Vec::with_capacity(n);
    let (t0, t1) = SWISS_ROLL_T;
    for _ in 0..n {
        let t = rng.random_range(t0..t1);
        let h = rng.random_range(SWISS_ROLL_H.0..SWISS_ROLL_H.1);
        data.extend_from_slice(&[h, t * t.sin(), t * t.cos()]);
        labels.push((((t - t0) / (t1 - t0)) * 6.0).floor().min(5.0) as i64);
        ts.push(t);
    }
    Ok((EmbeddingFrame::new(Tensor::matrix(n, 3, data)?, labels)?, ts))
}

/// Upper unit hemisphere (`x₃ ≥ 0`), uniform. Labels are 4 bands of polar angle.
pub fn hemisphere(n: usize, seed: u64) -> Result<EmbeddingFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(3 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = sphere_point(&mut rng);
        p[2] = p[2].abs();
        let polar = p[2].clamp(0.0, 1.0).acos();
        labels.push(((polar / (PI / 2.0)) * 4.0).floor().min(3.0) as i64);
        data.extend_from_slice(&p);
    }
    EmbeddingFrame::new(Tensor::matrix(n, 3, data)?, labels)
}

/// Two interleaved half circles in the `x₁x₂` plane, lifted by
/// `x₃ = ±0.5 sin(πs)` (sign by moon), with Gaussian noise of standard
/// deviation 0.05 on every coordinate. Labels are the moon index.
pub fn two_moons_3d(n: usize, seed: u64) -> Result<EmbeddingFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(3 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let moon = (i % 2) as i64;
        let s: f64 = rng.random_range(0.0..1.0);
        let a = PI * s;
        let (x, y, sign) = if moon == 0 {
            (a.cos(), a.sin(), 1.0)
        } else {
            (1.0 - a.cos(), 0.5 - a.sin(), -1.0)
        };
        let z = sign * 0.5 * a.sin();
        let noise = |rng: &mut ChaCha8Rng| 0.05 * rng.sample::<f64, _>(StandardNormal);
        data.extend_from_slice(&[x + noise(&mut rng), y + noise(&mut rng), z + noise(&mut rng)]);
        labels.push(moon);
    }
    EmbeddingFrame::new(Tensor::matrix(n, 3, data)?, labels)
}

/// Any of the toy manifolds by kind. Earth uses the bundled raster.
pub fn generate(kind: DatasetKind, n: usize, seed: u64) -> Result<EmbeddingFrame> {
    match kind {
        DatasetKind::Earth => Ok(earth_generate(n, seed, &LandRaster::bundled())?.0),
        DatasetKind::SwissRoll => Ok(swiss_roll(n, seed)?.0),
        DatasetKind::Hemisphere => hemisphere(n, seed),
        DatasetKind::TwoMoons3d => two_moons_3d(n, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_land_accepts_everything() {
        let r = LandRaster::uniform(10, 2).unwrap();
        let (f, stats) = earth_generate(500, 1, &r).unwrap();
        assert_eq!(stats.attempts, 500);
        assert_eq!(stats.acceptance_rate(), 1.0);
        assert!(f.labels.iter().all(|&l| l == 2));
    }

    #[test]
    fn earth_points_are_unit_and_labeled() {
        let (f, _) = earth_generate(2000, 7, &LandRaster::bundled()).unwrap();
        for i in 0..f.len() {
            let r: f64 = f.x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert!(f.labels.iter().all(|&l| (1..=6).contains(&l)));
    }

    #[test]
    fn ocean_only_raster_is_rejected() {
        assert!(earth_generate(10, 0, &LandRaster::uniform(10, 0).unwrap()).is_err());
        assert!(earth_generate(10, 0, &LandRaster::uniform(10, ANTARCTICA).unwrap()).is_err());
    }

    #[test]
    fn swiss_roll_parametrization() {
        let (f, ts) = swiss_roll(300, 3).unwrap();
        for (i, t) in ts.iter().enumerate() {
            let r = f.x.row(i);
            assert!((r[1] - t * t.sin()).abs() < 1e-12);
            assert!((r[2] - t * t.cos()).abs() < 1e-12);
        }
        assert_eq!(swiss_roll(300, 3).unwrap().0, f);
    }

    #[test]
    fn hemisphere_points() {
        let f = hemisphere(500, 4).unwrap();
        for i in 0..f.len() {
            let r = f.x.row(i);
            assert!((r.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
            assert!(r[2] >= 0.0);
        }
    }

    #[test]
    fn generators_are_seeded() {
        for kind in [DatasetKind::SwissRoll, DatasetKind::Hemisphere, DatasetKind::TwoMoons3d] {
            assert_eq!(generate(kind, 50, 1).unwrap(), generate(kind, 50, 1).unwrap());
            assert_ne!(generate(kind, 50, 1).unwrap(), generate(kind, 50, 2).unwrap());
            assert_eq!(kind.name().parse::<DatasetKind>().unwrap(), kind);
        }
    }
}

//! Continent-code raster used to place Earth samples.
//!
//! Text format, `#` lines are comments:
//!
//! ```text
//! resolution <degrees per cell>
//! sha256 <hex digest of the grid rows, each followed by '\n'>
//! <360/res digits>    one row per latitude band, north to south
//! ...
//! ```
//!
//! Row 0 covers latitudes `[90 − res, 90)`, column 0 longitudes `[−180, −180 + res)`.
//! Codes: 0 ocean, 1 Africa, 2 Asia, 3 Europe and Russia, 4 North America,
//! 5 South America, 6 Oceania, 7 Antarctica.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const OCEAN: u8 = 0;
pub const ANTARCTICA: u8 = 7;

/// Names of the continent codes, indexed by code.
pub const CONTINENTS: [&str; 8] = [
    "Ocean",
    "Africa",
    "Asia",
    "Europe",
    "North America",
    "South America",
    "Oceania",
    "Antarctica",
];

const BUNDLED: &str = include_str!("../../data/land_1deg.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandRaster {
    resolution: u32,
    rows: usize,
    cols: usize,
    grid: Vec<u8>,
}

fn digest_rows(rows: &[&str]) -> String {
    let mut h = Sha256::new();
    for r in rows {
        h.update(r.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl LandRaster {
    /// Builds a raster from codes in row-major order.
    pub fn from_grid(resolution: u32, grid: Vec<u8>) -> Result<Self> {
        if resolution == 0 || 180 % resolution != 0 {
            return Err(Error::Invalid(format!("resolution {resolution} must divide 180")));
        }
        let rows = (180 / resolution) as usize;
        let cols = 2 * rows;
        if grid.len() != rows * cols {
            return Err(Error::Invalid(format!(
                "raster needs {} cells, got {}",
                rows * cols,
                grid.len()
            )));
        }
        if let Some(c) = grid.iter().find(|&&c| c > ANTARCTICA) {
            return Err(Error::Invalid(format!("unknown continent code {c}")));
        }
        Ok(Self {
            resolution,
            rows,
            cols,
            grid,
        })
    }

    /// Every cell set to `code`.
    pub fn uniform(resolution: u32, code: u8) -> Result<Self> {
        let rows = (180 / resolution.max(1)) as usize;
        Self::from_grid(resolution, vec![code; rows * rows * 2])
    }

    /// The raster shipped with the crate (1° cells).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled raster is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut resolution = None;
        let mut checksum = None;
        let mut rows: Vec<&str> = Vec::new();
        let mut first_row_line = 0;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("resolution ") {
                let r = v.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    detail: format!("bad resolution {v:?}"),
                })?;
                resolution = Some(r);
            } else if let Some(v) = line.strip_prefix("sha256 ") {
                checksum = Some(v.trim().to_string());
            } else {
                if rows.is_empty() {
                    first_row_line = line_no;
                }
                if let Some(pos) = line.bytes().position(|b| !(b'0'..=b'7').contains(&b)) {
                    return Err(Error::Parse {
                        line: line_no,
                        detail: format!("invalid code at column {}", pos + 1),
                    });
                }
                rows.push(line);
            }
        }
        let resolution: u32 = resolution.ok_or(Error::Parse {
            line: 0,
            detail: "missing resolution line".into(),
        })?;
        let expected = checksum.ok_or(Error::Parse {
            line: 0,
            detail: "missing sha256 line".into(),
        })?;
        let actual = digest_rows(&rows);
        if actual != expected {
            return Err(Error::Parse {
                line: first_row_line,
                detail: format!("checksum mismatch: file says {expected}, grid hashes to {actual}"),
            });
        }
        if resolution == 0 || 180 % resolution != 0 {
            return Err(Error::Parse {
                line: 0,
                detail: format!("resolution {resolution} must divide 180"),
            });
        }
        let n_rows = (180 / resolution) as usize;
        if rows.len() != n_rows {
            return Err(Error::Parse {
                line: first_row_line,
                detail: format!("expected {n_rows} rows, found {}", rows.len()),
            });
        }
        for (k, r) in rows.iter().enumerate() {
            if r.len() != 2 * n_rows {
                return Err(Error::Parse {
                    line: first_row_line + k,
                    detail: format!("row has {} cells, expected {}", r.len(), 2 * n_rows),
                });
            }
        }
        let grid = rows.iter().flat_map(|r| r.bytes().map(|b| b - b'0')).collect();
        Self::from_grid(resolution, grid)
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<String> = self
            .grid
            .chunks(self.cols)
            .map(|r| r.iter().map(|c| char::from(b'0' + c)).collect())
            .collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let mut s = format!("resolution {}\nsha256 {}\n", self.resolution, digest_rows(&refs));
        for r in rows {
            s.push_str(&r);
            s.push('\n');
        }
        s
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cell(&self, row: usize, col: usize) -> u8 {
        self.grid[row * self.cols + col]
    }

    /// Code at latitude/longitude in degrees.
    pub fn code_at(&self, lat: f64, lon: f64) -> u8 {
        let res = self.resolution as f64;
        let row = (((90.0 - lat) / res).floor() as isize).clamp(0, self.rows as isize - 1) as usize;
        let lon = (lon + 180.0).rem_euclid(360.0);
        let col = ((lon / res).floor() as usize).min(self.cols - 1);
        self.cell(row, col)
    }

    /// Fraction of the sphere's area covered by cells whose code satisfies `keep`.
    pub fn area_fraction(&self, keep: impl Fn(u8) -> bool) -> f64 {
        let res = (self.resolution as f64).to_radians();
        let mut kept = 0.0;
        for r in 0..self.rows {
            let top = std::f64::consts::FRAC_PI_2 - r as f64 * res;
            let band = top.sin() - (top - res).sin();
            let count = self.grid[r * self.cols..(r + 1) * self.cols]
                .iter()
                .filter(|&&c| keep(c))
                .count();
            kept += band * count as f64 / self.cols as f64;
        }
        kept / 2.0
    }

    pub fn counts(&self) -> [usize; 8] {
        let mut c = [0; 8];
        for &g in &self.grid {
            c[g as usize] += 1;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_raster_is_consistent() {
        let r = LandRaster::bundled();
        assert_eq!(r.dims(), (180, 360));
        let c = r.counts();
        assert!(c[1..7].iter().all(|&n| n > 0));
        assert!(c[ANTARCTICA as usize] > 0);
        assert_eq!(LandRaster::parse(&r.to_text()).unwrap(), r);
    }

    #[test]
    fn lookups_on_known_places() {
        let r = LandRaster::bundled();
        assert_eq!(r.code_at(0.0, -30.0), OCEAN); // mid Atlantic
        assert_eq!(r.code_at(10.0, 20.0), 1); // Chad
        assert_eq!(r.code_at(50.0, 10.0), 3); // Germany
        assert_eq!(r.code_at(40.0, -100.0), 4); // Kansas
        assert_eq!(r.code_at(-10.0, -55.0), 5); // Brazil
        assert_eq!(r.code_at(-25.0, 135.0), 6); // Australia
        assert_eq!(r.code_at(-85.0, 0.0), ANTARCTICA);
        assert_eq!(r.code_at(35.0, 100.0), 2); // China
    }

    #[test]
    fn uniform_raster_area() {
        let r = LandRaster::uniform(10, 1).unwrap();
        assert!((r.area_fraction(|c| c == 1) - 1.0).abs() < 1e-12);
        assert!((LandRaster::bundled().area_fraction(|_| true) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corrupted_checksum_is_rejected() {
        let text = LandRaster::uniform(30, 0)
            .unwrap()
            .to_text()
            .replacen("000000", "000100", 1);
        assert!(matches!(LandRaster::parse(&text), Err(Error::Parse { .. })));
    }
}

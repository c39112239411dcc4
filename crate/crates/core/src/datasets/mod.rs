//! Dataset generation and CSV input/output.

pub mod frame;
pub mod generate;
pub mod raster;

pub use frame::{
    load_csv, read_csv, standardize, write_csv, write_csv_to, write_latent_csv, EmbeddingFrame, Standardized,
    LABEL_COLUMN,
};
pub use generate::{
    earth_generate, generate, hemisphere, lat_lon, sphere_point, swiss_roll, two_moons_3d, DatasetKind, SamplingStats,
};
pub use raster::{LandRaster, ANTARCTICA, CONTINENTS, OCEAN};

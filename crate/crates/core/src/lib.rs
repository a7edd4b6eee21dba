pub mod error;
pub mod geometry;
pub mod analysis;
pub mod circle;
pub mod construction;
pub mod maps;
pub mod packing;

pub use error::{Error, Result};

/// The generator behind every seeded routine, as recorded in reports.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

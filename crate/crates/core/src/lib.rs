//! Post-processing and evaluation for raster waterway maps: feature
//! preparation, cloud-free compositing, label weighting, elevation-guided
//! thinning, vectorization, stream ordering and distance evaluation.

pub mod compositing;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod geojson;
pub mod kv;
pub mod labels;
pub mod pipeline;
pub mod raster;
pub mod stream_order;
pub mod thinning;
pub mod vectorize;

pub use error::{Error, Result};

/// Version tag of the GeoJSON waterway output.
pub const GRAPH_FORMAT_VERSION: &str = "1";
/// Version tag of the CSV report layouts.
pub const REPORT_FORMAT_VERSION: &str = "1";

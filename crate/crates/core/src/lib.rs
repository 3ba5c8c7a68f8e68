//! Rooftop solar panel mapping and PV power profiling.
//!
//! The crate is organised along the processing chain:
//!
//! * [`geo`]: WGS84 points, bounding boxes and ring geometry shared by all stages.
//! * [`geodata`]: place-name geocoding and building footprints from open map data.
//! * [`imagery`]: slippy-map tile addressing, mosaic stitching and building masks.
//! * [`detection`]: the detector exchange document, confidence filtering and backends.
//! * [`georef`]: pixel/WGS84 conversion of detections and geodesic panel areas.
//! * [`inventory`]: the per-scan panel store, curation log and summary statistics.
//! * [`pvmodel`]: solar position, irradiance transposition, module temperature,
//!   efficiency and the 8760-hour power profile.
//!
//! Network access is abstracted behind [`geodata::MapDataSource`] and
//! [`imagery::TileSource`]; nothing in this crate opens a socket.

pub mod detection;
pub mod geo;
pub mod geodata;
pub mod georef;
pub mod imagery;
pub mod inventory;
pub mod pvmodel;

pub use geo::{BoundingBox, GeoPoint};

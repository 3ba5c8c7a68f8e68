//! Writes the cloudless weather year used by the test fixtures.
//!
//! ```text
//! cargo run -p pvscan-core --example clearsky_tmy -- crates/core/tests/fixtures/tmy_clearsky_zurich.csv
//! ```

use pvscan_core::pvmodel::clearsky::{synthetic_tmy, SyntheticClimate};
use pvscan_core::GeoPoint;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "tmy_clearsky_zurich.csv".into());
    let site = GeoPoint { lat: 47.37, lon: 8.54 };
    let climate = SyntheticClimate::zurich();
    let tmy = synthetic_tmy(&site, 2023, &climate).expect("2023 is inside the ephemeris range");
    std::fs::write(&out, tmy.to_pvgis_csv(site.lat, site.lon, climate.altitude_m)).expect("write fixture");
    eprintln!("wrote {out}");
}

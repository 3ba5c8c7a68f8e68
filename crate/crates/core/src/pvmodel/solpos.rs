//! Low-precision solar ephemeris (Michalsky 1988, Astronomical Almanac
//! approximation), good to roughly 0.01° between 1950 and 2050.

use std::f64::consts::{PI, TAU};

use chrono::{DateTime, Datelike, Timelike, Utc};
use thiserror::Error;

use crate::geo::GeoPoint;

pub const VALID_YEARS: std::ops::RangeInclusive<i32> = 1950..=2050;

/// Altitudes are snapped to this grid so that `zenith = 90 - altitude` is
/// exact in binary floating point.
const ALTITUDE_QUANTUM: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolarError {
    #[error("year {0} outside the ephemeris validity range 1950..=2050")]
    OutOfRange(i32),
}

/// Apparent sun position. Azimuth is clockwise from north.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarPosition {
    pub altitude_deg: f64,
    pub azimuth_deg: f64,
    pub zenith_deg: f64,
}

impl SolarPosition {
    pub fn from_altitude(altitude_deg: f64, azimuth_deg: f64) -> Self {
        let altitude_deg = (altitude_deg.clamp(-90.0, 90.0) / ALTITUDE_QUANTUM).round() * ALTITUDE_QUANTUM;
        Self {
            altitude_deg,
            azimuth_deg: azimuth_deg.rem_euclid(360.0),
            zenith_deg: 90.0 - altitude_deg,
        }
    }

    pub fn is_up(&self) -> bool {
        self.zenith_deg < 90.0
    }
}

fn refraction_deg(elevation_deg: f64) -> f64 {
    let e = elevation_deg;
    if e > -0.56 {
        3.51561 * (0.1594 + 0.0196 * e + 0.00002 * e * e) / (1.0 + 0.505 * e + 0.0845 * e * e)
    } else {
        0.56
    }
}

pub fn solar_position(t: DateTime<Utc>, site: &GeoPoint) -> Result<SolarPosition, SolarError> {
    let year = t.year();
    if !VALID_YEARS.contains(&year) {
        return Err(SolarError::OutOfRange(year));
    }
    let hour = f64::from(t.hour()) + f64::from(t.minute()) / 60.0 + (f64::from(t.second()) + f64::from(t.nanosecond()) * 1e-9) / 3600.0;
    let delta = year - 1949;
    let leap = delta.div_euclid(4);
    let jd = 2_432_916.5 + f64::from(delta * 365 + leap) + f64::from(t.ordinal()) + hour / 24.0;
    let time = jd - 2_451_545.0;

    // Ecliptic coordinates.
    let mnlong = (280.460 + 0.985_647_4 * time).rem_euclid(360.0);
    let mnanom = (357.528 + 0.985_600_3 * time).rem_euclid(360.0).to_radians();
    let eclong = (mnlong + 1.915 * mnanom.sin() + 0.020 * (2.0 * mnanom).sin())
        .rem_euclid(360.0)
        .to_radians();
    let oblqec = (23.439 - 0.000_000_4 * time).to_radians();

    // Celestial coordinates.
    let ra = (oblqec.cos() * eclong.sin()).atan2(eclong.cos()).rem_euclid(TAU);
    let dec = (oblqec.sin() * eclong.sin()).asin();

    // Local coordinates.
    let gmst = (6.697_375 + 0.065_709_824_2 * time + hour).rem_euclid(24.0);
    let lmst = ((gmst + site.lon / 15.0).rem_euclid(24.0) * 15.0).to_radians();
    let mut ha = lmst - ra;
    if ha < -PI {
        ha += TAU;
    } else if ha > PI {
        ha -= TAU;
    }
    let lat = site.lat.to_radians();
    let el = (dec.sin() * lat.sin() + dec.cos() * lat.cos() * ha.cos()).clamp(-1.0, 1.0).asin();
    let az = (-dec.cos() * ha.sin()).atan2(dec.sin() * lat.cos() - dec.cos() * lat.sin() * ha.cos());

    let el_deg = el.to_degrees();
    let apparent = (el_deg + refraction_deg(el_deg)).min(90.0);
    Ok(SolarPosition::from_altitude(apparent, az.to_degrees()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    #[test]
    fn equinox_noon_at_equator_is_overhead() {
        let t = Utc.with_ymd_and_hms(2021, 3, 20, 12, 7, 0).unwrap();
        let sp = solar_position(t, &GeoPoint { lat: 0.0, lon: 0.0 }).unwrap();
        assert!(sp.altitude_deg > 89.0, "{sp:?}");
    }

    #[test]
    fn altitude_thirty_gives_zenith_sixty() {
        let sp = SolarPosition::from_altitude(30.0, 10.0);
        assert_eq!(sp.zenith_deg, 60.0);
    }

    #[test]
    fn midnight_sun_and_polar_night() {
        let north = GeoPoint { lat: 78.2, lon: 15.6 };
        let summer = solar_position(Utc.with_ymd_and_hms(2022, 6, 21, 23, 0, 0).unwrap(), &north).unwrap();
        let winter = solar_position(Utc.with_ymd_and_hms(2022, 12, 21, 11, 0, 0).unwrap(), &north).unwrap();
        assert!(summer.is_up());
        assert!(!winter.is_up());
        // Midnight sun sits due north.
        assert!((summer.azimuth_deg - 180.0).abs() > 150.0, "{summer:?}");
    }

    #[test]
    fn validity_range_enforced() {
        let p = GeoPoint { lat: 47.0, lon: 8.0 };
        assert_eq!(
            solar_position(Utc.with_ymd_and_hms(1949, 12, 31, 12, 0, 0).unwrap(), &p),
            Err(SolarError::OutOfRange(1949))
        );
        assert!(solar_position(Utc.with_ymd_and_hms(2051, 1, 1, 0, 0, 0).unwrap(), &p).is_err());
        assert!(solar_position(Utc.with_ymd_and_hms(2050, 12, 31, 23, 0, 0).unwrap(), &p).is_ok());
    }

    proptest! {
        #[test]
        fn zenith_identity_and_ranges(lat in -90.0..=90.0f64, lon in -180.0..=180.0f64, secs in 0i64..(100 * 365 * 86_400)) {
            let t = Utc.with_ymd_and_hms(1950, 1, 1, 0, 0, 0).unwrap() + chrono::Duration::seconds(secs);
            let sp = solar_position(t, &GeoPoint { lat, lon }).unwrap();
            prop_assert_eq!(sp.zenith_deg + sp.altitude_deg, 90.0);
            prop_assert!((0.0..360.0).contains(&sp.azimuth_deg));
            prop_assert!((-90.0..=90.0).contains(&sp.altitude_deg));
        }
    }
}

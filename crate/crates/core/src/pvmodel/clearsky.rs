//! Ineichen–Perez clear-sky irradiance and a synthetic clear-sky weather
//! year built from it.

use std::f64::consts::TAU;

use chrono::{Datelike, Timelike};

use super::airmass::air_mass;
use super::irradiance::extra_radiation;
use super::solpos::{solar_position, SolarError};
use super::time::hourly_timestamps;
use super::tmy::{TmyRecord, TmySeries};
use crate::geo::GeoPoint;

/// Monthly Linke turbidity climatology for the Zürich area (Jan..Dec).
pub const ZURICH_LINKE: [f64; 12] = [3.05, 4.2, 4.4, 4.25, 4.45, 4.5, 4.2, 4.3, 4.05, 3.85, 3.9, 3.35];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClearSky {
    pub global_horizontal: f64,
    pub beam_normal: f64,
    pub diffuse_horizontal: f64,
}

/// Standard-atmosphere pressure at an altitude, Pa.
pub fn pressure_at(altitude_m: f64) -> f64 {
    100.0 * ((44331.514 - altitude_m) / 11880.516).powf(1.0 / 0.1902632)
}

/// Clear-sky irradiance for an apparent zenith in degrees.
pub fn ineichen(zenith_deg: f64, linke: f64, altitude_m: f64, dni_extra: f64) -> ClearSky {
    let Some(am_rel) = air_mass(zenith_deg) else {
        return ClearSky::default();
    };
    let am = am_rel * pressure_at(altitude_m) / 101_325.0;
    let cos_z = zenith_deg.to_radians().cos().max(0.0);
    let fh1 = (-altitude_m / 8000.0).exp();
    let fh2 = (-altitude_m / 1250.0).exp();
    let cg1 = 5.09e-5 * altitude_m + 0.868;
    let cg2 = 3.92e-5 * altitude_m + 0.0387;

    let ghi = (cg1 * dni_extra * cos_z * (-cg2 * am * (fh1 + fh2 * (linke - 1.0))).exp()).max(0.0);
    let b = 0.664 + 0.163 / fh1;
    let bnci = dni_extra * (b * (-0.09 * am * (linke - 1.0)).exp()).max(0.0);
    let bnci_2 = ghi * ((1.0 - (0.1 - 0.2 * (-linke).exp()) / (0.1 + 0.882 / fh1)) / cos_z).clamp(0.0, 1e20);
    let dni = bnci.min(bnci_2);
    ClearSky {
        global_horizontal: ghi,
        beam_normal: dni,
        diffuse_horizontal: ghi - dni * cos_z,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticClimate {
    pub linke_monthly: [f64; 12],
    pub altitude_m: f64,
    /// Annual mean air temperature, °C.
    pub mean_temperature: f64,
    pub seasonal_swing: f64,
    pub diurnal_swing: f64,
    pub mean_wind: f64,
}

impl SyntheticClimate {
    pub fn zurich() -> Self {
        Self {
            linke_monthly: ZURICH_LINKE,
            altitude_m: 408.0,
            mean_temperature: 9.5,
            seasonal_swing: 9.0,
            diurnal_swing: 4.0,
            mean_wind: 2.5,
        }
    }
}

/// Cloudless weather year: Ineichen–Perez irradiance, sinusoidal
/// temperature and wind in local solar time.
pub fn synthetic_tmy(site: &GeoPoint, year: i32, climate: &SyntheticClimate) -> Result<TmySeries, SolarError> {
    let records = hourly_timestamps(year)
        .into_iter()
        .map(|t| {
            let sp = solar_position(t, site)?;
            let linke = climate.linke_monthly[t.month0() as usize];
            let cs = ineichen(sp.zenith_deg, linke, climate.altitude_m, extra_radiation(t.ordinal()));
            let day = f64::from(t.ordinal());
            let solar_hour = (f64::from(t.hour()) + site.lon / 15.0).rem_euclid(24.0);
            let season = -(TAU * (day - 20.0) / 365.0).cos();
            let diurnal = (TAU * (solar_hour - 15.0) / 24.0).cos();
            Ok(TmyRecord {
                time: t,
                global_horizontal: cs.global_horizontal,
                beam_normal: cs.beam_normal,
                diffuse_horizontal: cs.diffuse_horizontal,
                air_temperature: climate.mean_temperature + climate.seasonal_swing * season + climate.diurnal_swing * diurnal,
                wind_speed: climate.mean_wind + (TAU * (solar_hour - 14.0) / 24.0).cos(),
            })
        })
        .collect::<Result<Vec<_>, SolarError>>()?;
    Ok(TmySeries::new(records).expect("synthetic records satisfy the TMY invariants"))
}

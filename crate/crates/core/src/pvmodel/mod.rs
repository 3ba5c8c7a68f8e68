//! Photovoltaic yield model: sun position, plane-of-array irradiance,
//! module temperature, ADR efficiency and the resulting hourly DC power.

pub mod adr;
pub mod airmass;
pub mod clearsky;
pub mod irradiance;
pub mod profile;
pub mod solpos;
pub mod thermal;
pub mod time;
pub mod tmy;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoPoint;

pub use adr::{adr_efficiency, AdrParams};
pub use airmass::air_mass;
pub use irradiance::{poa_irradiance, PoaIrradiance};
pub use profile::{scale_profile, PowerProfile, ProfileError};
pub use solpos::{solar_position, SolarError, SolarPosition};
pub use thermal::faiman;
pub use time::{hourly_timestamps, HOURS_PER_YEAR};
pub use tmy::{load_tmy, TmyError, TmyFormat, TmyRecord, TmySeries};

/// Year the 8760-hour calendar is laid on when none is given.
pub const DEFAULT_PROFILE_YEAR: i32 = 2023;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PvError {
    #[error("invalid array configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solar(#[from] SolarError),
    #[error(transparent)]
    Tmy(#[from] TmyError),
}

/// Fixed-mount array parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Degrees from horizontal.
    pub tilt_deg: f64,
    /// Degrees clockwise from north; 180 faces south.
    pub azimuth_deg: f64,
    /// Nominal power at standard test conditions, W.
    pub p_stc_w: f64,
    /// Standard test irradiance, W/m².
    pub g_stc: f64,
    pub u0: f64,
    pub u1: f64,
    pub albedo: f64,
    pub adr: AdrParams,
}

impl Default for ArrayConfig {
    /// Horizontal south-facing 200 W array; see [`ArrayConfig::for_site`].
    fn default() -> Self {
        Self {
            tilt_deg: 0.0,
            azimuth_deg: 180.0,
            p_stc_w: 200.0,
            g_stc: 1000.0,
            u0: 25.0,
            u1: 6.84,
            albedo: 0.2,
            adr: AdrParams::default(),
        }
    }
}

impl ArrayConfig {
    /// Tilted by the site's latitude and facing the equator.
    pub fn for_site(site: &GeoPoint) -> Self {
        Self {
            tilt_deg: site.lat.abs(),
            azimuth_deg: if site.lat >= 0.0 { 180.0 } else { 0.0 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PvError> {
        let checks = [
            ((0.0..=90.0).contains(&self.tilt_deg), "tilt must be in [0, 90]"),
            ((0.0..360.0).contains(&self.azimuth_deg), "azimuth must be in [0, 360)"),
            (self.p_stc_w > 0.0 && self.p_stc_w.is_finite(), "P_stc must be positive"),
            (self.g_stc > 0.0 && self.g_stc.is_finite(), "G_stc must be positive"),
            (self.u0 > 0.0 && self.u0.is_finite(), "U0 must be positive"),
            (self.u1 >= 0.0 && self.u1.is_finite(), "U1 must be nonnegative"),
            ((0.0..=1.0).contains(&self.albedo), "albedo must be in [0, 1]"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(PvError::Config(format!("{msg}, got {self:?}"))),
            None => Ok(()),
        }
    }
}

/// Every intermediate quantity of one simulated hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourResult {
    pub time: DateTime<Utc>,
    pub solar: SolarPosition,
    pub air_mass: Option<f64>,
    pub poa: PoaIrradiance,
    pub module_temperature: f64,
    pub efficiency: f64,
    pub power_w: f64,
}

/// DC output in W for a relative efficiency and plane-of-array irradiance.
pub fn dc_power(cfg: &ArrayConfig, efficiency: f64, poa_global: f64) -> f64 {
    (cfg.p_stc_w * efficiency * poa_global / cfg.g_stc).max(0.0)
}

pub fn simulate_hour(site: &GeoPoint, cfg: &ArrayConfig, rec: &TmyRecord) -> Result<HourResult, PvError> {
    let solar = solar_position(rec.time, site)?;
    let am = air_mass(solar.zenith_deg);
    let poa = poa_irradiance(cfg, &solar, rec, am);
    let module_temperature = faiman(rec.air_temperature, poa.total, rec.wind_speed, cfg.u0, cfg.u1);
    let efficiency = adr_efficiency(poa.total, module_temperature, cfg.g_stc, &cfg.adr);
    let power_w = dc_power(cfg, efficiency, poa.total);
    Ok(HourResult {
        time: rec.time,
        solar,
        air_mass: am,
        poa,
        module_temperature,
        efficiency,
        power_w,
    })
}

pub fn simulate(site: &GeoPoint, cfg: &ArrayConfig, tmy: &TmySeries) -> Result<Vec<HourResult>, PvError> {
    cfg.validate()?;
    tmy.records().iter().map(|r| simulate_hour(site, cfg, r)).collect()
}

/// Hourly DC power of one array over the weather year.
pub fn power_profile(site: &GeoPoint, cfg: &ArrayConfig, tmy: &TmySeries) -> Result<PowerProfile, PvError> {
    let hours = simulate(site, cfg, tmy)?;
    Ok(PowerProfile::new(hours.iter().map(|h| (h.time, h.power_w)).collect()).expect("simulated hours form a valid profile"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clearsky::{synthetic_tmy, SyntheticClimate};

    fn zurich() -> GeoPoint {
        GeoPoint { lat: 47.37, lon: 8.54 }
    }

    #[test]
    fn reference_ratio_yields_nominal_power() {
        let cfg = ArrayConfig::default();
        assert_eq!(dc_power(&cfg, 1.0, 1000.0), 200.0);
        assert_eq!(dc_power(&cfg, 0.5, 0.0), 0.0);
    }

    #[test]
    fn night_hours_are_zero_and_zero_weather_is_zero() {
        let site = zurich();
        let cfg = ArrayConfig::for_site(&site);
        let tmy = synthetic_tmy(&site, 2023, &SyntheticClimate::zurich()).unwrap();
        let hours = simulate(&site, &cfg, &tmy).unwrap();
        assert!(hours.iter().filter(|h| !h.solar.is_up()).all(|h| h.power_w == 0.0));
        assert!(hours.iter().zip(tmy.records()).all(|(h, r)| h.module_temperature >= r.air_temperature));

        let dark = tmy
            .map(|r| TmyRecord {
                global_horizontal: 0.0,
                beam_normal: 0.0,
                diffuse_horizontal: 0.0,
                ..*r
            })
            .unwrap();
        assert_eq!(power_profile(&site, &cfg, &dark).unwrap().energy_wh(), 0.0);
    }

    #[test]
    fn deterministic() {
        let site = zurich();
        let cfg = ArrayConfig::for_site(&site);
        let tmy = synthetic_tmy(&site, 2023, &SyntheticClimate::zurich()).unwrap();
        let a = power_profile(&site, &cfg, &tmy).unwrap().to_csv();
        let b = power_profile(&site, &cfg, &tmy).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(ArrayConfig::default().validate().is_ok());
        assert!(ArrayConfig { tilt_deg: 91.0, ..Default::default() }.validate().is_err());
        assert!(ArrayConfig { azimuth_deg: 360.0, ..Default::default() }.validate().is_err());
        assert!(ArrayConfig { u0: 0.0, ..Default::default() }.validate().is_err());
        assert!(ArrayConfig { albedo: 1.5, ..Default::default() }.validate().is_err());
        let south = ArrayConfig::for_site(&GeoPoint { lat: -33.9, lon: 151.2 });
        assert_eq!((south.tilt_deg, south.azimuth_deg), (33.9, 0.0));
    }
}

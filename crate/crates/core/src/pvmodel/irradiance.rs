//! Plane-of-array irradiance: beam projection, Perez (1990) anisotropic sky
//! diffuse and isotropic ground reflection.

use std::f64::consts::TAU;

use chrono::Datelike;

use super::solpos::SolarPosition;
use super::tmy::TmyRecord;
use super::ArrayConfig;

pub const SOLAR_CONSTANT: f64 = 1366.1;

/// Upper bounds of the sky clearness bins; the last bin is open-ended.
const CLEARNESS_EDGES: [f64; 7] = [1.065, 1.23, 1.5, 1.95, 2.8, 4.5, 6.2];

/// All-sites composite coefficients per clearness bin:
/// `[f11, f12, f13, f21, f22, f23]`.
const PEREZ_COEFFS: [[f64; 6]; 8] = [
    [-0.0080, 0.5880, -0.0620, -0.0600, 0.0720, -0.0220],
    [0.1300, 0.6830, -0.1510, -0.0190, 0.0660, -0.0290],
    [0.3300, 0.4870, -0.2210, 0.0550, -0.0640, -0.0260],
    [0.5680, 0.1870, -0.2950, 0.1090, -0.1520, -0.0140],
    [0.8730, -0.3920, -0.3620, 0.2260, -0.4620, 0.0010],
    [1.1320, -1.2370, -0.4120, 0.2880, -0.8230, 0.0560],
    [1.0600, -1.6000, -0.3590, 0.2640, -1.1270, 0.1310],
    [0.6780, -0.3270, -0.2500, 0.1560, -1.3770, 0.2510],
];

/// Extraterrestrial normal irradiance (Spencer), W/m².
pub fn extra_radiation(day_of_year: u32) -> f64 {
    let b = TAU * (f64::from(day_of_year) - 1.0) / 365.0;
    SOLAR_CONSTANT * (1.00011 + 0.034221 * b.cos() + 0.00128 * b.sin() + 0.000719 * (2.0 * b).cos() + 0.000077 * (2.0 * b).sin())
}

/// Cosine of the angle between the sun and the surface normal.
pub fn cos_incidence(tilt_deg: f64, surface_azimuth_deg: f64, zenith_deg: f64, solar_azimuth_deg: f64) -> f64 {
    let (b, z) = (tilt_deg.to_radians(), zenith_deg.to_radians());
    let c = z.cos() * b.cos() + z.sin() * b.sin() * (solar_azimuth_deg - surface_azimuth_deg).to_radians().cos();
    c.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct PerezInput {
    pub tilt_deg: f64,
    pub cos_incidence: f64,
    pub zenith_deg: f64,
    pub diffuse_horizontal: f64,
    pub beam_normal: f64,
    pub extra_radiation: f64,
    pub air_mass: f64,
}

/// Sky-diffuse irradiance on the tilted plane.
pub fn perez_sky_diffuse(inp: &PerezInput) -> f64 {
    let dhi = inp.diffuse_horizontal;
    if dhi <= 0.0 {
        return 0.0;
    }
    const KAPPA: f64 = 1.041;
    let z = inp.zenith_deg.to_radians();
    let kz3 = KAPPA * z.powi(3);
    let brightness = dhi * inp.air_mass / inp.extra_radiation;
    let clearness = ((dhi + inp.beam_normal) / dhi + kz3) / (1.0 + kz3);
    let bin = CLEARNESS_EDGES.iter().take_while(|&&edge| clearness >= edge).count();
    let f = PEREZ_COEFFS[bin];
    let f1 = (f[0] + f[1] * brightness + f[2] * z).max(0.0);
    let f2 = f[3] + f[4] * brightness + f[5] * z;

    let beta = inp.tilt_deg.to_radians();
    let a = inp.cos_incidence.max(0.0);
    let b = z.cos().max(85f64.to_radians().cos());
    let sky = dhi * (0.5 * (1.0 - f1) * (1.0 + beta.cos()) + f1 * a / b + f2 * beta.sin());
    sky.max(0.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoaIrradiance {
    pub direct: f64,
    pub sky_diffuse: f64,
    pub ground_reflected: f64,
    pub total: f64,
}

/// Plane-of-array components for one hour. `air_mass` is `None` when the
/// sun is down, which zeroes every component.
pub fn poa_irradiance(cfg: &ArrayConfig, sp: &SolarPosition, rec: &TmyRecord, air_mass: Option<f64>) -> PoaIrradiance {
    let Some(am) = air_mass.filter(|_| sp.is_up()) else {
        return PoaIrradiance::default();
    };
    let cos_i = cos_incidence(cfg.tilt_deg, cfg.azimuth_deg, sp.zenith_deg, sp.azimuth_deg);
    let direct = rec.beam_normal * cos_i.max(0.0);
    let sky_diffuse = perez_sky_diffuse(&PerezInput {
        tilt_deg: cfg.tilt_deg,
        cos_incidence: cos_i,
        zenith_deg: sp.zenith_deg,
        diffuse_horizontal: rec.diffuse_horizontal,
        beam_normal: rec.beam_normal,
        extra_radiation: extra_radiation(rec.time.ordinal()),
        air_mass: am,
    });
    let ground_reflected = rec.global_horizontal * cfg.albedo * (1.0 - cfg.tilt_deg.to_radians().cos()) / 2.0;
    PoaIrradiance {
        direct,
        sky_diffuse,
        ground_reflected,
        total: direct + sky_diffuse + ground_reflected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pvmodel::airmass::air_mass;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn rec(ghi: f64, dni: f64, dhi: f64) -> TmyRecord {
        TmyRecord {
            time: Utc.with_ymd_and_hms(2023, 6, 1, 11, 0, 0).unwrap(),
            global_horizontal: ghi,
            beam_normal: dni,
            diffuse_horizontal: dhi,
            air_temperature: 20.0,
            wind_speed: 2.0,
        }
    }

    fn cfg(tilt: f64, az: f64) -> ArrayConfig {
        ArrayConfig {
            tilt_deg: tilt,
            azimuth_deg: az,
            ..ArrayConfig::default()
        }
    }

    #[test]
    fn zero_input_gives_zero() {
        let sp = SolarPosition::from_altitude(50.0, 180.0);
        let poa = poa_irradiance(&cfg(30.0, 180.0), &sp, &rec(0.0, 0.0, 0.0), air_mass(sp.zenith_deg));
        assert_eq!(poa, PoaIrradiance::default());
    }

    #[test]
    fn night_gives_zero() {
        let sp = SolarPosition::from_altitude(-5.0, 300.0);
        let poa = poa_irradiance(&cfg(30.0, 180.0), &sp, &rec(10.0, 5.0, 8.0), air_mass(sp.zenith_deg));
        assert_eq!(poa, PoaIrradiance::default());
    }

    #[test]
    fn normal_incidence_passes_full_beam() {
        let sp = SolarPosition::from_altitude(50.0, 180.0);
        let poa = poa_irradiance(&cfg(40.0, 180.0), &sp, &rec(900.0, 800.0, 100.0), air_mass(sp.zenith_deg));
        assert!((poa.direct - 800.0).abs() < 1e-9, "{poa:?}");
    }

    #[test]
    fn clearness_bins() {
        let bin = |e: f64| CLEARNESS_EDGES.iter().take_while(|&&edge| e >= edge).count();
        assert_eq!(bin(1.0), 0);
        assert_eq!(bin(1.065), 1);
        assert_eq!(bin(6.19), 6);
        assert_eq!(bin(6.2), 7);
        assert_eq!(bin(50.0), 7);
    }

    #[test]
    fn extra_radiation_perihelion_and_aphelion() {
        assert!(extra_radiation(3) > 1405.0 && extra_radiation(3) < 1415.0);
        assert!(extra_radiation(185) > 1315.0 && extra_radiation(185) < 1325.0);
    }

    proptest! {
        #[test]
        fn flat_plate_reduces_to_horizontal(z in 0.0..84.9f64, saz in 0.0..360.0f64, dni in 0.0..1000.0f64, dhi in 0.1..500.0f64) {
            let sp = SolarPosition::from_altitude(90.0 - z, saz);
            let ghi = dhi + dni * sp.zenith_deg.to_radians().cos();
            let poa = poa_irradiance(&cfg(0.0, 180.0), &sp, &rec(ghi, dni, dhi), air_mass(sp.zenith_deg));
            prop_assert!((poa.sky_diffuse - dhi).abs() <= 1e-9 * dhi);
            prop_assert_eq!(poa.ground_reflected, 0.0);
        }

        #[test]
        fn components_nonnegative_and_sum(z in 0.0..90.0f64, saz in 0.0..360.0f64, tilt in 0.0..=90.0f64, paz in 0.0..360.0f64,
                                         dni in 0.0..1100.0f64, dhi in 0.0..600.0f64, albedo in 0.0..=1.0f64) {
            let sp = SolarPosition::from_altitude(90.0 - z, saz);
            let ghi = dhi + dni * sp.zenith_deg.to_radians().cos().max(0.0);
            let c = ArrayConfig { albedo, ..cfg(tilt, paz) };
            let poa = poa_irradiance(&c, &sp, &rec(ghi, dni, dhi), air_mass(sp.zenith_deg));
            prop_assert!(poa.direct >= 0.0 && poa.sky_diffuse >= 0.0 && poa.ground_reflected >= 0.0);
            let sum = poa.direct + poa.sky_diffuse + poa.ground_reflected;
            prop_assert!((sum - poa.total).abs() <= 1e-9 * poa.total.max(1e-300));
        }
    }
}

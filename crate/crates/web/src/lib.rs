//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers or JSON text and returns JSON text, so
//! the page needs no generated type glue beyond `wasm-bindgen` itself.

use pvscan_core::georef::{geodesic_area, PixelTransform};
use pvscan_core::pvmodel::clearsky::{synthetic_tmy, SyntheticClimate};
use pvscan_core::pvmodel::{adr_efficiency, air_mass, power_profile, scale_profile, AdrParams, ArrayConfig, DEFAULT_PROFILE_YEAR};
use pvscan_core::GeoPoint;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct YieldSummary {
    pub annual_kwh: f64,
    pub peak_w: f64,
    pub capacity_factor: f64,
    pub daily_kwh: Vec<f64>,
}

/// Cloudless-year yield of `area_m2` of panels at a site.
pub fn clear_sky_yield(lat: f64, lon: f64, tilt_deg: f64, azimuth_deg: f64, area_m2: f64) -> Result<YieldSummary, String> {
    let site = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
    if !(area_m2.is_finite() && area_m2 > 0.0) {
        return Err(format!("panel area must be positive, got {area_m2}"));
    }
    let cfg = ArrayConfig {
        tilt_deg,
        azimuth_deg,
        ..ArrayConfig::for_site(&site)
    };
    let tmy = synthetic_tmy(&site, DEFAULT_PROFILE_YEAR, &SyntheticClimate::zurich()).map_err(|e| e.to_string())?;
    let unit = power_profile(&site, &cfg, &tmy).map_err(|e| e.to_string())?;
    let capacity_factor = unit.capacity_factor(cfg.p_stc_w);
    let p = scale_profile(&unit, area_m2);
    Ok(YieldSummary {
        annual_kwh: p.energy_wh() / 1000.0,
        peak_w: p.peak_w(),
        capacity_factor,
        daily_kwh: p.daily_energy_wh().iter().map(|wh| wh / 1000.0).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct MappedPolygon {
    /// `[lat, lon]` per vertex.
    pub ring: Vec<[f64; 2]>,
    pub area_m2: f64,
}

/// Maps a closed pixel ring onto the image's anchors and measures it.
pub fn map_polygon(width: u32, height: u32, nw: [f64; 2], se: [f64; 2], pixels: &[[f64; 2]]) -> Result<MappedPolygon, String> {
    let tf = PixelTransform::new(width, height, GeoPoint { lat: nw[0], lon: nw[1] }, GeoPoint { lat: se[0], lon: se[1] }).map_err(|e| e.to_string())?;
    let ring = pixels.iter().map(|p| tf.pixel_to_geo(p[0], p[1])).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let area_m2 = geodesic_area(&ring).map_err(|e| e.to_string())?;
    Ok(MappedPolygon {
        ring: ring.iter().map(|g| [g.lat, g.lon]).collect(),
        area_m2,
    })
}

#[derive(Debug, Serialize)]
pub struct Curves {
    /// `[zenith, air mass]`.
    pub air_mass: Vec<[f64; 2]>,
    /// `[irradiance, relative efficiency]` at the requested module temperature.
    pub adr: Vec<[f64; 2]>,
}

pub fn model_curves(module_temperature: f64) -> Curves {
    let p = AdrParams::default();
    Curves {
        air_mass: (0..=89).filter_map(|z| air_mass(f64::from(z)).map(|am| [f64::from(z), am])).collect(),
        adr: (1..=120).map(|i| f64::from(i) * 10.0).map(|g| [g, adr_efficiency(g, module_temperature, 1000.0, &p)]).collect(),
    }
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.map(|v| serde_json::to_string(&v).expect("plain data serializes")).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = clearSkyYield)]
pub fn clear_sky_yield_js(lat: f64, lon: f64, tilt_deg: f64, azimuth_deg: f64, area_m2: f64) -> Result<String, JsValue> {
    to_js(clear_sky_yield(lat, lon, tilt_deg, azimuth_deg, area_m2))
}

/// `pixels_json` is `[[x, y], ...]`, closed.
#[wasm_bindgen(js_name = mapPolygon)]
pub fn map_polygon_js(width: u32, height: u32, nw_lat: f64, nw_lon: f64, se_lat: f64, se_lon: f64, pixels_json: &str) -> Result<String, JsValue> {
    let pixels: Vec<[f64; 2]> = serde_json::from_str(pixels_json).map_err(|e| JsValue::from_str(&format!("pixel list: {e}")))?;
    to_js(map_polygon(width, height, [nw_lat, nw_lon], [se_lat, se_lon], &pixels))
}

#[wasm_bindgen(js_name = modelCurves)]
pub fn model_curves_js(module_temperature: f64) -> String {
    serde_json::to_string(&model_curves(module_temperature)).expect("plain data serializes")
}

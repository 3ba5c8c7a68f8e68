//! Faiman module temperature.

/// Module temperature in °C from ambient temperature, plane-of-array
/// irradiance and wind speed with heat-loss coefficients `u0` (W/m²K) and
/// `u1` (W/m³K).
pub fn faiman(air_temperature: f64, poa_global: f64, wind_speed: f64, u0: f64, u1: f64) -> f64 {
    air_temperature + poa_global / (u0 + u1 * wind_speed)
}

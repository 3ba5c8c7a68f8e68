//! Kasten–Young relative optical air mass.

/// Relative air mass for an apparent zenith angle in degrees, or `None`
/// when the sun is at or below the horizon.
pub fn air_mass(zenith_deg: f64) -> Option<f64> {
    if !(0.0..90.0).contains(&zenith_deg) {
        return None;
    }
    Some(1.0 / (zenith_deg.to_radians().cos() + 0.50572 * (96.07995 - zenith_deg).powf(-1.6364)))
}

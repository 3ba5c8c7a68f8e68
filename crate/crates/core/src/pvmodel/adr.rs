//! ADR (analytical derate) relative efficiency model.

use serde::{Deserialize, Serialize};

/// Fitted ADR coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdrParams {
    /// Efficiency at reference conditions.
    pub k_a: f64,
    /// Dark irradiance exponent.
    pub k_d: f64,
    /// Temperature coefficient of `k_d` (1/K).
    pub tc_d: f64,
    /// Series resistance loss.
    pub k_rs: f64,
    /// Shunt resistance loss.
    pub k_rsh: f64,
}

impl Default for AdrParams {
    fn default() -> Self {
        Self {
            k_a: 0.99924,
            k_d: -5.49097,
            tc_d: 0.01918,
            k_rs: 0.06999,
            k_rsh: 0.26144,
        }
    }
}

/// Efficiency relative to nominal for irradiance `poa_global` (W/m²) and
/// module temperature `t_module` (°C). `g_ref` is the irradiance at which
/// the model returns `k_a` for 25 °C.
pub fn adr_efficiency(poa_global: f64, t_module: f64, g_ref: f64, p: &AdrParams) -> f64 {
    if poa_global <= 0.0 {
        return 0.0;
    }
    let s = poa_global / g_ref;
    let dt = t_module - 25.0;
    let s_o = 10f64.powf(p.k_d + dt * p.tc_d);
    let s_o_ref = 10f64.powf(p.k_d);
    let v = (s / s_o).ln_1p() / (1.0 / s_o_ref).ln_1p();
    p.k_a * ((1.0 + p.k_rs + p.k_rsh) * v - p.k_rs * s - p.k_rsh * v * v)
}

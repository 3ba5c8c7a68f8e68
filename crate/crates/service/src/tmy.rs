//! Weather-year acquisition: explicit file, on-disk cache, PVGIS fetch.

use std::path::PathBuf;
use std::sync::Arc;

use pvscan_core::pvmodel::{load_tmy, TmyError, TmyFormat, TmySeries, DEFAULT_PROFILE_YEAR};
use pvscan_core::GeoPoint;
use thiserror::Error;

use crate::ratelimit::RateLimiter;

/// Cache cell size in degrees.
pub const CACHE_GRID_DEG: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TmyFetchError {
    #[error("TMY unavailable: {0}")]
    Unavailable(String),
    #[error("TMY data invalid: {0}")]
    Invalid(#[from] TmyError),
}

enum Mode {
    File(PathBuf),
    Remote {
        agent: ureq::Agent,
        url: String,
        limiter: Arc<RateLimiter>,
    },
    Offline,
}

pub struct TmyProvider {
    mode: Mode,
    cache_dir: Option<PathBuf>,
    year: i32,
}

/// Cache key for a site: coordinates snapped to the 0.05° grid.
pub fn cache_key(site: &GeoPoint) -> String {
    let snap = |v: f64| {
        let s = (v / CACHE_GRID_DEG).round() * CACHE_GRID_DEG;
        // Avoid "-0.00".
        if s == 0.0 {
            0.0
        } else {
            s
        }
    };
    format!("tmy_{:.2}_{:.2}.csv", snap(site.lat), snap(site.lon))
}

impl TmyProvider {
    /// Always reads `path`, whatever the site.
    pub fn from_file(path: impl Into<PathBuf>) -> Self {
        Self {
            mode: Mode::File(path.into()),
            cache_dir: None,
            year: DEFAULT_PROFILE_YEAR,
        }
    }

    /// Fetches from a PVGIS-compatible `tmy` endpoint, caching under
    /// `cache_dir` when given.
    pub fn remote(agent: ureq::Agent, url: impl Into<String>, limiter: Arc<RateLimiter>, cache_dir: Option<PathBuf>) -> Self {
        Self {
            mode: Mode::Remote {
                agent,
                url: url.into(),
                limiter,
            },
            cache_dir,
            year: DEFAULT_PROFILE_YEAR,
        }
    }

    /// Serves only what is already cached.
    pub fn offline(cache_dir: Option<PathBuf>) -> Self {
        Self {
            mode: Mode::Offline,
            cache_dir,
            year: DEFAULT_PROFILE_YEAR,
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    fn parse(&self, text: &str) -> Result<TmySeries, TmyFetchError> {
        Ok(load_tmy(text.as_bytes(), TmyFormat::PvgisCsv, self.year)?)
    }

    pub fn get(&self, site: &GeoPoint) -> Result<TmySeries, TmyFetchError> {
        if let Mode::File(path) = &self.mode {
            let text = std::fs::read_to_string(path).map_err(|e| TmyFetchError::Unavailable(format!("{}: {e}", path.display())))?;
            return self.parse(&text);
        }
        let cached = self.cache_dir.as_ref().map(|d| d.join(cache_key(site)));
        if let Some(path) = &cached {
            if let Ok(text) = std::fs::read_to_string(path) {
                return self.parse(&text);
            }
        }
        let Mode::Remote { agent, url, limiter } = &self.mode else {
            return Err(TmyFetchError::Unavailable(format!("no cached TMY for {:.4}, {:.4} and fetching is disabled", site.lat, site.lon)));
        };
        limiter.acquire();
        let text = agent
            .get(url)
            .query("lat", &format!("{:.4}", site.lat))
            .query("lon", &format!("{:.4}", site.lon))
            .query("outputformat", "csv")
            .call()
            .map_err(|e| TmyFetchError::Unavailable(format!("{url}: {e}")))?
            .into_string()
            .map_err(|e| TmyFetchError::Unavailable(format!("{url}: {e}")))?;
        let series = self.parse(&text)?;
        if let Some(path) = cached {
            let stored = path.parent().map(std::fs::create_dir_all).transpose().and_then(|_| std::fs::write(&path, &text));
            if let Err(e) = stored {
                log::warn!("TMY cache write {} failed: {e}", path.display());
            }
        }
        Ok(series)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_key_snaps_to_grid() {
        let k = |lat, lon| cache_key(&GeoPoint { lat, lon });
        assert_eq!(k(47.37, 8.54), "tmy_47.35_8.55.csv");
        assert_eq!(k(47.3601, 8.5249), k(47.3749, 8.5000));
        assert_ne!(k(47.3751, 8.54), k(47.3749, 8.54));
        assert_eq!(k(-0.01, -0.02), "tmy_0.00_0.00.csv");
    }

    #[test]
    fn offline_without_cache_is_unavailable() {
        let p = TmyProvider::offline(None);
        assert!(matches!(p.get(&GeoPoint { lat: 47.0, lon: 8.0 }), Err(TmyFetchError::Unavailable(_))));
    }

    #[test]
    fn missing_override_file_is_unavailable() {
        let p = TmyProvider::from_file("/nonexistent/tmy.csv");
        assert!(matches!(p.get(&GeoPoint { lat: 47.0, lon: 8.0 }), Err(TmyFetchError::Unavailable(_))));
    }
}

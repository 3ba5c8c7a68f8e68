//! Upstream clients: live HTTP services, the on-disk tile cache and
//! recorded fixture directories.
//!
//! A fixture directory has this layout:
//!
//! ```text
//! geocode/<slug>.json      Nominatim search response for a place name
//! overpass.json            Overpass response returned for every query
//! tiles/<z>/<x>/<y>.png    imagery tiles
//! detections.json          mock detector script (optional)
//! tmy.csv                  PVGIS TMY (optional)
//! ```
//!
//! `<slug>` is the place name lowercased with every run of characters
//! outside `[a-z0-9]` replaced by `-`.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use pvscan_core::geodata::{MapDataSource, SourceError};
use pvscan_core::imagery::{TileAddress, TileSource};

use crate::ratelimit::RateLimiter;

const TIMEOUT: Duration = Duration::from_secs(120);
/// Tiles larger than this are refused.
const MAX_TILE_BYTES: u64 = 16 << 20;

pub fn agent(user_agent: &str) -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(TIMEOUT).user_agent(user_agent).build()
}

fn http_error(service: &str, url: &str, e: ureq::Error) -> SourceError {
    match e {
        ureq::Error::Status(code, resp) => SourceError::new(service, format!("{url}: HTTP {code} {}", resp.status_text())),
        ureq::Error::Transport(t) => SourceError::new(service, format!("{url}: {t}")),
    }
}

/// Nominatim and Overpass over HTTP.
pub struct HttpMapData {
    agent: ureq::Agent,
    geocoder_url: String,
    overpass_url: String,
    limiter: Arc<RateLimiter>,
}

impl HttpMapData {
    pub fn new(agent: ureq::Agent, geocoder_url: impl Into<String>, overpass_url: impl Into<String>, limiter: Arc<RateLimiter>) -> Self {
        Self {
            agent,
            geocoder_url: geocoder_url.into(),
            overpass_url: overpass_url.into(),
            limiter,
        }
    }
}

impl MapDataSource for HttpMapData {
    fn search(&self, query: &str) -> Result<String, SourceError> {
        self.limiter.acquire();
        self.agent
            .get(&self.geocoder_url)
            .query("q", query)
            .query("format", "json")
            .call()
            .map_err(|e| http_error("geocoder", &self.geocoder_url, e))?
            .into_string()
            .map_err(|e| SourceError::new("geocoder", e.to_string()))
    }

    fn overpass(&self, query: &str) -> Result<String, SourceError> {
        self.limiter.acquire();
        self.agent
            .post(&self.overpass_url)
            .set("Content-Type", "text/plain; charset=utf-8")
            .send_string(query)
            .map_err(|e| http_error("overpass", &self.overpass_url, e))?
            .into_string()
            .map_err(|e| SourceError::new("overpass", e.to_string()))
    }
}

/// Slippy-map tiles over HTTP.
pub struct HttpTiles {
    agent: ureq::Agent,
    template: String,
    limiter: Arc<RateLimiter>,
}

impl HttpTiles {
    pub fn new(agent: ureq::Agent, template: impl Into<String>, limiter: Arc<RateLimiter>) -> Self {
        Self {
            agent,
            template: template.into(),
            limiter,
        }
    }
}

impl TileSource for HttpTiles {
    fn tile(&self, addr: TileAddress) -> Result<Vec<u8>, SourceError> {
        self.limiter.acquire();
        let url = addr.url(&self.template);
        let resp = self.agent.get(&url).call().map_err(|e| http_error("tiles", &url, e))?;
        let mut bytes = Vec::new();
        resp.into_reader()
            .take(MAX_TILE_BYTES)
            .read_to_end(&mut bytes)
            .map_err(|e| SourceError::new("tiles", format!("{url}: {e}")))?;
        Ok(bytes)
    }
}

fn tile_path(root: &Path, addr: TileAddress) -> PathBuf {
    root.join(addr.z.to_string()).join(addr.x.to_string()).join(format!("{}.png", addr.y))
}

/// Read-through disk cache in front of another tile source.
pub struct CachedTiles<S> {
    inner: S,
    dir: PathBuf,
}

impl<S: TileSource> CachedTiles<S> {
    pub fn new(inner: S, dir: impl Into<PathBuf>) -> Self {
        Self { inner, dir: dir.into() }
    }
}

impl<S: TileSource> TileSource for CachedTiles<S> {
    fn tile(&self, addr: TileAddress) -> Result<Vec<u8>, SourceError> {
        let path = tile_path(&self.dir, addr);
        if let Ok(bytes) = std::fs::read(&path) {
            return Ok(bytes);
        }
        let bytes = self.inner.tile(addr)?;
        let stored = path
            .parent()
            .map(std::fs::create_dir_all)
            .transpose()
            .and_then(|_| {
                let tmp = path.with_extension(format!("{}.tmp", std::process::id()));
                std::fs::write(&tmp, &bytes)?;
                std::fs::rename(&tmp, &path)
            });
        if let Err(e) = stored {
            log::warn!("tile cache write {} failed: {e}", path.display());
        }
        Ok(bytes)
    }
}

pub fn place_slug(place: &str) -> String {
    let mut out = String::new();
    for c in place.trim().to_lowercase().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

/// Recorded geocoder and Overpass responses.
#[derive(Debug, Clone)]
pub struct FixtureMapData {
    dir: PathBuf,
}

impl FixtureMapData {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl MapDataSource for FixtureMapData {
    /// Unknown places answer with an empty result list.
    fn search(&self, query: &str) -> Result<String, SourceError> {
        let path = self.dir.join("geocode").join(format!("{}.json", place_slug(query)));
        match std::fs::read_to_string(&path) {
            Ok(s) => Ok(s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok("[]".into()),
            Err(e) => Err(SourceError::new("geocoder", format!("{}: {e}", path.display()))),
        }
    }

    fn overpass(&self, _query: &str) -> Result<String, SourceError> {
        let path = self.dir.join("overpass.json");
        std::fs::read_to_string(&path).map_err(|e| SourceError::new("overpass", format!("{}: {e}", path.display())))
    }
}

/// Recorded tiles under `tiles/<z>/<x>/<y>.png`.
#[derive(Debug, Clone)]
pub struct FixtureTiles {
    dir: PathBuf,
}

impl FixtureTiles {
    pub fn new(fixture_dir: impl AsRef<Path>) -> Self {
        Self {
            dir: fixture_dir.as_ref().join("tiles"),
        }
    }
}

impl TileSource for FixtureTiles {
    fn tile(&self, addr: TileAddress) -> Result<Vec<u8>, SourceError> {
        let path = tile_path(&self.dir, addr);
        std::fs::read(&path).map_err(|e| SourceError::new("tiles", format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn slugs() {
        assert_eq!(place_slug("Berg am Irchel"), "berg-am-irchel");
        assert_eq!(place_slug("  Bülach, ZH "), "b-lach-zh");
        assert_eq!(place_slug("Fixtureville"), "fixtureville");
    }

    #[test]
    fn fixture_map_data_unknown_place_is_empty_result() {
        let dir = tempfile::tempdir().unwrap();
        let src = FixtureMapData::new(dir.path());
        assert_eq!(src.search("Nowhere").unwrap(), "[]");
        assert!(src.overpass("[out:json];").is_err());
    }

    struct Counting(AtomicUsize);

    impl TileSource for Counting {
        fn tile(&self, addr: TileAddress) -> Result<Vec<u8>, SourceError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(vec![addr.x as u8, addr.y as u8])
        }
    }

    #[test]
    fn cache_serves_repeat_requests_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cached = CachedTiles::new(Counting(AtomicUsize::new(0)), dir.path());
        let a = TileAddress::new(3, 1, 2).unwrap();
        assert_eq!(cached.tile(a).unwrap(), [1, 2]);
        assert_eq!(cached.tile(a).unwrap(), [1, 2]);
        assert_eq!(cached.inner.0.load(Ordering::SeqCst), 1);
        assert!(dir.path().join("3/1/2.png").exists());
    }
}

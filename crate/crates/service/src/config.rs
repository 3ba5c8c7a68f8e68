//! Runtime configuration.
//!
//! Sources, lowest precedence first: built-in defaults, the TOML file given
//! with `--config`, `PVSCAN_*` environment variables, command-line flags.
//!
//! ```toml
//! data_dir = "pvscan-data"
//! workers = 4
//!
//! [geocoder]
//! url = "https://nominatim.openstreetmap.org/search"
//!
//! [overpass]
//! url = "https://overpass-api.de/api/interpreter"
//!
//! [tiles]
//! url = "https://tiles.example.org/{z}/{x}/{y}.png"
//! zoom = 21
//! size = 1500
//!
//! [detector]
//! backend = "process"          # or "mock"
//! command = "python -m sam_adapter"
//! prompt = "solar panel"
//! threshold = 0.7
//!
//! [tmy]
//! url = "https://re.jrc.ec.europa.eu/api/v5_2/tmy"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment variable {name}: {message}")]
    Env { name: &'static str, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoint {
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilesConfig {
    /// Template with `{z}`, `{x}` and `{y}` placeholders.
    pub url: String,
    pub zoom: u8,
    pub size: u32,
    pub tile_size: u32,
    pub cache_dir: Option<PathBuf>,
}

impl Default for TilesConfig {
    fn default() -> Self {
        Self {
            url: "https://tile.openstreetmap.org/{z}/{x}/{y}.png".into(),
            zoom: pvscan_core::imagery::DEFAULT_ZOOM,
            size: pvscan_core::imagery::DEFAULT_IMAGE_SIZE,
            tile_size: pvscan_core::imagery::DEFAULT_TILE_SIZE,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorBackend {
    Mock,
    Process,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub backend: DetectorBackend,
    /// Adapter command line, used by the `process` backend.
    pub command: String,
    /// Sidecar script, used by the `mock` backend.
    pub script: Option<PathBuf>,
    pub prompt: String,
    pub threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            backend: DetectorBackend::Process,
            command: "sam-adapter".into(),
            script: None,
            prompt: pvscan_core::detection::DEFAULT_PROMPT.into(),
            threshold: pvscan_core::detection::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TmyConfig {
    pub url: String,
    pub cache_dir: Option<PathBuf>,
    /// Local file used instead of fetching.
    pub file: Option<PathBuf>,
}

impl Default for TmyConfig {
    fn default() -> Self {
        Self {
            url: "https://re.jrc.ec.europa.eu/api/v5_2/tmy".into(),
            cache_dir: None,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    /// Buildings processed concurrently.
    pub workers: usize,
    /// Upstream requests per second, shared by all clients.
    pub rate_limit: f64,
    pub user_agent: String,
    /// Offline fixture directory; replaces every upstream.
    pub fixtures: Option<PathBuf>,
    pub geocoder: Endpoint,
    pub overpass: Endpoint,
    pub tiles: TilesConfig,
    pub detector: DetectorConfig,
    pub tmy: TmyConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("pvscan-data"),
            workers: 4,
            rate_limit: 8.0,
            user_agent: concat!("pvscan/", env!("CARGO_PKG_VERSION")).into(),
            fixtures: None,
            geocoder: Endpoint {
                url: "https://nominatim.openstreetmap.org/search".into(),
            },
            overpass: Endpoint {
                url: "https://overpass-api.de/api/interpreter".into(),
            },
            tiles: TilesConfig::default(),
            detector: DetectorConfig::default(),
            tmy: TmyConfig::default(),
        }
    }
}

/// Environment variables read by [`Config::apply_env`].
pub const ENV_VARS: &[&str] = &[
    "PVSCAN_DATA_DIR",
    "PVSCAN_WORKERS",
    "PVSCAN_FIXTURES",
    "PVSCAN_GEOCODER_URL",
    "PVSCAN_OVERPASS_URL",
    "PVSCAN_TILES_URL",
    "PVSCAN_TILE_CACHE",
    "PVSCAN_DETECTOR_BACKEND",
    "PVSCAN_DETECTOR_COMMAND",
    "PVSCAN_DETECTOR_SCRIPT",
    "PVSCAN_DETECTOR_PROMPT",
    "PVSCAN_DETECTOR_THRESHOLD",
    "PVSCAN_TMY_URL",
    "PVSCAN_TMY_FILE",
];

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Defaults overlaid with `path` when given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                    path: p.to_path_buf(),
                    message: e.to_string(),
                })?;
                Self::from_toml(&text, p)
            }
        }
    }

    /// Applies overrides from `lookup`, normally `std::env::var`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parsed<T: std::str::FromStr>(name: &'static str, v: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| ConfigError::Env {
                name,
                message: e.to_string(),
            })
        }
        for &name in ENV_VARS {
            let Some(v) = lookup(name) else { continue };
            match name {
                "PVSCAN_DATA_DIR" => self.data_dir = v.into(),
                "PVSCAN_WORKERS" => self.workers = parsed(name, &v)?,
                "PVSCAN_FIXTURES" => self.fixtures = Some(v.into()),
                "PVSCAN_GEOCODER_URL" => self.geocoder.url = v,
                "PVSCAN_OVERPASS_URL" => self.overpass.url = v,
                "PVSCAN_TILES_URL" => self.tiles.url = v,
                "PVSCAN_TILE_CACHE" => self.tiles.cache_dir = Some(v.into()),
                "PVSCAN_DETECTOR_BACKEND" => {
                    self.detector.backend = match v.as_str() {
                        "mock" => DetectorBackend::Mock,
                        "process" => DetectorBackend::Process,
                        other => {
                            return Err(ConfigError::Env {
                                name,
                                message: format!("unknown backend {other:?}"),
                            })
                        }
                    }
                }
                "PVSCAN_DETECTOR_COMMAND" => self.detector.command = v,
                "PVSCAN_DETECTOR_SCRIPT" => self.detector.script = Some(v.into()),
                "PVSCAN_DETECTOR_PROMPT" => self.detector.prompt = v,
                "PVSCAN_DETECTOR_THRESHOLD" => self.detector.threshold = parsed(name, &v)?,
                "PVSCAN_TMY_URL" => self.tmy.url = v,
                "PVSCAN_TMY_FILE" => self.tmy.file = Some(v.into()),
                _ => unreachable!("listed in ENV_VARS"),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.detector.threshold) {
            return Err(ConfigError::Invalid(format!("detector.threshold {} outside [0, 1]", self.detector.threshold)));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.tiles.size < 2 || self.tiles.zoom > pvscan_core::imagery::MAX_ZOOM || self.tiles.tile_size == 0 {
            return Err(ConfigError::Invalid("tiles.size must be >= 2, tiles.zoom <= 22".into()));
        }
        if !(self.rate_limit > 0.0) {
            return Err(ConfigError::Invalid("rate_limit must be positive".into()));
        }
        Ok(())
    }
}

//! HTTP API and command-line front end for rooftop panel scans and PV
//! profiles. All computation lives in `pvscan-core`; this crate wires it to
//! upstream services, persistent jobs and the network.

pub mod api;
pub mod config;
pub mod jobs;
pub mod pipeline;
pub mod profile;
pub mod ratelimit;
pub mod sources;
pub mod tmy;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use pvscan_core::detection::{Detector, MockDetector, ProcessDetector};
use pvscan_core::geodata::MapDataSource;
use pvscan_core::imagery::{ImageryConfig, RetryPolicy, TileSource};
use pvscan_core::inventory::{Clock, Inventory};

use crate::config::{Config, DetectorBackend};
use crate::jobs::JobStore;
use crate::pipeline::Pipeline;
use crate::ratelimit::RateLimiter;
use crate::sources::{CachedTiles, FixtureMapData, FixtureTiles, HttpMapData, HttpTiles};
use crate::tmy::TmyProvider;

/// Everything a request handler or CLI verb needs.
#[derive(Clone)]
pub struct App {
    pub pipeline: Arc<Pipeline>,
    pub jobs: Arc<JobStore>,
    pub tmy: Arc<TmyProvider>,
}

/// Fills fixture-mode defaults: the mock detector scripted by
/// `<fixtures>/detections.json` and the weather year in `<fixtures>/tmy.csv`.
pub fn apply_fixture_defaults(cfg: &mut Config) {
    let Some(dir) = cfg.fixtures.clone() else { return };
    cfg.detector.backend = DetectorBackend::Mock;
    if cfg.detector.script.is_none() {
        cfg.detector.script = Some(dir.join("detections.json"));
    }
    if cfg.tmy.file.is_none() && dir.join("tmy.csv").exists() {
        cfg.tmy.file = Some(dir.join("tmy.csv"));
    }
}

fn detector(cfg: &Config) -> anyhow::Result<Arc<dyn Detector>> {
    Ok(match cfg.detector.backend {
        DetectorBackend::Mock => {
            let Some(script) = &cfg.detector.script else {
                bail!("detector.backend = \"mock\" needs detector.script");
            };
            Arc::new(MockDetector::from_file(script)?)
        }
        DetectorBackend::Process => Arc::new(ProcessDetector::from_command_line(&cfg.detector.command, cfg.detector.prompt.clone())?),
    })
}

impl App {
    pub fn from_config(cfg: &Config, clock: Arc<dyn Clock>) -> anyhow::Result<Self> {
        cfg.validate()?;
        let limiter = Arc::new(RateLimiter::new(cfg.rate_limit, cfg.rate_limit.max(1.0)));
        let agent = sources::agent(&cfg.user_agent);
        let mut imagery = ImageryConfig {
            zoom: cfg.tiles.zoom,
            size: cfg.tiles.size,
            tile_size: cfg.tiles.tile_size,
            ..ImageryConfig::default()
        };
        let (map, tiles): (Arc<dyn MapDataSource>, Arc<dyn TileSource>) = match &cfg.fixtures {
            Some(dir) => {
                imagery.retry = RetryPolicy {
                    attempts: 1,
                    base_delay: Duration::ZERO,
                };
                (Arc::new(FixtureMapData::new(dir)), Arc::new(FixtureTiles::new(dir)))
            }
            None => {
                let cache: PathBuf = cfg.tiles.cache_dir.clone().unwrap_or_else(|| cfg.data_dir.join("tiles"));
                (
                    Arc::new(HttpMapData::new(agent.clone(), &cfg.geocoder.url, &cfg.overpass.url, Arc::clone(&limiter))),
                    Arc::new(CachedTiles::new(HttpTiles::new(agent.clone(), &cfg.tiles.url, Arc::clone(&limiter)), cache)),
                )
            }
        };
        let tmy_cache = Some(cfg.tmy.cache_dir.clone().unwrap_or_else(|| cfg.data_dir.join("tmy")));
        let tmy = match (&cfg.tmy.file, &cfg.fixtures) {
            (Some(f), _) => TmyProvider::from_file(f),
            (None, Some(_)) => TmyProvider::offline(tmy_cache),
            (None, None) => TmyProvider::remote(agent, &cfg.tmy.url, limiter, tmy_cache),
        };
        let inventory = Inventory::open(cfg.data_dir.join("inventory")).context("opening the inventory")?;
        let jobs = JobStore::open(cfg.data_dir.join("jobs")).context("opening the job store")?;
        let pipeline = Pipeline::new(map, tiles, detector(cfg)?, imagery, cfg.detector.threshold, inventory, clock, cfg.workers);
        Ok(Self {
            pipeline: Arc::new(pipeline),
            jobs: Arc::new(jobs),
            tmy: Arc::new(tmy),
        })
    }
}

//! Building and area pipelines over the core modules.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use pvscan_core::detection::{filter_by_confidence, run_detector, DetectionError, Detector};
use pvscan_core::geo::distance_to_ring_m;
use pvscan_core::geodata::{fetch_footprints, geocode, BuildingFootprint, FootprintLimits, GeodataError, MapDataSource};
use pvscan_core::georef::{georeference_detections, GeorefError};
use pvscan_core::imagery::{fetch_anchored_image, render_building_mask, ImageryConfig, ImageryError, TileSource};
use pvscan_core::inventory::{records_from_detections, Clock, CurationDecision, CurationReport, Inventory, InventoryError, InventorySummary, PanelRecord, ScanInventory, StatusFilter, UpsertReport};
use pvscan_core::{BoundingBox, GeoPoint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest distance from a location to a footprint it may be matched to.
pub const NEAREST_BUILDING_M: f64 = 50.0;
/// Half-width of the box used when a geocoded place has no extent.
pub const PLACE_RADIUS_M: f64 = 1_000.0;
/// Scan that single-building detections are stored in unless named.
pub const DEFAULT_DETECT_SCAN: &str = "detect";

/// Processing stages, in the order a job passes through them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Queued,
    Fetching,
    Detecting,
    Georeferencing,
    Done,
    Failed,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Queued => "queued",
            Stage::Fetching => "fetching",
            Stage::Detecting => "detecting",
            Stage::Georeferencing => "georeferencing",
            Stage::Done => "done",
            Stage::Failed => "failed",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Stage::Done | Stage::Failed)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ErrorKind {
    #[error("no building within {radius_m} m of {lat:.6}, {lon:.6}")]
    NoBuilding { lat: f64, lon: f64, radius_m: f64 },
    #[error(transparent)]
    Geodata(#[from] GeodataError),
    #[error(transparent)]
    Imagery(#[from] ImageryError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Georef(#[from] GeorefError),
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Tmy(#[from] crate::tmy::TmyFetchError),
    #[error(transparent)]
    Model(#[from] pvscan_core::pvmodel::PvError),
    #[error("scan {0:?} has no accepted panels")]
    EmptyInventory(String),
    #[error("{0}")]
    Invalid(String),
}

/// A failure tagged with the stage it happened in.
#[derive(Debug, Error)]
#[error("{stage}: {kind}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: impl Into<ErrorKind>) -> Self {
        Self { stage, kind: kind.into() }
    }
}

pub(crate) fn at<E: Into<ErrorKind>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

/// Counting semaphore bounding the buildings in flight across all jobs.
#[derive(Debug)]
pub struct WorkerPool {
    size: usize,
    free: Mutex<usize>,
    cv: Condvar,
}

pub struct Permit<'a>(&'a WorkerPool);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("pool lock") += 1;
        self.0.cv.notify_one();
    }
}

impl WorkerPool {
    pub fn new(size: usize) -> Self {
        assert!(size > 0, "worker pool needs at least one worker");
        Self {
            size,
            free: Mutex::new(size),
            cv: Condvar::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("pool lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("pool lock");
        }
        *free -= 1;
        Permit(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScanArea {
    Bbox { bbox: BoundingBox },
    Place { place: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildingFailure {
    pub building_id: String,
    pub stage: Stage,
    pub error: String,
}

/// Progress notifications from [`Pipeline::run_scan`].
#[derive(Debug, Clone)]
pub enum ScanEvent {
    /// Footprints resolved; building processing starts.
    Buildings(usize),
    BuildingDone(Option<BuildingFailure>),
    /// All buildings processed; results are being merged into the inventory.
    Storing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub buildings: usize,
    pub failures: Vec<BuildingFailure>,
    pub upsert: UpsertReport,
    pub summary: InventorySummary,
}

#[derive(Debug, Clone)]
pub struct DetectOutcome {
    pub building: BuildingFootprint,
    /// Stored state of the detected panels.
    pub records: Vec<PanelRecord>,
    pub upsert: UpsertReport,
}

impl DetectOutcome {
    pub fn to_geojson(&self) -> String {
        let mut inv = ScanInventory::new();
        inv.upsert_panels(self.records.iter().cloned());
        inv.to_geojson(StatusFilter::All)
    }
}

pub struct Pipeline {
    pub map: Arc<dyn MapDataSource>,
    pub tiles: Arc<dyn TileSource>,
    pub detector: Arc<dyn Detector>,
    pub imagery: ImageryConfig,
    pub threshold: f64,
    pub limits: FootprintLimits,
    pub inventory: Inventory,
    pub clock: Arc<dyn Clock>,
    pool: WorkerPool,
    scan_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Pipeline {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        map: Arc<dyn MapDataSource>,
        tiles: Arc<dyn TileSource>,
        detector: Arc<dyn Detector>,
        imagery: ImageryConfig,
        threshold: f64,
        inventory: Inventory,
        clock: Arc<dyn Clock>,
        workers: usize,
    ) -> Self {
        assert!((0.0..=1.0).contains(&threshold), "threshold {threshold} outside [0, 1]");
        Self {
            map,
            tiles,
            detector,
            imagery,
            threshold,
            limits: FootprintLimits::default(),
            inventory,
            clock,
            pool: WorkerPool::new(workers),
            scan_locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn workers(&self) -> usize {
        self.pool.size()
    }

    /// Lock serializing writes to one scan.
    fn scan_lock(&self, scan: &str) -> Arc<Mutex<()>> {
        let mut locks = self.scan_locks.lock().expect("scan lock table");
        Arc::clone(locks.entry(scan.to_string()).or_default())
    }

    /// Load, modify and save a scan while holding its lock.
    pub fn with_scan<T>(&self, scan: &str, f: impl FnOnce(&mut ScanInventory) -> T) -> Result<T, InventoryError> {
        let lock = self.scan_lock(scan);
        let _guard = lock.lock().expect("scan lock");
        let mut inv = self.inventory.load(scan)?;
        let out = f(&mut inv);
        self.inventory.save(scan, &inv)?;
        Ok(out)
    }

    /// Footprint containing `p`, or failing that the nearest one within
    /// [`NEAREST_BUILDING_M`].
    pub fn building_at(&self, p: GeoPoint) -> Result<BuildingFootprint, PipelineError> {
        let area = BoundingBox::around(p, NEAREST_BUILDING_M).map_err(|e| PipelineError::new(Stage::Fetching, GeodataError::from(e)))?;
        let fps = fetch_footprints(self.map.as_ref(), &area, self.limits).map_err(at(Stage::Fetching))?;
        let containing = fps.iter().filter(|fp| fp.contains(&p)).min_by(|a, b| a.bbox.approx_area_km2().total_cmp(&b.bbox.approx_area_km2()));
        if let Some(fp) = containing {
            return Ok(fp.clone());
        }
        fps.into_iter()
            .map(|fp| (distance_to_ring_m(&fp.ring, &p), fp))
            .filter(|(d, _)| *d <= NEAREST_BUILDING_M)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, fp)| fp)
            .ok_or(PipelineError::new(
                Stage::Fetching,
                ErrorKind::NoBuilding {
                    lat: p.lat,
                    lon: p.lon,
                    radius_m: NEAREST_BUILDING_M,
                },
            ))
    }

    /// Image, mask, detector, threshold and georeferencing for one building.
    pub fn process_building(&self, fp: &BuildingFootprint) -> Result<Vec<PanelRecord>, PipelineError> {
        let img = fetch_anchored_image(self.tiles.as_ref(), fp, &self.imagery).map_err(at(Stage::Fetching))?;
        let mask = render_building_mask(fp, &img).map_err(at(Stage::Detecting))?;
        let raw = run_detector(self.detector.as_ref(), &img, &mask).map_err(at(Stage::Detecting))?;
        let kept = filter_by_confidence(&raw, self.threshold);
        log::debug!("building {}: {} detections, {} above threshold", fp.id, raw.len(), kept.len());
        let g = georeference_detections(&kept, &img).map_err(at(Stage::Georeferencing))?;
        Ok(records_from_detections(&g, &fp.id, &kept.detector_name, self.clock.now()))
    }

    /// Runs the building pipeline for the building at `p` and stores the
    /// result in `scan`.
    pub fn detect_building(&self, p: GeoPoint, scan: &str) -> Result<DetectOutcome, PipelineError> {
        let fp = self.building_at(p)?;
        let records = {
            let _permit = self.pool.acquire();
            self.process_building(&fp)?
        };
        let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
        let (upsert, stored) = self
            .with_scan(scan, |inv| {
                inv.add_buildings([&fp]);
                let rep = inv.upsert_panels(records);
                let stored: Vec<PanelRecord> = ids.iter().filter_map(|id| inv.get(id).cloned()).collect();
                (rep, stored)
            })
            .map_err(at(Stage::Georeferencing))?;
        Ok(DetectOutcome {
            building: fp,
            records: stored,
            upsert,
        })
    }

    /// Applies curation decisions to a stored scan and logs them.
    pub fn curate(&self, scan: &str, decisions: &[CurationDecision], operator: &str) -> Result<CurationReport, InventoryError> {
        let lock = self.scan_lock(scan);
        let _guard = lock.lock().expect("scan lock");
        self.inventory.curate(scan, decisions, operator, self.clock.as_ref())
    }

    /// Replays a decision log onto a stored scan.
    pub fn apply_log(&self, scan: &str, log: &str) -> Result<CurationReport, InventoryError> {
        let lock = self.scan_lock(scan);
        let _guard = lock.lock().expect("scan lock");
        self.inventory.apply_log(scan, log)
    }

    pub fn resolve_area(&self, area: &ScanArea) -> Result<BoundingBox, PipelineError> {
        match area {
            ScanArea::Bbox { bbox } => BoundingBox::new(bbox.south, bbox.west, bbox.north, bbox.east).map_err(|e| PipelineError::new(Stage::Queued, GeodataError::from(e))),
            ScanArea::Place { place } => {
                let hit = geocode(self.map.as_ref(), place).map_err(at(Stage::Fetching))?;
                match hit.bbox {
                    Some(b) => Ok(b),
                    None => BoundingBox::around(hit.point, PLACE_RADIUS_M).map_err(|e| PipelineError::new(Stage::Fetching, GeodataError::from(e))),
                }
            }
        }
    }

    /// Processes every footprint in `area` and merges the panels into
    /// `scan`. Per-building failures are reported, not fatal.
    pub fn run_scan(&self, scan: &str, area: &BoundingBox, on_event: &(dyn Fn(ScanEvent) + Sync)) -> Result<ScanReport, PipelineError> {
        // Fail on a bad scan name before any upstream traffic.
        self.inventory.panels_path(scan).map_err(at(Stage::Queued))?;
        let fps = fetch_footprints(self.map.as_ref(), area, self.limits).map_err(at(Stage::Fetching))?;
        on_event(ScanEvent::Buildings(fps.len()));

        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<(usize, Result<Vec<PanelRecord>, PipelineError>)>> = Mutex::new(Vec::with_capacity(fps.len()));
        std::thread::scope(|s| {
            for _ in 0..self.pool.size().min(fps.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(fp) = fps.get(i) else { break };
                    let r = {
                        let _permit = self.pool.acquire();
                        self.process_building(fp)
                    };
                    let failure = r.as_ref().err().map(|e| BuildingFailure {
                        building_id: fp.id.clone(),
                        stage: e.stage,
                        error: e.kind.to_string(),
                    });
                    if let Some(f) = &failure {
                        log::warn!("building {} failed at {}: {}", f.building_id, f.stage, f.error);
                    }
                    results.lock().expect("scan results lock").push((i, r));
                    on_event(ScanEvent::BuildingDone(failure));
                });
            }
        });
        let mut results = results.into_inner().expect("scan results lock");
        results.sort_by_key(|(i, _)| *i);

        on_event(ScanEvent::Storing);
        let mut failures = Vec::new();
        let mut records = Vec::new();
        for (i, r) in results {
            match r {
                Ok(rs) => records.extend(rs),
                Err(e) => failures.push(BuildingFailure {
                    building_id: fps[i].id.clone(),
                    stage: e.stage,
                    error: e.kind.to_string(),
                }),
            }
        }
        let (upsert, summary) = self
            .with_scan(scan, |inv| {
                inv.add_buildings(&fps);
                let rep = inv.upsert_panels(records);
                (rep, inv.summarize(area, StatusFilter::All))
            })
            .map_err(at(Stage::Georeferencing))?;
        Ok(ScanReport {
            buildings: fps.len(),
            failures,
            upsert,
            summary,
        })
    }
}

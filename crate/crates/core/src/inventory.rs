//! Panel inventory: one GeoJSON FeatureCollection per named scan, an
//! append-only curation log and area summaries.
//!
//! Files under the inventory root for scan `name`:
//!
//! * `name.geojson`: panel features, sorted by id
//! * `name.decisions.log`: `<timestamp> <panel_id> <accepted|rejected> <operator>` lines
//! * `name.buildings.geojson`: footprints the scan covered

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use geojson::{Feature, FeatureCollection, GeoJson, Geometry, JsonObject, Value};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geo::{self, BoundingBox, GeoPoint};
use crate::geodata::{footprints_from_geojson, footprints_to_geojson, BuildingFootprint};
use crate::georef::{GeoPolygon, Georeferenced};

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("storage failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed inventory data: {0}")]
    Malformed(String),
    #[error("invalid scan name {0:?}")]
    ScanName(String),
    #[error("scan {0:?} not found")]
    UnknownScan(String),
    #[error("operator name {0:?} must be non-empty and contain no whitespace")]
    Operator(String),
    #[error("decision log line {line}: {message}")]
    LogLine { line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> InventoryError + '_ {
    move |source| InventoryError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Source of "now" for record and log timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PanelStatus {
    Detected,
    Accepted,
    Rejected,
}

impl PanelStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PanelStatus::Detected => "detected",
            PanelStatus::Accepted => "accepted",
            PanelStatus::Rejected => "rejected",
        }
    }
}

impl FromStr for PanelStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "detected" => Ok(PanelStatus::Detected),
            "accepted" => Ok(PanelStatus::Accepted),
            "rejected" => Ok(PanelStatus::Rejected),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

/// A curator's verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accepted => "accepted",
            Verdict::Rejected => "rejected",
        }
    }

    fn status(self) -> PanelStatus {
        match self {
            Verdict::Accepted => PanelStatus::Accepted,
            Verdict::Rejected => PanelStatus::Rejected,
        }
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accepted" => Ok(Verdict::Accepted),
            "rejected" => Ok(Verdict::Rejected),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

/// Which records a summary or export covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusFilter {
    #[default]
    All,
    /// Everything not rejected.
    Accepted,
    Rejected,
    /// Not yet reviewed.
    Detected,
}

impl StatusFilter {
    pub fn matches(self, s: PanelStatus) -> bool {
        match self {
            StatusFilter::All => true,
            StatusFilter::Accepted => s != PanelStatus::Rejected,
            StatusFilter::Rejected => s == PanelStatus::Rejected,
            StatusFilter::Detected => s == PanelStatus::Detected,
        }
    }
}

impl FromStr for StatusFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(StatusFilter::All),
            "accepted" => Ok(StatusFilter::Accepted),
            "rejected" => Ok(StatusFilter::Rejected),
            "detected" => Ok(StatusFilter::Detected),
            other => Err(format!("unknown status filter {other:?}")),
        }
    }
}

/// Vertex rounding quantum for panel identity, degrees.
pub const ID_QUANTUM_DEG: f64 = 1e-7;

/// Hex digest of the ring's vertices rounded to [`ID_QUANTUM_DEG`].
pub fn panel_id(ring: &[GeoPoint]) -> String {
    let mut h = Sha256::new();
    for p in ring {
        h.update(((p.lat / ID_QUANTUM_DEG).round() as i64).to_le_bytes());
        h.update(((p.lon / ID_QUANTUM_DEG).round() as i64).to_le_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRecord {
    pub id: String,
    pub polygon: GeoPolygon,
    pub building_id: String,
    pub detector: String,
    pub confidence: f64,
    pub status: PanelStatus,
    pub detected_at: DateTime<Utc>,
}

impl PanelRecord {
    pub fn new(polygon: GeoPolygon, building_id: impl Into<String>, detector: impl Into<String>, confidence: f64, detected_at: DateTime<Utc>) -> Self {
        Self {
            id: panel_id(&polygon.ring),
            polygon,
            building_id: building_id.into(),
            detector: detector.into(),
            confidence: confidence.clamp(0.0, 1.0),
            status: PanelStatus::Detected,
            detected_at,
        }
    }

    fn to_feature(&self) -> Feature {
        let ring: Vec<Vec<f64>> = self.polygon.ring.iter().map(|p| vec![p.lon, p.lat]).collect();
        let mut props = JsonObject::new();
        props.insert("panel_id".into(), self.id.clone().into());
        props.insert("building_id".into(), self.building_id.clone().into());
        props.insert("detector".into(), self.detector.clone().into());
        props.insert("confidence".into(), self.confidence.into());
        props.insert("status".into(), self.status.as_str().into());
        props.insert("area_m2".into(), self.polygon.area_m2.into());
        props.insert("detected_at".into(), self.detected_at.to_rfc3339_opts(SecondsFormat::Secs, true).into());
        Feature {
            bbox: None,
            geometry: Some(Geometry::new(Value::Polygon(vec![ring]))),
            id: Some(geojson::feature::Id::String(self.id.clone())),
            properties: Some(props),
            foreign_members: None,
        }
    }

    fn from_feature(f: &Feature) -> Result<Self, InventoryError> {
        let bad = |m: &str| InventoryError::Malformed(m.to_string());
        let ring = match f.geometry.as_ref().map(|g| &g.value) {
            Some(Value::Polygon(rings)) if !rings.is_empty() => rings[0].iter().map(|c| GeoPoint { lat: c[1], lon: c[0] }).collect(),
            _ => return Err(bad("panel feature needs a Polygon geometry")),
        };
        let polygon = GeoPolygon::new(ring).map_err(|e| InventoryError::Malformed(e.to_string()))?;
        let text = |k: &str| f.property(k).and_then(|v| v.as_str()).map(str::to_string);
        let detected_at = text("detected_at")
            .ok_or_else(|| bad("missing detected_at"))
            .and_then(|s| DateTime::parse_from_rfc3339(&s).map_err(|e| InventoryError::Malformed(e.to_string())))?
            .with_timezone(&Utc);
        let status = text("status")
            .ok_or_else(|| bad("missing status"))?
            .parse()
            .map_err(InventoryError::Malformed)?;
        Ok(Self {
            id: text("panel_id").unwrap_or_else(|| panel_id(&polygon.ring)),
            polygon,
            building_id: text("building_id").unwrap_or_default(),
            detector: text("detector").unwrap_or_default(),
            confidence: f.property("confidence").and_then(|v| v.as_f64()).unwrap_or(1.0),
            status,
            detected_at,
        })
    }
}

/// Panel records for one building's georeferenced detections.
pub fn records_from_detections(g: &Georeferenced, building_id: &str, detector: &str, at: DateTime<Utc>) -> Vec<PanelRecord> {
    g.panels
        .iter()
        .map(|p| PanelRecord::new(p.polygon.clone(), building_id, detector, p.confidence, at))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsertReport {
    pub inserted: usize,
    pub updated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationDecision {
    pub panel_id: String,
    pub decision: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationReport {
    pub applied: usize,
    pub unknown: Vec<String>,
}

/// One line of the curation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub at: DateTime<Utc>,
    pub panel_id: String,
    pub decision: Verdict,
    pub operator: String,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.at.to_rfc3339_opts(SecondsFormat::Secs, true),
            self.panel_id,
            self.decision.as_str(),
            self.operator
        )
    }
}

pub fn parse_log(text: &str) -> Result<Vec<LogEntry>, InventoryError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let err = |message: String| InventoryError::LogLine { line: i + 1, message };
            let parts: Vec<&str> = l.split_whitespace().collect();
            let [ts, id, verdict, operator] = parts[..] else {
                return Err(err(format!("expected 4 fields, got {}", parts.len())));
            };
            Ok(LogEntry {
                at: DateTime::parse_from_rfc3339(ts).map_err(|e| err(format!("timestamp: {e}")))?.with_timezone(&Utc),
                panel_id: id.to_string(),
                decision: verdict.parse().map_err(err)?,
                operator: operator.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InventorySummary {
    pub total_area_m2: f64,
    pub n_buildings: usize,
    pub building_area_m2: f64,
    pub n_panels: usize,
    pub panel_area_m2: f64,
    /// Upstream solar-tagged geometries in the same area, when supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labeled_panels: Option<usize>,
}

impl InventorySummary {
    /// Adds the count of externally labelled panel outlines touching `area`.
    pub fn with_labels(mut self, labels: &[Vec<GeoPoint>], area: &BoundingBox) -> Self {
        self.labeled_panels = Some(labels.iter().filter(|r| geo::ring_intersects_bbox(r, area)).count());
        self
    }
}

/// The in-memory state of one scan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanInventory {
    records: BTreeMap<String, PanelRecord>,
    buildings: BTreeMap<String, BuildingFootprint>,
}

impl ScanInventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PanelRecord> {
        self.records.get(id)
    }

    pub fn records(&self) -> impl Iterator<Item = &PanelRecord> {
        self.records.values()
    }

    pub fn buildings(&self) -> impl Iterator<Item = &BuildingFootprint> {
        self.buildings.values()
    }

    pub fn add_buildings<'a>(&mut self, fps: impl IntoIterator<Item = &'a BuildingFootprint>) {
        for fp in fps {
            self.buildings.insert(fp.id.clone(), fp.clone());
        }
    }

    /// Id-keyed upsert. A re-detected panel keeps its curation status and
    /// takes the new confidence and timestamp.
    pub fn upsert_panels(&mut self, records: impl IntoIterator<Item = PanelRecord>) -> UpsertReport {
        let mut report = UpsertReport::default();
        for rec in records {
            match self.records.get_mut(&rec.id) {
                Some(existing) => {
                    existing.confidence = rec.confidence;
                    existing.detected_at = rec.detected_at;
                    existing.detector = rec.detector;
                    existing.building_id = rec.building_id;
                    report.updated += 1;
                }
                None => {
                    self.records.insert(rec.id.clone(), rec);
                    report.inserted += 1;
                }
            }
        }
        report
    }

    /// Sets statuses, last write wins. Unknown ids are reported and skipped.
    pub fn apply_curation(&mut self, decisions: &[CurationDecision]) -> CurationReport {
        let mut report = CurationReport::default();
        for d in decisions {
            match self.records.get_mut(&d.panel_id) {
                Some(r) => {
                    r.status = d.decision.status();
                    report.applied += 1;
                }
                None => report.unknown.push(d.panel_id.clone()),
            }
        }
        report
    }

    pub fn panels(&self, filter: StatusFilter) -> impl Iterator<Item = &PanelRecord> {
        self.records.values().filter(move |r| filter.matches(r.status))
    }

    pub fn summarize(&self, area: &BoundingBox, filter: StatusFilter) -> InventorySummary {
        let panels: Vec<&PanelRecord> = self
            .panels(filter)
            .filter(|r| geo::ring_intersects_bbox(&r.polygon.ring, area))
            .collect();
        let buildings: Vec<&BuildingFootprint> = self.buildings.values().filter(|b| geo::ring_intersects_bbox(&b.ring, area)).collect();
        InventorySummary {
            total_area_m2: crate::georef::geodesic_area(&area.ring()).unwrap_or(0.0),
            n_buildings: buildings.len(),
            building_area_m2: buildings.iter().filter_map(|b| crate::georef::geodesic_area(&b.ring).ok()).sum(),
            n_panels: panels.len(),
            panel_area_m2: panels.iter().map(|r| r.polygon.area_m2).sum(),
            labeled_panels: None,
        }
    }

    /// Box around every stored panel and building.
    pub fn extent(&self) -> Option<BoundingBox> {
        let pts: Vec<GeoPoint> = self
            .records
            .values()
            .flat_map(|r| r.polygon.ring.iter().copied())
            .chain(self.buildings.values().flat_map(|b| b.ring.iter().copied()))
            .collect();
        BoundingBox::enclosing(&pts).ok()
    }

    pub fn to_geojson(&self, filter: StatusFilter) -> String {
        let fc = FeatureCollection {
            bbox: None,
            features: self.panels(filter).map(PanelRecord::to_feature).collect(),
            foreign_members: None,
        };
        let mut s = serde_json::to_string_pretty(&fc).expect("feature collection serializes");
        s.push('\n');
        s
    }

    pub fn from_geojson(text: &str) -> Result<Self, InventoryError> {
        let fc = parse_collection(text)?;
        let mut inv = Self::new();
        for f in &fc.features {
            let r = PanelRecord::from_feature(f)?;
            inv.records.insert(r.id.clone(), r);
        }
        Ok(inv)
    }
}

fn parse_collection(text: &str) -> Result<FeatureCollection, InventoryError> {
    match text.parse::<GeoJson>() {
        Ok(GeoJson::FeatureCollection(fc)) => Ok(fc),
        Ok(_) => Err(InventoryError::Malformed("expected a FeatureCollection".into())),
        Err(e) => Err(InventoryError::Malformed(e.to_string())),
    }
}

/// Reads panel outlines from a third-party GeoJSON file: every Polygon and
/// every part of a MultiPolygon becomes one accepted panel record. Known
/// properties are used when present.
pub fn import_geojson(text: &str, detector: &str, at: DateTime<Utc>) -> Result<ScanInventory, InventoryError> {
    let fc = parse_collection(text)?;
    let mut inv = ScanInventory::new();
    for (i, f) in fc.features.iter().enumerate() {
        let polys: Vec<&Vec<Vec<f64>>> = match f.geometry.as_ref().map(|g| &g.value) {
            Some(Value::Polygon(rings)) => rings.first().into_iter().collect(),
            Some(Value::MultiPolygon(ps)) => ps.iter().filter_map(|rings| rings.first()).collect(),
            _ => {
                log::warn!("feature {i} has no polygon geometry; skipped");
                continue;
            }
        };
        let building = f
            .property("building_id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .unwrap_or_default();
        let confidence = f.property("confidence").and_then(|v| v.as_f64()).unwrap_or(1.0);
        for outer in polys {
            let mut ring: Vec<GeoPoint> = outer.iter().map(|c| GeoPoint { lat: c[1], lon: c[0] }).collect();
            if ring.first() != ring.last() {
                if let Some(&first) = ring.first() {
                    ring.push(first);
                }
            }
            match GeoPolygon::new(ring) {
                Ok(polygon) => {
                    let mut rec = PanelRecord::new(polygon, building.clone(), detector, confidence, at);
                    rec.status = PanelStatus::Accepted;
                    inv.records.insert(rec.id.clone(), rec);
                }
                Err(e) => log::warn!("feature {i}: {e}; skipped"),
            }
        }
    }
    Ok(inv)
}

/// Directory-backed store of named scans.
#[derive(Debug, Clone)]
pub struct Inventory {
    root: PathBuf,
}

fn valid_scan_name(name: &str) -> bool {
    !name.is_empty() && name.len() <= 128 && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) && !name.starts_with('.')
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), InventoryError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

impl Inventory {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, InventoryError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, scan: &str, suffix: &str) -> Result<PathBuf, InventoryError> {
        if !valid_scan_name(scan) {
            return Err(InventoryError::ScanName(scan.to_string()));
        }
        Ok(self.root.join(format!("{scan}{suffix}")))
    }

    pub fn panels_path(&self, scan: &str) -> Result<PathBuf, InventoryError> {
        self.path(scan, ".geojson")
    }

    pub fn log_path(&self, scan: &str) -> Result<PathBuf, InventoryError> {
        self.path(scan, ".decisions.log")
    }

    fn buildings_path(&self, scan: &str) -> Result<PathBuf, InventoryError> {
        self.path(scan, ".buildings.geojson")
    }

    pub fn exists(&self, scan: &str) -> bool {
        self.panels_path(scan).map(|p| p.exists()).unwrap_or(false)
    }

    pub fn scans(&self) -> Result<Vec<String>, InventoryError> {
        let mut names: Vec<String> = fs::read_dir(&self.root)
            .map_err(io_err(&self.root))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter_map(|n| n.strip_suffix(".geojson").map(str::to_string))
            .filter(|n| !n.ends_with(".buildings"))
            .collect();
        names.sort();
        Ok(names)
    }

    /// Loads a scan; a scan never written yet is empty.
    pub fn load(&self, scan: &str) -> Result<ScanInventory, InventoryError> {
        let path = self.panels_path(scan)?;
        let mut inv = match fs::read_to_string(&path) {
            Ok(text) => ScanInventory::from_geojson(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => ScanInventory::new(),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let bpath = self.buildings_path(scan)?;
        match fs::read_to_string(&bpath) {
            Ok(text) => {
                let fps = footprints_from_geojson(&text).map_err(|e| InventoryError::Malformed(e.to_string()))?;
                inv.add_buildings(&fps);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(&bpath)(e)),
        }
        Ok(inv)
    }

    pub fn load_existing(&self, scan: &str) -> Result<ScanInventory, InventoryError> {
        if !self.exists(scan) {
            return Err(InventoryError::UnknownScan(scan.to_string()));
        }
        self.load(scan)
    }

    pub fn save(&self, scan: &str, inv: &ScanInventory) -> Result<(), InventoryError> {
        write_atomic(&self.panels_path(scan)?, &inv.to_geojson(StatusFilter::All))?;
        let fps: Vec<BuildingFootprint> = inv.buildings.values().cloned().collect();
        write_atomic(&self.buildings_path(scan)?, &footprints_to_geojson(&fps))
    }

    /// Applies decisions to a stored scan and appends the applied ones to
    /// its log.
    pub fn curate(&self, scan: &str, decisions: &[CurationDecision], operator: &str, clock: &dyn Clock) -> Result<CurationReport, InventoryError> {
        if operator.is_empty() || operator.chars().any(char::is_whitespace) {
            return Err(InventoryError::Operator(operator.to_string()));
        }
        let mut inv = self.load_existing(scan)?;
        let report = inv.apply_curation(decisions);
        let at = clock.now();
        let lines: String = decisions
            .iter()
            .filter(|d| inv.records.contains_key(&d.panel_id))
            .map(|d| {
                LogEntry {
                    at,
                    panel_id: d.panel_id.clone(),
                    decision: d.decision,
                    operator: operator.to_string(),
                }
                .to_string()
                    + "\n"
            })
            .collect();
        let log = self.log_path(scan)?;
        let mut f = OpenOptions::new().create(true).append(true).open(&log).map_err(io_err(&log))?;
        f.write_all(lines.as_bytes()).map_err(io_err(&log))?;
        self.save(scan, &inv)?;
        Ok(report)
    }

    /// Replays a decision log (for instance one written by another
    /// deployment) onto a stored scan. Operators are taken from the log.
    pub fn apply_log(&self, scan: &str, text: &str) -> Result<CurationReport, InventoryError> {
        let entries = parse_log(text)?;
        let mut total = CurationReport::default();
        for e in entries {
            let r = self.curate(
                scan,
                &[CurationDecision {
                    panel_id: e.panel_id,
                    decision: e.decision,
                }],
                &e.operator,
                &FixedClock(e.at),
            )?;
            total.applied += r.applied;
            total.unknown.extend(r.unknown);
        }
        Ok(total)
    }

    pub fn read_log(&self, scan: &str) -> Result<Vec<LogEntry>, InventoryError> {
        let path = self.log_path(scan)?;
        match fs::read_to_string(&path) {
            Ok(text) => parse_log(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2025, 5, 1, 12, 0, 0).unwrap()
    }

    fn square(lat: f64, lon: f64, d: f64) -> GeoPolygon {
        GeoPolygon::new(
            [(lat, lon), (lat, lon + d), (lat + d, lon + d), (lat + d, lon), (lat, lon)]
                .iter()
                .map(|&(lat, lon)| GeoPoint { lat, lon })
                .collect(),
        )
        .unwrap()
    }

    fn rec(lat: f64, lon: f64) -> PanelRecord {
        PanelRecord::new(square(lat, lon, 0.00005), "way/1", "mock", 0.9, t0())
    }

    fn three() -> (ScanInventory, Vec<String>) {
        let mut inv = ScanInventory::new();
        let recs = vec![rec(47.0, 8.0), rec(47.001, 8.0), rec(47.002, 8.0)];
        let ids = recs.iter().map(|r| r.id.clone()).collect();
        inv.upsert_panels(recs);
        (inv, ids)
    }

    fn bbox() -> BoundingBox {
        BoundingBox::new(46.9, 7.9, 47.1, 8.1).unwrap()
    }

    #[test]
    fn upsert_is_idempotent() {
        let mut inv = ScanInventory::new();
        assert_eq!(inv.upsert_panels(vec![rec(47.0, 8.0)]), UpsertReport { inserted: 1, updated: 0 });
        let before = inv.to_geojson(StatusFilter::All);
        assert_eq!(inv.upsert_panels(vec![rec(47.0, 8.0)]), UpsertReport { inserted: 0, updated: 1 });
        assert_eq!(inv.len(), 1);
        assert_eq!(inv.to_geojson(StatusFilter::All), before);
        assert_eq!(inv.upsert_panels(vec![]), UpsertReport::default());
    }

    #[test]
    fn identity_quantum() {
        let a = rec(47.0, 8.0);
        let b = rec(47.0 + 1e-6, 8.0);
        let c = rec(47.0 + 1e-9, 8.0);
        assert_ne!(a.id, b.id);
        assert_eq!(a.id, c.id);
        let mut inv = ScanInventory::new();
        inv.upsert_panels(vec![a, b]);
        assert_eq!(inv.len(), 2);
    }

    #[test]
    fn redetection_updates_but_keeps_status() {
        let (mut inv, ids) = three();
        inv.apply_curation(&[CurationDecision { panel_id: ids[0].clone(), decision: Verdict::Rejected }]);
        let mut again = rec(47.0, 8.0);
        again.confidence = 0.75;
        again.detected_at = t0() + chrono::Duration::days(1);
        inv.upsert_panels(vec![again]);
        let r = inv.get(&ids[0]).unwrap();
        assert_eq!((r.status, r.confidence), (PanelStatus::Rejected, 0.75));
        assert_eq!(r.detected_at, t0() + chrono::Duration::days(1));
    }

    #[test]
    fn curation_filters_and_last_write_wins() {
        let (mut inv, ids) = three();
        let rep = inv.apply_curation(&[CurationDecision { panel_id: ids[1].clone(), decision: Verdict::Rejected }]);
        assert_eq!(rep, CurationReport { applied: 1, unknown: vec![] });
        assert_eq!(inv.summarize(&bbox(), StatusFilter::Accepted).n_panels, 2);
        assert_eq!(inv.summarize(&bbox(), StatusFilter::All).n_panels, 3);
        assert_eq!(inv.summarize(&bbox(), StatusFilter::Rejected).n_panels, 1);

        let rep = inv.apply_curation(&[
            CurationDecision { panel_id: "nope".into(), decision: Verdict::Accepted },
            CurationDecision { panel_id: ids[1].clone(), decision: Verdict::Accepted },
        ]);
        assert_eq!(rep, CurationReport { applied: 1, unknown: vec!["nope".into()] });
        assert_eq!(inv.get(&ids[1]).unwrap().status, PanelStatus::Accepted);
        assert_eq!(inv.len(), 3);
    }

    #[test]
    fn summary_of_constructed_areas() {
        let mut inv = ScanInventory::new();
        for (i, area) in [10.0, 20.0, 30.0].into_iter().enumerate() {
            let mut r = rec(47.0 + i as f64 * 0.001, 8.0);
            r.polygon.area_m2 = area;
            inv.upsert_panels(vec![r]);
        }
        let s = inv.summarize(&bbox(), StatusFilter::All);
        assert_eq!(s.n_panels, 3);
        assert!((s.panel_area_m2 - 60.0).abs() < 1e-6);

        let empty = inv.summarize(&BoundingBox::new(10.0, 10.0, 11.0, 11.0).unwrap(), StatusFilter::All);
        assert_eq!((empty.n_panels, empty.panel_area_m2, empty.n_buildings), (0, 0.0, 0));
    }

    #[test]
    fn geojson_round_trip_and_properties() {
        let (inv, ids) = three();
        let text = inv.to_geojson(StatusFilter::All);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let props = &v["features"][0]["properties"];
        for key in ["panel_id", "building_id", "detector", "confidence", "status", "area_m2", "detected_at"] {
            assert!(!props[key].is_null(), "{key}");
        }
        assert_eq!(props["status"], "detected");
        assert_eq!(props["detected_at"], "2025-05-01T12:00:00Z");
        let back = ScanInventory::from_geojson(&text).unwrap();
        assert_eq!(back.to_geojson(StatusFilter::All), text);
        assert!(back.get(&ids[2]).is_some());
    }

    #[test]
    fn store_persists_curation_and_log() {
        let dir = tempfile::tempdir().unwrap();
        let store = Inventory::open(dir.path()).unwrap();
        let (inv, ids) = three();
        store.save("demo", &inv).unwrap();
        let clock = FixedClock(t0());
        let rep = store
            .curate(
                "demo",
                &[
                    CurationDecision { panel_id: ids[0].clone(), decision: Verdict::Rejected },
                    CurationDecision { panel_id: "ghost".into(), decision: Verdict::Rejected },
                ],
                "alice",
                &clock,
            )
            .unwrap();
        assert_eq!(rep.unknown, vec!["ghost".to_string()]);
        let log = std::fs::read_to_string(store.log_path("demo").unwrap()).unwrap();
        assert_eq!(log, format!("2025-05-01T12:00:00Z {} rejected alice\n", ids[0]));
        assert_eq!(store.load("demo").unwrap().get(&ids[0]).unwrap().status, PanelStatus::Rejected);
        assert_eq!(store.scans().unwrap(), vec!["demo".to_string()]);

        assert!(matches!(store.curate("demo", &[], "bob smith", &clock), Err(InventoryError::Operator(_))));
        assert!(matches!(store.load("../etc"), Err(InventoryError::ScanName(_))));
        assert!(matches!(store.load_existing("missing"), Err(InventoryError::UnknownScan(_))));
    }

    #[test]
    fn log_replay_matches_direct_curation() {
        let dir = tempfile::tempdir().unwrap();
        let a = Inventory::open(dir.path().join("a")).unwrap();
        let b = Inventory::open(dir.path().join("b")).unwrap();
        let (inv, ids) = three();
        a.save("s", &inv).unwrap();
        b.save("s", &inv).unwrap();
        let clock = FixedClock(t0());
        a.curate("s", &[CurationDecision { panel_id: ids[0].clone(), decision: Verdict::Rejected }], "carol", &clock).unwrap();
        a.curate("s", &[CurationDecision { panel_id: ids[2].clone(), decision: Verdict::Accepted }], "carol", &clock).unwrap();
        let log = std::fs::read_to_string(a.log_path("s").unwrap()).unwrap();
        let rep = b.apply_log("s", &log).unwrap();
        assert_eq!(rep.applied, 2);
        assert_eq!(
            std::fs::read(a.panels_path("s").unwrap()).unwrap(),
            std::fs::read(b.panels_path("s").unwrap()).unwrap()
        );
        assert_eq!(a.read_log("s").unwrap(), b.read_log("s").unwrap());
        assert!(matches!(parse_log("2025-01-01T00:00:00Z abc maybe op\n"), Err(InventoryError::LogLine { line: 1, .. })));
    }

    #[test]
    fn import_foreign_collection() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"name":"x"},"geometry":{"type":"Polygon","coordinates":[[[8.0,47.0],[8.0001,47.0],[8.0001,47.0001],[8.0,47.0001],[8.0,47.0]]]}},
            {"type":"Feature","properties":{},"geometry":{"type":"MultiPolygon","coordinates":[
                [[[8.1,47.1],[8.1001,47.1],[8.1001,47.1001],[8.1,47.1]]],
                [[[8.2,47.2],[8.2001,47.2],[8.2001,47.2001],[8.2,47.2001],[8.2,47.2]]]]}},
            {"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[8.0,47.0]}}]}"#;
        let inv = import_geojson(text, "import", t0()).unwrap();
        assert_eq!(inv.len(), 3);
        assert!(inv.records().all(|r| r.status == PanelStatus::Accepted));
        let s = inv.summarize(&BoundingBox::new(46.0, 7.0, 48.0, 9.0).unwrap(), StatusFilter::Accepted);
        assert_eq!(s.n_panels, 3);
    }

    proptest! {
        #[test]
        fn summaries_add_over_disjoint_boxes(cells in prop::collection::vec((0u8..10, 0u8..20, any::<bool>()), 0..40)) {
            let mut inv = ScanInventory::new();
            for (row, col, rejected) in cells {
                let mut r = PanelRecord::new(
                    square(47.0 + f64::from(row) * 0.001 + 0.0002, 8.0 + f64::from(col) * 0.001 + 0.0002, 0.0003),
                    "b",
                    "mock",
                    0.8,
                    t0(),
                );
                if rejected {
                    r.status = PanelStatus::Rejected;
                }
                inv.upsert_panels(vec![r]);
            }
            let west = BoundingBox::new(47.0, 8.0, 47.01, 8.01).unwrap();
            let east = BoundingBox::new(47.0, 8.01, 47.01, 8.02).unwrap();
            let union = BoundingBox::new(47.0, 8.0, 47.01, 8.02).unwrap();
            for filter in [StatusFilter::All, StatusFilter::Accepted, StatusFilter::Rejected] {
                let (a, b, u) = (inv.summarize(&west, filter), inv.summarize(&east, filter), inv.summarize(&union, filter));
                prop_assert_eq!(a.n_panels + b.n_panels, u.n_panels);
                prop_assert!((a.panel_area_m2 + b.panel_area_m2 - u.panel_area_m2).abs() <= 1e-6 * u.panel_area_m2.max(1.0));
            }
            let total = inv.len();
            let ids: Vec<String> = inv.records().map(|r| r.id.clone()).collect();
            inv.apply_curation(&ids.iter().map(|id| CurationDecision { panel_id: id.clone(), decision: Verdict::Rejected }).collect::<Vec<_>>());
            prop_assert_eq!(inv.len(), total);
        }
    }
}

//! Detector contract, confidence filtering and detector backends.
//!
//! A detector receives a stitched building image and returns a
//! [`DetectionSet`]: pixel-space polygons with confidences. External
//! segmentation models plug in as a subprocess that prints one exchange
//! document on stdout:
//!
//! ```json
//! {"image":{"width":1500,"height":1500},"detector":"sam3",
//!  "detections":[{"confidence":0.93,"polygon":[[10,10],[40,10],[40,30],[10,30],[10,10]]}]}
//! ```
//!
//! Polygon vertices use pixel-centre coordinates: `(0, 0)` is the centre of
//! the top-left pixel.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo;
use crate::imagery::{scanline_spans, AnchoredImage, BuildingMask};

/// Confidence threshold applied before georeferencing.
pub const DEFAULT_THRESHOLD: f64 = 0.70;
pub const DEFAULT_PROMPT: &str = "solar panel";
/// Minimum share of a detection's pixels that must fall on the building.
pub const MASK_OVERLAP_KEEP: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("exchange document violates schema at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("detector backend failed: {0}")]
    Backend(String),
    #[error("detection set is {got_w}x{got_h} but the image is {want_w}x{want_h}")]
    DimensionMismatch { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("cannot read detector script {path}: {message}")]
    Script { path: PathBuf, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> DetectionError {
    DetectionError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Closed pixel-space ring.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelPolygon {
    vertices: Vec<[f64; 2]>,
}

impl PixelPolygon {
    /// Validates closure, vertex count, simplicity and that every vertex lies
    /// in `[0, width) × [0, height)`.
    pub fn new(vertices: Vec<[f64; 2]>, width: u32, height: u32) -> Result<Self, DetectionError> {
        Self::validate(&vertices, width, height).map_err(|(sub, msg)| schema(format!("polygon{sub}"), msg))?;
        Ok(Self { vertices })
    }

    fn validate(v: &[[f64; 2]], width: u32, height: u32) -> Result<(), (String, String)> {
        if v.len() < 4 {
            return Err((String::new(), format!("needs at least 4 vertices, got {}", v.len())));
        }
        for (i, p) in v.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() || p[0] < 0.0 || p[1] < 0.0 || p[0] >= f64::from(width) || p[1] >= f64::from(height) {
                return Err((format!("[{i}]"), format!("vertex ({}, {}) outside {width}x{height}", p[0], p[1])));
            }
        }
        if v.first() != v.last() {
            return Err((String::new(), "ring is not closed".into()));
        }
        if let Some((i, j)) = geo::first_self_intersection(v) {
            return Err((String::new(), format!("ring self-intersects at edges {i} and {j}")));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Unsigned shoelace area in px².
    pub fn area(&self) -> f64 {
        geo::signed_area_xy(&self.vertices).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub confidence: f64,
    pub region: PixelPolygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    pub image_width: u32,
    pub image_height: u32,
    pub detector_name: String,
    pub detections: Vec<Detection>,
}

impl DetectionSet {
    pub fn empty(image_width: u32, image_height: u32, detector_name: impl Into<String>) -> Self {
        Self {
            image_width,
            image_height,
            detector_name: detector_name.into(),
            detections: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct ExchangeImage {
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
struct ExchangeDetection {
    confidence: f64,
    polygon: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ExchangeDoc {
    image: ExchangeImage,
    detector: String,
    detections: Vec<ExchangeDetection>,
}

impl ExchangeDoc {
    fn into_set(self) -> Result<DetectionSet, DetectionError> {
        let (w, h) = (self.image.width, self.image.height);
        if w == 0 || h == 0 {
            return Err(schema("image", "width and height must be positive"));
        }
        let mut detections = Vec::with_capacity(self.detections.len());
        for (i, d) in self.detections.into_iter().enumerate() {
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(schema(format!("detections[{i}].confidence"), format!("{} outside [0, 1]", d.confidence)));
            }
            PixelPolygon::validate(&d.polygon, w, h).map_err(|(sub, msg)| schema(format!("detections[{i}].polygon{sub}"), msg))?;
            detections.push(Detection {
                confidence: d.confidence,
                region: PixelPolygon { vertices: d.polygon },
            });
        }
        Ok(DetectionSet {
            image_width: w,
            image_height: h,
            detector_name: self.detector,
            detections,
        })
    }

    fn from_set(ds: &DetectionSet) -> Self {
        Self {
            image: ExchangeImage {
                width: ds.image_width,
                height: ds.image_height,
            },
            detector: ds.detector_name.clone(),
            detections: ds
                .detections
                .iter()
                .map(|d| ExchangeDetection {
                    confidence: d.confidence,
                    polygon: d.region.vertices.clone(),
                })
                .collect(),
        }
    }
}

/// Parses and validates an exchange document. Errors carry the JSON path of
/// the offending field.
pub fn parse_exchange(text: &str) -> Result<DetectionSet, DetectionError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ExchangeDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "$".to_string() } else { path }, e.inner().to_string())
    })?;
    doc.into_set()
}

pub fn to_exchange(ds: &DetectionSet) -> String {
    serde_json::to_string(&ExchangeDoc::from_set(ds)).expect("exchange document serializes")
}

/// Keeps detections with `confidence >= threshold`, preserving order.
///
/// # Panics
///
/// When `threshold` is outside `[0, 1]`.
pub fn filter_by_confidence(ds: &DetectionSet, threshold: f64) -> DetectionSet {
    assert!((0.0..=1.0).contains(&threshold), "threshold {threshold} outside [0, 1]");
    DetectionSet {
        detections: ds.detections.iter().filter(|d| d.confidence >= threshold).cloned().collect(),
        ..ds.clone()
    }
}

/// Share of the polygon's covered pixel centres that are set in the mask.
/// Polygons covering no pixel centre are judged by the pixel nearest their
/// centroid.
pub fn mask_overlap(region: &PixelPolygon, mask: &BuildingMask) -> f64 {
    let (mut total, mut inside) = (0u64, 0u64);
    for (row, x0, x1) in scanline_spans(region.vertices(), mask.width, mask.height) {
        for x in x0..x1 {
            total += 1;
            inside += u64::from(mask.get(x, row));
        }
    }
    if total == 0 {
        let c = geo::centroid_xy(region.vertices());
        let x = c[0].round().clamp(0.0, f64::from(mask.width - 1)) as u32;
        let y = c[1].round().clamp(0.0, f64::from(mask.height - 1)) as u32;
        return if mask.get(x, y) { 1.0 } else { 0.0 };
    }
    inside as f64 / total as f64
}

/// A segmentation backend.
pub trait Detector: Send + Sync {
    fn name(&self) -> &str;
    fn detect(&self, img: &AnchoredImage, mask: &BuildingMask) -> Result<DetectionSet, DetectionError>;
}

/// Runs a backend and drops detections that mostly lie off the building.
pub fn run_detector(detector: &dyn Detector, img: &AnchoredImage, mask: &BuildingMask) -> Result<DetectionSet, DetectionError> {
    let mut ds = detector.detect(img, mask)?;
    if ds.image_width != img.width || ds.image_height != img.height {
        return Err(DetectionError::DimensionMismatch {
            got_w: ds.image_width,
            got_h: ds.image_height,
            want_w: img.width,
            want_h: img.height,
        });
    }
    ds.detections.retain(|d| mask_overlap(&d.region, mask) >= MASK_OVERLAP_KEEP);
    Ok(ds)
}

/// Scripted detector keyed by building id. The key `*` applies to buildings
/// without their own entry; anything else yields an empty set.
#[derive(Debug, Clone, Default)]
pub struct MockDetector {
    scripts: HashMap<String, DetectionSet>,
}

impl MockDetector {
    pub const NAME: &'static str = "mock";

    pub fn new(scripts: HashMap<String, DetectionSet>) -> Self {
        Self { scripts }
    }

    /// Parses a sidecar document `{"<building_id>": <exchange document>, ...}`.
    pub fn from_json(text: &str) -> Result<Self, DetectionError> {
        let raw: HashMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
        let mut scripts = HashMap::with_capacity(raw.len());
        for (id, doc) in raw {
            let ds = parse_exchange(&doc.to_string()).map_err(|e| match e {
                DetectionError::Schema { path, message } => schema(format!("{id}.{path}"), message),
                other => other,
            })?;
            scripts.insert(id, ds);
        }
        Ok(Self { scripts })
    }

    pub fn from_file(path: &Path) -> Result<Self, DetectionError> {
        let text = std::fs::read_to_string(path).map_err(|e| DetectionError::Script {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }
}

impl Detector for MockDetector {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn detect(&self, img: &AnchoredImage, _mask: &BuildingMask) -> Result<DetectionSet, DetectionError> {
        Ok(self
            .scripts
            .get(&img.building_id)
            .or_else(|| self.scripts.get("*"))
            .cloned()
            .unwrap_or_else(|| DetectionSet::empty(img.width, img.height, Self::NAME)))
    }
}

/// External adapter: `<command> <image.png> <prompt>`, one exchange document
/// on stdout, nonzero exit status means failure.
#[derive(Debug, Clone)]
pub struct ProcessDetector {
    program: String,
    args: Vec<String>,
    prompt: String,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ProcessDetector {
    /// Splits `command` with shell quoting rules.
    pub fn from_command_line(command: &str, prompt: impl Into<String>) -> Result<Self, DetectionError> {
        let mut parts = shlex::split(command)
            .filter(|p| !p.is_empty())
            .ok_or_else(|| DetectionError::Backend(format!("cannot parse detector command {command:?}")))?;
        let program = parts.remove(0);
        Ok(Self {
            program,
            args: parts,
            prompt: prompt.into(),
        })
    }
}

impl Detector for ProcessDetector {
    fn name(&self) -> &str {
        &self.program
    }

    fn detect(&self, img: &AnchoredImage, _mask: &BuildingMask) -> Result<DetectionSet, DetectionError> {
        let path = std::env::temp_dir().join(format!(
            "pvscan-{}-{}.png",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&path, img.to_png()).map_err(|e| DetectionError::Backend(format!("writing {}: {e}", path.display())))?;
        let output = Command::new(&self.program).args(&self.args).arg(&path).arg(&self.prompt).output();
        let _ = std::fs::remove_file(&path);
        let output = output.map_err(|e| DetectionError::Backend(format!("launching {}: {e}", self.program)))?;
        if !output.status.success() {
            return Err(DetectionError::Backend(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let stdout = String::from_utf8(output.stdout).map_err(|_| schema("$", "stdout is not UTF-8"))?;
        parse_exchange(&stdout)
    }
}

//! Place-name geocoding and building footprints from open map data.
//!
//! The upstream services speak the Nominatim search contract
//! (`q=<name>&format=json`) and the Overpass API (`out geom` JSON). Transport
//! is injected through [`MapDataSource`], so recorded responses and live
//! services go through the same parsing path.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::geo::{self, BoundingBox, GeoError, GeoPoint};

/// Per-request query area limit (km²). Larger boxes are split into a grid.
pub const DEFAULT_MAX_REQUEST_KM2: f64 = 25.0;
/// Hard limit on a single footprint fetch (km²), however it is split.
pub const DEFAULT_MAX_TOTAL_KM2: f64 = 2_500.0;

/// Failure reported by a transport; kept separate from parse failures.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{service}: {message}")]
pub struct SourceError {
    pub service: String,
    pub message: String,
}

impl SourceError {
    pub fn new(service: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            service: service.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GeodataError {
    #[error("no match for place {0:?}")]
    NoMatch(String),
    #[error("upstream service failure: {0}")]
    Service(#[from] SourceError),
    #[error("malformed upstream response: {0}")]
    Malformed(String),
    #[error("query area {area_km2:.1} km² exceeds the {max_km2:.1} km² limit")]
    OversizeArea { area_km2: f64, max_km2: f64 },
    #[error(transparent)]
    Geometry(#[from] GeoError),
}

/// Raw access to the geocoder and the Overpass endpoint.
pub trait MapDataSource: Send + Sync {
    /// Nominatim-style search; returns the JSON body.
    fn search(&self, query: &str) -> Result<String, SourceError>;
    /// Executes an Overpass QL query; returns the JSON body.
    fn overpass(&self, query: &str) -> Result<String, SourceError>;
}

/// One geocoder result.
#[derive(Debug, Clone, PartialEq)]
pub struct GeocodeHit {
    pub point: GeoPoint,
    pub display_name: Option<String>,
    pub bbox: Option<BoundingBox>,
}

#[derive(Deserialize)]
struct NominatimPlace {
    lat: StrOrNum,
    lon: StrOrNum,
    #[serde(default)]
    display_name: Option<String>,
    /// `[south, north, west, east]` as strings.
    #[serde(default)]
    boundingbox: Option<Vec<StrOrNum>>,
}

#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum StrOrNum {
    Str(String),
    Num(f64),
}

impl StrOrNum {
    fn value(&self) -> Result<f64, GeodataError> {
        match self {
            StrOrNum::Num(v) => Ok(*v),
            StrOrNum::Str(s) => s
                .trim()
                .parse()
                .map_err(|_| GeodataError::Malformed(format!("not a number: {s:?}"))),
        }
    }
}

/// Parses a Nominatim JSON array and returns the first (top-ranked) result.
pub fn parse_geocode(place: &str, body: &str) -> Result<GeocodeHit, GeodataError> {
    let places: Vec<NominatimPlace> =
        serde_json::from_str(body).map_err(|e| GeodataError::Malformed(format!("geocoder response: {e}")))?;
    let first = places.into_iter().next().ok_or_else(|| GeodataError::NoMatch(place.to_string()))?;
    let point = GeoPoint::new(first.lat.value()?, first.lon.value()?)?;
    let bbox = match first.boundingbox {
        Some(b) if b.len() == 4 => {
            let v: Vec<f64> = b.iter().map(StrOrNum::value).collect::<Result<_, _>>()?;
            BoundingBox::new(v[0], v[2], v[1], v[3]).ok()
        }
        _ => None,
    };
    Ok(GeocodeHit {
        point,
        display_name: first.display_name,
        bbox,
    })
}

/// Resolves a place name to coordinates through the configured geocoder.
pub fn geocode(source: &dyn MapDataSource, place: &str) -> Result<GeocodeHit, GeodataError> {
    let place = place.trim();
    if place.is_empty() {
        return Err(GeodataError::NoMatch(String::new()));
    }
    let body = source.search(place)?;
    parse_geocode(place, &body)
}

/// A building outline from open map data.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingFootprint {
    /// Source identifier, e.g. `way/123` or `relation/45/0` for the first
    /// outer ring of a multipolygon.
    pub id: String,
    /// Closed ring, first point equal to the last.
    pub ring: Vec<GeoPoint>,
    pub bbox: BoundingBox,
}

impl BuildingFootprint {
    pub fn new(id: impl Into<String>, ring: Vec<GeoPoint>) -> Result<Self, GeoError> {
        geo::validate_ring(&ring)?;
        let bbox = BoundingBox::enclosing(&ring)?;
        Ok(Self {
            id: id.into(),
            ring,
            bbox,
        })
    }

    /// Area-weighted centroid in lon/lat space.
    pub fn centroid(&self) -> GeoPoint {
        let xy: Vec<[f64; 2]> = self.ring.iter().map(|p| [p.lon, p.lat]).collect();
        let c = geo::centroid_xy(&xy);
        GeoPoint { lat: c[1], lon: c[0] }
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        geo::point_in_ring(&self.ring, p)
    }
}

/// Overpass QL selecting building ways and multipolygon relations in `area`,
/// with inline geometry.
pub fn overpass_query(area: &BoundingBox) -> String {
    let b = format!("{},{},{},{}", area.south, area.west, area.north, area.east);
    format!("[out:json][timeout:90];(way[\"building\"]({b});relation[\"building\"][\"type\"=\"multipolygon\"]({b}););out geom;")
}

#[derive(Deserialize)]
struct OverpassResponse {
    elements: Vec<OverpassElement>,
}

#[derive(Deserialize)]
struct OverpassElement {
    #[serde(rename = "type")]
    kind: String,
    id: i64,
    #[serde(default)]
    geometry: Option<Vec<Option<LatLon>>>,
    #[serde(default)]
    members: Option<Vec<OverpassMember>>,
}

#[derive(Deserialize)]
struct OverpassMember {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    role: String,
    #[serde(default)]
    geometry: Option<Vec<Option<LatLon>>>,
}

#[derive(Deserialize, Clone, Copy)]
struct LatLon {
    lat: f64,
    lon: f64,
}

fn to_points(geom: &[Option<LatLon>]) -> Option<Vec<GeoPoint>> {
    geom.iter().map(|p| p.and_then(|p| GeoPoint::new(p.lat, p.lon).ok())).collect()
}

/// Joins open way segments into closed rings by matching endpoints.
fn assemble_rings(mut segments: Vec<Vec<GeoPoint>>) -> Vec<Vec<GeoPoint>> {
    let mut rings = Vec::new();
    while let Some(mut current) = segments.pop() {
        loop {
            if current.len() >= 2 && current.first() == current.last() {
                rings.push(current);
                break;
            }
            let tail = *current.last().expect("segment has points");
            let next = segments.iter().position(|s| s.first() == Some(&tail) || s.last() == Some(&tail));
            match next {
                Some(i) => {
                    let mut seg = segments.swap_remove(i);
                    if seg.first() != Some(&tail) {
                        seg.reverse();
                    }
                    current.extend(seg.into_iter().skip(1));
                }
                None => break,
            }
        }
    }
    rings
}

/// Parses an Overpass `out geom` JSON document into footprints touching
/// `area`. Invalid or unclosed outlines are skipped with a warning; only
/// outer rings of multipolygons are kept.
pub fn parse_overpass(body: &str, area: &BoundingBox) -> Result<Vec<BuildingFootprint>, GeodataError> {
    let resp: OverpassResponse =
        serde_json::from_str(body).map_err(|e| GeodataError::Malformed(format!("overpass response: {e}")))?;
    let mut out: BTreeMap<String, BuildingFootprint> = BTreeMap::new();
    let mut push = |id: String, ring: Vec<GeoPoint>| match BuildingFootprint::new(id.clone(), ring) {
        Ok(fp) => {
            if geo::ring_intersects_bbox(&fp.ring, area) {
                out.entry(id).or_insert(fp);
            }
        }
        Err(e) => log::warn!("skipping footprint {id}: {e}"),
    };
    for el in resp.elements {
        match el.kind.as_str() {
            "way" => {
                let Some(points) = el.geometry.as_deref().and_then(to_points) else {
                    log::warn!("skipping way/{}: missing geometry", el.id);
                    continue;
                };
                push(format!("way/{}", el.id), points);
            }
            "relation" => {
                let outers: Vec<Vec<GeoPoint>> = el
                    .members
                    .unwrap_or_default()
                    .iter()
                    .filter(|m| m.kind == "way" && (m.role == "outer" || m.role.is_empty()))
                    .filter_map(|m| m.geometry.as_deref().and_then(to_points))
                    .filter(|pts| pts.len() >= 2)
                    .collect();
                for (i, ring) in assemble_rings(outers).into_iter().enumerate() {
                    push(format!("relation/{}/{}", el.id, i), ring);
                }
            }
            _ => {}
        }
    }
    Ok(out.into_values().collect())
}

/// Limits applied by [`fetch_footprints`].
#[derive(Debug, Clone, Copy)]
pub struct FootprintLimits {
    pub max_request_km2: f64,
    pub max_total_km2: f64,
}

impl Default for FootprintLimits {
    fn default() -> Self {
        Self {
            max_request_km2: DEFAULT_MAX_REQUEST_KM2,
            max_total_km2: DEFAULT_MAX_TOTAL_KM2,
        }
    }
}

/// Fetches all building footprints touching `area`, splitting the request
/// into grid cells of at most `limits.max_request_km2` and deduplicating by
/// id. The result is sorted by id.
pub fn fetch_footprints(
    source: &dyn MapDataSource,
    area: &BoundingBox,
    limits: FootprintLimits,
) -> Result<Vec<BuildingFootprint>, GeodataError> {
    let area_km2 = area.approx_area_km2();
    if area_km2 > limits.max_total_km2 {
        return Err(GeodataError::OversizeArea {
            area_km2,
            max_km2: limits.max_total_km2,
        });
    }
    let mut all: BTreeMap<String, BuildingFootprint> = BTreeMap::new();
    for cell in area.split_to_max_area(limits.max_request_km2) {
        let body = source.overpass(&overpass_query(&cell))?;
        for fp in parse_overpass(&body, &cell)? {
            all.entry(fp.id.clone()).or_insert(fp);
        }
    }
    Ok(all.into_values().collect())
}

/// GeoJSON FeatureCollection with one Polygon feature per footprint and the
/// source id in property `osm_id`.
pub fn footprints_to_geojson(footprints: &[BuildingFootprint]) -> String {
    let features = footprints
        .iter()
        .map(|fp| {
            let mut props = serde_json::Map::new();
            props.insert("osm_id".into(), fp.id.clone().into());
            geojson::Feature {
                bbox: None,
                geometry: Some(geojson::Geometry::new(geojson::Value::Polygon(vec![fp
                    .ring
                    .iter()
                    .map(|p| vec![p.lon, p.lat])
                    .collect()]))),
                id: None,
                properties: Some(props),
                foreign_members: None,
            }
        })
        .collect();
    geojson::FeatureCollection {
        bbox: None,
        features,
        foreign_members: None,
    }
    .to_string()
}

/// Reads footprints back from [`footprints_to_geojson`] output.
pub fn footprints_from_geojson(text: &str) -> Result<Vec<BuildingFootprint>, GeodataError> {
    let fc: geojson::FeatureCollection = text
        .parse::<geojson::GeoJson>()
        .map_err(|e| GeodataError::Malformed(e.to_string()))?
        .try_into()
        .map_err(|e: geojson::Error| GeodataError::Malformed(e.to_string()))?;
    let mut out = Vec::with_capacity(fc.features.len());
    for (i, f) in fc.features.into_iter().enumerate() {
        let id = f
            .property("osm_id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("feature/{i}"));
        let Some(geojson::Value::Polygon(rings)) = f.geometry.map(|g| g.value) else {
            return Err(GeodataError::Malformed(format!("feature {i} is not a Polygon")));
        };
        let outer = rings
            .into_iter()
            .next()
            .ok_or_else(|| GeodataError::Malformed(format!("feature {i} has no rings")))?;
        let ring = outer
            .iter()
            .map(|c| GeoPoint::new(c[1], c[0]))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(BuildingFootprint::new(id, ring)?);
    }
    Ok(out)
}

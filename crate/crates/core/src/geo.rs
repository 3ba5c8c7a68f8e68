//! WGS84 coordinates, bounding boxes and planar ring predicates.
//!
//! Ring predicates (closure, simplicity, point-in-ring) treat longitude as x
//! and latitude as y. At building scale that planar view is exact enough for
//! topology; metric quantities live in [`crate::georef`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for short-range distance estimates (m).
pub const MEAN_EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("bounding box south {south} must be below north {north}")]
    InvertedLatitude { south: f64, north: f64 },
    #[error("bounding box west {west} must be left of east {east} (antimeridian crossing is not supported)")]
    InvertedLongitude { west: f64, east: f64 },
    #[error("ring needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("ring is not closed")]
    NotClosed,
    #[error("ring self-intersects at segments {0} and {1}")]
    SelfIntersecting(usize, usize),
}

/// A WGS84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(Self { lat, lon })
    }

    /// Great-circle distance in meters (haversine on the mean sphere).
    pub fn distance_m(&self, other: &GeoPoint) -> f64 {
        let (p1, p2) = (self.lat.to_radians(), other.lat.to_radians());
        let dp = p2 - p1;
        let dl = (other.lon - self.lon).to_radians();
        let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * MEAN_EARTH_RADIUS_M * a.sqrt().asin()
    }
}

/// Axis-aligned WGS84 box. Boxes crossing the antimeridian are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl BoundingBox {
    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Result<Self, GeoError> {
        GeoPoint::new(south, west)?;
        GeoPoint::new(north, east)?;
        if south >= north {
            return Err(GeoError::InvertedLatitude { south, north });
        }
        if west >= east {
            return Err(GeoError::InvertedLongitude { west, east });
        }
        Ok(Self {
            south,
            west,
            north,
            east,
        })
    }

    /// Box around `center` extending `radius_m` in each cardinal direction.
    pub fn around(center: GeoPoint, radius_m: f64) -> Result<Self, GeoError> {
        let dlat = (radius_m / MEAN_EARTH_RADIUS_M).to_degrees();
        let dlon = dlat / center.lat.to_radians().cos().max(1e-9);
        Self::new(
            (center.lat - dlat).max(-90.0),
            (center.lon - dlon).max(-180.0),
            (center.lat + dlat).min(90.0),
            (center.lon + dlon).min(180.0),
        )
    }

    /// Smallest box containing every point. Fails for fewer than two distinct
    /// coordinates per axis.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Result<Self, GeoError> {
        let (mut s, mut w, mut n, mut e) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            s = s.min(p.lat);
            n = n.max(p.lat);
            w = w.min(p.lon);
            e = e.max(p.lon);
        }
        Self::new(s, w, n, e)
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.lat >= self.south && p.lat <= self.north && p.lon >= self.west && p.lon <= self.east
    }

    pub fn contains_strictly(&self, p: &GeoPoint) -> bool {
        p.lat > self.south && p.lat < self.north && p.lon > self.west && p.lon < self.east
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.south <= other.north && other.south <= self.north && self.west <= other.east && other.west <= self.east
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: 0.5 * (self.south + self.north),
            lon: 0.5 * (self.west + self.east),
        }
    }

    /// Counter-clockwise closed ring of the four corners.
    pub fn ring(&self) -> Vec<GeoPoint> {
        vec![
            GeoPoint { lat: self.south, lon: self.west },
            GeoPoint { lat: self.south, lon: self.east },
            GeoPoint { lat: self.north, lon: self.east },
            GeoPoint { lat: self.north, lon: self.west },
            GeoPoint { lat: self.south, lon: self.west },
        ]
    }

    /// Approximate surface area on the mean sphere (km²).
    pub fn approx_area_km2(&self) -> f64 {
        let r = MEAN_EARTH_RADIUS_M / 1000.0;
        r * r * (self.east - self.west).to_radians() * (self.north.to_radians().sin() - self.south.to_radians().sin()).abs()
    }

    /// Splits the box into a regular grid whose cells are each at most
    /// `max_km2`. Returns the box itself when it already fits.
    pub fn split_to_max_area(&self, max_km2: f64) -> Vec<BoundingBox> {
        let area = self.approx_area_km2();
        if area <= max_km2 || max_km2 <= 0.0 {
            return vec![*self];
        }
        let per_axis = (area / max_km2).sqrt().ceil() as usize;
        let dlat = (self.north - self.south) / per_axis as f64;
        let dlon = (self.east - self.west) / per_axis as f64;
        let mut cells = Vec::with_capacity(per_axis * per_axis);
        for i in 0..per_axis {
            for j in 0..per_axis {
                let south = self.south + dlat * i as f64;
                let north = if i + 1 == per_axis { self.north } else { south + dlat };
                let west = self.west + dlon * j as f64;
                let east = if j + 1 == per_axis { self.east } else { west + dlon };
                cells.push(BoundingBox { south, west, north, east });
            }
        }
        cells
    }
}

/// Checks that a ring has at least four points, is closed and does not
/// self-intersect.
pub fn validate_ring(ring: &[GeoPoint]) -> Result<(), GeoError> {
    if ring.len() < 4 {
        return Err(GeoError::TooFewPoints(ring.len()));
    }
    if ring.first() != ring.last() {
        return Err(GeoError::NotClosed);
    }
    let pts: Vec<[f64; 2]> = ring.iter().map(|p| [p.lon, p.lat]).collect();
    if let Some((i, j)) = first_self_intersection(&pts) {
        return Err(GeoError::SelfIntersecting(i, j));
    }
    Ok(())
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, collinear overlaps included.
pub fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Index pair of the first two non-adjacent edges of a closed ring that touch,
/// or `None` for a simple ring. Consecutive duplicate vertices are ignored.
pub fn first_self_intersection(closed: &[[f64; 2]]) -> Option<(usize, usize)> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(closed.len());
    for p in closed {
        if pts.last() != Some(p) {
            pts.push(*p);
        }
    }
    let n = pts.len().saturating_sub(1);
    if n < 3 {
        return None;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a, b, c, d) = (pts[i], pts[i + 1], pts[j], pts[j + 1]);
            if adjacent {
                // Adjacent edges share one vertex; they only conflict when
                // they fold back onto each other.
                let shared = if j == i + 1 { b } else { a };
                let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                if orient(p, shared, q) == 0.0 && (p[0] - shared[0]) * (q[0] - shared[0]) + (p[1] - shared[1]) * (q[1] - shared[1]) > 0.0 {
                    return Some((i, j));
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Even-odd point-in-ring test on `[x, y]` coordinates.
pub fn point_in_ring_xy(ring: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (ring[i][0], ring[i][1]);
        let (xj, yj) = (ring[j][0], ring[j][1]);
        if (yi > p[1]) != (yj > p[1]) && p[0] < (xj - xi) * (p[1] - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn point_in_ring(ring: &[GeoPoint], p: &GeoPoint) -> bool {
    let xy: Vec<[f64; 2]> = ring.iter().map(|q| [q.lon, q.lat]).collect();
    point_in_ring_xy(&xy, [p.lon, p.lat])
}

/// Signed shoelace area of a closed `[x, y]` ring (positive = counter-clockwise).
pub fn signed_area_xy(ring: &[[f64; 2]]) -> f64 {
    ring.windows(2)
        .map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1])
        .sum::<f64>()
        * 0.5
}

/// Area-weighted centroid of a closed `[x, y]` ring; falls back to the vertex
/// mean for zero-area rings.
pub fn centroid_xy(ring: &[[f64; 2]]) -> [f64; 2] {
    // Shift to the first vertex for numerical stability.
    let o = ring[0];
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    for w in ring.windows(2) {
        let (x0, y0) = (w[0][0] - o[0], w[0][1] - o[1]);
        let (x1, y1) = (w[1][0] - o[0], w[1][1] - o[1]);
        let cross = x0 * y1 - x1 * y0;
        a2 += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    if a2.abs() < f64::EPSILON * 1e-6 {
        let n = ring.len().saturating_sub(1).max(1);
        let sx: f64 = ring.iter().take(n).map(|p| p[0]).sum();
        let sy: f64 = ring.iter().take(n).map(|p| p[1]).sum();
        return [sx / n as f64, sy / n as f64];
    }
    [o[0] + cx / (3.0 * a2), o[1] + cy / (3.0 * a2)]
}

/// True when the ring and the box share any point.
pub fn ring_intersects_bbox(ring: &[GeoPoint], bbox: &BoundingBox) -> bool {
    if ring.iter().any(|p| bbox.contains(p)) {
        return true;
    }
    let Ok(rb) = BoundingBox::enclosing(ring) else {
        return false;
    };
    if !rb.intersects(bbox) {
        return false;
    }
    let corners = bbox.ring();
    if corners.iter().take(4).any(|c| point_in_ring(ring, c)) {
        return true;
    }
    let edges: Vec<[f64; 2]> = corners.iter().map(|p| [p.lon, p.lat]).collect();
    ring.windows(2).any(|w| {
        let (a, b) = ([w[0].lon, w[0].lat], [w[1].lon, w[1].lat]);
        edges.windows(2).any(|e| segments_intersect(a, b, e[0], e[1]))
    })
}

/// Minimum distance in meters from `p` to the ring's boundary, using a local
/// equirectangular projection around `p`.
pub fn distance_to_ring_m(ring: &[GeoPoint], p: &GeoPoint) -> f64 {
    let k = MEAN_EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let coslat = p.lat.to_radians().cos();
    let local = |q: &GeoPoint| [(q.lon - p.lon) * k * coslat, (q.lat - p.lat) * k];
    ring.windows(2)
        .map(|w| {
            let (a, b) = (local(&w[0]), local(&w[1]));
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 { (-(a[0] * dx + a[1] * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let (x, y) = (a[0] + t * dx, a[1] + t * dy);
            (x * x + y * y).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

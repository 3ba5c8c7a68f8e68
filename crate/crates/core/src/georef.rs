//! Pixel ↔ WGS84 conversion by linear interpolation between the image's
//! anchor points, and geodesic polygon areas.
//!
//! With anchors at the centres of pixel `(0, 0)` (north-west) and
//! `(W−1, H−1)` (south-east):
//!
//! ```text
//! lat = lat_nw + y / (H − 1) · (lat_se − lat_nw)
//! lon = lon_nw + x / (W − 1) · (lon_se − lon_nw)
//! ```

use geographiclib_rs::{Geodesic, PolygonArea, Winding};
use thiserror::Error;

use crate::detection::DetectionSet;
use crate::geo::{self, GeoError, GeoPoint};
use crate::imagery::AnchoredImage;

/// Rings below this area are treated as degenerate slivers (m²).
pub const MIN_PANEL_AREA_M2: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeorefError {
    #[error("pixel ({x}, {y}) outside {width}x{height} image")]
    PixelOutOfBounds { x: f64, y: f64, width: u32, height: u32 },
    #[error("point ({lat}, {lon}) outside the image extent")]
    OutsideExtent { lat: f64, lon: f64 },
    #[error("detection set is {got_w}x{got_h} but the image is {want_w}x{want_h}")]
    DimensionMismatch { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("image must be at least 2x2 pixels")]
    ImageTooSmall,
    #[error(transparent)]
    Ring(#[from] GeoError),
}

/// The linear pixel ↔ geo map of one anchored image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelTransform {
    pub width: u32,
    pub height: u32,
    pub nw: GeoPoint,
    pub se: GeoPoint,
}

impl PixelTransform {
    pub fn new(width: u32, height: u32, nw: GeoPoint, se: GeoPoint) -> Result<Self, GeorefError> {
        if width < 2 || height < 2 {
            return Err(GeorefError::ImageTooSmall);
        }
        Ok(Self { width, height, nw, se })
    }

    /// Transform of an image built by the imagery module, which is never
    /// smaller than 2×2.
    pub fn from_image(img: &AnchoredImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            nw: img.anchor_nw,
            se: img.anchor_se,
        }
    }

    fn span_x(&self) -> f64 {
        f64::from(self.width - 1)
    }

    fn span_y(&self) -> f64 {
        f64::from(self.height - 1)
    }

    /// Evaluates the interpolation for any real pixel coordinate.
    /// Weighted so that the anchors come back exactly and the centre pixel
    /// lands on the coordinate means.
    pub fn pixel_to_geo_unchecked(&self, x: f64, y: f64) -> GeoPoint {
        let (tx, ty) = (x / self.span_x(), y / self.span_y());
        GeoPoint {
            lat: self.nw.lat * (1.0 - ty) + self.se.lat * ty,
            lon: self.nw.lon * (1.0 - tx) + self.se.lon * tx,
        }
    }

    /// Algebraic inverse of [`Self::pixel_to_geo_unchecked`].
    pub fn geo_to_pixel_unchecked(&self, g: &GeoPoint) -> [f64; 2] {
        [
            (g.lon - self.nw.lon) / (self.se.lon - self.nw.lon) * self.span_x(),
            (g.lat - self.nw.lat) / (self.se.lat - self.nw.lat) * self.span_y(),
        ]
    }

    pub fn pixel_to_geo(&self, x: f64, y: f64) -> Result<GeoPoint, GeorefError> {
        let inside = x >= 0.0 && y >= 0.0 && x < f64::from(self.width) && y < f64::from(self.height);
        if !inside {
            return Err(GeorefError::PixelOutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.pixel_to_geo_unchecked(x, y))
    }

    /// Accepts points covered by the image, i.e. up to half a pixel beyond
    /// the anchors.
    pub fn geo_to_pixel(&self, g: &GeoPoint) -> Result<[f64; 2], GeorefError> {
        let p = self.geo_to_pixel_unchecked(g);
        let inside = p[0] >= -0.5 && p[1] >= -0.5 && p[0] <= self.span_x() + 0.5 && p[1] <= self.span_y() + 0.5;
        if !inside {
            return Err(GeorefError::OutsideExtent { lat: g.lat, lon: g.lon });
        }
        Ok(p)
    }
}

pub fn pixel_to_geo(p: [f64; 2], img: &AnchoredImage) -> Result<GeoPoint, GeorefError> {
    PixelTransform::from_image(img).pixel_to_geo(p[0], p[1])
}

pub fn geo_to_pixel(g: &GeoPoint, img: &AnchoredImage) -> Result<[f64; 2], GeorefError> {
    PixelTransform::from_image(img).geo_to_pixel(g)
}

/// Unsigned area of a closed simple ring on the WGS84 ellipsoid (m²).
pub fn geodesic_area(ring: &[GeoPoint]) -> Result<f64, GeorefError> {
    geo::validate_ring(ring)?;
    Ok(ellipsoidal_area(ring))
}

fn ellipsoidal_area(ring: &[GeoPoint]) -> f64 {
    let wgs84 = Geodesic::wgs84();
    let mut poly = PolygonArea::new(&wgs84, Winding::CounterClockwise);
    for p in &ring[..ring.len() - 1] {
        poly.add_point(p.lat, p.lon);
    }
    let (_, area, _) = poly.compute(true);
    area.abs()
}

/// A closed WGS84 ring with its geodesic area.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPolygon {
    pub ring: Vec<GeoPoint>,
    pub area_m2: f64,
}

impl GeoPolygon {
    pub fn new(ring: Vec<GeoPoint>) -> Result<Self, GeorefError> {
        let area_m2 = geodesic_area(&ring)?;
        Ok(Self { ring, area_m2 })
    }
}

/// A detection that survived georeferencing.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoDetection {
    pub index: usize,
    pub confidence: f64,
    pub polygon: GeoPolygon,
}

/// A detection dropped because its mapped ring is degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedDetection {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Georeferenced {
    pub panels: Vec<GeoDetection>,
    pub dropped: Vec<DroppedDetection>,
}

/// Maps every detection's vertices into WGS84 and computes areas.
pub fn georeference_detections(ds: &DetectionSet, img: &AnchoredImage) -> Result<Georeferenced, GeorefError> {
    if ds.image_width != img.width || ds.image_height != img.height {
        return Err(GeorefError::DimensionMismatch {
            got_w: ds.image_width,
            got_h: ds.image_height,
            want_w: img.width,
            want_h: img.height,
        });
    }
    let tf = PixelTransform::new(img.width, img.height, img.anchor_nw, img.anchor_se)?;
    let mut out = Georeferenced::default();
    for (index, d) in ds.detections.iter().enumerate() {
        let ring: Vec<GeoPoint> = d.region.vertices().iter().map(|p| tf.pixel_to_geo_unchecked(p[0], p[1])).collect();
        match GeoPolygon::new(ring) {
            Ok(polygon) if polygon.area_m2 >= MIN_PANEL_AREA_M2 => out.panels.push(GeoDetection {
                index,
                confidence: d.confidence,
                polygon,
            }),
            Ok(polygon) => {
                log::warn!("detection {index} dropped: area {:.4} m² below {MIN_PANEL_AREA_M2}", polygon.area_m2);
                out.dropped.push(DroppedDetection {
                    index,
                    reason: format!("area {:.4} m² below {MIN_PANEL_AREA_M2} m²", polygon.area_m2),
                });
            }
            Err(e) => {
                log::warn!("detection {index} dropped: {e}");
                out.dropped.push(DroppedDetection { index, reason: e.to_string() });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{Detection, PixelPolygon};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn img(w: u32, h: u32, nw: (f64, f64), se: (f64, f64)) -> AnchoredImage {
        AnchoredImage {
            width: w,
            height: h,
            pixels: vec![0; (w * h * 3) as usize],
            anchor_nw: GeoPoint { lat: nw.0, lon: nw.1 },
            anchor_se: GeoPoint { lat: se.0, lon: se.1 },
            building_id: "b".into(),
        }
    }

    fn thousand() -> AnchoredImage {
        img(1001, 1001, (47.0, 8.0), (46.99, 8.01))
    }

    fn square(lat: f64, lon: f64, d: f64) -> Vec<GeoPoint> {
        [(lat, lon), (lat, lon + d), (lat + d, lon + d), (lat + d, lon), (lat, lon)]
            .iter()
            .map(|&(lat, lon)| GeoPoint { lat, lon })
            .collect()
    }

    #[test]
    fn anchors_are_endpoints() {
        let im = thousand();
        assert_eq!(pixel_to_geo([0.0, 0.0], &im).unwrap(), im.anchor_nw);
        assert_eq!(pixel_to_geo([1000.0, 1000.0], &im).unwrap(), im.anchor_se);
        let p = geo_to_pixel(&im.anchor_se, &im).unwrap();
        assert_relative_eq!(p[0], 1000.0, epsilon = 1e-9);
        assert_relative_eq!(p[1], 1000.0, epsilon = 1e-9);
    }

    #[test]
    fn hand_evaluated_points() {
        let im = thousand();
        let mid = pixel_to_geo([500.0, 500.0], &im).unwrap();
        assert_relative_eq!(mid.lat, 46.995, epsilon = 1e-12);
        assert_relative_eq!(mid.lon, 8.005, epsilon = 1e-12);
        let q = pixel_to_geo([250.0, 750.0], &im).unwrap();
        assert_relative_eq!(q.lat, 46.9925, epsilon = 1e-12);
        assert_relative_eq!(q.lon, 8.0025, epsilon = 1e-12);
    }

    #[test]
    fn bounds_are_enforced() {
        let im = thousand();
        assert!(pixel_to_geo([1001.0, 0.0], &im).is_err());
        assert!(pixel_to_geo([-0.1, 0.0], &im).is_err());
        assert!(geo_to_pixel(&GeoPoint { lat: 48.0, lon: 8.005 }, &im).is_err());
        let back = geo_to_pixel(&pixel_to_geo([123.0, 987.0], &im).unwrap(), &im).unwrap();
        assert!((back[0] - 123.0).abs() < 0.5 && (back[1] - 987.0).abs() < 0.5);
    }

    #[test]
    fn square_detection_maps_to_interpolated_corners() {
        let im = thousand();
        let ds = DetectionSet {
            image_width: 1001,
            image_height: 1001,
            detector_name: "t".into(),
            detections: vec![Detection {
                confidence: 0.9,
                region: PixelPolygon::new(
                    vec![[100.0, 100.0], [200.0, 100.0], [200.0, 200.0], [100.0, 200.0], [100.0, 100.0]],
                    1001,
                    1001,
                )
                .unwrap(),
            }],
        };
        let out = georeference_detections(&ds, &im).unwrap();
        assert!(out.dropped.is_empty());
        let ring = &out.panels[0].polygon.ring;
        let want = [(46.999, 8.001), (46.999, 8.002), (46.998, 8.002), (46.998, 8.001), (46.999, 8.001)];
        for (g, w) in ring.iter().zip(want) {
            assert_relative_eq!(g.lat, w.0, epsilon = 1e-12);
            assert_relative_eq!(g.lon, w.1, epsilon = 1e-12);
        }
        assert_relative_eq!(out.panels[0].polygon.area_m2, geodesic_area(ring).unwrap());
    }

    #[test]
    fn empty_set_gives_empty_list() {
        let ds = DetectionSet::empty(1001, 1001, "t");
        assert_eq!(georeference_detections(&ds, &thousand()).unwrap(), Georeferenced::default());
    }

    #[test]
    fn thin_sliver_is_dropped_with_warning() {
        // ~5 cm pixels: a 1 × 10 px sliver covers ~0.025 m².
        let im = img(1500, 1500, (47.5196, 8.5395), (47.5190, 8.5405));
        let sliver = vec![[700.0, 700.0], [701.0, 700.0], [701.0, 710.0], [700.0, 710.0], [700.0, 700.0]];
        let panel = vec![[100.0, 100.0], [140.0, 100.0], [140.0, 160.0], [100.0, 160.0], [100.0, 100.0]];
        let ds = DetectionSet {
            image_width: 1500,
            image_height: 1500,
            detector_name: "t".into(),
            detections: vec![
                Detection { confidence: 0.9, region: PixelPolygon::new(sliver, 1500, 1500).unwrap() },
                Detection { confidence: 0.8, region: PixelPolygon::new(panel, 1500, 1500).unwrap() },
            ],
        };
        let out = georeference_detections(&ds, &im).unwrap();
        assert_eq!(out.dropped.len(), 1);
        assert_eq!(out.dropped[0].index, 0);
        assert_eq!(out.panels.len(), 1);
        assert_eq!(out.panels[0].index, 1);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let ds = DetectionSet::empty(10, 10, "t");
        assert!(matches!(georeference_detections(&ds, &thousand()), Err(GeorefError::DimensionMismatch { .. })));
    }

    #[test]
    fn geodesic_area_reference_squares() {
        // Reference values from an independent ellipsoidal polygon-area
        // implementation.
        let eq = geodesic_area(&square(0.0, 0.0, 0.0001)).unwrap();
        assert_relative_eq!(eq, 123.0907207929264, max_relative = 1e-9);
        assert!((eq - 123.6).abs() / 123.6 < 0.005);
        let mid = geodesic_area(&square(47.0, 8.0, 0.0001)).unwrap();
        assert_relative_eq!(mid, 84.55201519280672, max_relative = 1e-9);
        // The ellipsoid's meridian curvature adds ~0.7% on top of the cosine.
        assert_relative_eq!(mid / eq, 47f64.to_radians().cos(), max_relative = 0.01);
    }

    #[test]
    fn degenerate_ring_is_error() {
        let r = square(0.0, 0.0, 0.0001);
        let tri = vec![r[0], r[1], r[0]];
        assert!(matches!(geodesic_area(&tri), Err(GeorefError::Ring(GeoError::TooFewPoints(3)))));
        let bow = vec![r[0], r[2], r[1], r[3], r[0]];
        assert!(matches!(geodesic_area(&bow), Err(GeorefError::Ring(GeoError::SelfIntersecting(..)))));
    }

    #[test]
    fn per_pixel_mapping_equals_vertex_mapping() {
        // Every pixel centre inside a pixel-space polygon maps into the
        // polygon formed by the mapped vertices, and every pixel outside maps
        // outside.
        let im = img(50, 50, (47.4, 8.5), (47.3995, 8.5007));
        let tf = PixelTransform::from_image(&im);
        let px = vec![[5.5, 3.2], [40.1, 8.7], [44.3, 41.9], [12.6, 30.3], [5.5, 3.2]];
        let ring: Vec<GeoPoint> = px.iter().map(|p| tf.pixel_to_geo_unchecked(p[0], p[1])).collect();
        for y in 0..50 {
            for x in 0..50 {
                let (xf, yf) = (f64::from(x), f64::from(y));
                let in_px = geo::point_in_ring_xy(&px, [xf, yf]);
                let in_geo = geo::point_in_ring(&ring, &tf.pixel_to_geo(xf, yf).unwrap());
                assert_eq!(in_px, in_geo, "pixel ({x}, {y})");
            }
        }
    }

    fn anchors() -> impl Strategy<Value = (u32, u32, f64, f64, f64, f64)> {
        (2u32..3000, 2u32..3000, -60.0..60.0f64, -170.0..170.0f64, 1e-5..0.05f64, 1e-5..0.05f64)
    }

    proptest! {
        #[test]
        fn round_trip_within_half_pixel((w, h, lat, lon, dlat, dlon) in anchors(), fx in 0.0..1.0f64, fy in 0.0..1.0f64) {
            let tf = PixelTransform::new(w, h, GeoPoint { lat, lon }, GeoPoint { lat: lat - dlat, lon: lon + dlon }).unwrap();
            let (x, y) = ((fx * f64::from(w - 1)).floor(), (fy * f64::from(h - 1)).floor());
            let back = tf.geo_to_pixel(&tf.pixel_to_geo(x, y).unwrap()).unwrap();
            prop_assert!((back[0] - x).abs() <= 0.5 && (back[1] - y).abs() <= 0.5);
        }

        #[test]
        fn corners_and_centre_are_exact(w in 2u32..3000, h in 2u32..3000, nw_lat in -80.0..80.0f64, nw_lon in -180.0..179.0f64, dlat in 1e-6..0.05f64, dlon in 1e-6..0.05f64) {
            let (nw, se) = (GeoPoint { lat: nw_lat, lon: nw_lon }, GeoPoint { lat: nw_lat - dlat, lon: nw_lon + dlon });
            let tf = PixelTransform::new(w, h, nw, se).unwrap();
            let (sx, sy) = (f64::from(w - 1), f64::from(h - 1));
            prop_assert_eq!(tf.pixel_to_geo(0.0, 0.0).unwrap(), nw);
            prop_assert_eq!(tf.pixel_to_geo(sx, sy).unwrap(), se);
            let m = tf.pixel_to_geo(sx / 2.0, sy / 2.0).unwrap();
            prop_assert_eq!(m, GeoPoint { lat: (nw.lat + se.lat) / 2.0, lon: (nw.lon + se.lon) / 2.0 });
        }

        #[test]
        fn midpoints_map_to_midpoints((w, h, lat, lon, dlat, dlon) in anchors(), a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64, d in 0.0..1.0f64) {
            let tf = PixelTransform::new(w, h, GeoPoint { lat, lon }, GeoPoint { lat: lat - dlat, lon: lon + dlon }).unwrap();
            let (sx, sy) = (f64::from(w - 1), f64::from(h - 1));
            let (p, q) = ([a * sx, b * sy], [c * sx, d * sy]);
            let m = tf.pixel_to_geo(0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])).unwrap();
            let (gp, gq) = (tf.pixel_to_geo(p[0], p[1]).unwrap(), tf.pixel_to_geo(q[0], q[1]).unwrap());
            prop_assert!((m.lat - 0.5 * (gp.lat + gq.lat)).abs() <= 1e-12);
            prop_assert!((m.lon - 0.5 * (gp.lon + gq.lon)).abs() <= 1e-12);
        }

        #[test]
        fn monotone_in_both_axes((w, h, lat, lon, dlat, dlon) in anchors(), fx in 0.0..1.0f64, fy in 0.0..1.0f64) {
            let tf = PixelTransform::new(w, h, GeoPoint { lat, lon }, GeoPoint { lat: lat - dlat, lon: lon + dlon }).unwrap();
            let (x, y) = ((fx * f64::from(w - 2)).floor(), (fy * f64::from(h - 2)).floor());
            let g = tf.pixel_to_geo(x, y).unwrap();
            prop_assert!(tf.pixel_to_geo(x, y + 1.0).unwrap().lat < g.lat);
            prop_assert!(tf.pixel_to_geo(x + 1.0, y).unwrap().lon > g.lon);
        }

        #[test]
        fn area_ignores_orientation(lat in -70.0..70.0f64, lon in -170.0..170.0f64, d in 1e-6..0.01f64, skew in 0.1..0.9f64) {
            let ring = vec![
                GeoPoint { lat, lon },
                GeoPoint { lat, lon: lon + d },
                GeoPoint { lat: lat + d * skew, lon: lon + d },
                GeoPoint { lat: lat + d, lon: lon + d * skew },
                GeoPoint { lat, lon },
            ];
            let mut rev = ring.clone();
            rev.reverse();
            let (a, b) = (geodesic_area(&ring).unwrap(), geodesic_area(&rev).unwrap());
            prop_assert!(a > 0.0);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}

//! Slippy-map tiles, anchored building images and building masks.
//!
//! Tiles follow the Web-Mercator `z/x/y` scheme. A building image is a
//! `size × size` crop of the tile mosaic centred on the footprint centroid;
//! its anchors are the WGS84 positions of the centres of the top-left and
//! bottom-right pixels.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{self, GeoPoint};
use crate::geodata::{BuildingFootprint, SourceError};
use crate::georef::PixelTransform;

/// Latitude limit of the square Web-Mercator world.
pub const MAX_MERCATOR_LAT: f64 = 85.051_128_779_806_6;
pub const MAX_ZOOM: u8 = 22;
pub const DEFAULT_TILE_SIZE: u32 = 256;
pub const DEFAULT_ZOOM: u8 = 21;
pub const DEFAULT_IMAGE_SIZE: u32 = 1500;

#[derive(Debug, Error)]
pub enum ImageryError {
    #[error("zoom {0} outside 0..={MAX_ZOOM}")]
    Zoom(u8),
    #[error("tile ({z}, {x}, {y}) outside the 2^z grid")]
    TileIndex { z: u8, x: u32, y: u32 },
    #[error("latitude {0} beyond the Web-Mercator limit of ±{MAX_MERCATOR_LAT}")]
    OutsideMercator(f64),
    #[error("tile {addr} failed after {attempts} attempts: {source}")]
    TileFetch {
        addr: TileAddress,
        attempts: u32,
        source: SourceError,
    },
    #[error("tile {addr} could not be decoded: {message}")]
    TileDecode { addr: TileAddress, message: String },
    #[error("footprint {id} spans {extent_px:.0} px, larger than the {size} px window at this zoom")]
    FootprintTooLarge { id: String, extent_px: f64, size: u32 },
    #[error("image window leaves the Web-Mercator world")]
    OutsideWorld,
    #[error("footprint {0} lies outside the image")]
    FootprintOutsideImage(String),
}

/// A tile in the `z/x/y` scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileAddress {
    pub z: u8,
    pub x: u32,
    pub y: u32,
}

impl TileAddress {
    pub fn new(z: u8, x: u32, y: u32) -> Result<Self, ImageryError> {
        if z > MAX_ZOOM {
            return Err(ImageryError::Zoom(z));
        }
        let n = 1u64 << z;
        if u64::from(x) >= n || u64::from(y) >= n {
            return Err(ImageryError::TileIndex { z, x, y });
        }
        Ok(Self { z, x, y })
    }

    /// Fills a `{z}/{x}/{y}` URL template.
    pub fn url(&self, template: &str) -> String {
        template
            .replace("{z}", &self.z.to_string())
            .replace("{x}", &self.x.to_string())
            .replace("{y}", &self.y.to_string())
    }
}

impl std::fmt::Display for TileAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.z, self.x, self.y)
    }
}

/// Fractional tile coordinates of a WGS84 point (tile units, not pixels).
pub fn tile_coords(p: &GeoPoint, z: u8) -> Result<(f64, f64), ImageryError> {
    if z > MAX_ZOOM {
        return Err(ImageryError::Zoom(z));
    }
    if p.lat.abs() > MAX_MERCATOR_LAT {
        return Err(ImageryError::OutsideMercator(p.lat));
    }
    let n = f64::from(1u32 << z);
    let x = (p.lon + 180.0) / 360.0 * n;
    let y = (1.0 - p.lat.to_radians().tan().asinh() / std::f64::consts::PI) / 2.0 * n;
    Ok((x, y))
}

/// Inverse of [`tile_coords`].
pub fn tile_coords_to_geo(x: f64, y: f64, z: u8) -> GeoPoint {
    let n = f64::from(1u32 << z);
    let lon = x / n * 360.0 - 180.0;
    let lat = (std::f64::consts::PI * (1.0 - 2.0 * y / n)).sinh().atan().to_degrees();
    GeoPoint { lat, lon }
}

fn tile_range(lo: f64, hi: f64, n: u32) -> (u32, u32) {
    let max = n - 1;
    let first = (lo.floor().max(0.0) as u32).min(max);
    // A max edge lying exactly on a tile boundary belongs to the tile before it.
    let hi_idx = if hi > lo && hi.fract() == 0.0 { hi - 1.0 } else { hi.floor() };
    let last = (hi_idx.max(0.0) as u32).min(max).max(first);
    (first, last)
}

/// Minimal tile rectangle covering the extent between the north-west and
/// south-east corners. A single point is a valid extent.
pub fn tiles_covering(nw: GeoPoint, se: GeoPoint, z: u8) -> Result<Vec<TileAddress>, ImageryError> {
    let (x0, y0) = tile_coords(&nw, z)?;
    let (x1, y1) = tile_coords(&se, z)?;
    let n = 1u32 << z;
    let (xa, xb) = tile_range(x0.min(x1), x0.max(x1), n);
    let (ya, yb) = tile_range(y0.min(y1), y0.max(y1), n);
    let mut out = Vec::with_capacity(((xb - xa + 1) * (yb - ya + 1)) as usize);
    for y in ya..=yb {
        for x in xa..=xb {
            out.push(TileAddress { z, x, y });
        }
    }
    Ok(out)
}

pub fn tiles_for_bbox(area: &crate::geo::BoundingBox, z: u8) -> Result<Vec<TileAddress>, ImageryError> {
    tiles_covering(
        GeoPoint { lat: area.north, lon: area.west },
        GeoPoint { lat: area.south, lon: area.east },
        z,
    )
}

/// Raw tile bytes from a tile server, cache or fixture directory.
pub trait TileSource: Send + Sync {
    fn tile(&self, addr: TileAddress) -> Result<Vec<u8>, SourceError>;
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ImageryConfig {
    pub zoom: u8,
    pub size: u32,
    pub tile_size: u32,
    pub retry: RetryPolicy,
    /// Concurrent tile fetches per image.
    pub fan_out: usize,
}

impl Default for ImageryConfig {
    fn default() -> Self {
        Self {
            zoom: DEFAULT_ZOOM,
            size: DEFAULT_IMAGE_SIZE,
            tile_size: DEFAULT_TILE_SIZE,
            retry: RetryPolicy::default(),
            fan_out: 8,
        }
    }
}

/// Position of a `size × size` window in global mosaic pixels at `zoom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageWindow {
    pub zoom: u8,
    pub tile_size: u32,
    pub size: u32,
    /// Global pixel column of the window's left edge.
    pub left: i64,
    /// Global pixel row of the window's top edge.
    pub top: i64,
}

impl ImageWindow {
    fn world_px(&self) -> f64 {
        f64::from(self.tile_size) * f64::from(1u32 << self.zoom)
    }

    /// WGS84 position of a global mosaic pixel coordinate.
    pub fn global_to_geo(&self, gx: f64, gy: f64) -> GeoPoint {
        let t = f64::from(self.tile_size);
        tile_coords_to_geo(gx / t, gy / t, self.zoom)
    }

    pub fn anchor_nw(&self) -> GeoPoint {
        self.global_to_geo(self.left as f64 + 0.5, self.top as f64 + 0.5)
    }

    pub fn anchor_se(&self) -> GeoPoint {
        let s = f64::from(self.size);
        self.global_to_geo(self.left as f64 + s - 0.5, self.top as f64 + s - 0.5)
    }

    pub fn tiles(&self) -> Vec<TileAddress> {
        let t = i64::from(self.tile_size);
        let s = i64::from(self.size);
        let mut out = Vec::new();
        for ty in self.top.div_euclid(t)..=(self.top + s - 1).div_euclid(t) {
            for tx in self.left.div_euclid(t)..=(self.left + s - 1).div_euclid(t) {
                out.push(TileAddress {
                    z: self.zoom,
                    x: tx as u32,
                    y: ty as u32,
                });
            }
        }
        out
    }

    /// Window centred on the footprint centroid (in Mercator pixel space).
    pub fn for_footprint(fp: &BuildingFootprint, cfg: &ImageryConfig) -> Result<Self, ImageryError> {
        if cfg.zoom > MAX_ZOOM {
            return Err(ImageryError::Zoom(cfg.zoom));
        }
        let t = f64::from(cfg.tile_size);
        let px: Vec<[f64; 2]> = fp
            .ring
            .iter()
            .map(|p| tile_coords(p, cfg.zoom).map(|(x, y)| [x * t, y * t]))
            .collect::<Result<_, _>>()?;
        let c = geo::centroid_xy(&px);
        let half = f64::from(cfg.size) / 2.0;
        let window = ImageWindow {
            zoom: cfg.zoom,
            tile_size: cfg.tile_size,
            size: cfg.size,
            left: (c[0] - half).round() as i64,
            top: (c[1] - half).round() as i64,
        };
        if window.left < 0
            || window.top < 0
            || (window.left + i64::from(cfg.size)) as f64 > window.world_px()
            || (window.top + i64::from(cfg.size)) as f64 > window.world_px()
        {
            return Err(ImageryError::OutsideWorld);
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &px {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let (l, tp) = (window.left as f64, window.top as f64);
        let s = f64::from(cfg.size);
        if x0 < l || y0 < tp || x1 > l + s || y1 > tp + s {
            return Err(ImageryError::FootprintTooLarge {
                id: fp.id.clone(),
                extent_px: (x1 - x0).max(y1 - y0),
                size: cfg.size,
            });
        }
        Ok(window)
    }
}

/// A stitched building image with its geographic anchors.
#[derive(Clone, PartialEq)]
pub struct AnchoredImage {
    pub width: u32,
    pub height: u32,
    /// Row-major 8-bit RGB.
    pub pixels: Vec<u8>,
    /// Position of the centre of pixel (0, 0).
    pub anchor_nw: GeoPoint,
    /// Position of the centre of pixel (width-1, height-1).
    pub anchor_se: GeoPoint,
    pub building_id: String,
}

impl std::fmt::Debug for AnchoredImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnchoredImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("anchor_nw", &self.anchor_nw)
            .field("anchor_se", &self.anchor_se)
            .field("building_id", &self.building_id)
            .finish_non_exhaustive()
    }
}

impl AnchoredImage {
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// PNG encoding of the pixel data.
    pub fn to_png(&self) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        image::RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("pixel buffer matches dimensions")
            .write_to(&mut out, image::ImageFormat::Png)
            .expect("in-memory PNG encoding");
        out.into_inner()
    }
}

/// Decodes a tile to RGB, compositing any alpha channel over white.
pub fn decode_tile(addr: TileAddress, bytes: &[u8], tile_size: u32) -> Result<image::RgbImage, ImageryError> {
    let img = image::load_from_memory(bytes).map_err(|e| ImageryError::TileDecode {
        addr,
        message: e.to_string(),
    })?;
    if img.width() != tile_size || img.height() != tile_size {
        return Err(ImageryError::TileDecode {
            addr,
            message: format!("expected {tile_size}x{tile_size}, got {}x{}", img.width(), img.height()),
        });
    }
    let rgba = img.to_rgba8();
    let mut rgb = image::RgbImage::new(tile_size, tile_size);
    for (dst, src) in rgb.pixels_mut().zip(rgba.pixels()) {
        let a = u32::from(src[3]);
        for c in 0..3 {
            dst[c] = ((u32::from(src[c]) * a + 255 * (255 - a) + 127) / 255) as u8;
        }
    }
    Ok(rgb)
}

/// Crops the window out of decoded tiles. Every tile in
/// [`ImageWindow::tiles`] must be present.
pub fn stitch(window: &ImageWindow, tiles: &HashMap<TileAddress, image::RgbImage>, building_id: &str) -> AnchoredImage {
    let size = window.size;
    let t = i64::from(window.tile_size);
    let mut pixels = vec![0u8; (size * size * 3) as usize];
    for row in 0..i64::from(size) {
        let gy = window.top + row;
        for col in 0..i64::from(size) {
            let gx = window.left + col;
            let addr = TileAddress {
                z: window.zoom,
                x: gx.div_euclid(t) as u32,
                y: gy.div_euclid(t) as u32,
            };
            let tile = &tiles[&addr];
            let p = tile.get_pixel(gx.rem_euclid(t) as u32, gy.rem_euclid(t) as u32);
            let i = ((row * i64::from(size) + col) * 3) as usize;
            pixels[i..i + 3].copy_from_slice(&p.0);
        }
    }
    AnchoredImage {
        width: size,
        height: size,
        pixels,
        anchor_nw: window.anchor_nw(),
        anchor_se: window.anchor_se(),
        building_id: building_id.to_string(),
    }
}

fn fetch_with_retry(source: &dyn TileSource, addr: TileAddress, retry: RetryPolicy) -> Result<Vec<u8>, ImageryError> {
    let attempts = retry.attempts.max(1);
    let mut last = None;
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(retry.base_delay * 2u32.pow(attempt - 1));
        }
        match source.tile(addr) {
            Ok(bytes) => return Ok(bytes),
            Err(e) => {
                log::debug!("tile {addr} attempt {} failed: {e}", attempt + 1);
                last = Some(e);
            }
        }
    }
    Err(ImageryError::TileFetch {
        addr,
        attempts,
        source: last.expect("at least one attempt"),
    })
}

/// Fetches and decodes tiles with at most `fan_out` requests in flight.
pub fn fetch_tiles(
    source: &dyn TileSource,
    addrs: &[TileAddress],
    cfg: &ImageryConfig,
) -> Result<HashMap<TileAddress, image::RgbImage>, ImageryError> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(TileAddress, Result<image::RgbImage, ImageryError>)>> = Mutex::new(Vec::new());
    let workers = cfg.fan_out.clamp(1, addrs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&addr) = addrs.get(i) else { break };
                let r = fetch_with_retry(source, addr, cfg.retry).and_then(|b| decode_tile(addr, &b, cfg.tile_size));
                let failed = r.is_err();
                results.lock().expect("tile results lock").push((addr, r));
                if failed {
                    // Stop handing out work; the first error wins.
                    next.store(addrs.len(), Ordering::Relaxed);
                }
            });
        }
    });
    let mut results = results.into_inner().expect("tile results lock");
    results.sort_by_key(|(a, _)| *a);
    results.into_iter().map(|(a, r)| r.map(|img| (a, img))).collect()
}

/// Fetches, stitches and anchors the image window around a building.
pub fn fetch_anchored_image(
    source: &dyn TileSource,
    fp: &BuildingFootprint,
    cfg: &ImageryConfig,
) -> Result<AnchoredImage, ImageryError> {
    let window = ImageWindow::for_footprint(fp, cfg)?;
    let tiles = fetch_tiles(source, &window.tiles(), cfg)?;
    Ok(stitch(&window, &tiles, &fp.id))
}

/// One bit per pixel, set where the pixel centre lies inside the footprint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildingMask {
    pub width: u32,
    pub height: u32,
    bits: Vec<u64>,
}

impl BuildingMask {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = (width as usize * height as usize).div_ceil(64);
        Self {
            width,
            height,
            bits: vec![0; n],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        let mut m = Self::empty(width, height);
        for y in 0..height {
            m.set_span(y, 0, width);
        }
        m
    }

    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        let i = self.index(x, y);
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, x: u32, y: u32) {
        let i = self.index(x, y);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    fn set_span(&mut self, y: u32, x0: u32, x1: u32) {
        for x in x0..x1 {
            self.set(x, y);
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }
}

/// Pixel centres `(x, y)` with integer `y` inside a closed pixel-space ring
/// (even-odd rule), as half-open column spans per row.
pub(crate) fn scanline_spans(ring: &[[f64; 2]], width: u32, height: u32) -> Vec<(u32, u32, u32)> {
    let mut spans = Vec::new();
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in ring {
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    if !ymin.is_finite() {
        return spans;
    }
    let row0 = ymin.ceil().max(0.0) as i64;
    let row1 = (ymax.floor() as i64).min(i64::from(height) - 1);
    let mut xs: Vec<f64> = Vec::new();
    for row in row0..=row1 {
        let yc = row as f64;
        xs.clear();
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            // Half-open rule: an edge counts when yc lies in [min, max).
            if (a[1] <= yc) != (b[1] <= yc) {
                xs.push(a[0] + (yc - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Pixel centres x with pair[0] <= x < pair[1].
            let x0 = pair[0].ceil().max(0.0);
            let x1 = pair[1].ceil().min(f64::from(width));
            if x1 > x0 {
                spans.push((row as u32, x0 as u32, x1 as u32));
            }
        }
    }
    spans
}

/// Rounding allowance for footprints that touch the image border.
const EDGE_SLACK_PX: f64 = 1e-6;

/// Rasterises the footprint into the image grid. A footprint too small to
/// cover any pixel centre marks the pixel nearest to its centroid, so the
/// mask is never empty.
pub fn render_building_mask(fp: &BuildingFootprint, img: &AnchoredImage) -> Result<BuildingMask, ImageryError> {
    let tf = PixelTransform::from_image(img);
    let (w, h) = (f64::from(img.width), f64::from(img.height));
    let ring: Vec<[f64; 2]> = fp.ring.iter().map(|p| tf.geo_to_pixel_unchecked(p)).collect();
    let (lo, hi_x, hi_y) = (-0.5 - EDGE_SLACK_PX, w - 0.5 + EDGE_SLACK_PX, h - 0.5 + EDGE_SLACK_PX);
    if ring.iter().any(|p| p[0] < lo || p[1] < lo || p[0] > hi_x || p[1] > hi_y) {
        return Err(ImageryError::FootprintOutsideImage(fp.id.clone()));
    }
    let mut mask = BuildingMask::empty(img.width, img.height);
    for (row, x0, x1) in scanline_spans(&ring, img.width, img.height) {
        mask.set_span(row, x0, x1);
    }
    if mask.count_ones() == 0 {
        let c = geo::centroid_xy(&ring);
        let x = c[0].round().clamp(0.0, w - 1.0) as u32;
        let y = c[1].round().clamp(0.0, h - 1.0) as u32;
        mask.set(x, y);
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::BoundingBox;

    #[test]
    fn origin_point_at_zoom_one() {
        let p = GeoPoint { lat: 0.0, lon: 0.0 };
        assert_eq!(tiles_covering(p, p, 1).unwrap(), vec![TileAddress { z: 1, x: 1, y: 1 }]);
    }

    #[test]
    fn whole_world_at_zoom_zero() {
        let world = BoundingBox::new(-MAX_MERCATOR_LAT, -180.0, MAX_MERCATOR_LAT, 180.0).unwrap();
        assert_eq!(tiles_for_bbox(&world, 0).unwrap(), vec![TileAddress { z: 0, x: 0, y: 0 }]);
    }

    #[test]
    fn bulach_centre_at_zoom_21() {
        // Closed-form tile indices evaluated independently:
        // x = floor((8.540 + 180) / 360 * 2^21)
        // y = floor((1 - ln(tan φ + sec φ) / π) / 2 * 2^21)
        let p = GeoPoint { lat: 47.519, lon: 8.540 };
        let n = 2f64.powi(21);
        let phi = 47.519f64.to_radians();
        let ex = ((8.540 + 180.0) / 360.0 * n).floor() as u32;
        let ey = ((1.0 - (phi.tan() + 1.0 / phi.cos()).ln() / std::f64::consts::PI) / 2.0 * n).floor() as u32;
        assert_eq!((ex, ey), (1_098_325, 733_168));
        assert_eq!(tiles_covering(p, p, 21).unwrap(), vec![TileAddress { z: 21, x: ex, y: ey }]);
    }

    #[test]
    fn mercator_limits_and_zoom_enforced() {
        let p = GeoPoint { lat: 86.0, lon: 0.0 };
        assert!(matches!(tiles_covering(p, p, 3), Err(ImageryError::OutsideMercator(_))));
        let q = GeoPoint { lat: 0.0, lon: 0.0 };
        assert!(matches!(tiles_covering(q, q, 23), Err(ImageryError::Zoom(23))));
        assert!(TileAddress::new(2, 4, 0).is_err());
    }

    #[test]
    fn tile_url_template() {
        let a = TileAddress::new(21, 1_098_325, 733_168).unwrap();
        assert_eq!(a.url("https://t.example/{z}/{x}/{y}.png"), "https://t.example/21/1098325/733168.png");
    }

    #[test]
    fn mask_full_and_half_cover() {
        let img = AnchoredImage {
            width: 100,
            height: 80,
            pixels: vec![0; 100 * 80 * 3],
            anchor_nw: GeoPoint { lat: 47.001, lon: 8.0 },
            anchor_se: GeoPoint { lat: 47.0, lon: 8.001 },
            building_id: "b".into(),
        };
        let tf = PixelTransform::from_image(&img);
        let ring_px = |pts: &[[f64; 2]]| -> Vec<GeoPoint> { pts.iter().map(|p| tf.pixel_to_geo_unchecked(p[0], p[1])).collect() };
        let full = BuildingFootprint::new(
            "full",
            ring_px(&[[-0.5, -0.5], [99.5, -0.5], [99.5, 79.5], [-0.5, 79.5], [-0.5, -0.5]]),
        )
        .unwrap();
        let m = render_building_mask(&full, &img).unwrap();
        assert_eq!(m.count_ones(), 100 * 80);

        let half = BuildingFootprint::new(
            "half",
            ring_px(&[[-0.5, -0.5], [49.5, -0.5], [49.5, 79.5], [-0.5, 79.5], [-0.5, -0.5]]),
        )
        .unwrap();
        let m = render_building_mask(&half, &img).unwrap();
        let expected = 100 * 80 / 2;
        assert!((m.count_ones() as i64 - expected).abs() <= 80, "{}", m.count_ones());
    }

    #[test]
    fn tiny_footprint_never_yields_empty_mask() {
        let img = AnchoredImage {
            width: 10,
            height: 10,
            pixels: vec![0; 300],
            anchor_nw: GeoPoint { lat: 1.0, lon: 0.0 },
            anchor_se: GeoPoint { lat: 0.0, lon: 1.0 },
            building_id: "b".into(),
        };
        let tf = PixelTransform::from_image(&img);
        let pts = [[3.1, 3.1], [3.3, 3.1], [3.3, 3.3], [3.1, 3.3], [3.1, 3.1]];
        let fp = BuildingFootprint::new("tiny", pts.iter().map(|p| tf.pixel_to_geo_unchecked(p[0], p[1])).collect()).unwrap();
        let m = render_building_mask(&fp, &img).unwrap();
        assert_eq!(m.count_ones(), 1);
        assert!(m.get(3, 3));
    }

    #[test]
    fn footprint_outside_image_is_error() {
        let img = AnchoredImage {
            width: 10,
            height: 10,
            pixels: vec![0; 300],
            anchor_nw: GeoPoint { lat: 1.0, lon: 0.0 },
            anchor_se: GeoPoint { lat: 0.0, lon: 1.0 },
            building_id: "b".into(),
        };
        let fp = BuildingFootprint::new(
            "far",
            vec![
                GeoPoint { lat: 5.0, lon: 5.0 },
                GeoPoint { lat: 5.0, lon: 5.1 },
                GeoPoint { lat: 5.1, lon: 5.1 },
                GeoPoint { lat: 5.0, lon: 5.0 },
            ],
        )
        .unwrap();
        assert!(matches!(render_building_mask(&fp, &img), Err(ImageryError::FootprintOutsideImage(_))));
    }
}

//! Builds the offline fixture directory used by the integration and
//! acceptance tests: three buildings, their z21 tiles, a scripted detector
//! and a cloudless weather year.
//!
//! ```text
//! cargo run -p pvscan-service --example make_fixtures -- crates/service/tests/fixtures/offline
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use pvscan_core::geo::point_in_ring_xy;
use pvscan_core::geodata::BuildingFootprint;
use pvscan_core::imagery::{tile_coords, ImageWindow, ImageryConfig, TileAddress};
use pvscan_core::pvmodel::clearsky::{synthetic_tmy, SyntheticClimate};
use pvscan_core::GeoPoint;
use serde_json::json;

const ZOOM: u8 = 21;
const TILE: u32 = 256;

const BACKGROUND: [u8; 3] = [96, 128, 80];
const ROOF: [u8; 3] = [178, 92, 70];
const PANEL: [u8; 3] = [32, 42, 92];

struct Building {
    osm_id: i64,
    center: (f64, f64),
    half: (f64, f64),
    /// Confidence and polygon offsets from the roof centre, in pixels.
    panels: Vec<(f64, Vec<[f64; 2]>)>,
    /// Absolute window pixel polygons (off the roof).
    stray: Vec<(f64, Vec<[f64; 2]>)>,
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
}

fn buildings() -> Vec<Building> {
    vec![
        Building {
            osm_id: 1001,
            center: (47.5200, 8.5400),
            half: (0.000063, 0.000133),
            panels: vec![
                (0.92, rect(-150.0, -100.0, -10.0, -40.0)),
                (0.81, vec![[20.0, -90.0], [160.0, -80.0], [150.0, 30.0], [30.0, 20.0], [20.0, -90.0]]),
                (0.40, rect(-150.0, 30.0, -50.0, 100.0)),
            ],
            stray: vec![],
        },
        Building {
            osm_id: 1002,
            center: (47.5200, 8.5410),
            half: (0.000054, 0.000106),
            panels: vec![(0.70, rect(-100.0, -50.0, 100.0, 50.0))],
            stray: vec![(0.95, rect(50.0, 50.0, 150.0, 150.0))],
        },
        Building {
            osm_id: 1003,
            center: (47.5208, 8.5400),
            half: (0.000054, 0.000080),
            panels: vec![],
            stray: vec![],
        },
    ]
}

fn footprint(b: &Building) -> BuildingFootprint {
    let (lat, lon) = b.center;
    let (dlat, dlon) = b.half;
    let ring = [(lat - dlat, lon - dlon), (lat - dlat, lon + dlon), (lat + dlat, lon + dlon), (lat + dlat, lon - dlon), (lat - dlat, lon - dlon)]
        .iter()
        .map(|&(la, lo)| GeoPoint {
            lat: (la * 1e7_f64).round() / 1e7,
            lon: (lo * 1e7_f64).round() / 1e7,
        })
        .collect();
    BuildingFootprint::new(format!("way/{}", b.osm_id), ring).expect("valid fixture footprint")
}

fn global_px(p: &GeoPoint) -> [f64; 2] {
    let (x, y) = tile_coords(p, ZOOM).expect("inside mercator");
    [x * f64::from(TILE), y * f64::from(TILE)]
}

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "offline".into()));
    std::fs::create_dir_all(out.join("geocode")).unwrap();
    let cfg = ImageryConfig::default();
    assert_eq!((cfg.zoom, cfg.tile_size), (ZOOM, TILE));

    let bs = buildings();
    let fps: Vec<BuildingFootprint> = bs.iter().map(footprint).collect();
    let mut elements = Vec::new();
    let mut scripts = serde_json::Map::new();
    let mut manifest = serde_json::Map::new();
    // Global pixel rings of everything drawn, roofs first.
    let mut roofs: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut panels: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut tiles: BTreeSet<TileAddress> = BTreeSet::new();

    for (b, fp) in bs.iter().zip(&fps) {
        elements.push(json!({
            "type": "way",
            "id": b.osm_id,
            "tags": {"building": "yes"},
            "geometry": fp.ring.iter().map(|p| json!({"lat": p.lat, "lon": p.lon})).collect::<Vec<_>>(),
        }));
        let window = ImageWindow::for_footprint(fp, &cfg).expect("window");
        let ring_px: Vec<[f64; 2]> = fp.ring.iter().map(global_px).collect();
        // Roof centre in window-local pixel coordinates (pixel centres at integers).
        let (mut cx, mut cy) = (0.0, 0.0);
        for p in &ring_px[..ring_px.len() - 1] {
            cx += p[0];
            cy += p[1];
        }
        let n = (ring_px.len() - 1) as f64;
        let cx = (cx / n - window.left as f64 - 0.5).round();
        let cy = (cy / n - window.top as f64 - 0.5).round();
        let to_global = |v: &[f64; 2]| [v[0] + window.left as f64 + 0.5, v[1] + window.top as f64 + 0.5];

        let mut detections = Vec::new();
        for (conf, poly) in &b.panels {
            let local: Vec<[f64; 2]> = poly.iter().map(|v| [cx + v[0], cy + v[1]]).collect();
            panels.push(local.iter().map(to_global).collect());
            detections.push(json!({"confidence": conf, "polygon": local}));
        }
        for (conf, poly) in &b.stray {
            panels.push(poly.iter().map(to_global).collect());
            detections.push(json!({"confidence": conf, "polygon": poly}));
        }
        scripts.insert(
            fp.id.clone(),
            json!({
                "image": {"width": cfg.size, "height": cfg.size},
                "detector": "mock-sam",
                "detections": detections,
            }),
        );
        let window_tiles = window.tiles();
        manifest.insert(
            fp.id.clone(),
            json!({
                "window": {"left": window.left, "top": window.top, "size": window.size},
                "roof_center_px": [cx, cy],
                "tiles": window_tiles.iter().map(|t| format!("{}/{}/{}", t.z, t.x, t.y)).collect::<Vec<_>>(),
            }),
        );
        tiles.extend(window_tiles);
        roofs.push(ring_px);
    }

    let pretty = |v: &serde_json::Value| serde_json::to_string_pretty(v).unwrap() + "\n";
    write(&out.join("overpass.json"), &pretty(&json!({"version": 0.6, "generator": "fixture", "elements": elements})));
    write(&out.join("detections.json"), &pretty(&serde_json::Value::Object(scripts)));
    write(&out.join("manifest.json"), &pretty(&serde_json::Value::Object(manifest)));
    write(
        &out.join("geocode/fixtureville.json"),
        &pretty(&json!([{
            "place_id": 1,
            "lat": "47.5204",
            "lon": "8.5405",
            "display_name": "Fixtureville",
            "boundingbox": ["47.5195", "47.5215", "8.5395", "8.5415"],
        }])),
    );

    let bounds = |r: &Vec<[f64; 2]>| {
        r.iter().fold([f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY], |b, p| {
            [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])]
        })
    };
    let roof_bounds: Vec<_> = roofs.iter().map(bounds).collect();
    let panel_bounds: Vec<_> = panels.iter().map(bounds).collect();
    let inside = |rings: &[Vec<[f64; 2]>], bb: &[[f64; 4]], p: [f64; 2]| {
        rings
            .iter()
            .zip(bb)
            .any(|(r, b)| p[0] >= b[0] && p[0] <= b[2] && p[1] >= b[1] && p[1] <= b[3] && point_in_ring_xy(r, p))
    };
    for t in &tiles {
        let mut img = image::RgbImage::new(TILE, TILE);
        for (px, py, pixel) in img.enumerate_pixels_mut() {
            let p = [f64::from(t.x * TILE + px) + 0.5, f64::from(t.y * TILE + py) + 0.5];
            let rgb = if inside(&panels, &panel_bounds, p) {
                PANEL
            } else if inside(&roofs, &roof_bounds, p) {
                ROOF
            } else {
                BACKGROUND
            };
            *pixel = image::Rgb(rgb);
        }
        let path = out.join(format!("tiles/{}/{}/{}.png", t.z, t.x, t.y));
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        img.save(&path).unwrap();
    }

    let site = GeoPoint { lat: 47.52, lon: 8.54 };
    let climate = SyntheticClimate::zurich();
    let tmy = synthetic_tmy(&site, 2023, &climate).expect("2023 inside the ephemeris range");
    write(&out.join("tmy.csv"), &tmy.to_pvgis_csv(site.lat, site.lon, climate.altitude_m));

    eprintln!("wrote {} tiles for {} buildings to {}", tiles.len(), fps.len(), out.display());
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap_or_else(|e| panic!("writing {}: {e}", path.display()));
}

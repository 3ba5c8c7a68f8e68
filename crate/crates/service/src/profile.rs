//! Power profiles for a site and a panel area.

use pvscan_core::geodata::geocode;
use pvscan_core::inventory::{InventoryError, StatusFilter};
use pvscan_core::pvmodel::{power_profile, scale_profile, ArrayConfig, PowerProfile};
use pvscan_core::GeoPoint;
use serde::Serialize;

use crate::pipeline::{at, ErrorKind, PipelineError, Stage};
use crate::App;

#[derive(Debug, Clone, PartialEq)]
pub enum Site {
    Point { lat: f64, lon: f64 },
    Place(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PanelArea {
    SquareMeters(f64),
    /// Total area of the accepted panels of a scan.
    FromScan(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRequest {
    /// Defaults to the centre of the scan when the area comes from one.
    pub site: Option<Site>,
    pub area: PanelArea,
    pub tilt_deg: Option<f64>,
    pub azimuth_deg: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileOutcome {
    pub site: GeoPoint,
    pub array: ArrayConfig,
    pub panel_area_m2: f64,
    #[serde(skip)]
    pub profile: PowerProfile,
}

fn invalid(msg: String) -> PipelineError {
    PipelineError::new(Stage::Queued, ErrorKind::Invalid(msg))
}

fn scan_err(e: InventoryError) -> PipelineError {
    PipelineError::new(Stage::Queued, e)
}

pub fn get_profile(app: &App, req: &ProfileRequest) -> Result<ProfileOutcome, PipelineError> {
    let p = &app.pipeline;
    let scan_inv = match &req.area {
        PanelArea::FromScan(scan) => Some(p.inventory.load_existing(scan).map_err(scan_err)?),
        PanelArea::SquareMeters(_) => None,
    };
    let site = match (&req.site, &scan_inv) {
        (Some(Site::Point { lat, lon }), _) => GeoPoint::new(*lat, *lon).map_err(|e| invalid(e.to_string()))?,
        (Some(Site::Place(name)), _) => geocode(p.map.as_ref(), name).map_err(at(Stage::Fetching))?.point,
        (None, Some(inv)) => match inv.extent() {
            Some(b) => b.center(),
            None => return Err(invalid("scan is empty; give lat/lon or place".into())),
        },
        (None, None) => return Err(invalid("a site (lat/lon or place) is required".into())),
    };
    let panel_area_m2 = match (&req.area, &scan_inv) {
        (PanelArea::SquareMeters(a), _) => {
            if !(a.is_finite() && *a >= 0.0) {
                return Err(invalid(format!("area_m2 must be a nonnegative number, got {a}")));
            }
            *a
        }
        (PanelArea::FromScan(scan), Some(inv)) => {
            let s = inv.extent().map(|b| inv.summarize(&b, StatusFilter::Accepted));
            match s {
                Some(s) if s.n_panels > 0 => s.panel_area_m2,
                _ => return Err(PipelineError::new(Stage::Queued, ErrorKind::EmptyInventory(scan.clone()))),
            }
        }
        (PanelArea::FromScan(_), None) => unreachable!("scan loaded above"),
    };
    let mut array = ArrayConfig::for_site(&site);
    if let Some(t) = req.tilt_deg {
        array.tilt_deg = t;
    }
    if let Some(a) = req.azimuth_deg {
        array.azimuth_deg = a;
    }
    array.validate().map_err(|e| PipelineError::new(Stage::Queued, e))?;
    let tmy = app.tmy.get(&site).map_err(at(Stage::Fetching))?;
    let unit = power_profile(&site, &array, &tmy).map_err(|e| PipelineError::new(Stage::Queued, e))?;
    Ok(ProfileOutcome {
        site,
        array,
        panel_area_m2,
        profile: scale_profile(&unit, panel_area_m2),
    })
}

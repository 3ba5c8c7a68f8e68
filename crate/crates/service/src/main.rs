use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use pvscan_core::inventory::{import_geojson, Clock, FixedClock, StatusFilter, SystemClock};
use pvscan_core::BoundingBox;
use pvscan_service::config::Config;
use pvscan_service::jobs::run_job;
use pvscan_service::pipeline::{ScanArea, Stage, DEFAULT_DETECT_SCAN};
use pvscan_service::profile::{get_profile, PanelArea, ProfileRequest, Site};
use pvscan_service::{api, apply_fixture_defaults, App};

/// Rooftop solar panel scans and PV power profiles.
#[derive(Parser, Debug)]
#[command(name = "pvscan", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Serve geodata, tiles, detections and weather from a recorded fixture
    /// directory instead of the network.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    tile_cache: Option<PathBuf>,
    /// PVGIS TMY CSV used for every profile.
    #[arg(long, global = true)]
    tmy_file: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Stamp records and log entries with this RFC 3339 time instead of now.
    #[arg(long, global = true, value_parser = parse_time)]
    clock: Option<DateTime<Utc>>,
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s).map(|t| t.with_timezone(&Utc)).map_err(|e| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect panels on every building in an area.
    Scan {
        /// south,west,north,east
        #[arg(long, value_parser = parse_bbox, conflicts_with = "place", required_unless_present = "place")]
        bbox: Option<BoundingBox>,
        #[arg(long)]
        place: Option<String>,
        /// Inventory scan name (default: scan-<job id>).
        #[arg(long)]
        scan: Option<String>,
    },
    /// Detect panels on the building at a point; prints GeoJSON.
    Detect {
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        #[arg(long, default_value = DEFAULT_DETECT_SCAN)]
        scan: String,
    },
    /// Hourly power profile as CSV.
    Profile {
        #[arg(long, allow_hyphen_values = true, requires = "lon")]
        lat: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "lat")]
        lon: Option<f64>,
        #[arg(long, conflicts_with_all = ["lat", "lon"])]
        place: Option<String>,
        /// Panel area; alternatively take the accepted panels of --scan.
        #[arg(long, conflicts_with = "scan", required_unless_present = "scan")]
        area_m2: Option<f64>,
        #[arg(long)]
        scan: Option<String>,
        #[arg(long)]
        tilt: Option<f64>,
        #[arg(long)]
        azimuth: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write a scan's panels as GeoJSON, or its summary as JSON.
    Export {
        #[arg(long)]
        scan: String,
        #[arg(long, default_value = "all")]
        status: StatusFilter,
        #[arg(long)]
        summary: bool,
        /// Summary area (default: the scan's extent).
        #[arg(long, value_parser = parse_bbox)]
        bbox: Option<BoundingBox>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Load panel polygons from a GeoJSON file into a scan as accepted records.
    Import {
        #[arg(long)]
        scan: String,
        file: PathBuf,
        #[arg(long, default_value = "import")]
        detector: String,
    },
    /// Apply curation decisions to a scan.
    Curate {
        #[arg(long)]
        scan: String,
        /// Decision log to replay.
        #[arg(long)]
        apply: PathBuf,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
    },
}

fn parse_bbox(s: &str) -> Result<BoundingBox, String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>()?;
    let [south, west, north, east] = v[..] else {
        return Err("expected south,west,north,east".into());
    };
    BoundingBox::new(south, west, north, east).map_err(|e| e.to_string())
}

fn load_config(g: &Global) -> anyhow::Result<Config> {
    let mut cfg = Config::load(g.config.as_deref())?;
    cfg.apply_env(|k| std::env::var(k).ok())?;
    if let Some(v) = &g.fixtures {
        cfg.fixtures = Some(v.clone());
    }
    if let Some(v) = &g.data_dir {
        cfg.data_dir = v.clone();
    }
    if let Some(v) = &g.tile_cache {
        cfg.tiles.cache_dir = Some(v.clone());
    }
    if let Some(v) = &g.tmy_file {
        cfg.tmy.file = Some(v.clone());
    }
    if let Some(v) = g.workers {
        cfg.workers = v;
    }
    if let Some(v) = g.threshold {
        cfg.detector.threshold = v;
    }
    apply_fixture_defaults(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli.global)?;
    let clock: Arc<dyn Clock> = match cli.global.clock {
        Some(t) => Arc::new(FixedClock(t)),
        None => Arc::new(SystemClock),
    };
    let app = App::from_config(&cfg, clock)?;
    let p = &app.pipeline;
    match cli.command {
        Command::Scan { bbox, place, scan } => {
            let area = match (bbox, place) {
                (Some(bbox), None) => ScanArea::Bbox { bbox },
                (None, Some(place)) => ScanArea::Place { place },
                _ => unreachable!("clap enforces exactly one"),
            };
            if let Some(s) = &scan {
                p.inventory.panels_path(s)?;
            }
            let resolved = p.resolve_area(&area)?;
            let job = app.jobs.create(area, resolved, scan, p.clock.now())?;
            eprintln!("job {} -> scan {}", job.id, job.scan);
            let job = run_job(p, &app.jobs, &job.id)?;
            emit(None, &json(&job))?;
            if job.state == Stage::Failed {
                let err = job.error.map(|e| format!("{}: {}", e.stage, e.error)).unwrap_or_default();
                bail!("scan failed at {err}");
            }
        }
        Command::Detect { lat, lon, scan } => {
            let point = pvscan_core::GeoPoint::new(lat, lon)?;
            let out = p.detect_building(point, &scan)?;
            eprintln!("building {}: {} panels", out.building.id, out.records.len());
            emit(None, &out.to_geojson())?;
        }
        Command::Profile {
            lat,
            lon,
            place,
            area_m2,
            scan,
            tilt,
            azimuth,
            output,
        } => {
            let site = match (lat, lon, place) {
                (Some(lat), Some(lon), _) => Some(Site::Point { lat, lon }),
                (_, _, Some(place)) => Some(Site::Place(place)),
                _ => None,
            };
            let area = match (area_m2, scan) {
                (Some(a), _) => PanelArea::SquareMeters(a),
                (None, Some(s)) => PanelArea::FromScan(s),
                (None, None) => unreachable!("clap requires one"),
            };
            let out = get_profile(
                &app,
                &ProfileRequest {
                    site,
                    area,
                    tilt_deg: tilt,
                    azimuth_deg: azimuth,
                },
            )?;
            eprintln!(
                "site {:.5}, {:.5}; tilt {}°, azimuth {}°; {:.2} m²; {:.1} kWh/year",
                out.site.lat,
                out.site.lon,
                out.array.tilt_deg,
                out.array.azimuth_deg,
                out.panel_area_m2,
                out.profile.energy_wh() / 1000.0
            );
            emit(output.as_deref(), &out.profile.to_csv())?;
        }
        Command::Export {
            scan,
            status,
            summary,
            bbox,
            output,
        } => {
            let inv = p.inventory.load_existing(&scan)?;
            let text = if summary {
                let area = match bbox.or_else(|| inv.extent()) {
                    Some(b) => b,
                    None => bail!("scan {scan:?} is empty; pass --bbox"),
                };
                json(&inv.summarize(&area, status))
            } else {
                inv.to_geojson(status)
            };
            emit(output.as_deref(), &text)?;
        }
        Command::Import { scan, file, detector } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let imported = import_geojson(&text, &detector, p.clock.now())?;
            let report = p.with_scan(&scan, |inv| inv.upsert_panels(imported.records().cloned()))?;
            emit(None, &json(&report))?;
        }
        Command::Curate { scan, apply } => {
            let text = std::fs::read_to_string(&apply).with_context(|| format!("reading {}", apply.display()))?;
            let report = p.apply_log(&scan, &text)?;
            emit(None, &json(&report))?;
            if !report.unknown.is_empty() {
                eprintln!("{} decisions named unknown panels", report.unknown.len());
            }
        }
        Command::Serve { listen } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(listen).await.with_context(|| format!("binding {listen}"))?;
                log::info!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, api::router(app))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
                    .map_err(|e| anyhow!(e))
            })?;
        }
    }
    Ok(())
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

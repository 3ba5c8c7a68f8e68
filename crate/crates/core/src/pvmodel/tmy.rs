//! Typical-meteorological-year input in the PVGIS CSV and JSON layouts.

use std::fmt;
use std::io::Read;

use chrono::{DateTime, Datelike, NaiveDateTime, Timelike, Utc};
use thiserror::Error;

use super::time::{hourly_timestamps, HOURS_PER_YEAR};

/// One hour of weather at the hour start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmyRecord {
    pub time: DateTime<Utc>,
    /// W/m².
    pub global_horizontal: f64,
    /// W/m².
    pub beam_normal: f64,
    /// W/m².
    pub diffuse_horizontal: f64,
    /// °C at 2 m.
    pub air_temperature: f64,
    /// m/s at 10 m.
    pub wind_speed: f64,
}

impl TmyRecord {
    fn check(&self) -> Result<(), String> {
        let irr = [
            ("G(h)", self.global_horizontal),
            ("Gb(n)", self.beam_normal),
            ("Gd(h)", self.diffuse_horizontal),
        ];
        for (name, v) in irr {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} = {v} must be a nonnegative irradiance"));
            }
        }
        if self.global_horizontal < self.diffuse_horizontal - 1.0 {
            return Err(format!(
                "G(h) = {} is below Gd(h) = {}",
                self.global_horizontal, self.diffuse_horizontal
            ));
        }
        if !(-60.0..=60.0).contains(&self.air_temperature) {
            return Err(format!("T2m = {} outside [-60, 60]", self.air_temperature));
        }
        if !(self.wind_speed >= 0.0 && self.wind_speed.is_finite()) {
            return Err(format!("WS10m = {} must be nonnegative", self.wind_speed));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Record(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Record(n) => write!(f, "record {n}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TmyError {
    #[error("cannot read TMY source: {0}")]
    Io(String),
    #[error("no `time(UTC)` header line found")]
    MissingHeader,
    #[error("column `{0}` missing")]
    MissingColumn(&'static str),
    #[error("{at}: {message}")]
    Parse { at: Location, message: String },
    #[error("{at}: {message}")]
    Invariant { at: Location, message: String },
    #[error("expected {expected} hourly rows, found {found}")]
    RowCount { found: usize, expected: usize },
    #[error("{at}: timestamp {found} does not match profile hour {expected}")]
    Misaligned { at: Location, expected: String, found: String },
    #[error("hourly timestamps are not strictly increasing at index {0}")]
    NotIncreasing(usize),
}

/// Exactly 8760 validated hourly records.
#[derive(Debug, Clone, PartialEq)]
pub struct TmySeries {
    records: Vec<TmyRecord>,
}

impl TmySeries {
    pub fn new(records: Vec<TmyRecord>) -> Result<Self, TmyError> {
        if records.len() != HOURS_PER_YEAR {
            return Err(TmyError::RowCount {
                found: records.len(),
                expected: HOURS_PER_YEAR,
            });
        }
        for (i, r) in records.iter().enumerate() {
            r.check().map_err(|message| TmyError::Invariant {
                at: Location::Record(i + 1),
                message,
            })?;
        }
        if let Some(i) = records.windows(2).position(|w| w[1].time <= w[0].time) {
            return Err(TmyError::NotIncreasing(i + 1));
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[TmyRecord] {
        &self.records
    }

    /// Applies `f` to every record; the result is validated again.
    pub fn map(&self, f: impl Fn(&TmyRecord) -> TmyRecord) -> Result<Self, TmyError> {
        Self::new(self.records.iter().map(f).collect())
    }

    /// PVGIS-style CSV with the columns this crate reads.
    pub fn to_pvgis_csv(&self, lat: f64, lon: f64, elevation_m: f64) -> String {
        let mut out = format!(
            "Latitude (decimal degrees):\t{lat:.3}\nLongitude (decimal degrees):\t{lon:.3}\nElevation (m):\t{elevation_m:.0}\nmonth,year\n"
        );
        let year = self.records[0].time.year();
        for m in 1..=12 {
            out.push_str(&format!("{m},{year}\n"));
        }
        out.push_str("time(UTC),T2m,G(h),Gb(n),Gd(h),WS10m\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.2},{:.2},{:.2},{:.2},{:.2}\n",
                r.time.format("%Y%m%d:%H%M"),
                r.air_temperature,
                r.global_horizontal,
                r.beam_normal,
                r.diffuse_horizontal,
                r.wind_speed
            ));
        }
        out.push_str("\nT2m: 2-m air temperature (degree Celsius)\nG(h): Global irradiance on the horizontal plane (W/m2)\n");
        out.push_str("Gb(n): Beam/direct irradiance on a plane always normal to sun rays (W/m2)\n");
        out.push_str("Gd(h): Diffuse irradiance on the horizontal plane (W/m2)\nWS10m: 10-m total wind speed (m/s)\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TmyFormat {
    #[default]
    PvgisCsv,
    PvgisJson,
}

const COLUMNS: [&str; 6] = ["time(UTC)", "T2m", "G(h)", "Gb(n)", "Gd(h)", "WS10m"];

struct RawRow {
    at: Location,
    time: NaiveDateTime,
    values: [f64; 5],
}

fn parse_time(s: &str) -> Result<NaiveDateTime, String> {
    NaiveDateTime::parse_from_str(s.trim(), "%Y%m%d:%H%M").map_err(|e| format!("bad timestamp {s:?}: {e}"))
}

fn csv_rows(text: &str) -> Result<Vec<RawRow>, TmyError> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .by_ref()
        .find(|(_, l)| l.trim_start().starts_with("time(UTC)"))
        .ok_or(TmyError::MissingHeader)?
        .1;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut idx = [0usize; 6];
    for (slot, col) in idx.iter_mut().zip(COLUMNS) {
        *slot = names.iter().position(|n| *n == col).ok_or(TmyError::MissingColumn(col))?;
    }
    let mut rows = Vec::with_capacity(HOURS_PER_YEAR);
    for (i, line) in lines {
        let line = line.trim();
        if !line.starts_with(|c: char| c.is_ascii_digit()) {
            break;
        }
        let at = Location::Line(i + 1);
        let fields: Vec<&str> = line.split(',').collect();
        let get = |k: usize| -> Result<&str, TmyError> {
            fields.get(idx[k]).copied().ok_or_else(|| TmyError::Parse {
                at,
                message: format!("missing `{}` field", COLUMNS[k]),
            })
        };
        let time = parse_time(get(0)?).map_err(|message| TmyError::Parse { at, message })?;
        let mut values = [0.0; 5];
        for (k, v) in values.iter_mut().enumerate() {
            let raw = get(k + 1)?;
            *v = raw.trim().parse().map_err(|_| TmyError::Parse {
                at,
                message: format!("`{}` value {raw:?} is not a number", COLUMNS[k + 1]),
            })?;
        }
        rows.push(RawRow { at, time, values });
    }
    Ok(rows)
}

fn json_rows(text: &str) -> Result<Vec<RawRow>, TmyError> {
    let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| TmyError::Parse {
        at: Location::Line(e.line()),
        message: e.to_string(),
    })?;
    let hourly = doc
        .pointer("/outputs/tmy_hourly")
        .and_then(|v| v.as_array())
        .ok_or(TmyError::MissingHeader)?;
    hourly
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let at = Location::Record(i + 1);
            let field = |k: usize| {
                rec.get(COLUMNS[k]).ok_or_else(|| TmyError::Parse {
                    at,
                    message: format!("missing `{}` field", COLUMNS[k]),
                })
            };
            let time = field(0)?
                .as_str()
                .ok_or_else(|| "timestamp is not a string".to_string())
                .and_then(parse_time)
                .map_err(|message| TmyError::Parse { at, message })?;
            let mut values = [0.0; 5];
            for (k, v) in values.iter_mut().enumerate() {
                *v = field(k + 1)?.as_f64().ok_or_else(|| TmyError::Parse {
                    at,
                    message: format!("`{}` is not a number", COLUMNS[k + 1]),
                })?;
            }
            Ok(RawRow { at, time, values })
        })
        .collect()
}

/// Reads a PVGIS TMY and maps its rows onto the hours of `year`. Source rows
/// may come from different calendar years but must follow the
/// month/day/hour sequence of a common year.
pub fn load_tmy<R: Read>(mut source: R, format: TmyFormat, year: i32) -> Result<TmySeries, TmyError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| TmyError::Io(e.to_string()))?;
    let rows = match format {
        TmyFormat::PvgisCsv => csv_rows(&text)?,
        TmyFormat::PvgisJson => json_rows(&text)?,
    };
    let hours = hourly_timestamps(year);
    let mut records = Vec::with_capacity(rows.len());
    for (row, t) in rows.iter().zip(hours.iter().chain(std::iter::repeat(&hours[HOURS_PER_YEAR - 1]))) {
        let [air_temperature, global_horizontal, beam_normal, diffuse_horizontal, wind_speed] = row.values;
        let rec = TmyRecord {
            time: *t,
            global_horizontal,
            beam_normal,
            diffuse_horizontal,
            air_temperature,
            wind_speed,
        };
        rec.check().map_err(|message| TmyError::Invariant { at: row.at, message })?;
        records.push(rec);
    }
    if rows.len() != HOURS_PER_YEAR {
        return Err(TmyError::RowCount {
            found: rows.len(),
            expected: HOURS_PER_YEAR,
        });
    }
    for (row, t) in rows.iter().zip(&hours) {
        let aligned = row.time.month() == t.month() && row.time.day() == t.day() && row.time.hour() == t.hour();
        if !aligned {
            return Err(TmyError::Misaligned {
                at: row.at,
                expected: t.format("%m-%d %H:00").to_string(),
                found: row.time.format("%m-%d %H:%M").to_string(),
            });
        }
    }
    TmySeries::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> TmySeries {
        let recs = hourly_timestamps(2023)
            .into_iter()
            .map(|t| {
                let h = f64::from(t.hour());
                let sun = (std::f64::consts::PI * (h - 6.0) / 12.0).sin().max(0.0);
                let r2 = |x: f64| (x * 100.0).round() / 100.0;
                TmyRecord {
                    time: t,
                    global_horizontal: r2(600.0 * sun),
                    beam_normal: r2(700.0 * sun),
                    diffuse_horizontal: r2(100.0 * sun),
                    air_temperature: r2(10.0 + 5.0 * sun),
                    wind_speed: 2.0,
                }
            })
            .collect();
        TmySeries::new(recs).unwrap()
    }

    #[test]
    fn csv_round_trip_through_loader() {
        let s = synthetic();
        let csv = s.to_pvgis_csv(47.37, 8.54, 408.0);
        let back = load_tmy(csv.as_bytes(), TmyFormat::PvgisCsv, 2023).unwrap();
        assert_eq!(back.records().len(), 8760);
        assert_eq!(back, s);
    }

    #[test]
    fn rows_map_onto_requested_year() {
        let csv = synthetic().to_pvgis_csv(47.37, 8.54, 408.0);
        let back = load_tmy(csv.as_bytes(), TmyFormat::PvgisCsv, 2024).unwrap();
        assert_eq!(back.records()[0].time.year(), 2024);
        assert_eq!(back.records()[1416].time.format("%m-%d %H").to_string(), "03-01 00");
    }

    #[test]
    fn truncated_file_reports_row_count() {
        let csv = synthetic().to_pvgis_csv(47.37, 8.54, 408.0);
        let cut: String = csv.lines().take(17 + 10).map(|l| format!("{l}\n")).collect();
        assert_eq!(
            load_tmy(cut.as_bytes(), TmyFormat::PvgisCsv, 2023),
            Err(TmyError::RowCount { found: 10, expected: 8760 })
        );
    }

    #[test]
    fn negative_diffuse_rejected_with_line() {
        let csv = synthetic().to_pvgis_csv(47.37, 8.54, 408.0);
        let bad = csv.replacen("20230101:0300,10.00,0.00,0.00,0.00,2.00", "20230101:0300,10.00,0.00,0.00,-1.00,2.00", 1);
        assert_ne!(bad, csv);
        match load_tmy(bad.as_bytes(), TmyFormat::PvgisCsv, 2023) {
            Err(TmyError::Invariant { at, message }) => {
                // 4 header lines, 12 month lines, the column line, then hour 3.
                assert_eq!(at, Location::Line(21));
                assert!(message.contains("Gd(h)"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unparsable_row_reports_line() {
        let csv = synthetic().to_pvgis_csv(47.37, 8.54, 408.0).replacen(",2.00\n", ",fast\n", 1);
        assert!(matches!(
            load_tmy(csv.as_bytes(), TmyFormat::PvgisCsv, 2023),
            Err(TmyError::Parse { at: Location::Line(18), .. })
        ));
    }

    #[test]
    fn missing_header_and_column() {
        assert_eq!(load_tmy(&b"nothing here\n"[..], TmyFormat::PvgisCsv, 2023), Err(TmyError::MissingHeader));
        assert_eq!(
            load_tmy(&b"time(UTC),T2m,G(h),Gb(n),WS10m\n"[..], TmyFormat::PvgisCsv, 2023),
            Err(TmyError::MissingColumn("Gd(h)"))
        );
    }

    #[test]
    fn shuffled_months_misaligned() {
        let csv = synthetic().to_pvgis_csv(47.37, 8.54, 408.0).replacen("20230101:0500", "20230102:0500", 1);
        assert!(matches!(
            load_tmy(csv.as_bytes(), TmyFormat::PvgisCsv, 2023),
            Err(TmyError::Misaligned { at: Location::Line(23), .. })
        ));
    }

    #[test]
    fn json_layout() {
        let s = synthetic();
        let hourly: Vec<serde_json::Value> = s
            .records()
            .iter()
            .map(|r| {
                serde_json::json!({
                    "time(UTC)": r.time.format("%Y%m%d:%H%M").to_string(),
                    "T2m": r.air_temperature, "G(h)": r.global_horizontal, "Gb(n)": r.beam_normal,
                    "Gd(h)": r.diffuse_horizontal, "WS10m": r.wind_speed, "RH": 50.0
                })
            })
            .collect();
        let doc = serde_json::json!({"inputs": {}, "outputs": {"tmy_hourly": hourly}}).to_string();
        assert_eq!(load_tmy(doc.as_bytes(), TmyFormat::PvgisJson, 2023).unwrap(), s);
    }
}

//! Hourly power series and its CSV form.

use chrono::{DateTime, NaiveDateTime, Utc};
use thiserror::Error;

use super::time::HOURS_PER_YEAR;

pub const CSV_HEADER: &str = "timestamp,power_w";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("profile must have {HOURS_PER_YEAR} entries, got {0}")]
    Length(usize),
    #[error("negative or non-finite power {value} at index {index}")]
    Power { index: usize, value: f64 },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// 8760 hourly `(timestamp, watts)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    entries: Vec<(DateTime<Utc>, f64)>,
}

impl PowerProfile {
    pub fn new(entries: Vec<(DateTime<Utc>, f64)>) -> Result<Self, ProfileError> {
        if entries.len() != HOURS_PER_YEAR {
            return Err(ProfileError::Length(entries.len()));
        }
        if let Some((index, &(_, value))) = entries.iter().enumerate().find(|(_, (_, p))| !(*p >= 0.0 && p.is_finite())) {
            return Err(ProfileError::Power { index, value });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(DateTime<Utc>, f64)] {
        &self.entries
    }

    pub fn powers(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    /// Annual energy in Wh.
    pub fn energy_wh(&self) -> f64 {
        self.powers().sum()
    }

    pub fn peak_w(&self) -> f64 {
        self.powers().fold(0.0, f64::max)
    }

    /// Annual energy over the energy of `nominal_w` delivered every hour.
    pub fn capacity_factor(&self, nominal_w: f64) -> f64 {
        self.energy_wh() / (nominal_w * HOURS_PER_YEAR as f64)
    }

    /// Daily energy sums in Wh, 365 values.
    pub fn daily_energy_wh(&self) -> Vec<f64> {
        self.entries.chunks(24).map(|d| d.iter().map(|e| e.1).sum()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(HOURS_PER_YEAR * 32);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (t, p) in &self.entries {
            out.push_str(&t.format("%Y-%m-%dT%H:%M:%SZ").to_string());
            out.push(',');
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ProfileError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(ProfileError::Csv {
                    line: 1,
                    message: format!("expected header `{CSV_HEADER}`"),
                })
            }
        }
        let mut entries = Vec::with_capacity(HOURS_PER_YEAR);
        for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let err = |message: String| ProfileError::Csv { line: i + 1, message };
            let (ts, p) = line.split_once(',').ok_or_else(|| err("expected two fields".into()))?;
            let t = DateTime::parse_from_rfc3339(ts)
                .map(|t| t.with_timezone(&Utc))
                .or_else(|_| NaiveDateTime::parse_from_str(ts, "%Y-%m-%dT%H:%M:%SZ").map(|n| n.and_utc()))
                .map_err(|e| err(format!("bad timestamp {ts:?}: {e}")))?;
            let p: f64 = p.trim().parse().map_err(|_| err(format!("bad power {p:?}")))?;
            entries.push((t, p));
        }
        Self::new(entries)
    }
}

/// Multiplies every hourly value by a panel area in m².
///
/// # Panics
///
/// When `panel_area_m2` is negative or not finite.
pub fn scale_profile(p: &PowerProfile, panel_area_m2: f64) -> PowerProfile {
    assert!(panel_area_m2 >= 0.0 && panel_area_m2.is_finite(), "invalid panel area {panel_area_m2}");
    PowerProfile {
        entries: p.entries.iter().map(|&(t, w)| (t, w * panel_area_m2)).collect(),
    }
}

//! The fixed 8760-hour simulation calendar.

use chrono::{DateTime, Datelike, Duration, NaiveDate, TimeZone, Utc};

pub const HOURS_PER_YEAR: usize = 8760;

/// Hour-start UTC timestamps from Jan 1 00:00 to Dec 31 23:00. February 29
/// is skipped so every year has exactly 8760 entries.
pub fn hourly_timestamps(year: i32) -> Vec<DateTime<Utc>> {
    let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year").and_hms_opt(0, 0, 0).unwrap();
    let start = Utc.from_utc_datetime(&start);
    let days = if NaiveDate::from_ymd_opt(year, 2, 29).is_some() { 366 } else { 365 };
    (0..days * 24)
        .map(|h| start + Duration::hours(h))
        .filter(|t| !(t.month() == 2 && t.day() == 29))
        .collect()
}

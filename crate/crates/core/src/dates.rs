//! Recognition of date-like strings.
//!
//! A string is a date only if one of these formats matches the whole
//! trimmed string:
//!
//! * `YYYY-MM-DD`, optionally followed by a time (`T` or space separated,
//!   RFC 3339 offsets allowed); the time is discarded
//! * `YYYY/MM/DD`
//! * `Month D, YYYY` (full or abbreviated English month name)
//! * bare `YYYY`, anchored at January 1st

use chrono::{DateTime, NaiveDate, NaiveDateTime};

const DAY_FORMATS: &[&str] = &["%Y-%m-%d", "%Y/%m/%d", "%B %d, %Y", "%b %d, %Y"];
const DATETIME_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()) {
        let year: i32 = s.parse().ok()?;
        return NaiveDate::from_ymd_opt(year, 1, 1);
    }
    // chrono's %Y also accepts signed and >4-digit years; insist on a
    // plain four-digit year
    let bytes = s.as_bytes();
    let plain_year = if bytes[0].is_ascii_digit() {
        bytes.len() >= 10 && bytes[..4].iter().all(u8::is_ascii_digit) && !bytes[4].is_ascii_digit()
    } else {
        bytes[0].is_ascii_alphabetic()
            && bytes.len() > 5
            && bytes[bytes.len() - 4..].iter().all(u8::is_ascii_digit)
            && bytes[bytes.len() - 5] == b' '
    };
    if !plain_year {
        return None;
    }
    for fmt in DAY_FORMATS {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return Some(d);
        }
    }
    if s.len() > 10 {
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Some(dt.date_naive());
        }
        for fmt in DATETIME_FORMATS {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
                return Some(dt.date());
            }
        }
    }
    None
}

pub fn is_date(text: &str) -> bool {
    parse_date(text).is_some()
}

/// Absolute difference in days.
pub fn days_between(a: NaiveDate, b: NaiveDate) -> i64 {
    (a - b).num_days().abs()
}

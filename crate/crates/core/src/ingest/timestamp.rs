//! Timestamp parsing for CSV import: decimal epoch seconds or ISO-8601.

use chrono::{DateTime, NaiveDateTime};

use crate::model::{Tick, TICKS_PER_SECOND};

/// Parses a timestamp into microseconds since the Unix epoch, rounding
/// sub-microsecond digits half-to-even.
pub fn parse_timestamp(text: &str) -> Option<Tick> {
    let text = text.trim();
    if let Some(t) = parse_decimal_seconds(text) {
        return Some(t);
    }
    let (secs, nanos) = if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        (dt.timestamp(), dt.timestamp_subsec_nanos())
    } else {
        let naive = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
            .iter()
            .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())?
            .and_utc();
        (naive.timestamp(), naive.timestamp_subsec_nanos())
    };
    // chrono caps precision at nanoseconds; leap-second nanos may exceed 1e9
    let micros = round_half_even(nanos as i64, 1000);
    secs.checked_mul(TICKS_PER_SECOND)?
        .checked_add(micros)
        .map(Tick)
}

/// `value / unit` rounded half-to-even, for `value >= 0`.
fn round_half_even(value: i64, unit: i64) -> i64 {
    let (q, r) = (value / unit, value % unit);
    match (2 * r).cmp(&unit) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

/// Exact decimal parse of `[+-]digits[.digits]`.
fn parse_decimal_seconds(text: &str) -> Option<Tick> {
    let (negative, body) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let whole: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().ok()?
    };
    let micro_digits = &frac_part[..frac_part.len().min(6)];
    let mut micros: i64 = 0;
    for (i, b) in micro_digits.bytes().enumerate() {
        micros += i64::from(b - b'0') * 10i64.pow(5 - i as u32);
    }
    let rest = frac_part.get(6..).unwrap_or("");
    // compare the discarded tail against one half
    let round_up = match rest.as_bytes().first() {
        None => false,
        Some(&d) if d > b'5' => true,
        Some(&d) if d < b'5' => false,
        Some(_) => {
            let above_half = rest.bytes().skip(1).any(|b| b != b'0');
            above_half || micros % 2 == 1
        }
    };
    let magnitude = whole
        .checked_mul(TICKS_PER_SECOND)?
        .checked_add(micros + i64::from(round_up))?;
    Some(Tick(if negative { -magnitude } else { magnitude }))
}

/// Exact decimal seconds for a tick, e.g. `1.000250` or `-0.500000`.
pub fn format_seconds(t: Tick) -> String {
    let sign = if t.0 < 0 { "-" } else { "" };
    let abs = t.0.unsigned_abs();
    let per = TICKS_PER_SECOND as u64;
    format!("{sign}{}.{:06}", abs / per, abs % per)
}

//! Rate units for limiter parameters.
//!
//! Limiter rates are carried as integer milli-units (1/1000 of a request per
//! second or per minute). The integer representation makes the requests/second
//! to requests/minute conversion between gateway flavors exact for every
//! expressible rate, so canonical forms of the same intent compare equal
//! bit-for-bit and hash identically. 0.001 req/s is the limiter resolution;
//! intents below it are rejected during validation.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Requests per second, in thousandths.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct MilliRps(pub u64);

/// Requests per minute, in thousandths.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct MilliRpm(pub u64);

impl MilliRps {
    /// Quantize a requests/second value onto the milli-rps grid.
    ///
    /// Returns `None` below the 0.001 rps resolution. Rounding is to nearest,
    /// which is monotone, so `a <= b` implies `from_rps(a) <= from_rps(b)`;
    /// ceiling comparisons done in milli-units therefore agree with the same
    /// comparisons done on the raw values.
    pub fn from_rps(rps: f64) -> Option<MilliRps> {
        if !rps.is_finite() || rps <= 0.0 {
            return None;
        }
        let milli = (rps * 1000.0).round();
        if milli < 1.0 || milli > u64::MAX as f64 {
            return None;
        }
        Some(MilliRps(milli as u64))
    }

    pub fn as_rps(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Exact unit conversion to requests/minute.
    pub fn to_rpm(self) -> MilliRpm {
        MilliRpm(self.0 * 60)
    }
}

impl MilliRpm {
    pub fn from_rpm(rpm: f64) -> Option<MilliRpm> {
        if !rpm.is_finite() || rpm <= 0.0 {
            return None;
        }
        let milli = (rpm * 1000.0).round();
        if milli < 1.0 || milli > u64::MAX as f64 {
            return None;
        }
        Some(MilliRpm(milli as u64))
    }

    pub fn as_rpm(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Convert back to requests/second. Exact when the value was produced by
    /// [`MilliRps::to_rpm`]; otherwise truncates to the grid.
    pub fn to_rps(self) -> MilliRps {
        MilliRps(self.0 / 60)
    }
}

/// Render a milli-unit value as a plain decimal ("100", "1.666").
fn fmt_milli(milli: u64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let whole = milli / 1000;
    let frac = milli % 1000;
    if frac == 0 {
        write!(f, "{whole}")
    } else {
        let s = format!("{frac:03}");
        write!(f, "{whole}.{}", s.trim_end_matches('0'))
    }
}

impl fmt::Display for MilliRps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_milli(self.0, f)
    }
}

impl fmt::Display for MilliRpm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_milli(self.0, f)
    }
}

/// Parse a decimal string with at most three fraction digits into milli-units.
///
/// The parse is exact (no float round trip), so values emitted by the
/// `Display` impls above read back to the identical integer.
pub fn parse_milli(s: &str) -> Option<u64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (whole, frac) = match s.split_once('.') {
        Some((w, f)) => (w, f),
        None => (s, ""),
    };
    if whole.is_empty() || frac.len() > 3 {
        return None;
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let whole: u64 = whole.parse().ok()?;
    let mut frac_milli: u64 = 0;
    if !frac.is_empty() {
        frac_milli = frac.parse().ok()?;
        for _ in frac.len()..3 {
            frac_milli *= 10;
        }
    }
    whole.checked_mul(1000)?.checked_add(frac_milli)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rounds_to_grid() {
        assert_eq!(MilliRps::from_rps(100.0), Some(MilliRps(100_000)));
        assert_eq!(MilliRps::from_rps(1.6664), Some(MilliRps(1_666)));
        assert_eq!(MilliRps::from_rps(1.6666), Some(MilliRps(1_667)));
        assert_eq!(MilliRps::from_rps(0.0004), None);
        assert_eq!(MilliRps::from_rps(-1.0), None);
        assert_eq!(MilliRps::from_rps(f64::NAN), None);
    }

    #[test]
    fn rpm_conversion_is_exact_both_ways() {
        for raw in [1u64, 7, 999, 1000, 123_456, 5_000_000] {
            let rps = MilliRps(raw);
            assert_eq!(rps.to_rpm().to_rps(), rps);
        }
        assert_eq!(MilliRps(100_000).to_rpm(), MilliRpm(6_000_000));
    }

    #[test]
    fn display_parse_round_trip() {
        for raw in [1u64, 999, 1000, 1500, 100_000, 1_666, 42_007] {
            let shown = MilliRps(raw).to_string();
            assert_eq!(parse_milli(&shown), Some(raw), "value {shown}");
        }
        assert_eq!(MilliRps(100_000).to_string(), "100");
        assert_eq!(MilliRps(1_666).to_string(), "1.666");
        assert_eq!(MilliRps(1_500).to_string(), "1.5");
    }

    #[test]
    fn parse_milli_rejects_garbage() {
        assert_eq!(parse_milli(""), None);
        assert_eq!(parse_milli("1.foo"), None);
        assert_eq!(parse_milli("1.2345"), None);
        assert_eq!(parse_milli(".5"), None);
        assert_eq!(parse_milli("-3"), None);
    }
}

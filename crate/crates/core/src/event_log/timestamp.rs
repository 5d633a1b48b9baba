use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum TimestampFormat {
    /// ISO-8601 / RFC 3339 with a few common variants.
    #[default]
    Auto,
    /// A chrono `strftime` pattern.
    Custom(String),
}

impl From<String> for TimestampFormat {
    fn from(s: String) -> Self {
        if s.eq_ignore_ascii_case("auto") {
            TimestampFormat::Auto
        } else {
            TimestampFormat::Custom(s)
        }
    }
}

impl From<TimestampFormat> for String {
    fn from(f: TimestampFormat) -> Self {
        match f {
            TimestampFormat::Auto => "auto".to_string(),
            TimestampFormat::Custom(s) => s,
        }
    }
}

const NAIVE_PATTERNS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y/%m/%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

const OFFSET_PATTERNS: &[&str] = &["%Y-%m-%d %H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%z"];

/// Parses timestamps to UTC. Naive timestamps are read as local time at a fixed
/// offset (UTC unless configured otherwise).
#[derive(Debug, Clone)]
pub struct TimestampParser {
    format: TimestampFormat,
    naive_offset: FixedOffset,
}

impl TimestampParser {
    pub fn new(format: TimestampFormat, naive_offset_minutes: i32) -> Option<Self> {
        Some(TimestampParser {
            format,
            naive_offset: FixedOffset::east_opt(naive_offset_minutes.checked_mul(60)?)?,
        })
    }

    pub fn utc() -> Self {
        TimestampParser::new(TimestampFormat::Auto, 0).expect("zero offset is valid")
    }

    fn naive_to_utc(&self, naive: NaiveDateTime) -> Option<DateTime<Utc>> {
        self.naive_offset
            .from_local_datetime(&naive)
            .single()
            .map(|t| t.with_timezone(&Utc))
    }

    pub fn parse(&self, raw: &str) -> Result<DateTime<Utc>, String> {
        let s = raw.trim();
        let parsed = match &self.format {
            TimestampFormat::Auto => self.parse_auto(s),
            TimestampFormat::Custom(fmt) => self.parse_custom(s, fmt),
        };
        parsed.ok_or_else(|| format!("unparseable timestamp `{s}`"))
    }

    fn parse_auto(&self, s: &str) -> Option<DateTime<Utc>> {
        if let Ok(t) = DateTime::parse_from_rfc3339(s) {
            return Some(t.with_timezone(&Utc));
        }
        for p in OFFSET_PATTERNS {
            if let Ok(t) = DateTime::parse_from_str(s, p) {
                return Some(t.with_timezone(&Utc));
            }
        }
        for p in NAIVE_PATTERNS {
            if let Ok(n) = NaiveDateTime::parse_from_str(s, p) {
                return self.naive_to_utc(n);
            }
        }
        let date = NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
        self.naive_to_utc(date.and_hms_opt(0, 0, 0)?)
    }

    fn parse_custom(&self, s: &str, fmt: &str) -> Option<DateTime<Utc>> {
        if fmt.contains("%z") || fmt.contains("%:z") || fmt.contains("%#z") {
            return DateTime::parse_from_str(s, fmt).ok().map(|t| t.with_timezone(&Utc));
        }
        if let Ok(n) = NaiveDateTime::parse_from_str(s, fmt) {
            return self.naive_to_utc(n);
        }
        let date = NaiveDate::parse_from_str(s, fmt).ok()?;
        self.naive_to_utc(date.and_hms_opt(0, 0, 0)?)
    }
}

/// Canonical text form: RFC 3339 in UTC with `Z`, fractional digits only when needed.
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

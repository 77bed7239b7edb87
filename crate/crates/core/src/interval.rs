use std::fmt;

use serde::{Deserialize, Serialize};

/// Half-open PI interval `[lo, hi)`; `hi = None` is unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi: Some(hi) }
    }

    pub const fn from(lo: f64) -> Self {
        Self { lo, hi: None }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && self.hi.is_none_or(|h| x < h)
    }

    pub fn upper(&self) -> f64 {
        self.hi.unwrap_or(f64::INFINITY)
    }

    /// Evenly spaced bins of width `step` from 0 to `last`, closed by `[last, inf)`.
    pub fn grid(step: f64, last: f64) -> Vec<Interval> {
        let n = (last / step).round() as usize;
        let mut out: Vec<_> = (0..n)
            .map(|i| Interval::new(i as f64 * step, (i + 1) as f64 * step))
            .collect();
        out.push(Interval::from(n as f64 * step));
        out
    }

    /// Parses the upper bound of a CSV row: empty, `inf` or a number.
    pub fn parse_upper(s: &str) -> Result<Option<f64>, String> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(Some)
            .map_err(|e| format!("bad interval bound '{s}': {e}"))
    }

    pub fn format_upper(&self) -> String {
        match self.hi {
            Some(h) => h.to_string(),
            None => "inf".to_string(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(h) => write!(f, "[{}, {})", self.lo, h),
            None => write!(f, "[{}, inf)", self.lo),
        }
    }
}

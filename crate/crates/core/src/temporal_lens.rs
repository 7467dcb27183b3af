//! Variable-width histogram window that keeps a constant number of
//! occurrences on screen while it sweeps back and forth across the bins.
//!
//! The window grows on its advancing edge one bin per step and then sheds
//! bins from the trailing edge for as long as the remainder still reaches
//! the target. At either end of the histogram the direction flips and the
//! mirrored move happens in the same step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::TimeKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Month,
    Weekday,
    Hour,
}

impl Granularity {
    pub fn bins(self) -> usize {
        match self {
            Granularity::Month => 12,
            Granularity::Weekday => 7,
            Granularity::Hour => 24,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Month => "month",
            Granularity::Weekday => "weekday",
            Granularity::Hour => "hour",
        }
    }

    /// Bin of `t`, or `None` when `t` lacks the needed field.
    pub fn bin_of(self, t: &TimeKey) -> Option<usize> {
        match self {
            Granularity::Month => t.month.filter(|m| (1..=12).contains(m)).map(|m| usize::from(m) - 1),
            Granularity::Weekday => t.weekday.filter(|d| *d < 7).map(usize::from),
            Granularity::Hour => t.hour.filter(|h| *h < 24).map(usize::from),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "month" => Ok(Granularity::Month),
            "weekday" => Ok(Granularity::Weekday),
            "hour" => Ok(Granularity::Hour),
            _ => Err(Error::InvalidArgument(format!(
                "unknown granularity `{s}` (expected month, weekday or hour)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalHistogram {
    /// Bin labels in order ("1".."12", "mon".."sun", "0".."23", or custom).
    pub edges: Vec<String>,
    pub counts: Vec<u64>,
    pub cumulative: Vec<u64>,
}

impl TemporalHistogram {
    pub fn from_counts(edges: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || edges.len() != counts.len() {
            return Err(Error::InvalidArgument("histogram needs one label per bin and at least one bin".into()));
        }
        let cumulative = counts
            .iter()
            .scan(0u64, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect();
        Ok(TemporalHistogram { edges, counts, cumulative })
    }

    /// Histogram with numbered labels, for ad-hoc count vectors.
    pub fn from_raw_counts(counts: Vec<u64>) -> Result<Self> {
        let edges = (0..counts.len()).map(|i| i.to_string()).collect();
        TemporalHistogram::from_counts(edges, counts)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        *self.cumulative.last().expect("non-empty histogram")
    }

    /// Occurrences in bins `lo..=hi`; 0 for an empty range.
    pub fn window_count(&self, lo: usize, hi: usize) -> u64 {
        if lo > hi {
            return 0;
        }
        self.cumulative[hi] - if lo == 0 { 0 } else { self.cumulative[lo - 1] }
    }
}

fn labels(g: Granularity) -> Vec<String> {
    match g {
        Granularity::Month => (1..=12).map(|m| m.to_string()).collect(),
        Granularity::Weekday => ["mon", "tue", "wed", "thu", "fri", "sat", "sun"].map(String::from).to_vec(),
        Granularity::Hour => (0..24).map(|h| h.to_string()).collect(),
    }
}

/// Bins every time key at the given granularity. Keys lacking the needed
/// field are an error.
pub fn make_histogram<'a>(times: impl IntoIterator<Item = &'a TimeKey>, granularity: Granularity) -> Result<TemporalHistogram> {
    let mut counts = vec![0u64; granularity.bins()];
    for (i, t) in times.into_iter().enumerate() {
        let bin = granularity.bin_of(t).ok_or_else(|| {
            Error::InvalidArgument(format!("record {i} has no {granularity} component"))
        })?;
        counts[bin] += 1;
    }
    TemporalHistogram::from_counts(labels(granularity), counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalWindow {
    pub lo: usize,
    /// Inclusive.
    pub hi: usize,
    pub direction: Direction,
    pub target: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum TargetSpec {
    /// Absolute occurrence count.
    Count(u64),
    /// Fraction of all occurrences in `[0, 1]`.
    Density(f64),
}

/// Converts the user's count or density input into an occurrence target.
pub fn resolve_target(h: &TemporalHistogram, spec: TargetSpec) -> Result<u64> {
    match spec {
        TargetSpec::Count(c) => Ok(c),
        TargetSpec::Density(d) if (0.0..=1.0).contains(&d) => Ok((d * h.total() as f64).ceil() as u64),
        TargetSpec::Density(d) => Err(Error::InvalidArgument(format!("density {d} outside [0, 1]"))),
    }
}

/// Leftmost window `[0, hi]` holding at least `min(target, total)`.
pub fn initial_window(h: &TemporalHistogram, target: u64) -> TemporalWindow {
    let need = target.min(h.total());
    let hi = h.cumulative.iter().position(|&c| c >= need).expect("last cumulative is total");
    TemporalWindow {
        lo: 0,
        hi,
        direction: Direction::Forward,
        target,
    }
}

/// Advances the window by one frame.
pub fn step(h: &TemporalHistogram, w: &TemporalWindow) -> Result<TemporalWindow> {
    let last = h.bins() - 1;
    if w.lo > w.hi || w.hi > last {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] is not valid for {} bins",
            w.lo,
            w.hi,
            h.bins()
        )));
    }
    let need = w.target.min(h.total());
    if h.window_count(w.lo, w.hi) < need {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] holds fewer than {need} occurrences",
            w.lo, w.hi
        )));
    }
    let direction = match w.direction {
        Direction::Forward if w.hi == last => Direction::Backward,
        Direction::Backward if w.lo == 0 => Direction::Forward,
        d => d,
    };
    let (mut lo, mut hi) = (w.lo, w.hi);
    match direction {
        Direction::Forward => {
            if hi < last {
                hi += 1;
            }
            while lo < hi && h.window_count(lo + 1, hi) >= need {
                lo += 1;
            }
        }
        Direction::Backward => {
            lo = lo.saturating_sub(1);
            while hi > lo && h.window_count(lo, hi - 1) >= need {
                hi -= 1;
            }
        }
    }
    Ok(TemporalWindow {
        lo,
        hi,
        direction,
        target: w.target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(c: &[u64]) -> TemporalHistogram {
        TemporalHistogram::from_raw_counts(c.to_vec()).unwrap()
    }

    fn win(lo: usize, hi: usize, direction: Direction, target: u64) -> TemporalWindow {
        TemporalWindow { lo, hi, direction, target }
    }

    #[test]
    fn month_histogram() {
        let feb = TimeKey {
            month: Some(2),
            ..Default::default()
        };
        let h = make_histogram(&[feb, feb, feb], Granularity::Month).unwrap();
        assert_eq!(h.counts[1], 3);
        assert_eq!(h.total(), 3);
        assert_eq!(h.bins(), 12);
        let empty = make_histogram(std::iter::empty(), Granularity::Hour).unwrap();
        assert_eq!(empty.counts, vec![0; 24]);
        assert_eq!(make_histogram(std::iter::empty(), Granularity::Weekday).unwrap().bins(), 7);
    }

    #[test]
    fn missing_component_is_an_error() {
        let no_hour = TimeKey {
            month: Some(1),
            ..Default::default()
        };
        assert!(make_histogram(&[no_hour], Granularity::Hour).is_err());
        assert!("fortnight".parse::<Granularity>().is_err());
    }

    #[test]
    fn cumulative_prefix_sum() {
        assert_eq!(hist(&[5, 3, 2, 4]).cumulative, vec![5, 8, 10, 14]);
    }

    #[test]
    fn resolve_targets() {
        let h = hist(&[5, 3, 2, 4]);
        assert_eq!(resolve_target(&h, TargetSpec::Density(1.0)).unwrap(), 14);
        assert_eq!(resolve_target(&h, TargetSpec::Density(0.5)).unwrap(), 7);
        assert_eq!(resolve_target(&h, TargetSpec::Density(0.3)).unwrap(), 5);
        assert_eq!(resolve_target(&h, TargetSpec::Count(6)).unwrap(), 6);
        assert!(resolve_target(&h, TargetSpec::Density(1.5)).is_err());
        assert!(resolve_target(&h, TargetSpec::Density(-0.1)).is_err());
    }

    #[test]
    fn initial_windows() {
        let h = hist(&[5, 3, 2, 4]);
        assert_eq!(initial_window(&h, 5), win(0, 0, Direction::Forward, 5));
        assert_eq!(initial_window(&h, 6), win(0, 1, Direction::Forward, 6));
        assert_eq!(initial_window(&h, 14), win(0, 3, Direction::Forward, 14));
        assert_eq!(initial_window(&h, 99), win(0, 3, Direction::Forward, 99));
        assert_eq!(initial_window(&h, 0), win(0, 0, Direction::Forward, 0));
    }

    #[test]
    fn hand_traced_sweep() {
        let h = hist(&[5, 3, 2, 4]);
        let w0 = initial_window(&h, 6);
        let w1 = step(&h, &w0).unwrap();
        assert_eq!((w1.lo, w1.hi), (0, 2));
        let w2 = step(&h, &w1).unwrap();
        assert_eq!((w2.lo, w2.hi), (2, 3));
        assert_eq!(w2.direction, Direction::Forward);
        let w3 = step(&h, &w2).unwrap();
        assert_eq!(w3.direction, Direction::Backward);
        assert_eq!((w3.lo, w3.hi), (1, 3));
        let w4 = step(&h, &w3).unwrap();
        assert_eq!((w4.lo, w4.hi, w4.direction), (0, 1, Direction::Backward));
        let w5 = step(&h, &w4).unwrap();
        assert_eq!((w5.lo, w5.hi, w5.direction), (0, 2, Direction::Forward));
    }

    #[test]
    fn single_bin_flips_in_place() {
        let h = hist(&[7]);
        let w = initial_window(&h, 3);
        let a = step(&h, &w).unwrap();
        let b = step(&h, &a).unwrap();
        assert_eq!((a.lo, a.hi, a.direction), (0, 0, Direction::Backward));
        assert_eq!((b.lo, b.hi, b.direction), (0, 0, Direction::Forward));
    }

    #[test]
    fn invalid_window_rejected() {
        let h = hist(&[1, 2]);
        assert!(step(&h, &win(1, 0, Direction::Forward, 1)).is_err());
        assert!(step(&h, &win(0, 2, Direction::Forward, 1)).is_err());
        assert!(step(&h, &win(0, 0, Direction::Forward, 3)).is_err());
    }
}

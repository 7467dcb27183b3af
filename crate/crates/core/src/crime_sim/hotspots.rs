use serde::{Deserialize, Serialize};

use crate::domain::CrimeEvent;
use crate::street_graph::StreetGraph;

/// Monthly on/off crime activity of one corner over the analysis year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeActivitySeries {
    pub node: usize,
    /// `active[m]` is true when at least one crime fell in month `m + 1`.
    pub active: [bool; 12],
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotspotParams {
    /// Minimum long-run active probability.
    pub threshold: f64,
    /// Minimum accumulated crime count.
    pub min_count: usize,
    /// Additive smoothing on transition counts (1 = Laplace).
    pub pseudo_count: f64,
}

impl Default for HotspotParams {
    fn default() -> Self {
        HotspotParams {
            threshold: 0.5,
            min_count: 5,
            pseudo_count: 1.0,
        }
    }
}

/// Two-state Markov chain fitted to one node's activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotspotResult {
    pub node: usize,
    /// P(active -> active)
    pub stay_active: f64,
    /// P(inactive -> active)
    pub become_active: f64,
    pub stationary_active: f64,
    pub is_hotspot: bool,
    pub total: usize,
}

/// Assigns crimes to their nearest corner and builds every node's series.
/// With `year` set, crimes from other years are ignored; crimes without a
/// month are counted in the total but not in the activity.
pub fn activity_series(g: &StreetGraph, crimes: &[CrimeEvent], year: Option<i32>) -> Vec<NodeActivitySeries> {
    let mut series: Vec<NodeActivitySeries> = (0..g.node_count())
        .map(|node| NodeActivitySeries {
            node,
            active: [false; 12],
            total: 0,
        })
        .collect();
    for c in crimes {
        if let (Some(want), Some(y)) = (year, c.time.year) {
            if want != y {
                continue;
            }
        }
        let s = &mut series[g.nearest_corner(c.at)];
        s.total += 1;
        if let Some(m) = c.time.month.filter(|m| (1..=12).contains(m)) {
            s.active[usize::from(m) - 1] = true;
        }
    }
    series
}

/// Long-run active probability of the chain with the given transition
/// probabilities.
pub fn stationary_active(stay_active: f64, become_active: f64) -> f64 {
    let denom = 1.0 - stay_active + become_active;
    if denom > 0.0 {
        become_active / denom
    } else {
        // absorbing active state with no way in: never reached
        0.0
    }
}

fn fit(s: &NodeActivitySeries, params: &HotspotParams) -> HotspotResult {
    let (mut from_on, mut on_on, mut from_off, mut off_on) = (0usize, 0usize, 0usize, 0usize);
    for w in s.active.windows(2) {
        if w[0] {
            from_on += 1;
            on_on += usize::from(w[1]);
        } else {
            from_off += 1;
            off_on += usize::from(w[1]);
        }
    }
    let k = params.pseudo_count;
    let smoothed = |hits: usize, trials: usize| {
        if trials == 0 && k == 0.0 {
            0.5
        } else {
            (hits as f64 + k) / (trials as f64 + 2.0 * k)
        }
    };
    let stay_active = smoothed(on_on, from_on);
    let become_active = smoothed(off_on, from_off);
    let stationary = stationary_active(stay_active, become_active);
    HotspotResult {
        node: s.node,
        stay_active,
        become_active,
        stationary_active: stationary,
        is_hotspot: stationary >= params.threshold && s.total >= params.min_count,
        total: s.total,
    }
}

pub fn detect_hotspots(series: &[NodeActivitySeries], params: &HotspotParams) -> Vec<HotspotResult> {
    series.iter().map(|s| fit(s, params)).collect()
}

//! Crime hotspot detection on per-node monthly activity, and the synthetic
//! ride-hailing trip generator labeled by hotspot proximity.

mod hotspots;
mod trips;

pub use hotspots::{activity_series, detect_hotspots, stationary_active, HotspotParams, HotspotResult, NodeActivitySeries};
pub use trips::{
    synth_trips, DayOfWeek, Period, TripLabel, TripRecord, TripSynthesis, TripSynthesisParams,
};

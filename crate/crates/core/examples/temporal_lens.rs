//! Sweeps a constant-count window back and forth over a histogram.

use urbanlens::temporal_lens::{initial_window, resolve_target, step, TargetSpec, TemporalHistogram};

fn main() -> urbanlens::Result<()> {
    let h = TemporalHistogram::from_raw_counts(vec![5, 3, 2, 4])?;
    let target = resolve_target(&h, TargetSpec::Count(6))?;
    let mut w = initial_window(&h, target);
    for frame in 0..8 {
        println!(
            "frame {frame}: bins [{}, {}] {:?}, {} occurrences",
            w.lo,
            w.hi,
            w.direction,
            h.window_count(w.lo, w.hi)
        );
        w = step(&h, &w)?;
    }
    Ok(())
}

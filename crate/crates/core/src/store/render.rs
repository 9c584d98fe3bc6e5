use serde::{Deserialize, Serialize};

use crate::model::{Interval, Tick, Track};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderBin {
    pub start: Tick,
    /// Bin width in ticks.
    pub width: i64,
    /// Ticks of the bin covered by events.
    pub covered: i64,
    pub coverage: f64,
    pub max_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderBuffer {
    pub window: Interval,
    pub bins: Vec<RenderBin>,
}

/// Downsamples a track's events into `bins` equal-width bins over `window`.
///
/// The window is clamped to `domain` (or replaced by it if they do not
/// intersect). Bin `i` starts at `window.start + floor(i * W / bins)`, so
/// widths differ by at most one tick and sum to the window length. Coverage
/// is computed from exact tick overlaps.
pub fn bin_events(track: &Track, window: Interval, bins: usize, domain: &Interval) -> RenderBuffer {
    let window = window.intersection(domain).unwrap_or(*domain);
    let n = bins.max(1);
    let (w0, len) = (window.start().0, window.len());
    let edge = |i: usize| w0 + (i as i128 * len as i128 / n as i128) as i64;

    let events = track.events();
    let mut cursor = events.partition_point(|e| e.end().0 <= w0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = (edge(i), edge(i + 1));
        let mut covered = 0;
        let mut max_score: Option<f64> = None;
        let mut j = cursor;
        while j < events.len() && events[j].start().0 < hi {
            let e = &events[j];
            let overlap = e.end().0.min(hi) - e.start().0.max(lo);
            if overlap > 0 {
                covered += overlap;
                if let Some(s) = e.score() {
                    max_score = Some(max_score.map_or(s, |m| m.max(s)));
                }
            }
            j += 1;
        }
        // events ending inside this bin cannot reach the next one
        while cursor < events.len() && events[cursor].end().0 <= hi {
            cursor += 1;
        }
        let width = hi - lo;
        out.push(RenderBin {
            start: Tick(lo),
            width,
            covered,
            coverage: if width > 0 {
                covered as f64 / width as f64
            } else {
                0.0
            },
            max_score,
        });
    }
    RenderBuffer { window, bins: out }
}

use serde::Serialize;

use super::engine::{Event, EventKind};

/// Network-level outcome of a window of simulated ticks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SimMetrics {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub delivered_bits: u64,
    /// Delivered bits per second of window.
    pub throughput_bps: f64,
    /// Dropped over generated packets; zero when nothing was generated.
    pub drop_rate: f64,
    /// Mean delivery delay in seconds; zero when nothing was delivered.
    pub mean_delay_s: f64,
}

/// Streaming tally of terminal and generation events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetricsAccumulator {
    generated: u64,
    delivered: u64,
    dropped: u64,
    delivered_bits: u64,
    delay_ticks: u64,
}

impl MetricsAccumulator {
    pub fn push(&mut self, e: &Event) {
        match e.kind {
            EventKind::Generated { .. } => self.generated += 1,
            EventKind::Delivered { .. } => {
                self.delivered += 1;
                self.delivered_bits += u64::from(e.bits);
                self.delay_ticks += e.tick - e.born_tick;
            }
            EventKind::Dropped { .. } => self.dropped += 1,
            EventKind::Decided { .. } => {}
        }
    }

    pub fn finish(&self, window_s: f64, tick_s: f64) -> SimMetrics {
        let mut m = SimMetrics {
            generated: self.generated,
            delivered: self.delivered,
            dropped: self.dropped,
            delivered_bits: self.delivered_bits,
            ..SimMetrics::default()
        };
        if window_s > 0.0 {
            m.throughput_bps = m.delivered_bits as f64 / window_s;
        }
        if m.generated > 0 {
            m.drop_rate = (m.dropped as f64 / m.generated as f64).min(1.0);
        }
        if m.delivered > 0 {
            m.mean_delay_s = self.delay_ticks as f64 * tick_s / m.delivered as f64;
        }
        m
    }
}

/// Aggregates an event log covering `window_s` seconds with tick length `tick_s`.
pub fn collect_metrics<'a>(events: impl IntoIterator<Item = &'a Event>, window_s: f64, tick_s: f64) -> SimMetrics {
    let mut acc = MetricsAccumulator::default();
    events.into_iter().for_each(|e| acc.push(e));
    acc.finish(window_s, tick_s)
}

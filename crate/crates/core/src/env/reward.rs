use crate::sim::engine::{Event, EventKind};

/// Reward for a delivered packet with end-to-end delay `delay_s`.
pub fn delivery_reward(delay_s: f64) -> f64 {
    1.0 / delay_s
}

/// Reward for a packet born at `born_s` and dropped at `dropped_s`.
pub fn drop_reward(born_s: f64, dropped_s: f64) -> f64 {
    -(dropped_s - born_s)
}

/// Reward of a terminal event; `None` for generation and decision events.
pub fn reward(event: &Event, tick_s: f64) -> Option<f64> {
    let born = event.born_tick as f64 * tick_s;
    let at = event.tick as f64 * tick_s;
    match event.kind {
        EventKind::Delivered { .. } => Some(delivery_reward(at - born)),
        EventKind::Dropped { .. } => Some(drop_reward(born, at)),
        EventKind::Generated { .. } | EventKind::Decided { .. } => None,
    }
}

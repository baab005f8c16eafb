use super::config::Gate;
use crate::model::Channel;

/// Detection timestamps of one channel, as delivered by a time tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub channel: Channel,
    /// Acquisition time (s).
    pub duration: f64,
    /// Sorted detection times in `[0, duration]` (s).
    pub timestamps: Vec<f64>,
}

impl EventStream {
    pub fn new(channel: Channel, duration: f64, timestamps: Vec<f64>) -> Self {
        EventStream {
            channel,
            duration,
            timestamps,
        }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.timestamps.len() as f64 / self.duration
    }

    pub fn is_sorted(&self) -> bool {
        self.timestamps.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Position of `t` after the preceding pulse edge, in `[0, period)`.
///
/// Pulse-synchronous events are stored as `k·period`; when rounding puts
/// such a time a few ulps below the edge it is attributed to that edge.
pub fn pulse_phase(t: f64, period: f64) -> f64 {
    let phase = t.rem_euclid(period);
    let tol = 8.0 * f64::EPSILON * t.abs().max(period);
    if period - phase <= tol {
        0.0
    } else {
        phase
    }
}

/// Start of the pulse that precedes `t`.
pub(crate) fn pulse_floor(t: f64, period: f64) -> f64 {
    (t / period).floor() * period
}

pub(crate) fn in_gate(t: f64, gate: &Gate, period: f64) -> bool {
    pulse_phase(t - gate.offset, period) < gate.width
}

/// Keeps the events whose phase relative to the pulse clock falls in
/// `[offset, offset + width)`; windows may wrap around the period.
pub fn apply_gate(stream: &EventStream, gate: &Gate, rep_period: f64) -> EventStream {
    let timestamps = stream
        .timestamps
        .iter()
        .copied()
        .filter(|&t| in_gate(t, gate, rep_period))
        .collect();
    EventStream::new(stream.channel, stream.duration, timestamps)
}

/// Non-paralyzable detector dead time applied to a sorted sequence that may
/// arrive in chunks.
#[derive(Debug, Clone)]
pub(crate) struct DeadTimeFilter {
    dead_time: f64,
    last: f64,
}

impl DeadTimeFilter {
    pub fn new(dead_time: f64) -> Self {
        DeadTimeFilter {
            dead_time,
            last: f64::NEG_INFINITY,
        }
    }

    pub fn retain(&mut self, sorted: &mut Vec<f64>) {
        if self.dead_time <= 0.0 {
            return;
        }
        let mut last = self.last;
        let dead = self.dead_time;
        sorted.retain(|&t| {
            if t - last >= dead {
                last = t;
                true
            } else {
                false
            }
        });
        self.last = last;
    }
}

pub fn apply_dead_time(stream: &EventStream, dead_time: f64) -> EventStream {
    let mut ts = stream.timestamps.clone();
    DeadTimeFilter::new(dead_time).retain(&mut ts);
    EventStream::new(stream.channel, stream.duration, ts)
}

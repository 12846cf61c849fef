use std::collections::VecDeque;

use serde::Serialize;

use crate::metrics::percentile;

/// One frame's mapping time with the rolling statistics after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyRecord {
    pub frame: u64,
    pub map_ms: f64,
    pub rolling_p50_ms: f64,
    pub rolling_p95_ms: f64,
    pub rolling_max_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LatencySummary {
    pub count: u64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

/// Rolling window of recent mapping times plus every sample for the run summary.
#[derive(Debug, Clone)]
pub struct LatencyTracker {
    window: VecDeque<f64>,
    window_len: usize,
    all: Vec<f64>,
}

impl LatencyTracker {
    pub fn new(window_len: usize) -> Self {
        Self {
            window: VecDeque::with_capacity(window_len.max(1)),
            window_len: window_len.max(1),
            all: Vec::new(),
        }
    }

    /// Negative inputs are recorded as zero.
    pub fn record(&mut self, map_ms: f64) -> LatencyRecord {
        let map_ms = map_ms.max(0.0);
        if self.window.len() == self.window_len {
            self.window.pop_front();
        }
        self.window.push_back(map_ms);
        self.all.push(map_ms);
        let (p50, p95, max) = summarize(self.window.iter().copied());
        LatencyRecord {
            frame: self.all.len() as u64 - 1,
            map_ms,
            rolling_p50_ms: p50,
            rolling_p95_ms: p95,
            rolling_max_ms: max,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.all
    }

    pub fn summary(&self) -> LatencySummary {
        if self.all.is_empty() {
            return LatencySummary::default();
        }
        let (p50_ms, p95_ms, max_ms) = summarize(self.all.iter().copied());
        LatencySummary {
            count: self.all.len() as u64,
            p50_ms,
            p95_ms,
            max_ms,
        }
    }
}

fn summarize(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    (
        percentile(&v, 0.5),
        percentile(&v, 0.95),
        v.last().copied().unwrap_or(0.0),
    )
}

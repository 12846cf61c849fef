//! Trigger events from continuous latent channels.
//!
//! Each channel runs a fast and a slow one-pole low-pass filter. An event
//! fires when `fast − slow` rises through the hysteresis threshold, unless the
//! channel is still inside its refractory period. Filters start at the first
//! sample's value, so a constant channel never fires.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnsetConfig {
    pub alpha_fast: f64,
    pub alpha_slow: f64,
    pub hysteresis: f64,
    pub refractory_s: f64,
    /// Per-channel enable mask; channels beyond its length are enabled.
    pub enabled: Vec<bool>,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            alpha_fast: 0.5,
            alpha_slow: 0.05,
            hysteresis: 0.05,
            refractory_s: 0.25,
            enabled: Vec::new(),
        }
    }
}

impl OnsetConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |a: f64| a > 0.0 && a <= 1.0;
        if !unit(self.alpha_fast) || !unit(self.alpha_slow) {
            return Err(Error::InvalidConfig(format!(
                "filter coefficients must be in (0, 1], got fast {} slow {}",
                self.alpha_fast, self.alpha_slow
            )));
        }
        if self.alpha_fast <= self.alpha_slow {
            return Err(Error::InvalidConfig(
                "alpha_fast must exceed alpha_slow".into(),
            ));
        }
        if !(self.hysteresis >= 0.0 && self.hysteresis.is_finite()) {
            return Err(Error::InvalidConfig("hysteresis must be ≥ 0".into()));
        }
        if !(self.refractory_s >= 0.0 && self.refractory_s.is_finite()) {
            return Err(Error::InvalidConfig("refractory_s must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn is_enabled(&self, channel: usize) -> bool {
        self.enabled.get(channel).copied().unwrap_or(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetEvent {
    pub channel: usize,
    pub timestamp: f64,
}

/// `y_prev + alpha · (x − y_prev)`.
pub fn lpf_step(y_prev: f64, x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must be in (0, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(x);
    }
    Ok(y_prev + alpha * (x - y_prev))
}

#[derive(Debug, Clone)]
struct ChannelState {
    fast: f64,
    slow: f64,
    above: bool,
    refractory_until: f64,
    last_t: Option<f64>,
}

impl Default for ChannelState {
    fn default() -> Self {
        Self {
            fast: 0.0,
            slow: 0.0,
            above: false,
            refractory_until: f64::NEG_INFINITY,
            last_t: None,
        }
    }
}

/// Streaming detector with independent per-channel state.
#[derive(Debug, Clone)]
pub struct OnsetDetector {
    config: OnsetConfig,
    channels: Vec<ChannelState>,
}

impl OnsetDetector {
    pub fn new(config: OnsetConfig, channel_count: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            channels: vec![ChannelState::default(); channel_count],
        })
    }

    pub fn config(&self) -> &OnsetConfig {
        &self.config
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Advances one channel by one sample.
    pub fn step(&mut self, channel: usize, value: f64, t: f64) -> Result<Option<OnsetEvent>> {
        let cfg = &self.config;
        let count = self.channels.len();
        let state = self
            .channels
            .get_mut(channel)
            .ok_or(Error::DimensionMismatch {
                context: "onset channel",
                expected: count,
                got: channel,
            })?;
        if !value.is_finite() || !t.is_finite() {
            return Err(Error::NonFinite("onset input"));
        }
        let Some(last) = state.last_t else {
            state.fast = value;
            state.slow = value;
            state.above = false;
            state.last_t = Some(t);
            return Ok(None);
        };
        if t < last {
            return Err(Error::TimeRegression { channel, t, last });
        }
        state.last_t = Some(t);
        state.fast = lpf_step(state.fast, value, cfg.alpha_fast)?;
        state.slow = lpf_step(state.slow, value, cfg.alpha_slow)?;
        let above = state.fast - state.slow > cfg.hysteresis;
        let crossed = above && !state.above;
        state.above = above;
        if crossed && t >= state.refractory_until && cfg.is_enabled(channel) {
            state.refractory_until = t + cfg.refractory_s;
            return Ok(Some(OnsetEvent {
                channel,
                timestamp: t,
            }));
        }
        Ok(None)
    }

    /// Advances every channel with one frame; events come out in channel order.
    pub fn step_frame(&mut self, t: f64, values: &[f64]) -> Result<Vec<OnsetEvent>> {
        if values.len() != self.channels.len() {
            return Err(Error::DimensionMismatch {
                context: "onset frame",
                expected: self.channels.len(),
                got: values.len(),
            });
        }
        let mut events = Vec::new();
        for (c, &v) in values.iter().enumerate() {
            if let Some(e) = self.step(c, v, t)? {
                events.push(e);
            }
        }
        Ok(events)
    }
}

/// Batch detection over `(t, values)` frames, ordered by `(t, channel)`.
pub fn detect_stream(stream: &[(f64, Vec<f64>)], config: &OnsetConfig) -> Result<Vec<OnsetEvent>> {
    let Some((_, first)) = stream.first() else {
        config.validate()?;
        return Ok(Vec::new());
    };
    let mut detector = OnsetDetector::new(config.clone(), first.len())?;
    let mut events = Vec::new();
    for (t, values) in stream {
        events.extend(detector.step_frame(*t, values)?);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lpf_cases() {
        assert_eq!(lpf_step(0.3, 0.9, 1.0).unwrap(), 0.9);
        assert_eq!(lpf_step(2.5, 2.5, 0.1).unwrap(), 2.5);
        let y = lpf_step(0.0, 1.0, 0.5).unwrap();
        assert_eq!(y, 0.5);
        assert_eq!(lpf_step(y, 1.0, 0.5).unwrap(), 0.75);
        assert!(lpf_step(0.0, 1.0, 0.0).is_err());
        assert!(lpf_step(0.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OnsetConfig::default().validate().is_ok());
        let bad = OnsetConfig {
            alpha_fast: 0.05,
            alpha_slow: 0.5,
            ..Default::default()
        };
        assert!(OnsetDetector::new(bad, 1).is_err());
    }

    #[test]
    fn constant_input_never_fires() {
        let mut d = OnsetDetector::new(OnsetConfig::default(), 2).unwrap();
        for i in 0..300 {
            let ev = d.step_frame(i as f64 / 30.0, &[0.7, 0.0]).unwrap();
            assert!(ev.is_empty());
        }
    }

    #[test]
    fn unit_step_fires_once_at_the_step() {
        let stream: Vec<(f64, Vec<f64>)> = (0..120)
            .map(|i| (i as f64 / 30.0, vec![if i >= 30 { 1.0 } else { 0.0 }]))
            .collect();
        let ev = detect_stream(&stream, &OnsetConfig::default()).unwrap();
        // fast − slow = 0.5 − 0.05 = 0.45 > 0.05 on the step sample itself
        assert_eq!(
            ev,
            vec![OnsetEvent {
                channel: 0,
                timestamp: 1.0
            }]
        );
    }

    #[test]
    fn time_regression_is_rejected() {
        let mut d = OnsetDetector::new(OnsetConfig::default(), 1).unwrap();
        d.step(0, 0.0, 1.0).unwrap();
        assert!(matches!(
            d.step(0, 0.0, 0.5),
            Err(Error::TimeRegression { channel: 0, .. })
        ));
        assert!(d.step(0, f64::NAN, 2.0).is_err());
        assert!(d.step(3, 0.0, 2.0).is_err());
    }

    #[test]
    fn disabled_channel_is_silent() {
        let cfg = OnsetConfig {
            enabled: vec![true, false],
            ..Default::default()
        };
        let stream: Vec<(f64, Vec<f64>)> = (0..60)
            .map(|i| {
                let v = if i >= 10 { 1.0 } else { 0.0 };
                (i as f64 / 30.0, vec![v, v])
            })
            .collect();
        let ev = detect_stream(&stream, &cfg).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].channel, 0);
    }

    #[test]
    fn only_the_stepping_channel_fires() {
        let stream: Vec<(f64, Vec<f64>)> = (0..90)
            .map(|i| {
                let mut v = vec![0.25; 16];
                if i >= 45 {
                    v[3] = 1.0;
                }
                (i as f64 / 30.0, v)
            })
            .collect();
        let ev = detect_stream(&stream, &OnsetConfig::default()).unwrap();
        assert!(!ev.is_empty());
        assert!(ev.iter().all(|e| e.channel == 3));
    }
}

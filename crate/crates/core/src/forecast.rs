//! Per-airport solar forecasting with additive Holt-Winters triple
//! exponential smoothing.
//!
//! Additive seasonality is used because multiplicative components break
//! down at zero nighttime irradiance. A state needs two full seasons of
//! observations before it will predict; callers fall back to a persistence
//! forecast until then.

use thiserror::Error;

use crate::scenario::ForecastParams;

#[derive(Debug, Error, PartialEq)]
pub enum ForecastError {
    #[error("state not initialized: {observed} of {needed} warm-up observations; use a persistence fallback")]
    NotWarm { observed: usize, needed: usize },
}

/// Holt-Winters smoothing state for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct HoltWinters {
    alpha: f64,
    beta: f64,
    gamma: f64,
    /// Season length L in steps.
    season: usize,
    level: f64,
    trend: f64,
    /// Seasonal components indexed by absolute slot (observation index mod L).
    seasonal: Vec<f64>,
    /// Observations consumed so far.
    count: usize,
    /// Raw warm-up buffer, dropped once initialized.
    warmup: Vec<f64>,
}

impl HoltWinters {
    pub fn new(params: &ForecastParams) -> Self {
        assert!(params.season_steps >= 2, "season length must be >= 2");
        Self {
            alpha: params.alpha,
            beta: params.beta,
            gamma: params.gamma,
            season: params.season_steps,
            level: 0.0,
            trend: 0.0,
            seasonal: Vec::new(),
            count: 0,
            warmup: Vec::new(),
        }
    }

    pub fn observation_count(&self) -> usize {
        self.count
    }

    /// Whether the first season has been consumed and the recurrences run.
    pub fn is_initialized(&self) -> bool {
        !self.seasonal.is_empty()
    }

    /// Consumes one observation.
    ///
    /// The first L observations initialize level and per-slot seasonal
    /// deviations (trend starts at zero); from then on the additive
    /// recurrences run. Predictions stay unavailable until 2L observations.
    pub fn update(&mut self, observation: f64) {
        debug_assert!(observation >= 0.0, "solar power must be nonnegative");
        if self.seasonal.is_empty() {
            self.warmup.push(observation);
            self.count += 1;
            if self.warmup.len() == self.season {
                let mean = self.warmup.iter().sum::<f64>() / self.season as f64;
                self.level = mean;
                self.trend = 0.0;
                self.seasonal = self.warmup.iter().map(|y| y - mean).collect();
                self.warmup = Vec::new();
            }
            return;
        }
        let slot = self.count % self.season;
        let s_old = self.seasonal[slot];
        let level_new =
            self.alpha * (observation - s_old) + (1.0 - self.alpha) * (self.level + self.trend);
        let trend_new = self.beta * (level_new - self.level) + (1.0 - self.beta) * self.trend;
        self.seasonal[slot] = self.gamma * (observation - level_new) + (1.0 - self.gamma) * s_old;
        self.level = level_new;
        self.trend = trend_new;
        self.count += 1;
    }

    /// Forecasts the next `horizon` steps, clamped into `[0, cap]`.
    ///
    /// `y[t + h] = level + h * trend + seasonal[(t + h) mod L]` where `t` is
    /// the index of the last observation consumed.
    pub fn predict(&self, horizon: usize, cap: f64) -> Result<Vec<f64>, ForecastError> {
        let needed = 2 * self.season;
        if self.count < needed {
            return Err(ForecastError::NotWarm { observed: self.count, needed });
        }
        let t = self.count - 1;
        Ok((1..=horizon)
            .map(|h| {
                let raw =
                    self.level + h as f64 * self.trend + self.seasonal[(t + h) % self.season];
                raw.clamp(0.0, cap)
            })
            .collect())
    }
}

/// Persistence fallback: repeat the current measurement over the horizon.
pub fn persistence_forecast(current: f64, horizon: usize, cap: f64) -> Vec<f64> {
    vec![current.clamp(0.0, cap); horizon]
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniformly sampled series; sample `k` sits at `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    t0: f64,
    dt: f64,
    values: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn new(t0: f64, dt: f64, values: Vec<T>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("start time must be finite"));
        }
        if values.is_empty() {
            return Err(Error::invalid("time series needs at least one sample"));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeSeries<U> {
        TimeSeries {
            t0: self.t0,
            dt: self.dt,
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl<T: Copy> TimeSeries<T> {
    /// Zero-order hold: the latest sample at or before `t`, clamped to the
    /// series support.
    pub fn sample_hold(&self, t: f64) -> T {
        let pos = ((t - self.t0) / self.dt + 1e-9).floor();
        let idx = if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.values.len() - 1)
        };
        self.values[idx]
    }
}

impl TimeSeries<f64> {
    /// Linear interpolation, clamped at both ends.
    pub fn interpolate(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        let i = x.floor() as usize;
        if i >= last {
            return self.values[last];
        }
        let frac = x - i as f64;
        if frac < 1e-12 {
            return self.values[i];
        }
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// Forward first difference: `out[k] = in[k+1] - in[k]`, same `t0` and `dt`.
pub fn diff(series: &TimeSeries<f64>) -> Result<TimeSeries<f64>> {
    if series.len() < 2 {
        return Err(Error::invalid("diff needs at least two samples"));
    }
    let values = series.values.windows(2).map(|w| w[1] - w[0]).collect();
    TimeSeries::new(series.t0, series.dt, values)
}

//! Synthetic phasor measurement units.
//!
//! A PMU samples a bus phasor timeline at its reporting rate, perturbs the
//! angle with seeded Gaussian noise, wraps it as a real device would, and
//! estimates frequency from the first difference of consecutive angles.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foundation::{wrap_angle, Phasor, TimeSeries};
use crate::frequency::FREQUENCY_SANITY_BAND_HZ;
use crate::io::{format_sig, quantize};

pub const PMU_CSV_HEADER: [&str; 5] = ["time_s", "v_mag_pu", "theta_deg", "freq_hz", "valid"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PmuLocation {
    Slack,
    Pcc,
    Pbc,
}

impl PmuLocation {
    /// Conventional PMU number: 0 at the slack, 1 at the PCC, 2 at the PBC.
    pub fn index(self) -> usize {
        match self {
            PmuLocation::Slack => 0,
            PmuLocation::Pcc => 1,
            PmuLocation::Pbc => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmuConfig {
    /// frames/s
    #[serde(default = "default_rate")]
    pub reporting_rate: f64,
    /// degrees, 1 sigma
    #[serde(default = "default_sigma")]
    pub angle_noise_sigma: f64,
    pub noise_seed: u64,
    pub location: PmuLocation,
}

fn default_rate() -> f64 {
    50.0
}

fn default_sigma() -> f64 {
    0.001
}

impl PmuConfig {
    pub fn new(location: PmuLocation, noise_seed: u64) -> Self {
        Self { reporting_rate: default_rate(), angle_noise_sigma: default_sigma(), noise_seed, location }
    }

    pub fn reporting_interval(&self) -> f64 {
        1.0 / self.reporting_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reporting_rate > 0.0 && self.reporting_rate.is_finite()) {
            return Err(Error::invalid(format!("reporting rate must be > 0, got {}", self.reporting_rate)));
        }
        if !(self.angle_noise_sigma >= 0.0 && self.angle_noise_sigma.is_finite()) {
            return Err(Error::invalid(format!("angle noise sigma must be >= 0, got {}", self.angle_noise_sigma)));
        }
        Ok(())
    }

    /// Number of simulation steps per frame, if `dt_sim` divides the
    /// reporting interval.
    pub fn decimation(&self, dt_sim: f64) -> Result<usize> {
        let ratio = self.reporting_interval() / dt_sim;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
            return Err(Error::invalid(format!(
                "simulation step {dt_sim} s does not divide the reporting interval {} s",
                self.reporting_interval()
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmuFrame {
    pub t: f64,
    pub v_mag: f64,
    /// rad, wrapped to (-pi, pi]
    pub theta: f64,
    pub f: f64,
    pub valid: bool,
}

impl PmuFrame {
    /// The frame as it reads back from CSV.
    pub fn emitted(&self) -> Self {
        Self {
            t: quantize(self.t),
            v_mag: quantize(self.v_mag),
            theta: quantize(self.theta.to_degrees()).to_radians(),
            f: quantize(self.f),
            valid: self.valid,
        }
    }
}

/// Samples a phasor timeline at the reporting instants `k / rate` that fall
/// inside it. Frequency is left at 0 and every frame invalid until
/// [`estimate_frequency`] runs.
pub fn sample(timeline: &TimeSeries<Phasor>, config: &PmuConfig) -> Result<Vec<PmuFrame>> {
    config.validate()?;
    let step = config.decimation(timeline.dt())?;
    let interval = config.reporting_interval();
    let first_frame = (timeline.t0() / interval - 1e-9).ceil().max(0.0) as usize;
    let first_index = ((first_frame as f64 * interval - timeline.t0()) / timeline.dt()).round() as usize;

    let sigma = config.angle_noise_sigma.to_radians();
    let mut rng = ChaCha8Rng::seed_from_u64(config.noise_seed);
    let values = timeline.values();
    let mut frames = Vec::with_capacity(values.len() / step + 1);
    for (n, idx) in (first_index..values.len()).step_by(step).enumerate() {
        let noise: f64 = rng.sample(StandardNormal);
        let v = values[idx];
        frames.push(PmuFrame {
            t: (first_frame + n) as f64 * interval,
            v_mag: v.magnitude,
            theta: wrap_angle(v.angle + sigma * noise),
            f: 0.0,
            valid: false,
        });
    }
    Ok(frames)
}

/// Fills `f` from consecutive angles: `f_k = f0 + wrap(theta_k - theta_{k-1}) / (2 pi dt)`.
/// The first frame has no predecessor and is marked invalid with `f = f0`.
pub fn estimate_frequency(frames: &[PmuFrame], f0: f64) -> Result<Vec<PmuFrame>> {
    if frames.len() < 2 {
        return Err(Error::invalid("frequency estimation needs at least 2 frames"));
    }
    let (lo, hi) = FREQUENCY_SANITY_BAND_HZ;
    let mut out = Vec::with_capacity(frames.len());
    out.push(PmuFrame { f: f0, valid: false, ..frames[0] });
    for pair in frames.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        let dt = cur.t - prev.t;
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("frame timestamps not increasing at t = {}", cur.t)));
        }
        let f = f0 + wrap_angle(cur.theta - prev.theta) / (TAU * dt);
        out.push(PmuFrame { f, valid: (lo..=hi).contains(&f), ..cur });
    }
    Ok(out)
}

pub fn write_frames_csv(path: &Path, frames: &[PmuFrame]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PMU_CSV_HEADER)?;
    for fr in frames {
        w.write_record([
            format_sig(fr.t),
            format_sig(fr.v_mag),
            format_sig(fr.theta.to_degrees()),
            format_sig(fr.f),
            if fr.valid { "1" } else { "0" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frames_csv(path: &Path) -> Result<Vec<PmuFrame>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::TraceRow { row: 1, reason: format!("missing column '{name}'") })
    };
    let idx = [col("time_s")?, col("v_mag_pu")?, col("theta_deg")?, col("freq_hz")?, col("valid")?];
    let mut frames = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let num = |k: usize| -> Result<f64> {
            let field = rec.get(idx[k]).unwrap_or("").trim();
            field.parse::<f64>().map_err(|_| Error::TraceRow {
                row,
                reason: format!("cannot parse '{field}' in column '{}'", PMU_CSV_HEADER[k]),
            })
        };
        let valid = match rec.get(idx[4]).unwrap_or("").trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(Error::TraceRow { row, reason: format!("bad valid flag '{other}'") }),
        };
        frames.push(PmuFrame { t: num(0)?, v_mag: num(1)?, theta: num(2)?.to_radians(), f: num(3)?, valid });
    }
    if frames.is_empty() {
        return Err(Error::TraceRow { row: 1, reason: "no frames".into() });
    }
    Ok(frames)
}

/// Column views of a frame stream.
pub fn times(frames: &[PmuFrame]) -> Vec<f64> {
    frames.iter().map(|f| f.t).collect()
}

pub fn angles(frames: &[PmuFrame]) -> Vec<f64> {
    frames.iter().map(|f| f.theta).collect()
}

pub fn frequencies(frames: &[PmuFrame]) -> Vec<f64> {
    frames.iter().map(|f| f.f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::{slack_angle, synthesize, SynthParams};

    fn constant_bus(angle: f64, n: usize, dt: f64) -> TimeSeries<Phasor> {
        TimeSeries::new(0.0, dt, vec![Phasor::unit(angle); n]).unwrap()
    }

    fn noiseless(location: PmuLocation) -> PmuConfig {
        PmuConfig { angle_noise_sigma: 0.0, ..PmuConfig::new(location, 1) }
    }

    fn std(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn noiseless_frames_are_exact() {
        let timeline = TimeSeries::new(0.0, 1e-3, (0..1000).map(|k| Phasor::unit(0.001 * k as f64)).collect()).unwrap();
        let frames = sample(&timeline, &noiseless(PmuLocation::Pcc)).unwrap();
        assert_eq!(frames.len(), 50);
        for (n, fr) in frames.iter().enumerate() {
            assert_eq!(fr.theta, 0.001 * (20 * n) as f64);
            assert!((fr.t - 0.02 * n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn frames_are_wrapped() {
        let frames = sample(&constant_bus(4.0, 100, 1e-3), &noiseless(PmuLocation::Pbc)).unwrap();
        assert!(frames.iter().all(|f| (f.theta - (4.0 - TAU)).abs() < 1e-15));
    }

    #[test]
    fn rejects_non_dividing_step() {
        assert!(sample(&constant_bus(0.0, 100, 3e-3), &noiseless(PmuLocation::Pcc)).is_err());
    }

    #[test]
    fn noise_std_calibrated() {
        let cfg = PmuConfig::new(PmuLocation::Pcc, 7);
        let frames = sample(&constant_bus(0.0, 100_000, 0.02), &cfg).unwrap();
        assert_eq!(frames.len(), 100_000);
        let deg: Vec<f64> = frames.iter().map(|f| f.theta.to_degrees()).collect();
        let s = std(&deg);
        assert!((0.00097..=0.00103).contains(&s), "std = {s}");
    }

    #[test]
    fn noise_streams_independent() {
        let timeline = constant_bus(0.0, 100_000, 0.02);
        let a = angles(&sample(&timeline, &PmuConfig::new(PmuLocation::Pcc, 11)).unwrap());
        let b = angles(&sample(&timeline, &PmuConfig::new(PmuLocation::Pbc, 12)).unwrap());
        let (ma, mb) = (a.iter().sum::<f64>() / a.len() as f64, b.iter().sum::<f64>() / b.len() as f64);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
        let rho = cov / (std(&a) * std(&b));
        assert!(rho.abs() < 0.02, "rho = {rho}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let timeline = constant_bus(0.3, 5000, 1e-3);
        let cfg = PmuConfig::new(PmuLocation::Slack, 99);
        assert_eq!(sample(&timeline, &cfg).unwrap(), sample(&timeline, &cfg).unwrap());
    }

    #[test]
    fn frequency_from_constant_and_rotating_angle() {
        let flat = estimate_frequency(&sample(&constant_bus(0.2, 1000, 1e-3), &noiseless(PmuLocation::Pcc)).unwrap(), 50.0).unwrap();
        assert!(!flat[0].valid);
        assert!(flat[1..].iter().all(|f| f.valid && f.f == 50.0));

        let dt = 1e-3;
        let timeline = TimeSeries::new(0.0, dt, (0..2000).map(|k| Phasor::unit(TAU * 0.1 * k as f64 * dt)).collect()).unwrap();
        let est = estimate_frequency(&sample(&timeline, &noiseless(PmuLocation::Pcc)).unwrap(), 50.0).unwrap();
        assert!(est[1..].iter().all(|f| (f.f - 50.1).abs() < 1e-9));
    }

    #[test]
    fn frequency_noise_propagation() {
        let cfg = PmuConfig::new(PmuLocation::Pcc, 3);
        let frames = estimate_frequency(&sample(&constant_bus(0.0, 100_000, 0.02), &cfg).unwrap(), 50.0).unwrap();
        let s = std(&frequencies(&frames[1..]));
        let oracle = 2f64.sqrt() * 0.001f64.to_radians() / (TAU * 0.02);
        assert!((s / oracle - 1.0).abs() < 0.1, "{s} vs {oracle}");
    }

    #[test]
    fn slack_pmu_reproduces_trace() {
        // The first difference measures the mean frequency over each frame
        // interval; for a piecewise-linear trace that is its value at the
        // interval midpoint.
        let params = SynthParams {
            duration: 200.0,
            dt: 1e-3,
            ramp_start: 50.0,
            ramp_duration: 100.0,
            ramp_magnitude: -0.05,
            ou_sigma: 0.0,
            ..SynthParams::default()
        };
        let trace = synthesize(&params).unwrap();
        let theta = slack_angle(&trace, 50.0);
        let timeline = theta.map(|&a| Phasor::unit(a));
        let frames = estimate_frequency(&sample(&timeline, &noiseless(PmuLocation::Slack)).unwrap(), 50.0).unwrap();
        for fr in &frames[1..] {
            let expect = trace.series().interpolate(fr.t - 0.01);
            assert!((fr.f - expect).abs() < 1e-6, "t = {}: {} vs {expect}", fr.t, fr.f);
        }
    }

    #[test]
    fn csv_round_trip_matches_emitted() {
        let cfg = PmuConfig::new(PmuLocation::Pbc, 5);
        let timeline = TimeSeries::new(0.0, 1e-3, (0..3000).map(|k| Phasor::new(0.98, 3.0 + 1e-3 * k as f64).unwrap()).collect()).unwrap();
        let frames = estimate_frequency(&sample(&timeline, &cfg).unwrap(), 50.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pmu.csv");
        write_frames_csv(&path, &frames).unwrap();
        let back = read_frames_csv(&path).unwrap();
        let emitted: Vec<PmuFrame> = frames.iter().map(PmuFrame::emitted).collect();
        assert_eq!(back, emitted);
    }

    #[test]
    fn read_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time_s,v_mag_pu,theta_deg,freq_hz,valid\n0,1,0,50,1\n0.02,1,x,50,1\n").unwrap();
        match read_frames_csv(&path) {
            Err(Error::TraceRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }
}

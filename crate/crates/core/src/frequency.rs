//! Exogenous bulk-grid frequency: recorded traces, synthetic hour-transition
//! ramps with Ornstein-Uhlenbeck noise, and the slack-bus angle they imply.

use std::f64::consts::TAU;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foundation::{TimeSeries, NOMINAL_FREQUENCY_HZ};
use crate::io::format_sig;

/// Samples outside this band are treated as corrupt data.
pub const FREQUENCY_SANITY_BAND_HZ: (f64, f64) = (45.0, 55.0);

/// Uniformly sampled bulk-grid frequency in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    series: TimeSeries<f64>,
}

impl FrequencyTrace {
    pub fn new(series: TimeSeries<f64>) -> Result<Self> {
        let (lo, hi) = FREQUENCY_SANITY_BAND_HZ;
        if let Some((k, f)) = series
            .values()
            .iter()
            .enumerate()
            .find(|(_, f)| !(**f >= lo && **f <= hi))
        {
            return Err(Error::invalid(format!(
                "frequency sample {k} = {f} Hz is out of sanity bound [{lo}, {hi}]"
            )));
        }
        Ok(Self { series })
    }

    /// Flat trace at `frequency_hz` over `[0, duration]`.
    pub fn constant(frequency_hz: f64, duration: f64, dt: f64) -> Result<Self> {
        let n = (duration / dt).round() as usize + 1;
        Self::new(TimeSeries::new(0.0, dt, vec![frequency_hz; n])?)
    }

    pub fn series(&self) -> &TimeSeries<f64> {
        &self.series
    }

    pub fn dt(&self) -> f64 {
        self.series.dt()
    }

    pub fn duration(&self) -> f64 {
        self.series.end_time() - self.series.t0()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time_s", "frequency_hz"])?;
        for (k, f) in self.series.values().iter().enumerate() {
            w.write_record([format_sig(self.series.time(k)), format_sig(*f)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parameters of the synthetic hour-transition trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    /// s
    pub duration: f64,
    /// Trace sampling step, s.
    pub dt: f64,
    /// s
    pub ramp_start: f64,
    /// Signed frequency change reached at the end of the ramp, Hz.
    pub ramp_magnitude: f64,
    /// s
    pub ramp_duration: f64,
    /// Stationary standard deviation of the OU component, Hz.
    pub ou_sigma: f64,
    /// OU correlation time, s.
    pub ou_tau: f64,
    pub seed: u64,
    pub f0: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            duration: 600.0,
            dt: 0.5e-3,
            ramp_start: 300.0,
            ramp_magnitude: -0.05,
            ramp_duration: 120.0,
            ou_sigma: 5e-3,
            ou_tau: 10.0,
            seed: 2021,
            f0: NOMINAL_FREQUENCY_HZ,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("synth params: {m}")));
        if !(self.duration > 0.0) {
            return fail("duration must be > 0");
        }
        if !(self.dt > 0.0 && self.dt <= self.duration) {
            return fail("dt must be in (0, duration]");
        }
        if !(self.ramp_duration >= 0.0
            && self.ramp_start >= 0.0
            && self.ramp_start + self.ramp_duration <= self.duration)
        {
            return fail("ramp must lie within [0, duration]");
        }
        if !(self.ou_sigma >= 0.0) {
            return fail("ou_sigma must be >= 0");
        }
        if !(self.ou_tau > 0.0) {
            return fail("ou_tau must be > 0");
        }
        if !(self.f0 > 0.0) || !self.ramp_magnitude.is_finite() {
            return fail("f0 must be > 0 and ramp magnitude finite");
        }
        Ok(())
    }

    /// Deterministic piecewise-linear ramp component at time `t`.
    pub fn ramp_at(&self, t: f64) -> f64 {
        let end = self.ramp_start + self.ramp_duration;
        if t >= end - 1e-9 * self.dt {
            self.ramp_magnitude
        } else if t <= self.ramp_start {
            0.0
        } else {
            self.ramp_magnitude * (t - self.ramp_start) / self.ramp_duration
        }
    }
}

/// Ramp plus exactly discretized OU noise; a pure function of `params`.
pub fn synthesize(params: &SynthParams) -> Result<FrequencyTrace> {
    params.validate()?;
    let n = (params.duration / params.dt).round() as usize + 1;
    let decay = (-params.dt / params.ou_tau).exp();
    let kick = params.ou_sigma * (1.0 - decay * decay).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut x = params.ou_sigma * normal();
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            x = x * decay + kick * normal();
        }
        let t = k as f64 * params.dt;
        values.push(params.f0 + params.ramp_at(t) + x);
    }
    FrequencyTrace::new(TimeSeries::new(0.0, params.dt, values)?)
}

/// Column names used by [`load_trace`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnMap {
    pub time: String,
    pub frequency: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self { time: "time_s".into(), frequency: "frequency_hz".into() }
    }
}

/// Loads a `time_s,frequency_hz` CSV and resamples it onto a uniform grid of
/// step `dt` by linear interpolation.
pub fn load_trace(path: &Path, columns: &ColumnMap, dt: f64) -> Result<FrequencyTrace> {
    if !(dt > 0.0) {
        return Err(Error::invalid("resampling step must be > 0"));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::TraceRow { row: 1, reason: format!("missing column '{name}'") })
    };
    let (ti, fi) = (col(&columns.time)?, col(&columns.frequency)?);
    let (lo, hi) = FREQUENCY_SANITY_BAND_HZ;

    let mut times = Vec::new();
    let mut freqs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let rec = rec.map_err(|e| Error::TraceRow { row, reason: e.to_string() })?;
        let parse = |idx: usize, what: &str| -> Result<f64> {
            let raw = rec
                .get(idx)
                .ok_or_else(|| Error::TraceRow { row, reason: format!("missing {what}") })?;
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::TraceRow { row, reason: format!("unparsable {what} '{raw}'") })?;
            if !v.is_finite() {
                return Err(Error::TraceRow { row, reason: format!("non-finite {what}") });
            }
            Ok(v)
        };
        let t = parse(ti, "time")?;
        let f = parse(fi, "frequency")?;
        if !(f >= lo && f <= hi) {
            return Err(Error::TraceRow {
                row,
                reason: format!("frequency {f} Hz out of sanity bound [{lo}, {hi}]"),
            });
        }
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::TraceRow { row, reason: format!("non-monotonic time {t} after {prev}") });
            }
            if t - prev >= 10.0 * dt {
                return Err(Error::TraceRow {
                    row,
                    reason: format!("gap of {} s exceeds 10 resampling steps", t - prev),
                });
            }
        }
        times.push(t);
        freqs.push(f);
    }
    if times.is_empty() {
        return Err(Error::TraceRow { row: 1, reason: "trace contains no samples".into() });
    }

    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let n = (span / dt + 1e-9).floor() as usize + 1;
    let mut values = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        while seg + 1 < times.len() - 1 && times[seg + 1] <= t {
            seg += 1;
        }
        let v = if times.len() == 1 {
            freqs[0]
        } else {
            let (ta, tb) = (times[seg], times[seg + 1]);
            let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
            freqs[seg] + w * (freqs[seg + 1] - freqs[seg])
        };
        values.push(v);
    }
    FrequencyTrace::new(TimeSeries::new(t0, dt, values)?)
}

/// Slack-bus angle drift relative to the nominal rotating frame, rad.
///
/// Trapezoidal accumulation of `2*pi*(f - f0)`, starting from zero; exact for
/// piecewise-linear frequency between samples.
pub fn slack_angle(trace: &FrequencyTrace, f0: f64) -> TimeSeries<f64> {
    let s = trace.series();
    let dt = s.dt();
    let mut theta = 0.0;
    let mut out = Vec::with_capacity(s.len());
    out.push(0.0);
    for w in s.values().windows(2) {
        theta += TAU * dt * (0.5 * (w[0] + w[1]) - f0);
        out.push(theta);
    }
    TimeSeries::new(s.t0(), dt, out).expect("same grid as a valid trace")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn quiet(duration: f64, dt: f64) -> SynthParams {
        SynthParams {
            duration,
            dt,
            ramp_magnitude: 0.0,
            ramp_start: 0.0,
            ramp_duration: 0.0,
            ou_sigma: 0.0,
            ..SynthParams::default()
        }
    }

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn flat_trace_without_noise() {
        let tr = synthesize(&quiet(10.0, 0.01)).unwrap();
        assert!(tr.series().values().iter().all(|&f| f == 50.0));
        assert_eq!(tr.series().len(), 1001);
    }

    #[test]
    fn ramp_reaches_magnitude_at_end() {
        let p = SynthParams {
            ramp_start: 10.0,
            ramp_duration: 60.0,
            ramp_magnitude: -0.05,
            ..quiet(100.0, 0.01)
        };
        let tr = synthesize(&p).unwrap();
        let k_end = 7000;
        assert!((tr.series().time(k_end) - 70.0).abs() < 1e-9);
        assert!((tr.series().values()[k_end] - 49.95).abs() < 1e-12);
        assert!((tr.series().values()[k_end - 3000] - 49.975).abs() < 1e-12);
        assert_eq!(tr.series().values()[1000], 50.0);
        assert!((tr.series().values()[10000] - 49.95).abs() < 1e-12);
    }

    #[test]
    fn ou_stationary_std() {
        // Oracle: the exact OU recursion keeps the stationary variance sigma^2.
        let p = SynthParams {
            duration: 1e4,
            dt: 0.01,
            ou_sigma: 0.01,
            ou_tau: 1.0,
            ..quiet(1e4, 0.01)
        };
        let tr = synthesize(&p).unwrap();
        let v = tr.series().values();
        assert_eq!(v.len(), 1_000_001);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let std = (v.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        assert!((0.0095..=0.0105).contains(&std), "std {std}");
    }

    #[test]
    fn synthesize_is_pure() {
        let p = SynthParams { duration: 5.0, ..SynthParams::default() };
        let p = SynthParams { ramp_start: 1.0, ramp_duration: 2.0, ..p };
        let a = synthesize(&p).unwrap();
        let b = synthesize(&p).unwrap();
        assert_eq!(a, b);
        let c = synthesize(&SynthParams { seed: p.seed + 1, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(synthesize(&SynthParams { duration: 0.0, ..SynthParams::default() }).is_err());
        assert!(synthesize(&SynthParams { ou_tau: 0.0, ..SynthParams::default() }).is_err());
        assert!(synthesize(&SynthParams { ou_sigma: -1.0, ..SynthParams::default() }).is_err());
        assert!(synthesize(&SynthParams { ramp_start: 590.0, ..SynthParams::default() }).is_err());
    }

    #[test]
    fn load_interpolates() {
        let f = csv_file("time_s,frequency_hz\n0,50.0\n1,50.1\n");
        let tr = load_trace(f.path(), &ColumnMap::default(), 0.5).unwrap();
        let v = tr.series().values();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0], 50.0);
        assert!((v[1] - 50.05).abs() < 1e-12);
        assert!((v[2] - 50.1).abs() < 1e-12);
    }

    #[test]
    fn load_errors() {
        let empty = csv_file("");
        assert!(load_trace(empty.path(), &ColumnMap::default(), 0.5).is_err());
        let header_only = csv_file("time_s,frequency_hz\n");
        assert!(load_trace(header_only.path(), &ColumnMap::default(), 0.5).is_err());

        let high = csv_file("time_s,frequency_hz\n0,50.0\n0.5,61\n");
        let err = load_trace(high.path(), &ColumnMap::default(), 0.5).unwrap_err();
        assert!(matches!(err, Error::TraceRow { row: 3, .. }));
        assert!(err.to_string().contains("out of sanity bound"));

        let back = csv_file("time_s,frequency_hz\n0,50\n1,50\n0.5,50\n");
        let err = load_trace(back.path(), &ColumnMap::default(), 0.5).unwrap_err();
        assert!(err.to_string().contains("non-monotonic"), "{err}");

        let gap = csv_file("time_s,frequency_hz\n0,50\n10,50\n");
        assert!(load_trace(gap.path(), &ColumnMap::default(), 0.5).is_err());

        let missing = tempfile::tempdir().unwrap().path().join("nope.csv");
        assert!(load_trace(&missing, &ColumnMap::default(), 0.5).is_err());
    }

    #[test]
    fn load_custom_columns() {
        let f = csv_file("t,f,extra\n0,49.9,x\n0.2,50.1,y\n");
        let cols = ColumnMap { time: "t".into(), frequency: "f".into() };
        let tr = load_trace(f.path(), &cols, 0.1).unwrap();
        assert!((tr.series().values()[1] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let p = SynthParams { duration: 2.0, dt: 0.01, ramp_start: 0.5, ramp_duration: 1.0, ..SynthParams::default() };
        let tr = synthesize(&p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        tr.write_csv(&path).unwrap();
        let back = load_trace(&path, &ColumnMap::default(), 0.01).unwrap();
        assert_eq!(back.series().len(), tr.series().len());
        for (a, b) in back.series().values().iter().zip(tr.series().values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn slack_angle_examples() {
        let flat = FrequencyTrace::constant(50.0, 2.0, 0.001).unwrap();
        assert!(slack_angle(&flat, 50.0).values().iter().all(|&a| a == 0.0));

        let off = FrequencyTrace::constant(50.1, 1.0, 0.001).unwrap();
        let th = slack_angle(&off, 50.0);
        assert_eq!(th.values()[0], 0.0);
        assert!((th.values()[1000] - TAU * 0.1).abs() < 1e-9);
    }

    #[test]
    fn slack_angle_of_ramp_matches_quadrature() {
        // Independent oracle: composite Simpson quadrature on the ramp segments
        // together with the closed-form quadratic.
        let p = SynthParams { ramp_start: 2.0, ramp_duration: 5.0, ramp_magnitude: 0.2, ..quiet(10.0, 0.01) };
        let tr = synthesize(&p).unwrap();
        let th = slack_angle(&tr, 50.0);
        let exact = |t: f64| -> f64 {
            let a = p.ramp_magnitude / p.ramp_duration;
            if t <= 2.0 {
                0.0
            } else if t <= 7.0 {
                TAU * 0.5 * a * (t - 2.0).powi(2)
            } else {
                TAU * (0.5 * a * 25.0 + p.ramp_magnitude * (t - 7.0))
            }
        };
        // Simpson on each smooth piece, split at the ramp corners.
        let simpson = |t: f64| -> f64 {
            let g = |x: f64| TAU * p.ramp_at(x);
            let piece = |a: f64, b: f64| -> f64 {
                if b <= a {
                    return 0.0;
                }
                let n = 200;
                let h = (b - a) / n as f64;
                let mut s = g(a) + g(b);
                for i in 1..n {
                    s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                s * h / 3.0
            };
            piece(0.0, t.min(2.0)) + piece(2.0, t.min(7.0)) + piece(7.0, t)
        };
        for k in (0..tr.series().len()).step_by(50) {
            let t = th.time(k);
            assert!((th.values()[k] - exact(t)).abs() < 1e-9, "t={t}");
            assert!((th.values()[k] - simpson(t)).abs() < 1e-9, "t={t}");
        }
    }

    proptest::proptest! {
        #[test]
        fn slack_angle_is_additive(
            g in proptest::collection::vec(-0.5..0.5f64, 2..200),
            h in proptest::collection::vec(-0.5..0.5f64, 2..200),
        ) {
            let n = g.len().min(h.len());
            let mk = |d: &dyn Fn(usize) -> f64| {
                FrequencyTrace::new(TimeSeries::new(0.0, 0.02, (0..n).map(|k| 50.0 + d(k)).collect()).unwrap()).unwrap()
            };
            let a = slack_angle(&mk(&|k| g[k]), 50.0);
            let b = slack_angle(&mk(&|k| h[k]), 50.0);
            let c = slack_angle(&mk(&|k| g[k] + h[k]), 50.0);
            for k in 0..n {
                proptest::prop_assert!((a.values()[k] + b.values()[k] - c.values()[k]).abs() < 1e-9);
            }
        }
    }
}

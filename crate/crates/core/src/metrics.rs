//! Frequency-quality and converter-response metrics computed on PMU data:
//! integral frequency deviation, frequency spread, relative RoCoF, relative
//! phase-angle-difference deviation, empirical CDFs and a quantile dominance
//! comparison.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foundation::{unwrap_angles, wrap_angle, TimeSeries};
use crate::io::format_sig;

/// Absolute frequency deviation summed over every unit and sample, Hz.
pub fn ifd(streams: &[&[f64]], f0: f64) -> Result<f64> {
    let Some(first) = streams.first() else {
        return Err(Error::invalid("ifd needs at least one stream"));
    };
    let mut total = 0.0;
    for s in streams {
        if s.len() != first.len() {
            return Err(Error::LengthMismatch { expected: first.len(), found: s.len() });
        }
        for (k, f) in s.iter().enumerate() {
            if !f.is_finite() {
                return Err(Error::NonFinite { index: k });
            }
            total += (f - f0).abs();
        }
    }
    Ok(total)
}

/// Population standard deviation, Hz.
pub fn freq_std(f: &[f64]) -> Result<f64> {
    if f.len() < 2 {
        return Err(Error::invalid("frequency spread needs at least 2 samples"));
    }
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    Ok((f.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    pub candidates: usize,
    pub retained_fraction: f64,
}

impl MetricSeries {
    fn from_candidates(candidates: usize, kept: Vec<(f64, f64)>) -> Result<Self> {
        if kept.is_empty() {
            return Err(Error::NoActiveSamples { candidates });
        }
        let retained_fraction = kept.len() as f64 / candidates as f64;
        let (t, value) = kept.into_iter().unzip();
        Ok(Self { t, value, candidates, retained_fraction })
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time_s", "value"])?;
        for (t, v) in self.t.iter().zip(&self.value) {
            w.write_record([format_sig(*t), format_sig(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_aligned(a: &TimeSeries<f64>, b: &TimeSeries<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), found: b.len() });
    }
    let tol = 1e-9 * a.dt();
    if (a.t0() - b.t0()).abs() > tol || (a.dt() - b.dt()).abs() > tol {
        return Err(Error::invalid("streams are not aligned on common timestamps"));
    }
    Ok(())
}

/// Frames per window, if `window` is a whole number of reporting intervals.
fn window_frames(window: f64, dt: f64) -> Result<usize> {
    let ratio = window / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-6 {
        return Err(Error::invalid(format!("window {window} s is not a multiple of the frame interval {dt} s")));
    }
    Ok(n as usize)
}

/// Relative RoCoF in Hz/s/W: `|(df / window) / dP|` with both changes taken
/// over the same window. Windows slide by one frame and are stamped at their
/// end; those with `|dP| < p_threshold` are dropped.
pub fn rrocof(f: &TimeSeries<f64>, p: &TimeSeries<f64>, window: f64, p_threshold: f64) -> Result<MetricSeries> {
    check_aligned(f, p)?;
    let w = window_frames(window, f.dt())?;
    let (fv, pv) = (f.values(), p.values());
    if fv.len() <= w {
        return Err(Error::invalid("stream shorter than one rRoCoF window"));
    }
    let candidates = fv.len() - w;
    let kept = (0..candidates)
        .filter_map(|k| {
            let dp = pv[k + w] - pv[k];
            (dp.abs() >= p_threshold).then(|| (f.time(k + w), ((fv[k + w] - fv[k]) / window / dp).abs()))
        })
        .collect();
    MetricSeries::from_candidates(candidates, kept)
}

/// Inter-PMU angle difference `theta_1 - theta_2`, unwrapped along the record, rad.
pub fn angle_difference(theta1: &TimeSeries<f64>, theta2: &TimeSeries<f64>) -> Result<TimeSeries<f64>> {
    check_aligned(theta1, theta2)?;
    let raw: Vec<f64> = theta1.values().iter().zip(theta2.values()).map(|(a, b)| wrap_angle(a - b)).collect();
    TimeSeries::new(theta1.t0(), theta1.dt(), unwrap_angles(&raw)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    /// rad
    pub mean: f64,
    /// rad, spread of the difference inside the window
    pub std: f64,
    pub pairs: usize,
}

pub const MIN_BASELINE_PAIRS: usize = 10;

/// Mean inter-PMU angle difference over `[window.0, window.1]`, which must
/// close before `activation`.
pub fn baseline_angle(
    theta1: &TimeSeries<f64>,
    theta2: &TimeSeries<f64>,
    window: (f64, f64),
    activation: f64,
) -> Result<Baseline> {
    let (ta, tb) = window;
    if !(ta < tb) {
        return Err(Error::invalid(format!("baseline window [{ta}, {tb}] is empty")));
    }
    if tb >= activation {
        return Err(Error::invalid(format!("baseline window ends at {tb} s, not before activation at {activation} s")));
    }
    let diff = angle_difference(theta1, theta2)?;
    let tol = 1e-9 * diff.dt();
    let inside: Vec<f64> = (0..diff.len())
        .filter(|&k| (ta - tol..=tb + tol).contains(&diff.time(k)))
        .map(|k| diff.values()[k])
        .collect();
    if inside.len() < MIN_BASELINE_PAIRS {
        return Err(Error::invalid(format!(
            "baseline window holds {} frame pairs, need at least {MIN_BASELINE_PAIRS}",
            inside.len()
        )));
    }
    let n = inside.len() as f64;
    let mean = inside.iter().sum::<f64>() / n;
    let std = (inside.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    Ok(Baseline { mean, std, pairs: inside.len() })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RpaddDenominator {
    /// Delivered power at the sample.
    #[default]
    Instantaneous,
    /// Change of delivered power since the previous sample.
    Differenced,
}

/// Relative phase-angle-difference deviation in deg/kW:
/// `|(dtheta_k - dtheta_0) / P_k|`, dropping samples with `|P_k| < p_threshold`.
pub fn rpadd(
    theta1: &TimeSeries<f64>,
    theta2: &TimeSeries<f64>,
    p: &TimeSeries<f64>,
    baseline: f64,
    p_threshold: f64,
    denominator: RpaddDenominator,
) -> Result<MetricSeries> {
    check_aligned(theta1, p)?;
    let diff = angle_difference(theta1, theta2)?;
    let pv = p.values();
    let start = match denominator {
        RpaddDenominator::Instantaneous => 0,
        RpaddDenominator::Differenced => 1,
    };
    let candidates = pv.len().saturating_sub(start);
    let kept = (start..pv.len())
        .filter_map(|k| {
            let dp = match denominator {
                RpaddDenominator::Instantaneous => pv[k],
                RpaddDenominator::Differenced => pv[k] - pv[k - 1],
            };
            let dev = wrap_angle(diff.values()[k] - baseline).to_degrees();
            (dp.abs() >= p_threshold).then(|| (diff.time(k), (dev / (dp / 1e3)).abs()))
        })
        .collect();
    MetricSeries::from_candidates(candidates, kept)
}

/// Step CDF with probability `k/N` at the k-th smallest value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cdf {
    values: Vec<f64>,
    probabilities: Vec<f64>,
}

pub fn empirical_cdf(samples: &[f64]) -> Result<Cdf> {
    if samples.is_empty() {
        return Err(Error::invalid("empirical CDF needs at least one sample"));
    }
    if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: k });
    }
    let mut values = samples.to_vec();
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let probabilities = (1..=values.len()).map(|k| k as f64 / n).collect();
    Ok(Cdf { values, probabilities })
}

impl Cdf {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|v| *v <= x) as f64 / self.values.len() as f64
    }

    /// Smallest sample whose cumulative probability reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        let x = q.clamp(0.0, 1.0) * n as f64;
        let rank = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
        self.values[(rank as usize).clamp(1, n) - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["value", "probability"])?;
        for (v, p) in self.values.iter().zip(&self.probabilities) {
            w.write_record([format_sig(*v), format_sig(*p)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub grid_points: usize,
    /// Fraction of grid quantiles where `a` is strictly below `b`.
    pub fraction: f64,
    pub median_a: f64,
    pub median_b: f64,
    /// `median_a / median_b`
    pub median_ratio: f64,
}

/// Compares two CDFs on the quantile levels `i/(n+1)`, `i = 1..=n`.
pub fn dominance_report(a: &Cdf, b: &Cdf, grid_points: usize) -> Result<DominanceReport> {
    if a.is_empty() || b.is_empty() || grid_points == 0 {
        return Err(Error::invalid("dominance needs non-empty CDFs and a non-empty grid"));
    }
    let step = 1.0 / (grid_points + 1) as f64;
    let below = (1..=grid_points)
        .filter(|&i| {
            let q = i as f64 * step;
            a.quantile(q) < b.quantile(q)
        })
        .count();
    let (median_a, median_b) = (a.median(), b.median());
    Ok(DominanceReport {
        grid_points,
        fraction: below as f64 / grid_points as f64,
        median_a,
        median_b,
        median_ratio: median_a / median_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ts(values: Vec<f64>) -> TimeSeries<f64> {
        TimeSeries::new(0.0, 0.02, values).unwrap()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn ifd_examples() {
        let nominal = vec![50.0; 100];
        assert_eq!(ifd(&[&nominal, &nominal], 50.0).unwrap(), 0.0);
        let v = ifd(&[&[50.01, 49.99]], 50.0).unwrap();
        assert!((v - 0.02).abs() < 1e-12);
        assert!(matches!(ifd(&[&[50.0], &[50.0, 50.0]], 50.0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn ifd_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let streams: Vec<Vec<f64>> = (0..3).map(|_| (0..1000).map(|_| rng.random_range(49.9..50.1)).collect()).collect();
        let views: Vec<&[f64]> = streams.iter().map(|s| s.as_slice()).collect();
        let mut oracle = 0.0;
        for i in 0..3 {
            for k in 0..1000 {
                oracle += (streams[i][k] - 50.0).abs();
            }
        }
        assert!(rel_close(ifd(&views, 50.0).unwrap(), oracle, 1e-12));
    }

    #[test]
    fn freq_std_examples() {
        assert_eq!(freq_std(&[50.0; 10]).unwrap(), 0.0);
        assert!((freq_std(&[50.01, 49.99]).unwrap() - 0.01).abs() < 1e-12);
        assert!(freq_std(&[50.0]).is_err());
    }

    #[test]
    fn rrocof_examples() {
        let f = ts(vec![50.0; 10]);
        let p = ts((0..10).map(|k| 1e3 * k as f64).collect());
        let m = rrocof(&f, &p, 0.06, 100.0).unwrap();
        assert_eq!(m.len(), 7);
        assert!(m.value.iter().all(|v| *v == 0.0));

        let f = ts(vec![50.0, 50.002, 50.004, 50.006]);
        let p = ts(vec![0.0, -4.8e3, -9.6e3, -14.4e3]);
        let m = rrocof(&f, &p, 0.06, 1e3).unwrap();
        assert_eq!(m.len(), 1);
        assert!(rel_close(m.value[0], 6.944444444444e-6, 1e-9), "{}", m.value[0]);
        assert!((m.t[0] - 0.06).abs() < 1e-15);
    }

    #[test]
    fn rrocof_threshold_and_errors() {
        let f = ts(vec![50.0; 10]);
        let flat = ts(vec![0.0; 10]);
        assert!(matches!(rrocof(&f, &flat, 0.06, 1.0), Err(Error::NoActiveSamples { candidates: 7 })));
        let step = ts((0..10).map(|k| if k >= 5 { 2e3 } else { 0.0 }).collect());
        let m = rrocof(&f, &step, 0.06, 1e3).unwrap();
        assert_eq!(m.len(), 3);
        assert!((m.retained_fraction - 3.0 / 7.0).abs() < 1e-15);
        assert!(rrocof(&f, &step, 0.05, 1e3).is_err());
        assert!(rrocof(&f, &ts(vec![0.0; 9]), 0.06, 1e3).is_err());
    }

    fn random_streams(seed: u64, n: usize) -> (TimeSeries<f64>, TimeSeries<f64>, TimeSeries<f64>, TimeSeries<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ts((0..n).map(|_| rng.random_range(49.95..50.05)).collect());
        let p = ts((0..n).map(|_| rng.random_range(-50e3..50e3)).collect());
        let t1 = ts((0..n).map(|_| rng.random_range(-3.0..3.0)).collect());
        let t2 = ts(t1.values().iter().map(|a| wrap_angle(a - 0.01 - rng.random_range(-1e-3..1e-3))).collect());
        (f, p, t1, t2)
    }

    #[test]
    fn rrocof_matches_brute_force() {
        let (f, p, ..) = random_streams(2, 1000);
        let m = rrocof(&f, &p, 0.06, 1e3).unwrap();
        let mut oracle = Vec::new();
        for k in 0..997 {
            let dp = p.values()[k + 3] - p.values()[k];
            if dp.abs() >= 1e3 {
                oracle.push(((f.values()[k + 3] - f.values()[k]) / 0.06 / dp).abs());
            }
        }
        assert_eq!(m.len(), oracle.len());
        assert!(m.value.iter().zip(&oracle).all(|(a, b)| rel_close(*a, *b, 1e-12)));
    }

    #[test]
    fn baseline_examples() {
        let zero = ts(vec![0.1; 500]);
        let b = baseline_angle(&zero, &zero, (0.0, 5.0), 9.0).unwrap();
        assert_eq!(b.mean, 0.0);

        let t1 = ts(vec![0.84f64.to_radians(); 500]);
        let t2 = ts(vec![0.0; 500]);
        let b = baseline_angle(&t1, &t2, (1.0, 5.0), 9.0).unwrap();
        assert!((b.mean.to_degrees() - 0.84).abs() < 1e-12);
        assert_eq!(b.pairs, 201);

        assert!(baseline_angle(&t1, &t2, (1.0, 5.0), 4.0).is_err());
        assert!(baseline_angle(&t1, &t2, (1.0, 1.1), 4.0).is_err());
    }

    #[test]
    fn baseline_handles_branch_cut() {
        let t1 = ts(vec![3.1; 100]);
        let t2 = ts(vec![-3.1; 100]);
        let b = baseline_angle(&t1, &t2, (0.0, 1.0), 2.0).unwrap();
        assert!((b.mean - (6.2 - std::f64::consts::TAU)).abs() < 1e-12);
    }

    #[test]
    fn baseline_noise_of_mean() {
        let sigma = 0.001f64.to_radians();
        let oracle = sigma * 2f64.sqrt() / 500f64.sqrt();
        let means: Vec<f64> = (0..400)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(100 + s);
                let mut noise = || sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
                let t1 = ts((0..500).map(|_| noise()).collect());
                let t2 = ts((0..500).map(|_| noise()).collect());
                baseline_angle(&t1, &t2, (0.0, 10.0), 11.0).unwrap().mean
            })
            .collect();
        let s = freq_std(&means).unwrap();
        assert!((s / oracle - 1.0).abs() < 0.1, "{s} vs {oracle}");
    }

    #[test]
    fn rpadd_examples() {
        let t1 = ts(vec![0.5; 20]);
        let p = ts(vec![20e3; 20]);
        let m = rpadd(&t1, &t1, &p, 0.0, 5e3, RpaddDenominator::Instantaneous).unwrap();
        assert!(m.value.iter().all(|v| *v == 0.0));

        let t2 = ts(vec![0.0; 20]);
        let shifted = ts(vec![0.864f64.to_radians(); 20]);
        let p = ts(vec![144e3; 20]);
        let m = rpadd(&shifted, &t2, &p, 0.0, 5e3, RpaddDenominator::Instantaneous).unwrap();
        assert!(m.value.iter().all(|v| rel_close(*v, 0.006, 1e-12)));

        let small = ts(vec![1e3; 20]);
        assert!(matches!(
            rpadd(&shifted, &t2, &small, 0.0, 5e3, RpaddDenominator::Instantaneous),
            Err(Error::NoActiveSamples { candidates: 20 })
        ));
    }

    #[test]
    fn rpadd_matches_brute_force() {
        let (_, p, t1, t2) = random_streams(3, 1000);
        let base = 0.0101;
        for mode in [RpaddDenominator::Instantaneous, RpaddDenominator::Differenced] {
            let m = rpadd(&t1, &t2, &p, base, 5e3, mode).unwrap();
            let mut oracle = Vec::new();
            for k in 0..1000 {
                let dp = match mode {
                    RpaddDenominator::Instantaneous => p.values()[k],
                    RpaddDenominator::Differenced if k == 0 => continue,
                    RpaddDenominator::Differenced => p.values()[k] - p.values()[k - 1],
                };
                if dp.abs() < 5e3 {
                    continue;
                }
                let mut d = t1.values()[k] - t2.values()[k] - base;
                while d > std::f64::consts::PI {
                    d -= std::f64::consts::TAU;
                }
                while d <= -std::f64::consts::PI {
                    d += std::f64::consts::TAU;
                }
                oracle.push((d * 180.0 / std::f64::consts::PI * 1000.0 / dp).abs());
            }
            assert_eq!(m.len(), oracle.len());
            assert!(m.value.iter().zip(&oracle).all(|(a, b)| rel_close(*a, *b, 1e-12)));
        }
    }

    #[test]
    fn cdf_examples() {
        let c = empirical_cdf(&[1.0]).unwrap();
        assert_eq!((c.values(), c.probabilities()), (&[1.0][..], &[1.0][..]));
        let c = empirical_cdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(c.probabilities(), &[1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert!(empirical_cdf(&[]).is_err());
        let dup = empirical_cdf(&[2.0, 2.0, 1.0]).unwrap();
        assert_eq!(dup.eval(2.0), 1.0);
        assert_eq!(dup.median(), 2.0);
    }

    #[test]
    fn cdf_of_uniform_is_close_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let c = empirical_cdf(&u).unwrap();
        let n = c.len() as f64;
        let ks = c
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| ((i + 1) as f64 / n - v).abs().max((v - i as f64 / n).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.03, "ks = {ks}");
    }

    #[test]
    fn dominance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b: Vec<f64> = (0..500).map(|_| rng.random_range(1.0..2.0)).collect();
        let cb = empirical_cdf(&b).unwrap();
        let same = dominance_report(&cb, &cb, 99).unwrap();
        assert_eq!(same.fraction, 0.0);
        assert_eq!(same.median_ratio, 1.0);
        let a: Vec<f64> = b.iter().map(|v| 0.9 * v).collect();
        let r = dominance_report(&empirical_cdf(&a).unwrap(), &cb, 99).unwrap();
        assert_eq!(r.fraction, 1.0);
        assert!((r.median_ratio - 0.9).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn quantile_inverts_cdf(xs in proptest::collection::vec(-1e3..1e3f64, 1..200)) {
            let c = empirical_cdf(&xs).unwrap();
            for (v, p) in c.values().iter().zip(c.probabilities()) {
                prop_assert_eq!(c.quantile(*p), *v);
            }
        }

        #[test]
        fn metrics_scale_with_power(seed in 0u64..1000, c in prop_oneof![Just(0.1), Just(10.0), 0.01..100.0f64]) {
            let (f, p, t1, t2) = random_streams(seed, 200);
            let scaled = ts(p.values().iter().map(|v| c * v).collect());
            let a = rrocof(&f, &p, 0.06, 1e3).unwrap();
            let b = rrocof(&f, &scaled, 0.06, c * 1e3).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.value.iter().zip(&b.value) {
                prop_assert!(rel_close(*y, x / c, 1e-12));
            }
            let a = rpadd(&t1, &t2, &p, 0.01, 5e3, RpaddDenominator::Instantaneous).unwrap();
            let b = rpadd(&t1, &t2, &scaled, 0.01, c * 5e3, RpaddDenominator::Instantaneous).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.value.iter().zip(&b.value) {
                prop_assert!(rel_close(*y, x / c, 1e-12));
            }
        }

        #[test]
        fn rpadd_rejects_common_mode(seed in 0u64..1000, offset in -10.0..10.0f64) {
            let (_, p, t1, t2) = random_streams(seed, 200);
            let shift = |s: &TimeSeries<f64>| ts(s.values().iter().map(|a| wrap_angle(a + offset)).collect());
            let base = baseline_angle(&t1, &t2, (0.0, 1.0), 2.0).unwrap().mean;
            let base_shifted = baseline_angle(&shift(&t1), &shift(&t2), (0.0, 1.0), 2.0).unwrap().mean;
            prop_assert!((base - base_shifted).abs() < 1e-12);
            let a = rpadd(&t1, &t2, &p, base, 5e3, RpaddDenominator::Instantaneous).unwrap();
            let b = rpadd(&shift(&t1), &shift(&t2), &p, base_shifted, 5e3, RpaddDenominator::Instantaneous).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.value.iter().zip(&b.value) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn metric_values_non_negative(seed in 0u64..1000) {
            let (f, p, t1, t2) = random_streams(seed, 100);
            prop_assert!(rrocof(&f, &p, 0.06, 0.0).unwrap().value.iter().all(|v| *v >= 0.0));
            prop_assert!(rpadd(&t1, &t2, &p, 0.0, 0.0, RpaddDenominator::Differenced).unwrap().value.iter().all(|v| *v >= 0.0));
        }
    }
}

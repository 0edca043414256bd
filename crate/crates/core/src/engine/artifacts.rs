use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{compute_metrics, Comparison, MetricsResult, MetricsSummary, RunArtifacts, Scenario};
use crate::error::{Error, Result};
use crate::io::format_sig;
use crate::network::FeederModel;
use crate::pmu::{read_frames_csv, write_frames_csv};

pub const TELEMETRY_HEADER: [&str; 8] = [
    "time_s",
    "p_bess_w",
    "q_bess_var",
    "control_freq_hz",
    "control_angle_deg",
    "soc",
    "mismatch_pu",
    "pll_frozen",
];

/// `config.json` of a run directory: the scenario with defaults filled in
/// and the feeder as resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub scenario_hash: String,
    pub scenario: Scenario,
    pub resolved_feeder: FeederModel,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_metric_files(dir: &Path, metrics: &MetricsResult) -> Result<()> {
    for (name, m) in [("rrocof", &metrics.rrocof), ("rpadd", &metrics.rpadd)] {
        if let Some((series, cdf)) = m {
            series.write_csv(&dir.join(format!("{name}.csv")))?;
            cdf.write_csv(&dir.join(format!("{name}_cdf.csv")))?;
        }
    }
    Ok(())
}

impl RunArtifacts {
    /// Writes everything under `root/<scenario hash>/` and returns that directory.
    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        let dir = root.join(&self.hash);
        fs::create_dir_all(&dir)?;
        let echo = ConfigEcho {
            scenario_hash: self.hash.clone(),
            scenario: self.scenario.clone(),
            resolved_feeder: self.feeder,
        };
        write_json(&dir.join("config.json"), &echo)?;
        for (i, frames) in self.frames.iter().enumerate() {
            write_frames_csv(&dir.join(format!("pmu{i}.csv")), frames)?;
        }
        let mut w = csv::Writer::from_path(dir.join("telemetry.csv"))?;
        w.write_record(TELEMETRY_HEADER)?;
        for s in &self.telemetry {
            w.write_record([
                format_sig(s.t),
                format_sig(s.p_bess),
                format_sig(s.q_bess),
                format_sig(s.control_freq),
                format_sig(s.control_angle.to_degrees()),
                format_sig(s.soc),
                format_sig(s.mismatch_pu),
                if s.pll_frozen { "1" } else { "0" }.to_string(),
            ])?;
        }
        w.flush()?;
        write_metric_files(&dir, &self.metrics)?;
        write_json(&dir.join("summary.json"), &self.summary())?;
        Ok(dir)
    }
}

/// Writes both runs and `root/compare-<hash>/comparison.json`; returns the
/// comparison directory.
pub fn write_comparison(comparison: &Comparison, root: &Path) -> Result<PathBuf> {
    comparison.gfr.write(root)?;
    comparison.gfl.write(root)?;
    let dir = root.join(format!("compare-{}", comparison.report.comparison_hash));
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("comparison.json"), &comparison.report)?;
    Ok(dir)
}

/// `(time_s, p_bess_w)` rows of a telemetry CSV.
pub fn read_telemetry_power(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::TraceRow { row: 1, reason: format!("missing column '{name}'") })
    };
    let (ti, pi) = (col("time_s")?, col("p_bess_w")?);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| {
            let s = rec.get(k).unwrap_or("").trim();
            s.parse::<f64>()
                .map_err(|_| Error::TraceRow { row: i + 2, reason: format!("cannot parse '{s}'") })
        };
        rows.push((parse(ti)?, parse(pi)?));
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct ReplayResult {
    pub scenario: Scenario,
    pub metrics: MetricsResult,
}

impl ReplayResult {
    pub fn summary(&self) -> MetricsSummary {
        self.metrics.summary()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_metric_files(dir, &self.metrics)?;
        write_json(&dir.join("metrics_summary.json"), &self.summary())
    }
}

/// Recomputes metrics from a directory holding `pmu0.csv`, `pmu1.csv`,
/// `pmu2.csv`, `telemetry.csv` and optionally `config.json` (a run echo or a
/// bare scenario; defaults otherwise).
pub fn replay_run_dir(input: &Path) -> Result<ReplayResult> {
    let config = input.join("config.json");
    let scenario = if config.exists() {
        let text = fs::read_to_string(&config)?;
        match serde_json::from_str::<ConfigEcho>(&text) {
            Ok(echo) => echo.scenario,
            Err(_) => Scenario::from_json(&text)?,
        }
    } else {
        Scenario::default()
    };
    let frames = [0, 1, 2].map(|i| read_frames_csv(&input.join(format!("pmu{i}.csv"))));
    let [a, b, c] = frames;
    let frames = [a?, b?, c?];
    let rows = read_telemetry_power(&input.join("telemetry.csv"))?;
    if rows.len() != frames[1].len() {
        return Err(Error::LengthMismatch { expected: frames[1].len(), found: rows.len() });
    }
    let tol = 1e-6 * scenario.pmu.reporting_interval();
    if let Some((k, _)) = rows.iter().zip(&frames[1]).enumerate().find(|(_, (r, f))| (r.0 - f.t).abs() > tol) {
        return Err(Error::TraceRow { row: k + 2, reason: "telemetry time does not match PMU frame time".into() });
    }
    let power: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let metrics = compute_metrics(&frames, &power, &scenario)?;
    Ok(ReplayResult { scenario, metrics })
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::converter::{ControlMode, ConverterParams};
use crate::error::{Error, Result};
use crate::foundation::FeederBases;
use crate::frequency::{load_trace, synthesize, ColumnMap, FrequencyTrace, SynthParams};
use crate::metrics::RpaddDenominator;
use crate::network::{calibrate_sensitivity, FeederModel};
use crate::pmu::{PmuConfig, PmuLocation};

/// Where the bulk-grid frequency comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TraceSource {
    Synth(SynthParams),
    File {
        path: PathBuf,
        #[serde(default)]
        columns: ColumnMap,
        /// Resampling step, s.
        dt: f64,
    },
}

impl Default for TraceSource {
    fn default() -> Self {
        TraceSource::Synth(SynthParams::default())
    }
}

impl TraceSource {
    pub fn load(&self) -> Result<FrequencyTrace> {
        match self {
            TraceSource::Synth(p) => synthesize(p),
            TraceSource::File { path, columns, dt } => load_trace(path, columns, *dt),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeederConfig {
    /// pu on `t1_rating_va`
    pub x_t1_pu: f64,
    pub t1_rating_va: f64,
    /// pu on `s_base`; calibrated from `sensitivity_deg_per_kw` when absent.
    pub x_t2_pu: Option<f64>,
    pub sensitivity_deg_per_kw: f64,
    /// pu on `s_base`
    pub x_filter_pu: f64,
    pub load_p: f64,
    pub pv_p: f64,
    pub s_base: f64,
    pub v_slack: f64,
    pub v_pcc: f64,
    pub v_pbc: f64,
}

impl Default for FeederConfig {
    fn default() -> Self {
        Self {
            x_t1_pu: 0.05,
            t1_rating_va: 20e6,
            x_t2_pu: None,
            sensitivity_deg_per_kw: 0.006,
            x_filter_pu: 0.1,
            load_p: 140e3,
            pv_p: 0.0,
            s_base: 720e3,
            v_slack: 50e3,
            v_pcc: 21e3,
            v_pbc: 300.0,
        }
    }
}

impl FeederConfig {
    /// Builds the feeder, calibrating T2 if no reactance was given.
    pub fn resolve(&self, f0: f64, rated_power_w: f64) -> Result<FeederModel> {
        let bases = FeederBases::new(self.s_base, self.v_slack, self.v_pcc, self.v_pbc, f0)?;
        let mut feeder = FeederModel {
            x_t1: bases.pcc.rebase_impedance(self.x_t1_pu, self.t1_rating_va),
            x_t2: self.x_t2_pu.unwrap_or(FeederModel::default().x_t2),
            x_filter: self.x_filter_pu,
            load_p: self.load_p,
            pv_p: self.pv_p,
            bases,
        };
        feeder.validate()?;
        if self.x_t2_pu.is_none() {
            feeder.x_t2 = calibrate_sensitivity(&feeder, self.sensitivity_deg_per_kw, rated_power_w)?;
        }
        Ok(feeder)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timing {
    pub dt_sim: f64,
    pub activation_time: f64,
    pub baseline_window: [f64; 2],
}

impl Default for Timing {
    fn default() -> Self {
        Self { dt_sim: 1e-3, activation_time: 250.0, baseline_window: [60.0, 240.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmuSetup {
    pub reporting_rate: f64,
    /// degrees
    pub angle_noise_sigma: f64,
    /// Noise seeds of PMU 0 (slack), 1 (PCC) and 2 (PBC).
    pub seeds: [u64; 3],
}

impl Default for PmuSetup {
    fn default() -> Self {
        Self { reporting_rate: 50.0, angle_noise_sigma: 0.001, seeds: [101, 102, 103] }
    }
}

impl PmuSetup {
    pub fn configs(&self) -> [PmuConfig; 3] {
        [PmuLocation::Slack, PmuLocation::Pcc, PmuLocation::Pbc].map(|location| PmuConfig {
            reporting_rate: self.reporting_rate,
            angle_noise_sigma: self.angle_noise_sigma,
            noise_seed: self.seeds[location.index()],
            location,
        })
    }

    pub fn reporting_interval(&self) -> f64 {
        1.0 / self.reporting_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// s
    pub rrocof_window: f64,
    /// W, on the power change over the window
    pub rrocof_p_threshold: f64,
    /// W, on delivered power
    pub rpadd_p_threshold: f64,
    pub rpadd_denominator: RpaddDenominator,
    pub quantile_grid: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            rrocof_window: 0.06,
            rrocof_p_threshold: 50.0,
            rpadd_p_threshold: 5e3,
            rpadd_denominator: RpaddDenominator::Instantaneous,
            quantile_grid: 99,
        }
    }
}

fn default_mode() -> ControlMode {
    ControlMode::Gfr
}

/// Everything a run depends on. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_mode")]
    pub mode: ControlMode,
    #[serde(default)]
    pub trace: TraceSource,
    #[serde(default)]
    pub feeder: FeederConfig,
    #[serde(default)]
    pub converter: ConverterParams,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default)]
    pub pmu: PmuSetup,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

impl Default for Scenario {
    /// The hour-transition benchmark.
    fn default() -> Self {
        Self {
            mode: default_mode(),
            trace: TraceSource::default(),
            feeder: FeederConfig::default(),
            converter: ConverterParams::default(),
            timing: Timing::default(),
            pmu: PmuSetup::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut s = Self::from_json(&text)?;
        // trace files are relative to the config
        if let TraceSource::File { path: trace, .. } = &mut s.trace {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Hex SHA-256 prefix of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn f0(&self) -> f64 {
        self.converter.f0
    }

    /// Same scenario with every seed replaced by ones derived from `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let TraceSource::Synth(p) = &mut self.trace {
            p.seed = seed;
        }
        self.pmu.seeds = [1, 2, 3].map(|i| seed.wrapping_add(i));
        self
    }

    pub fn with_mode(mut self, mode: ControlMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.converter.validate()?;
        if let TraceSource::Synth(p) = &self.trace {
            p.validate()?;
            if p.f0 != self.converter.f0 {
                return Err(Error::Config(format!(
                    "trace nominal frequency {} differs from converter nominal {}",
                    p.f0, self.converter.f0
                )));
            }
        }
        let t = &self.timing;
        if !(t.dt_sim > 0.0 && t.dt_sim.is_finite()) {
            return Err(Error::Config(format!("dt_sim must be > 0, got {}", t.dt_sim)));
        }
        let [ta, tb] = t.baseline_window;
        if !(ta >= 0.0 && ta < tb) {
            return Err(Error::Config(format!("baseline window [{ta}, {tb}] is empty")));
        }
        if tb >= t.activation_time {
            return Err(Error::Config(format!(
                "baseline window must end before activation ({tb} >= {})",
                t.activation_time
            )));
        }
        for cfg in self.pmu.configs() {
            cfg.validate()?;
            cfg.decimation(t.dt_sim).map_err(|e| Error::Config(e.to_string()))?;
        }
        let m = &self.metrics;
        if m.quantile_grid == 0 || !(m.rrocof_window > 0.0) || !(m.rrocof_p_threshold >= 0.0) || !(m.rpadd_p_threshold >= 0.0) {
            return Err(Error::Config("metric window, thresholds and grid must be positive".into()));
        }
        let frames = m.rrocof_window * self.pmu.reporting_rate;
        if (frames - frames.round()).abs() > 1e-6 || frames.round() < 1.0 {
            return Err(Error::Config(format!(
                "rRoCoF window {} s is not a whole number of frames",
                m.rrocof_window
            )));
        }
        Ok(())
    }
}

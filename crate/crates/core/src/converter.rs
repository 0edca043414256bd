//! Grid-forming and grid-following control laws for the battery converter,
//! plus rating and state-of-charge limits.
//!
//! Both controllers are pure state transitions advanced with a fixed step.
//! The grid-forming law integrates a power-frequency droop into the angle of
//! an internal voltage source. The grid-following law estimates the PBC
//! voltage angle with a synchronous-reference-frame PLL, turns the frequency
//! estimate into a power set-point, and passes it through a first-order
//! actuation lag.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foundation::{wrap_angle, Phasor, NOMINAL_FREQUENCY_HZ};

/// Below this PBC voltage (pu) the PLL holds its state.
pub const PLL_MIN_VOLTAGE_PU: f64 = 0.1;

/// Extra droop slope applied to power outside the allowed window, as a
/// multiple of the regulation droop.
const LIMIT_DROOP_GAIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    Gfr,
    Gfl,
    Off,
}

impl std::fmt::Display for ControlMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ControlMode::Gfr => "gfr",
            ControlMode::Gfl => "gfl",
            ControlMode::Off => "off",
        })
    }
}

impl std::str::FromStr for ControlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gfr" => Ok(ControlMode::Gfr),
            "gfl" => Ok(ControlMode::Gfl),
            "off" => Ok(ControlMode::Off),
            other => Err(Error::invalid(format!("unknown control mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConverterParams {
    /// VA
    pub s_rated: f64,
    /// Wh
    pub e_cap: f64,
    /// W/Hz
    pub droop: f64,
    /// W
    pub p0: f64,
    /// rad/s
    pub gfr_power_filter_cutoff: f64,
    /// Internal voltage magnitude of the grid-forming source, pu.
    pub gfr_e_mag: f64,
    /// rad/s per rad
    pub gfl_pll_kp: f64,
    /// rad/s^2 per rad
    pub gfl_pll_ki: f64,
    /// Actuation lag of the grid-following power loop, s.
    pub gfl_current_lag_tau: f64,
    /// Hz
    pub deadband: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_initial: f64,
    pub f0: f64,
}

impl Default for ConverterParams {
    fn default() -> Self {
        Self {
            s_rated: 720e3,
            e_cap: 500e3,
            droop: 1.44e6,
            p0: 0.0,
            gfr_power_filter_cutoff: TAU * 5.0,
            gfr_e_mag: 1.0,
            gfl_pll_kp: 157.0,
            gfl_pll_ki: 4935.0,
            gfl_current_lag_tau: 0.5,
            deadband: 0.0,
            soc_min: 0.1,
            soc_max: 0.9,
            soc_initial: 0.5,
            f0: NOMINAL_FREQUENCY_HZ,
        }
    }
}

impl ConverterParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("s_rated", self.s_rated),
            ("e_cap", self.e_cap),
            ("droop", self.droop),
            ("gfr_power_filter_cutoff", self.gfr_power_filter_cutoff),
            ("gfr_e_mag", self.gfr_e_mag),
            ("f0", self.f0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("converter {name} must be > 0, got {v}")));
            }
        }
        if !(self.gfl_current_lag_tau >= 0.0) || !(self.deadband >= 0.0) {
            return Err(Error::invalid("lag and deadband must be >= 0"));
        }
        if !(self.gfl_pll_kp >= 0.0 && self.gfl_pll_ki >= 0.0) {
            return Err(Error::invalid("PLL gains must be >= 0"));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0)
            || !(self.soc_min..=self.soc_max).contains(&self.soc_initial)
        {
            return Err(Error::invalid("need 0 <= soc_min <= soc_initial <= soc_max <= 1"));
        }
        if !self.p0.is_finite() || self.p0.abs() > self.s_rated {
            return Err(Error::invalid("p0 must lie within the rating"));
        }
        Ok(())
    }
}

/// Allowed converter power for the next step, W.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerWindow {
    pub min: f64,
    pub max: f64,
}

impl PowerWindow {
    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BessState {
    pub soc: f64,
}

impl BessState {
    pub fn new(soc: f64) -> Self {
        Self { soc }
    }

    /// Power range that keeps the rating and the SOC band over a step `dt`.
    /// Injection (positive) discharges.
    pub fn power_window(&self, dt: f64, params: &ConverterParams) -> PowerWindow {
        let joules_per_soc = 3600.0 * params.e_cap;
        let discharge = ((self.soc - params.soc_min).max(0.0) * joules_per_soc / dt).min(params.s_rated);
        let charge = ((params.soc_max - self.soc).max(0.0) * joules_per_soc / dt).min(params.s_rated);
        PowerWindow { min: -charge, max: discharge }
    }

    /// Books `p` W over `dt` s without limiting.
    pub fn exchange(&self, p: f64, dt: f64, params: &ConverterParams) -> Self {
        Self { soc: self.soc - p * dt / (3600.0 * params.e_cap) }
    }
}

/// Clamps a power request to the rating and the SOC band and books the
/// energy. Positive power is injection toward the PCC and discharges.
pub fn apply_limits(p_requested: f64, bess: BessState, dt: f64, params: &ConverterParams) -> (f64, BessState) {
    let p = bess.power_window(dt, params).clamp(p_requested);
    (p, bess.exchange(p, dt, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfrState {
    /// Internal voltage angle in the nominal frame, rad.
    pub theta_c: f64,
    /// Low-pass filtered measured power, W.
    pub p_filt: f64,
    pub e_mag: f64,
    /// Internal frequency imposed during the last step, Hz.
    pub f_c: f64,
}

impl GfrState {
    pub fn new(theta_c: f64, params: &ConverterParams) -> Self {
        Self { theta_c, p_filt: 0.0, e_mag: params.gfr_e_mag, f_c: params.f0 }
    }
}

/// One step of the angle droop: `f_c = f0 - (P_filt - p0)/D`, integrated into
/// the internal angle. Power outside `window` is pulled back by a steeper
/// droop.
pub fn gfr_step(state: GfrState, p_meas: f64, dt: f64, params: &ConverterParams, window: PowerWindow) -> GfrState {
    let p_filt = (state.p_filt + dt * params.gfr_power_filter_cutoff * (p_meas - state.p_filt))
        .clamp(-params.s_rated, params.s_rated);
    let excess = p_meas - window.clamp(p_meas);
    let df = -(p_filt - params.p0) / params.droop - LIMIT_DROOP_GAIN * excess / params.droop;
    GfrState {
        theta_c: state.theta_c + dt * TAU * df,
        p_filt,
        e_mag: state.e_mag,
        f_c: params.f0 + df,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GflState {
    pub theta_pll: f64,
    /// Estimated grid speed deviation from nominal, rad/s.
    pub omega_pll: f64,
    pub pll_integrator: f64,
    pub p_cmd: f64,
    pub p_out: f64,
    /// Set while the PLL holds because of undervoltage.
    pub frozen: bool,
}

impl GflState {
    pub fn locked_to(theta: f64) -> Self {
        Self { theta_pll: theta, omega_pll: 0.0, pll_integrator: 0.0, p_cmd: 0.0, p_out: 0.0, frozen: false }
    }

    pub fn frequency(&self, f0: f64) -> f64 {
        f0 + self.omega_pll / TAU
    }
}

/// SRF-PLL update on the PBC voltage phasor.
pub fn gfl_pll_step(state: GflState, v_pbc: Phasor, dt: f64, params: &ConverterParams) -> GflState {
    if v_pbc.magnitude <= PLL_MIN_VOLTAGE_PU {
        return GflState { frozen: true, ..state };
    }
    let err = wrap_angle(v_pbc.angle - state.theta_pll);
    let integrator = state.pll_integrator + params.gfl_pll_ki * err * dt;
    let omega = params.gfl_pll_kp * err + integrator;
    GflState {
        theta_pll: state.theta_pll + omega * dt,
        omega_pll: omega,
        pll_integrator: integrator,
        frozen: false,
        ..state
    }
}

/// Frequency deviation seen by the droop: zero inside `±deadband`, the raw
/// deviation outside it.
pub fn deadband_applied(deviation: f64, deadband: f64) -> f64 {
    if deviation.abs() <= deadband {
        0.0
    } else {
        deviation
    }
}

/// Droop set-point from the PLL frequency, then the actuation lag.
pub fn gfl_droop_step(state: GflState, dt: f64, params: &ConverterParams) -> GflState {
    let dev = deadband_applied(state.frequency(params.f0) - params.f0, params.deadband);
    let p_cmd = params.p0 - params.droop * dev;
    let blend = if params.gfl_current_lag_tau > 0.0 {
        1.0 - (-dt / params.gfl_current_lag_tau).exp()
    } else {
        1.0
    };
    GflState { p_cmd, p_out: state.p_out + blend * (p_cmd - state.p_out), ..state }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::angle::wrap_angle;
use super::NOMINAL_FREQUENCY_HZ;

/// Positive-sequence phasor in per-unit with an unwrapped angle (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phasor {
    pub magnitude: f64,
    pub angle: f64,
}

impl Phasor {
    pub fn new(magnitude: f64, angle: f64) -> Result<Self> {
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::invalid(format!("phasor magnitude must be finite and >= 0, got {magnitude}")));
        }
        if !angle.is_finite() {
            return Err(Error::invalid("phasor angle must be finite"));
        }
        Ok(Self { magnitude, angle })
    }

    pub fn unit(angle: f64) -> Self {
        Self { magnitude: 1.0, angle }
    }

    pub fn re(&self) -> f64 {
        self.magnitude * self.angle.cos()
    }

    pub fn im(&self) -> f64 {
        self.magnitude * self.angle.sin()
    }

    pub fn wrapped_angle(&self) -> f64 {
        wrap_angle(self.angle)
    }
}

/// Base quantities of one voltage zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerUnitBase {
    /// VA
    pub s_base: f64,
    /// V, line-to-line
    pub v_base: f64,
    /// Hz
    pub f0: f64,
}

impl PerUnitBase {
    pub fn new(s_base: f64, v_base: f64, f0: f64) -> Result<Self> {
        for (name, v) in [("s_base", s_base), ("v_base", v_base), ("f0", f0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be strictly positive, got {v}")));
            }
        }
        Ok(Self { s_base, v_base, f0 })
    }

    pub fn z_base(&self) -> f64 {
        self.v_base * self.v_base / self.s_base
    }

    pub fn power_to_pu(&self, watts: f64) -> f64 {
        watts / self.s_base
    }

    pub fn power_from_pu(&self, pu: f64) -> f64 {
        pu * self.s_base
    }

    /// Converts a reactance given in per-unit of a device rating (same voltage
    /// base) to per-unit of this base.
    pub fn rebase_impedance(&self, z_pu_on_rating: f64, rating_va: f64) -> f64 {
        z_pu_on_rating * self.s_base / rating_va
    }
}

/// The three voltage zones of the feeder, all sharing one power base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeederBases {
    pub slack: PerUnitBase,
    pub pcc: PerUnitBase,
    pub pbc: PerUnitBase,
}

impl FeederBases {
    pub fn new(s_base: f64, slack_v: f64, pcc_v: f64, pbc_v: f64, f0: f64) -> Result<Self> {
        Ok(Self {
            slack: PerUnitBase::new(s_base, slack_v, f0)?,
            pcc: PerUnitBase::new(s_base, pcc_v, f0)?,
            pbc: PerUnitBase::new(s_base, pbc_v, f0)?,
        })
    }

    pub fn s_base(&self) -> f64 {
        self.pbc.s_base
    }

    pub fn f0(&self) -> f64 {
        self.pbc.f0
    }
}

impl Default for FeederBases {
    /// 720 kVA power base; 50 kV, 21 kV and 0.3 kV zones.
    fn default() -> Self {
        Self::new(720e3, 50e3, 21e3, 300.0, NOMINAL_FREQUENCY_HZ).expect("valid defaults")
    }
}

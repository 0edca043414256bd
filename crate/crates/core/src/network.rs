//! Quasi-static phasor model of the radial feeder
//!
//! ```text
//! slack (50 kV) --x_t1-- PCC (21 kV) --x_t2-- PBC (0.3 kV) [--x_filter-- E∠θc]
//!                                              |
//!                                        load, PV, GFL injection
//! ```
//!
//! The series path is purely reactive. The grid-forming converter appears as
//! an ideal voltage source behind its coupling reactance; the grid-following
//! converter as a PQ injection at the PBC. PCC and PBC voltages are found by
//! Newton-Raphson in polar coordinates.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foundation::{FeederBases, Phasor};

pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Largest power mismatch (pu) accepted as converged.
pub const NEWTON_TOLERANCE: f64 = 1e-10;

/// Radial three-bus feeder, reactances in pu on `bases.s_base()`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeederModel {
    pub x_t1: f64,
    pub x_t2: f64,
    /// Converter coupling (filter) reactance, used by voltage-source boundaries.
    pub x_filter: f64,
    /// Building consumption at the PBC, W (positive = consumption).
    pub load_p: f64,
    /// PV injection at the PBC, W.
    pub pv_p: f64,
    pub bases: FeederBases,
}

impl Default for FeederModel {
    /// 50/21 kV transformer of 0.05 pu on 20 MVA, T2 at its small-signal
    /// 0.006 deg/kW estimate (see [`calibrate_sensitivity`] for the exact
    /// value), 0.1 pu filter, 140 kW load, no PV.
    fn default() -> Self {
        let bases = FeederBases::default();
        Self {
            x_t1: bases.pcc.rebase_impedance(0.05, 20e6),
            x_t2: 0.006_f64.to_radians() * bases.s_base() / 1e3,
            x_filter: 0.1,
            load_p: 140e3,
            pv_p: 0.0,
            bases,
        }
    }
}

impl FeederModel {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("x_t1", self.x_t1), ("x_t2", self.x_t2), ("x_filter", self.x_filter)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::invalid(format!("{name} must be > 0, got {x}")));
            }
        }
        if !self.load_p.is_finite() || !self.pv_p.is_finite() {
            return Err(Error::invalid("load and PV power must be finite"));
        }
        Ok(())
    }

    fn s_base(&self) -> f64 {
        self.bases.s_base()
    }
}

/// What the converter imposes on the PBC during one network solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConverterBoundary {
    /// Internal voltage `e` (pu) at angle `theta` (rad, nominal frame) behind
    /// the coupling reactance.
    VoltageSource { e: f64, theta: f64 },
    /// Injection into the PBC, W and var.
    PowerSource { p: f64, q: f64 },
}

impl ConverterBoundary {
    pub fn idle() -> Self {
        ConverterBoundary::PowerSource { p: 0.0, q: 0.0 }
    }
}

/// Network solution at one instant. Powers in W, positive toward the PCC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusState {
    pub v_slack: Phasor,
    pub v_pcc: Phasor,
    pub v_pbc: Phasor,
    /// Composite flow from the PBC side into the PCC (`G`).
    pub p_g: f64,
    /// Converter injection (`P`).
    pub p_bess: f64,
    pub q_bess: f64,
    /// Building consumption (`L`, consumption positive).
    pub p_load: f64,
    /// Largest nodal power mismatch at convergence, pu.
    pub residual: f64,
    /// Power entering at the slack plus all other injections, pu. Zero for a
    /// lossless network.
    pub slack_balance: f64,
}

impl BusState {
    /// `theta_PCC - theta_PBC`, rad.
    pub fn angle_difference(&self) -> f64 {
        self.v_pcc.angle - self.v_pbc.angle
    }

    /// `|G - (P + PV - L)|`, pu of `s_base`.
    pub fn power_mismatch(&self, pv_p: f64, s_base: f64) -> f64 {
        ((self.p_g - (self.p_bess + pv_p - self.p_load)) / s_base).abs()
    }
}

// Unknown vector layout: [theta_pcc, theta_pbc, v_pcc, v_pbc], angles relative
// to the slack.
type State = Vector4<f64>;

struct Layout {
    b1: f64,
    b2: f64,
    bf: f64,
    v_slack: f64,
    /// Converter internal voltage and relative angle, if a voltage source.
    source: Option<(f64, f64)>,
    p_spec: f64,
    q_spec: f64,
}

impl Layout {
    fn new(feeder: &FeederModel, v_slack: Phasor, boundary: ConverterBoundary) -> Self {
        let s = feeder.s_base();
        let (source, p_inj, q_inj) = match boundary {
            ConverterBoundary::VoltageSource { e, theta } => (Some((e, theta - v_slack.angle)), 0.0, 0.0),
            ConverterBoundary::PowerSource { p, q } => (None, p, q),
        };
        Self {
            b1: 1.0 / feeder.x_t1,
            b2: 1.0 / feeder.x_t2,
            bf: 1.0 / feeder.x_filter,
            v_slack: v_slack.magnitude,
            source,
            p_spec: (p_inj + feeder.pv_p - feeder.load_p) / s,
            q_spec: q_inj / s,
        }
    }

    /// Neighbours of PCC (index 0) and PBC (index 1): (magnitude, angle, b, unknown index).
    fn neighbours(&self, x: &State, bus: usize) -> [(f64, f64, f64, Option<usize>); 2] {
        match bus {
            0 => [(self.v_slack, 0.0, self.b1, None), (x[3], x[1], self.b2, Some(1))],
            _ => {
                let conv = match self.source {
                    Some((e, th)) => (e, th, self.bf, None),
                    None => (0.0, 0.0, 0.0, None),
                };
                [(x[2], x[0], self.b2, Some(0)), conv]
            }
        }
    }

    fn mismatch_and_jacobian(&self, x: &State) -> (State, Matrix4<f64>) {
        let mut f = State::zeros();
        let mut j = Matrix4::zeros();
        for bus in 0..2 {
            let (th_i, v_i) = (x[bus], x[2 + bus]);
            let (mut p, mut q) = (0.0, 0.0);
            for (v_k, th_k, b, unknown) in self.neighbours(x, bus) {
                if b == 0.0 {
                    continue;
                }
                let (s, c) = (th_i - th_k).sin_cos();
                p += v_i * v_k * b * s;
                q += v_i * v_i * b - v_i * v_k * b * c;

                j[(bus, bus)] += v_i * v_k * b * c;
                j[(bus, 2 + bus)] += v_k * b * s;
                j[(2 + bus, bus)] += v_i * v_k * b * s;
                j[(2 + bus, 2 + bus)] += 2.0 * v_i * b - v_k * b * c;
                if let Some(k) = unknown {
                    j[(bus, k)] -= v_i * v_k * b * c;
                    j[(bus, 2 + k)] += v_i * b * s;
                    j[(2 + bus, k)] -= v_i * v_k * b * s;
                    j[(2 + bus, 2 + k)] -= v_i * b * c;
                }
            }
            let (p_spec, q_spec) = if bus == 0 { (0.0, 0.0) } else { (self.p_spec, self.q_spec) };
            f[bus] = p - p_spec;
            f[2 + bus] = q - q_spec;
        }
        (f, j)
    }
}

fn flat_start() -> State {
    State::new(0.0, 0.0, 1.0, 1.0)
}

/// Solves the feeder for one instant from a flat start.
pub fn solve_step(feeder: &FeederModel, v_slack: Phasor, boundary: ConverterBoundary) -> Result<BusState> {
    solve_from(feeder, v_slack, boundary, flat_start()).map(|(s, _)| s)
}

fn solve_from(
    feeder: &FeederModel,
    v_slack: Phasor,
    boundary: ConverterBoundary,
    mut x: State,
) -> Result<(BusState, State)> {
    let layout = Layout::new(feeder, v_slack, boundary);
    let mut residual = f64::INFINITY;
    for _ in 0..=MAX_NEWTON_ITERATIONS {
        let (f, j) = layout.mismatch_and_jacobian(&x);
        residual = f.amax();
        if !residual.is_finite() {
            break;
        }
        if residual < NEWTON_TOLERANCE {
            return Ok((assemble(feeder, &layout, v_slack, &x, residual), x));
        }
        let Some(step) = j.lu().solve(&(-f)) else { break };
        x += step;
    }
    Err(Error::NonConvergence { iterations: MAX_NEWTON_ITERATIONS, residual })
}

fn assemble(feeder: &FeederModel, l: &Layout, v_slack: Phasor, x: &State, residual: f64) -> BusState {
    let s = feeder.s_base();
    let (th1, th2, v1, v2) = (x[0], x[1], x[2], x[3]);
    let p_slack = l.v_slack * v1 * l.b1 * (-th1).sin();
    let p_g = v2 * v1 * l.b2 * (th2 - th1).sin();
    let (p_bess, q_bess) = match l.source {
        Some((e, th_c)) => {
            let (sn, cs) = (th_c - th2).sin_cos();
            (e * v2 * l.bf * sn, (e * e - e * v2 * cs) * l.bf)
        }
        None => (l.p_spec + (feeder.load_p - feeder.pv_p) / s, l.q_spec),
    };
    let net = p_bess + (feeder.pv_p - feeder.load_p) / s;
    BusState {
        v_slack,
        v_pcc: Phasor { magnitude: v1, angle: v_slack.angle + th1 },
        v_pbc: Phasor { magnitude: v2, angle: v_slack.angle + th2 },
        p_g: p_g * s,
        p_bess: p_bess * s,
        q_bess: q_bess * s,
        p_load: feeder.load_p,
        residual,
        slack_balance: p_slack + net,
    }
}

/// Warm-started solver for a time loop; each call still converges to the
/// same tolerance as [`solve_step`].
#[derive(Debug, Clone, Default)]
pub struct NetworkSolver {
    guess: Option<State>,
}

impl NetworkSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, feeder: &FeederModel, v_slack: Phasor, boundary: ConverterBoundary) -> Result<BusState> {
        let start = self.guess.unwrap_or_else(flat_start);
        let result = solve_from(feeder, v_slack, boundary, start)
            .or_else(|_| solve_from(feeder, v_slack, boundary, flat_start()));
        let (state, x) = result?;
        self.guess = Some(x);
        Ok(state)
    }

    /// Solves without updating the warm start (trial evaluations).
    pub fn probe(&self, feeder: &FeederModel, v_slack: Phasor, boundary: ConverterBoundary) -> Result<BusState> {
        let start = self.guess.unwrap_or_else(flat_start);
        solve_from(feeder, v_slack, boundary, start)
            .or_else(|_| solve_from(feeder, v_slack, boundary, flat_start()))
            .map(|(s, _)| s)
    }
}

/// `theta_PMU1 - theta_PMU2` in degrees for a steady converter injection `p_bess` (W).
pub fn angle_difference_deg(feeder: &FeederModel, p_bess: f64) -> Result<f64> {
    let st = solve_step(feeder, Phasor::unit(0.0), ConverterBoundary::PowerSource { p: p_bess, q: 0.0 })?;
    Ok(st.angle_difference().to_degrees())
}

fn sensitivity_deg_per_kw(feeder: &FeederModel) -> Result<f64> {
    let h = 1e3;
    let up = angle_difference_deg(feeder, h)?;
    let down = angle_difference_deg(feeder, -h)?;
    // injection lowers theta_PCC - theta_PBC
    Ok(-(up - down) / (2.0 * h / 1e3))
}

/// Finds the PCC-PBC reactance (pu) for which the angle difference moves by
/// `target_deg_per_kw` per kW of converter injection around zero injection.
///
/// Secant iteration on the full nonlinear solver, converged to 1e-9 relative.
/// Fails if the calibrated feeder would need more than 45 degrees across T2 at
/// `rated_power_w`.
pub fn calibrate_sensitivity(feeder: &FeederModel, target_deg_per_kw: f64, rated_power_w: f64) -> Result<f64> {
    if !(target_deg_per_kw > 0.0 && target_deg_per_kw.is_finite()) {
        return Err(Error::Calibration(format!("target must be > 0, got {target_deg_per_kw}")));
    }
    let rated_kw = rated_power_w / 1e3;
    if target_deg_per_kw * rated_kw >= 45.0 {
        return Err(Error::Calibration(format!(
            "{target_deg_per_kw} deg/kW implies {:.1} deg at rated power (limit 45 deg)",
            target_deg_per_kw * rated_kw
        )));
    }
    let residual = |x: f64| -> Result<f64> {
        let f = FeederModel { x_t2: x, ..*feeder };
        Ok(sensitivity_deg_per_kw(&f)? - target_deg_per_kw)
    };

    // delta ≈ P·X at 1 pu
    let mut x0 = target_deg_per_kw.to_radians() * feeder.s_base() / 1e3;
    let mut r0 = residual(x0)?;
    let mut x1 = x0 * target_deg_per_kw / (r0 + target_deg_per_kw);
    for _ in 0..30 {
        let r1 = residual(x1)?;
        if (r1 / target_deg_per_kw).abs() < 1e-9 {
            let calibrated = FeederModel { x_t2: x1, ..*feeder };
            let swing = angle_difference_deg(&calibrated, rated_power_w)
                .map_err(|e| Error::Calibration(format!("calibrated feeder infeasible at rated power: {e}")))?
                - angle_difference_deg(&calibrated, 0.0)?;
            if swing.abs() >= 45.0 {
                return Err(Error::Calibration(format!("{swing:.1} deg swing at rated power")));
            }
            return Ok(x1);
        }
        let slope = (r1 - r0) / (x1 - x0);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        (x0, r0) = (x1, r1);
        x1 -= r1 / slope;
        if !(x1 > 0.0) {
            break;
        }
    }
    Err(Error::Calibration("secant iteration did not converge".into()))
}

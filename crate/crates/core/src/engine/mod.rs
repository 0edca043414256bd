//! Scenario orchestration: fixed-step co-simulation of the converter and the
//! feeder, PMU sampling, and the metrics pipeline.
//!
//! Each step advances the slack angle from the frequency trace, advances the
//! active controller, solves the network and records the result. The
//! grid-forming controller is advanced explicitly from the previous step's
//! measured power. The grid-following PLL sees the PBC angle that its own
//! injection shifts, so its update and the network solve are resolved
//! together as a scalar fixed point on the injected power.

mod artifacts;
mod scenario;

pub use artifacts::{read_telemetry_power, replay_run_dir, write_comparison, ConfigEcho, ReplayResult};
pub use scenario::{FeederConfig, MetricsConfig, PmuSetup, Scenario, Timing, TraceSource};

use serde::{Deserialize, Serialize};

use crate::converter::{
    apply_limits, gfl_droop_step, gfl_pll_step, gfr_step, BessState, ControlMode, ConverterParams, GflState, GfrState,
};
use crate::error::{Error, Result};
use crate::foundation::{Phasor, TimeSeries};
use crate::frequency::slack_angle;
use crate::io::quantize;
use crate::metrics::{
    baseline_angle, dominance_report, empirical_cdf, freq_std, ifd, rpadd, rrocof, Baseline, Cdf, DominanceReport,
    MetricSeries,
};
use crate::network::{BusState, ConverterBoundary, FeederModel, NetworkSolver};
use crate::pmu::{estimate_frequency, sample, PmuFrame};

const FIXED_POINT_MAX_ITERATIONS: usize = 30;

/// Converter telemetry at a PMU reporting instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub t: f64,
    pub p_bess: f64,
    pub q_bess: f64,
    /// Controller frequency: internal (GFR), PLL estimate (GFL) or nominal.
    pub control_freq: f64,
    /// Internal voltage angle (GFR) or PLL angle (GFL), rad.
    pub control_angle: f64,
    pub soc: f64,
    /// Largest network power mismatch since the previous sample, pu.
    pub mismatch_pu: f64,
    pub pll_frozen: bool,
}

/// Bus phasors at the PMU reporting instants.
#[derive(Debug, Clone, PartialEq)]
pub struct BusTimelines {
    pub slack: TimeSeries<Phasor>,
    pub pcc: TimeSeries<Phasor>,
    pub pbc: TimeSeries<Phasor>,
}

impl BusTimelines {
    /// Noiseless `theta_PCC - theta_PBC` in degrees.
    pub fn angle_difference_deg(&self) -> Vec<f64> {
        self.pcc.values().iter().zip(self.pbc.values()).map(|(a, b)| (a.angle - b.angle).to_degrees()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    /// Largest per-step `|G - (P + PV - L)|` or slack imbalance, pu.
    pub max_power_mismatch_pu: f64,
    pub soc_initial: f64,
    pub soc_final: f64,
    /// Integral of converter power over the run, J.
    pub energy_delivered_j: f64,
    /// `|dSOC + E/(3600 e_cap)|` relative to the booked energy.
    pub soc_energy_relative_error: f64,
    pub pll_freeze_steps: usize,
    pub final_p_bess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub median: f64,
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
    pub samples: usize,
    pub candidates: usize,
    pub retained_fraction: f64,
}

impl SeriesSummary {
    fn of(series: &MetricSeries, cdf: &Cdf) -> Self {
        Self {
            median: cdf.median(),
            mean: series.value.iter().sum::<f64>() / series.len() as f64,
            p10: cdf.quantile(0.1),
            p90: cdf.quantile(0.9),
            samples: series.len(),
            candidates: series.candidates,
            retained_fraction: series.retained_fraction,
        }
    }
}

/// Metric values computed from PMU frames and power telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsResult {
    /// Hz, over all three PMUs after activation.
    pub ifd: f64,
    /// Hz, per PMU after activation.
    pub freq_std: [f64; 3],
    pub baseline: Baseline,
    /// Hz/s/W
    pub rrocof: Option<(MetricSeries, Cdf)>,
    /// deg/kW
    pub rpadd: Option<(MetricSeries, Cdf)>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub ifd_hz: f64,
    pub freq_std_hz: [f64; 3],
    pub baseline_deg: f64,
    pub baseline_std_deg: f64,
    pub baseline_pairs: usize,
    /// Hz/s/W
    pub rrocof: Option<SeriesSummary>,
    /// deg/kW
    pub rpadd: Option<SeriesSummary>,
    pub notes: Vec<String>,
}

impl MetricsResult {
    pub fn summary(&self) -> MetricsSummary {
        MetricsSummary {
            ifd_hz: self.ifd,
            freq_std_hz: self.freq_std,
            baseline_deg: self.baseline.mean.to_degrees(),
            baseline_std_deg: self.baseline.std.to_degrees(),
            baseline_pairs: self.baseline.pairs,
            rrocof: self.rrocof.as_ref().map(|(s, c)| SeriesSummary::of(s, c)),
            rpadd: self.rpadd.as_ref().map(|(s, c)| SeriesSummary::of(s, c)),
            notes: self.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario_hash: String,
    pub mode: ControlMode,
    pub x_t2_pu: f64,
    pub metrics: MetricsSummary,
    pub stats: RunStats,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub hash: String,
    pub scenario: Scenario,
    pub feeder: FeederModel,
    pub timelines: BusTimelines,
    pub telemetry: Vec<TelemetrySample>,
    /// PMU 0, 1, 2 as emitted.
    pub frames: [Vec<PmuFrame>; 3],
    pub metrics: MetricsResult,
    pub stats: RunStats,
}

impl RunArtifacts {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            scenario_hash: self.hash.clone(),
            mode: self.scenario.mode,
            x_t2_pu: self.feeder.x_t2,
            metrics: self.metrics.summary(),
            stats: self.stats,
        }
    }

    /// Converter power at the frame instants, as emitted.
    pub fn emitted_power(&self) -> Vec<f64> {
        self.telemetry.iter().map(|s| quantize(s.p_bess)).collect()
    }
}

enum Controller {
    Off,
    Gfr(GfrState),
    Gfl(GflState),
}

struct StepOutcome {
    bus: BusState,
    control_freq: f64,
    control_angle: f64,
    pll_frozen: bool,
}

struct Loop<'a> {
    feeder: &'a FeederModel,
    params: &'a ConverterParams,
    dt: f64,
    solver: NetworkSolver,
    controller: Controller,
    bess: BessState,
    /// Converter power measured at the previous step.
    p_prev: f64,
}

impl Loop<'_> {
    fn step(&mut self, v_slack: Phasor, active: bool) -> Result<StepOutcome> {
        let (feeder, params, dt) = (self.feeder, self.params, self.dt);
        match &mut self.controller {
            Controller::Off => {
                let bus = self.solver.solve(feeder, v_slack, ConverterBoundary::idle())?;
                Ok(StepOutcome { bus, control_freq: params.f0, control_angle: bus.v_pbc.angle, pll_frozen: false })
            }
            Controller::Gfr(state) => {
                if !active {
                    let bus = self.solver.solve(feeder, v_slack, ConverterBoundary::idle())?;
                    *state = GfrState { theta_c: bus.v_pbc.angle, ..GfrState::new(0.0, params) };
                    return Ok(StepOutcome { bus, control_freq: params.f0, control_angle: state.theta_c, pll_frozen: false });
                }
                let window = self.bess.power_window(dt, params);
                *state = gfr_step(*state, self.p_prev, dt, params, window);
                let bus = self.solver.solve(feeder, v_slack, ConverterBoundary::VoltageSource { e: state.e_mag, theta: state.theta_c })?;
                self.bess = self.bess.exchange(bus.p_bess, dt, params);
                Ok(StepOutcome { bus, control_freq: state.f_c, control_angle: state.theta_c, pll_frozen: false })
            }
            Controller::Gfl(state) => {
                if !active {
                    let bus = self.solver.solve(feeder, v_slack, ConverterBoundary::idle())?;
                    *state = gfl_pll_step(*state, bus.v_pbc, dt, params);
                    return Ok(StepOutcome {
                        bus,
                        control_freq: state.frequency(params.f0),
                        control_angle: state.theta_pll,
                        pll_frozen: state.frozen,
                    });
                }
                let (p, next, bess) = gfl_implicit(&self.solver, feeder, params, v_slack, *state, self.bess, dt)?;
                let bus = self.solver.solve(feeder, v_slack, ConverterBoundary::PowerSource { p, q: 0.0 })?;
                *state = next;
                self.bess = bess;
                Ok(StepOutcome {
                    bus,
                    control_freq: state.frequency(params.f0),
                    control_angle: state.theta_pll,
                    pll_frozen: state.frozen,
                })
            }
        }
    }
}

/// Finds the injection `p` for which the PLL, droop, lag and limits driven by
/// the network solved at `p` return `p` again.
fn gfl_implicit(
    solver: &NetworkSolver,
    feeder: &FeederModel,
    params: &ConverterParams,
    v_slack: Phasor,
    state: GflState,
    bess: BessState,
    dt: f64,
) -> Result<(f64, GflState, BessState)> {
    let eval = |p: f64| -> Result<(f64, GflState, BessState)> {
        let bus = solver.probe(feeder, v_slack, ConverterBoundary::PowerSource { p, q: 0.0 })?;
        let next = gfl_droop_step(gfl_pll_step(state, bus.v_pbc, dt, params), dt, params);
        let (p_act, bess_next) = apply_limits(next.p_out, bess, dt, params);
        Ok((p_act, GflState { p_out: p_act, ..next }, bess_next))
    };
    let tol = 1e-9 * params.s_rated;
    let mut x0 = state.p_out;
    let (mut g0, s0, b0) = eval(x0)?;
    if (g0 - x0).abs() <= tol {
        return Ok((g0, s0, b0));
    }
    let mut x1 = g0;
    let mut residual = f64::INFINITY;
    for _ in 0..FIXED_POINT_MAX_ITERATIONS {
        let (g1, s1, b1) = eval(x1)?;
        residual = g1 - x1;
        if residual.abs() <= tol {
            return Ok((g1, s1, b1));
        }
        let r0 = g0 - x0;
        let x2 = if residual != r0 { x1 - residual * (x1 - x0) / (residual - r0) } else { g1 };
        (x0, g0, x1) = (x1, g1, x2);
    }
    Err(Error::NonConvergence { iterations: FIXED_POINT_MAX_ITERATIONS, residual: residual / feeder.bases.s_base() })
}

/// Runs one scenario end to end.
pub fn run_scenario(scenario: &Scenario) -> Result<RunArtifacts> {
    scenario.validate()?;
    let params = &scenario.converter;
    let f0 = scenario.f0();
    let feeder = scenario.feeder.resolve(f0, params.s_rated)?;
    let trace = scenario.trace.load()?;
    let dt = scenario.timing.dt_sim;
    if trace.dt() > dt * (1.0 + 1e-9) {
        return Err(Error::Config(format!("trace step {} s exceeds the simulation step {dt} s", trace.dt())));
    }
    let slack = slack_angle(&trace, f0);
    let steps = (trace.duration() / dt).round() as usize;
    let activation = scenario.timing.activation_time;
    if activation >= trace.duration() {
        return Err(Error::Config(format!("activation at {activation} s is after the trace ends")));
    }
    let interval = scenario.pmu.reporting_interval();
    let decimation = scenario.pmu.configs()[0].decimation(dt)?;

    let initial = NetworkSolver::new().solve(&feeder, Phasor::unit(slack.values()[0]), ConverterBoundary::idle())?;
    let controller = match scenario.mode {
        ControlMode::Off => Controller::Off,
        ControlMode::Gfr => Controller::Gfr(GfrState::new(initial.v_pbc.angle, params)),
        ControlMode::Gfl => Controller::Gfl(GflState::locked_to(initial.v_pbc.angle)),
    };
    let mut sim = Loop {
        feeder: &feeder,
        params,
        dt,
        solver: NetworkSolver::new(),
        controller,
        bess: BessState::new(params.soc_initial),
        p_prev: 0.0,
    };

    let frames_expected = steps.div_ceil(decimation);
    let mut buses = Vec::with_capacity(frames_expected);
    let mut telemetry = Vec::with_capacity(frames_expected);
    let mut energy = 0.0;
    let mut max_mismatch: f64 = 0.0;
    let mut window_mismatch: f64 = 0.0;
    let mut freezes = 0;
    let s_base = feeder.bases.s_base();

    for k in 0..steps {
        let t = k as f64 * dt;
        let v_slack = Phasor::unit(slack.interpolate(t));
        let active = t >= activation - 1e-9 * dt;
        let out = sim.step(v_slack, active).map_err(|source| Error::StepFailure {
            t,
            state: format!("soc = {:.6}, last power = {:.3} W", sim.bess.soc, sim.p_prev),
            source: Box::new(source),
        })?;
        let bus = out.bus;
        sim.p_prev = bus.p_bess;
        energy += bus.p_bess * dt;
        let mismatch = bus.power_mismatch(feeder.pv_p, s_base).max(bus.slack_balance.abs());
        max_mismatch = max_mismatch.max(mismatch);
        window_mismatch = window_mismatch.max(mismatch);
        freezes += usize::from(out.pll_frozen);
        if k % decimation == 0 {
            buses.push(bus);
            telemetry.push(TelemetrySample {
                t: (k / decimation) as f64 * interval,
                p_bess: bus.p_bess,
                q_bess: bus.q_bess,
                control_freq: out.control_freq,
                control_angle: out.control_angle,
                soc: sim.bess.soc,
                mismatch_pu: window_mismatch,
                pll_frozen: out.pll_frozen,
            });
            window_mismatch = 0.0;
        }
    }

    let booked = -energy / (3600.0 * params.e_cap);
    let dsoc = sim.bess.soc - params.soc_initial;
    let soc_error = if booked != 0.0 { ((dsoc - booked) / booked).abs() } else { dsoc.abs() };
    let stats = RunStats {
        steps,
        max_power_mismatch_pu: max_mismatch,
        soc_initial: params.soc_initial,
        soc_final: sim.bess.soc,
        energy_delivered_j: energy,
        soc_energy_relative_error: soc_error,
        pll_freeze_steps: freezes,
        final_p_bess: sim.p_prev,
    };

    let timeline = |f: fn(&BusState) -> Phasor| TimeSeries::new(0.0, interval, buses.iter().map(f).collect());
    let timelines = BusTimelines {
        slack: timeline(|b| b.v_slack)?,
        pcc: timeline(|b| b.v_pcc)?,
        pbc: timeline(|b| b.v_pbc)?,
    };
    let configs = scenario.pmu.configs();
    let emit = |tl: &TimeSeries<Phasor>, i: usize| -> Result<Vec<PmuFrame>> {
        Ok(estimate_frequency(&sample(tl, &configs[i])?, f0)?.iter().map(PmuFrame::emitted).collect())
    };
    let frames = [emit(&timelines.slack, 0)?, emit(&timelines.pcc, 1)?, emit(&timelines.pbc, 2)?];
    let power: Vec<f64> = telemetry.iter().map(|s| quantize(s.p_bess)).collect();
    let metrics = compute_metrics(&frames, &power, scenario)?;

    Ok(RunArtifacts {
        hash: scenario.hash(),
        scenario: scenario.clone(),
        feeder,
        timelines,
        telemetry,
        frames,
        metrics,
        stats,
    })
}

fn series_from(frames: &[PmuFrame], interval: f64, f: impl Fn(&PmuFrame) -> f64) -> Result<TimeSeries<f64>> {
    let t0 = frames.first().ok_or_else(|| Error::invalid("empty frame stream"))?.t;
    TimeSeries::new(t0, interval, frames.iter().map(f).collect())
}

/// Metric pipeline shared by simulated runs and replayed recordings. `power`
/// is the converter power at each frame instant.
pub fn compute_metrics(frames: &[Vec<PmuFrame>; 3], power: &[f64], scenario: &Scenario) -> Result<MetricsResult> {
    let n = frames[0].len();
    for s in frames.iter().skip(1).map(Vec::len).chain([power.len()]) {
        if s != n {
            return Err(Error::LengthMismatch { expected: n, found: s });
        }
    }
    let interval = scenario.pmu.reporting_interval();
    let activation = scenario.timing.activation_time;
    let tol = 1e-6 * interval;
    let first = frames[1]
        .iter()
        .position(|fr| fr.t >= activation - tol)
        .ok_or_else(|| Error::invalid(format!("no frames after activation at {activation} s")))?;
    for stream in frames {
        if let Some(bad) = stream[first..].iter().find(|fr| !fr.valid) {
            return Err(Error::invalid(format!("invalid PMU frame at t = {} s inside the evaluation period", bad.t)));
        }
    }
    let f0 = scenario.f0();
    let active = |i: usize| -> Vec<f64> { frames[i][first..].iter().map(|fr| fr.f).collect() };
    let freqs = [active(0), active(1), active(2)];
    let ifd_value = ifd(&[&freqs[0], &freqs[1], &freqs[2]], f0)?;
    let freq_std = [freq_std(&freqs[0])?, freq_std(&freqs[1])?, freq_std(&freqs[2])?];

    let theta1 = series_from(&frames[1], interval, |f| f.theta)?;
    let theta2 = series_from(&frames[2], interval, |f| f.theta)?;
    let [ta, tb] = scenario.timing.baseline_window;
    let baseline = baseline_angle(&theta1, &theta2, (ta, tb), activation)?;

    let after = &frames[1][first..];
    let p_act = TimeSeries::new(after[0].t, interval, power[first..].to_vec())?;
    let f_pcc = series_from(after, interval, |f| f.f)?;
    let th1 = series_from(after, interval, |f| f.theta)?;
    let th2 = series_from(&frames[2][first..], interval, |f| f.theta)?;

    let m = &scenario.metrics;
    let mut notes = Vec::new();
    let mut keep = |name: &str, r: Result<MetricSeries>| -> Result<Option<(MetricSeries, Cdf)>> {
        match r {
            Ok(s) => {
                let cdf = empirical_cdf(&s.value)?;
                Ok(Some((s, cdf)))
            }
            Err(e @ Error::NoActiveSamples { .. }) => {
                notes.push(format!("{name}: {e}"));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let rrocof_series = keep("rrocof", rrocof(&f_pcc, &p_act, m.rrocof_window, m.rrocof_p_threshold))?;
    let rpadd_series = keep(
        "rpadd",
        rpadd(&th1, &th2, &p_act, baseline.mean, m.rpadd_p_threshold, m.rpadd_denominator),
    )?;

    Ok(MetricsResult { ifd: ifd_value, freq_std, baseline, rrocof: rrocof_series, rpadd: rpadd_series, notes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub comparison_hash: String,
    pub gfr_hash: String,
    pub gfl_hash: String,
    /// GFR against GFL: fraction of quantiles where GFR is lower.
    pub rrocof: Option<DominanceReport>,
    pub rpadd: Option<DominanceReport>,
    pub gfr: MetricsSummary,
    pub gfl: MetricsSummary,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub gfr: RunArtifacts,
    pub gfl: RunArtifacts,
    pub report: ComparisonReport,
}

/// Runs `base` in GFR and GFL mode with identical trace and seeds, in
/// parallel, and compares the metric distributions.
pub fn run_comparison(base: &Scenario) -> Result<Comparison> {
    let gfr_scenario = base.clone().with_mode(ControlMode::Gfr);
    let gfl_scenario = base.clone().with_mode(ControlMode::Gfl);
    let (gfr, gfl) = std::thread::scope(|s| {
        let h = s.spawn(|| run_scenario(&gfl_scenario));
        let gfr = run_scenario(&gfr_scenario);
        (gfr, h.join().expect("GFL run panicked"))
    });
    let (gfr, gfl) = (gfr?, gfl?);
    let grid = base.metrics.quantile_grid;
    let dominance = |a: &Option<(MetricSeries, Cdf)>, b: &Option<(MetricSeries, Cdf)>| match (a, b) {
        (Some((_, ca)), Some((_, cb))) => dominance_report(ca, cb, grid).map(Some),
        _ => Ok(None),
    };
    let report = ComparisonReport {
        comparison_hash: base.clone().with_mode(ControlMode::Off).hash(),
        gfr_hash: gfr.hash.clone(),
        gfl_hash: gfl.hash.clone(),
        rrocof: dominance(&gfr.metrics.rrocof, &gfl.metrics.rrocof)?,
        rpadd: dominance(&gfr.metrics.rpadd, &gfl.metrics.rpadd)?,
        gfr: gfr.metrics.summary(),
        gfl: gfl.metrics.summary(),
    };
    Ok(Comparison { gfr, gfl, report })
}

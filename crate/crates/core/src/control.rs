//! Behaviour-based motion control: the phase logic emits a small set of
//! behaviours, the helm resolves them into yaw/speed/depth setpoints, and
//! three decoupled PID loops turn setpoints into actuator demands.
//!
//! A channel with no setpoint is inactive: its PID state is reset and its
//! actuator output is zero, so an empty behaviour set produces zero thrust.

use crate::error::{Error, Result};
use crate::frames::{bearing_deg, wrap_deg, ActuatorCommand};
use crate::sensors::{AltimeterReading, NavEstimate};

/// One steering behaviour. The vertical pair is mutually exclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behaviour {
    /// Hold a depth in meters.
    ConstantDepth { depth_m: f64 },
    /// Hold a height above the seafloor in meters (needs the altimeter).
    ConstantAltitude { altitude_m: f64 },
    /// Hold a surge speed in m/s (non-negative).
    ConstantSpeed { speed_mps: f64 },
    /// Steer the bearing toward a target point; inside the capture radius
    /// the heading holds `hold_yaw_deg` instead of chasing the bearing.
    Waypoint { x: f64, y: f64, hold_yaw_deg: f64, capture_radius_m: f64 },
}

/// Resolved setpoints. `None` marks an inactive channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoints {
    pub yaw_deg: Option<f64>,
    pub speed_mps: Option<f64>,
    pub depth_m: Option<f64>,
}

/// Soft faults the helm flags for the log without aborting the tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HelmFault {
    /// ConstantAltitude was active while the altimeter had no bottom lock;
    /// the helm held the current depth instead.
    AltitudeOverStation,
}

/// Resolves a behaviour set into setpoints using the position estimate, the
/// altimeter and the measured depth.
pub fn helm_resolve(
    behaviours: &[Behaviour],
    nav: &NavEstimate,
    altimeter: &AltimeterReading,
    depth_m: f64,
) -> Result<(Setpoints, Option<HelmFault>)> {
    let mut sp = Setpoints::default();
    let mut fault = None;
    let mut vertical_seen = false;
    for b in behaviours {
        match *b {
            Behaviour::ConstantDepth { depth_m: z_d } => {
                if vertical_seen {
                    return Err(Error::Contract(
                        "ConstantDepth and ConstantAltitude are mutually exclusive".into(),
                    ));
                }
                vertical_seen = true;
                sp.depth_m = Some(z_d);
            }
            Behaviour::ConstantAltitude { altitude_m } => {
                if vertical_seen {
                    return Err(Error::Contract(
                        "ConstantDepth and ConstantAltitude are mutually exclusive".into(),
                    ));
                }
                vertical_seen = true;
                if altimeter.occluded {
                    // No trustworthy bottom return; hold the current depth.
                    fault = Some(HelmFault::AltitudeOverStation);
                    sp.depth_m = Some(depth_m);
                } else {
                    sp.depth_m = Some(depth_m + altimeter.altitude - altitude_m);
                }
            }
            Behaviour::ConstantSpeed { speed_mps } => {
                if speed_mps < 0.0 {
                    return Err(Error::Contract(format!(
                        "negative speed setpoint {speed_mps}"
                    )));
                }
                sp.speed_mps = Some(speed_mps);
            }
            Behaviour::Waypoint { x, y, hold_yaw_deg, capture_radius_m } => {
                let dist = (x - nav.x).hypot(y - nav.y);
                sp.yaw_deg = Some(if dist <= capture_radius_m {
                    wrap_deg(hold_yaw_deg)
                } else {
                    bearing_deg((nav.x, nav.y), (x, y))
                });
            }
        }
    }
    Ok((sp, fault))
}

/// Gains and anti-windup limit for one PID loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Clamp on the magnitude of the integral term, in output units.
    pub integral_clamp: f64,
}

/// Gain set for the three control loops plus the shared derivative smoother.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    pub yaw: LoopGains,
    pub speed: LoopGains,
    pub vertical: LoopGains,
    /// First-order smoothing factor for the error derivative, in [0, 1).
    pub derivative_smoothing: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        ControlGains {
            yaw: LoopGains { kp: 0.02, ki: 0.0005, kd: 0.05, integral_clamp: 0.1 },
            speed: LoopGains { kp: 1.2, ki: 0.25, kd: 0.0, integral_clamp: 0.4 },
            vertical: LoopGains { kp: 0.8, ki: 0.01, kd: 3.0, integral_clamp: 0.2 },
            derivative_smoothing: 0.5,
        }
    }
}

/// One positional PID loop with clamped integral term and a smoothed error
/// derivative. State is owned by the caller and threaded through `pid_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    pub gains: LoopGains,
    /// Integral term contribution in output units (already scaled by ki).
    pub integral: f64,
    pub prev_error: Option<f64>,
    /// Smoothed error derivative.
    pub deriv: f64,
    /// Symmetric output clamp.
    pub output_clamp: f64,
    pub smoothing: f64,
}

impl PidState {
    pub fn new(gains: LoopGains, smoothing: f64) -> Self {
        PidState { gains, integral: 0.0, prev_error: None, deriv: 0.0, output_clamp: 1.0, smoothing }
    }

    /// Clears accumulated state while keeping the gains.
    pub fn reset(&self) -> Self {
        PidState { integral: 0.0, prev_error: None, deriv: 0.0, ..*self }
    }
}

/// Advances one PID loop by a tick, returning the clamped output and the
/// next state.
pub fn pid_step(state: &PidState, error: f64, dt: f64) -> Result<(f64, PidState)> {
    if dt <= 0.0 {
        return Err(Error::Domain(format!("pid_step dt {dt} must be positive")));
    }
    if !error.is_finite() {
        return Err(Error::Domain("pid_step of non-finite error".into()));
    }
    let g = state.gains;
    let integral = (state.integral + g.ki * error * dt)
        .clamp(-g.integral_clamp, g.integral_clamp);
    let raw_deriv = match state.prev_error {
        Some(prev) => (error - prev) / dt,
        None => 0.0,
    };
    let deriv = state.smoothing * state.deriv + (1.0 - state.smoothing) * raw_deriv;
    let out = (g.kp * error + integral + g.kd * deriv).clamp(-state.output_clamp, state.output_clamp);
    Ok((out, PidState { integral, prev_error: Some(error), deriv, ..*state }))
}

/// The three loop states threaded through the control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPids {
    pub yaw: PidState,
    pub speed: PidState,
    pub vertical: PidState,
}

impl ControlPids {
    pub fn new(gains: &ControlGains) -> Self {
        ControlPids {
            yaw: PidState::new(gains.yaw, gains.derivative_smoothing),
            speed: PidState::new(gains.speed, gains.derivative_smoothing),
            vertical: PidState::new(gains.vertical, gains.derivative_smoothing),
        }
    }
}

/// Turns setpoints and measurements into actuator demands. The yaw error is
/// wrapped so the vehicle always turns the short way; inactive channels
/// output zero and reset their loop state.
pub fn control_step(
    sp: &Setpoints,
    yaw_deg: f64,
    speed_mps: f64,
    depth_m: f64,
    pids: &ControlPids,
    dt: f64,
) -> Result<(ActuatorCommand, ControlPids)> {
    let (tz, yaw_state) = match sp.yaw_deg {
        Some(yd) => pid_step(&pids.yaw, wrap_deg(yd - yaw_deg), dt)?,
        None => (0.0, pids.yaw.reset()),
    };
    let (fx, speed_state) = match sp.speed_mps {
        Some(vd) => pid_step(&pids.speed, vd - speed_mps, dt)?,
        None => (0.0, pids.speed.reset()),
    };
    let (fz, vertical_state) = match sp.depth_m {
        Some(zd) => pid_step(&pids.vertical, zd - depth_m, dt)?,
        None => (0.0, pids.vertical.reset()),
    };
    Ok((
        ActuatorCommand::clamped(fx, fz, tz),
        ControlPids { yaw: yaw_state, speed: speed_state, vertical: vertical_state },
    ))
}

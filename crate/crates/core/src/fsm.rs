//! Docking procedure state machine.
//!
//! Two homing phases fly the vehicle back over the station on
//! acoustic-inertial navigation; three landing phases descend it over the
//! docking lamp on optical guidance at stepped work altitudes. Landing ends
//! when the attitude/depth criterion accepts the pose, and falls back a
//! phase (or to homing, if the lamp is lost) when it cannot.

use crate::control::Behaviour;
use crate::error::{Error, Result};
use crate::frames::wrap_deg;
use crate::optics::SpotObservation;
use crate::sensors::NavEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Returning,
    CloseToDocking,
    Landing1,
    Landing2,
    Landing3,
    Docked,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Returning,
        Phase::CloseToDocking,
        Phase::Landing1,
        Phase::Landing2,
        Phase::Landing3,
        Phase::Docked,
    ];

    pub fn index(self) -> usize {
        match self {
            Phase::Returning => 0,
            Phase::CloseToDocking => 1,
            Phase::Landing1 => 2,
            Phase::Landing2 => 3,
            Phase::Landing3 => 4,
            Phase::Docked => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Returning => "Returning",
            Phase::CloseToDocking => "CloseToDocking",
            Phase::Landing1 => "Landing1",
            Phase::Landing2 => "Landing2",
            Phase::Landing3 => "Landing3",
            Phase::Docked => "Docked",
        }
    }

    pub fn is_landing(self) -> bool {
        matches!(self, Phase::Landing1 | Phase::Landing2 | Phase::Landing3)
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Position source a phase steers by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NavMode {
    AcousticInertial,
    Optical,
}

/// Operating parameters of one phase, assembled from the mission parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    /// Transit speed the phase commands (None where the surge loop is off).
    pub speed_mps: Option<f64>,
    /// Work altitude above the station panel (landing phases only).
    pub work_altitude_m: Option<f64>,
    /// Range gate for leaving the phase toward the next one.
    pub distance_threshold_m: Option<f64>,
    /// Yaw alignment gate in degrees (Landing2 only).
    pub yaw_threshold_deg: Option<f64>,
    /// USBL fix schedule in fixes per minute.
    pub usbl_rate_per_min: f64,
    /// Whether each fix cycle also uploads the vehicle status.
    pub usbl_upload: bool,
    pub nav_mode: NavMode,
    /// Reduced speed for the outer approach ring. Parsed and exposed for
    /// operator display; the speed law does not consume it.
    pub outer_speed_mps: Option<f64>,
    pub outer_radius_m: Option<f64>,
    pub inner_radius_m: Option<f64>,
    /// Waypoint capture radius inside which the heading holds the panel yaw.
    pub capture_radius_m: Option<f64>,
}

/// Acceptance thresholds and desired values for the docking criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionThresholds {
    pub yaw_threshold_deg: f64,
    pub pitch_threshold_deg: f64,
    pub roll_threshold_deg: f64,
    pub depth_threshold_m: f64,
    pub desired_yaw_deg: f64,
    pub desired_pitch_deg: f64,
    pub desired_roll_deg: f64,
    pub desired_depth_m: f64,
}

impl Default for CriterionThresholds {
    fn default() -> Self {
        CriterionThresholds {
            yaw_threshold_deg: 45.0,
            pitch_threshold_deg: 5.0,
            roll_threshold_deg: 5.0,
            depth_threshold_m: 0.2,
            desired_yaw_deg: 0.0,
            desired_pitch_deg: 0.0,
            desired_roll_deg: 0.0,
            desired_depth_m: 18.0,
        }
    }
}

/// Mission-level parameters driving the state machine: phase gates, timers,
/// speeds and the docking criterion. Assembled from the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionParams {
    /// Depth of the station's landing panel in m.
    pub panel_depth_m: f64,
    /// Fixed orientation of the station in degrees.
    pub panel_yaw_deg: f64,
    /// Range at which homing hands over to the close approach.
    pub returning_range_m: f64,
    pub returning_speed_mps: f64,
    /// Cruise altitude above the seafloor during the return leg.
    pub returning_altitude_m: f64,
    pub returning_usbl_rate: f64,
    pub close_speed_mps: f64,
    /// Depth held during the close approach.
    pub close_depth_m: f64,
    pub close_usbl_rate: f64,
    /// Status-upload fix rate during the landing phases.
    pub landing_usbl_rate: f64,
    /// Continuous lamp visibility required before landing starts, s.
    pub visibility_dwell_s: f64,
    /// Lamp-loss time that aborts a landing back to the close approach, s.
    pub loss_timeout_s: f64,
    /// Tolerance around a work altitude for phase gates, m.
    pub altitude_band_m: f64,
    pub l1_distance_m: f64,
    pub l1_work_altitude_m: f64,
    /// Time the range gate must hold before Landing1 advances, s.
    pub l1_dwell_s: f64,
    pub l1_capture_radius_m: f64,
    pub l1_transit_speed_mps: f64,
    pub l1_outer_speed_mps: f64,
    pub l2_distance_m: f64,
    pub l2_work_altitude_m: f64,
    pub l2_yaw_threshold_deg: f64,
    /// Time the range, heading and altitude gate must hold before Landing2
    /// hands over to the final descent, s. The hold lets the depth loop
    /// finish converging so the descent starts from a stable hover.
    pub l2_dwell_s: f64,
    pub l2_capture_radius_m: f64,
    pub l2_transit_speed_mps: f64,
    pub l2_outer_speed_mps: f64,
    pub l3_work_altitude_m: f64,
    /// Time the criterion may keep failing at the work altitude before
    /// Landing3 falls back to Landing2, s.
    pub settle_timeout_s: f64,
    /// Speed-law inner radius: commanded speed is zero at or inside it.
    pub ring_inner_m: f64,
    /// Speed-law outer radius: full transit speed outside it.
    pub ring_outer_m: f64,
    pub criterion: CriterionThresholds,
}

impl Default for MissionParams {
    fn default() -> Self {
        MissionParams {
            panel_depth_m: 18.2,
            panel_yaw_deg: 0.0,
            returning_range_m: 15.0,
            returning_speed_mps: 1.0,
            returning_altitude_m: 6.8,
            returning_usbl_rate: 1.5,
            close_speed_mps: 0.3,
            close_depth_m: 13.2,
            close_usbl_rate: 3.0,
            landing_usbl_rate: 1.5,
            visibility_dwell_s: 3.0,
            loss_timeout_s: 10.0,
            altitude_band_m: 0.3,
            l1_distance_m: 1.0,
            l1_work_altitude_m: 5.0,
            l1_dwell_s: 2.0,
            l1_capture_radius_m: 0.3,
            l1_transit_speed_mps: 0.3,
            l1_outer_speed_mps: 0.2,
            l2_distance_m: 0.7,
            l2_work_altitude_m: 3.5,
            l2_yaw_threshold_deg: 10.0,
            l2_dwell_s: 2.0,
            l2_capture_radius_m: 0.7,
            l2_transit_speed_mps: 0.3,
            l2_outer_speed_mps: 0.2,
            l3_work_altitude_m: 0.2,
            settle_timeout_s: 20.0,
            ring_inner_m: 0.3,
            ring_outer_m: 1.5,
            criterion: CriterionThresholds::default(),
        }
    }
}

impl MissionParams {
    /// Depth equivalent of a work altitude above the panel.
    pub fn work_depth_m(&self, work_altitude_m: f64) -> f64 {
        self.panel_depth_m - work_altitude_m
    }
}

/// Operating parameters for a phase. Docked is terminal and has none.
pub fn phase_params(phase: Phase, p: &MissionParams) -> Result<PhaseParams> {
    let params = match phase {
        Phase::Returning => PhaseParams {
            speed_mps: Some(p.returning_speed_mps),
            work_altitude_m: None,
            distance_threshold_m: Some(p.returning_range_m),
            yaw_threshold_deg: None,
            usbl_rate_per_min: p.returning_usbl_rate,
            usbl_upload: true,
            nav_mode: NavMode::AcousticInertial,
            outer_speed_mps: None,
            outer_radius_m: None,
            inner_radius_m: None,
            capture_radius_m: None,
        },
        Phase::CloseToDocking => PhaseParams {
            speed_mps: Some(p.close_speed_mps),
            work_altitude_m: None,
            distance_threshold_m: None,
            yaw_threshold_deg: None,
            usbl_rate_per_min: p.close_usbl_rate,
            usbl_upload: false,
            nav_mode: NavMode::AcousticInertial,
            outer_speed_mps: None,
            outer_radius_m: None,
            inner_radius_m: None,
            capture_radius_m: None,
        },
        Phase::Landing1 => PhaseParams {
            speed_mps: Some(p.l1_transit_speed_mps),
            work_altitude_m: Some(p.l1_work_altitude_m),
            distance_threshold_m: Some(p.l1_distance_m),
            yaw_threshold_deg: None,
            usbl_rate_per_min: p.landing_usbl_rate,
            usbl_upload: true,
            nav_mode: NavMode::Optical,
            outer_speed_mps: Some(p.l1_outer_speed_mps),
            outer_radius_m: Some(p.ring_outer_m),
            inner_radius_m: Some(p.ring_inner_m),
            capture_radius_m: Some(p.l1_capture_radius_m),
        },
        Phase::Landing2 => PhaseParams {
            speed_mps: Some(p.l2_transit_speed_mps),
            work_altitude_m: Some(p.l2_work_altitude_m),
            distance_threshold_m: Some(p.l2_distance_m),
            yaw_threshold_deg: Some(p.l2_yaw_threshold_deg),
            usbl_rate_per_min: p.landing_usbl_rate,
            usbl_upload: true,
            nav_mode: NavMode::Optical,
            outer_speed_mps: Some(p.l2_outer_speed_mps),
            outer_radius_m: Some(p.ring_outer_m),
            inner_radius_m: Some(p.ring_inner_m),
            capture_radius_m: Some(p.l2_capture_radius_m),
        },
        Phase::Landing3 => PhaseParams {
            speed_mps: None,
            work_altitude_m: Some(p.l3_work_altitude_m),
            distance_threshold_m: None,
            yaw_threshold_deg: Some(p.criterion.yaw_threshold_deg),
            usbl_rate_per_min: p.landing_usbl_rate,
            usbl_upload: true,
            nav_mode: NavMode::Optical,
            outer_speed_mps: None,
            outer_radius_m: None,
            inner_radius_m: None,
            capture_radius_m: None,
        },
        Phase::Docked => {
            return Err(Error::Contract("Docked is terminal and has no phase parameters".into()))
        }
    };
    Ok(params)
}

/// Approach speed law: full transit speed outside the outer ring, a linear
/// ramp between the rings, zero at or inside the inner ring.
pub fn speed_decision(r_m: f64, transit_mps: f64, inner_m: f64, outer_m: f64) -> Result<f64> {
    if !r_m.is_finite() || r_m < 0.0 {
        return Err(Error::Domain(format!("speed_decision range {r_m}")));
    }
    if inner_m >= outer_m {
        return Err(Error::Config {
            msg: format!("speed ring inner {inner_m} must be below outer {outer_m}"),
        });
    }
    Ok(if r_m > outer_m {
        transit_mps
    } else if r_m > inner_m {
        transit_mps * (r_m - inner_m) / (outer_m - inner_m)
    } else {
        0.0
    })
}

/// Evaluates the docking criterion: one indicator each for yaw, pitch, roll
/// and depth, true when the deviation from the desired value is inside the
/// threshold (boundary inclusive). Returns the indicator sum and whether all
/// four passed.
pub fn docking_criterion(
    roll_deg: f64,
    pitch_deg: f64,
    yaw_deg: f64,
    depth_m: f64,
    thr: &CriterionThresholds,
) -> (u8, bool) {
    let yaw_ok = wrap_deg(yaw_deg - thr.desired_yaw_deg).abs() <= thr.yaw_threshold_deg;
    let pitch_ok = (pitch_deg - thr.desired_pitch_deg).abs() <= thr.pitch_threshold_deg;
    let roll_ok = (roll_deg - thr.desired_roll_deg).abs() <= thr.roll_threshold_deg;
    let depth_ok = (depth_m - thr.desired_depth_m).abs() <= thr.depth_threshold_m;
    let phi = yaw_ok as u8 + pitch_ok as u8 + roll_ok as u8 + depth_ok as u8;
    (phi, phi == 4)
}

/// Slack for dwell-timer comparisons so that a timeout reached by summing
/// ticks fires on the expected tick despite accumulated rounding.
const TIMER_EPS_S: f64 = 1e-9;

/// Mutable state of the docking procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmState {
    pub phase: Phase,
    /// Continuous lamp-visibility time, s.
    pub t_vis: f64,
    /// Continuous lamp-loss time, s.
    pub loss_timer: f64,
    /// Time the Landing1 range gate has held, s.
    pub range_dwell: f64,
    /// Time spent at the Landing3 work altitude without criterion success, s.
    pub settle_timer: f64,
    /// Set once Landing3 first reaches its work altitude.
    pub reached_work_altitude: bool,
    /// Number of Landing3 entries.
    pub landing3_attempts: u32,
    /// Most recent optical position fix, held through brief lamp dropouts.
    pub last_fix: Option<(f64, f64)>,
}

impl FsmState {
    pub fn new() -> Self {
        FsmState {
            phase: Phase::Returning,
            t_vis: 0.0,
            loss_timer: 0.0,
            range_dwell: 0.0,
            settle_timer: 0.0,
            reached_work_altitude: false,
            landing3_attempts: 0,
            last_fix: None,
        }
    }
}

impl Default for FsmState {
    fn default() -> Self {
        Self::new()
    }
}

/// One state-machine tick's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct FsmOutput {
    pub state: FsmState,
    pub behaviours: Vec<Behaviour>,
    pub transition: Option<(Phase, Phase)>,
    /// Criterion indicator sum, present while Landing3 evaluates it.
    pub phi: Option<u8>,
    /// Horizontal range to the lamp used by the landing guidance.
    pub range_to_lamp: Option<f64>,
    /// Speed-law output commanded this tick.
    pub commanded_speed: Option<f64>,
}

/// Advances the docking state machine by one tick and emits the behaviour
/// set for the (possibly new) phase. `attitude` is the measured
/// (roll, pitch, yaw) triple and `depth_m` the measured depth.
#[allow(clippy::too_many_arguments)]
pub fn fsm_step(
    state: &FsmState,
    nav: &NavEstimate,
    spot: &SpotObservation,
    optical_fix: Option<(f64, f64)>,
    depth_m: f64,
    attitude: (f64, f64, f64),
    dt: f64,
    p: &MissionParams,
) -> Result<FsmOutput> {
    if dt <= 0.0 {
        return Err(Error::Domain(format!("fsm_step dt {dt} must be positive")));
    }
    if state.phase.is_landing() && spot.visible && optical_fix.is_none() {
        return Err(Error::Contract(
            "lamp flagged visible without an optical fix in a landing phase".into(),
        ));
    }

    let mut s = *state;
    if spot.visible {
        s.t_vis += dt;
        s.loss_timer = 0.0;
    } else {
        s.t_vis = 0.0;
        s.loss_timer += dt;
    }
    if let Some(f) = optical_fix {
        s.last_fix = Some(f);
    }

    let (roll, pitch, yaw) = attitude;
    let altitude = p.panel_depth_m - depth_m;
    let r_opt = s.last_fix.map(|(x, y)| x.hypot(y));
    let from = s.phase;
    let mut phi_out = None;

    let enter = |s: &mut FsmState, next: Phase| {
        s.phase = next;
        s.range_dwell = 0.0;
        s.settle_timer = 0.0;
        s.reached_work_altitude = false;
        if next == Phase::Landing3 {
            s.landing3_attempts += 1;
        }
    };

    match s.phase {
        Phase::Returning => {
            if nav.horizontal_range() <= p.returning_range_m {
                enter(&mut s, Phase::CloseToDocking);
            }
        }
        Phase::CloseToDocking => {
            if s.t_vis >= p.visibility_dwell_s - TIMER_EPS_S {
                enter(&mut s, Phase::Landing1);
            }
        }
        Phase::Landing1 => {
            // Only a fresh fix may advance the phase; a held one keeps
            // steering but cannot certify the gate.
            if s.loss_timer >= p.loss_timeout_s - TIMER_EPS_S {
                enter(&mut s, Phase::CloseToDocking);
            } else if let Some((fx, fy)) = optical_fix {
                let r = fx.hypot(fy);
                let in_gate = r <= p.l1_distance_m
                    && (altitude - p.l1_work_altitude_m).abs() <= p.altitude_band_m;
                s.range_dwell = if in_gate { s.range_dwell + dt } else { 0.0 };
                if s.range_dwell >= p.l1_dwell_s - TIMER_EPS_S {
                    enter(&mut s, Phase::Landing2);
                }
            }
        }
        Phase::Landing2 => {
            if s.loss_timer >= p.loss_timeout_s - TIMER_EPS_S {
                enter(&mut s, Phase::CloseToDocking);
            } else if let Some((fx, fy)) = optical_fix {
                let r = fx.hypot(fy);
                let yaw_err = wrap_deg(yaw - p.panel_yaw_deg).abs();
                let in_gate = r <= p.l2_distance_m
                    && yaw_err <= p.l2_yaw_threshold_deg
                    && (altitude - p.l2_work_altitude_m).abs() <= p.altitude_band_m;
                s.range_dwell = if in_gate { s.range_dwell + dt } else { 0.0 };
                if s.range_dwell >= p.l2_dwell_s - TIMER_EPS_S {
                    enter(&mut s, Phase::Landing3);
                }
            }
        }
        Phase::Landing3 => {
            let (phi, ok) = docking_criterion(roll, pitch, yaw, depth_m, &p.criterion);
            phi_out = Some(phi);
            if ok {
                enter(&mut s, Phase::Docked);
            } else {
                if (depth_m - p.criterion.desired_depth_m).abs() <= p.criterion.depth_threshold_m {
                    s.reached_work_altitude = true;
                }
                if s.reached_work_altitude {
                    s.settle_timer += dt;
                    if s.settle_timer >= p.settle_timeout_s - TIMER_EPS_S {
                        enter(&mut s, Phase::Landing2);
                    }
                }
            }
        }
        Phase::Docked => {}
    }

    let transition = (s.phase != from).then_some((from, s.phase));

    let mut range_to_lamp = None;
    let mut commanded_speed = None;
    let behaviours = match s.phase {
        Phase::Returning => vec![
            Behaviour::Waypoint {
                x: 0.0,
                y: 0.0,
                hold_yaw_deg: p.panel_yaw_deg,
                capture_radius_m: 0.0,
            },
            Behaviour::ConstantSpeed { speed_mps: p.returning_speed_mps },
            Behaviour::ConstantAltitude { altitude_m: p.returning_altitude_m },
        ],
        Phase::CloseToDocking => vec![
            Behaviour::Waypoint {
                x: 0.0,
                y: 0.0,
                hold_yaw_deg: p.panel_yaw_deg,
                capture_radius_m: 0.0,
            },
            Behaviour::ConstantSpeed { speed_mps: p.close_speed_mps },
            Behaviour::ConstantDepth { depth_m: p.close_depth_m },
        ],
        Phase::Landing1 | Phase::Landing2 => {
            let (transit, capture, work_alt) = if s.phase == Phase::Landing1 {
                (p.l1_transit_speed_mps, p.l1_capture_radius_m, p.l1_work_altitude_m)
            } else {
                (p.l2_transit_speed_mps, p.l2_capture_radius_m, p.l2_work_altitude_m)
            };
            let r = r_opt.unwrap_or(0.0);
            let v = speed_decision(r, transit, p.ring_inner_m, p.ring_outer_m)?;
            range_to_lamp = r_opt;
            commanded_speed = Some(v);
            vec![
                Behaviour::Waypoint {
                    x: 0.0,
                    y: 0.0,
                    hold_yaw_deg: p.panel_yaw_deg,
                    capture_radius_m: capture,
                },
                Behaviour::ConstantSpeed { speed_mps: v },
                Behaviour::ConstantDepth { depth_m: p.work_depth_m(work_alt) },
            ]
        }
        Phase::Landing3 => {
            // Final descent: hold station over the lamp (zero commanded
            // ground speed), keep the panel heading, sink to the work depth.
            range_to_lamp = r_opt;
            commanded_speed = Some(0.0);
            vec![
                Behaviour::Waypoint {
                    x: 0.0,
                    y: 0.0,
                    hold_yaw_deg: p.panel_yaw_deg,
                    capture_radius_m: f64::INFINITY,
                },
                Behaviour::ConstantSpeed { speed_mps: 0.0 },
                Behaviour::ConstantDepth { depth_m: p.work_depth_m(p.l3_work_altitude_m) },
            ]
        }
        Phase::Docked => Vec::new(),
    };

    Ok(FsmOutput { state: s, behaviours, transition, phi: phi_out, range_to_lamp, commanded_speed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nav_at(x: f64, y: f64) -> NavEstimate {
        NavEstimate { x, y, yaw: 0.0, drift: 0.5, last_speed: 0.0 }
    }

    fn visible_spot() -> SpotObservation {
        SpotObservation { u_px: 0.0, v_px: 0.0, visible: true, h_m: 5.0 }
    }

    fn dark_spot() -> SpotObservation {
        SpotObservation::not_visible(5.0)
    }

    fn level(yaw: f64) -> (f64, f64, f64) {
        (0.0, 0.0, yaw)
    }

    #[test]
    fn table_defaults_for_each_phase() {
        let p = MissionParams::default();
        let ret = phase_params(Phase::Returning, &p).unwrap();
        assert_eq!(ret.distance_threshold_m, Some(15.0));
        assert_eq!(ret.speed_mps, Some(1.0));
        assert_eq!(ret.usbl_rate_per_min, 1.5);
        assert!(ret.usbl_upload);
        assert_eq!(ret.nav_mode, NavMode::AcousticInertial);

        let close = phase_params(Phase::CloseToDocking, &p).unwrap();
        assert_eq!(close.speed_mps, Some(0.3));
        assert_eq!(close.usbl_rate_per_min, 3.0);
        assert!(!close.usbl_upload);

        let l1 = phase_params(Phase::Landing1, &p).unwrap();
        assert_eq!(l1.distance_threshold_m, Some(1.0));
        assert_eq!(l1.work_altitude_m, Some(5.0));
        assert_eq!(l1.speed_mps, Some(0.3));
        assert_eq!(l1.outer_speed_mps, Some(0.2));
        assert_eq!(l1.outer_radius_m, Some(1.5));
        assert_eq!(l1.inner_radius_m, Some(0.3));
        assert_eq!(l1.nav_mode, NavMode::Optical);
        assert_eq!(l1.usbl_rate_per_min, 1.5);
        assert!(l1.usbl_upload);

        let l2 = phase_params(Phase::Landing2, &p).unwrap();
        assert_eq!(l2.distance_threshold_m, Some(0.7));
        assert_eq!(l2.work_altitude_m, Some(3.5));
        assert_eq!(l2.yaw_threshold_deg, Some(10.0));

        let l3 = phase_params(Phase::Landing3, &p).unwrap();
        assert_eq!(l3.work_altitude_m, Some(0.2));
        assert_eq!(l3.yaw_threshold_deg, Some(45.0));
        assert!(phase_params(Phase::Docked, &p).is_err());
    }

    #[test]
    fn criterion_default_thresholds() {
        let c = CriterionThresholds::default();
        assert_eq!(
            (c.yaw_threshold_deg, c.pitch_threshold_deg, c.roll_threshold_deg, c.depth_threshold_m),
            (45.0, 5.0, 5.0, 0.2)
        );
    }

    #[test]
    fn speed_law_fixed_points() {
        assert_eq!(speed_decision(2.0, 0.3, 0.3, 1.5).unwrap(), 0.3);
        assert_eq!(speed_decision(0.2, 0.3, 0.3, 1.5).unwrap(), 0.0);
        assert_eq!(speed_decision(0.3, 0.3, 0.3, 1.5).unwrap(), 0.0);
        assert!((speed_decision(0.9, 0.3, 0.3, 1.5).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn speed_law_is_continuous_at_the_outer_ring() {
        let just_inside = speed_decision(1.5, 0.3, 0.3, 1.5).unwrap();
        let just_outside = speed_decision(1.5 + 1e-12, 0.3, 0.3, 1.5).unwrap();
        assert!((just_inside - just_outside).abs() < 1e-9);
        assert!((just_inside - 0.3).abs() < 1e-9);
    }

    #[test]
    fn speed_law_rejects_bad_inputs() {
        assert!(speed_decision(-0.1, 0.3, 0.3, 1.5).is_err());
        assert!(speed_decision(f64::NAN, 0.3, 0.3, 1.5).is_err());
        assert!(speed_decision(1.0, 0.3, 2.0, 1.5).is_err());
        assert!(speed_decision(1.0, 0.3, 1.5, 1.5).is_err());
    }

    #[test]
    fn criterion_counts_each_indicator() {
        let thr = CriterionThresholds { desired_depth_m: 18.0, ..CriterionThresholds::default() };
        let (phi, ok) = docking_criterion(0.0, 0.0, 0.0, 18.0, &thr);
        assert_eq!((phi, ok), (4, true));
        // Yaw 50 degrees off against a 45 degree threshold drops one indicator.
        let (phi, ok) = docking_criterion(0.0, 0.0, 50.0, 18.0, &thr);
        assert_eq!((phi, ok), (3, false));
    }

    #[test]
    fn criterion_boundary_is_inclusive() {
        let thr = CriterionThresholds { desired_depth_m: 18.0, ..CriterionThresholds::default() };
        let (phi, ok) = docking_criterion(5.0, -5.0, 45.0, 18.2, &thr);
        assert_eq!((phi, ok), (4, true));
    }

    #[test]
    fn criterion_wraps_the_yaw_deviation() {
        let thr = CriterionThresholds {
            desired_yaw_deg: 170.0,
            desired_depth_m: 18.0,
            ..CriterionThresholds::default()
        };
        // Measured -170 is only 20 degrees from desired 170 across the seam.
        let (phi, ok) = docking_criterion(0.0, 0.0, -170.0, 18.0, &thr);
        assert_eq!((phi, ok), (4, true));
    }

    #[test]
    fn criterion_all_sixteen_combinations() {
        let thr = CriterionThresholds { desired_depth_m: 18.0, ..CriterionThresholds::default() };
        for mask in 0u8..16 {
            let roll = if mask & 1 != 0 { 1.0 } else { 9.0 };
            let pitch = if mask & 2 != 0 { -2.0 } else { 7.0 };
            let yaw = if mask & 4 != 0 { 30.0 } else { 90.0 };
            let depth = if mask & 8 != 0 { 18.1 } else { 19.0 };
            let expect = mask.count_ones() as u8;
            let (phi, ok) = docking_criterion(roll, pitch, yaw, depth, &thr);
            assert_eq!(phi, expect, "mask {mask:04b}");
            assert_eq!(ok, expect == 4);
        }
    }

    fn step(
        s: &FsmState,
        nav: &NavEstimate,
        spot: &SpotObservation,
        fix: Option<(f64, f64)>,
        depth: f64,
        att: (f64, f64, f64),
        p: &MissionParams,
    ) -> FsmOutput {
        fsm_step(s, nav, spot, fix, depth, att, 0.1, p).unwrap()
    }

    #[test]
    fn returning_hands_over_at_the_range_gate() {
        let p = MissionParams::default();
        let s = FsmState::new();
        let out = step(&s, &nav_at(30.0, 20.0), &dark_spot(), None, 13.2, level(0.0), &p);
        assert_eq!(out.state.phase, Phase::Returning);
        let out = step(&s, &nav_at(9.0, 12.0), &dark_spot(), None, 13.2, level(0.0), &p);
        assert_eq!(out.state.phase, Phase::CloseToDocking);
        assert_eq!(out.transition, Some((Phase::Returning, Phase::CloseToDocking)));
        // The boundary itself already hands over.
        let out = step(&s, &nav_at(15.0, 0.0), &dark_spot(), None, 13.2, level(0.0), &p);
        assert_eq!(out.state.phase, Phase::CloseToDocking);
    }

    #[test]
    fn close_to_docking_needs_sustained_visibility() {
        let p = MissionParams::default();
        let mut s = FsmState { phase: Phase::CloseToDocking, ..FsmState::new() };
        for i in 0..29 {
            let out = step(&s, &nav_at(1.0, 0.0), &visible_spot(), Some((1.0, 0.0)), 13.2, level(0.0), &p);
            s = out.state;
            assert_eq!(s.phase, Phase::CloseToDocking, "tick {i}");
        }
        let out = step(&s, &nav_at(1.0, 0.0), &visible_spot(), Some((1.0, 0.0)), 13.2, level(0.0), &p);
        assert_eq!(out.state.phase, Phase::Landing1);
        // A blink resets the dwell.
        let mut s = FsmState { phase: Phase::CloseToDocking, t_vis: 2.9, ..FsmState::new() };
        let out = step(&s, &nav_at(1.0, 0.0), &dark_spot(), None, 13.2, level(0.0), &p);
        s = out.state;
        assert_eq!(s.t_vis, 0.0);
        assert_eq!(s.phase, Phase::CloseToDocking);
    }

    #[test]
    fn landing1_advances_after_the_range_dwell() {
        let p = MissionParams::default();
        // At the 5 m work altitude (depth 13.2) and 0.5 m from the lamp.
        let mut s = FsmState { phase: Phase::Landing1, ..FsmState::new() };
        let mut ticks = 0;
        while s.phase == Phase::Landing1 {
            let out = step(&s, &nav_at(0.5, 0.0), &visible_spot(), Some((0.5, 0.0)), 13.2, level(0.0), &p);
            s = out.state;
            ticks += 1;
            assert!(ticks < 25, "dwell should fire at 2 s");
        }
        assert_eq!(s.phase, Phase::Landing2);
        assert_eq!(ticks, 20);
    }

    #[test]
    fn landing1_gate_requires_the_work_altitude() {
        let p = MissionParams::default();
        let s = FsmState { phase: Phase::Landing1, range_dwell: 1.95, ..FsmState::new() };
        // 1.2 m above the work altitude: the dwell resets instead of firing.
        let out = step(&s, &nav_at(0.5, 0.0), &visible_spot(), Some((0.5, 0.0)), 12.0, level(0.0), &p);
        assert_eq!(out.state.phase, Phase::Landing1);
        assert_eq!(out.state.range_dwell, 0.0);
    }

    #[test]
    fn landing2_gates_on_range_and_alignment() {
        let p = MissionParams::default();
        let depth = p.work_depth_m(3.5);
        let armed = FsmState { phase: Phase::Landing2, range_dwell: 1.95, ..FsmState::new() };
        // Misaligned by 12 degrees: stays and loses the dwell.
        let out = step(&armed, &nav_at(0.6, 0.0), &visible_spot(), Some((0.6, 0.0)), depth, level(12.0), &p);
        assert_eq!(out.state.phase, Phase::Landing2);
        assert_eq!(out.state.range_dwell, 0.0);
        // Aligned within 10 degrees at 0.6 m: advances and counts an attempt.
        let out = step(&armed, &nav_at(0.6, 0.0), &visible_spot(), Some((0.6, 0.0)), depth, level(8.0), &p);
        assert_eq!(out.state.phase, Phase::Landing3);
        assert_eq!(out.state.landing3_attempts, 1);
        // On the range boundary with exact threshold alignment: advances.
        let out = step(&armed, &nav_at(0.7, 0.0), &visible_spot(), Some((0.7, 0.0)), depth, level(10.0), &p);
        assert_eq!(out.state.phase, Phase::Landing3);
    }

    #[test]
    fn landing2_holds_its_gate_for_the_dwell_time() {
        let p = MissionParams::default();
        let depth = p.work_depth_m(3.5);
        let mut s = FsmState { phase: Phase::Landing2, ..FsmState::new() };
        let mut ticks = 0;
        while s.phase == Phase::Landing2 {
            let out = step(&s, &nav_at(0.5, 0.0), &visible_spot(), Some((0.5, 0.0)), depth, level(0.0), &p);
            s = out.state;
            ticks += 1;
            assert!(ticks < 25, "dwell should fire at 2 s");
        }
        assert_eq!(s.phase, Phase::Landing3);
        assert_eq!(ticks, 20);
    }

    #[test]
    fn landing3_docks_on_criterion_success() {
        let p = MissionParams::default();
        let s = FsmState { phase: Phase::Landing3, landing3_attempts: 1, ..FsmState::new() };
        let depth = p.criterion.desired_depth_m;
        let out = step(&s, &nav_at(0.1, 0.0), &visible_spot(), Some((0.1, 0.0)), depth, level(5.0), &p);
        assert_eq!(out.state.phase, Phase::Docked);
        assert_eq!(out.phi, Some(4));
        // Docked is terminal.
        let out = step(&out.state.clone(), &nav_at(0.1, 0.0), &dark_spot(), None, depth, level(5.0), &p);
        assert_eq!(out.state.phase, Phase::Docked);
        assert!(out.behaviours.is_empty());
    }

    #[test]
    fn landing3_regresses_after_the_settle_timeout() {
        let p = MissionParams::default();
        let mut s = FsmState { phase: Phase::Landing3, landing3_attempts: 1, ..FsmState::new() };
        let depth = p.criterion.desired_depth_m;
        // Held at altitude but 90 degrees off in yaw: the criterion cannot
        // pass, and after 20 s at the work altitude Landing3 gives up.
        let mut ticks = 0;
        while s.phase == Phase::Landing3 {
            let out = step(&s, &nav_at(0.1, 0.0), &visible_spot(), Some((0.1, 0.0)), depth, level(90.0), &p);
            s = out.state;
            assert_eq!(out.phi, Some(3));
            ticks += 1;
            assert!(ticks <= 201, "settle timeout should fire");
        }
        assert_eq!(s.phase, Phase::Landing2);
        assert_eq!(ticks, 200);
    }

    #[test]
    fn landing3_settle_clock_waits_for_the_work_altitude() {
        let p = MissionParams::default();
        // Still 2 m above the work depth: no settle accumulation.
        let s = FsmState { phase: Phase::Landing3, landing3_attempts: 1, ..FsmState::new() };
        let out = step(&s, &nav_at(0.1, 0.0), &visible_spot(), Some((0.1, 0.0)), p.criterion.desired_depth_m - 2.0, level(90.0), &p);
        assert_eq!(out.state.settle_timer, 0.0);
        assert!(!out.state.reached_work_altitude);
    }

    #[test]
    fn landing_phases_fall_back_when_the_lamp_is_lost() {
        let p = MissionParams::default();
        for phase in [Phase::Landing1, Phase::Landing2] {
            let mut s = FsmState { phase, last_fix: Some((0.5, 0.0)), ..FsmState::new() };
            let mut ticks = 0;
            while s.phase == phase {
                let out = step(&s, &nav_at(0.5, 0.0), &dark_spot(), None, 13.2, level(0.0), &p);
                s = out.state;
                ticks += 1;
                assert!(ticks <= 101, "loss timeout should fire for {phase}");
            }
            assert_eq!(s.phase, Phase::CloseToDocking, "from {phase}");
            assert_eq!(ticks, 100);
        }
    }

    #[test]
    fn visible_spot_without_fix_is_an_inconsistency() {
        let p = MissionParams::default();
        let s = FsmState { phase: Phase::Landing1, ..FsmState::new() };
        let err = fsm_step(&s, &nav_at(0.5, 0.0), &visible_spot(), None, 13.2, level(0.0), 0.1, &p);
        assert!(err.is_err());
    }

    #[test]
    fn behaviours_match_the_phase() {
        let p = MissionParams::default();
        // Returning: waypoint chase, cruise speed, constant altitude.
        let out = step(&FsmState::new(), &nav_at(30.0, 0.0), &dark_spot(), None, 13.2, level(0.0), &p);
        assert!(out.behaviours.iter().any(|b| matches!(b, Behaviour::ConstantAltitude { .. })));
        assert!(out.behaviours.iter().any(
            |b| matches!(b, Behaviour::ConstantSpeed { speed_mps } if *speed_mps == 1.0)
        ));
        // Landing1 at 0.9 m commands the ramp speed 0.15 toward the lamp.
        let s = FsmState { phase: Phase::Landing1, ..FsmState::new() };
        let out = step(&s, &nav_at(0.9, 0.0), &visible_spot(), Some((0.9, 0.0)), 13.2, level(0.0), &p);
        assert!((out.commanded_speed.unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(out.range_to_lamp, Some(0.9));
        assert!(out.behaviours.iter().any(
            |b| matches!(b, Behaviour::ConstantDepth { depth_m } if (*depth_m - 13.2).abs() < 1e-9)
        ));
        // Landing3 station-keeps (zero speed) while descending to 0.2 m.
        let s = FsmState { phase: Phase::Landing3, landing3_attempts: 1, ..FsmState::new() };
        let out = step(&s, &nav_at(0.1, 0.0), &visible_spot(), Some((0.1, 0.0)), 17.0, level(30.0), &p);
        assert_eq!(out.commanded_speed, Some(0.0));
        assert!(out.behaviours.iter().any(
            |b| matches!(b, Behaviour::ConstantSpeed { speed_mps } if *speed_mps == 0.0)
        ));
        assert!(out.behaviours.iter().any(
            |b| matches!(b, Behaviour::ConstantDepth { depth_m } if (*depth_m - 18.0).abs() < 1e-9)
        ));
    }

    #[test]
    fn speed_is_zero_inside_the_inner_ring() {
        let p = MissionParams::default();
        for phase in [Phase::Landing1, Phase::Landing2] {
            for r in [0.0, 0.1, 0.25, 0.3] {
                let s = FsmState { phase, ..FsmState::new() };
                let out = step(&s, &nav_at(r, 0.0), &visible_spot(), Some((r, 0.0)), 14.0, level(0.0), &p);
                assert_eq!(out.commanded_speed, Some(0.0), "r={r} in {phase}");
            }
        }
    }

    proptest! {
        #[test]
        fn criterion_matches_the_indicator_sum_oracle(
            roll in -10.0f64..10.0,
            pitch in -10.0f64..10.0,
            yaw in -90.0f64..90.0,
            depth in 17.5f64..18.5,
        ) {
            let thr = CriterionThresholds { desired_depth_m: 18.0, ..CriterionThresholds::default() };
            let oracle = [
                (yaw - 0.0).abs() <= 45.0,
                (pitch - 0.0).abs() <= 5.0,
                (roll - 0.0).abs() <= 5.0,
                (depth - 18.0).abs() <= 0.2,
            ]
            .iter()
            .filter(|&&b| b)
            .count() as u8;
            let (phi, ok) = docking_criterion(roll, pitch, yaw, depth, &thr);
            prop_assert_eq!(phi, oracle);
            prop_assert_eq!(ok, oracle == 4);
        }

        #[test]
        fn speed_law_is_monotone_and_bounded(
            mut r1 in 0.0f64..4.0,
            mut r2 in 0.0f64..4.0,
        ) {
            if r1 > r2 {
                std::mem::swap(&mut r1, &mut r2);
            }
            let v1 = speed_decision(r1, 0.3, 0.3, 1.5).unwrap();
            let v2 = speed_decision(r2, 0.3, 0.3, 1.5).unwrap();
            prop_assert!(v1 <= v2 + 1e-12);
            prop_assert!((0.0..=0.3).contains(&v1));
        }

        #[test]
        fn phase_index_never_skips_forward(
            ranges in proptest::collection::vec(0.0f64..40.0, 200),
            vis in proptest::collection::vec(proptest::bool::ANY, 200),
        ) {
            let p = MissionParams::default();
            let mut s = FsmState::new();
            for (r, v) in ranges.iter().zip(vis.iter()) {
                let spot = if *v { visible_spot() } else { dark_spot() };
                let fix = v.then_some((*r, 0.0));
                let before = s.phase.index();
                let out = fsm_step(&s, &nav_at(*r, 0.0), &spot, fix, 13.2, level(0.0), 0.1, &p)
                    .unwrap();
                s = out.state;
                let after = s.phase.index();
                prop_assert!(after <= before + 1, "{before} -> {after}");
            }
        }
    }
}

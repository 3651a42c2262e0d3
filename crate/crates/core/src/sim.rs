//! The master simulation loop: plant, sensors, navigation, state machine,
//! helm and PID control wired together tick by tick, plus trajectory
//! logging, run metrics and a sequential batch runner.
//!
//! Each tick samples the sensors at the pre-step pose, advances the dead
//! reckoning, delivers any due acoustic fixes, evaluates the camera, steps
//! the docking state machine, resolves behaviours into setpoints, runs the
//! controllers and finally integrates the plant. The record written at time
//! t therefore holds the state the controllers actually saw at t.
//!
//! Ground-speed feedback for the surge loop prefers the DVL; over the
//! station (where the DVL loses bottom lock) it falls back to velocity
//! derived from consecutive optical fixes. With neither source available
//! the speed behaviour is dropped for the tick rather than fed a stale
//! number, so the loop never acts on fiction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::control::{
    control_step, helm_resolve, Behaviour, ControlPids, HelmFault, Setpoints,
};
use crate::error::{Error, Result};
use crate::frames::{rotate_earth_to_body, wrap_deg, ActuatorCommand, BodyVelocity, Pose};
use crate::fsm::{fsm_step, phase_params, FsmState, Phase};
use crate::optics::{jitter_spot, optical_fix, project_spot};
use crate::plant::{current_at, plant_step};
use crate::scenario::ScenarioConfig;
use crate::sensors::{
    dead_reckon, sample_altimeter, sample_depth, sample_dvl, sample_imu, usbl_correct,
    NavEstimate, UsblFix, UsblLink,
};

/// One tick of the trajectory log. Field order is the column order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub phase: Phase,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub nav_x: f64,
    pub nav_y: f64,
    pub nav_yaw: f64,
    pub nav_drift: f64,
    pub fix_x: Option<f64>,
    pub fix_y: Option<f64>,
    pub spot_visible: bool,
    pub altitude: f64,
    pub altimeter_occluded: bool,
    pub sp_yaw: Option<f64>,
    pub sp_speed: Option<f64>,
    pub sp_depth: Option<f64>,
    pub cmd_fx: f64,
    pub cmd_fz: f64,
    pub cmd_tz: f64,
    pub range_r: Option<f64>,
    pub speed_v: Option<f64>,
    pub phi: Option<u8>,
}

/// Timestamped happenings interleaved into the log as comment lines.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Transition { t: f64, from: Phase, to: Phase },
    UsblEmit { t: f64, x: f64, y: f64, latency_s: f64, upload: bool },
    Fault { t: f64, what: String },
}

impl Event {
    pub fn t(&self) -> f64 {
        match self {
            Event::Transition { t, .. } | Event::UsblEmit { t, .. } | Event::Fault { t, .. } => *t,
        }
    }
}

impl std::fmt::Display for Event {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Event::Transition { t, from, to } => {
                write!(f, "# t={t:.3} transition {from} -> {to}")
            }
            Event::UsblEmit { t, x, y, latency_s, upload } => write!(
                f,
                "# t={t:.3} usbl fix x={x:.3} y={y:.3} latency={latency_s:.3} upload={upload}"
            ),
            Event::Fault { t, what } => write!(f, "# t={t:.3} fault {what}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Docked,
    TimedOut,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Docked => "Docked",
            Outcome::TimedOut => "TimedOut",
        })
    }
}

/// Headline numbers for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub outcome: Outcome,
    pub total_time_s: f64,
    /// Seconds spent in each active phase, indexed like `Phase::index()`.
    pub phase_times_s: [f64; 5],
    pub final_offset_m: f64,
    pub final_yaw_error_deg: f64,
    pub landing3_regressions: u32,
    pub light_loss_fallbacks: u32,
}

impl RunMetrics {
    /// Fixed-format text rendering, stable for golden comparisons.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("outcome = {}\n", self.outcome));
        s.push_str(&format!("total_time_s = {:.3}\n", self.total_time_s));
        for (i, name) in
            ["returning", "close_to_docking", "landing1", "landing2", "landing3"].iter().enumerate()
        {
            s.push_str(&format!("time_{name}_s = {:.3}\n", self.phase_times_s[i]));
        }
        s.push_str(&format!("final_offset_m = {:.3}\n", self.final_offset_m));
        s.push_str(&format!("final_yaw_error_deg = {:.3}\n", self.final_yaw_error_deg));
        s.push_str(&format!("landing3_regressions = {}\n", self.landing3_regressions));
        s.push_str(&format!("light_loss_fallbacks = {}\n", self.light_loss_fallbacks));
        s
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<TrajectoryRecord>,
    pub events: Vec<Event>,
    pub metrics: RunMetrics,
}

/// Ground-speed reference for the surge controller: DVL when locked,
/// otherwise smoothed differentiation of consecutive optical fixes.
struct SpeedRef {
    ema: Option<f64>,
    prev_fix: Option<(f64, f64)>,
}

impl SpeedRef {
    fn new() -> Self {
        SpeedRef { ema: None, prev_fix: None }
    }

    fn update(
        &mut self,
        dvl_valid: bool,
        dvl_u: f64,
        fix: Option<(f64, f64)>,
        yaw_deg: f64,
        dt: f64,
        cap: f64,
    ) -> Option<f64> {
        let optical = match (self.prev_fix, fix) {
            (Some((px, py)), Some((x, y))) => {
                let (bu, _) = rotate_earth_to_body((x - px) / dt, (y - py) / dt, yaw_deg);
                Some(bu.clamp(-cap, cap))
            }
            _ => None,
        };
        self.prev_fix = fix;
        if dvl_valid {
            self.ema = Some(dvl_u);
            Some(dvl_u)
        } else if let Some(raw) = optical {
            let ema = match self.ema {
                Some(e) => 0.6 * e + 0.4 * raw,
                None => raw,
            };
            self.ema = Some(ema);
            Some(ema)
        } else {
            self.ema = None;
            None
        }
    }
}

fn check_finite(t: f64, entries: &[(&str, f64)]) -> Result<()> {
    for (what, v) in entries {
        if !v.is_finite() {
            return Err(Error::Numeric { t, what: (*what).to_string() });
        }
    }
    Ok(())
}

/// Runs one scenario to Docked or the time limit. Deterministic for a fixed
/// (config, seed) pair.
pub fn run(cfg: &ScenarioConfig, seed: u64) -> Result<RunOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mission = cfg.mission_params();
    let lamp = (0.0, 0.0, cfg.panel_depth_m);
    let dt = cfg.dt_s;

    let mut pose = Pose {
        x: cfg.start_x_m,
        y: cfg.start_y_m,
        z: cfg.start_z_m,
        roll: 0.0,
        pitch: 0.0,
        yaw: wrap_deg(cfg.start_yaw_deg),
    };
    let mut vel = BodyVelocity::zero();
    let mut nav = NavEstimate::at(&pose);
    let mut fsm = FsmState::new();
    let mut pids = ControlPids::new(&cfg.control);
    let mut link = UsblLink::new(cfg.sensors.usbl_upload_duration_s);
    let mut pending_fixes: Vec<UsblFix> = Vec::new();
    let mut speed_ref = SpeedRef::new();
    let mut last_fault: Option<HelmFault> = None;

    let mut records: Vec<TrajectoryRecord> = Vec::new();
    let mut events: Vec<Event> = Vec::new();

    let ticks = (cfg.max_duration_s / dt).round().max(1.0) as u64;
    for i in 0..ticks {
        let t = i as f64 * dt;
        let current = current_at(t, &cfg.current);

        let imu = sample_imu(&pose, t, cfg.sensors.imu_sigma_deg, &mut rng);
        let dvl = sample_dvl(
            &pose,
            &vel,
            current,
            cfg.seafloor_depth_m,
            cfg.footprint_half_width_m,
            cfg.sensors.dvl_sigma_mps,
            cfg.sensors.altimeter_sigma_m,
            &mut rng,
        );
        let alti = sample_altimeter(
            &pose,
            cfg.seafloor_depth_m,
            cfg.footprint_half_width_m,
            cfg.sensors.altimeter_sigma_m,
            &mut rng,
        );
        let depth = sample_depth(&pose, cfg.sensors.depth_sigma_m, &mut rng);

        nav = dead_reckon(&nav, &imu, &dvl, dt, cfg.nav.drift_per_meter, cfg.nav.drift_floor_per_s);

        // Acoustic schedule follows the phase the vehicle is in this tick.
        let schedule = phase_params(fsm.phase, &mission)?;
        if let Some(fix) = link.poll(
            t,
            schedule.usbl_rate_per_min,
            schedule.usbl_upload,
            &pose,
            cfg.sensors.usbl_sigma_m,
            cfg.sensors.usbl_latency_s,
            &mut rng,
        )? {
            events.push(Event::UsblEmit {
                t,
                x: fix.x,
                y: fix.y,
                latency_s: fix.latency_s,
                upload: fix.carries_upload,
            });
            pending_fixes.push(fix);
        }
        let (due, waiting): (Vec<UsblFix>, Vec<UsblFix>) = pending_fixes
            .into_iter()
            .partition(|f| t + 1e-9 >= f.emitted_at + f.latency_s);
        pending_fixes = waiting;
        for fix in &due {
            nav = usbl_correct(&nav, fix, t, cfg.sensors.usbl_sigma_m, cfg.nav.stale_after_s);
        }

        let spot = jitter_spot(
            &project_spot(&pose, lamp, &cfg.camera),
            cfg.sensors.pixel_noise_px,
            &cfg.camera,
            &mut rng,
        );
        let fix = if spot.visible {
            // Height above the lamp from the pressure depth; a visible spot
            // means the camera is above the panel, so keep it positive even
            // under measurement noise.
            let h = (cfg.panel_depth_m - depth).max(1e-3);
            Some(optical_fix(&spot, &cfg.camera, imu.yaw, h)?)
        } else {
            None
        };

        let out = fsm_step(
            &fsm,
            &nav,
            &spot,
            fix,
            depth,
            (imu.roll, imu.pitch, imu.yaw),
            dt,
            &mission,
        )?;
        if let Some((from, to)) = out.transition {
            events.push(Event::Transition { t, from, to });
        }
        fsm = out.state;

        let speed_meas = speed_ref.update(dvl.valid, dvl.u, fix, imu.yaw, dt, cfg.plant.max_surge);
        let mut behaviours = out.behaviours;
        if speed_meas.is_none() {
            behaviours.retain(|b| !matches!(b, Behaviour::ConstantSpeed { .. }));
        }

        // Landing phases steer by the optical fix; homing by dead reckoning.
        let helm_nav = if fsm.phase.is_landing() {
            match fsm.last_fix {
                Some((fx_, fy_)) => NavEstimate { x: fx_, y: fy_, yaw: imu.yaw, ..nav },
                None => NavEstimate { yaw: imu.yaw, ..nav },
            }
        } else {
            nav
        };
        let (sp, fault) = helm_resolve(&behaviours, &helm_nav, &alti, depth)?;
        if let Some(f) = fault {
            if last_fault != Some(f) {
                events.push(Event::Fault {
                    t,
                    what: "altimeter over station, holding depth".to_string(),
                });
            }
            last_fault = Some(f);
        } else {
            last_fault = None;
        }

        let (cmd, new_pids) = control_step(
            &sp,
            imu.yaw,
            speed_meas.unwrap_or(nav.last_speed),
            depth,
            &pids,
            dt,
        )?;
        pids = new_pids;

        records.push(record_tick(t, &fsm, &pose, &nav, fix, &spot.visible, alti.altitude, alti.occluded, &sp, &cmd, &out.range_to_lamp, &out.commanded_speed, &out.phi));

        if fsm.phase == Phase::Docked {
            break;
        }

        let (new_pose, new_vel) = plant_step(&cfg.plant, &pose, &vel, &cmd, current, dt, &mut rng)?;
        pose = new_pose;
        vel = new_vel;
        check_finite(
            t,
            &[
                ("pose.x", pose.x),
                ("pose.y", pose.y),
                ("pose.z", pose.z),
                ("pose.yaw", pose.yaw),
                ("vel.u", vel.u),
                ("vel.w", vel.w),
                ("nav.x", nav.x),
                ("nav.y", nav.y),
            ],
        )?;
    }

    let metrics = summarize(cfg, &records, &events);
    Ok(RunOutput { records, events, metrics })
}

#[allow(clippy::too_many_arguments)]
fn record_tick(
    t: f64,
    fsm: &FsmState,
    pose: &Pose,
    nav: &NavEstimate,
    fix: Option<(f64, f64)>,
    spot_visible: &bool,
    altitude: f64,
    altimeter_occluded: bool,
    sp: &Setpoints,
    cmd: &ActuatorCommand,
    range_r: &Option<f64>,
    speed_v: &Option<f64>,
    phi: &Option<u8>,
) -> TrajectoryRecord {
    TrajectoryRecord {
        t,
        phase: fsm.phase,
        x: pose.x,
        y: pose.y,
        z: pose.z,
        roll: pose.roll,
        pitch: pose.pitch,
        yaw: pose.yaw,
        nav_x: nav.x,
        nav_y: nav.y,
        nav_yaw: nav.yaw,
        nav_drift: nav.drift,
        fix_x: fix.map(|f| f.0),
        fix_y: fix.map(|f| f.1),
        spot_visible: *spot_visible,
        altitude,
        altimeter_occluded,
        sp_yaw: sp.yaw_deg,
        sp_speed: sp.speed_mps,
        sp_depth: sp.depth_m,
        cmd_fx: cmd.fx,
        cmd_fz: cmd.fz,
        cmd_tz: cmd.tz,
        range_r: *range_r,
        speed_v: *speed_v,
        phi: *phi,
    }
}

/// Derives the run metrics from the log. Phase times are attributed per
/// tick, so they sum exactly to the total.
pub fn summarize(cfg: &ScenarioConfig, records: &[TrajectoryRecord], events: &[Event]) -> RunMetrics {
    let mut phase_times_s = [0.0f64; 5];
    for r in records {
        if r.phase != Phase::Docked {
            phase_times_s[r.phase.index()] += cfg.dt_s;
        }
    }
    let total_time_s = phase_times_s.iter().sum();
    let last = records.last();
    let outcome = match last {
        Some(r) if r.phase == Phase::Docked => Outcome::Docked,
        _ => Outcome::TimedOut,
    };
    let (final_offset_m, final_yaw_error_deg) = last
        .map(|r| (r.x.hypot(r.y), wrap_deg(r.yaw - cfg.panel_yaw_deg).abs()))
        .unwrap_or((f64::NAN, f64::NAN));
    let mut landing3_regressions = 0;
    let mut light_loss_fallbacks = 0;
    for e in events {
        if let Event::Transition { from, to, .. } = e {
            if *from == Phase::Landing3 && *to == Phase::Landing2 {
                landing3_regressions += 1;
            }
            if (*from == Phase::Landing1 || *from == Phase::Landing2)
                && *to == Phase::CloseToDocking
            {
                light_loss_fallbacks += 1;
            }
        }
    }
    RunMetrics {
        outcome,
        total_time_s,
        phase_times_s,
        final_offset_m,
        final_yaw_error_deg,
        landing3_regressions,
        light_loss_fallbacks,
    }
}

pub const LOG_HEADER: &str = "t,phase,x,y,z,roll,pitch,yaw,nav_x,nav_y,nav_yaw,nav_drift,fix_x,fix_y,spot_visible,altitude,altimeter_occluded,sp_yaw,sp_speed,sp_depth,cmd_fx,cmd_fz,cmd_tz,range_r,speed_v,phi";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Renders the trajectory log: a header, one CSV row per tick, and events
/// interleaved as `#` comment lines just before the tick they belong to.
pub fn log_to_string(output: &RunOutput) -> String {
    let mut s = String::with_capacity(output.records.len() * 160);
    s.push_str(LOG_HEADER);
    s.push('\n');
    let mut ev = output.events.iter().peekable();
    for r in &output.records {
        while let Some(e) = ev.peek() {
            if e.t() <= r.t + 1e-9 {
                s.push_str(&ev.next().unwrap().to_string());
                s.push('\n');
            } else {
                break;
            }
        }
        s.push_str(&format!(
            "{t:.3},{phase},{x:.4},{y:.4},{z:.4},{roll:.4},{pitch:.4},{yaw:.4},{nx:.4},{ny:.4},{nyaw:.4},{nd:.4},{fx},{fy},{vis},{alt:.4},{occ},{spy},{sps},{spd},{cfx:.4},{cfz:.4},{ctz:.4},{rr},{sv},{phi}",
            t = r.t,
            phase = r.phase,
            x = r.x,
            y = r.y,
            z = r.z,
            roll = r.roll,
            pitch = r.pitch,
            yaw = r.yaw,
            nx = r.nav_x,
            ny = r.nav_y,
            nyaw = r.nav_yaw,
            nd = r.nav_drift,
            fx = opt(r.fix_x),
            fy = opt(r.fix_y),
            vis = r.spot_visible as u8,
            alt = r.altitude,
            occ = r.altimeter_occluded as u8,
            spy = opt(r.sp_yaw),
            sps = opt(r.sp_speed),
            spd = opt(r.sp_depth),
            cfx = r.cmd_fx,
            cfz = r.cmd_fz,
            ctz = r.cmd_tz,
            rr = opt(r.range_r),
            sv = opt(r.speed_v),
            phi = r.phi.map(|p| p.to_string()).unwrap_or_default(),
        ));
        s.push('\n');
    }
    for e in ev {
        s.push_str(&e.to_string());
        s.push('\n');
    }
    s
}

/// Writes `trajectory.csv` and `metrics.txt` into `dir`.
pub fn write_outputs(dir: &std::path::Path, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("trajectory.csv"), log_to_string(output))?;
    std::fs::write(dir.join("metrics.txt"), output.metrics.to_text())?;
    Ok(())
}

/// Result of a sequential batch over consecutive seeds.
#[derive(Debug, Clone)]
pub struct BatchSummary {
    pub runs: Vec<(u64, RunMetrics)>,
    pub docked: usize,
}

impl BatchSummary {
    pub fn success_rate(&self) -> f64 {
        if self.runs.is_empty() {
            0.0
        } else {
            self.docked as f64 / self.runs.len() as f64
        }
    }

    /// One line per run plus a tail summary; stable format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (seed, m) in &self.runs {
            s.push_str(&format!(
                "seed={seed} outcome={} total_time_s={:.3} final_offset_m={:.3} regressions={} fallbacks={}\n",
                m.outcome, m.total_time_s, m.final_offset_m, m.landing3_regressions, m.light_loss_fallbacks
            ));
        }
        s.push_str(&format!(
            "docked {}/{} rate {:.3}\n",
            self.docked,
            self.runs.len(),
            self.success_rate()
        ));
        s
    }
}

/// Runs `count` seeds starting at `seed_start`, keeping only metrics.
pub fn run_batch(cfg: &ScenarioConfig, seed_start: u64, count: u64) -> Result<BatchSummary> {
    let mut runs = Vec::with_capacity(count as usize);
    let mut docked = 0;
    for seed in seed_start..seed_start + count {
        let out = run(cfg, seed)?;
        if out.metrics.outcome == Outcome::Docked {
            docked += 1;
        }
        runs.push((seed, out.metrics));
    }
    Ok(BatchSummary { runs, docked })
}

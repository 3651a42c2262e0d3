//! Scenario configuration: a flat key-value text format, defaults for every
//! parameter, load-time validation, and a dump that round-trips through the
//! parser.
//!
//! Lines are `key = value`; `#` starts a comment and blank lines are
//! skipped. Unknown keys and unparseable values are rejected with the
//! offending line number so a typo cannot silently fall back to a default.

use crate::control::ControlGains;
use crate::error::{Error, Result};
use crate::fsm::{CriterionThresholds, MissionParams};
use crate::optics::{effective_radius, CameraParams};
use crate::plant::{CurrentField, PlantParams};

/// Noise levels and schedule parameters for the sensor suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    /// Attitude noise on each IMU axis, degrees (one sigma).
    pub imu_sigma_deg: f64,
    /// DVL velocity noise, m/s (one sigma).
    pub dvl_sigma_mps: f64,
    /// Altimeter height noise away from the station, m (one sigma).
    pub altimeter_sigma_m: f64,
    /// Pressure depth noise, m (one sigma).
    pub depth_sigma_m: f64,
    /// Horizontal USBL fix noise, m (one sigma).
    pub usbl_sigma_m: f64,
    /// Acoustic travel plus processing delay before a fix arrives, s.
    pub usbl_latency_s: f64,
    /// Time the link stays busy after a fix cycle that uploads status, s.
    pub usbl_upload_duration_s: f64,
    /// Centroid noise on the lamp spot, pixels (one sigma).
    pub pixel_noise_px: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            imu_sigma_deg: 0.5,
            dvl_sigma_mps: 0.02,
            altimeter_sigma_m: 0.05,
            depth_sigma_m: 0.02,
            usbl_sigma_m: 1.0,
            usbl_latency_s: 1.0,
            usbl_upload_duration_s: 20.0,
            pixel_noise_px: 2.0,
        }
    }
}

/// Dead-reckoning drift model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavConfig {
    /// Drift radius growth per metre travelled.
    pub drift_per_meter: f64,
    /// Minimum drift radius growth per second, even at rest.
    pub drift_floor_per_s: f64,
    /// Age beyond which a delivered USBL fix is discarded, s.
    pub stale_after_s: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig { drift_per_meter: 0.05, drift_floor_per_s: 0.002, stale_after_s: 60.0 }
    }
}

/// A complete, validated simulation setup. Station-relative geometry: the
/// docking lamp sits at the horizontal origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Default random seed; the CLI may override it per run.
    pub seed: u64,
    pub dt_s: f64,
    pub max_duration_s: f64,
    pub panel_depth_m: f64,
    pub panel_yaw_deg: f64,
    /// Half width of the square station footprint that shadows the
    /// downward-looking acoustics.
    pub footprint_half_width_m: f64,
    pub seafloor_depth_m: f64,
    pub start_x_m: f64,
    pub start_y_m: f64,
    pub start_z_m: f64,
    pub start_yaw_deg: f64,
    pub camera: CameraParams,
    pub plant: PlantParams,
    pub current: CurrentField,
    pub sensors: SensorConfig,
    pub nav: NavConfig,
    pub control: ControlGains,
    pub returning_range_m: f64,
    pub returning_speed_mps: f64,
    /// Cruise altitude above the seafloor on the return leg; defaults to
    /// reaching 5 m above the panel.
    pub returning_altitude_m: Option<f64>,
    pub returning_usbl_rate: f64,
    pub close_speed_mps: f64,
    /// Depth held during the close approach; defaults to 5 m above the panel.
    pub close_depth_m: Option<f64>,
    pub close_usbl_rate: f64,
    pub landing_usbl_rate: f64,
    pub visibility_dwell_s: f64,
    pub loss_timeout_s: f64,
    pub altitude_band_m: f64,
    pub l1_distance_m: f64,
    pub l1_work_altitude_m: f64,
    pub l1_dwell_s: f64,
    pub l1_capture_radius_m: f64,
    pub l1_transit_speed_mps: f64,
    pub l1_outer_speed_mps: f64,
    pub ring_inner_m: f64,
    pub ring_outer_m: f64,
    pub l2_distance_m: f64,
    pub l2_work_altitude_m: f64,
    pub l2_yaw_threshold_deg: f64,
    pub l2_dwell_s: f64,
    pub l2_capture_radius_m: f64,
    pub l2_transit_speed_mps: f64,
    pub l2_outer_speed_mps: f64,
    pub l3_work_altitude_m: f64,
    pub l3_yaw_threshold_deg: f64,
    pub l3_pitch_threshold_deg: f64,
    pub l3_roll_threshold_deg: f64,
    pub l3_depth_threshold_m: f64,
    pub settle_timeout_s: f64,
    pub desired_roll_deg: f64,
    pub desired_pitch_deg: f64,
    /// Fraction of batch runs that must dock for a zero exit code.
    pub batch_success_floor: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            dt_s: 0.1,
            max_duration_s: 1800.0,
            panel_depth_m: 18.2,
            panel_yaw_deg: 0.0,
            footprint_half_width_m: 2.0,
            seafloor_depth_m: 20.0,
            start_x_m: -18.0,
            start_y_m: -12.0,
            start_z_m: 10.0,
            start_yaw_deg: 45.0,
            camera: CameraParams::default(),
            plant: PlantParams::default(),
            current: CurrentField::default(),
            sensors: SensorConfig::default(),
            nav: NavConfig::default(),
            control: ControlGains::default(),
            returning_range_m: 15.0,
            returning_speed_mps: 1.0,
            returning_altitude_m: None,
            returning_usbl_rate: 1.5,
            close_speed_mps: 0.3,
            close_depth_m: None,
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
            ring_inner_m: 0.3,
            ring_outer_m: 1.5,
            l2_distance_m: 0.7,
            l2_work_altitude_m: 3.5,
            l2_yaw_threshold_deg: 10.0,
            l2_dwell_s: 2.0,
            l2_capture_radius_m: 0.7,
            l2_transit_speed_mps: 0.3,
            l2_outer_speed_mps: 0.2,
            l3_work_altitude_m: 0.2,
            l3_yaw_threshold_deg: 45.0,
            l3_pitch_threshold_deg: 5.0,
            l3_roll_threshold_deg: 5.0,
            l3_depth_threshold_m: 0.2,
            settle_timeout_s: 20.0,
            desired_roll_deg: 0.0,
            desired_pitch_deg: 0.0,
            batch_success_floor: 0.95,
        }
    }
}

impl ScenarioConfig {
    /// Cruise altitude for the return leg, derived when not set explicitly:
    /// high enough to pass 5 m above the panel.
    pub fn returning_altitude_m(&self) -> f64 {
        self.returning_altitude_m
            .unwrap_or(self.seafloor_depth_m - self.panel_depth_m + 5.0)
    }

    /// Close-approach depth, derived when not set explicitly: 5 m above the
    /// panel, inside the lamp cone once overhead.
    pub fn close_depth_m(&self) -> f64 {
        self.close_depth_m.unwrap_or(self.panel_depth_m - 5.0)
    }

    pub fn criterion_thresholds(&self) -> CriterionThresholds {
        CriterionThresholds {
            yaw_threshold_deg: self.l3_yaw_threshold_deg,
            pitch_threshold_deg: self.l3_pitch_threshold_deg,
            roll_threshold_deg: self.l3_roll_threshold_deg,
            depth_threshold_m: self.l3_depth_threshold_m,
            desired_yaw_deg: self.panel_yaw_deg,
            desired_pitch_deg: self.desired_pitch_deg,
            desired_roll_deg: self.desired_roll_deg,
            desired_depth_m: self.panel_depth_m - self.l3_work_altitude_m,
        }
    }

    pub fn mission_params(&self) -> MissionParams {
        MissionParams {
            panel_depth_m: self.panel_depth_m,
            panel_yaw_deg: self.panel_yaw_deg,
            returning_range_m: self.returning_range_m,
            returning_speed_mps: self.returning_speed_mps,
            returning_altitude_m: self.returning_altitude_m(),
            returning_usbl_rate: self.returning_usbl_rate,
            close_speed_mps: self.close_speed_mps,
            close_depth_m: self.close_depth_m(),
            close_usbl_rate: self.close_usbl_rate,
            landing_usbl_rate: self.landing_usbl_rate,
            visibility_dwell_s: self.visibility_dwell_s,
            loss_timeout_s: self.loss_timeout_s,
            altitude_band_m: self.altitude_band_m,
            l1_distance_m: self.l1_distance_m,
            l1_work_altitude_m: self.l1_work_altitude_m,
            l1_dwell_s: self.l1_dwell_s,
            l1_capture_radius_m: self.l1_capture_radius_m,
            l1_transit_speed_mps: self.l1_transit_speed_mps,
            l1_outer_speed_mps: self.l1_outer_speed_mps,
            l2_distance_m: self.l2_distance_m,
            l2_work_altitude_m: self.l2_work_altitude_m,
            l2_yaw_threshold_deg: self.l2_yaw_threshold_deg,
            l2_dwell_s: self.l2_dwell_s,
            l2_capture_radius_m: self.l2_capture_radius_m,
            l2_transit_speed_mps: self.l2_transit_speed_mps,
            l2_outer_speed_mps: self.l2_outer_speed_mps,
            l3_work_altitude_m: self.l3_work_altitude_m,
            settle_timeout_s: self.settle_timeout_s,
            ring_inner_m: self.ring_inner_m,
            ring_outer_m: self.ring_outer_m,
            criterion: self.criterion_thresholds(),
        }
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num(v: &str) -> std::result::Result<f64, String> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("expected a number, got '{v}'"))
        }
        match key {
            "seed" => {
                self.seed = value.parse().map_err(|_| format!("expected an integer, got '{value}'"))?
            }
            "timing.dt" => self.dt_s = num(value)?,
            "timing.max_duration" => self.max_duration_s = num(value)?,
            "sds.panel_depth" => self.panel_depth_m = num(value)?,
            "sds.panel_yaw" => self.panel_yaw_deg = num(value)?,
            "sds.footprint_half_width" => self.footprint_half_width_m = num(value)?,
            "world.seafloor_depth" => self.seafloor_depth_m = num(value)?,
            "start.x" => self.start_x_m = num(value)?,
            "start.y" => self.start_y_m = num(value)?,
            "start.z" => self.start_z_m = num(value)?,
            "start.yaw" => self.start_yaw_deg = num(value)?,
            "camera.width_px" => self.camera.width_px = num(value)?,
            "camera.height_px" => self.camera.height_px = num(value)?,
            "camera.half_angle_h" => self.camera.half_angle_h_deg = num(value)?,
            "camera.half_angle_v" => self.camera.half_angle_v_deg = num(value)?,
            "camera.divergence" => self.camera.divergence_deg = num(value)?,
            "camera.offset" => self.camera.offset_m = num(value)?,
            "camera.pixel_noise" => self.sensors.pixel_noise_px = num(value)?,
            "plant.mass" => self.plant.mass_kg = num(value)?,
            "plant.surge_inertia" => self.plant.surge_inertia = num(value)?,
            "plant.heave_inertia" => self.plant.heave_inertia = num(value)?,
            "plant.yaw_inertia" => self.plant.yaw_inertia = num(value)?,
            "plant.surge_drag" => self.plant.surge_drag = num(value)?,
            "plant.heave_drag" => self.plant.heave_drag = num(value)?,
            "plant.yaw_drag" => self.plant.yaw_drag = num(value)?,
            "plant.max_surge_thrust" => self.plant.max_surge_thrust = num(value)?,
            "plant.max_heave_thrust" => self.plant.max_heave_thrust = num(value)?,
            "plant.max_yaw_torque" => self.plant.max_yaw_torque = num(value)?,
            "plant.attitude_tau" => self.plant.attitude_tau_s = num(value)?,
            "plant.attitude_disturbance" => self.plant.attitude_disturbance_deg = num(value)?,
            "plant.max_surge" => self.plant.max_surge = num(value)?,
            "plant.max_heave" => self.plant.max_heave = num(value)?,
            "plant.max_yaw_rate" => self.plant.max_yaw_rate = num(value)?,
            "current.mean_x" => self.current.mean_x = num(value)?,
            "current.mean_y" => self.current.mean_y = num(value)?,
            "current.gust_amplitude" => self.current.gust_amplitude = num(value)?,
            "current.gust_period" => self.current.gust_period_s = num(value)?,
            "sensors.imu_sigma" => self.sensors.imu_sigma_deg = num(value)?,
            "sensors.dvl_sigma" => self.sensors.dvl_sigma_mps = num(value)?,
            "sensors.altimeter_sigma" => self.sensors.altimeter_sigma_m = num(value)?,
            "sensors.depth_sigma" => self.sensors.depth_sigma_m = num(value)?,
            "sensors.usbl_sigma" => self.sensors.usbl_sigma_m = num(value)?,
            "sensors.usbl_latency" => self.sensors.usbl_latency_s = num(value)?,
            "sensors.usbl_upload_duration" => self.sensors.usbl_upload_duration_s = num(value)?,
            "nav.drift_per_meter" => self.nav.drift_per_meter = num(value)?,
            "nav.drift_floor" => self.nav.drift_floor_per_s = num(value)?,
            "nav.stale_after" => self.nav.stale_after_s = num(value)?,
            "control.yaw_kp" => self.control.yaw.kp = num(value)?,
            "control.yaw_ki" => self.control.yaw.ki = num(value)?,
            "control.yaw_kd" => self.control.yaw.kd = num(value)?,
            "control.yaw_integral_clamp" => self.control.yaw.integral_clamp = num(value)?,
            "control.speed_kp" => self.control.speed.kp = num(value)?,
            "control.speed_ki" => self.control.speed.ki = num(value)?,
            "control.speed_kd" => self.control.speed.kd = num(value)?,
            "control.speed_integral_clamp" => self.control.speed.integral_clamp = num(value)?,
            "control.vertical_kp" => self.control.vertical.kp = num(value)?,
            "control.vertical_ki" => self.control.vertical.ki = num(value)?,
            "control.vertical_kd" => self.control.vertical.kd = num(value)?,
            "control.vertical_integral_clamp" => {
                self.control.vertical.integral_clamp = num(value)?
            }
            "control.derivative_smoothing" => self.control.derivative_smoothing = num(value)?,
            "returning.range" => self.returning_range_m = num(value)?,
            "returning.speed" => self.returning_speed_mps = num(value)?,
            "returning.altitude" => self.returning_altitude_m = Some(num(value)?),
            "returning.usbl_rate" => self.returning_usbl_rate = num(value)?,
            "close.speed" => self.close_speed_mps = num(value)?,
            "close.depth" => self.close_depth_m = Some(num(value)?),
            "close.usbl_rate" => self.close_usbl_rate = num(value)?,
            "landing.usbl_rate" => self.landing_usbl_rate = num(value)?,
            "landing.altitude_band" => self.altitude_band_m = num(value)?,
            "fsm.visibility_dwell" => self.visibility_dwell_s = num(value)?,
            "fsm.loss_timeout" => self.loss_timeout_s = num(value)?,
            "landing1.distance_threshold" => self.l1_distance_m = num(value)?,
            "landing1.work_altitude" => self.l1_work_altitude_m = num(value)?,
            "landing1.dwell" => self.l1_dwell_s = num(value)?,
            "landing1.capture_radius" => self.l1_capture_radius_m = num(value)?,
            "landing1.transit_speed" => self.l1_transit_speed_mps = num(value)?,
            "landing1.outer_speed" => self.l1_outer_speed_mps = num(value)?,
            "ring.inner" => self.ring_inner_m = num(value)?,
            "ring.outer" => self.ring_outer_m = num(value)?,
            "landing2.distance_threshold" => self.l2_distance_m = num(value)?,
            "landing2.work_altitude" => self.l2_work_altitude_m = num(value)?,
            "landing2.yaw_threshold" => self.l2_yaw_threshold_deg = num(value)?,
            "landing2.dwell" => self.l2_dwell_s = num(value)?,
            "landing2.capture_radius" => self.l2_capture_radius_m = num(value)?,
            "landing2.transit_speed" => self.l2_transit_speed_mps = num(value)?,
            "landing2.outer_speed" => self.l2_outer_speed_mps = num(value)?,
            "landing3.work_altitude" => self.l3_work_altitude_m = num(value)?,
            "landing3.yaw_threshold" => self.l3_yaw_threshold_deg = num(value)?,
            "landing3.pitch_threshold" => self.l3_pitch_threshold_deg = num(value)?,
            "landing3.roll_threshold" => self.l3_roll_threshold_deg = num(value)?,
            "landing3.depth_threshold" => self.l3_depth_threshold_m = num(value)?,
            "landing3.settle_timeout" => self.settle_timeout_s = num(value)?,
            "criterion.desired_roll" => self.desired_roll_deg = num(value)?,
            "criterion.desired_pitch" => self.desired_pitch_deg = num(value)?,
            "batch.success_floor" => self.batch_success_floor = num(value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Checks every load-time invariant. Called by the loaders; exposed so
    /// hand-built configs can be checked too.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config { msg });
        if !(self.dt_s > 0.0 && self.dt_s <= 0.5) {
            return fail(format!("timing.dt {} outside (0, 0.5]", self.dt_s));
        }
        if self.max_duration_s <= 0.0 {
            return fail("timing.max_duration must be positive".into());
        }
        if self.seafloor_depth_m < self.panel_depth_m {
            return fail(format!(
                "world.seafloor_depth {} above sds.panel_depth {}",
                self.seafloor_depth_m, self.panel_depth_m
            ));
        }
        if !(0.0..=self.seafloor_depth_m).contains(&self.start_z_m) {
            return fail(format!("start.z {} outside the water column", self.start_z_m));
        }
        if self.ring_inner_m >= self.ring_outer_m {
            return fail(format!(
                "ring.inner {} must be below ring.outer {}",
                self.ring_inner_m, self.ring_outer_m
            ));
        }
        for (name, alt) in [
            ("landing1.work_altitude", self.l1_work_altitude_m),
            ("landing2.work_altitude", self.l2_work_altitude_m),
        ] {
            if alt >= self.panel_depth_m {
                return fail(format!("{name} {alt} puts the vehicle above the surface"));
            }
            let cone = effective_radius(alt, self.camera.divergence_deg);
            if self.ring_outer_m >= cone {
                return fail(format!(
                    "ring.outer {} not inside the lamp cone radius {cone:.3} at {name} {alt}",
                    self.ring_outer_m
                ));
            }
        }
        if self.l3_work_altitude_m >= self.l2_work_altitude_m
            || self.l2_work_altitude_m >= self.l1_work_altitude_m
        {
            return fail("work altitudes must step down through the landing phases".into());
        }
        for (name, rate) in [
            ("returning.usbl_rate", self.returning_usbl_rate),
            ("close.usbl_rate", self.close_usbl_rate),
            ("landing.usbl_rate", self.landing_usbl_rate),
        ] {
            if (rate - 1.5).abs() > 1e-9 && (rate - 3.0).abs() > 1e-9 {
                return fail(format!("{name} {rate} is not a supported fix rate (1.5 or 3)"));
            }
        }
        let mean = self.current.mean_x.hypot(self.current.mean_y);
        if mean + self.current.gust_amplitude > 0.5 {
            return fail(format!(
                "current mean {mean:.3} plus gusts {} exceeds 0.5 m/s",
                self.current.gust_amplitude
            ));
        }
        if self.current.gust_period_s <= 0.0 {
            return fail("current.gust_period must be positive".into());
        }
        for (name, v) in [
            ("returning.range", self.returning_range_m),
            ("returning.speed", self.returning_speed_mps),
            ("close.speed", self.close_speed_mps),
            ("fsm.visibility_dwell", self.visibility_dwell_s),
            ("fsm.loss_timeout", self.loss_timeout_s),
            ("landing.altitude_band", self.altitude_band_m),
            ("landing1.distance_threshold", self.l1_distance_m),
            ("landing1.dwell", self.l1_dwell_s),
            ("landing1.transit_speed", self.l1_transit_speed_mps),
            ("landing2.distance_threshold", self.l2_distance_m),
            ("landing2.transit_speed", self.l2_transit_speed_mps),
            ("landing2.yaw_threshold", self.l2_yaw_threshold_deg),
            ("landing2.dwell", self.l2_dwell_s),
            ("landing3.work_altitude", self.l3_work_altitude_m),
            ("landing3.yaw_threshold", self.l3_yaw_threshold_deg),
            ("landing3.pitch_threshold", self.l3_pitch_threshold_deg),
            ("landing3.roll_threshold", self.l3_roll_threshold_deg),
            ("landing3.depth_threshold", self.l3_depth_threshold_m),
            ("landing3.settle_timeout", self.settle_timeout_s),
            ("ring.inner", self.ring_inner_m),
        ] {
            if v <= 0.0 {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("sensors.imu_sigma", self.sensors.imu_sigma_deg),
            ("sensors.dvl_sigma", self.sensors.dvl_sigma_mps),
            ("sensors.altimeter_sigma", self.sensors.altimeter_sigma_m),
            ("sensors.depth_sigma", self.sensors.depth_sigma_m),
            ("sensors.usbl_sigma", self.sensors.usbl_sigma_m),
            ("sensors.usbl_latency", self.sensors.usbl_latency_s),
            ("sensors.usbl_upload_duration", self.sensors.usbl_upload_duration_s),
            ("camera.pixel_noise", self.sensors.pixel_noise_px),
            ("nav.drift_per_meter", self.nav.drift_per_meter),
            ("nav.drift_floor", self.nav.drift_floor_per_s),
            ("landing1.capture_radius", self.l1_capture_radius_m),
            ("landing2.capture_radius", self.l2_capture_radius_m),
        ] {
            if v < 0.0 {
                return fail(format!("{name} must not be negative, got {v}"));
            }
        }
        if self.nav.stale_after_s <= 0.0 {
            return fail("nav.stale_after must be positive".into());
        }
        if self.camera.width_px <= 0.0 || self.camera.height_px <= 0.0 {
            return fail("camera sensor must have positive pixel dimensions".into());
        }
        for (name, a, hi) in [
            ("camera.half_angle_h", self.camera.half_angle_h_deg, 90.0),
            ("camera.half_angle_v", self.camera.half_angle_v_deg, 90.0),
            ("camera.divergence", self.camera.divergence_deg, 180.0),
        ] {
            if !(a > 0.0 && a < hi) {
                return fail(format!("{name} {a} outside (0, {hi})"));
            }
        }
        if self.camera.offset_m < 0.0 {
            return fail("camera.offset must not be negative".into());
        }
        for (name, v) in [
            ("plant.mass", self.plant.mass_kg),
            ("plant.surge_inertia", self.plant.surge_inertia),
            ("plant.heave_inertia", self.plant.heave_inertia),
            ("plant.yaw_inertia", self.plant.yaw_inertia),
            ("plant.max_surge_thrust", self.plant.max_surge_thrust),
            ("plant.max_heave_thrust", self.plant.max_heave_thrust),
            ("plant.max_yaw_torque", self.plant.max_yaw_torque),
            ("plant.attitude_tau", self.plant.attitude_tau_s),
            ("plant.max_surge", self.plant.max_surge),
            ("plant.max_heave", self.plant.max_heave),
            ("plant.max_yaw_rate", self.plant.max_yaw_rate),
        ] {
            if v <= 0.0 {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("plant.surge_drag", self.plant.surge_drag),
            ("plant.heave_drag", self.plant.heave_drag),
            ("plant.yaw_drag", self.plant.yaw_drag),
            ("plant.attitude_disturbance", self.plant.attitude_disturbance_deg),
        ] {
            if v < 0.0 {
                return fail(format!("{name} must not be negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.batch_success_floor) {
            return fail(format!(
                "batch.success_floor {} outside [0, 1]",
                self.batch_success_floor
            ));
        }
        if self.footprint_half_width_m < 0.0 {
            return fail("sds.footprint_half_width must not be negative".into());
        }
        Ok(())
    }

    /// Serializes every setting as `key = value` lines that parse back to
    /// this config (with derived fields resolved).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut kv = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        kv("seed", self.seed.to_string());
        kv("timing.dt", self.dt_s.to_string());
        kv("timing.max_duration", self.max_duration_s.to_string());
        kv("sds.panel_depth", self.panel_depth_m.to_string());
        kv("sds.panel_yaw", self.panel_yaw_deg.to_string());
        kv("sds.footprint_half_width", self.footprint_half_width_m.to_string());
        kv("world.seafloor_depth", self.seafloor_depth_m.to_string());
        kv("start.x", self.start_x_m.to_string());
        kv("start.y", self.start_y_m.to_string());
        kv("start.z", self.start_z_m.to_string());
        kv("start.yaw", self.start_yaw_deg.to_string());
        kv("camera.width_px", self.camera.width_px.to_string());
        kv("camera.height_px", self.camera.height_px.to_string());
        kv("camera.half_angle_h", self.camera.half_angle_h_deg.to_string());
        kv("camera.half_angle_v", self.camera.half_angle_v_deg.to_string());
        kv("camera.divergence", self.camera.divergence_deg.to_string());
        kv("camera.offset", self.camera.offset_m.to_string());
        kv("camera.pixel_noise", self.sensors.pixel_noise_px.to_string());
        kv("plant.mass", self.plant.mass_kg.to_string());
        kv("plant.surge_inertia", self.plant.surge_inertia.to_string());
        kv("plant.heave_inertia", self.plant.heave_inertia.to_string());
        kv("plant.yaw_inertia", self.plant.yaw_inertia.to_string());
        kv("plant.surge_drag", self.plant.surge_drag.to_string());
        kv("plant.heave_drag", self.plant.heave_drag.to_string());
        kv("plant.yaw_drag", self.plant.yaw_drag.to_string());
        kv("plant.max_surge_thrust", self.plant.max_surge_thrust.to_string());
        kv("plant.max_heave_thrust", self.plant.max_heave_thrust.to_string());
        kv("plant.max_yaw_torque", self.plant.max_yaw_torque.to_string());
        kv("plant.attitude_tau", self.plant.attitude_tau_s.to_string());
        kv("plant.attitude_disturbance", self.plant.attitude_disturbance_deg.to_string());
        kv("plant.max_surge", self.plant.max_surge.to_string());
        kv("plant.max_heave", self.plant.max_heave.to_string());
        kv("plant.max_yaw_rate", self.plant.max_yaw_rate.to_string());
        kv("current.mean_x", self.current.mean_x.to_string());
        kv("current.mean_y", self.current.mean_y.to_string());
        kv("current.gust_amplitude", self.current.gust_amplitude.to_string());
        kv("current.gust_period", self.current.gust_period_s.to_string());
        kv("sensors.imu_sigma", self.sensors.imu_sigma_deg.to_string());
        kv("sensors.dvl_sigma", self.sensors.dvl_sigma_mps.to_string());
        kv("sensors.altimeter_sigma", self.sensors.altimeter_sigma_m.to_string());
        kv("sensors.depth_sigma", self.sensors.depth_sigma_m.to_string());
        kv("sensors.usbl_sigma", self.sensors.usbl_sigma_m.to_string());
        kv("sensors.usbl_latency", self.sensors.usbl_latency_s.to_string());
        kv("sensors.usbl_upload_duration", self.sensors.usbl_upload_duration_s.to_string());
        kv("nav.drift_per_meter", self.nav.drift_per_meter.to_string());
        kv("nav.drift_floor", self.nav.drift_floor_per_s.to_string());
        kv("nav.stale_after", self.nav.stale_after_s.to_string());
        kv("control.yaw_kp", self.control.yaw.kp.to_string());
        kv("control.yaw_ki", self.control.yaw.ki.to_string());
        kv("control.yaw_kd", self.control.yaw.kd.to_string());
        kv("control.yaw_integral_clamp", self.control.yaw.integral_clamp.to_string());
        kv("control.speed_kp", self.control.speed.kp.to_string());
        kv("control.speed_ki", self.control.speed.ki.to_string());
        kv("control.speed_kd", self.control.speed.kd.to_string());
        kv("control.speed_integral_clamp", self.control.speed.integral_clamp.to_string());
        kv("control.vertical_kp", self.control.vertical.kp.to_string());
        kv("control.vertical_ki", self.control.vertical.ki.to_string());
        kv("control.vertical_kd", self.control.vertical.kd.to_string());
        kv("control.vertical_integral_clamp", self.control.vertical.integral_clamp.to_string());
        kv("control.derivative_smoothing", self.control.derivative_smoothing.to_string());
        kv("returning.range", self.returning_range_m.to_string());
        kv("returning.speed", self.returning_speed_mps.to_string());
        kv("returning.altitude", self.returning_altitude_m().to_string());
        kv("returning.usbl_rate", self.returning_usbl_rate.to_string());
        kv("close.speed", self.close_speed_mps.to_string());
        kv("close.depth", self.close_depth_m().to_string());
        kv("close.usbl_rate", self.close_usbl_rate.to_string());
        kv("landing.usbl_rate", self.landing_usbl_rate.to_string());
        kv("landing.altitude_band", self.altitude_band_m.to_string());
        kv("fsm.visibility_dwell", self.visibility_dwell_s.to_string());
        kv("fsm.loss_timeout", self.loss_timeout_s.to_string());
        kv("landing1.distance_threshold", self.l1_distance_m.to_string());
        kv("landing1.work_altitude", self.l1_work_altitude_m.to_string());
        kv("landing1.dwell", self.l1_dwell_s.to_string());
        kv("landing1.capture_radius", self.l1_capture_radius_m.to_string());
        kv("landing1.transit_speed", self.l1_transit_speed_mps.to_string());
        kv("landing1.outer_speed", self.l1_outer_speed_mps.to_string());
        kv("ring.inner", self.ring_inner_m.to_string());
        kv("ring.outer", self.ring_outer_m.to_string());
        kv("landing2.distance_threshold", self.l2_distance_m.to_string());
        kv("landing2.work_altitude", self.l2_work_altitude_m.to_string());
        kv("landing2.yaw_threshold", self.l2_yaw_threshold_deg.to_string());
        kv("landing2.dwell", self.l2_dwell_s.to_string());
        kv("landing2.capture_radius", self.l2_capture_radius_m.to_string());
        kv("landing2.transit_speed", self.l2_transit_speed_mps.to_string());
        kv("landing2.outer_speed", self.l2_outer_speed_mps.to_string());
        kv("landing3.work_altitude", self.l3_work_altitude_m.to_string());
        kv("landing3.yaw_threshold", self.l3_yaw_threshold_deg.to_string());
        kv("landing3.pitch_threshold", self.l3_pitch_threshold_deg.to_string());
        kv("landing3.roll_threshold", self.l3_roll_threshold_deg.to_string());
        kv("landing3.depth_threshold", self.l3_depth_threshold_m.to_string());
        kv("landing3.settle_timeout", self.settle_timeout_s.to_string());
        kv("criterion.desired_roll", self.desired_roll_deg.to_string());
        kv("criterion.desired_pitch", self.desired_pitch_deg.to_string());
        kv("batch.success_floor", self.batch_success_floor.to_string());
        out
    }
}

/// Parses scenario text. Defaults fill everything the text does not set;
/// errors carry the 1-based line number.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(Error::ConfigLine { line, msg: format!("expected key = value, got '{body}'") });
        };
        cfg.apply(key.trim(), value.trim())
            .map_err(|msg| Error::ConfigLine { line, msg })?;
    }
    Ok(cfg)
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_scenario(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_table_defaults() {
        let cfg = parse_scenario("").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.returning_range_m, 15.0);
        assert_eq!(cfg.returning_speed_mps, 1.0);
        assert_eq!(cfg.close_speed_mps, 0.3);
        assert_eq!(cfg.l1_distance_m, 1.0);
        assert_eq!(cfg.l2_distance_m, 0.7);
        assert_eq!(cfg.l2_yaw_threshold_deg, 10.0);
        assert_eq!(cfg.l1_work_altitude_m, 5.0);
        assert_eq!(cfg.l2_work_altitude_m, 3.5);
        assert_eq!(cfg.l3_work_altitude_m, 0.2);
        assert_eq!(cfg.ring_inner_m, 0.3);
        assert_eq!(cfg.ring_outer_m, 1.5);
        assert_eq!(cfg.returning_usbl_rate, 1.5);
        assert_eq!(cfg.close_usbl_rate, 3.0);
        assert_eq!(cfg.l3_yaw_threshold_deg, 45.0);
        assert_eq!(cfg.l3_depth_threshold_m, 0.2);
    }

    #[test]
    fn derived_fields_follow_the_panel() {
        let cfg = parse_scenario("sds.panel_depth = 18.2\nworld.seafloor_depth = 20").unwrap();
        assert!((cfg.close_depth_m() - 13.2).abs() < 1e-12);
        assert!((cfg.returning_altitude_m() - 6.8).abs() < 1e-12);
        let cfg = parse_scenario("close.depth = 12\nreturning.altitude = 5").unwrap();
        assert_eq!(cfg.close_depth_m(), 12.0);
        assert_eq!(cfg.returning_altitude_m(), 5.0);
    }

    #[test]
    fn yaw_threshold_key_reaches_the_mission_params() {
        let cfg = parse_scenario("landing2.yaw_threshold = 10").unwrap();
        assert_eq!(cfg.mission_params().l2_yaw_threshold_deg, 10.0);
        let cfg = parse_scenario("landing2.yaw_threshold = 7.5").unwrap();
        assert_eq!(cfg.mission_params().l2_yaw_threshold_deg, 7.5);
    }

    #[test]
    fn inverted_speed_rings_fail_validation() {
        let cfg = parse_scenario("ring.inner = 2.0\nring.outer = 1.5").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("ring.inner"), "{err}");
    }

    #[test]
    fn unknown_key_names_the_line() {
        let text = "seed = 4\n\nlanding2.yaw_treshold = 10\n";
        let err = parse_scenario(text).unwrap_err();
        match err {
            Error::ConfigLine { line, ref msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("landing2.yaw_treshold"), "{msg}");
            }
            other => panic!("expected a line error, got {other}"),
        }
    }

    #[test]
    fn bad_number_names_the_line() {
        let err = parse_scenario("timing.dt = fast").unwrap_err();
        match err {
            Error::ConfigLine { line, ref msg } => {
                assert_eq!(line, 1);
                assert!(msg.contains("fast"), "{msg}");
            }
            other => panic!("expected a line error, got {other}"),
        }
        assert!(parse_scenario("timing.dt").is_err());
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let text = "# pool setup\n\nseed = 9   # pinned\n  \n# done\n";
        let cfg = parse_scenario(text).unwrap();
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn dump_round_trips_through_the_parser() {
        let cfg = ScenarioConfig::default();
        let dumped = cfg.dump();
        let reparsed = parse_scenario(&dumped).unwrap();
        reparsed.validate().unwrap();
        assert_eq!(reparsed.dump(), dumped);
        // A non-default config survives the round trip too.
        let cfg = parse_scenario(
            "sds.panel_yaw = -30\ncurrent.mean_x = 0.05\nlanding3.settle_timeout = 12.5",
        )
        .unwrap();
        let reparsed = parse_scenario(&cfg.dump()).unwrap();
        assert_eq!(reparsed.dump(), cfg.dump());
        assert_eq!(reparsed.panel_yaw_deg, -30.0);
    }

    #[test]
    fn validation_rejects_out_of_range_settings() {
        for bad in [
            "timing.dt = 0",
            "timing.dt = 0.6",
            "returning.usbl_rate = 2.0",
            "current.mean_x = 0.45\ncurrent.gust_amplitude = 0.1",
            "start.z = -1",
            "start.z = 25",
            "world.seafloor_depth = 17",
            "landing.altitude_band = 0",
            "ring.outer = 4.0",
            "landing2.work_altitude = 6",
            "batch.success_floor = 1.2",
            "camera.divergence = 190",
        ] {
            let cfg = parse_scenario(bad).unwrap();
            assert!(cfg.validate().is_err(), "expected rejection: {bad}");
        }
    }

    #[test]
    fn load_reports_missing_files() {
        let err = load_scenario(std::path::Path::new("/nonexistent/file.scn"));
        assert!(matches!(err, Err(Error::Io(_))));
    }

    #[test]
    fn load_reads_and_validates_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.scn");
        std::fs::write(&path, "seed = 77\nsds.panel_yaw = 15\n").unwrap();
        let cfg = load_scenario(&path).unwrap();
        assert_eq!(cfg.seed, 77);
        assert_eq!(cfg.criterion_thresholds().desired_yaw_deg, 15.0);
        std::fs::write(&path, "ring.inner = 2.0\n").unwrap();
        assert!(load_scenario(&path).is_err());
    }
}

//! Discrete-time vehicle plant: decoupled surge, heave and yaw dynamics with
//! quadratic drag, passive roll/pitch restoring, and an ambient current that
//! advects the vehicle without exciting its body dynamics.
//!
//! Integration is semi-implicit Euler: velocities first, then the pose from
//! the updated velocities.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::frames::{wrap_deg, ActuatorCommand, BodyVelocity, Pose};

/// Physical parameters of the vehicle. The effective inertias include added
/// mass, so they exceed the dry mass; drags are quadratic coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Dry mass in kg.
    pub mass_kg: f64,
    /// Effective surge inertia in kg (mass plus added mass).
    pub surge_inertia: f64,
    /// Effective heave inertia in kg.
    pub heave_inertia: f64,
    /// Effective yaw inertia in kg m^2.
    pub yaw_inertia: f64,
    /// Quadratic surge drag in N s^2/m^2. With max thrust equal to the drag
    /// coefficient the terminal surge speed is exactly 1 m/s.
    pub surge_drag: f64,
    /// Quadratic heave drag in N s^2/m^2.
    pub heave_drag: f64,
    /// Quadratic yaw drag in N m s^2/rad^2.
    pub yaw_drag: f64,
    /// Thrust at full surge command in N.
    pub max_surge_thrust: f64,
    /// Thrust at full vertical command in N.
    pub max_heave_thrust: f64,
    /// Torque at full yaw command in N m.
    pub max_yaw_torque: f64,
    /// Passive roll/pitch restoring time constant in s.
    pub attitude_tau_s: f64,
    /// Standard deviation of the stationary roll/pitch disturbance in deg.
    pub attitude_disturbance_deg: f64,
    /// Surge speed cap in m/s.
    pub max_surge: f64,
    /// Heave speed cap in m/s.
    pub max_heave: f64,
    /// Yaw rate cap in deg/s.
    pub max_yaw_rate: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            mass_kg: 760.0,
            surge_inertia: 1000.0,
            heave_inertia: 1200.0,
            yaw_inertia: 500.0,
            surge_drag: 400.0,
            heave_drag: 1875.0,
            yaw_drag: 1500.0,
            max_surge_thrust: 400.0,
            max_heave_thrust: 300.0,
            max_yaw_torque: 400.0,
            attitude_tau_s: 3.0,
            attitude_disturbance_deg: 1.0,
            max_surge: 1.2,
            max_heave: 0.5,
            max_yaw_rate: 30.0,
        }
    }
}

/// Horizontal ambient current: a mean vector plus a sinusoidal gust along the
/// mean direction. Deterministic in t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentField {
    pub mean_x: f64,
    pub mean_y: f64,
    /// Gust amplitude in m/s, applied along the mean direction (north if the
    /// mean is zero).
    pub gust_amplitude: f64,
    /// Gust period in s.
    pub gust_period_s: f64,
}

impl Default for CurrentField {
    fn default() -> Self {
        CurrentField { mean_x: 0.0, mean_y: 0.0, gust_amplitude: 0.0, gust_period_s: 60.0 }
    }
}

/// Current vector at time t.
pub fn current_at(t: f64, field: &CurrentField) -> (f64, f64) {
    let mag = field.mean_x.hypot(field.mean_y);
    let dir = if mag > 0.0 {
        (field.mean_x / mag, field.mean_y / mag)
    } else {
        (1.0, 0.0)
    };
    let gust = field.gust_amplitude * (2.0 * std::f64::consts::PI * t / field.gust_period_s).sin();
    (field.mean_x + gust * dir.0, field.mean_y + gust * dir.1)
}

/// Advances the vehicle one time step under the given actuator command and
/// ambient current. The roll/pitch disturbance draws two samples from `rng`
/// on every call so the noise stream layout does not depend on parameters.
pub fn plant_step<R: Rng>(
    params: &PlantParams,
    pose: &Pose,
    vel: &BodyVelocity,
    cmd: &ActuatorCommand,
    current: (f64, f64),
    dt: f64,
    rng: &mut R,
) -> Result<(Pose, BodyVelocity)> {
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(Error::Domain(format!("plant_step dt {dt} outside (0, 0.5]")));
    }
    let fx = cmd.fx.clamp(-1.0, 1.0);
    let fz = cmd.fz.clamp(-1.0, 1.0);
    let tz = cmd.tz.clamp(-1.0, 1.0);

    let u = vel.u + dt * (fx * params.max_surge_thrust - params.surge_drag * vel.u * vel.u.abs())
        / params.surge_inertia;
    let u = u.clamp(-params.max_surge, params.max_surge);

    let w = vel.w + dt * (fz * params.max_heave_thrust - params.heave_drag * vel.w * vel.w.abs())
        / params.heave_inertia;
    let w = w.clamp(-params.max_heave, params.max_heave);

    let r_rad = vel.r_yaw.to_radians();
    let r_rad = r_rad
        + dt * (tz * params.max_yaw_torque - params.yaw_drag * r_rad * r_rad.abs())
            / params.yaw_inertia;
    let r_yaw = r_rad.to_degrees().clamp(-params.max_yaw_rate, params.max_yaw_rate);

    let yaw = wrap_deg(pose.yaw + dt * r_yaw);
    let (s, c) = yaw.to_radians().sin_cos();

    // Ornstein-Uhlenbeck-style restoring keeps roll/pitch near zero with the
    // configured stationary spread. Draw even when the amplitude is zero.
    let n_roll: f64 = rng.sample(StandardNormal);
    let n_pitch: f64 = rng.sample(StandardNormal);
    let decay = 1.0 - dt / params.attitude_tau_s;
    let kick = params.attitude_disturbance_deg * (2.0 * dt / params.attitude_tau_s).sqrt();
    let roll = (pose.roll * decay + kick * n_roll).clamp(-90.0, 90.0);
    let pitch = (pose.pitch * decay + kick * n_pitch).clamp(-90.0, 90.0);

    let next = Pose {
        x: pose.x + dt * (u * c + current.0),
        y: pose.y + dt * (u * s + current.1),
        z: (pose.z + dt * w).max(0.0),
        roll,
        pitch,
        yaw,
    };
    Ok((next, BodyVelocity { u, w, r_yaw }))
}

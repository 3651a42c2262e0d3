//! Frames, angle wrapping and the shared vehicle state records.
//!
//! Angles are stored in degrees throughout the library and wrapped to
//! (-180, 180]. Conversions to radians happen only inside trigonometric
//! evaluations.

use crate::error::{Error, Result};

/// Vehicle pose in the earth frame (x north, y east, z depth-down, angles
/// in degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Pose {
    /// Horizontal distance from the earth-frame origin (the station center).
    pub fn horizontal_range(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Body-frame velocity: surge u (m/s, forward), heave w (m/s, down) and yaw
/// rate (deg/s, positive toward east).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyVelocity {
    pub u: f64,
    pub w: f64,
    pub r_yaw: f64,
}

impl BodyVelocity {
    pub fn zero() -> Self {
        BodyVelocity { u: 0.0, w: 0.0, r_yaw: 0.0 }
    }
}

/// Normalized actuator demands, each clamped to [-1, 1]: fx horizontal
/// thrust along the body x axis, fz vertical thrust (positive down), tz yaw
/// torque (positive toward east).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorCommand {
    pub fx: f64,
    pub fz: f64,
    pub tz: f64,
}

impl ActuatorCommand {
    pub fn zero() -> Self {
        ActuatorCommand { fx: 0.0, fz: 0.0, tz: 0.0 }
    }

    /// Builds a command with every channel clamped to [-1, 1].
    pub fn clamped(fx: f64, fz: f64, tz: f64) -> Self {
        ActuatorCommand {
            fx: fx.clamp(-1.0, 1.0),
            fz: fz.clamp(-1.0, 1.0),
            tz: tz.clamp(-1.0, 1.0),
        }
    }
}

/// Wraps an angle in degrees to (-180, 180].
///
/// The upper boundary is inclusive: -180 wraps to +180 so every angle has a
/// single representation.
pub fn wrap_angle(deg: f64) -> Result<f64> {
    if !deg.is_finite() {
        return Err(Error::Domain(format!("wrap_angle of non-finite {deg}")));
    }
    Ok(wrap_deg(deg))
}

/// Total wrapping helper for values already known to be finite.
pub(crate) fn wrap_deg(deg: f64) -> f64 {
    // rem_euclid lands in [0, 360); map (180, 360) down, keep [0, 180].
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Rotates a body-frame offset into the earth frame for a vehicle at yaw
/// theta (degrees): (x_E, y_E) = R(theta) (x_B, y_B) with the standard 2-D
/// rotation matrix.
pub fn rotate_body_to_earth(x_b: f64, y_b: f64, theta_deg: f64) -> Result<(f64, f64)> {
    if !x_b.is_finite() || !y_b.is_finite() || !theta_deg.is_finite() {
        return Err(Error::Domain("rotate_body_to_earth of non-finite input".into()));
    }
    let (s, c) = theta_deg.to_radians().sin_cos();
    Ok((c * x_b - s * y_b, s * x_b + c * y_b))
}

/// Rotates an earth-frame offset into the body frame (inverse of
/// `rotate_body_to_earth`).
pub(crate) fn rotate_earth_to_body(x_e: f64, y_e: f64, theta_deg: f64) -> (f64, f64) {
    let (s, c) = theta_deg.to_radians().sin_cos();
    (c * x_e + s * y_e, -s * x_e + c * y_e)
}

/// Compass bearing in degrees from one horizontal position to another.
/// A target due north of `from` gives 0.
pub fn bearing_deg(from: (f64, f64), to: (f64, f64)) -> f64 {
    let dx = to.0 - from.0;
    let dy = to.1 - from.1;
    wrap_deg(dy.atan2(dx).to_degrees())
}

//! Optical guidance geometry: from the lamp's pixel position on the camera
//! sensor to the vehicle's horizontal position in the earth frame.
//!
//! The downward camera sits at body offset (0, -L) from the vehicle center.
//! The recovery chain runs pixel deviation -> deviation angles -> camera
//! coordinates -> body coordinates -> earth position, and `project_spot` is
//! its exact inverse so a synthesized observation reproduces the pose that
//! generated it.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::frames::{rotate_body_to_earth, rotate_earth_to_body, Pose};

/// Camera and lamp geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraParams {
    /// Sensor width in pixels (M).
    pub width_px: f64,
    /// Sensor height in pixels (N).
    pub height_px: f64,
    /// Horizontal half field of view in degrees (alpha0).
    pub half_angle_h_deg: f64,
    /// Vertical half field of view in degrees (beta0).
    pub half_angle_v_deg: f64,
    /// Full divergence angle of the docking lamp's cone in degrees (rho).
    pub divergence_deg: f64,
    /// Lateral offset of the camera from the vehicle center in meters (L).
    pub offset_m: f64,
}

impl Default for CameraParams {
    fn default() -> Self {
        CameraParams {
            width_px: 1920.0,
            height_px: 1080.0,
            half_angle_h_deg: 35.0,
            half_angle_v_deg: 35.0,
            divergence_deg: 70.0,
            offset_m: 0.5,
        }
    }
}

/// One camera frame's worth of lamp observation. Pixel coordinates are
/// deviations from the sensor center; `h_m` is the depth difference from the
/// camera down to the lamp. Pixel values are only meaningful when `visible`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpotObservation {
    pub u_px: f64,
    pub v_px: f64,
    pub visible: bool,
    pub h_m: f64,
}

impl SpotObservation {
    pub fn not_visible(h_m: f64) -> Self {
        SpotObservation { u_px: 0.0, v_px: 0.0, visible: false, h_m }
    }
}

/// Radius of the lamp's illuminated disk at depth difference `h` below the
/// camera plane: R = tan(rho/2) * h.
pub fn effective_radius(h_m: f64, divergence_deg: f64) -> f64 {
    (divergence_deg / 2.0).to_radians().tan() * h_m
}

/// Recovers the deviation angles (alpha, beta) in degrees from the pixel
/// deviations: alpha = atan((2u/M) tan alpha0), beta = atan((2v/N) tan beta0).
pub fn deviation_angles(u_px: f64, v_px: f64, cam: &CameraParams) -> Result<(f64, f64)> {
    if !u_px.is_finite() || !v_px.is_finite() {
        return Err(Error::Domain("deviation_angles of non-finite pixel".into()));
    }
    if u_px.abs() > cam.width_px / 2.0 || v_px.abs() > cam.height_px / 2.0 {
        return Err(Error::Domain(format!(
            "pixel deviation ({u_px:.1}, {v_px:.1}) outside the {}x{} sensor",
            cam.width_px, cam.height_px
        )));
    }
    let alpha = (2.0 * u_px / cam.width_px * cam.half_angle_h_deg.to_radians().tan())
        .atan()
        .to_degrees();
    let beta = (2.0 * v_px / cam.height_px * cam.half_angle_v_deg.to_radians().tan())
        .atan()
        .to_degrees();
    Ok((alpha, beta))
}

/// Lamp position in the camera frame at depth difference `h`:
/// x_C = h tan(beta), y_C = h tan(alpha).
pub fn camera_coords(alpha_deg: f64, beta_deg: f64, h_m: f64) -> (f64, f64) {
    (h_m * beta_deg.to_radians().tan(), h_m * alpha_deg.to_radians().tan())
}

/// Shifts camera coordinates to the body frame: the camera sits offset_m to
/// port, so x_B = x_C and y_B = y_C - L.
pub fn body_coords(x_c: f64, y_c: f64, offset_m: f64) -> (f64, f64) {
    (x_c, y_c - offset_m)
}

/// Vehicle position in the earth frame from the lamp's body coordinates:
/// (x, y) = -R(theta) (x_B, y_B), valid while the lamp is at the origin.
pub fn earth_position(x_b: f64, y_b: f64, theta_deg: f64) -> Result<(f64, f64)> {
    let (xe, ye) = rotate_body_to_earth(x_b, y_b, theta_deg)?;
    Ok((-xe, -ye))
}

/// Runs the full recovery chain on one observation. `h_m` is the depth
/// difference the consumer believes in (typically lamp depth minus measured
/// vehicle depth); `yaw_deg` the vehicle heading at exposure time.
pub fn optical_fix(
    spot: &SpotObservation,
    cam: &CameraParams,
    yaw_deg: f64,
    h_m: f64,
) -> Result<(f64, f64)> {
    let (alpha, beta) = deviation_angles(spot.u_px, spot.v_px, cam)?;
    let (x_c, y_c) = camera_coords(alpha, beta, h_m);
    let (x_b, y_b) = body_coords(x_c, y_c, cam.offset_m);
    earth_position(x_b, y_b, yaw_deg)
}

/// Synthesizes the lamp's pixel position as seen from `vehicle`, with the
/// lamp at earth position `lamp` (x, y, depth). Exact inverse of the
/// recovery chain; noiseless.
pub fn project_spot(vehicle: &Pose, lamp: (f64, f64, f64), cam: &CameraParams) -> SpotObservation {
    let h = lamp.2 - vehicle.z;
    if h <= 0.0 {
        return SpotObservation::not_visible(h);
    }
    // Lamp offset in the body frame, then relative to the camera at (0, -L).
    let (x_b, y_b) = rotate_earth_to_body(lamp.0 - vehicle.x, lamp.1 - vehicle.y, vehicle.yaw);
    let x_c = x_b;
    let y_c = y_b + cam.offset_m;
    let alpha = (y_c / h).atan();
    let beta = (x_c / h).atan();
    let u = cam.width_px / 2.0 * alpha.tan() / cam.half_angle_h_deg.to_radians().tan();
    let v = cam.height_px / 2.0 * beta.tan() / cam.half_angle_v_deg.to_radians().tan();

    // The camera must sit inside the lamp's illuminated cone and the spot on
    // the sensor.
    let r_cam = x_c.hypot(y_c);
    let visible = r_cam <= effective_radius(h, cam.divergence_deg)
        && u.abs() <= cam.width_px / 2.0
        && v.abs() <= cam.height_px / 2.0;
    SpotObservation { u_px: u, v_px: v, visible, h_m: h }
}

/// Adds Gaussian pixel noise to a visible observation, clamped to the sensor
/// bounds so downstream recovery stays in domain.
pub fn jitter_spot<R: Rng>(
    spot: &SpotObservation,
    sigma_px: f64,
    cam: &CameraParams,
    rng: &mut R,
) -> SpotObservation {
    let nu: f64 = rng.sample(StandardNormal);
    let nv: f64 = rng.sample(StandardNormal);
    if !spot.visible || sigma_px == 0.0 {
        return *spot;
    }
    SpotObservation {
        u_px: (spot.u_px + sigma_px * nu).clamp(-cam.width_px / 2.0, cam.width_px / 2.0),
        v_px: (spot.v_px + sigma_px * nv).clamp(-cam.height_px / 2.0, cam.height_px / 2.0),
        ..*spot
    }
}

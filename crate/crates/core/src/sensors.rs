//! Sensor models and acoustic-inertial navigation.
//!
//! The IMU and DVL sample every tick, the altimeter loses bottom lock over
//! the station (same acoustic path as the docking panel), and the USBL link
//! alternates position fixes with status uploads on a half-duplex schedule.
//! Dead reckoning integrates DVL ground velocity under the IMU heading and
//! carries a scalar drift radius that sparse USBL fixes contract.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::frames::{rotate_body_to_earth, rotate_earth_to_body, wrap_deg, BodyVelocity, Pose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuReading {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub t: f64,
}

/// Bottom-lock DVL sample: body-frame velocity over ground. Fields carry no
/// usable payload when `valid` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DvlReading {
    pub u: f64,
    pub w: f64,
    pub altitude: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltimeterReading {
    pub altitude: f64,
    pub occluded: bool,
}

/// One USBL position fix. The fix is computed at `emitted_at` and reaches
/// the vehicle `latency_s` later; `carries_upload` marks the fixes whose
/// transmission cycle also uploads the vehicle status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsblFix {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub emitted_at: f64,
    pub latency_s: f64,
    pub carries_upload: bool,
}

/// Acoustic-inertial position estimate with a scalar drift radius as the
/// covariance proxy. `last_speed` remembers the most recent valid DVL surge
/// for propagation through dropouts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavEstimate {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub drift: f64,
    pub last_speed: f64,
}

impl NavEstimate {
    /// Initializes the estimate at a known deployment pose with zero drift.
    pub fn at(pose: &Pose) -> Self {
        NavEstimate { x: pose.x, y: pose.y, yaw: pose.yaw, drift: 0.0, last_speed: 0.0 }
    }

    pub fn horizontal_range(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// True when the horizontal position sits over the station's occlusion
/// footprint, boundary inclusive.
pub fn occluded(x: f64, y: f64, half_width: f64) -> bool {
    x.abs() <= half_width && y.abs() <= half_width
}

pub fn sample_imu<R: Rng>(pose: &Pose, t: f64, sigma_deg: f64, rng: &mut R) -> ImuReading {
    let nr: f64 = rng.sample(StandardNormal);
    let np: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    ImuReading {
        roll: (pose.roll + sigma_deg * nr).clamp(-90.0, 90.0),
        pitch: (pose.pitch + sigma_deg * np).clamp(-90.0, 90.0),
        yaw: wrap_deg(pose.yaw + sigma_deg * ny),
        t,
    }
}

/// Samples the DVL. Bottom lock measures velocity over ground, so the
/// ambient current shows up in the body-frame reading; lock is lost over the
/// station footprint.
#[allow(clippy::too_many_arguments)]
pub fn sample_dvl<R: Rng>(
    pose: &Pose,
    vel: &BodyVelocity,
    current: (f64, f64),
    seafloor_depth: f64,
    footprint_half_width: f64,
    sigma_mps: f64,
    altitude_sigma_m: f64,
    rng: &mut R,
) -> DvlReading {
    let nu: f64 = rng.sample(StandardNormal);
    let nw: f64 = rng.sample(StandardNormal);
    let na: f64 = rng.sample(StandardNormal);
    if occluded(pose.x, pose.y, footprint_half_width) {
        return DvlReading { u: 0.0, w: 0.0, altitude: 0.0, valid: false };
    }
    let (c_along, _) = rotate_earth_to_body(current.0, current.1, pose.yaw);
    DvlReading {
        u: vel.u + c_along + sigma_mps * nu,
        w: vel.w + sigma_mps * nw,
        altitude: seafloor_depth - pose.z + altitude_sigma_m * na,
        valid: true,
    }
}

/// Samples the acoustic altimeter. Over the station footprint the return
/// bounces off the structure and the reading fluctuates within +-50% of the
/// true height; elsewhere it is the true height plus Gaussian noise.
pub fn sample_altimeter<R: Rng>(
    pose: &Pose,
    seafloor_depth: f64,
    footprint_half_width: f64,
    sigma_m: f64,
    rng: &mut R,
) -> AltimeterReading {
    let n: f64 = rng.sample(StandardNormal);
    let u: f64 = rng.gen_range(0.5..1.5);
    let truth = seafloor_depth - pose.z;
    if occluded(pose.x, pose.y, footprint_half_width) {
        AltimeterReading { altitude: truth * u, occluded: true }
    } else {
        AltimeterReading { altitude: truth + sigma_m * n, occluded: false }
    }
}

/// Pressure-derived depth measurement.
pub fn sample_depth<R: Rng>(pose: &Pose, sigma_m: f64, rng: &mut R) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    (pose.z + sigma_m * n).max(0.0)
}

/// Half-duplex USBL link. Fixes are emitted on the phase's schedule; a fix
/// whose cycle carries a status upload keeps the link busy for the upload
/// duration, and no fix is emitted while an upload is in flight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsblLink {
    last_emit: Option<f64>,
    busy_until: f64,
    upload_duration_s: f64,
}

impl UsblLink {
    pub fn new(upload_duration_s: f64) -> Self {
        UsblLink { last_emit: None, busy_until: 0.0, upload_duration_s }
    }

    /// True while a status upload occupies the link.
    pub fn uploading(&self, t: f64) -> bool {
        t < self.busy_until - 1e-9
    }

    /// Polls the link at time t with the current phase's fix rate
    /// (fixes per minute) and upload policy. Returns a fix when one is due
    /// and the link is idle. The fix position is the true pose corrupted by
    /// per-axis Gaussian noise.
    #[allow(clippy::too_many_arguments)]
    pub fn poll<R: Rng>(
        &mut self,
        t: f64,
        rate_per_min: f64,
        upload: bool,
        truth: &Pose,
        sigma_m: f64,
        latency_s: f64,
        rng: &mut R,
    ) -> Result<Option<UsblFix>> {
        if (rate_per_min - 1.5).abs() > 1e-9 && (rate_per_min - 3.0).abs() > 1e-9 {
            return Err(Error::Config {
                msg: format!("unsupported USBL fix rate {rate_per_min} per minute"),
            });
        }
        let period = 60.0 / rate_per_min;
        let due = self.last_emit.is_none_or(|le| t >= le + period - 1e-9);
        if !due || self.uploading(t) {
            return Ok(None);
        }
        self.last_emit = Some(t);
        if upload {
            self.busy_until = t + self.upload_duration_s;
        }
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let nz: f64 = rng.sample(StandardNormal);
        Ok(Some(UsblFix {
            x: truth.x + sigma_m * nx,
            y: truth.y + sigma_m * ny,
            z: truth.z + sigma_m * nz,
            emitted_at: t,
            latency_s,
            carries_upload: upload,
        }))
    }
}

/// Advances the dead-reckoned estimate by one tick. The heading comes
/// straight from the IMU; position integrates the DVL ground velocity rotated
/// into the earth frame. The drift radius grows with distance traveled (at
/// double rate on dropout, propagating the last valid speed) and never slower
/// than the configured floor.
pub fn dead_reckon(
    nav: &NavEstimate,
    imu: &ImuReading,
    dvl: &DvlReading,
    dt: f64,
    drift_per_meter: f64,
    drift_floor_per_s: f64,
) -> NavEstimate {
    let (u, rate, last_speed) = if dvl.valid {
        (dvl.u, drift_per_meter, dvl.u)
    } else {
        (nav.last_speed, 2.0 * drift_per_meter, nav.last_speed)
    };
    let (dx, dy) = rotate_body_to_earth(u * dt, 0.0, imu.yaw)
        .expect("finite dead-reckoning inputs");
    let growth = (rate * (u * dt).abs()).max(drift_floor_per_s * dt);
    NavEstimate {
        x: nav.x + dx,
        y: nav.y + dy,
        yaw: imu.yaw,
        drift: nav.drift + growth,
        last_speed,
    }
}

/// Blends a USBL fix into the estimate. The blend gain compares the drift
/// radius against the fix noise, so a fresh estimate ignores the fix and a
/// badly drifted one jumps to it; the drift radius contracts to match. Fixes
/// older than `stale_after_s` are rejected outright. Heading is untouched.
pub fn usbl_correct(
    nav: &NavEstimate,
    fix: &UsblFix,
    now: f64,
    sigma_m: f64,
    stale_after_s: f64,
) -> NavEstimate {
    if now - fix.emitted_at > stale_after_s {
        return *nav;
    }
    let d2 = nav.drift * nav.drift;
    let s2 = sigma_m * sigma_m;
    if d2 + s2 == 0.0 {
        return *nav;
    }
    let g = d2 / (d2 + s2);
    NavEstimate {
        x: nav.x + g * (fix.x - nav.x),
        y: nav.y + g * (fix.y - nav.y),
        yaw: nav.yaw,
        drift: nav.drift * (1.0 - g).sqrt(),
        last_speed: nav.last_speed,
    }
}

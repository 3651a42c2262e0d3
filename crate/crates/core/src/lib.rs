//! Simulation library for a disk-shaped hovering AUV docking onto a seabed
//! station.
//!
//! The docking procedure runs in two stages. During homing the vehicle flies
//! back toward the station on acoustic-inertial navigation (IMU + DVL dead
//! reckoning corrected by sparse USBL fixes). Once the station's docking lamp
//! is in view the vehicle switches to optical guidance and steps down through
//! three landing phases at decreasing work altitudes until an attitude/depth
//! criterion declares the dock complete.
//!
//! ## Coordinate conventions
//!
//! * Earth frame: origin at the station center, x north, y east, z down
//!   (depth in meters, positive below the surface).
//! * Yaw is a compass heading in degrees: 0 = north, positive toward east,
//!   wrapped to (-180, 180].
//! * Body frame: x forward (surge), y starboard. `rotate_body_to_earth`
//!   maps body offsets into the earth frame.
//! * Altitude means height above the seafloor for the altimeter and height
//!   above the station panel for the landing work altitudes; both are derived
//!   from depths and never stored separately.

pub mod control;
pub mod error;
pub mod fsm;
pub mod frames;
pub mod optics;
pub mod plant;
pub mod scenario;
pub mod sensors;
pub mod sim;

pub use error::{Error, Result};

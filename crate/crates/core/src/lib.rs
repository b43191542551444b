//! Quasi-static models for the three-cap transformable omni-ball (PTOB) wheel
//! and the four-wheel omnidirectional chassis built around it.
//!
//! The crate is split by concern:
//!
//! * [`geometry`] holds the wheel's dimensional parameters and checks the
//!   layout constraints between cap thickness, rim diameter and actuator size.
//! * [`wheel`] evaluates which surface element touches the ground as the
//!   wheel turns, the contact-height dip at cap edges and the passive slide
//!   units.
//! * [`stepclimb`] solves for the slide needed to hook a step edge, the
//!   largest climbable step and gap-crossing feasibility.
//! * [`chassis`] is the velocity mixing for the 45° four-wheel layout, its
//!   least-squares inverse and planar odometry.
//! * [`simulate`] produces flat-ground time series and their spectra as a
//!   vibration proxy.
//!
//! All lengths are millimetres, angles are degrees unless a field says
//! otherwise, and time is seconds.

pub mod chassis;
pub mod error;
pub mod geometry;
pub mod serde_util;
pub mod simulate;
pub mod stepclimb;
pub mod wheel;

pub use error::{Error, Result};

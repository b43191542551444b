//! Velocity mixing for the four-wheel chassis, its least-squares inverse and
//! planar dead reckoning.
//!
//! Each wheel contributes a row `[cos ψ, sin ψ, r]` where `ψ` is its drive
//! direction and `r` the mount radius. For the symmetric 45° layout the rows
//! are applied with exact sign products so that rotating a translation by
//! 90° permutes the wheel speeds bit for bit.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::geometry::WheelGeometry;

pub const SYMMETRIC_YAWS: [f64; 4] = [45.0, 135.0, 225.0, 315.0];
/// Sign of `(v_x, v_y)` in each row of the symmetric layout.
const SYMMETRIC_SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChassisConfig {
    pub n_wheels: usize,
    /// Centre-to-wheel-contact distance, mm.
    pub mount_radius: f64,
    /// Drive direction of each wheel, deg.
    pub wheel_yaws: Vec<f64>,
    pub geom: WheelGeometry,
    pub plate_clearance: f64,
}

impl Default for ChassisConfig {
    /// Wheels on the corners of a 400 mm square.
    fn default() -> Self {
        Self {
            n_wheels: 4,
            mount_radius: 200.0 * SQRT_2,
            wheel_yaws: SYMMETRIC_YAWS.to_vec(),
            geom: WheelGeometry::prototype(),
            plate_clearance: 50.0,
        }
    }
}

impl ChassisConfig {
    pub fn validate(&self) -> Result<()> {
        self.geom.check_input()?;
        ensure(self.n_wheels >= 3, || "a chassis needs at least 3 wheels".into())?;
        ensure(self.wheel_yaws.len() == self.n_wheels, || {
            format!(
                "{} wheel yaws given for {} wheels",
                self.wheel_yaws.len(),
                self.n_wheels
            )
        })?;
        ensure(self.mount_radius > 0.0 && self.mount_radius.is_finite(), || {
            "mount_radius must be positive".into()
        })?;
        ensure(self.plate_clearance >= 0.0, || {
            "plate_clearance must be non-negative".into()
        })?;
        let spacing = 360.0 / self.n_wheels as f64;
        for (i, w) in self.wheel_yaws.windows(2).enumerate() {
            let d = (w[1] - w[0]).rem_euclid(360.0);
            ensure((d - spacing).abs() < 1e-9, || {
                format!(
                    "wheel yaws must be equally spaced; wheels {} and {} are {d}° apart",
                    i + 1,
                    i + 2
                )
            })?;
        }
        Ok(())
    }

    fn is_symmetric(&self) -> bool {
        self.n_wheels == 4 && self.wheel_yaws == SYMMETRIC_YAWS
    }

    /// The `n × 3` mixing matrix built from the wheel yaws.
    pub fn mixing_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_wheels, 3, |i, j| {
            let y = self.wheel_yaws[i].to_radians();
            match j {
                0 => y.cos(),
                1 => y.sin(),
                _ => self.mount_radius,
            }
        })
    }
}

/// Body-frame chassis velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub vx: f64,
    pub vy: f64,
    /// rad/s
    pub omega: f64,
}

impl Twist {
    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }
}

/// Contact-point speed of each wheel, mm/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WheelSpeeds(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// rad, in (-π, π]
    pub heading: f64,
}

pub fn normalize_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

pub fn inverse_kinematics(t: &Twist, c: &ChassisConfig) -> Result<WheelSpeeds> {
    c.validate()?;
    let spin = c.mount_radius * t.omega;
    let v = if c.is_symmetric() {
        SYMMETRIC_SIGNS
            .iter()
            .map(|&(sx, sy)| (sx * t.vx + sy * t.vy) * FRAC_1_SQRT_2 + spin)
            .collect()
    } else {
        c.wheel_yaws
            .iter()
            .map(|y| {
                let y = y.to_radians();
                y.cos() * t.vx + y.sin() * t.vy + spin
            })
            .collect()
    };
    Ok(WheelSpeeds(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardSolution {
    pub twist: Twist,
    /// Norm of the wheel-speed component no twist can produce, mm/s.
    pub residual: f64,
}

pub fn forward_kinematics(w: &WheelSpeeds, c: &ChassisConfig) -> Result<ForwardSolution> {
    c.validate()?;
    ensure(w.0.len() == c.n_wheels, || {
        format!("{} wheel speeds given for {} wheels", w.0.len(), c.n_wheels)
    })?;
    ensure(w.0.iter().all(|v| v.is_finite()), || {
        "wheel speeds must be finite".into()
    })?;
    let twist = if c.is_symmetric() {
        // the columns are orthogonal: AᵀA = diag(2, 2, 4r²)
        let (mut sx, mut sy, mut sum) = (0.0, 0.0, 0.0);
        for (&(a, b), &v) in SYMMETRIC_SIGNS.iter().zip(&w.0) {
            sx += a * v;
            sy += b * v;
            sum += v;
        }
        Twist::new(
            sx * FRAC_1_SQRT_2 / 2.0,
            sy * FRAC_1_SQRT_2 / 2.0,
            sum / (4.0 * c.mount_radius),
        )
    } else {
        let pinv = c
            .mixing_matrix()
            .pseudo_inverse(1e-12)
            .map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
        let t = pinv * DVector::from_column_slice(&w.0);
        Twist::new(t[0], t[1], t[2])
    };
    let back = inverse_kinematics(&twist, c)?;
    let residual =
        w.0.iter()
            .zip(&back.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    Ok(ForwardSolution { twist, residual })
}

/// Advances a pose by a body-frame twist held constant for `dt`.
///
/// The constant-twist path is a circular arc, so the chord is taken along
/// the mid-step heading and shortened by `sinc(ω·dt/2)`.
pub fn integrate_odometry(p: &Pose, t: &Twist, dt: f64) -> Result<Pose> {
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
    let dth = t.omega * dt;
    let half = 0.5 * dth;
    let chord = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    let mid = p.heading + half;
    let (s, c) = mid.sin_cos();
    let (bx, by) = (t.vx * dt * chord, t.vy * dt * chord);
    Ok(Pose {
        x: p.x + c * bx - s * by,
        y: p.y + s * bx + c * by,
        heading: normalize_angle(p.heading + dth),
    })
}

pub fn plate_interference(c: &ChassisConfig, h: f64) -> bool {
    h >= c.plate_clearance
}

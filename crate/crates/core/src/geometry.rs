//! Wheel dimensions and the layout constraints between them.
//!
//! The wheel is a sphere of radius `r_w` cut into `n_caps` spherical caps
//! whose pole axes lie in the drive plane, equally spaced. The caps leave a
//! prismatic hole along the drive axle for the actuator.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Dimensional parameters of one wheel. Lengths in mm, force in N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelGeometry {
    /// Sphere radius.
    pub r_w: f64,
    /// Cap thickness, measured from the sphere surface along the cap axis.
    pub h_s: f64,
    /// Rim diameter of a cap.
    pub d_s: f64,
    /// Actuator (cylinder) diameter.
    pub d_a: f64,
    /// Chord gap between adjacent cap shells in the drive plane.
    pub gap: f64,
    /// Slide half-range of each cap unit.
    pub s_max: f64,
    /// Maximum restoring force of the slide spring.
    pub k_spring_force: f64,
    pub n_caps: usize,
}

impl WheelGeometry {
    /// The 127 mm prototype. `h_s`, `d_s` and `d_a` are unmeasured; they
    /// are picked inside the layout bounds (`d_a` is the 40 mm motor body).
    pub fn prototype() -> Self {
        Self {
            r_w: 63.5,
            h_s: 30.0,
            d_s: 105.0,
            d_a: 40.0,
            gap: 0.5,
            s_max: 30.0,
            k_spring_force: 12.7,
            n_caps: 3,
        }
    }

    /// Rejects non-finite or negative fields and layouts with no room for caps.
    pub fn check_input(&self) -> Result<()> {
        let fields = [
            ("r_w", self.r_w),
            ("h_s", self.h_s),
            ("d_s", self.d_s),
            ("d_a", self.d_a),
            ("gap", self.gap),
            ("s_max", self.s_max),
            ("k_spring_force", self.k_spring_force),
        ];
        for (name, v) in fields {
            ensure(v.is_finite(), || format!("{name} is not finite ({v})"))?;
            ensure(v >= 0.0, || format!("{name} is negative ({v})"))?;
        }
        ensure(self.r_w > 0.0, || "r_w must be positive".into())?;
        ensure(self.n_caps >= 2, || {
            format!("n_caps must be at least 2, got {}", self.n_caps)
        })?;
        Ok(())
    }

    /// Cap half-angle in degrees: half the pole spacing minus half the
    /// angular width of the gap.
    pub fn cap_half_angle_deg(&self) -> Result<f64> {
        cap_half_angle_deg(self.r_w, self.gap, self.n_caps)
    }

    /// Half-angle (rad) subtended by the rim circle of diameter `d_s`.
    pub fn rim_half_angle(&self) -> f64 {
        (self.d_s / (2.0 * self.r_w)).clamp(-1.0, 1.0).asin()
    }

    /// Distance from the sphere centre to the rim plane along the cap axis,
    /// for a rim of diameter `d_s` lying on the sphere.
    pub fn rim_axial_offset(&self) -> f64 {
        let rho = 0.5 * self.d_s;
        (self.r_w * self.r_w - rho * rho).max(0.0).sqrt()
    }

    /// Every length multiplied by `a`; spring force and cap count unchanged.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            r_w: self.r_w * a,
            h_s: self.h_s * a,
            d_s: self.d_s * a,
            d_a: self.d_a * a,
            gap: self.gap * a,
            s_max: self.s_max * a,
            ..*self
        }
    }
}

/// Angular width (deg) of a chord gap `gap` on a circle of radius `r_w`.
pub fn gap_angle_deg(r_w: f64, gap: f64) -> f64 {
    2.0 * (gap / (2.0 * r_w)).min(1.0).asin().to_degrees()
}

/// Half-angle (deg) left for each cap once the gap is removed.
pub fn cap_half_angle_deg(r_w: f64, gap: f64, n_caps: usize) -> Result<f64> {
    ensure(r_w > 0.0 && r_w.is_finite(), || {
        format!("r_w must be positive, got {r_w}")
    })?;
    ensure(gap >= 0.0 && gap.is_finite(), || format!("gap must be >= 0, got {gap}"))?;
    ensure(n_caps >= 2, || format!("n_caps must be at least 2, got {n_caps}"))?;
    if gap >= 2.0 * r_w {
        return Err(Error::Infeasible(format!(
            "gap {gap} mm spans the whole sphere of radius {r_w} mm"
        )));
    }
    let beta = 180.0 / n_caps as f64 - 0.5 * gap_angle_deg(r_w, gap);
    if beta <= 0.0 {
        return Err(Error::Infeasible(format!(
            "gap {gap} mm leaves no cap width for {n_caps} caps"
        )));
    }
    Ok(beta)
}

/// Which layout constraint a [`ConstraintCheck`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintId {
    /// `h_s < r_w (1 - cos β)`
    CapThickness,
    /// `d_s < 2 r_w sin β`
    RimDiameter,
    /// `d_a < 2 (r_w - h_s)`
    ActuatorClearance,
    /// `d_a < (2/3) r_w`, the step-climbing actuator rule.
    ActuatorStepRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub id: ConstraintId,
    /// Strict upper bound the value must stay below.
    pub bound: f64,
    pub actual: f64,
    pub satisfied: bool,
    /// `bound - actual`; positive when satisfied.
    pub slack: f64,
}

impl ConstraintCheck {
    fn below(id: ConstraintId, actual: f64, bound: f64) -> Self {
        Self {
            id,
            bound,
            actual,
            satisfied: actual < bound,
            slack: bound - actual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub cap_half_angle_deg: f64,
    pub checks: Vec<ConstraintCheck>,
    pub satisfied: bool,
}

impl ConstraintReport {
    pub fn get(&self, id: ConstraintId) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

/// Evaluates the cap-thickness, rim-diameter and actuator constraints. With
/// `strict_actuator` the tighter step-climbing actuator rule is added.
///
/// Bounds are strict: a value equal to its bound fails.
pub fn validate_wheel_geometry(geom: &WheelGeometry, strict_actuator: bool) -> Result<ConstraintReport> {
    geom.check_input()?;
    let beta = geom.cap_half_angle_deg()?;
    let b = beta.to_radians();
    let r = geom.r_w;

    let mut checks = vec![
        ConstraintCheck::below(ConstraintId::CapThickness, geom.h_s, r * (1.0 - b.cos())),
        ConstraintCheck::below(ConstraintId::RimDiameter, geom.d_s, 2.0 * r * b.sin()),
        ConstraintCheck::below(ConstraintId::ActuatorClearance, geom.d_a, 2.0 * (r - geom.h_s)),
    ];
    if strict_actuator {
        checks.push(ConstraintCheck::below(
            ConstraintId::ActuatorStepRule,
            geom.d_a,
            2.0 / 3.0 * r,
        ));
    }
    let satisfied = checks.iter().all(|c| c.satisfied);
    Ok(ConstraintReport {
        cap_half_angle_deg: beta,
        checks,
        satisfied,
    })
}

/// Supremum of cap thickness and rim diameter that keeps adjacent caps apart
/// by at least `gap`.
pub fn max_cap_dimensions(r_w: f64, gap: f64, n_caps: usize) -> Result<(f64, f64)> {
    let b = cap_half_angle_deg(r_w, gap, n_caps)?.to_radians();
    Ok((r_w * (1.0 - b.cos()), 2.0 * r_w * b.sin()))
}

pub const PLATE_SPACING_FORMULA: &str = "d_p_min = d_s + 2*s_max + 2*clearance";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateSpacing {
    pub d_p_min: f64,
    pub formula: String,
}

/// Minimum spacing between the two support plates: the rim diameter plus the
/// full slide travel on both sides, plus a clearance on each side.
pub fn support_plate_spacing(geom: &WheelGeometry, clearance: f64) -> Result<PlateSpacing> {
    ensure(clearance >= 0.0 && clearance.is_finite(), || {
        format!("clearance must be >= 0, got {clearance}")
    })?;
    Ok(PlateSpacing {
        d_p_min: geom.d_s + 2.0 * geom.s_max + 2.0 * clearance,
        formula: PLATE_SPACING_FORMULA.to_string(),
    })
}

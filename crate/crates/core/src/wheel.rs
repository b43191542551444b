//! A single wheel turning about its drive axle: which element carries the
//! ground contact, the height dip where cap shells meet, and the passive
//! slide units.
//!
//! Drive angle is 0° at the pole of cap 0 and grows in the rolling
//! direction. Directions are given in the wheel frame: `x` toward the cap-0
//! pole, `y` 90° ahead of it in the drive plane, `z` along the drive axle.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::{gap_angle_deg, WheelGeometry};

pub const DEFAULT_ROLLER_WINDOW_DEG: f64 = 10.0;
pub const DEFAULT_EDGE_WINDOW_DEG: f64 = 4.0;
/// Nominal slide damping, N·s/mm. Spring force over damping gives the
/// return speed.
pub const NOMINAL_SLIDE_DAMPING: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapLayout {
    pub n_caps: usize,
    pub pole_angles_deg: Vec<f64>,
    pub beta_deg: f64,
    /// Half-width around each pole where the barrel roller carries contact.
    pub roller_window_deg: f64,
    /// Half-width around each rim boundary where the gap dip applies.
    pub edge_window_deg: f64,
}

impl CapLayout {
    pub fn from_geometry(geom: &WheelGeometry) -> Result<Self> {
        Self::with_windows(geom, DEFAULT_ROLLER_WINDOW_DEG, DEFAULT_EDGE_WINDOW_DEG)
    }

    pub fn with_windows(geom: &WheelGeometry, roller_window_deg: f64, edge_window_deg: f64) -> Result<Self> {
        geom.check_input()?;
        let beta_deg = geom.cap_half_angle_deg()?;
        ensure(roller_window_deg >= 0.0 && edge_window_deg >= 0.0, || {
            "contact windows must be non-negative".into()
        })?;
        ensure(roller_window_deg + edge_window_deg < beta_deg, || {
            format!(
                "roller window {roller_window_deg}° + edge window {edge_window_deg}° must stay below the cap half-angle {beta_deg}°"
            )
        })?;
        let period = 360.0 / geom.n_caps as f64;
        Ok(Self {
            n_caps: geom.n_caps,
            pole_angles_deg: (0..geom.n_caps).map(|k| k as f64 * period).collect(),
            beta_deg,
            roller_window_deg,
            edge_window_deg,
        })
    }

    pub fn period_deg(&self) -> f64 {
        360.0 / self.n_caps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "caps", rename_all = "snake_case")]
pub enum ContactElement {
    CapSurface(usize),
    BarrelRoller(usize),
    /// Boundary between the leaving cap and the arriving cap.
    EdgeGap(usize, usize),
}

impl ContactElement {
    /// The cap whose unit carries the load at this element. On an edge this
    /// is the leaving cap.
    pub fn loaded_cap(&self) -> usize {
        match *self {
            ContactElement::CapSurface(k) | ContactElement::BarrelRoller(k) => k,
            ContactElement::EdgeGap(i, _) => i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub element: ContactElement,
    pub drive_angle: f64,
    /// Drop of the wheel centre relative to the nominal sphere, mm (≤ 0).
    pub height_deviation: f64,
    /// Pole axis of the contacting cap, or the roller spin axis on a roller.
    pub axial_free_dir: [f64; 3],
}

/// Element touching the ground at `drive_angle` (deg, any range).
pub fn active_element(layout: &CapLayout, drive_angle: f64) -> ContactElement {
    let n = layout.n_caps;
    let period = layout.period_deg();
    let half = 0.5 * period;
    let a = drive_angle.rem_euclid(360.0);
    let k = ((a + half) / period).floor() as usize % n;
    // offset from the nearest pole, in [-half, half)
    let mut d = a - k as f64 * period;
    if d >= half {
        d -= 360.0;
    }
    if d.abs() <= layout.roller_window_deg {
        ContactElement::BarrelRoller(k)
    } else if half - d.abs() <= layout.edge_window_deg {
        if d >= 0.0 {
            ContactElement::EdgeGap(k, (k + 1) % n)
        } else {
            ContactElement::EdgeGap((k + n - 1) % n, k)
        }
    } else {
        ContactElement::CapSurface(k)
    }
}

/// Angle (rad) by which a cap's rim crossing of the drive plane retreats
/// toward its pole when the cap slides `offset` along the drive axle.
///
/// The rim is a circle of radius `r sin β` at axial distance `r cos β`; a
/// slide `s` moves it out of the drive plane so the crossing sits at
/// `sqrt(ρ² - s²)` from the cap axis.
pub fn rim_retreat(r_w: f64, beta: f64, offset: f64) -> f64 {
    let rho = r_w * beta.sin();
    let c = r_w * beta.cos();
    let s = offset.abs();
    if s >= rho {
        return beta;
    }
    beta - (rho * rho - s * s).sqrt().atan2(c)
}

/// Chord sag of a rigid circle of radius `r_w` bridging an opening of width
/// `w`; the opening is capped at the diameter.
pub fn chord_sag(r_w: f64, w: f64) -> f64 {
    let half = (0.5 * w).min(r_w);
    r_w - (r_w * r_w - half * half).sqrt()
}

pub fn contact_state(
    geom: &WheelGeometry,
    layout: &CapLayout,
    drive_angle: f64,
    slides: &[SlideUnit],
) -> Result<ContactPoint> {
    if slides.len() != layout.n_caps {
        return Err(Error::SlideCountMismatch {
            expected: layout.n_caps,
            actual: slides.len(),
        });
    }
    let element = active_element(layout, drive_angle);
    let pole = |k: usize| layout.pole_angles_deg[k].to_radians();

    let (height_deviation, axial_free_dir) = match element {
        ContactElement::CapSurface(k) => (0.0, [pole(k).cos(), pole(k).sin(), 0.0]),
        ContactElement::BarrelRoller(k) => (0.0, [-pole(k).sin(), pole(k).cos(), 0.0]),
        ContactElement::EdgeGap(i, j) => {
            let beta = layout.beta_deg.to_radians();
            let opening = gap_angle_deg(geom.r_w, geom.gap).to_radians()
                + rim_retreat(geom.r_w, beta, slides[i].offset)
                + rim_retreat(geom.r_w, beta, slides[j].offset);
            let w = 2.0 * geom.r_w * (0.5 * opening).min(std::f64::consts::FRAC_PI_2).sin();
            (-chord_sag(geom.r_w, w), [pole(i).cos(), pole(i).sin(), 0.0])
        }
    };
    Ok(ContactPoint {
        element,
        drive_angle,
        height_deviation,
        axial_free_dir,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlideUnit {
    /// Displacement along the drive axle, mm.
    pub offset: f64,
    pub s_max: f64,
    /// Spring-return speed while unloaded, mm/s.
    pub restore_rate: f64,
    pub loaded: bool,
}

impl SlideUnit {
    pub fn centered(s_max: f64, restore_rate: f64) -> Self {
        Self {
            offset: 0.0,
            s_max,
            restore_rate,
            loaded: false,
        }
    }

    /// Unit at rest for `geom`, returning at spring force / nominal damping.
    pub fn for_geometry(geom: &WheelGeometry) -> Self {
        Self::centered(geom.s_max, geom.k_spring_force / NOMINAL_SLIDE_DAMPING)
    }

    pub fn with_offset(self, offset: f64) -> Self {
        Self {
            offset: offset.clamp(-self.s_max, self.s_max),
            ..self
        }
    }
}

/// Advances a slide unit by `dt` seconds. Loaded units integrate
/// `axial_drive` (mm/s) and saturate at ±`s_max`; unloaded units move back
/// toward the centre at `restore_rate` and stop there.
pub fn slide_step(unit: SlideUnit, axial_drive: f64, dt: f64) -> Result<SlideUnit> {
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
    let offset = if unit.loaded {
        (unit.offset + axial_drive * dt).clamp(-unit.s_max, unit.s_max)
    } else {
        let mag = (unit.offset.abs() - unit.restore_rate * dt).max(0.0);
        mag.copysign(unit.offset)
    };
    // collapse -0.0 so a returned unit compares equal to a fresh one
    let offset = if offset == 0.0 { 0.0 } else { offset };
    Ok(SlideUnit { offset, ..unit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub angle_deg: f64,
    pub height_dev_mm: f64,
}

/// Contact height over one revolution at `n_samples` uniform drive angles.
pub fn contact_height_profile(
    geom: &WheelGeometry,
    layout: &CapLayout,
    n_samples: usize,
    slides: &[SlideUnit],
) -> Result<Vec<ProfileSample>> {
    ensure(n_samples >= 3 * layout.n_caps, || {
        format!("need at least {} samples, got {n_samples}", 3 * layout.n_caps)
    })?;
    (0..n_samples)
        .map(|i| {
            let angle = 360.0 * i as f64 / n_samples as f64;
            let c = contact_state(geom, layout, angle, slides)?;
            Ok(ProfileSample {
                angle_deg: angle,
                height_dev_mm: c.height_deviation,
            })
        })
        .collect()
}

pub fn write_profile_csv<W: Write>(profile: &[ProfileSample], mut out: W) -> io::Result<()> {
    writeln!(out, "angle_deg,height_dev_mm")?;
    for p in profile {
        writeln!(out, "{},{}", p.angle_deg, p.height_dev_mm)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn geom(gap: f64) -> WheelGeometry {
        WheelGeometry {
            gap,
            ..WheelGeometry::prototype()
        }
    }

    fn centered(g: &WheelGeometry) -> Vec<SlideUnit> {
        vec![SlideUnit::for_geometry(g); g.n_caps]
    }

    #[test]
    fn elements_at_reference_angles() {
        let layout = CapLayout::from_geometry(&geom(0.0)).unwrap();
        assert_eq!(active_element(&layout, 0.0), ContactElement::BarrelRoller(0));
        assert_eq!(active_element(&layout, 60.0), ContactElement::EdgeGap(0, 1));
        assert_eq!(active_element(&layout, 30.0), ContactElement::CapSurface(0));
        assert_eq!(active_element(&layout, 120.0), ContactElement::BarrelRoller(1));
        assert_eq!(active_element(&layout, 300.0), ContactElement::EdgeGap(2, 0));
        assert_eq!(active_element(&layout, -60.0), ContactElement::EdgeGap(2, 0));
        assert_eq!(active_element(&layout, 359.0), ContactElement::BarrelRoller(0));
        assert_eq!(active_element(&layout, 57.0), ContactElement::EdgeGap(0, 1));
        assert_eq!(active_element(&layout, 63.9), ContactElement::EdgeGap(0, 1));
        assert_eq!(active_element(&layout, 55.0), ContactElement::CapSurface(0));
    }

    #[test]
    fn windows_must_fit_inside_cap() {
        assert!(CapLayout::with_windows(&geom(0.0), 40.0, 20.0).is_err());
        assert!(CapLayout::with_windows(&geom(0.0), 40.0, 19.0).is_ok());
    }

    #[test]
    fn zero_gap_has_no_sag() {
        let g = geom(0.0);
        let layout = CapLayout::from_geometry(&g).unwrap();
        let c = contact_state(&g, &layout, 60.0, &centered(&g)).unwrap();
        assert_eq!(c.element, ContactElement::EdgeGap(0, 1));
        assert_eq!(c.height_deviation, 0.0);
    }

    #[test]
    fn two_mm_gap_sag() {
        let g = geom(2.0);
        let layout = CapLayout::from_geometry(&g).unwrap();
        let c = contact_state(&g, &layout, 60.0, &centered(&g)).unwrap();
        let expected = -(63.5 - (63.5f64 * 63.5 - 1.0).sqrt());
        assert_abs_diff_eq!(c.height_deviation, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(c.height_deviation, -0.0079, epsilon = 1e-4);
    }

    #[test]
    fn slide_opens_the_edge() {
        let g = geom(0.0);
        let layout = CapLayout::from_geometry(&g).unwrap();
        let mut slides = centered(&g);
        slides[0] = slides[0].with_offset(30.0);
        let c = contact_state(&g, &layout, 60.0, &slides).unwrap();
        assert!(c.height_deviation < 0.0);
        // the untouched edge between caps 1 and 2 stays flat
        let c = contact_state(&g, &layout, 180.0, &slides).unwrap();
        assert_eq!(c.height_deviation, 0.0);
    }

    #[test]
    fn rim_retreat_matches_sampled_rim_circle() {
        // Sample the displaced rim circle in 3D and locate its crossing of
        // the drive plane z = 0 by linear interpolation.
        let r = 63.5;
        let beta = 60f64.to_radians();
        let (rho, c) = (r * beta.sin(), r * beta.cos());
        for &s in &[5.0, 17.0, 30.0] {
            let n = 200_000;
            let mut best = f64::NAN;
            for i in 0..n {
                let t0 = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / n as f64;
                let t1 = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (i + 1) as f64 / n as f64;
                // rim point: c along the pole, rho*cos t in-plane, rho*sin t + s along the axle
                let z0 = rho * t0.sin() + s;
                let z1 = rho * t1.sin() + s;
                if z0 <= 0.0 && z1 > 0.0 {
                    let f = -z0 / (z1 - z0);
                    let u = rho * t0.cos() + f * (rho * t1.cos() - rho * t0.cos());
                    best = u.atan2(c);
                }
            }
            assert_abs_diff_eq!(beta - best, rim_retreat(r, beta, s), epsilon = 1e-8);
        }
    }

    #[test]
    fn slide_count_mismatch() {
        let g = geom(0.5);
        let layout = CapLayout::from_geometry(&g).unwrap();
        let err = contact_state(&g, &layout, 0.0, &centered(&g)[..2]).unwrap_err();
        assert_eq!(err, Error::SlideCountMismatch { expected: 3, actual: 2 });
    }

    #[test]
    fn free_direction_is_unit() {
        let g = geom(0.5);
        let layout = CapLayout::from_geometry(&g).unwrap();
        for a in [0.0, 30.0, 60.0, 125.0, 250.0] {
            let d = contact_state(&g, &layout, a, &centered(&g)).unwrap().axial_free_dir;
            assert_abs_diff_eq!(d.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn slide_step_examples() {
        let base = SlideUnit {
            offset: 0.0,
            s_max: 30.0,
            restore_rate: 50.0,
            loaded: true,
        };
        assert_eq!(slide_step(base, 10.0, 1.0).unwrap().offset, 10.0);
        assert_eq!(slide_step(base.with_offset(29.0), 10.0, 1.0).unwrap().offset, 30.0);
        let free = SlideUnit { loaded: false, ..base }.with_offset(10.0);
        assert_abs_diff_eq!(slide_step(free, 0.0, 0.1).unwrap().offset, 5.0, epsilon = 1e-12);
        let free = free.with_offset(-2.0);
        assert_eq!(slide_step(free, 0.0, 0.1).unwrap().offset, 0.0);
        assert!(slide_step(base, 1.0, 0.0).is_err());
    }

    #[test]
    fn prototype_restore_rate() {
        let u = SlideUnit::for_geometry(&WheelGeometry::prototype());
        assert_abs_diff_eq!(u.restore_rate, 50.8, epsilon = 1e-12);
    }

    #[test]
    fn profiles() {
        let g = geom(0.0);
        let layout = CapLayout::from_geometry(&g).unwrap();
        let p = contact_height_profile(&g, &layout, 360, &centered(&g)).unwrap();
        assert!(p.iter().all(|s| s.height_dev_mm == 0.0));

        let g = geom(2.0);
        let p = contact_height_profile(&g, &layout, 360, &centered(&g)).unwrap();
        // dips form three contiguous runs centred on 60°, 180° and 300°
        let dips: Vec<f64> = p
            .iter()
            .filter(|s| s.height_dev_mm < 0.0)
            .map(|s| s.angle_deg)
            .collect();
        assert_eq!(dips.len(), 3 * 9);
        for centre in [60.0, 180.0, 300.0] {
            assert_eq!(dips.iter().filter(|a| (**a - centre).abs() <= 4.0).count(), 9);
        }

        let mut slides = centered(&g);
        slides[0] = slides[0].with_offset(30.0);
        let p = contact_height_profile(&g, &layout, 360, &slides).unwrap();
        let at = |a: usize| p[a].height_dev_mm;
        assert!(at(60) < at(180));
        assert!(at(300) < at(180));
        assert_abs_diff_eq!(at(60), at(300), epsilon = 1e-12);

        assert!(contact_height_profile(&g, &layout, 8, &slides).is_err());
    }

    #[test]
    fn profile_csv_header() {
        let mut buf = Vec::new();
        write_profile_csv(
            &[ProfileSample {
                angle_deg: 0.0,
                height_dev_mm: -0.5,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "angle_deg,height_dev_mm\n0,-0.5\n");
    }
}

//! Quasi-static step hooking, maximum climbable step and gap crossing.
//!
//! The wheel meets the riser with its drive axle yawed by `approach_yaw`
//! from the step edge. World frame: `x` points into the step, `y` runs
//! along the edge, `z` is up and the floor is `z = 0`. The wheel centre sits
//! at `(0, 0, r_w)`.
//!
//! Each cap is the part of the ball beyond its rim plane. The cap in ground
//! contact (cap 0) is pushed back along the drive axle by the riser; that
//! pulls its front away from the corner and lets the following cap (cap 1)
//! come down onto the tread. A hook is scored by the horizontal distance
//! from the corner, taken as the most forward point of the other caps below
//! the tread, to the lowest point of cap 1 once it is above the tread.

use std::io::{self, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::geometry::WheelGeometry;
use crate::serde_util::{inf_as_null, neg_inf_as_null};

type V3 = Vector3<f64>;

pub const DEFAULT_HOOK_MARGIN: f64 = 3.0;
pub const DEFAULT_APPROACH_YAW: f64 = 45.0;
pub const DEFAULT_PLATE_CLEARANCE: f64 = 50.0;
/// Slide limits and phase differences of the measured step trials.
pub const TABLE_SLIDES: [f64; 3] = [0.0, 15.0, 30.0];
pub const TABLE_PHASES: [f64; 2] = [0.0, 60.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepScenario {
    pub step_height: f64,
    /// Yaw of the drive axle relative to the step edge, deg.
    pub approach_yaw: f64,
    pub s_max: f64,
    /// Drive-angle offset between paired wheels, deg, in [0, 60].
    pub phase_diff: f64,
    /// Required distance from the corner to the landing point, mm.
    pub hook_margin: f64,
    pub plate_clearance: f64,
}

impl StepScenario {
    pub fn new(step_height: f64, s_max: f64, phase_diff: f64) -> Self {
        Self {
            step_height,
            approach_yaw: DEFAULT_APPROACH_YAW,
            s_max,
            phase_diff,
            hook_margin: DEFAULT_HOOK_MARGIN,
            plate_clearance: DEFAULT_PLATE_CLEARANCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.step_height,
            self.approach_yaw,
            self.s_max,
            self.phase_diff,
            self.hook_margin,
            self.plate_clearance,
        ];
        ensure(finite.iter().all(|v| v.is_finite()), || {
            "scenario fields must be finite".into()
        })?;
        ensure(self.step_height >= 0.0, || "step_height must be non-negative".into())?;
        ensure((0.0..=90.0).contains(&self.approach_yaw), || {
            format!("approach_yaw must lie in [0, 90], got {}", self.approach_yaw)
        })?;
        ensure(self.s_max >= 0.0, || "s_max must be non-negative".into())?;
        ensure((0.0..=60.0).contains(&self.phase_diff), || {
            format!("phase_diff must lie in [0, 60], got {}", self.phase_diff)
        })?;
        ensure(self.hook_margin >= 0.0, || "hook_margin must be non-negative".into())?;
        ensure(self.plate_clearance >= 0.0, || {
            "plate_clearance must be non-negative".into()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitingFactor {
    None,
    SlideRange,
    PlateContact,
    Slip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HookOutcome {
    pub feasible: bool,
    /// Smallest slide that hooks; infinite (`null` in JSON) when none does.
    #[serde(with = "inf_as_null")]
    pub required_slide: f64,
    /// Best landing distance from the corner at the scenario's `s_max`;
    /// `null` in JSON when the next cap never clears the tread.
    #[serde(with = "neg_inf_as_null")]
    pub hook_distance: f64,
    pub limiting_factor: LimitingFactor,
}

/// Numerical settings and calibrated surrogates of the hooking solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HookSolver {
    /// Drive-angle grid spacing, deg.
    pub angle_step_deg: f64,
    /// Bisection tolerance on the slide, mm.
    pub slide_tol: f64,
    /// Steps up to this fraction of the wheel diameter are climbed without
    /// any slide, as with a conventional omni-ball.
    pub unassisted_ratio: f64,
    /// Hook-margin multiplier at a 60° phase difference; interpolated
    /// linearly from 1 at 0°.
    pub phase_margin_gain: f64,
}

impl Default for HookSolver {
    fn default() -> Self {
        Self {
            angle_step_deg: 0.25,
            slide_tol: 0.01,
            unassisted_ratio: 0.29,
            phase_margin_gain: 2.8,
        }
    }
}

/// `n · x >= b`
#[derive(Debug, Clone, Copy)]
struct HalfSpace {
    n: V3,
    b: f64,
}

const FEAS_EPS: f64 = 1e-7;

fn unit_perp(n: &V3) -> V3 {
    let seed = if n.x.abs() < 0.9 { V3::x() } else { V3::y() };
    n.cross(&seed).normalize()
}

/// Maximiser of `f · x` over a ball intersected with half-spaces, by
/// enumerating the candidate points of each face combination.
fn max_linear(f: &V3, centre: &V3, r: f64, hs: &[HalfSpace]) -> Option<V3> {
    let mut cands = vec![centre + r * f.normalize()];
    for h in hs {
        let d = h.b - h.n.dot(centre);
        if d.abs() > r {
            continue;
        }
        let ci = centre + d * h.n;
        let ri = (r * r - d * d).sqrt();
        let pf = f - f.dot(&h.n) * h.n;
        let norm = pf.norm();
        let dir = if norm > 1e-12 { pf / norm } else { unit_perp(&h.n) };
        cands.push(ci + ri * dir);
    }
    for (i, a) in hs.iter().enumerate() {
        for b in &hs[i + 1..] {
            let dv = a.n.cross(&b.n);
            let dd = dv.dot(&dv);
            if dd < 1e-14 {
                continue;
            }
            let p0 = (a.b * b.n.cross(&dv) + b.b * dv.cross(&a.n)) / dd;
            let u = dv / dd.sqrt();
            let w = p0 - centre;
            let bq = w.dot(&u);
            let disc = bq * bq - (w.dot(&w) - r * r);
            if disc >= 0.0 {
                let sq = disc.sqrt();
                cands.push(p0 + (-bq - sq) * u);
                cands.push(p0 + (-bq + sq) * u);
            }
        }
    }
    let feasible = |x: &V3| (x - centre).norm() <= r + FEAS_EPS && hs.iter().all(|h| h.n.dot(x) >= h.b - FEAS_EPS);
    cands
        .into_iter()
        .filter(feasible)
        .max_by(|p, q| f.dot(p).total_cmp(&f.dot(q)))
}

/// One wheel against one step. Everything that does not depend on the slide
/// is evaluated once here.
struct HookProblem {
    r: f64,
    rim_offset: f64,
    n_caps: usize,
    h: f64,
    axle: V3,
    roll: V3,
    centre: V3,
    /// Drive angles probed for every slide: the grid plus landing boundaries.
    probes: Vec<f64>,
    step: f64,
}

impl HookProblem {
    fn new(geom: &WheelGeometry, h: f64, yaw_deg: f64, step: f64) -> Self {
        let al = yaw_deg.to_radians();
        let mut p = Self {
            r: geom.r_w,
            rim_offset: geom.rim_axial_offset(),
            n_caps: geom.n_caps,
            h,
            axle: V3::new(al.sin(), al.cos(), 0.0),
            roll: V3::new(al.cos(), -al.sin(), 0.0),
            centre: V3::new(0.0, 0.0, geom.r_w),
            probes: Vec::new(),
            step,
        };
        let half = 180.0 / geom.n_caps as f64;
        let n = (2.0 * half / step).round().max(1.0) as usize;
        let grid: Vec<f64> = (0..=n).map(|i| -half + 2.0 * half * i as f64 / n as f64).collect();
        let mut probes = grid.clone();
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (la, lb) = (p.landed(a), p.landed(b));
            if la != lb {
                let (mut lo, mut hi) = if la { (a, b) } else { (b, a) };
                for _ in 0..50 {
                    let m = 0.5 * (lo + hi);
                    if p.landed(m) {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                probes.push(lo);
            }
        }
        p.probes = probes;
        p
    }

    fn pole(&self, k: usize, theta: f64) -> V3 {
        let ph = (360.0 * k as f64 / self.n_caps as f64 - theta).to_radians();
        ph.sin() * self.roll - ph.cos() * V3::z()
    }

    fn cap(&self, k: usize, theta: f64, centre: &V3) -> HalfSpace {
        let n = self.pole(k, theta);
        HalfSpace {
            n,
            b: n.dot(centre) + self.rim_offset,
        }
    }

    fn lowest_next(&self, theta: f64) -> V3 {
        let hs = [self.cap(1, theta, &self.centre)];
        // the cap is never empty, its pole point always qualifies
        max_linear(&-V3::z(), &self.centre, self.r, &hs).expect("cap is non-empty")
    }

    fn landed(&self, theta: f64) -> bool {
        self.lowest_next(theta).z >= self.h
    }

    /// Most forward point of the caps other than the next one, below the tread.
    fn corner(&self, theta: f64, slide: f64) -> Option<f64> {
        let below = HalfSpace {
            n: -V3::z(),
            b: -self.h,
        };
        (0..self.n_caps)
            .filter(|&k| k != 1 % self.n_caps)
            .filter_map(|k| {
                let c = if k == 0 {
                    self.centre - slide * self.axle
                } else {
                    self.centre
                };
                max_linear(&V3::x(), &c, self.r, &[self.cap(k, theta, &c), below]).map(|x| x.x)
            })
            .max_by(f64::total_cmp)
    }

    fn margin(&self, theta: f64, slide: f64) -> f64 {
        let e = self.lowest_next(theta);
        if e.z < self.h {
            return f64::NEG_INFINITY;
        }
        match self.corner(theta, slide) {
            Some(f) => e.x - f,
            None => f64::NEG_INFINITY,
        }
    }

    fn best_margin(&self, slide: f64) -> f64 {
        let (mut best, mut arg) = (f64::NEG_INFINITY, f64::NAN);
        for &t in &self.probes {
            let m = self.margin(t, slide);
            if m > best {
                best = m;
                arg = t;
            }
        }
        if !best.is_finite() {
            return best;
        }
        // golden-section refinement around the best probe
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (arg - self.step, arg + self.step);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (self.margin(c, slide), self.margin(d, slide));
        for _ in 0..40 {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.margin(c, slide);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.margin(d, slide);
            }
        }
        best.max(fc).max(fd)
    }
}

impl HookSolver {
    /// Hook margin actually demanded at a given phase difference.
    pub fn effective_margin(&self, hook_margin: f64, phase_diff: f64) -> f64 {
        hook_margin * (1.0 + (self.phase_margin_gain - 1.0) * phase_diff / 60.0)
    }

    fn unassisted(&self, geom: &WheelGeometry, h: f64) -> bool {
        h <= self.unassisted_ratio * 2.0 * geom.r_w
    }

    /// Best landing distance over one cap period at slide `slide`;
    /// `-inf` if the next cap never clears the tread.
    pub fn hook_distance(&self, geom: &WheelGeometry, h: f64, yaw_deg: f64, slide: f64) -> Result<f64> {
        check_step(geom, h, yaw_deg)?;
        Ok(HookProblem::new(geom, h, yaw_deg, self.angle_step_deg).best_margin(slide))
    }

    pub fn min_slide_for_hook(&self, geom: &WheelGeometry, h: f64, yaw_deg: f64, hook_margin: f64) -> Result<f64> {
        check_step(geom, h, yaw_deg)?;
        ensure(hook_margin >= 0.0, || "hook margin must be non-negative".into())?;
        ensure(self.slide_tol > 0.0 && self.angle_step_deg > 0.0, || {
            "solver tolerances must be positive".into()
        })?;
        if self.unassisted(geom, h) {
            return Ok(0.0);
        }
        let p = HookProblem::new(geom, h, yaw_deg, self.angle_step_deg);
        let hooks = |s: f64| p.best_margin(s) >= hook_margin;
        if hooks(0.0) {
            return Ok(0.0);
        }
        if !hooks(geom.r_w) {
            return Ok(f64::INFINITY);
        }
        let (mut lo, mut hi) = (0.0, geom.r_w);
        while hi - lo > self.slide_tol {
            let m = 0.5 * (lo + hi);
            if hooks(m) {
                hi = m;
            } else {
                lo = m;
            }
        }
        Ok(hi)
    }

    pub fn hook_feasible(&self, geom: &WheelGeometry, sc: &StepScenario) -> Result<HookOutcome> {
        geom.check_input()?;
        sc.validate()?;
        let h = sc.step_height;
        let plate = h >= sc.plate_clearance;
        let (required, distance) = if h >= 2.0 * geom.r_w {
            (f64::INFINITY, f64::NEG_INFINITY)
        } else {
            let margin = self.effective_margin(sc.hook_margin, sc.phase_diff);
            (
                self.min_slide_for_hook(geom, h, sc.approach_yaw, margin)?,
                self.hook_distance(geom, h, sc.approach_yaw, sc.s_max)?,
            )
        };
        let limiting_factor = if plate {
            LimitingFactor::PlateContact
        } else if required.is_infinite() {
            LimitingFactor::Slip
        } else if required > sc.s_max {
            LimitingFactor::SlideRange
        } else {
            LimitingFactor::None
        };
        Ok(HookOutcome {
            feasible: limiting_factor == LimitingFactor::None,
            required_slide: required,
            hook_distance: distance,
            limiting_factor,
        })
    }

    /// Largest multiple of `resolution` that `base` (with its height
    /// replaced) can climb; 0 if none.
    pub fn max_step(&self, geom: &WheelGeometry, base: &StepScenario, resolution: f64) -> Result<f64> {
        ensure(resolution > 0.0 && resolution.is_finite(), || {
            "resolution must be positive".into()
        })?;
        let mut best = 0.0;
        for i in 1.. {
            let h = resolution * i as f64;
            if h >= 2.0 * geom.r_w || h >= base.plate_clearance {
                break;
            }
            let sc = StepScenario {
                step_height: h,
                ..*base
            };
            if self.hook_feasible(geom, &sc)?.feasible {
                best = h;
            }
        }
        Ok(best)
    }

    /// Hook margins that make `max_step` at phase 0 come out at `target`:
    /// any value in `(lower, upper]`.
    pub fn calibration_interval(
        &self,
        geom: &WheelGeometry,
        base: &StepScenario,
        resolution: f64,
        target: f64,
    ) -> Result<MarginInterval> {
        let limit = |h: f64| -> Result<f64> {
            if h >= base.plate_clearance || h >= 2.0 * geom.r_w {
                Ok(f64::NEG_INFINITY)
            } else if self.unassisted(geom, h) {
                Ok(f64::INFINITY)
            } else {
                self.hook_distance(geom, h, base.approach_yaw, base.s_max)
            }
        };
        let upper = limit(target)?;
        let mut lower = f64::NEG_INFINITY;
        let mut h = target + resolution;
        while h < base.plate_clearance && h < 2.0 * geom.r_w {
            lower = lower.max(limit(h)?);
            h += resolution;
        }
        Ok(MarginInterval { lower, upper })
    }

    pub fn step_table(&self, geom: &WheelGeometry, base: &StepScenario, resolution: f64) -> Result<Vec<TableCell>> {
        let mut out = Vec::new();
        for s_max in TABLE_SLIDES {
            for phase in TABLE_PHASES {
                let sc = StepScenario {
                    s_max,
                    phase_diff: phase,
                    ..*base
                };
                out.push(TableCell {
                    s_max_mm: s_max,
                    phase_deg: phase,
                    max_step_mm: self.max_step(geom, &sc, resolution)?,
                });
            }
        }
        Ok(out)
    }

    pub fn gap_crossing_feasible(&self, geom: &WheelGeometry, g: f64, sc: &StepScenario) -> Result<HookOutcome> {
        ensure(g >= 0.0 && g.is_finite(), || {
            format!("gap must be non-negative, got {g}")
        })?;
        let drop = gap_drop(geom.r_w, g);
        if drop >= geom.r_w {
            return Ok(HookOutcome {
                feasible: false,
                required_slide: f64::INFINITY,
                hook_distance: f64::NEG_INFINITY,
                limiting_factor: LimitingFactor::Slip,
            });
        }
        self.hook_feasible(
            geom,
            &StepScenario {
                step_height: drop,
                ..*sc
            },
        )
    }
}

fn check_step(geom: &WheelGeometry, h: f64, yaw_deg: f64) -> Result<()> {
    geom.check_input()?;
    ensure(h >= 0.0 && h.is_finite(), || {
        format!("step height must be non-negative, got {h}")
    })?;
    ensure(h < 2.0 * geom.r_w, || {
        format!("step of {h} mm is taller than the {} mm wheel", 2.0 * geom.r_w)
    })?;
    ensure((0.0..=90.0).contains(&yaw_deg), || {
        format!("approach yaw must lie in [0, 90], got {yaw_deg}")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginInterval {
    pub lower: f64,
    pub upper: f64,
}

impl MarginInterval {
    pub fn contains(&self, v: f64) -> bool {
        v > self.lower && v <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub s_max_mm: f64,
    pub phase_deg: f64,
    pub max_step_mm: f64,
}

pub fn write_table_csv<W: Write>(cells: &[TableCell], mut out: W) -> io::Result<()> {
    writeln!(out, "s_max_mm,phase_deg,max_step_mm")?;
    for c in cells {
        writeln!(out, "{},{},{}", c.s_max_mm, c.phase_deg, c.max_step_mm)?;
    }
    Ok(())
}

pub fn min_slide_for_hook(geom: &WheelGeometry, h: f64, yaw_deg: f64, hook_margin: f64) -> Result<f64> {
    HookSolver::default().min_slide_for_hook(geom, h, yaw_deg, hook_margin)
}

pub fn hook_feasible(geom: &WheelGeometry, scenario: &StepScenario) -> Result<HookOutcome> {
    HookSolver::default().hook_feasible(geom, scenario)
}

pub fn max_step(
    geom: &WheelGeometry,
    s_max: f64,
    phase_diff: f64,
    plate_clearance: f64,
    resolution: f64,
) -> Result<f64> {
    let base = StepScenario {
        plate_clearance,
        ..StepScenario::new(0.0, s_max, phase_diff)
    };
    HookSolver::default().max_step(geom, &base, resolution)
}

/// Sag of the wheel centre when it rests across a gap of width `g`;
/// `r_w` once the wheel falls through.
pub fn gap_drop(r_w: f64, g: f64) -> f64 {
    if g >= 2.0 * r_w {
        r_w
    } else {
        r_w - (r_w * r_w - 0.25 * g * g).sqrt()
    }
}

pub fn gap_crossing_feasible(geom: &WheelGeometry, g: f64, scenario: &StepScenario) -> Result<HookOutcome> {
    HookSolver::default().gap_crossing_feasible(geom, g, scenario)
}

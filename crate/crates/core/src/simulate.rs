//! Flat-ground runs of the four-wheel chassis and their spectra.
//!
//! A run turns every wheel at the speed the chassis mixing gives for the
//! chosen motion, samples the contact-height deviation and slide offsets of
//! each wheel, and averages the four deviations into a chassis height proxy.

use std::f64::consts::{PI, SQRT_2};
use std::io::{self, Write};

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::chassis::{inverse_kinematics, ChassisConfig, Twist};
use crate::error::{ensure, Error, Result};
use crate::wheel::{contact_state, slide_step, CapLayout, SlideUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Forward,
    Diagonal,
    Turning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScenario {
    pub motion: Motion,
    /// rev/s
    pub wheel_rate: f64,
    /// s
    pub duration: f64,
    /// Hz
    pub sample_rate: f64,
    pub chassis: ChassisConfig,
    /// Fraction of the ground speed along the loaded cap's pole axis that
    /// drifts the slide.
    pub slide_drift_coeff: f64,
}

impl Default for RunScenario {
    fn default() -> Self {
        Self {
            motion: Motion::Forward,
            wheel_rate: 0.96,
            duration: 10.0,
            sample_rate: 1000.0,
            chassis: ChassisConfig::default(),
            slide_drift_coeff: 0.05,
        }
    }
}

impl RunScenario {
    /// Highest frequency the run must resolve: one edge window crossed per
    /// half period.
    pub fn frequency_of_interest(&self, layout: &CapLayout) -> f64 {
        self.wheel_rate * 360.0 / (2.0 * layout.edge_window_deg)
    }

    /// Rim speed of a wheel turning at `wheel_rate`, mm/s.
    pub fn rim_speed(&self) -> f64 {
        2.0 * PI * self.chassis.geom.r_w * self.wheel_rate
    }

    /// Chassis twist that turns the driven wheels at `wheel_rate`.
    pub fn twist(&self) -> Twist {
        let v = self.rim_speed();
        match self.motion {
            Motion::Forward => Twist::new(SQRT_2 * v, 0.0, 0.0),
            Motion::Diagonal => Twist::new(v / SQRT_2, v / SQRT_2, 0.0),
            Motion::Turning => Twist::new(0.0, 0.0, v / self.chassis.mount_radius),
        }
    }

    pub fn validate(&self, layout: &CapLayout) -> Result<()> {
        self.chassis.validate()?;
        ensure(self.duration > 0.0 && self.duration.is_finite(), || {
            "duration must be positive".into()
        })?;
        ensure(self.sample_rate > 0.0 && self.sample_rate.is_finite(), || {
            "sample_rate must be positive".into()
        })?;
        ensure(self.wheel_rate.is_finite() && self.wheel_rate >= 0.0, || {
            "wheel_rate must be non-negative".into()
        })?;
        ensure(
            self.slide_drift_coeff.is_finite() && self.slide_drift_coeff >= 0.0,
            || "slide_drift_coeff must be non-negative".into(),
        )?;
        let required = 2.0 * self.frequency_of_interest(layout);
        if self.sample_rate < required {
            return Err(Error::Nyquist {
                sample_rate: self.sample_rate,
                required,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    /// `height_dev[w][i]`: contact-height deviation of wheel `w`, mm.
    pub height_dev: Vec<Vec<f64>>,
    /// `slide_offset[w][i]`: the largest cap displacement on wheel `w`, mm.
    pub slide_offset: Vec<Vec<f64>>,
    pub chassis_height_proxy: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.height_dev.len();
        let mut header = vec!["t_s".to_string()];
        header.extend((1..=n).map(|w| format!("w{w}_h")));
        header.extend((1..=n).map(|w| format!("w{w}_s")));
        header.push("proxy".into());
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = vec![self.t[i].to_string()];
            row.extend(self.height_dev.iter().map(|c| c[i].to_string()));
            row.extend(self.slide_offset.iter().map(|c| c[i].to_string()));
            row.push(self.chassis_height_proxy[i].to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn run_flat_ground(s: &RunScenario) -> Result<TimeSeries> {
    let geom = s.chassis.geom;
    let layout = CapLayout::from_geometry(&geom)?;
    s.validate(&layout)?;

    let speeds = inverse_kinematics(&s.twist(), &s.chassis)?.0;
    let n_wheels = speeds.len();
    let dt = 1.0 / s.sample_rate;
    let n = (s.duration * s.sample_rate).round() as usize;
    let deg_per_mm = 360.0 / (2.0 * PI * geom.r_w);

    let mut slides = vec![vec![SlideUnit::for_geometry(&geom); geom.n_caps]; n_wheels];
    let mut out = TimeSeries {
        t: Vec::with_capacity(n),
        height_dev: vec![Vec::with_capacity(n); n_wheels],
        slide_offset: vec![Vec::with_capacity(n); n_wheels],
        chassis_height_proxy: Vec::with_capacity(n),
    };

    for i in 0..n {
        let t = i as f64 * dt;
        out.t.push(t);
        let mut sum = 0.0;
        for (w, &v) in speeds.iter().enumerate() {
            let angle = v * deg_per_mm * t;
            let c = contact_state(&geom, &layout, angle, &slides[w])?;
            sum += c.height_deviation;
            out.height_dev[w].push(c.height_deviation);
            let widest = slides[w]
                .iter()
                .map(|u| u.offset)
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(0.0);
            out.slide_offset[w].push(widest);

            let loaded = c.element.loaded_cap();
            let pole = layout.pole_angles_deg[loaded];
            let drive = s.slide_drift_coeff * v.abs() * (angle - pole).to_radians().sin().abs();
            for (k, u) in slides[w].iter_mut().enumerate() {
                u.loaded = k == loaded;
                *u = slide_step(*u, drive, dt)?;
            }
        }
        out.chassis_height_proxy.push(sum / n_wheels as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rect,
    #[default]
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freq: Vec<f64>,
    /// One-sided magnitude scaled so that `Σ magnitude²` is the energy of
    /// the windowed, mean-removed signal.
    pub magnitude: Vec<f64>,
    pub window: Window,
    pub signal_energy: f64,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.freq.get(1).copied().unwrap_or(0.0)
    }

    pub fn band_energy(&self, lo: f64, hi: f64) -> f64 {
        self.freq
            .iter()
            .zip(&self.magnitude)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, m)| m * m)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "freq_hz,mag")?;
        for (f, m) in self.freq.iter().zip(&self.magnitude) {
            writeln!(out, "{f},{m}")?;
        }
        Ok(())
    }
}

pub const MIN_SPECTRUM_SAMPLES: usize = 256;

/// Sample rate of a uniformly spaced time axis.
pub fn uniform_rate(t: &[f64]) -> Result<f64> {
    ensure(t.len() >= 2, || "need at least two samples".into())?;
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::NonUniformSampling);
    }
    for (i, &ti) in t.iter().enumerate() {
        if (ti - (t[0] + i as f64 * dt)).abs() > 1e-6 * dt {
            return Err(Error::NonUniformSampling);
        }
    }
    Ok(1.0 / dt)
}

pub fn spectrum(t: &[f64], x: &[f64], window: Window) -> Result<Spectrum> {
    ensure(t.len() == x.len(), || {
        format!("{} times for {} values", t.len(), x.len())
    })?;
    ensure(x.len() >= MIN_SPECTRUM_SAMPLES, || {
        format!("need at least {MIN_SPECTRUM_SAMPLES} samples, got {}", x.len())
    })?;
    ensure(x.iter().all(|v| v.is_finite()), || "signal must be finite".into())?;
    let fs = uniform_rate(t)?;

    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let w = |i: usize| match window {
        Window::Rect => 1.0,
        Window::Hann => 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos(),
    };
    let xw: Vec<f64> = x.iter().enumerate().map(|(i, v)| (v - mean) * w(i)).collect();
    let signal_energy = xw.iter().map(|v| v * v).sum();

    let len = n.next_power_of_two();
    let mut buf: Vec<Complex<f64>> = xw.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let half = len / 2;
    let (freq, magnitude) = (0..=half)
        .map(|k| {
            let c = if k == 0 || k == half { 1.0 } else { 2.0 };
            (k as f64 * fs / len as f64, buf[k].norm() * (c / len as f64).sqrt())
        })
        .unzip();
    Ok(Spectrum {
        freq,
        magnitude,
        window,
        signal_energy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub freq: f64,
    pub magnitude: f64,
}

/// The `k` largest local maxima with frequency in `[lo, hi]`, largest first.
pub fn dominant_peaks(sp: &Spectrum, k: usize, band: (f64, f64)) -> Vec<Peak> {
    let m = &sp.magnitude;
    let mut peaks: Vec<Peak> = (1..m.len().saturating_sub(1))
        .filter(|&i| sp.freq[i] >= band.0 && sp.freq[i] <= band.1)
        .filter(|&i| m[i] > m[i - 1] && m[i] >= m[i + 1])
        .map(|i| Peak {
            freq: sp.freq[i],
            magnitude: m[i],
        })
        .collect();
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    peaks.truncate(k);
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tone(freqs: &[(f64, f64)], n: usize, fs: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 / fs).collect();
        let x = t
            .iter()
            .map(|t| freqs.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum())
            .collect();
        (t, x)
    }

    #[test]
    fn single_tone() {
        let (t, x) = tone(&[(10.0, 1.0)], 4096, 1000.0);
        let sp = spectrum(&t, &x, Window::Hann).unwrap();
        let p = dominant_peaks(&sp, 1, (0.0, 500.0));
        assert!((p[0].freq - 10.0).abs() <= sp.bin_width());
        assert_relative_eq!(
            sp.magnitude.iter().map(|m| m * m).sum::<f64>(),
            sp.signal_energy,
            max_relative = 1e-9
        );
    }

    #[test]
    fn two_tones_larger_first() {
        let (t, x) = tone(&[(5.0, 0.5), (15.0, 1.0)], 4096, 1000.0);
        let sp = spectrum(&t, &x, Window::Rect).unwrap();
        let p = dominant_peaks(&sp, 2, (1.0, 50.0));
        assert_eq!(p.len(), 2);
        assert!((p[0].freq - 15.0).abs() <= sp.bin_width());
        assert!((p[1].freq - 5.0).abs() <= sp.bin_width());
        assert!(dominant_peaks(&sp, 2, (100.0, 50.0)).is_empty());
    }

    #[test]
    fn constant_is_silent() {
        let t: Vec<f64> = (0..300).map(|i| i as f64 * 0.01).collect();
        let sp = spectrum(&t, &[4.2; 300], Window::Hann).unwrap();
        assert!(sp.magnitude.iter().all(|m| *m < 1e-12));
    }

    #[test]
    fn spectrum_rejects_bad_input() {
        let (mut t, x) = tone(&[(10.0, 1.0)], 300, 1000.0);
        assert!(spectrum(&t[..200], &x[..200], Window::Hann).is_err());
        t[100] += 0.0004;
        assert_eq!(spectrum(&t, &x, Window::Hann).unwrap_err(), Error::NonUniformSampling);
    }

    #[test]
    fn nyquist_guard() {
        let s = RunScenario {
            sample_rate: 80.0,
            ..RunScenario::default()
        };
        assert!(matches!(run_flat_ground(&s), Err(Error::Nyquist { .. })));
    }

    #[test]
    fn quiet_wheel_without_gap_or_drift() {
        let mut s = RunScenario {
            duration: 2.0,
            slide_drift_coeff: 0.0,
            ..RunScenario::default()
        };
        s.chassis.geom.gap = 0.0;
        let ts = run_flat_ground(&s).unwrap();
        assert!(ts.chassis_height_proxy.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn diagonal_leaves_two_wheels_still() {
        let s = RunScenario {
            motion: Motion::Diagonal,
            duration: 2.0,
            ..RunScenario::default()
        };
        let ts = run_flat_ground(&s).unwrap();
        for w in [1, 3] {
            assert!(ts.height_dev[w].iter().all(|v| *v == 0.0));
            assert!(ts.slide_offset[w].iter().all(|v| *v == 0.0));
        }
        assert!(ts.height_dev[0].iter().any(|v| *v < 0.0));
    }

    #[test]
    fn forward_slides_reciprocate() {
        let s = RunScenario {
            duration: 3.0,
            ..RunScenario::default()
        };
        let ts = run_flat_ground(&s).unwrap();
        let tr = &ts.slide_offset[0];
        let max = tr.iter().cloned().fold(0.0, f64::max);
        assert!(max > 0.5 && max < 30.0, "{max}");
        let late_min = tr[1000..].iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        assert!(late_min < 0.5 * max, "{late_min} vs {max}");
    }

    #[test]
    fn csv_header() {
        let s = RunScenario {
            duration: 0.01,
            ..RunScenario::default()
        };
        let ts = run_flat_ground(&s).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t_s,w1_h,w2_h,w3_h,w4_h,w1_s,w2_s,w3_s,w4_s,proxy"
        );
        assert_eq!(text.lines().count(), 11);
    }
}

//! Brute-force hooking oracle. Rim circles and tread sections are sampled
//! directly in 3D; no closed-form maximisation and no bisection.

#![allow(dead_code)]

use ptob_core::geometry::WheelGeometry;

type P = [f64; 3];

fn dot(a: P, b: P) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn add(a: P, b: P, k: f64) -> P {
    [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]]
}

fn cross(a: P, b: P) -> P {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit(a: P) -> P {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

pub struct Oracle {
    pub r: f64,
    pub c: f64,
    pub rho: f64,
    pub n_caps: usize,
    pub h: f64,
    axle: P,
    roll: P,
    /// Samples per circle.
    pub m: usize,
}

impl Oracle {
    pub fn new(g: &WheelGeometry, h: f64, yaw_deg: f64, m: usize) -> Self {
        let a = yaw_deg.to_radians();
        let rho = 0.5 * g.d_s;
        Self {
            r: g.r_w,
            c: (g.r_w * g.r_w - rho * rho).sqrt(),
            rho,
            n_caps: g.n_caps,
            h,
            axle: [a.sin(), a.cos(), 0.0],
            roll: [a.cos(), -a.sin(), 0.0],
            m,
        }
    }

    fn pole(&self, k: usize, theta: f64) -> P {
        let ph = (360.0 * k as f64 / self.n_caps as f64 - theta).to_radians();
        add([0.0, 0.0, -ph.cos()], self.roll, ph.sin())
    }

    fn circle(&self, centre: P, normal: P, radius: f64) -> impl Iterator<Item = P> + '_ {
        let seed = if normal[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let e1 = unit(cross(normal, seed));
        let e2 = cross(normal, e1);
        let m = self.m;
        (0..m).map(move |i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            add(add(centre, e1, radius * t.cos()), e2, radius * t.sin())
        })
    }

    /// Lowest sampled point of the next cap.
    pub fn landing_point(&self, theta: f64) -> P {
        let o = [0.0, 0.0, self.r];
        let p = self.pole(1, theta);
        let rim_centre = add(o, p, self.c);
        let mut best = self
            .circle(rim_centre, p, self.rho)
            .min_by(|a, b| a[2].total_cmp(&b[2]))
            .unwrap();
        let bottom = [0.0, 0.0, 0.0];
        if dot(add(bottom, o, -1.0), p) >= self.c && bottom[2] < best[2] {
            best = bottom;
        }
        best
    }

    /// Most forward sampled point of the other caps at or below the tread.
    pub fn corner(&self, theta: f64, slide: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut take = |x: f64| best = Some(best.map_or(x, |b: f64| b.max(x)));
        for k in (0..self.n_caps).filter(|&k| k != 1) {
            let o = if k == 0 {
                add([0.0, 0.0, self.r], self.axle, -slide)
            } else {
                [0.0, 0.0, self.r]
            };
            let p = self.pole(k, theta);
            let inside = |x: P| dot(add(x, o, -1.0), p) >= self.c - 1e-9;
            let front = [o[0] + self.r, o[1], o[2]];
            if front[2] <= self.h && inside(front) {
                take(front[0]);
            }
            let dz = self.h - o[2];
            if dz.abs() < self.r {
                let ring = (self.r * self.r - dz * dz).sqrt();
                for x in self.circle([o[0], o[1], self.h], [0.0, 0.0, 1.0], ring) {
                    if inside(x) {
                        take(x[0]);
                    }
                }
            }
            for x in self.circle(add(o, p, self.c), p, self.rho) {
                if x[2] <= self.h {
                    take(x[0]);
                }
            }
        }
        best
    }

    pub fn margin(&self, theta: f64, slide: f64) -> f64 {
        let e = self.landing_point(theta);
        if e[2] < self.h {
            return f64::NEG_INFINITY;
        }
        self.corner(theta, slide).map_or(f64::NEG_INFINITY, |f| e[0] - f)
    }

    /// Best margin over `n` drive angles spread across one cap period.
    pub fn best_margin(&self, slide: f64, n: usize) -> f64 {
        let half = 180.0 / self.n_caps as f64;
        (0..n)
            .map(|i| self.margin(-half + 2.0 * half * i as f64 / (n - 1) as f64, slide))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest slide that hooks with margin `delta`, from two 100 × 100
    /// grids over (drive angle, slide): a coarse one over the whole range
    /// and a fine one around the coarse answer.
    pub fn min_slide(&self, delta: f64) -> f64 {
        let half = 180.0 / self.n_caps as f64;
        let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / 99.0;
        let search = |t_lo: f64, t_hi: f64, s_lo: f64, s_hi: f64| -> Option<(f64, f64)> {
            for j in 0..100 {
                let s = lin(s_lo, s_hi, j);
                let mut best = (f64::NEG_INFINITY, 0.0);
                for i in 0..100 {
                    let t = lin(t_lo, t_hi, i);
                    let m = self.margin(t, s);
                    if m > best.0 {
                        best = (m, t);
                    }
                }
                if best.0 >= delta {
                    return Some((s, best.1));
                }
            }
            None
        };
        let Some((s0, t0)) = search(-half, half, 0.0, self.r) else {
            return f64::INFINITY;
        };
        if s0 == 0.0 {
            return 0.0;
        }
        let ds = self.r / 99.0;
        let dt = 2.0 * half / 99.0;
        search(t0 - dt, t0 + dt, s0 - ds, s0).map_or(s0, |(s, _)| s)
    }
}

mod config;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ptob_core::chassis::{self, Pose, Twist, WheelSpeeds};
use ptob_core::geometry::{self, ConstraintReport};
use ptob_core::simulate::{self, Motion, Window};
use ptob_core::stepclimb::{self, StepScenario};

use config::Config;
use render::{Doc, Format};

#[derive(Parser)]
#[command(
    name = "ptob",
    version,
    about = "Quasi-static models of the transformable omni-ball wheel and chassis"
)]
struct Cli {
    /// Output format; each verb has its own default.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct GeomOpt {
    /// Wheel geometry JSON; defaults to the config file, then the prototype.
    #[arg(long)]
    geom: Option<PathBuf>,
}

#[derive(Args)]
struct StepOpts {
    /// Step scenario JSON; the flags below override its fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    yaw: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    phase: Option<f64>,
    #[arg(long)]
    hook_margin: Option<f64>,
    #[arg(long)]
    plate_clearance: Option<f64>,
}

#[derive(Args)]
struct TwistOpts {
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    vx: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    vy: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    omega: f64,
}

#[derive(Args)]
struct ChassisOpt {
    /// Chassis config JSON; defaults to the config file, then the 400 mm square layout.
    #[arg(long)]
    chassis: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MotionArg {
    Forward,
    Diagonal,
    Turning,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Hann,
    Rect,
}

#[derive(Subcommand)]
enum Verb {
    /// Check the cap and actuator layout constraints.
    DesignCheck {
        #[command(flatten)]
        geom: GeomOpt,
        /// Also enforce the step-climbing actuator rule.
        #[arg(long)]
        strict: bool,
    },
    /// Largest cap thickness and rim diameter for a sphere.
    CapBounds {
        #[command(flatten)]
        geom: GeomOpt,
        #[arg(long)]
        r_w: Option<f64>,
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long)]
        n_caps: Option<usize>,
    },
    /// Minimum spacing of the support plates.
    PlateSpacing {
        #[command(flatten)]
        geom: GeomOpt,
        #[arg(long, default_value_t = 0.0)]
        clearance: f64,
    },
    /// Hook feasibility for one step.
    StepclimbSolve {
        #[command(flatten)]
        geom: GeomOpt,
        #[command(flatten)]
        step: StepOpts,
    },
    /// Maximum step over the slide-limit and phase grid.
    StepclimbTable {
        #[command(flatten)]
        geom: GeomOpt,
        #[command(flatten)]
        step: StepOpts,
        #[arg(long, default_value_t = 5.0)]
        resolution: f64,
    },
    /// Gap crossing as an equivalent step.
    Gap {
        #[command(flatten)]
        geom: GeomOpt,
        #[command(flatten)]
        step: StepOpts,
        /// Gap width, mm.
        #[arg(long)]
        width: f64,
    },
    /// Wheel speeds for a chassis twist.
    KinematicsIk {
        #[command(flatten)]
        chassis: ChassisOpt,
        #[command(flatten)]
        twist: TwistOpts,
    },
    /// Least-squares twist for wheel speeds.
    KinematicsFk {
        #[command(flatten)]
        chassis: ChassisOpt,
        /// Comma-separated wheel speeds, mm/s.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        speeds: Vec<f64>,
    },
    /// Integrate a constant twist from a start pose.
    Odometry {
        #[command(flatten)]
        twist: TwistOpts,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        x: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        y: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        heading: f64,
    },
    /// Flat-ground run time series.
    Simulate {
        /// Run scenario JSON; the flags below override its fields.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        geom: GeomOpt,
        #[arg(long, value_enum)]
        motion: Option<MotionArg>,
        #[arg(long)]
        wheel_rate: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        sample_rate: Option<f64>,
        #[arg(long)]
        drift: Option<f64>,
    },
    /// Spectrum of one channel of a time series (CSV or JSON).
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        /// Column name, e.g. proxy, w1_h, w2_s.
        #[arg(long, default_value = "proxy")]
        channel: String,
        #[arg(long, value_enum, default_value = "hann")]
        window: WindowArg,
        /// Report the largest local maxima instead of the full spectrum.
        #[arg(long)]
        peaks: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        band_lo: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        band_hi: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = Config::from_env()?;
    let (doc, code) = dispatch(cli.verb, &cfg)?;
    let text = doc.render(cli.format)?;
    match cli.output {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r.context("writing stdout")?,
            }
        }
    }
    Ok(code)
}

fn step_scenario(cfg: &Config, geom: &geometry::WheelGeometry, o: &StepOpts) -> Result<StepScenario> {
    let mut sc = match &o.scenario {
        Some(p) => config::read_json(p)?,
        None => cfg.step.unwrap_or_else(|| StepScenario::new(0.0, geom.s_max, 0.0)),
    };
    let set = |field: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *field = v;
        }
    };
    set(&mut sc.step_height, o.height);
    set(&mut sc.approach_yaw, o.yaw);
    set(&mut sc.s_max, o.s_max);
    set(&mut sc.phase_diff, o.phase);
    set(&mut sc.hook_margin, o.hook_margin);
    set(&mut sc.plate_clearance, o.plate_clearance);
    Ok(sc)
}

fn dispatch(verb: Verb, cfg: &Config) -> Result<(Doc, u8)> {
    let solver = cfg.solver.unwrap_or_default();
    let doc = match verb {
        Verb::DesignCheck { geom, strict } => {
            let g = cfg.geometry(geom.geom.as_deref())?;
            let rep: ConstraintReport = geometry::validate_wheel_geometry(&g, strict)?;
            let code = if rep.satisfied { 0 } else { 2 };
            return Ok((Doc::report(&rep)?, code));
        }
        Verb::CapBounds { geom, r_w, gap, n_caps } => {
            let g = cfg.geometry(geom.geom.as_deref())?;
            let (r, gp, n) = (r_w.unwrap_or(g.r_w), gap.unwrap_or(g.gap), n_caps.unwrap_or(g.n_caps));
            let (h, d) = geometry::max_cap_dimensions(r, gp, n)?;
            Doc::cap_bounds(h, d)?
        }
        Verb::PlateSpacing { geom, clearance } => {
            let g = cfg.geometry(geom.geom.as_deref())?;
            Doc::plate_spacing(&geometry::support_plate_spacing(&g, clearance)?)?
        }
        Verb::StepclimbSolve { geom, step } => {
            let g = cfg.geometry(geom.geom.as_deref())?;
            let sc = step_scenario(cfg, &g, &step)?;
            Doc::outcome(&solver.hook_feasible(&g, &sc)?)?
        }
        Verb::StepclimbTable { geom, step, resolution } => {
            let g = cfg.geometry(geom.geom.as_deref())?;
            let sc = step_scenario(cfg, &g, &step)?;
            Doc::table(&solver.step_table(&g, &sc, resolution)?)?
        }
        Verb::Gap { geom, step, width } => {
            let g = cfg.geometry(geom.geom.as_deref())?;
            let sc = step_scenario(cfg, &g, &step)?;
            let outcome = solver.gap_crossing_feasible(&g, width, &sc)?;
            Doc::gap(width, stepclimb::gap_drop(g.r_w, width), &outcome)?
        }
        Verb::KinematicsIk { chassis: c, twist } => {
            let c = cfg.chassis(c.chassis.as_deref())?;
            let t = Twist::new(twist.vx, twist.vy, twist.omega);
            Doc::speeds(&chassis::inverse_kinematics(&t, &c)?)?
        }
        Verb::KinematicsFk { chassis: c, speeds } => {
            let c = cfg.chassis(c.chassis.as_deref())?;
            Doc::forward(&chassis::forward_kinematics(&WheelSpeeds(speeds), &c)?)?
        }
        Verb::Odometry {
            twist,
            dt,
            steps,
            x,
            y,
            heading,
        } => {
            let t = Twist::new(twist.vx, twist.vy, twist.omega);
            let mut p = Pose {
                x,
                y,
                heading: chassis::normalize_angle(heading),
            };
            for _ in 0..steps {
                p = chassis::integrate_odometry(&p, &t, dt)?;
            }
            Doc::pose(&p)?
        }
        Verb::Simulate {
            scenario,
            geom,
            motion,
            wheel_rate,
            duration,
            sample_rate,
            drift,
        } => {
            let mut s = match scenario {
                Some(p) => config::read_json(&p)?,
                None => cfg.run_scenario()?,
            };
            if let Some(p) = geom.geom {
                s.chassis.geom = config::read_json(&p)?;
            }
            if let Some(m) = motion {
                s.motion = match m {
                    MotionArg::Forward => Motion::Forward,
                    MotionArg::Diagonal => Motion::Diagonal,
                    MotionArg::Turning => Motion::Turning,
                };
            }
            s.wheel_rate = wheel_rate.unwrap_or(s.wheel_rate);
            s.duration = duration.unwrap_or(s.duration);
            s.sample_rate = sample_rate.unwrap_or(s.sample_rate);
            s.slide_drift_coeff = drift.unwrap_or(s.slide_drift_coeff);
            Doc::series(&simulate::run_flat_ground(&s)?)?
        }
        Verb::Spectrum {
            input,
            channel,
            window,
            peaks,
            band_lo,
            band_hi,
        } => {
            let (t, x) = render::read_channel(&input, &channel)?;
            let w = match window {
                WindowArg::Hann => Window::Hann,
                WindowArg::Rect => Window::Rect,
            };
            let sp = simulate::spectrum(&t, &x, w)?;
            match peaks {
                Some(0) => bail!("--peaks must be at least 1"),
                Some(k) => Doc::peaks(&simulate::dominant_peaks(&sp, k, (band_lo, band_hi)))?,
                None => Doc::spectrum(&sp)?,
            }
        }
    };
    Ok((doc, 0))
}

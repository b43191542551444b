//! JSON and CSV documents for each verb. Numbers use the shortest text that
//! reads back to the same `f64`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;

use ptob_core::chassis::{ForwardSolution, Pose, WheelSpeeds};
use ptob_core::geometry::{ConstraintReport, PlateSpacing};
use ptob_core::simulate::{Peak, Spectrum, TimeSeries};
use ptob_core::stepclimb::{write_table_csv, HookOutcome, TableCell};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Doc {
    json: String,
    csv: String,
    default: Format,
}

#[derive(Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct CapBounds {
    pub h_s_max: f64,
    pub d_s_max: f64,
}

#[derive(Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct GapReport {
    pub width: f64,
    pub drop: f64,
    pub outcome: HookOutcome,
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn csv_lines(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn outcome_row(o: &HookOutcome) -> String {
    let lf = serde_json::to_value(o.limiting_factor)
        .ok()
        .and_then(|v| v.as_str().map(String::from));
    format!(
        "{},{},{},{}",
        o.feasible,
        o.required_slide,
        o.hook_distance,
        lf.unwrap_or_default()
    )
}

impl Doc {
    fn new(json: String, csv: String) -> Self {
        Self {
            json,
            csv,
            default: Format::Json,
        }
    }

    fn csv_first(mut self) -> Self {
        self.default = Format::Csv;
        self
    }

    pub fn render(self, format: Option<Format>) -> Result<String> {
        Ok(match format.unwrap_or(self.default) {
            Format::Json => self.json,
            Format::Csv => self.csv,
        })
    }

    pub fn report(r: &ConstraintReport) -> Result<Self> {
        let rows = r.checks.iter().map(|c| {
            let id = serde_json::to_value(c.id)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            format!("{id},{},{},{},{}", c.bound, c.actual, c.satisfied, c.slack)
        });
        Ok(Self::new(json(r)?, csv_lines("id,bound,actual,satisfied,slack", rows)))
    }

    pub fn cap_bounds(h_s_max: f64, d_s_max: f64) -> Result<Self> {
        Ok(Self::new(
            json(&CapBounds { h_s_max, d_s_max })?,
            csv_lines("h_s_max_mm,d_s_max_mm", [format!("{h_s_max},{d_s_max}")]),
        ))
    }

    pub fn plate_spacing(p: &PlateSpacing) -> Result<Self> {
        Ok(Self::new(json(p)?, csv_lines("d_p_min_mm", [p.d_p_min.to_string()])))
    }

    pub fn outcome(o: &HookOutcome) -> Result<Self> {
        Ok(Self::new(
            json(o)?,
            csv_lines(
                "feasible,required_slide_mm,hook_distance_mm,limiting_factor",
                [outcome_row(o)],
            ),
        ))
    }

    pub fn gap(width: f64, drop: f64, o: &HookOutcome) -> Result<Self> {
        let r = GapReport {
            width,
            drop,
            outcome: *o,
        };
        Ok(Self::new(
            json(&r)?,
            csv_lines(
                "gap_mm,drop_mm,feasible,required_slide_mm,hook_distance_mm,limiting_factor",
                [format!("{width},{drop},{}", outcome_row(o))],
            ),
        ))
    }

    pub fn table(cells: &[TableCell]) -> Result<Self> {
        let mut buf = Vec::new();
        write_table_csv(cells, &mut buf)?;
        Ok(Self::new(json(cells)?, String::from_utf8(buf)?).csv_first())
    }

    pub fn speeds(w: &WheelSpeeds) -> Result<Self> {
        let header: Vec<String> = (1..=w.0.len()).map(|i| format!("v{i}")).collect();
        let row: Vec<String> = w.0.iter().map(f64::to_string).collect();
        Ok(Self::new(json(w)?, csv_lines(&header.join(","), [row.join(",")])))
    }

    pub fn forward(f: &ForwardSolution) -> Result<Self> {
        let t = f.twist;
        Ok(Self::new(
            json(f)?,
            csv_lines(
                "vx,vy,omega,residual",
                [format!("{},{},{},{}", t.vx, t.vy, t.omega, f.residual)],
            ),
        ))
    }

    pub fn pose(p: &Pose) -> Result<Self> {
        Ok(Self::new(
            json(p)?,
            csv_lines("x,y,heading", [format!("{},{},{}", p.x, p.y, p.heading)]),
        ))
    }

    pub fn series(ts: &TimeSeries) -> Result<Self> {
        let mut buf = Vec::new();
        ts.write_csv(&mut buf)?;
        Ok(Self::new(json(ts)?, String::from_utf8(buf)?).csv_first())
    }

    pub fn spectrum(sp: &Spectrum) -> Result<Self> {
        let mut buf = Vec::new();
        sp.write_csv(&mut buf)?;
        Ok(Self::new(json(sp)?, String::from_utf8(buf)?).csv_first())
    }

    pub fn peaks(p: &[Peak]) -> Result<Self> {
        let rows = p.iter().map(|p| format!("{},{}", p.freq, p.magnitude));
        Ok(Self::new(json(p)?, csv_lines("freq_hz,mag", rows)))
    }
}

/// Time axis and one named column of a time series file. JSON files hold a
/// serialized `TimeSeries`; anything else is read as CSV with a `t_s` column.
pub fn read_channel(path: &Path, channel: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    if path.extension().is_some_and(|e| e == "json") {
        let ts: TimeSeries = crate::config::read_json(path)?;
        let pick = |prefix: char, w: &str| -> Option<Vec<f64>> {
            let i: usize = w.parse().ok()?;
            let src = if prefix == 'h' {
                &ts.height_dev
            } else {
                &ts.slide_offset
            };
            src.get(i.checked_sub(1)?).cloned()
        };
        let x = match channel {
            "proxy" => Some(ts.chassis_height_proxy.clone()),
            c => c
                .strip_prefix('w')
                .and_then(|r| r.split_once('_'))
                .and_then(|(w, k)| match k {
                    "h" => pick('h', w),
                    "s" => pick('s', w),
                    _ => None,
                }),
        };
        let x = x.ok_or_else(|| anyhow!("no channel {channel:?} in {}", path.display()))?;
        return Ok((ts.t, x));
    }

    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ti), Some(xi)) = (col("t_s"), col(channel)) else {
        bail!("{} needs columns t_s and {channel}", path.display());
    };
    let (mut t, mut x) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            let field = rec.get(i).unwrap_or("");
            field.trim().parse().with_context(|| format!("bad number {field:?}"))
        };
        t.push(num(ti)?);
        x.push(num(xi)?);
    }
    Ok((t, x))
}

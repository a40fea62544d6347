use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::bop::write_atomic;
use crate::Pose;

pub const RESULTS_HEADER: &str = "scene_id,im_id,obj_id,score,R,t,time";

/// Largest deviation of `RᵀR` from the identity accepted when parsing.
/// Six significant digits leave entries off by up to `5e-7`.
const ORTHONORMAL_TOLERANCE: f64 = 1e-5;

/// One estimated pose in the BOP result convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseResultRow {
    pub scene_id: usize,
    pub im_id: usize,
    pub obj_id: usize,
    pub score: f64,
    /// Row-major rotation.
    pub r: [f64; 9],
    /// Translation in millimeters.
    pub t: [f64; 3],
    /// Seconds, `-1` when not recorded.
    pub time: f64,
}

impl PoseResultRow {
    pub fn from_pose(scene_id: usize, im_id: usize, obj_id: usize, score: f64, pose: &Pose, time: f64) -> Self {
        Self {
            scene_id,
            im_id,
            obj_id,
            score,
            r: std::array::from_fn(|k| pose.rotation[(k / 3, k % 3)]),
            t: std::array::from_fn(|k| pose.translation[k] * 1000.0),
            time,
        }
    }

    /// Pose in meters.
    pub fn pose(&self) -> Pose {
        Pose::from_parts_unchecked(Matrix3::from_row_slice(&self.r), Vector3::from_column_slice(&self.t) / 1000.0)
    }

    pub fn key(&self) -> (usize, usize, usize) {
        (self.scene_id, self.im_id, self.obj_id)
    }
}

/// C `%g` formatting with `digits` significant digits.
pub fn format_g(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= p as i32 {
        format!("{}e{}{:02}", trim(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{:.*}", (p as i32 - 1 - exp).max(0) as usize, x))
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format_g(*v, 6)).collect::<Vec<_>>().join(" ")
}

/// CSV text of `rows` in the given order.
pub fn write_results_string(rows: &[PoseResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scene_id,
            r.im_id,
            r.obj_id,
            format_g(r.score, 6),
            join(&r.r),
            join(&r.t),
            format_g(r.time, 6)
        ));
    }
    out
}

pub fn write_results(rows: &[PoseResultRow], path: &Path) -> Result<(), MetricsError> {
    Ok(write_atomic(path, write_results_string(rows).as_bytes())?)
}

fn parse_floats<const N: usize>(field: &str, what: &str) -> Result<[f64; N], String> {
    let vals: Vec<f64> = field
        .split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|_| format!("{what}: cannot parse {s:?}")))
        .collect::<Result<_, _>>()?;
    if vals.len() != N {
        return Err(format!("{what}: expected {N} values, found {}", vals.len()));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(format!("{what}: non-finite value"));
    }
    Ok(vals.try_into().expect("length checked"))
}

fn parse_row(rec: &csv::StringRecord) -> Result<PoseResultRow, String> {
    if rec.len() != 7 {
        return Err(format!("expected 7 fields, found {}", rec.len()));
    }
    let int = |i: usize, name: &str| rec[i].trim().parse::<usize>().map_err(|_| format!("{name}: cannot parse {:?}", &rec[i]));
    let real = |i: usize, name: &str| {
        rec[i]
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("{name}: cannot parse {:?}", &rec[i]))
    };
    let row = PoseResultRow {
        scene_id: int(0, "scene_id")?,
        im_id: int(1, "im_id")?,
        obj_id: int(2, "obj_id")?,
        score: real(3, "score")?,
        r: parse_floats::<9>(&rec[4], "R")?,
        t: parse_floats::<3>(&rec[5], "t")?,
        time: real(6, "time")?,
    };
    let m = Matrix3::from_row_slice(&row.r);
    let dev = (m.transpose() * m - Matrix3::identity()).abs().max();
    if dev > ORTHONORMAL_TOLERANCE || m.determinant() <= 0.0 {
        return Err(format!("R is not a rotation (|RᵀR - I| = {dev:.3e})"));
    }
    Ok(row)
}

/// Parses result CSV text; `origin` names the source in errors.
pub fn parse_results_str(text: &str, origin: &Path) -> Result<Vec<PoseResultRow>, MetricsError> {
    let err = |line: u64, message: String| MetricsError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut seen_header = false;
    for rec in reader.records() {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if !seen_header {
            let got: Vec<&str> = rec.iter().map(str::trim).collect();
            if got.join(",") != RESULTS_HEADER {
                return Err(err(line, format!("expected header {RESULTS_HEADER:?}")));
            }
            seen_header = true;
            continue;
        }
        rows.push(parse_row(&rec).map_err(|m| err(line, m))?);
    }
    if !seen_header {
        return Err(err(1, format!("missing header {RESULTS_HEADER:?}")));
    }
    Ok(rows)
}

pub fn parse_results(path: &Path) -> Result<Vec<PoseResultRow>, MetricsError> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::bop::BopError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_results_str(&text, path)
}

//! Model files, per-frame and animated SVG, and frame-rate resampling.
//!
//! SVG numbers are written with six decimals and no negative zero, so equal
//! geometry always produces identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::BasisKind;
use crate::error::{Error, Result};
use crate::trajectory::{bezier_point, SketchAnimation, Stroke, TrajectoryPoly};
use crate::Point;

pub const FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`SketchAnimation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub canvas: (u32, u32),
    pub num_frames: usize,
    pub widths: Vec<f64>,
    pub strokes: Vec<StrokeRecord>,
    /// Fields this version does not know about; ignored.
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeRecord {
    pub basis: BasisKind,
    pub curve_degree: usize,
    pub trajectory_degree: usize,
    /// `[control point][coefficient] = [x, y]`.
    pub control_points: Vec<Vec<[f64; 2]>>,
}

impl ModelDocument {
    pub fn from_animation(anim: &SketchAnimation) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            canvas: anim.canvas(),
            num_frames: anim.num_frames(),
            widths: anim.widths().to_vec(),
            strokes: anim
                .strokes()
                .iter()
                .map(|s| StrokeRecord {
                    basis: s.basis(),
                    curve_degree: s.curve_degree(),
                    trajectory_degree: s.trajectory_degree(),
                    control_points: s
                        .trajectories()
                        .iter()
                        .map(|tr| tr.coeffs().iter().map(|c| [c.x, c.y]).collect())
                        .collect(),
                })
                .collect(),
            extra: BTreeMap::new(),
        }
    }

    pub fn to_animation(&self) -> Result<SketchAnimation> {
        let strokes = self
            .strokes
            .iter()
            .enumerate()
            .map(|(j, rec)| {
                if rec.control_points.len() != rec.curve_degree + 1 {
                    return Err(Error::Validation(format!(
                        "stroke {j}: {} control points for curve degree {}",
                        rec.control_points.len(),
                        rec.curve_degree
                    )));
                }
                let trajectories = rec
                    .control_points
                    .iter()
                    .map(|cs| {
                        if cs.len() != rec.trajectory_degree + 1 {
                            return Err(Error::Validation(format!(
                                "stroke {j}: {} coefficients for trajectory degree {}",
                                cs.len(),
                                rec.trajectory_degree
                            )));
                        }
                        TrajectoryPoly::new(rec.basis, cs.iter().map(|c| Point::new(c[0], c[1])).collect())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Stroke::new(trajectories)
            })
            .collect::<Result<Vec<_>>>()?;
        SketchAnimation::new(strokes, self.num_frames, self.canvas, self.widths.clone())
    }
}

pub fn model_to_json(anim: &SketchAnimation) -> String {
    serde_json::to_string_pretty(&ModelDocument::from_animation(anim))
        .expect("model documents always serialize")
}

/// Parses a model, checking the format version before anything else.
pub fn model_from_json(text: &str, context: &str) -> Result<SketchAnimation> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::parse(context, e))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::parse(context, "missing or invalid format_version"))?;
    if version > FORMAT_VERSION as u64 {
        return Err(Error::UnsupportedVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported: FORMAT_VERSION,
        });
    }
    let doc: ModelDocument = serde_json::from_value(value).map_err(|e| Error::parse(context, e))?;
    if !doc.extra.is_empty() {
        let keys: Vec<&str> = doc.extra.keys().map(String::as_str).collect();
        log::warn!("{context}: ignoring unknown fields {}", keys.join(", "));
    }
    doc.to_animation()
}

pub fn save_model(anim: &SketchAnimation, path: &Path) -> Result<ModelDocument> {
    std::fs::write(path, model_to_json(anim)).map_err(|e| Error::io(path, e))?;
    Ok(ModelDocument::from_animation(anim))
}

pub fn load_model(path: &Path) -> Result<SketchAnimation> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text, &path.display().to_string())
}

/// Six decimals, never `-0.000000`.
pub fn format_number(v: f64) -> String {
    let s = format!("{v:.6}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// Cubic segments `[p0, p1, p2, p3]` tracing a Bézier curve. Degrees up to 3
/// are represented exactly by degree elevation; higher degrees are split into
/// `m` pieces, each the cubic Hermite interpolant of the curve's positions and
/// tangents at the piece ends.
pub fn cubic_segments(control_points: &[Point]) -> Vec<[Point; 4]> {
    let p = control_points;
    match p.len() {
        0 => Vec::new(),
        1 => vec![[p[0]; 4]],
        2 => vec![[p[0], p[0] + (p[1] - p[0]) / 3.0, p[0] + (p[1] - p[0]) * (2.0 / 3.0), p[1]]],
        3 => vec![[
            p[0],
            p[0] + (p[1] - p[0]) * (2.0 / 3.0),
            p[2] + (p[1] - p[2]) * (2.0 / 3.0),
            p[2],
        ]],
        4 => vec![[p[0], p[1], p[2], p[3]]],
        len => {
            let m = len - 1;
            let hodograph: Vec<Point> = p.windows(2).map(|w| (w[1] - w[0]) * m as f64).collect();
            let pieces = m;
            (0..pieces)
                .map(|k| {
                    let (a, b) = (k as f64 / pieces as f64, (k + 1) as f64 / pieces as f64);
                    let h = (b - a) / 3.0;
                    let (pa, pb) = (bezier_point(p, a), bezier_point(p, b));
                    [
                        pa,
                        pa + bezier_point(&hodograph, a) * h,
                        pb - bezier_point(&hodograph, b) * h,
                        pb,
                    ]
                })
                .collect()
        }
    }
}

/// SVG path data of one stroke at time `t`.
pub fn path_data(stroke: &Stroke, t: f64) -> Result<String> {
    let cps = stroke.control_points(t)?;
    let segments = cubic_segments(&cps);
    let pt = |p: &Point| format!("{} {}", format_number(p.x), format_number(p.y));
    let mut d = format!("M {}", pt(&segments[0][0]));
    for seg in &segments {
        let _ = write!(d, " C {} {} {}", pt(&seg[1]), pt(&seg[2]), pt(&seg[3]));
    }
    Ok(d)
}

/// Points of an absolute `M`/`C` path as written by [`path_data`].
pub fn parse_path_data(d: &str) -> Result<Vec<Point>> {
    let mut nums = Vec::new();
    for tok in d.split_ascii_whitespace() {
        match tok {
            "M" | "C" => {}
            _ => nums.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::parse("path data", format!("bad number '{tok}'")))?,
            ),
        }
    }
    if nums.len() % 2 != 0 {
        return Err(Error::parse("path data", "odd number of coordinates"));
    }
    Ok(nums.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
}

fn svg_header(anim: &SketchAnimation) -> String {
    let (w, h) = anim.canvas();
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    )
}

const STROKE_STYLE: &str =
    "fill=\"none\" stroke=\"black\" stroke-linecap=\"round\" stroke-linejoin=\"round\"";

/// One frame at time `t` as an SVG document.
pub fn render_frame_svg(anim: &SketchAnimation, t: f64) -> Result<String> {
    crate::bernstein::check_unit("t", t)?;
    let width = format_number(anim.width_at(t));
    let mut out = svg_header(anim);
    for stroke in anim.strokes() {
        let _ = writeln!(
            out,
            "  <path d=\"{}\" {STROKE_STYLE} stroke-width=\"{width}\"/>",
            path_data(stroke, t)?
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn export_frame_svg(anim: &SketchAnimation, t: f64, path: &Path) -> Result<()> {
    let svg = render_frame_svg(anim, t)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Writes `frame_00000.svg`, ... for every input frame into `dir`.
pub fn export_frames(anim: &SketchAnimation, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..anim.num_frames())
        .into_par_iter()
        .map(|i| {
            let path = dir.join(format!("frame_{i:05}.svg"));
            export_frame_svg(anim, anim.frame_time(i), &path)?;
            Ok(path)
        })
        .collect()
}

/// Output timing of an animation.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRatePlan {
    pub input_fps: f64,
    pub output_fps: f64,
    /// Strictly increasing from 0 to 1.
    pub output_frame_times: Vec<f64>,
}

impl FrameRatePlan {
    /// `N_out / output_fps` seconds.
    pub fn duration(&self) -> f64 {
        self.output_frame_times.len() as f64 / self.output_fps
    }
}

/// `round((N_f - 1) · out / in) + 1` uniform output times (at least two).
pub fn resample_framerate(
    anim: &SketchAnimation,
    input_fps: f64,
    output_fps: f64,
) -> Result<FrameRatePlan> {
    for (name, fps) in [("input", input_fps), ("output", output_fps)] {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Domain(format!("{name} fps must be positive, got {fps}")));
        }
    }
    let steps = ((anim.num_frames() - 1) as f64 * output_fps / input_fps).round() as usize;
    let count = steps.max(1) + 1;
    Ok(FrameRatePlan {
        input_fps,
        output_fps,
        output_frame_times: (0..count).map(|k| k as f64 / (count - 1) as f64).collect(),
    })
}

/// One SVG whose paths animate through the plan's key geometries.
pub fn render_animated_svg(anim: &SketchAnimation, plan: &FrameRatePlan) -> Result<String> {
    let times = &plan.output_frame_times;
    if times.len() < 2
        || times[0] != 0.0
        || *times.last().unwrap() != 1.0
        || times.windows(2).any(|w| !(w[0] < w[1]))
    {
        return Err(Error::Validation(
            "plan times must increase strictly from 0 to 1".into(),
        ));
    }
    if !(plan.output_fps.is_finite() && plan.output_fps > 0.0) {
        return Err(Error::Domain("output fps must be positive".into()));
    }
    let key_times: Vec<String> = times.iter().map(|&t| format_number(t)).collect();
    let key_times = key_times.join(";");
    let widths: Vec<String> = times.iter().map(|&t| format_number(anim.width_at(t))).collect();
    let widths = widths.join(";");
    let dur = format_number(plan.duration());
    let mut out = svg_header(anim);
    for stroke in anim.strokes() {
        let keys = times
            .iter()
            .map(|&t| path_data(stroke, t))
            .collect::<Result<Vec<_>>>()?;
        let _ = writeln!(
            out,
            "  <path d=\"{}\" {STROKE_STYLE} stroke-width=\"{}\">",
            keys[0],
            format_number(anim.width_at(0.0))
        );
        let timing = format!("dur=\"{dur}s\" repeatCount=\"indefinite\" calcMode=\"linear\" keyTimes=\"{key_times}\"");
        let _ = writeln!(
            out,
            "    <animate attributeName=\"d\" {timing} values=\"{}\"/>",
            keys.join(";")
        );
        let _ = writeln!(
            out,
            "    <animate attributeName=\"stroke-width\" {timing} values=\"{widths}\"/>"
        );
        out.push_str("  </path>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn export_animated_svg(anim: &SketchAnimation, plan: &FrameRatePlan, path: &Path) -> Result<()> {
    let svg = render_animated_svg(anim, plan)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

//! Initialization of an animation from guidance maps and sparse tracks:
//! density composition, seed sampling, target assignment, ridge fitting of
//! every control trajectory, and the per-frame stroke width schedule.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bernstein::BasisKind;
use crate::error::{Error, Result};
use crate::fitting::{FitMethod, FitPlan, DEFAULT_RIDGE_LAMBDA};
use crate::maps::GrayMap;
use crate::tracking::{MotionHeatmap, TrackSet};
use crate::trajectory::{default_trajectory_degree, SketchAnimation, Stroke, DEFAULT_CURVE_DEGREE};
use crate::Point;

pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_NUM_STROKES: usize = 16;
/// Maximum stroke width in pixels.
pub const DEFAULT_W_MAX: f64 = 3.0;

/// Seeding distribution over pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub width: usize,
    pub height: usize,
    /// Sums to 1.
    pub probabilities: Vec<f64>,
    /// The map before normalization.
    pub unnormalized: Vec<f64>,
}

impl DensityMap {
    pub fn uniform(width: usize, height: usize) -> Result<Self> {
        let count = width * height;
        if count == 0 {
            return Err(Error::Validation("density dimensions must be positive".into()));
        }
        Ok(Self {
            width,
            height,
            probabilities: vec![1.0 / count as f64; count],
            unnormalized: vec![1.0; count],
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probabilities[y * self.width + x]
    }
}

/// `M = xdog ⊙ ((1 - β) attention + β motion)`, normalized to sum 1.
pub fn compose_density_map(
    xdog: &GrayMap,
    attention: &GrayMap,
    motion: &MotionHeatmap,
    beta: f64,
) -> Result<DensityMap> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    let dims = (xdog.width, xdog.height);
    for (name, d) in [
        ("attention", (attention.width, attention.height)),
        ("motion", (motion.width, motion.height)),
    ] {
        if d != dims {
            return Err(Error::Validation(format!(
                "{name} map is {}x{}, xdog map is {}x{}",
                d.0, d.1, dims.0, dims.1
            )));
        }
    }
    let unnormalized: Vec<f64> = xdog
        .values
        .iter()
        .zip(&attention.values)
        .zip(&motion.values)
        .map(|((x, a), m)| x * ((1.0 - beta) * a + beta * m))
        .collect();
    let total: f64 = unnormalized.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Degenerate("density map is zero everywhere".into()));
    }
    Ok(DensityMap {
        width: dims.0,
        height: dims.1,
        probabilities: unnormalized.iter().map(|v| v / total).collect(),
        unnormalized,
    })
}

/// Draws pixels with replacement in proportion to the density and jitters
/// each draw uniformly inside its pixel.
pub fn sample_stroke_seeds(density: &DensityMap, n_strokes: usize, seed: u64) -> Result<Vec<Point>> {
    if n_strokes == 0 {
        return Err(Error::Validation("need at least one stroke".into()));
    }
    let dist = WeightedIndex::new(&density.probabilities)
        .map_err(|e| Error::Degenerate(format!("cannot sample density map: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_strokes)
        .map(|_| {
            let k = dist.sample(&mut rng);
            let (x, y) = ((k % density.width) as f64, (k / density.width) as f64);
            Point::new(x + rng.random::<f64>(), y + rng.random::<f64>())
        })
        .collect())
}

/// Per seed: the nearest frame-0 track, translated to start at the seed.
pub fn assign_track_targets(seeds: &[Point], tracks: &TrackSet) -> Result<Vec<Vec<Point>>> {
    seeds
        .iter()
        .map(|&s| {
            let coords = &tracks.points()[tracks.nearest_index(s, 0)?].coords;
            Ok(coords.iter().map(|c| s + (c - coords[0])).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    pub num_strokes: usize,
    pub beta: f64,
    pub trajectory_degree: usize,
    pub ridge_lambda: f64,
    pub rng_seed: u64,
    pub curve_degree: usize,
    /// Length of the initial segment each stroke is laid out on, in pixels.
    pub initial_stroke_span: f64,
}

impl InitConfig {
    /// Defaults for a clip of `num_frames` frames on a `width` x `height` canvas.
    pub fn for_clip(num_frames: usize, width: u32, height: u32) -> Self {
        Self {
            num_strokes: DEFAULT_NUM_STROKES,
            beta: DEFAULT_BETA,
            trajectory_degree: default_trajectory_degree(num_frames),
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            rng_seed: 0,
            curve_degree: DEFAULT_CURVE_DEGREE,
            initial_stroke_span: 0.05 * width.max(height) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_strokes == 0 {
            return Err(Error::Validation("need at least one stroke".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Domain(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if self.curve_degree == 0 {
            return Err(Error::Validation("curve degree must be at least 1".into()));
        }
        if !(self.initial_stroke_span.is_finite() && self.initial_stroke_span >= 0.0) {
            return Err(Error::Validation("initial stroke span must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Seeds strokes from `density`, lays each out as a short segment around its
/// seed, and ridge-fits every control point to the seed's track target.
pub fn init_animation(
    config: &InitConfig,
    density: &DensityMap,
    tracks: &TrackSet,
    widths: Vec<f64>,
) -> Result<SketchAnimation> {
    config.validate()?;
    let n_f = tracks.num_frames();
    if widths.len() != n_f {
        return Err(Error::Validation(format!(
            "{} widths for {n_f} frames",
            widths.len()
        )));
    }
    let seeds = sample_stroke_seeds(density, config.num_strokes, config.rng_seed)?;
    let targets = assign_track_targets(&seeds, tracks)?;
    let times: Vec<f64> = (0..n_f).map(|i| i as f64 / (n_f - 1).max(1) as f64).collect();
    let plan = FitPlan::new(
        BasisKind::Bernstein,
        config.trajectory_degree,
        FitMethod::Ridge(config.ridge_lambda),
        &times,
    )?;
    let m = config.curve_degree;
    let span = config.initial_stroke_span;
    let strokes = targets
        .par_iter()
        .enumerate()
        .map(|(s, target)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(1 + s as u64);
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let dir = Point::new(angle.cos(), angle.sin());
            let perp = Point::new(-dir.y, dir.x);
            let trajectories = (0..=m)
                .map(|k| {
                    let mut offset = dir * ((k as f64 / m as f64 - 0.5) * span);
                    if k > 0 && k < m && span > 0.0 {
                        offset += perp * rng.random_range(-span / 8.0..=span / 8.0);
                    }
                    let shifted: Vec<Point> = target.iter().map(|p| p + offset).collect();
                    plan.fit(&shifted)
                })
                .collect::<Result<Vec<_>>>()?;
            Stroke::new(trajectories)
        })
        .collect::<Result<Vec<_>>>()?;
    let (w, h) = (density.width as u32, density.height as u32);
    SketchAnimation::new(strokes, n_f, (w, h), widths)
}

/// Per-frame mask areas in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskAreas {
    areas: Vec<f64>,
    canvas: (u32, u32),
}

impl MaskAreas {
    pub fn new(areas: Vec<f64>, canvas: (u32, u32)) -> Result<Self> {
        let full = canvas.0 as f64 * canvas.1 as f64;
        if full <= 0.0 {
            return Err(Error::Validation("canvas must be non-empty".into()));
        }
        if let Some((i, a)) = areas
            .iter()
            .enumerate()
            .find(|(_, a)| !(0.0..=full).contains(*a))
        {
            return Err(Error::Validation(format!(
                "frame {i}: mask area {a} outside [0, {full}]"
            )));
        }
        Ok(Self { areas, canvas })
    }

    pub fn constant(area: f64, num_frames: usize, canvas: (u32, u32)) -> Result<Self> {
        Self::new(vec![area; num_frames], canvas)
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn canvas(&self) -> (u32, u32) {
        self.canvas
    }
}

/// Reads a `frame,area_pixels` CSV; frames must run 0, 1, 2, ...
pub fn load_mask_areas(path: &Path, canvas: (u32, u32)) -> Result<MaskAreas> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mask_areas(&text, &path.display().to_string(), canvas)
}

pub fn parse_mask_areas(text: &str, context: &str, canvas: (u32, u32)) -> Result<MaskAreas> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut areas = Vec::new();
    for (row, rec) in reader.deserialize::<(usize, f64)>().enumerate() {
        let (frame, area) = rec.map_err(|e| Error::parse(context, e))?;
        if frame != row {
            return Err(Error::parse(
                context,
                format!("expected frame {row}, found {frame}"),
            ));
        }
        areas.push(area);
    }
    MaskAreas::new(areas, canvas)
}

/// `width_i = w_max · sqrt(Area_i / (W·H))`.
pub fn stroke_width_schedule(mask: &MaskAreas, w_max: f64) -> Result<Vec<f64>> {
    if !(w_max.is_finite() && w_max > 0.0) {
        return Err(Error::Domain(format!("w_max must be positive, got {w_max}")));
    }
    let full = mask.canvas.0 as f64 * mask.canvas.1 as f64;
    Ok(mask.areas.iter().map(|a| w_max * (a / full).sqrt()).collect())
}

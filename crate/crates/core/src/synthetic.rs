//! Deterministic synthetic tracks with complex, non-polynomial motion.
//!
//! Each point follows a sum of three sinusoids per axis at incommensurate
//! frequencies (about 100 px peak-to-peak) plus uniform noise. Time runs at a
//! fixed rate of one unit per [`REFERENCE_FRAMES`] - 1 frames, so shorter
//! clips are prefixes of longer ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bernstein::BasisKind;
use crate::error::Result;
use crate::fitting::{FitMethod, FitPlan};
use crate::tracking::{TrackSet, TrackedPoint};
use crate::trajectory::{default_trajectory_degree, SketchAnimation, Stroke, TrajectoryPoly};
use crate::Point;

pub const REFERENCE_FRAMES: usize = 400;

/// Cycles over the reference clip, per axis.
const CYCLES_X: [f64; 3] = [2.1, 4.3, 7.7];
const CYCLES_Y: [f64; 3] = [1.68, 3.87, 8.47];
const AMP_X: [f64; 3] = [60.0, 30.0, 15.0];
const AMP_Y: [f64; 3] = [50.0, 35.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub num_points: usize,
    pub num_frames: usize,
    pub canvas: (u32, u32),
    /// Half-width of the uniform per-coordinate noise, in pixels.
    pub noise: f64,
    /// Scales every sinusoid amplitude.
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_points: 100,
            num_frames: REFERENCE_FRAMES,
            canvas: (512, 512),
            noise: 0.5,
            amplitude: 1.0,
            seed: 7,
        }
    }
}

/// One noise-free trajectory sample at frame `i`.
pub fn dance_position(center: Point, phase: f64, amplitude: f64, frame: usize) -> Point {
    let s = frame as f64 / (REFERENCE_FRAMES - 1) as f64;
    let tau = std::f64::consts::TAU;
    let mut x = center.x;
    let mut y = center.y;
    for k in 0..3 {
        let kp = (k + 1) as f64 * phase;
        x += amplitude * AMP_X[k] * (tau * CYCLES_X[k] * s + kp).sin();
        y += amplitude * AMP_Y[k] * (tau * CYCLES_Y[k] * s + kp).cos();
    }
    Point::new(x, y)
}

/// Points spread over the canvas, each with its own phase and noise stream.
pub fn dance_tracks(config: &SyntheticConfig) -> Result<TrackSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (w, h) = (config.canvas.0 as f64, config.canvas.1 as f64);
    let side = (config.num_points as f64).sqrt().ceil().max(1.0) as usize;
    let points = (0..config.num_points)
        .map(|k| {
            let gx = (k % side) as f64 + 0.5;
            let gy = (k / side) as f64 + 0.5;
            let center = Point::new(
                0.25 * w + 0.5 * w * gx / side as f64 + rng.random_range(-2.0..2.0),
                0.25 * h + 0.5 * h * gy / side as f64 + rng.random_range(-2.0..2.0),
            );
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let coords = (0..config.num_frames)
                .map(|i| {
                    let jitter = if config.noise > 0.0 {
                        Point::new(
                            rng.random_range(-config.noise..config.noise),
                            rng.random_range(-config.noise..config.noise),
                        )
                    } else {
                        Point::zeros()
                    };
                    dance_position(center, phase, config.amplitude, i) + jitter
                })
                .collect();
            TrackedPoint {
                id: k as i64,
                coords,
            }
        })
        .collect();
    TrackSet::new(config.num_frames, points)
}

/// Optimization scene with a known zero-loss optimum: every track and every
/// control point of `truth` shares one rigid polynomial motion, and
/// `targets` are the true stroke midpoints. `start` holds the strokes still
/// at their frame-0 layout.
#[derive(Debug, Clone)]
pub struct RecoveryScene {
    pub tracks: TrackSet,
    pub targets: Vec<Vec<Point>>,
    pub truth: SketchAnimation,
    pub start: SketchAnimation,
}

/// Shared cubic displacement, zero at `t = 0`.
pub fn rigid_motion(t: f64) -> Point {
    Point::new(10.0 * t + 6.0 * t * t - 6.0 * t.powi(3), 16.0 * t * (1.0 - t) + 4.0 * t.powi(3))
}

pub fn recovery_scene(seed: u64) -> Result<RecoveryScene> {
    const STROKES: usize = 4;
    const FRAMES: usize = 20;
    let canvas = (128u32, 128u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..FRAMES).map(|i| i as f64 / (FRAMES - 1) as f64).collect();

    let points = (0..49)
        .map(|k| {
            let base = Point::new(16.0 + 16.0 * (k % 7) as f64, 16.0 + 16.0 * (k / 7) as f64);
            TrackedPoint {
                id: k as i64,
                coords: times.iter().map(|&t| base + rigid_motion(t)).collect(),
            }
        })
        .collect();
    let tracks = TrackSet::new(FRAMES, points)?;

    let degree = default_trajectory_degree(FRAMES);
    let plan = FitPlan::new(BasisKind::Bernstein, degree, FitMethod::LeastSquares, &times)?;
    let mut truth_strokes = Vec::with_capacity(STROKES);
    let mut start_strokes = Vec::with_capacity(STROKES);
    for _ in 0..STROKES {
        let centre = Point::new(rng.random_range(30.0..90.0), rng.random_range(30.0..90.0));
        let mut moving = Vec::new();
        let mut still = Vec::new();
        for _ in 0..4 {
            let cp = centre + Point::new(rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0));
            let path: Vec<Point> = times.iter().map(|&t| cp + rigid_motion(t)).collect();
            moving.push(plan.fit(&path)?);
            still.push(TrajectoryPoly::constant(BasisKind::Bernstein, degree, cp));
        }
        truth_strokes.push(Stroke::new(moving)?);
        start_strokes.push(Stroke::new(still)?);
    }
    let widths = vec![2.0; FRAMES];
    let truth = SketchAnimation::new(truth_strokes, FRAMES, canvas, widths.clone())?;
    let start = SketchAnimation::new(start_strokes, FRAMES, canvas, widths)?;
    let targets = truth
        .strokes()
        .iter()
        .map(|s| times.iter().map(|&t| s.eval(0.5, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryScene {
        tracks,
        targets,
        truth,
        start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_prefix_consistent_without_noise() {
        let cfg = SyntheticConfig {
            num_points: 9,
            noise: 0.0,
            ..Default::default()
        };
        let a = dance_tracks(&cfg).unwrap();
        assert_eq!(a, dance_tracks(&cfg).unwrap());
        let short = dance_tracks(&SyntheticConfig {
            num_frames: 50,
            ..cfg
        })
        .unwrap();
        assert_eq!(short, a.truncated(50).unwrap());
    }

    #[test]
    fn motion_is_about_a_hundred_pixels() {
        let tracks = dance_tracks(&SyntheticConfig::default()).unwrap();
        for p in tracks.points() {
            let xs: Vec<f64> = p.coords.iter().map(|c| c.x).collect();
            let span = xs.iter().cloned().fold(f64::MIN, f64::max)
                - xs.iter().cloned().fold(f64::MAX, f64::min);
            assert!((60.0..=220.0).contains(&span), "span {span}");
        }
    }

    #[test]
    fn recovery_truth_has_zero_loss() {
        use crate::optimize::{total_loss, LossWeights};
        let scene = recovery_scene(1).unwrap();
        let (loss, _) = total_loss(
            &scene.truth,
            &scene.tracks,
            &scene.targets,
            LossWeights::default(),
            8,
        )
        .unwrap();
        assert!(loss.total < 1e-12, "{loss:?}");
        let (start, _) = total_loss(
            &scene.start,
            &scene.tracks,
            &scene.targets,
            LossWeights::default(),
            8,
        )
        .unwrap();
        assert!(start.total > 10.0, "{start:?}");
    }
}

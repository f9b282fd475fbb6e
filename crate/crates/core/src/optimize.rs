//! Losses with analytic gradients over every trajectory coefficient, and an
//! adaptive-moment optimizer.
//!
//! Gradients are flat vectors in [`SketchAnimation::params`] order. The
//! temporal consistency loss depends on nearest-sample assignments, which are
//! piecewise constant in the parameters; each evaluation resolves them once
//! and holds them fixed, so the loss is an exact quadratic within a call.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bernstein::BasisConfig;
use crate::error::{Error, Result};
use crate::tracking::TrackSet;
use crate::trajectory::{curve_row, SketchAnimation};
use crate::Point;

pub const DEFAULT_N_P: usize = 8;

/// Weights of the total loss `w_s·attachment + w_g·(plugins) + w_c·consistency`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Target attachment, occupying the semantic slot.
    pub w_s: f64,
    /// Reserved for externally registered loss terms.
    pub w_g: f64,
    pub w_c: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_s: 1.0,
            w_g: 0.0,
            w_c: 0.5,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.w_s, self.w_g, self.w_c];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation("loss weights must be finite and >= 0".into()));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::Validation("at least one loss weight must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub iterations: usize,
    pub step_size: f64,
    pub moment_decay_1: f64,
    pub moment_decay_2: f64,
    /// Points sampled along each stroke.
    pub n_p: usize,
    pub epsilon: f64,
    pub log_every: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            step_size: 0.1,
            moment_decay_1: 0.9,
            moment_decay_2: 0.999,
            n_p: DEFAULT_N_P,
            epsilon: 1e-8,
            log_every: 10,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Validation("iterations must be at least 1".into()));
        }
        check_n_p(self.n_p)?;
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return Err(Error::Validation("step size must be finite and >= 0".into()));
        }
        for b in [self.moment_decay_1, self.moment_decay_2] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Validation(format!("moment decay {b} outside (0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Validation("epsilon must be positive".into()));
        }
        Ok(())
    }
}

fn check_n_p(n_p: usize) -> Result<()> {
    if n_p < 2 {
        return Err(Error::Validation(format!("n_p must be at least 2, got {n_p}")));
    }
    Ok(())
}

/// A loss value with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    /// Weighted sum of every active term.
    pub total: f64,
    /// Unweighted; 0 when its weight is 0 (the term is not evaluated).
    pub consistency: f64,
    /// Unweighted; 0 when its weight is 0.
    pub attachment: f64,
    /// Unweighted plugin values by name.
    pub plugins: Vec<(String, f64)>,
}

/// One history record of an optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub loss: LossBreakdown,
}

/// An externally supplied loss term, e.g. a raster or semantic loss. Its
/// gradient must use the [`SketchAnimation::params`] layout.
pub trait LossTerm: Send + Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, anim: &SketchAnimation) -> Result<LossValue>;
}

/// Nearest tracked point (as an index into the track set) of every sampled
/// stroke point in every frame: `[stroke][k][frame]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    n_p: usize,
    indices: Vec<Vec<Vec<usize>>>,
}

impl Assignment {
    pub fn compute(anim: &SketchAnimation, tracks: &TrackSet, n_p: usize) -> Result<Self> {
        check_n_p(n_p)?;
        check_frames(anim, tracks)?;
        let geo = Geometry::new(anim, n_p)?;
        let indices = anim
            .strokes()
            .par_iter()
            .enumerate()
            .map(|(s, _)| {
                (0..n_p)
                    .map(|k| {
                        (0..anim.num_frames())
                            .map(|i| tracks.nearest_index(geo.point(anim, s, k, i), i))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_p, indices })
    }

    pub fn get(&self, stroke: usize, k: usize, frame: usize) -> usize {
        self.indices[stroke][k][frame]
    }
}

fn check_frames(anim: &SketchAnimation, tracks: &TrackSet) -> Result<()> {
    if tracks.num_frames() != anim.num_frames() {
        return Err(Error::Validation(format!(
            "tracks have {} frames, animation has {}",
            tracks.num_frames(),
            anim.num_frames()
        )));
    }
    Ok(())
}

/// Basis rows shared by every loss evaluation of one animation shape.
struct Geometry {
    /// Trajectory basis row per frame.
    frame_rows: Vec<Vec<f64>>,
    /// Curve basis rows per stroke and sample `k`.
    curve_rows: Vec<Vec<Vec<f64>>>,
    /// First parameter of each stroke.
    offsets: Vec<usize>,
}

impl Geometry {
    fn new(anim: &SketchAnimation, n_p: usize) -> Result<Self> {
        let cfg = BasisConfig::default();
        let frame_rows = (0..anim.num_frames())
            .map(|i| {
                Ok(cfg
                    .eval_row(anim.basis(), anim.trajectory_degree(), anim.frame_time(i))?
                    .values)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(anim.strokes().len());
        let mut next = 0;
        let curve_rows = anim
            .strokes()
            .iter()
            .map(|s| {
                offsets.push(next);
                next += 2 * s.trajectories().len() * (anim.trajectory_degree() + 1);
                let m = s.curve_degree();
                (0..n_p)
                    .map(|k| curve_row(m, k as f64 / (n_p - 1) as f64))
                    .collect()
            })
            .collect();
        Ok(Self {
            frame_rows,
            curve_rows,
            offsets,
        })
    }

    fn control_points(&self, anim: &SketchAnimation, s: usize, frame: usize) -> Vec<Point> {
        anim.strokes()[s].control_points_with_row(&self.frame_rows[frame])
    }

    fn point(&self, anim: &SketchAnimation, s: usize, k: usize, frame: usize) -> Point {
        combine(&self.curve_rows[s][k], &self.control_points(anim, s, frame))
    }

    /// Writes `Σ_i row_q(t_i) · g[l][i]` into the stroke's slice of `grad`.
    fn backprop_stroke(&self, s: usize, cp_grads: &[Vec<Point>], grad: &mut [f64]) {
        let n1 = self.frame_rows[0].len();
        for (l, per_frame) in cp_grads.iter().enumerate() {
            for (i, g) in per_frame.iter().enumerate() {
                if g.x == 0.0 && g.y == 0.0 {
                    continue;
                }
                for (q, &phi) in self.frame_rows[i].iter().enumerate() {
                    let idx = self.offsets[s] + 2 * (l * n1 + q);
                    grad[idx] += phi * g.x;
                    grad[idx + 1] += phi * g.y;
                }
            }
        }
    }
}

fn combine(row: &[f64], points: &[Point]) -> Point {
    row.iter()
        .zip(points)
        .fold(Point::zeros(), |acc, (&b, p)| acc + p * b)
}

/// Temporal consistency loss
/// `Σ_i Σ_j (1/N_p) Σ_k (1/N_f) Σ_t ‖T(C(i,j,u_k), i, t) − C(t,j,u_k)‖²`
/// with nearest samples resolved at the current geometry.
pub fn consistency_loss_grad(
    anim: &SketchAnimation,
    tracks: &TrackSet,
    n_p: usize,
) -> Result<LossValue> {
    let assignment = Assignment::compute(anim, tracks, n_p)?;
    consistency_loss_frozen(anim, tracks, &assignment)
}

/// Consistency loss with fixed nearest-sample assignments.
pub fn consistency_loss_frozen(
    anim: &SketchAnimation,
    tracks: &TrackSet,
    assignment: &Assignment,
) -> Result<LossValue> {
    let order: Vec<usize> = (0..anim.num_frames()).collect();
    consistency_loss_ordered(anim, tracks, assignment, &order)
}

/// As [`consistency_loss_frozen`], accumulating source frames in `order`.
pub fn consistency_loss_ordered(
    anim: &SketchAnimation,
    tracks: &TrackSet,
    assignment: &Assignment,
    order: &[usize],
) -> Result<LossValue> {
    check_frames(anim, tracks)?;
    let n_f = anim.num_frames();
    let n_p = assignment.n_p;
    if assignment.indices.len() != anim.strokes().len() {
        return Err(Error::Validation("assignment does not match the animation".into()));
    }
    let mut seen = vec![false; n_f];
    for &i in order {
        if i >= n_f || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Validation("frame order must be a permutation".into()));
        }
    }
    if order.len() != n_f {
        return Err(Error::Validation("frame order must be a permutation".into()));
    }
    let geo = Geometry::new(anim, n_p)?;
    let scale = 1.0 / (n_p * n_f) as f64;
    let points = tracks.points();

    let per_stroke: Vec<(f64, Vec<Vec<Point>>)> = anim
        .strokes()
        .par_iter()
        .enumerate()
        .map(|(s, stroke)| {
            let cps: Vec<Vec<Point>> = (0..n_f).map(|i| geo.control_points(anim, s, i)).collect();
            let mut cp_grads = vec![vec![Point::zeros(); n_f]; stroke.trajectories().len()];
            let mut value = 0.0;
            let mut g = vec![Point::zeros(); n_f];
            for k in 0..n_p {
                let row = &geo.curve_rows[s][k];
                let pts: Vec<Point> = cps.iter().map(|c| combine(row, c)).collect();
                g.iter_mut().for_each(|v| *v = Point::zeros());
                for &i in order {
                    let track = &points[assignment.get(s, k, i)].coords;
                    let anchor = pts[i] - track[i];
                    for t in 0..n_f {
                        let r = anchor + track[t] - pts[t];
                        value += r.norm_squared();
                        g[i] += r * (2.0 * scale);
                        g[t] -= r * (2.0 * scale);
                    }
                }
                for (l, &b) in row.iter().enumerate() {
                    for i in 0..n_f {
                        cp_grads[l][i] += g[i] * b;
                    }
                }
            }
            (value * scale, cp_grads)
        })
        .collect();

    let mut grad = vec![0.0; anim.num_params()];
    let mut value = 0.0;
    for (s, (v, cp_grads)) in per_stroke.iter().enumerate() {
        value += v;
        geo.backprop_stroke(s, cp_grads, &mut grad);
    }
    Ok(LossValue { value, grad })
}

/// Mean squared distance between each stroke's midpoint `C(0.5, t_i)` and its
/// target, `Σ_j Σ_i ‖·‖² / (N_f · N_s)`.
pub fn attachment_loss_grad(anim: &SketchAnimation, targets: &[Vec<Point>]) -> Result<LossValue> {
    let n_f = anim.num_frames();
    let n_s = anim.strokes().len();
    if targets.len() != n_s {
        return Err(Error::Validation(format!(
            "{} target trajectories for {n_s} strokes",
            targets.len()
        )));
    }
    if let Some(j) = targets.iter().position(|t| t.len() != n_f) {
        return Err(Error::Validation(format!(
            "target {j} has {} frames, expected {n_f}",
            targets[j].len()
        )));
    }
    let geo = Geometry::new(anim, 2)?;
    let scale = 1.0 / (n_f * n_s) as f64;
    let mut grad = vec![0.0; anim.num_params()];
    let mut value = 0.0;
    for (s, stroke) in anim.strokes().iter().enumerate() {
        let mid = curve_row(stroke.curve_degree(), 0.5);
        let mut cp_grads = vec![vec![Point::zeros(); n_f]; mid.len()];
        for i in 0..n_f {
            let r = combine(&mid, &geo.control_points(anim, s, i)) - targets[s][i];
            value += r.norm_squared() * scale;
            for (l, &b) in mid.iter().enumerate() {
                cp_grads[l][i] = r * (2.0 * scale * b);
            }
        }
        geo.backprop_stroke(s, &cp_grads, &mut grad);
    }
    Ok(LossValue { value, grad })
}

/// The weighted total loss and any registered plugin terms.
pub struct Objective<'a> {
    tracks: &'a TrackSet,
    targets: &'a [Vec<Point>],
    weights: LossWeights,
    n_p: usize,
    plugins: Vec<Box<dyn LossTerm + 'a>>,
}

impl<'a> Objective<'a> {
    pub fn new(
        tracks: &'a TrackSet,
        targets: &'a [Vec<Point>],
        weights: LossWeights,
        n_p: usize,
    ) -> Result<Self> {
        weights.validate()?;
        check_n_p(n_p)?;
        Ok(Self {
            tracks,
            targets,
            weights,
            n_p,
            plugins: Vec::new(),
        })
    }

    /// Adds a term weighted by `w_g`.
    pub fn register(&mut self, term: Box<dyn LossTerm + 'a>) {
        self.plugins.push(term);
    }

    pub fn weights(&self) -> LossWeights {
        self.weights
    }

    pub fn assignment(&self, anim: &SketchAnimation) -> Result<Option<Assignment>> {
        if self.weights.w_c == 0.0 {
            return Ok(None);
        }
        Assignment::compute(anim, self.tracks, self.n_p).map(Some)
    }

    /// Value and gradient with nearest samples resolved at `anim`.
    pub fn evaluate(&self, anim: &SketchAnimation) -> Result<(LossBreakdown, Vec<f64>)> {
        let assignment = self.assignment(anim)?;
        self.evaluate_frozen(anim, assignment.as_ref())
    }

    /// Value and gradient with given assignments (required when `w_c > 0`).
    pub fn evaluate_frozen(
        &self,
        anim: &SketchAnimation,
        assignment: Option<&Assignment>,
    ) -> Result<(LossBreakdown, Vec<f64>)> {
        let w = self.weights;
        let mut grad = vec![0.0; anim.num_params()];
        let mut out = LossBreakdown {
            total: 0.0,
            consistency: 0.0,
            attachment: 0.0,
            plugins: Vec::new(),
        };
        let add = |weight: f64, term: &LossValue, grad: &mut Vec<f64>| -> Result<()> {
            if term.grad.len() != grad.len() {
                return Err(Error::Validation(format!(
                    "loss term gradient has {} entries, expected {}",
                    term.grad.len(),
                    grad.len()
                )));
            }
            for (g, t) in grad.iter_mut().zip(&term.grad) {
                *g += weight * t;
            }
            Ok(())
        };
        if w.w_s > 0.0 {
            let a = attachment_loss_grad(anim, self.targets)?;
            add(w.w_s, &a, &mut grad)?;
            out.attachment = a.value;
        }
        if w.w_c > 0.0 {
            let assignment = assignment
                .ok_or_else(|| Error::Validation("consistency needs an assignment".into()))?;
            let c = consistency_loss_frozen(anim, self.tracks, assignment)?;
            add(w.w_c, &c, &mut grad)?;
            out.consistency = c.value;
        }
        if w.w_g > 0.0 {
            for term in &self.plugins {
                let v = term.evaluate(anim)?;
                add(w.w_g, &v, &mut grad)?;
                out.plugins.push((term.name().to_string(), v.value));
            }
        }
        out.total = w.w_s * out.attachment
            + w.w_c * out.consistency
            + w.w_g * out.plugins.iter().map(|p| p.1).sum::<f64>();
        Ok((out, grad))
    }
}

/// Weighted total of attachment and consistency with its gradient.
pub fn total_loss(
    anim: &SketchAnimation,
    tracks: &TrackSet,
    targets: &[Vec<Point>],
    weights: LossWeights,
    n_p: usize,
) -> Result<(LossBreakdown, Vec<f64>)> {
    Objective::new(tracks, targets, weights, n_p)?.evaluate(anim)
}

/// Adaptive-moment descent on every coefficient. Assignments are refreshed
/// once per iteration. Returns the final animation and the loss history
/// (every `log_every` iterations plus the final state).
pub fn optimize_animation(
    anim: &SketchAnimation,
    objective: &Objective<'_>,
    config: &OptimConfig,
) -> Result<(SketchAnimation, Vec<LogEntry>)> {
    config.validate()?;
    let mut current = anim.clone();
    let mut params = current.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let (b1, b2) = (config.moment_decay_1, config.moment_decay_2);
    let log_every = config.log_every.max(1);
    let mut history = Vec::new();
    for it in 0..config.iterations {
        let (loss, grad) = objective.evaluate(&current)?;
        check_finite(it, &loss, &grad)?;
        if it % log_every == 0 {
            log::info!(
                "iteration {it}: total {:.6e} consistency {:.6e} attachment {:.6e}",
                loss.total,
                loss.consistency,
                loss.attachment
            );
            history.push(LogEntry {
                iteration: it,
                loss,
            });
        }
        if config.step_size == 0.0 {
            continue;
        }
        let k = (it + 1) as i32;
        let (c1, c2) = (1.0 - b1.powi(k), 1.0 - b2.powi(k));
        for ((p, g), (mi, vi)) in params.iter_mut().zip(&grad).zip(m.iter_mut().zip(v.iter_mut())) {
            *mi = b1 * *mi + (1.0 - b1) * g;
            *vi = b2 * *vi + (1.0 - b2) * g * g;
            *p -= config.step_size * (*mi / c1) / ((*vi / c2).sqrt() + config.epsilon);
        }
        current.set_params(&params).map_err(|e| Error::Divergence {
            iteration: it,
            reason: e.to_string(),
        })?;
    }
    let (loss, grad) = objective.evaluate(&current)?;
    check_finite(config.iterations, &loss, &grad)?;
    history.push(LogEntry {
        iteration: config.iterations,
        loss,
    });
    Ok((current, history))
}

fn check_finite(iteration: usize, loss: &LossBreakdown, grad: &[f64]) -> Result<()> {
    if !loss.total.is_finite() {
        return Err(Error::Divergence {
            iteration,
            reason: format!("loss is {}", loss.total),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence {
            iteration,
            reason: "gradient has non-finite entries".into(),
        });
    }
    Ok(())
}

/// History as CSV: `iteration,total,consistency,attachment`.
pub fn history_csv(history: &[LogEntry]) -> String {
    let mut out = String::from("iteration,total,consistency,attachment\n");
    for e in history {
        let _ = writeln!(
            out,
            "{},{:.9e},{:.9e},{:.9e}",
            e.iteration, e.loss.total, e.loss.consistency, e.loss.attachment
        );
    }
    out
}

pub fn save_history(history: &[LogEntry], path: &Path) -> Result<()> {
    std::fs::write(path, history_csv(history)).map_err(|e| Error::io(path, e))
}

/// Coordinates checked exhaustively up to this many parameters.
const FULL_CHECK_LIMIT: usize = 2000;

/// Worst disagreement between the analytic gradient and central differences
/// of step `step`, relative to the largest gradient entry. Assignments are
/// frozen at `anim`. Large problems check a fixed random 5% of coordinates.
/// Returns 0 when both gradients vanish. Near a stationary point the ratio
/// measures difference noise rather than gradient error.
pub fn finite_difference_check(
    anim: &SketchAnimation,
    objective: &Objective<'_>,
    step: f64,
) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let assignment = objective.assignment(anim)?;
    let (_, analytic) = objective.evaluate_frozen(anim, assignment.as_ref())?;
    let params = anim.params();
    let n = params.len();
    let coords: Vec<usize> = if n <= FULL_CHECK_LIMIT {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut idx = sample(&mut rng, n, (n / 20).max(1)).into_vec();
        idx.sort_unstable();
        idx
    };
    let value_at = |p: &[f64]| -> Result<f64> {
        let probe = anim.with_params(p)?;
        Ok(objective.evaluate_frozen(&probe, assignment.as_ref())?.0.total)
    };
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut probe = params.clone();
    for &c in &coords {
        probe[c] = params[c] + step;
        let up = value_at(&probe)?;
        probe[c] = params[c] - step;
        let down = value_at(&probe)?;
        probe[c] = params[c];
        let fd = (up - down) / (2.0 * step);
        worst = worst.max((fd - analytic[c]).abs());
        scale = scale.max(fd.abs()).max(analytic[c].abs());
    }
    Ok(if scale == 0.0 { 0.0 } else { worst / scale })
}

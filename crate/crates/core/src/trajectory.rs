//! Time-varying control points and the Bézier strokes built from them.
//!
//! A control point moves along `P(t) = Σ_i φ_i(t) c_i` where `φ` is either the
//! Bernstein or the power basis of degree `n`. A stroke is a degree-`m` Bézier
//! curve whose `m + 1` control points each follow such a trajectory, so a
//! point on the stroke is `C(u, t) = Σ_k B_{m,k}(u) P_k(t)`.

use crate::bernstein::{check_unit, BasisConfig, BasisKind};
use crate::error::{Error, Result};
use crate::Point;

/// Default Bézier degree of a stroke.
pub const DEFAULT_CURVE_DEGREE: usize = 3;

/// Trajectory degree paired with a frame count: `ceil(N_f / 2) - 1`.
pub fn default_trajectory_degree(num_frames: usize) -> usize {
    num_frames.div_ceil(2).saturating_sub(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoly {
    basis: BasisKind,
    coeffs: Vec<Point>,
}

impl TrajectoryPoly {
    pub fn new(basis: BasisKind, coeffs: Vec<Point>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Validation("trajectory needs at least one coefficient".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !(c.x.is_finite() && c.y.is_finite())) {
            return Err(Error::Validation(format!("coefficient {i} is not finite")));
        }
        Ok(Self { basis, coeffs })
    }

    /// A trajectory that stays at `p`. In the Bernstein basis every coefficient
    /// equals `p`; in the power basis only the constant term is set.
    pub fn constant(basis: BasisKind, degree: usize, p: Point) -> Self {
        let coeffs = match basis {
            BasisKind::Bernstein => vec![p; degree + 1],
            BasisKind::Power => {
                let mut c = vec![Point::zeros(); degree + 1];
                c[0] = p;
                c
            }
        };
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Point] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Point] {
        &mut self.coeffs
    }

    /// Position at normalized time `t`.
    pub fn eval(&self, t: f64) -> Result<Point> {
        let row = self.jacobian_row(t)?;
        Ok(self.eval_with_row(&row))
    }

    /// Position from a precomputed basis row of matching degree.
    pub fn eval_with_row(&self, row: &[f64]) -> Point {
        debug_assert_eq!(row.len(), self.coeffs.len());
        row.iter()
            .zip(&self.coeffs)
            .fold(Point::zeros(), |acc, (&b, c)| acc + c * b)
    }

    /// Derivative of the position with respect to each coefficient (per
    /// coordinate). Evaluation is linear in the coefficients, so this is the
    /// basis row itself, built on the same path that [`eval`](Self::eval) uses.
    pub fn jacobian_row(&self, t: f64) -> Result<Vec<f64>> {
        Ok(BasisConfig::default()
            .eval_row(self.basis, self.degree(), t)?
            .values)
    }

    /// `a * self + b * other`; both must share basis and degree.
    pub fn combine(&self, a: f64, other: &TrajectoryPoly, b: f64) -> Result<Self> {
        if self.basis != other.basis || self.degree() != other.degree() {
            return Err(Error::Validation(
                "linear combination needs matching basis and degree".into(),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(p, q)| p * a + q * b)
            .collect();
        TrajectoryPoly::new(self.basis, coeffs)
    }
}

/// L1 norm of `∂P(t)/∂c` summed over coefficients: `Σ t^i` for the power
/// basis, identically one for Bernstein (partition of unity).
pub fn sensitivity_l1(kind: BasisKind, n: usize, t: f64) -> Result<f64> {
    check_unit("t", t)?;
    match kind {
        BasisKind::Bernstein => Ok(1.0),
        BasisKind::Power => {
            let row = BasisConfig::default().eval_row(kind, n, t)?;
            Ok(row.values.iter().map(|v| v.abs()).sum())
        }
    }
}

/// Bézier curve of degree `m` whose control points move over time.
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    trajectories: Vec<TrajectoryPoly>,
}

impl Stroke {
    pub fn new(trajectories: Vec<TrajectoryPoly>) -> Result<Self> {
        if trajectories.len() < 2 {
            return Err(Error::Validation(format!(
                "a stroke needs at least 2 control trajectories, got {}",
                trajectories.len()
            )));
        }
        let (basis, degree) = (trajectories[0].basis(), trajectories[0].degree());
        if trajectories
            .iter()
            .any(|tr| tr.basis() != basis || tr.degree() != degree)
        {
            return Err(Error::Validation(
                "control trajectories of a stroke must share basis and degree".into(),
            ));
        }
        Ok(Self { trajectories })
    }

    pub fn curve_degree(&self) -> usize {
        self.trajectories.len() - 1
    }

    pub fn trajectory_degree(&self) -> usize {
        self.trajectories[0].degree()
    }

    pub fn basis(&self) -> BasisKind {
        self.trajectories[0].basis()
    }

    pub fn trajectories(&self) -> &[TrajectoryPoly] {
        &self.trajectories
    }

    pub(crate) fn trajectories_mut(&mut self) -> &mut [TrajectoryPoly] {
        &mut self.trajectories
    }

    /// Bézier control points at time `t`.
    pub fn control_points(&self, t: f64) -> Result<Vec<Point>> {
        let row = self.trajectories[0].jacobian_row(t)?;
        Ok(self.control_points_with_row(&row))
    }

    pub(crate) fn control_points_with_row(&self, row: &[f64]) -> Vec<Point> {
        self.trajectories
            .iter()
            .map(|tr| tr.eval_with_row(row))
            .collect()
    }

    /// `C(u, t)`.
    pub fn eval(&self, u: f64, t: f64) -> Result<Point> {
        check_unit("u", u)?;
        let cps = self.control_points(t)?;
        Ok(bezier_point(&cps, u))
    }

    /// `n_p` points at `u = k / (n_p - 1)`.
    pub fn sample(&self, t: f64, n_p: usize) -> Result<Vec<Point>> {
        if n_p < 2 {
            return Err(Error::Domain(format!("need at least 2 samples per stroke, got {n_p}")));
        }
        let cps = self.control_points(t)?;
        Ok((0..n_p)
            .map(|k| bezier_point(&cps, k as f64 / (n_p - 1) as f64))
            .collect())
    }
}

/// Point on a Bézier curve; `u` must already be in `[0, 1]`.
pub fn bezier_point(control_points: &[Point], u: f64) -> Point {
    let row = curve_row(control_points.len() - 1, u);
    row.iter()
        .zip(control_points)
        .fold(Point::zeros(), |acc, (&b, p)| acc + p * b)
}

/// Bernstein row of the curve parameter.
pub(crate) fn curve_row(m: usize, u: f64) -> Vec<f64> {
    BasisConfig::default()
        .eval_row(BasisKind::Bernstein, m, u)
        .expect("curve parameter and degree validated by caller")
        .values
}

/// A whole sketch: strokes, canvas, frame count, and per-frame widths.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchAnimation {
    strokes: Vec<Stroke>,
    num_frames: usize,
    canvas: (u32, u32),
    widths: Vec<f64>,
}

impl SketchAnimation {
    pub fn new(
        strokes: Vec<Stroke>,
        num_frames: usize,
        canvas: (u32, u32),
        widths: Vec<f64>,
    ) -> Result<Self> {
        if strokes.is_empty() {
            return Err(Error::Validation("animation has no strokes".into()));
        }
        if num_frames < 2 {
            return Err(Error::Validation(format!("need at least 2 frames, got {num_frames}")));
        }
        if widths.len() != num_frames {
            return Err(Error::Validation(format!(
                "{} widths for {num_frames} frames",
                widths.len()
            )));
        }
        if widths.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation("stroke widths must be finite and >= 0".into()));
        }
        let (basis, degree) = (strokes[0].basis(), strokes[0].trajectory_degree());
        if strokes
            .iter()
            .any(|s| s.basis() != basis || s.trajectory_degree() != degree)
        {
            return Err(Error::Validation(
                "all strokes must share trajectory basis and degree".into(),
            ));
        }
        Ok(Self {
            strokes,
            num_frames,
            canvas,
            widths,
        })
    }

    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn canvas(&self) -> (u32, u32) {
        self.canvas
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn basis(&self) -> BasisKind {
        self.strokes[0].basis()
    }

    pub fn trajectory_degree(&self) -> usize {
        self.strokes[0].trajectory_degree()
    }

    /// Normalized time of frame `i`.
    pub fn frame_time(&self, i: usize) -> f64 {
        i as f64 / (self.num_frames - 1) as f64
    }

    /// Stroke width at time `t`, linearly interpolated between frames.
    pub fn width_at(&self, t: f64) -> f64 {
        let x = t.clamp(0.0, 1.0) * (self.num_frames - 1) as f64;
        let lo = (x.floor() as usize).min(self.num_frames - 2);
        let f = x - lo as f64;
        self.widths[lo] * (1.0 - f) + self.widths[lo + 1] * f
    }

    /// Number of scalar parameters (two per coefficient).
    pub fn num_params(&self) -> usize {
        self.strokes
            .iter()
            .map(|s| 2 * s.trajectories().len() * (s.trajectory_degree() + 1))
            .sum()
    }

    /// All coefficients flattened stroke-major, then control point, then
    /// coefficient, then coordinate.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for stroke in &self.strokes {
            for tr in stroke.trajectories() {
                for c in tr.coeffs() {
                    out.push(c.x);
                    out.push(c.y);
                }
            }
        }
        out
    }

    /// Overwrites all coefficients from the layout produced by [`params`](Self::params).
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Validation(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation("parameters must be finite".into()));
        }
        let mut it = params.chunks_exact(2);
        for stroke in &mut self.strokes {
            for tr in stroke.trajectories_mut() {
                for c in tr.coeffs_mut() {
                    let xy = it.next().expect("length checked");
                    *c = Point::new(xy[0], xy[1]);
                }
            }
        }
        Ok(())
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.set_params(params)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn square_stroke() -> Stroke {
        let corners = [p(0.0, 0.0), p(0.0, 10.0), p(10.0, 10.0), p(10.0, 0.0)];
        Stroke::new(
            corners
                .iter()
                .map(|&c| TrajectoryPoly::constant(BasisKind::Bernstein, 4, c))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_coefficients_give_constant_trajectory() {
        for n in [0, 3, 61, 199] {
            let tr = TrajectoryPoly::constant(BasisKind::Bernstein, n, p(5.0, 7.0));
            for t in [0.0, 0.13, 0.5, 0.99, 1.0] {
                let v = tr.eval(t).unwrap();
                assert!((v - p(5.0, 7.0)).norm() < 1e-9, "n={n} t={t} -> {v:?}");
            }
        }
    }

    #[test]
    fn linear_bernstein_interpolates() {
        let tr = TrajectoryPoly::new(BasisKind::Bernstein, vec![p(0.0, 0.0), p(10.0, 0.0)]).unwrap();
        assert_eq!(tr.eval(0.25).unwrap(), p(2.5, 0.0));
    }

    #[test]
    fn power_basis_direct_sum() {
        let tr = TrajectoryPoly::new(
            BasisKind::Power,
            vec![p(1.0, 0.0), p(2.0, 0.0), p(3.0, 0.0)],
        )
        .unwrap();
        assert_eq!(tr.eval(0.5).unwrap(), p(2.75, 0.0));
    }

    #[test]
    fn out_of_range_time_is_domain_error() {
        let tr = TrajectoryPoly::constant(BasisKind::Power, 2, p(1.0, 1.0));
        assert!(matches!(tr.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(square_stroke().eval(1.1, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_non_finite_coefficients() {
        assert!(TrajectoryPoly::new(BasisKind::Power, vec![p(f64::NAN, 0.0)]).is_err());
        assert!(TrajectoryPoly::new(BasisKind::Power, vec![]).is_err());
    }

    #[test]
    fn endpoints_follow_first_and_last_trajectory() {
        let a = TrajectoryPoly::new(BasisKind::Bernstein, vec![p(0.0, 0.0), p(4.0, 8.0)]).unwrap();
        let b = TrajectoryPoly::new(BasisKind::Bernstein, vec![p(3.0, 1.0), p(3.0, 5.0)]).unwrap();
        let c = TrajectoryPoly::new(BasisKind::Bernstein, vec![p(9.0, 9.0), p(-1.0, 2.0)]).unwrap();
        let stroke = Stroke::new(vec![a.clone(), b, c.clone()]).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(stroke.eval(0.0, t).unwrap(), a.eval(t).unwrap());
            assert_eq!(stroke.eval(1.0, t).unwrap(), c.eval(t).unwrap());
        }
    }

    #[test]
    fn square_midpoint_by_hand() {
        // de Casteljau at u = 1/2 on (0,0) (0,10) (10,10) (10,0):
        // (0,5) (5,10) (10,5) -> (2.5,7.5) (7.5,7.5) -> (5,7.5)
        let stroke = square_stroke();
        for t in [0.0, 0.42, 1.0] {
            let v = stroke.eval(0.5, t).unwrap();
            assert!((v - p(5.0, 7.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn sampling() {
        let stroke = square_stroke();
        let pts = stroke.sample(0.3, 2).unwrap();
        assert!((pts[0] - p(0.0, 0.0)).norm() < 1e-12);
        assert!((pts[1] - p(10.0, 0.0)).norm() < 1e-12);
        let pts = stroke.sample(0.3, 5).unwrap();
        for (k, q) in pts.iter().enumerate() {
            let direct = stroke.eval(k as f64 / 4.0, 0.3).unwrap();
            assert!((q - direct).norm() < 1e-12);
        }
        assert!(matches!(stroke.sample(0.3, 1), Err(Error::Domain(_))));

        let line = Stroke::new(vec![
            TrajectoryPoly::constant(BasisKind::Bernstein, 1, p(0.0, 0.0)),
            TrajectoryPoly::constant(BasisKind::Bernstein, 1, p(8.0, 4.0)),
        ])
        .unwrap();
        let pts = line.sample(1.0, 3).unwrap();
        assert!((pts[1] - p(4.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn sensitivity_values() {
        assert_eq!(sensitivity_l1(BasisKind::Power, 17, 0.0).unwrap(), 1.0);
        assert_eq!(sensitivity_l1(BasisKind::Power, 9, 1.0).unwrap(), 10.0);
        assert_eq!(sensitivity_l1(BasisKind::Bernstein, 199, 0.7).unwrap(), 1.0);
        assert!(sensitivity_l1(BasisKind::Bernstein, 3, 2.0).is_err());
    }

    #[test]
    fn jacobian_rows() {
        let tr = TrajectoryPoly::constant(BasisKind::Bernstein, 2, p(1.0, 1.0));
        assert_eq!(tr.jacobian_row(0.5).unwrap(), vec![0.25, 0.5, 0.25]);
        let tr = TrajectoryPoly::constant(BasisKind::Power, 3, p(1.0, 1.0));
        assert_eq!(tr.jacobian_row(1.0).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn stroke_validation() {
        let a = TrajectoryPoly::constant(BasisKind::Bernstein, 2, p(0.0, 0.0));
        let b = TrajectoryPoly::constant(BasisKind::Bernstein, 3, p(0.0, 0.0));
        let c = TrajectoryPoly::constant(BasisKind::Power, 2, p(0.0, 0.0));
        assert!(Stroke::new(vec![a.clone()]).is_err());
        assert!(Stroke::new(vec![a.clone(), b]).is_err());
        assert!(Stroke::new(vec![a, c]).is_err());
    }

    #[test]
    fn animation_validation_and_params() {
        let s = square_stroke();
        assert!(SketchAnimation::new(vec![], 3, (10, 10), vec![1.0; 3]).is_err());
        assert!(SketchAnimation::new(vec![s.clone()], 1, (10, 10), vec![1.0]).is_err());
        assert!(SketchAnimation::new(vec![s.clone()], 3, (10, 10), vec![1.0; 2]).is_err());
        assert!(SketchAnimation::new(vec![s.clone()], 3, (10, 10), vec![1.0, -1.0, 1.0]).is_err());

        let anim = SketchAnimation::new(vec![s.clone(), s], 3, (10, 10), vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(anim.num_params(), 2 * 4 * 5 * 2);
        let params = anim.params();
        let back = anim.with_params(&params).unwrap();
        assert_eq!(back, anim);
        assert_eq!(anim.frame_time(1), 0.5);
        assert_eq!(anim.width_at(0.25), 3.0);
        assert_eq!(anim.width_at(1.0), 6.0);
    }

    #[test]
    fn default_degree_pairs() {
        let pairs: Vec<_> = [50, 100, 200, 400]
            .iter()
            .map(|&f| default_trajectory_degree(f))
            .collect();
        assert_eq!(pairs, vec![24, 49, 99, 199]);
    }
}

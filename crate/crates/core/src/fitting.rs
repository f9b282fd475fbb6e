//! Fitting polynomial trajectories to per-frame positions.
//!
//! All three methods are linear in the data, so a [`FitPlan`] factors the
//! system once per (times, basis, degree, method) and the benchmark reuses it
//! for every track. Interpolation keeps an LU of the square collocation
//! system; least squares and ridge store the operator `S` with
//! `coeffs = S · positions`.

use nalgebra::{DMatrix, Dyn, LU};

use crate::bernstein::{BasisConfig, BasisKind};
use crate::error::{Error, Result};
use crate::trajectory::TrajectoryPoly;
use crate::Point;

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMethod {
    /// Exact interpolation through `n + 1` frames picked uniformly by index.
    Interpolation,
    LeastSquares,
    Ridge(f64),
}

impl FitMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FitMethod::Interpolation => "interpolation",
            FitMethod::LeastSquares => "least_squares",
            FitMethod::Ridge(_) => "ridge",
        }
    }
}

/// Positions sampled at normalized frame times.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSamples {
    times: Vec<f64>,
    positions: Vec<Point>,
}

impl FitSamples {
    pub fn new(times: Vec<f64>, positions: Vec<Point>) -> Result<Self> {
        if times.len() != positions.len() {
            return Err(Error::Validation(format!(
                "{} times for {} positions",
                times.len(),
                positions.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::Validation("need at least two samples".into()));
        }
        if times[0] != 0.0 || *times.last().unwrap() != 1.0 {
            return Err(Error::Validation("sample times must start at 0 and end at 1".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation("sample times must be strictly increasing".into()));
        }
        if positions.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::Validation("sample positions must be finite".into()));
        }
        Ok(Self { times, positions })
    }

    /// One sample per frame at `t_i = i / (N_f - 1)`.
    pub fn from_frames(positions: Vec<Point>) -> Result<Self> {
        let n = positions.len();
        if n < 2 {
            return Err(Error::Validation("need at least two samples".into()));
        }
        let times = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Self::new(times, positions)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    /// Mean Euclidean error over all frames, in pixels.
    pub mae: f64,
    /// Mean of `|c|` over every coefficient component.
    pub avg_abs_coeff: f64,
    pub max_abs_error: f64,
    /// Frobenius-norm condition estimate of the system that was solved.
    pub condition_estimate: f64,
}

/// A factored fitting problem for fixed times, basis, degree and method.
#[derive(Debug, Clone)]
pub struct FitPlan {
    basis: BasisKind,
    degree: usize,
    method: FitMethod,
    times: Vec<f64>,
    design: DMatrix<f64>,
    solver: Solver,
    condition: f64,
}

#[derive(Debug, Clone)]
enum Solver {
    /// LU of the square system at the selected frames.
    Collocation { lu: LU<f64, Dyn, Dyn>, rows: Vec<usize> },
    /// Explicit linear operator from positions to coefficients.
    Operator(DMatrix<f64>),
}

/// `‖A‖_F · ‖A⁺‖_F` from a matrix and its (pseudo-)inverse. Within a factor
/// of the column count of the 2-norm condition number, and still meaningful
/// where an SVD would flush the smallest singular values to zero.
fn frobenius_condition(matrix: &DMatrix<f64>, inverse: &DMatrix<f64>) -> f64 {
    let c = matrix.norm() * inverse.norm();
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

/// `R⁻¹ Qᵀ` from a Householder QR; `None` when `R` has a zero pivot.
fn qr_pseudo_inverse(matrix: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let qr = matrix.clone().qr();
    let r = qr.r();
    if r.diagonal().iter().any(|d| *d == 0.0) {
        return None;
    }
    let pinv = r.solve_upper_triangular(&qr.q().transpose())?;
    pinv.iter().all(|v| v.is_finite()).then_some(pinv)
}

/// Frame indices `round(k (N_f - 1) / n)`, `k = 0..=n`.
pub fn interpolation_indices(num_samples: usize, degree: usize) -> Vec<usize> {
    if degree == 0 {
        return vec![0];
    }
    (0..=degree)
        .map(|k| ((k * (num_samples - 1)) as f64 / degree as f64).round() as usize)
        .collect()
}

/// Rows of basis values at each time.
pub fn design_matrix(basis: BasisKind, degree: usize, times: &[f64]) -> Result<DMatrix<f64>> {
    let cfg = BasisConfig::default();
    let mut out = DMatrix::zeros(times.len(), degree + 1);
    for (r, &t) in times.iter().enumerate() {
        let row = cfg.eval_row(basis, degree, t)?;
        for (c, v) in row.values.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

impl FitPlan {
    pub fn new(basis: BasisKind, degree: usize, method: FitMethod, times: &[f64]) -> Result<Self> {
        let n_f = times.len();
        let cols = degree + 1;
        match method {
            FitMethod::Interpolation | FitMethod::LeastSquares if n_f < cols => {
                return Err(Error::Validation(format!(
                    "{} needs at least {cols} frames for degree {degree}, got {n_f}",
                    method.name()
                )));
            }
            FitMethod::Ridge(lambda) if !(lambda.is_finite() && lambda >= 0.0) => {
                return Err(Error::Domain(format!("ridge lambda must be >= 0, got {lambda}")));
            }
            _ => {}
        }
        let design = design_matrix(basis, degree, times)?;
        let (solver, condition) = match method {
            FitMethod::Interpolation => interpolation_solver(&design, degree)?,
            FitMethod::LeastSquares => {
                let (op, cond) = least_squares_operator(&design, degree)?;
                (Solver::Operator(op), cond)
            }
            FitMethod::Ridge(lambda) => {
                let (op, cond) = ridge_operator(&design, lambda)?;
                (Solver::Operator(op), cond)
            }
        };
        Ok(Self {
            basis,
            degree,
            method,
            times: times.to_vec(),
            design,
            solver,
            condition,
        })
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn method(&self) -> FitMethod {
        self.method
    }

    /// Fits one track; `positions` must match the plan's times.
    pub fn fit(&self, positions: &[Point]) -> Result<TrajectoryPoly> {
        if positions.len() != self.times.len() {
            return Err(Error::Validation(format!(
                "plan built for {} frames, got {}",
                self.times.len(),
                positions.len()
            )));
        }
        let coeffs = match &self.solver {
            Solver::Collocation { lu, rows } => {
                let rhs = DMatrix::from_fn(rows.len(), 2, |r, c| positions[rows[r]][c]);
                lu.solve(&rhs).ok_or_else(|| Error::Conditioning {
                    condition: self.condition,
                    context: "singular interpolation system".into(),
                })?
            }
            Solver::Operator(op) => {
                op * DMatrix::from_fn(positions.len(), 2, |r, c| positions[r][c])
            }
        };
        let coeffs: Vec<Point> = (0..=self.degree)
            .map(|r| Point::new(coeffs[(r, 0)], coeffs[(r, 1)]))
            .collect();
        TrajectoryPoly::new(self.basis, coeffs).map_err(|_| Error::Conditioning {
            condition: self.condition,
            context: format!("{} fit produced non-finite coefficients", self.method.name()),
        })
    }

    /// Metrics for a trajectory fitted by this plan.
    pub fn report(&self, traj: &TrajectoryPoly, positions: &[Point]) -> FitReport {
        let mut report = metrics(&self.design, traj, positions);
        report.condition_estimate = self.condition;
        report
    }
}

fn interpolation_solver(design: &DMatrix<f64>, degree: usize) -> Result<(Solver, f64)> {
    let rows = interpolation_indices(design.nrows(), degree);
    let square = design.select_rows(rows.iter());
    let lu = square.clone().lu();
    let inverse = lu.try_inverse().ok_or_else(|| Error::Conditioning {
        condition: f64::INFINITY,
        context: "singular interpolation system".into(),
    })?;
    let condition = frobenius_condition(&square, &inverse);
    Ok((Solver::Collocation { lu, rows }, condition))
}

fn least_squares_operator(design: &DMatrix<f64>, degree: usize) -> Result<(DMatrix<f64>, f64)> {
    let pinv = qr_pseudo_inverse(design).ok_or_else(|| Error::Conditioning {
        condition: f64::INFINITY,
        context: format!("rank-deficient least-squares design at degree {degree}"),
    })?;
    let condition = frobenius_condition(design, &pinv);
    Ok((pinv, condition))
}

fn ridge_operator(design: &DMatrix<f64>, lambda: f64) -> Result<(DMatrix<f64>, f64)> {
    let (rows, cols) = design.shape();
    // [A; sqrt(λ) I] c ≈ [b; 0]
    let mut augmented = DMatrix::zeros(rows + cols, cols);
    augmented.rows_mut(0, rows).copy_from(design);
    for i in 0..cols {
        augmented[(rows + i, i)] = lambda.sqrt();
    }
    let pinv = qr_pseudo_inverse(&augmented).ok_or_else(|| Error::Conditioning {
        condition: f64::INFINITY,
        context: "rank-deficient ridge system (lambda = 0)".into(),
    })?;
    let condition = frobenius_condition(&augmented, &pinv);
    // the zero block of the right-hand side drops the last `cols` columns
    Ok((pinv.columns(0, rows).into_owned(), condition))
}

fn metrics(design: &DMatrix<f64>, traj: &TrajectoryPoly, positions: &[Point]) -> FitReport {
    let coeffs = DMatrix::from_fn(traj.degree() + 1, 2, |r, c| traj.coeffs()[r][c]);
    let fitted = design * coeffs;
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (r, p) in positions.iter().enumerate() {
        let e = (Point::new(fitted[(r, 0)], fitted[(r, 1)]) - p).norm();
        sum += e;
        max = max.max(e);
    }
    let avg_abs_coeff = traj
        .coeffs()
        .iter()
        .map(|c| c.x.abs() + c.y.abs())
        .sum::<f64>()
        / (2 * traj.coeffs().len()) as f64;
    FitReport {
        mae: sum / positions.len() as f64,
        avg_abs_coeff,
        max_abs_error: max,
        condition_estimate: 0.0,
    }
}

/// Fits with any method in the given basis.
pub fn fit(
    samples: &FitSamples,
    basis: BasisKind,
    degree: usize,
    method: FitMethod,
) -> Result<TrajectoryPoly> {
    FitPlan::new(basis, degree, method, samples.times())?.fit(samples.positions())
}

pub fn fit_interpolation(samples: &FitSamples, degree: usize) -> Result<TrajectoryPoly> {
    fit(samples, BasisKind::Bernstein, degree, FitMethod::Interpolation)
}

pub fn fit_least_squares(samples: &FitSamples, degree: usize) -> Result<TrajectoryPoly> {
    fit(samples, BasisKind::Bernstein, degree, FitMethod::LeastSquares)
}

pub fn fit_ridge(samples: &FitSamples, degree: usize, lambda: f64) -> Result<TrajectoryPoly> {
    fit(samples, BasisKind::Bernstein, degree, FitMethod::Ridge(lambda))
}

/// Metrics of `traj` against `samples`. The condition estimate is that of
/// the least-squares design for the trajectory's basis and degree (only
/// defined when there are at least as many samples as coefficients).
pub fn evaluate_fit(traj: &TrajectoryPoly, samples: &FitSamples) -> Result<FitReport> {
    let design = design_matrix(traj.basis(), traj.degree(), samples.times())?;
    let mut report = metrics(&design, traj, samples.positions());
    report.condition_estimate = qr_pseudo_inverse(&design)
        .map(|pinv| frobenius_condition(&design, &pinv))
        .unwrap_or(f64::INFINITY);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn from_traj(traj: &TrajectoryPoly, frames: usize) -> FitSamples {
        FitSamples::from_frames(
            (0..frames)
                .map(|i| traj.eval(i as f64 / (frames - 1) as f64).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn random_traj(rng: &mut ChaCha8Rng, basis: BasisKind, n: usize) -> TrajectoryPoly {
        TrajectoryPoly::new(
            basis,
            (0..=n)
                .map(|_| p(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(FitSamples::new(vec![0.0, 1.0], vec![p(0.0, 0.0)]).is_err());
        assert!(FitSamples::new(vec![0.0, 0.5], vec![p(0.0, 0.0); 2]).is_err());
        assert!(FitSamples::new(vec![0.0, 0.5, 0.5, 1.0], vec![p(0.0, 0.0); 4]).is_err());
        assert!(FitSamples::from_frames(vec![p(0.0, 0.0)]).is_err());
    }

    #[test]
    fn interpolation_recovers_linear_motion() {
        let samples =
            FitSamples::from_frames((0..11).map(|i| p(2.0 * i as f64, 5.0 - i as f64)).collect())
                .unwrap();
        let traj = fit_interpolation(&samples, 1).unwrap();
        let report = evaluate_fit(&traj, &samples).unwrap();
        assert!(report.mae < 1e-12);
    }

    #[test]
    fn interpolation_recovers_degree_five_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth = random_traj(&mut rng, BasisKind::Bernstein, 5);
        let traj = fit_interpolation(&from_traj(&truth, 31), 5).unwrap();
        for (a, b) in traj.coeffs().iter().zip(truth.coeffs()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn interpolation_passes_through_selected_frames_only() {
        // noisy sinusoid, degree 49 over 200 frames: exact at the nodes, wild between them
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let positions: Vec<Point> = (0..200)
            .map(|i| {
                let s = i as f64 / 199.0;
                p(
                    100.0 * (9.0 * s).sin() + rng.random_range(-0.5..0.5),
                    80.0 * (5.0 * s).cos() + rng.random_range(-0.5..0.5),
                )
            })
            .collect();
        let samples = FitSamples::from_frames(positions.clone()).unwrap();
        let traj = fit_interpolation(&samples, 49).unwrap();
        let nodes = interpolation_indices(200, 49);
        let mut at_nodes = 0.0f64;
        let mut elsewhere = 0.0;
        let mut count = 0;
        for i in 0..200 {
            let e = (traj.eval(samples.times()[i]).unwrap() - positions[i]).norm();
            if nodes.contains(&i) {
                at_nodes = at_nodes.max(e);
            } else {
                elsewhere += e;
                count += 1;
            }
        }
        let elsewhere = elsewhere / count as f64;
        assert!(elsewhere > 1e3 * at_nodes, "off-node MAE {elsewhere}, node max {at_nodes}");
        assert!(elsewhere > 1e2);
    }

    #[test]
    fn interpolation_is_exact_at_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [1, 4, 10, 15] {
            let positions: Vec<Point> = (0..60)
                .map(|_| p(rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)))
                .collect();
            let samples = FitSamples::from_frames(positions.clone()).unwrap();
            let traj = fit_interpolation(&samples, n).unwrap();
            for i in interpolation_indices(60, n) {
                let e = (traj.eval(samples.times()[i]).unwrap() - positions[i]).norm();
                assert!(e < 1e-6, "n={n} frame {i}: {e}");
            }
        }
    }

    #[test]
    fn interpolation_nodes_are_uniform_by_index() {
        assert_eq!(interpolation_indices(11, 5), vec![0, 2, 4, 6, 8, 10]);
        assert_eq!(interpolation_indices(400, 199).len(), 200);
        let idx = interpolation_indices(400, 199);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*idx.last().unwrap(), 399);
    }

    #[test]
    fn too_few_frames() {
        let samples = FitSamples::from_frames(vec![p(0.0, 0.0); 3]).unwrap();
        assert!(matches!(fit_least_squares(&samples, 5), Err(Error::Validation(_))));
        assert!(matches!(fit_interpolation(&samples, 5), Err(Error::Validation(_))));
        assert!(fit_ridge(&samples, 5, 1e-3).is_ok());
        assert!(matches!(fit_ridge(&samples, 5, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn least_squares_exact_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for basis in [BasisKind::Bernstein, BasisKind::Power] {
            let truth = random_traj(&mut rng, basis, 6);
            let samples = from_traj(&truth, 40);
            let traj = fit(&samples, basis, 6, FitMethod::LeastSquares).unwrap();
            let report = evaluate_fit(&traj, &samples).unwrap();
            assert!(report.mae < 1e-8, "{basis}: {}", report.mae);
        }
    }

    #[test]
    fn least_squares_constant_positions() {
        let samples = FitSamples::from_frames(vec![p(5.0, 5.0); 30]).unwrap();
        for n in [0, 3, 12] {
            let traj = fit_least_squares(&samples, n).unwrap();
            for c in traj.coeffs() {
                assert!((c - p(5.0, 5.0)).norm() < 1e-8, "n={n}: {c:?}");
            }
        }
    }

    #[test]
    fn least_squares_is_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let positions: Vec<Point> = (0..25)
            .map(|_| p(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)))
            .collect();
        let samples = FitSamples::from_frames(positions.clone()).unwrap();
        let traj = fit_least_squares(&samples, 4).unwrap();
        let rss = |tr: &TrajectoryPoly| -> f64 {
            samples
                .times()
                .iter()
                .zip(&positions)
                .map(|(&t, q)| (tr.eval(t).unwrap() - q).norm_squared())
                .sum()
        };
        let base = rss(&traj);
        for i in 0..traj.coeffs().len() {
            for axis in 0..2 {
                for delta in [-1e-3, 1e-3] {
                    let mut coeffs = traj.coeffs().to_vec();
                    coeffs[i][axis] += delta;
                    let moved = TrajectoryPoly::new(BasisKind::Bernstein, coeffs).unwrap();
                    assert!(rss(&moved) >= base);
                }
            }
        }
    }

    #[test]
    fn ridge_zero_matches_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let positions: Vec<Point> = (0..30)
            .map(|_| p(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)))
            .collect();
        let samples = FitSamples::from_frames(positions).unwrap();
        let plan = FitPlan::new(BasisKind::Bernstein, 5, FitMethod::LeastSquares, samples.times()).unwrap();
        assert!(plan.condition_estimate() < 1e8);
        let ls = plan.fit(samples.positions()).unwrap();
        let ridge = fit_ridge(&samples, 5, 0.0).unwrap();
        for (a, b) in ls.coeffs().iter().zip(ridge.coeffs()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn huge_lambda_shrinks_to_origin() {
        let samples = FitSamples::from_frames(vec![p(100.0, -40.0); 20]).unwrap();
        let traj = fit_ridge(&samples, 6, 1e12).unwrap();
        assert!(traj.coeffs().iter().all(|c| c.norm() < 1e-6));
    }

    #[test]
    fn ridge_coefficients_shrink_with_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let positions: Vec<Point> = (0..60)
            .map(|i| {
                let s = i as f64 / 59.0;
                p(
                    50.0 * (7.0 * s).sin() + rng.random_range(-1.0..1.0),
                    30.0 * (3.0 * s).cos() + rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let samples = FitSamples::from_frames(positions).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e3] {
            let traj = fit_ridge(&samples, 20, lambda).unwrap();
            let report = evaluate_fit(&traj, &samples).unwrap();
            assert!(report.avg_abs_coeff <= last * (1.0 + 1e-9), "lambda {lambda}");
            last = report.avg_abs_coeff;
        }
    }

    #[test]
    fn report_examples() {
        let samples = FitSamples::from_frames(vec![p(3.0, 4.0); 5]).unwrap();
        let zero = TrajectoryPoly::constant(BasisKind::Bernstein, 2, p(0.0, 0.0));
        let report = evaluate_fit(&zero, &samples).unwrap();
        assert_relative_eq!(report.mae, 5.0, max_relative = 1e-12);
        assert_relative_eq!(report.max_abs_error, 5.0, max_relative = 1e-12);
        assert_eq!(report.avg_abs_coeff, 0.0);
        let exact = TrajectoryPoly::constant(BasisKind::Bernstein, 0, p(3.0, 4.0));
        assert_eq!(evaluate_fit(&exact, &samples).unwrap().mae, 0.0);
    }

    #[test]
    fn basis_choice_does_not_change_fit_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let positions: Vec<Point> = (0..40)
            .map(|_| p(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)))
            .collect();
        let samples = FitSamples::from_frames(positions).unwrap();
        for n in [2, 5, 10] {
            let b = fit(&samples, BasisKind::Bernstein, n, FitMethod::LeastSquares).unwrap();
            // refit the Bernstein fit's values in the power basis
            let values: Vec<Point> = samples.times().iter().map(|&t| b.eval(t).unwrap()).collect();
            let converted = fit(
                &FitSamples::new(samples.times().to_vec(), values).unwrap(),
                BasisKind::Power,
                n,
                FitMethod::LeastSquares,
            )
            .unwrap();
            let mb = evaluate_fit(&b, &samples).unwrap().mae;
            let mp = evaluate_fit(&converted, &samples).unwrap().mae;
            assert!((mb - mp).abs() < 1e-6, "n={n}: {mb} vs {mp}");
        }
    }
}

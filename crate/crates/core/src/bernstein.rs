//! Bernstein and power polynomial bases.
//!
//! Low degrees use the triangular (de Casteljau style) row recurrence, which
//! never forms a binomial coefficient. High degrees go through log space:
//! `exp(ln C(n,i) + i ln t + (n-i) ln(1-t))` with the log-binomial taken from
//! log-gamma, so nothing overflows before the final exponential.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::Point;

/// Largest degree accepted by the evaluators unless a [`BasisConfig`] says otherwise.
pub const DEFAULT_MAX_DEGREE: usize = 1024;

/// Bernstein degrees above this go through [`basis_row_log`].
pub const DEFAULT_LOG_THRESHOLD: usize = 60;

/// Conditioning limit for [`solve_control_points`].
pub const MAX_COLLOCATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Bernstein,
    Power,
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisKind::Bernstein => f.write_str("bernstein"),
            BasisKind::Power => f.write_str("power"),
        }
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernstein" => Ok(BasisKind::Bernstein),
            "power" | "monomial" => Ok(BasisKind::Power),
            other => Err(Error::Validation(format!("unknown basis '{other}'"))),
        }
    }
}

/// Values of all `n + 1` basis functions of one kind at a single parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRow {
    pub kind: BasisKind,
    pub degree: usize,
    pub t: f64,
    pub values: Vec<f64>,
}

impl BasisRow {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Degree limits and the direct/log switch point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConfig {
    pub max_degree: usize,
    pub log_threshold: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            max_degree: DEFAULT_MAX_DEGREE,
            log_threshold: DEFAULT_LOG_THRESHOLD,
        }
    }
}

impl BasisConfig {
    /// Basis row as used by trajectory evaluation: direct evaluation, except
    /// Bernstein rows above `log_threshold` which are built in log space.
    pub fn eval_row(&self, kind: BasisKind, n: usize, t: f64) -> Result<BasisRow> {
        check_args(n, t, self.max_degree)?;
        let values = match kind {
            BasisKind::Bernstein if n > self.log_threshold => bernstein_log_values(n, t),
            BasisKind::Bernstein => bernstein_values(n, t),
            BasisKind::Power => power_values(n, t),
        };
        Ok(BasisRow {
            kind,
            degree: n,
            t,
            values,
        })
    }
}

pub(crate) fn check_unit(name: &str, t: f64) -> Result<()> {
    if t.is_finite() && (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {t} is outside [0, 1]")))
    }
}

fn check_args(n: usize, t: f64, max_degree: usize) -> Result<()> {
    check_unit("t", t)?;
    if n > max_degree {
        return Err(Error::Capacity {
            degree: n,
            max: max_degree,
        });
    }
    Ok(())
}

/// Direct evaluation of a basis row.
///
/// Bernstein rows come from the triangular recurrence
/// `B_{k,j} = (1-t) B_{k-1,j} + t B_{k-1,j-1}`, which reproduces the boundary
/// rows `[1, 0, ..]` and `[.., 0, 1]` exactly. Powers use `0^0 = 1`.
pub fn basis_row(kind: BasisKind, n: usize, t: f64) -> Result<BasisRow> {
    check_args(n, t, DEFAULT_MAX_DEGREE)?;
    let values = match kind {
        BasisKind::Bernstein => bernstein_values(n, t),
        BasisKind::Power => power_values(n, t),
    };
    Ok(BasisRow {
        kind,
        degree: n,
        t,
        values,
    })
}

/// Bernstein row evaluated in log space; finite for every degree up to the cap.
pub fn basis_row_log(n: usize, t: f64) -> Result<BasisRow> {
    check_args(n, t, DEFAULT_MAX_DEGREE)?;
    Ok(BasisRow {
        kind: BasisKind::Bernstein,
        degree: n,
        t,
        values: bernstein_log_values(n, t),
    })
}

/// Single-precision variant of [`basis_row_log`].
///
/// Every intermediate is an `f32`; the log-binomials come from running sums
/// of `ln k` so no double-precision value leaks in.
pub fn basis_row_log_f32(n: usize, t: f32) -> Result<Vec<f32>> {
    check_args(n, t as f64, DEFAULT_MAX_DEGREE)?;
    if let Some(row) = boundary_row_f32(n, t) {
        return Ok(row);
    }
    let mut ln_fact = Vec::with_capacity(n + 1);
    let mut acc = 0.0f32;
    ln_fact.push(0.0f32);
    for k in 1..=n {
        acc += (k as f32).ln();
        ln_fact.push(acc);
    }
    let ln_t = t.ln();
    let ln_1mt = (1.0 - t).ln();
    Ok((0..=n)
        .map(|i| {
            let ln_binom = ln_fact[n] - ln_fact[i] - ln_fact[n - i];
            (ln_binom + i as f32 * ln_t + (n - i) as f32 * ln_1mt).exp()
        })
        .collect())
}

fn boundary_row_f32(n: usize, t: f32) -> Option<Vec<f32>> {
    let hot = if t == 0.0 {
        0
    } else if t == 1.0 {
        n
    } else {
        return None;
    };
    let mut row = vec![0.0; n + 1];
    row[hot] = 1.0;
    Some(row)
}

fn bernstein_values(n: usize, t: f64) -> Vec<f64> {
    let s = 1.0 - t;
    let mut row = vec![0.0; n + 1];
    row[0] = 1.0;
    for k in 1..=n {
        // in place, right to left, so row[j - 1] still holds degree k - 1
        row[k] = t * row[k - 1];
        for j in (1..k).rev() {
            row[j] = s * row[j] + t * row[j - 1];
        }
        row[0] *= s;
    }
    row
}

fn bernstein_log_values(n: usize, t: f64) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    if t == 0.0 {
        row[0] = 1.0;
        return row;
    }
    if t == 1.0 {
        row[n] = 1.0;
        return row;
    }
    let ln_t = t.ln();
    let ln_1mt = (-t).ln_1p();
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    for (i, v) in row.iter_mut().enumerate() {
        let ln_binom = ln_n_fact - ln_gamma(i as f64 + 1.0) - ln_gamma((n - i) as f64 + 1.0);
        *v = (ln_binom + i as f64 * ln_t + (n - i) as f64 * ln_1mt).exp();
    }
    row
}

fn power_values(n: usize, t: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(n + 1);
    let mut p = 1.0;
    for _ in 0..=n {
        row.push(p);
        p *= t;
    }
    row
}

/// `m + 1` Chebyshev–Gauss points mapped from `[-1, 1]` onto `[0, 1]`, ascending.
pub fn chebyshev_nodes(m: usize) -> Vec<f64> {
    let count = m + 1;
    (0..count)
        .map(|k| {
            let x = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos();
            0.5 * (1.0 - x)
        })
        .collect()
}

/// Square matrix with entry `(k, i) = B_{m,i}(nodes[k])`.
pub fn collocation_matrix(m: usize, nodes: &[f64]) -> Result<DMatrix<f64>> {
    if nodes.len() != m + 1 {
        return Err(Error::Validation(format!(
            "degree {m} needs {} nodes, got {}",
            m + 1,
            nodes.len()
        )));
    }
    for (a, &x) in nodes.iter().enumerate() {
        check_unit("node", x)?;
        if nodes[..a].contains(&x) {
            return Err(Error::Degenerate(format!("duplicate collocation node {x}")));
        }
    }
    let mut out = DMatrix::zeros(m + 1, m + 1);
    for (k, &u) in nodes.iter().enumerate() {
        let row = BasisConfig::default().eval_row(BasisKind::Bernstein, m, u)?;
        for (i, v) in row.values.into_iter().enumerate() {
            out[(k, i)] = v;
        }
    }
    Ok(out)
}

/// Ratio of extreme singular values; infinite for a singular matrix.
pub fn condition_number(matrix: &DMatrix<f64>) -> f64 {
    let sv = SVD::new(matrix.clone(), false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Recovers Bézier control points from curve samples taken at `nodes`,
/// i.e. solves `M P = C` for the collocation matrix `M`.
pub fn solve_control_points(curve_samples: &[Point], nodes: &[f64]) -> Result<Vec<Point>> {
    if curve_samples.is_empty() || curve_samples.len() != nodes.len() {
        return Err(Error::Validation(format!(
            "{} samples for {} nodes",
            curve_samples.len(),
            nodes.len()
        )));
    }
    let m = nodes.len() - 1;
    let matrix = collocation_matrix(m, nodes)?;
    let condition = condition_number(&matrix);
    if !(condition <= MAX_COLLOCATION_CONDITION) {
        return Err(Error::Conditioning {
            condition,
            context: format!("collocation matrix of degree {m}"),
        });
    }
    let rhs = DMatrix::from_fn(m + 1, 2, |r, c| curve_samples[r][c]);
    let solution = matrix.lu().solve(&rhs).ok_or_else(|| Error::Conditioning {
        condition,
        context: "singular collocation matrix".into(),
    })?;
    Ok((0..=m)
        .map(|r| Point::new(solution[(r, 0)], solution[(r, 1)]))
        .collect())
}

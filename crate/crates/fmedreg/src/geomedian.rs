//! Weighted spatial median (multivariate L1 median) in `R^d`, `d ≥ 2`.
//!
//! Minimizes `G(u) = Σ_i w_i ‖y_i − u‖` by a damped fixed-point iteration.
//! The plain update `T(u) = Σ' (w_i y_i / r_i) / Σ' (w_i / r_i)` (sums over
//! points not coinciding with `u`, `r_i = ‖y_i − u‖`) is undefined at data
//! points, where `G` is merely subdifferentiable. When the iterate lands on
//! a data atom of mass `η` the solver uses the classical correction: with
//! `R = Σ' w_i (y_i − u)/r_i`, the atom is optimal iff `‖R‖ ≤ η`
//! (a certificate, not a tolerance check); otherwise the iterate moves by
//! `max(0, 1 − η/‖R‖) (T(u) − u)`. Both branches strictly decrease `G`.
//!
//! Conventions used throughout the crate:
//! * unit-direction map `U(v) = v/‖v‖` with `U(0) = 0`, so gradients are
//!   total functions;
//! * `d = 1` is rejected — univariate medians are quantiles and the
//!   asymptotics implemented in `inference` assume `d ≥ 2`;
//! * points with zero weight are inert: they affect neither the solution
//!   nor the singularity/collinearity classification.

use crate::error::{Error, Result};
use crate::kernel::WeightVector;
use nalgebra::{DMatrix, DVector};

/// Default relative-change / gradient tolerance for [`solve_median`].
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default iteration cap for [`solve_median`]. Most instances certify in
/// tens of steps, but flat configurations converge linearly with a small
/// rate constant and can legitimately need thousands; each step is O(nd),
/// so the generous cap costs nothing when unused.
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// Weighted point configuration in `R^d`.
#[derive(Debug, Clone)]
pub struct PointCloud {
    /// Row-major storage: point `i` occupies `points[i*d .. (i+1)*d]`.
    points: Vec<f64>,
    n: usize,
    d: usize,
    weights: WeightVector,
    /// Coincidence threshold: `1e-10 × (diameter scale + 1)`.
    eps_sing: f64,
}

impl PointCloud {
    /// Build a cloud from an `n × d` matrix of points (rows are points).
    pub fn new(points: DMatrix<f64>, weights: WeightVector) -> Result<Self> {
        let (n, d) = points.shape();
        let mut rows = Vec::with_capacity(n * d);
        for i in 0..n {
            for j in 0..d {
                rows.push(points[(i, j)]);
            }
        }
        Self::from_rows(rows, n, d, weights)
    }

    /// Build a cloud from row-major storage.
    pub fn from_rows(points: Vec<f64>, n: usize, d: usize, weights: WeightVector) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension(format!(
                "point dimension must be >= 2 (got {d}); univariate medians are quantiles"
            )));
        }
        if n == 0 {
            return Err(Error::Invalid("point cloud must contain at least one point".into()));
        }
        if points.len() != n * d {
            return Err(Error::Shape(format!(
                "expected {n}x{d} = {} coordinates, got {}",
                n * d,
                points.len()
            )));
        }
        if weights.len() != n {
            return Err(Error::Shape(format!(
                "weight vector length {} does not match point count {n}",
                weights.len()
            )));
        }
        if let Some(bad) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite coordinate at flat index {bad}")));
        }
        let eps_sing = singularity_eps(&points, n, d, weights.weights());
        Ok(PointCloud { points, n, d, weights, eps_sing })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Point dimension `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Point `i` as a coordinate slice.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    /// Coincidence threshold used for singularity classification.
    pub fn singularity_eps(&self) -> f64 {
        self.eps_sing
    }

    fn check_query(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.d {
            return Err(Error::Dimension(format!(
                "query point has dimension {}, cloud has {}",
                u.len(),
                self.d
            )));
        }
        Ok(())
    }
}

/// Coincidence threshold `1e-10 × (scale + 1)`, where the scale is a
/// two-pass diameter bound (twice the largest distance from the weighted
/// mean), which brackets the true diameter within a factor of 2 at O(n) cost.
fn singularity_eps(points: &[f64], n: usize, d: usize, w: &[f64]) -> f64 {
    let mut mean = vec![0.0; d];
    for i in 0..n {
        if w[i] > 0.0 {
            for j in 0..d {
                mean[j] += w[i] * points[i * d + j];
            }
        }
    }
    let mut max_r2: f64 = 0.0;
    for i in 0..n {
        if w[i] > 0.0 {
            let mut s = 0.0;
            for j in 0..d {
                let t = points[i * d + j] - mean[j];
                s += t * t;
            }
            max_r2 = max_r2.max(s);
        }
    }
    1e-10 * (2.0 * max_r2.sqrt() + 1.0)
}

/// Whether all positively-weighted points lie on one line (within a
/// 1e-10 relative tolerance). Such configurations may have non-unique
/// minimizers, which the solver reports via [`MedianSolution::collinear`].
fn is_collinear(points: &[f64], n: usize, d: usize, w: &[f64]) -> bool {
    let idx: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    if idx.len() <= 2 {
        return true;
    }
    let p0 = &points[idx[0] * d..idx[0] * d + d];
    // Direction: farthest positively-weighted point from p0.
    let mut far = idx[0];
    let mut far_d2 = 0.0;
    for &i in &idx {
        let mut s = 0.0;
        for j in 0..d {
            let t = points[i * d + j] - p0[j];
            s += t * t;
        }
        if s > far_d2 {
            far_d2 = s;
            far = i;
        }
    }
    if far_d2 == 0.0 {
        return true; // all positively-weighted points coincide
    }
    let v = &points[far * d..far * d + d];
    let tol2 = 1e-20 * far_d2; // (1e-10 ‖v‖)²
    for &i in &idx {
        let p = &points[i * d..i * d + d];
        let mut dot = 0.0;
        let mut n2 = 0.0;
        for j in 0..d {
            let a = p[j] - p0[j];
            let b = v[j] - p0[j];
            dot += a * b;
            n2 += a * a;
        }
        // Residual of p − p0 orthogonal to the line direction.
        let res2 = n2 - dot * dot / far_d2;
        if res2 > tol2 {
            return false;
        }
    }
    true
}

/// Solver output and diagnostics.
#[derive(Debug, Clone)]
pub struct MedianSolution {
    /// The located minimizer.
    pub point: DVector<f64>,
    /// Objective value `Σ w_i ‖y_i − point‖`.
    pub objective: f64,
    /// Norm of the gradient's smooth part at `point` (excludes any data atom
    /// the point sits on; equals the full gradient norm away from atoms).
    pub grad_norm: f64,
    /// Update steps performed.
    pub iterations: usize,
    /// Whether an optimality certificate was reached (see below).
    pub converged: bool,
    /// True when the solution sits on a data atom certified optimal by
    /// `‖R‖ ≤ η`.
    pub anchored: bool,
    /// True when all positively-weighted points are collinear; the reported
    /// point is then one minimizer among possibly many.
    pub collinear: bool,
    /// Objective value at every visited iterate (including the last); the
    /// iteration is a strict descent method, so this is non-increasing.
    pub objective_trace: Vec<f64>,
}

/// Objective `G(u) = Σ w_i ‖y_i − u‖` (compensated summation).
pub fn objective(cloud: &PointCloud, u: &DVector<f64>) -> Result<f64> {
    cloud.check_query(u)?;
    Ok(objective_at(&cloud.points, cloud.n, cloud.d, cloud.weights.weights(), u.as_slice()))
}

fn objective_at(points: &[f64], n: usize, d: usize, w: &[f64], u: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut comp = 0.0; // Kahan compensation
    for i in 0..n {
        if w[i] == 0.0 {
            continue;
        }
        let mut s = 0.0;
        for j in 0..d {
            let t = points[i * d + j] - u[j];
            s += t * t;
        }
        let term = w[i] * s.sqrt();
        let y = term - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    acc
}

/// Gradient `∇G(u) = −Σ w_i U(y_i − u)` with the `U(0) = 0` convention,
/// making it a total function (at data atoms it returns the smooth part).
pub fn gradient(cloud: &PointCloud, u: &DVector<f64>) -> Result<DVector<f64>> {
    cloud.check_query(u)?;
    let d = cloud.d;
    let w = cloud.weights.weights();
    let mut g = DVector::zeros(d);
    for i in 0..cloud.n {
        if w[i] == 0.0 {
            continue;
        }
        let p = cloud.point(i);
        let mut s = 0.0;
        for j in 0..d {
            let t = p[j] - u[j];
            s += t * t;
        }
        if s == 0.0 {
            continue; // U(0) = 0
        }
        let inv = w[i] / s.sqrt();
        for j in 0..d {
            g[j] -= inv * (p[j] - u[j]);
        }
    }
    Ok(g)
}

/// Weighted curvature matrix `Σ w_i (1/r_i)(I − U_i U_i^t)` with
/// `r_i = ‖y_i − u‖`, `U_i = U(y_i − u)`.
///
/// # Errors
///
/// [`Error::SingularPoint`] naming the first positively-weighted point
/// within the singularity tolerance of `u`, where a summand blows up.
pub fn hessian_weighted(cloud: &PointCloud, u: &DVector<f64>) -> Result<DMatrix<f64>> {
    cloud.check_query(u)?;
    let w = cloud.weights.weights();
    for i in 0..cloud.n {
        if w[i] == 0.0 {
            continue;
        }
        let p = cloud.point(i);
        let mut s = 0.0;
        for j in 0..cloud.d {
            let t = p[j] - u[j];
            s += t * t;
        }
        if s.sqrt() < cloud.eps_sing {
            return Err(Error::SingularPoint { index: i });
        }
    }
    Ok(hessian_dropping(cloud, u)?.0)
}

/// Like [`hessian_weighted`] but total: summands within the singularity
/// tolerance of `u` are dropped, and their count returned. Used by the
/// inference layer, where the expansion point is itself a data atom whenever
/// the solver anchors.
pub fn hessian_dropping(cloud: &PointCloud, u: &DVector<f64>) -> Result<(DMatrix<f64>, usize)> {
    cloud.check_query(u)?;
    let d = cloud.d;
    let w = cloud.weights.weights();
    let mut h = DMatrix::zeros(d, d);
    let mut dropped = 0usize;
    for i in 0..cloud.n {
        if w[i] == 0.0 {
            continue;
        }
        let p = cloud.point(i);
        let mut s = 0.0;
        for j in 0..d {
            let t = p[j] - u[j];
            s += t * t;
        }
        let r = s.sqrt();
        if r < cloud.eps_sing {
            dropped += 1;
            continue;
        }
        let inv = w[i] / r;
        // (w_i/r)(I − UU^t): accumulate upper triangle, mirror below.
        for a in 0..d {
            let ua = (p[a] - u[a]) / r;
            for b in a..d {
                let ub = (p[b] - u[b]) / r;
                let m = if a == b { inv * (1.0 - ua * ub) } else { -inv * ua * ub };
                h[(a, b)] += m;
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    Ok((h, dropped))
}

/// Locate the weighted spatial median.
///
/// Starts from the weighted mean and iterates until the relative step is
/// below `tol` *and* an optimality certificate holds: either the smooth
/// gradient norm is ≤ `tol`, or the iterate sits on a data atom whose
/// subgradient condition `‖R‖ ≤ η` certifies it as the exact minimizer.
/// Hitting `max_iter` returns the best iterate with `converged = false`.
pub fn solve_median(cloud: &PointCloud, tol: f64, max_iter: usize) -> Result<MedianSolution> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Invalid(format!("tolerance must be finite and > 0, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::Invalid("max_iter must be at least 1".into()));
    }
    Ok(weiszfeld(&cloud.points, cloud.n, cloud.d, &cloud.weights, cloud.eps_sing, tol, max_iter))
}

/// Solve on borrowed row-major storage (hot path for cross-validation).
pub(crate) fn weiszfeld(
    points: &[f64],
    n: usize,
    d: usize,
    weights: &WeightVector,
    eps_sing: f64,
    tol: f64,
    max_iter: usize,
) -> MedianSolution {
    let w = weights.weights();
    let collinear = is_collinear(points, n, d, w);

    // Start from the weighted mean (weights sum to 1).
    let mut u = vec![0.0; d];
    for i in 0..n {
        if w[i] > 0.0 {
            for j in 0..d {
                u[j] += w[i] * points[i * d + j];
            }
        }
    }

    let mut trace = Vec::with_capacity(16);
    let mut num = vec![0.0; d];
    let mut atom = vec![0.0; d];
    let mut t_next = vec![0.0; d];
    let mut iterations = 0usize;
    let mut last_step_small = false;
    let (converged, anchored, grad_norm);

    loop {
        // One pass: objective (compensated), Weiszfeld numerator/denominator
        // over non-coincident points, and the atom mass η at u.
        num.iter_mut().for_each(|v| *v = 0.0);
        atom.iter_mut().for_each(|v| *v = 0.0);
        let mut ball_first = 0usize;
        let mut ball_count = 0usize;
        let mut den = 0.0;
        let mut eta = 0.0;
        let mut obj = 0.0;
        let mut comp = 0.0;
        for i in 0..n {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            let p = &points[i * d..i * d + d];
            let mut s = 0.0;
            for j in 0..d {
                let t = p[j] - u[j];
                s += t * t;
            }
            let r = s.sqrt();
            let term = wi * r;
            let y = term - comp;
            let t = obj + y;
            comp = (t - obj) - y;
            obj = t;
            if r < eps_sing {
                if ball_count == 0 {
                    ball_first = i;
                }
                ball_count += 1;
                eta += wi;
                for j in 0..d {
                    atom[j] += wi * p[j];
                }
                continue;
            }
            let inv = wi / r;
            den += inv;
            for j in 0..d {
                num[j] += inv * p[j];
            }
        }
        trace.push(obj);

        // R = Σ' w_i (y_i − u)/r_i = num − den·u  (smooth part of −∇G).
        let mut r_norm2 = 0.0;
        for j in 0..d {
            let rj = num[j] - den * u[j];
            r_norm2 += rj * rj;
        }
        let r_norm = r_norm2.sqrt();

        if eta > 0.0 && r_norm <= eta {
            // Subgradient certificate: the atom near u is the minimizer.
            // Snap onto it — exactly, when the ball holds a single point
            // (the weighted-centre division would round) — and restate the
            // objective there.
            if ball_count == 1 {
                u.copy_from_slice(&points[ball_first * d..ball_first * d + d]);
            } else {
                for j in 0..d {
                    u[j] = atom[j] / eta;
                }
            }
            let mut obj2 = 0.0;
            let mut comp2 = 0.0;
            for i in 0..n {
                let wi = w[i];
                if wi == 0.0 {
                    continue;
                }
                let p = &points[i * d..i * d + d];
                let mut s = 0.0;
                for j in 0..d {
                    let t = p[j] - u[j];
                    s += t * t;
                }
                let y = wi * s.sqrt() - comp2;
                let t = obj2 + y;
                comp2 = (t - obj2) - y;
                obj2 = t;
            }
            *trace.last_mut().expect("just pushed") = obj2;
            converged = true;
            anchored = true;
            grad_norm = r_norm;
            break;
        }
        if last_step_small && eta == 0.0 && r_norm <= tol {
            converged = true;
            anchored = false;
            grad_norm = r_norm;
            break;
        }
        if iterations >= max_iter {
            converged = false;
            anchored = false;
            grad_norm = r_norm;
            break;
        }

        // den > 0 here: den == 0 would mean all mass coincides with u,
        // which the certificate branch already caught (R = 0 ≤ η).
        debug_assert!(den > 0.0);
        for j in 0..d {
            t_next[j] = num[j] / den;
        }
        let mut step = 1.0;
        if eta > 0.0 {
            // Damped step off the atom; η < ‖R‖ is guaranteed here.
            step = (1.0 - eta / r_norm).max(0.0);
        }
        let mut delta2 = 0.0;
        let mut unorm2 = 0.0;
        for j in 0..d {
            let next = u[j] + step * (t_next[j] - u[j]);
            let dl = next - u[j];
            delta2 += dl * dl;
            unorm2 += next * next;
            u[j] = next;
        }
        iterations += 1;
        last_step_small = delta2.sqrt() <= tol * (1.0 + unorm2.sqrt());
    }

    MedianSolution {
        point: DVector::from_vec(u),
        objective: *trace.last().expect("at least one pass"),
        grad_norm,
        iterations,
        converged,
        anchored,
        collinear,
        objective_trace: trace,
    }
}

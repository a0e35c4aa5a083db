//! Plug-in asymptotic confidence ellipsoids for the conditional spatial
//! median.
//!
//! Around the estimate `μ̂(x)` the scaled error is asymptotically normal
//! with a covariance built from three estimable pieces: the direction
//! second-moment `Σ = Σ_i w_i U(Y_i − μ̂) U(Y_i − μ̂)ᵀ` (with `U(v) = v/‖v‖`,
//! `U(0) = 0`), the curvature matrix `H` of the weighted objective, and a
//! scalar combining kernel moments with the empirical small-ball frequency.
//! The resulting `(1 − α)` region is
//!
//! ```text
//! { y : (y − μ̂)ᵀ Γ⁻¹ (y − μ̂) ≤ χ²_d(α) },
//! Γ⁻¹ = (m₁² · n · F̂(h) / m₂) · H Σ⁻¹ H.
//! ```
//!
//! Only the spatial-median estimator (`cmm`) with a compactly supported
//! kernel defines this region; other configurations are rejected.

use crate::error::{Error, Result};
use crate::geomedian::{hessian_dropping, solve_median, PointCloud, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::kernel::small_ball_estimates;
use crate::regression::{FittedModel, Method};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Σ̂: weighted second moment of the unit directions from `mu` to the
/// responses, clamped to the positive semidefinite cone. Points within the
/// cloud's coincidence threshold of `mu` contribute nothing (`U(0) = 0`);
/// the threshold matches the median solver's, so a response the solver
/// anchored on drops out even when the returned point differs from the atom
/// by a rounding error.
pub fn sigma_n(cloud: &PointCloud, mu: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = cloud.dim();
    if mu.len() != d {
        return Err(Error::Dimension(format!(
            "mu has {} coordinates, responses have {d}",
            mu.len()
        )));
    }
    let w = cloud.weights().weights();
    let eps2 = cloud.singularity_eps() * cloud.singularity_eps();
    let mut sigma: DMatrix<f64> = DMatrix::zeros(d, d);
    let mut u = vec![0.0; d];
    for i in 0..cloud.len() {
        if w[i] <= 0.0 {
            continue;
        }
        let p = cloud.point(i);
        let mut r2 = 0.0;
        for j in 0..d {
            u[j] = p[j] - mu[j];
            r2 += u[j] * u[j];
        }
        if r2 < eps2 {
            continue;
        }
        for j in 0..d {
            for k in j..d {
                sigma[(j, k)] += w[i] * u[j] * u[k] / r2;
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            sigma[(j, k)] = sigma[(k, j)];
        }
    }
    // Clamp tiny negative eigenvalues introduced by rounding.
    let eig = sigma.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < 0.0) {
        let vals = DVector::<f64>::from_fn(d, |j, _| eig.eigenvalues[j].max(0.0));
        let v = &eig.eigenvectors;
        sigma = v * DMatrix::from_diagonal(&vals) * v.transpose();
        sigma = (&sigma + sigma.transpose()) * 0.5;
    }
    Ok(sigma)
}

/// The estimated ingredients of the plug-in covariance.
#[derive(Debug, Clone)]
pub struct PluginCovariance {
    /// Direction second-moment Σ̂ (d×d, PSD).
    pub sigma: DMatrix<f64>,
    /// Objective curvature Ĥ (d×d, summands near singularities dropped).
    pub hess: DMatrix<f64>,
    /// First kernel moment against the small-ball shape.
    pub m1: f64,
    /// Second kernel moment against the small-ball shape.
    pub m2: f64,
    /// Empirical small-ball frequency `F̂(h)`.
    pub f_xn_h: f64,
    /// Learning-sample size.
    pub n: usize,
    /// Curvature summands dropped for being within the singularity guard.
    pub dropped_terms: usize,
}

/// Outcome metadata for numerical conditioning of an ellipsoid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EllipsoidDiagnostics {
    /// Ridge added to Σ̂ before inversion.
    pub ridge: f64,
    /// Curvature summands dropped near the estimate.
    pub dropped_terms: usize,
    /// Number of learning curves with positive kernel weight.
    pub effective_n: usize,
}

/// Invert the plug-in covariance: `Γ⁻¹ = (m₁² n F̂(h) / m₂) · H Σ⁻¹ H`.
///
/// Σ̂ is ridged by `1e-12 · tr(Σ̂)/d` before inversion; a condition number
/// above `1e12` (or a non-positive-definite product) is reported as
/// [`Error::SingularCovariance`].
pub fn gamma_inverse(pc: &PluginCovariance) -> Result<(DMatrix<f64>, f64)> {
    let d = pc.sigma.nrows();
    if pc.sigma.ncols() != d || pc.hess.nrows() != d || pc.hess.ncols() != d {
        return Err(Error::Shape("sigma and hessian must be square and same size".into()));
    }
    if pc.m2 <= 0.0 || pc.f_xn_h <= 0.0 || pc.n == 0 {
        return Err(Error::Invalid(
            "plug-in covariance needs positive m2, small-ball frequency, and n".into(),
        ));
    }
    let ridge = 1e-12 * pc.sigma.trace() / d as f64;
    let mut sigma_r = pc.sigma.clone();
    for j in 0..d {
        sigma_r[(j, j)] += ridge;
    }
    let eig = sigma_r.symmetric_eigen();
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lmin > 0.0) || lmax / lmin > 1e12 {
        return Err(Error::SingularCovariance { condition: if lmin > 0.0 { lmax / lmin } else { f64::INFINITY } });
    }
    let inv_vals = DVector::from_fn(d, |j, _| 1.0 / eig.eigenvalues[j]);
    let v = &eig.eigenvectors;
    let sigma_inv = v * DMatrix::from_diagonal(&inv_vals) * v.transpose();
    let scale = pc.m1 * pc.m1 * pc.n as f64 * pc.f_xn_h / pc.m2;
    let mut g = &pc.hess * sigma_inv * &pc.hess * scale;
    g = (&g + g.transpose()) * 0.5;
    let geig = g.clone().symmetric_eigen();
    let gmin = geig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let gmax = geig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(gmin > 0.0) {
        return Err(Error::SingularCovariance {
            condition: if gmin > 0.0 { gmax / gmin } else { f64::INFINITY },
        });
    }
    Ok((g, ridge))
}

// --- Chi-square quantiles (self-contained, no special-function crate) ---

/// Natural log of the gamma function (Lanczos approximation, g = 7).
fn ln_gamma(x: f64) -> f64 {
    // Valid for x > 0; callers only pass d/2 >= 0.5.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma `P(s, x)` via series (x < s+1) or
/// continued fraction (x ≥ s+1).
fn gammp(s: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let lg = ln_gamma(s);
    if x < s + 1.0 {
        // Series expansion.
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut k = s;
        for _ in 0..500 {
            k += 1.0;
            term *= x / k;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + s * x.ln() - lg).exp()
    } else {
        // Lentz continued fraction for Q(s, x).
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (-x + s * x.ln() - lg).exp() * h;
        1.0 - q
    }
}

/// Upper-α chi-square quantile with `d` degrees of freedom: the `q` with
/// `P(χ²_d ≤ q) = 1 − α`, found by bisection to absolute tolerance 1e-10.
/// `alpha = 1` degenerates to 0.
pub fn chi2_quantile(d: usize, alpha: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Invalid("chi-square needs at least 1 degree of freedom".into()));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let s = d as f64 / 2.0;
    let target = 1.0 - alpha;
    let mut hi = d as f64 + 1.0;
    let mut guard = 0;
    while gammp(s, hi / 2.0) < target {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Invalid(format!("alpha = {alpha} too extreme to bracket")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        if gammp(s, mid / 2.0) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A `(1 − α)` confidence ellipsoid `{ y : (y−c)ᵀ S (y−c) ≤ r² }`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    /// Center: the estimated conditional median.
    pub center: DVector<f64>,
    /// Shape matrix `S = Γ⁻¹` (symmetric positive definite).
    pub shape_inv: DMatrix<f64>,
    /// Nominal miscoverage α.
    pub level: f64,
    /// Squared radius: the chi-square quantile.
    pub radius2: f64,
    /// Conditioning metadata.
    pub diagnostics: EllipsoidDiagnostics,
}

/// Build the plug-in confidence ellipsoid for the conditional median at a
/// query curve.
///
/// Requires the `cmm` estimator and a kernel with compact support
/// (`supports_inference`); `alpha = 1` yields the degenerate point region.
pub fn confidence_ellipsoid(model: &FittedModel, x: &[f64], alpha: f64) -> Result<Ellipsoid> {
    if model.method() != Method::Cmm {
        return Err(Error::Invalid(format!(
            "confidence ellipsoids are defined for the cmm estimator, not {}",
            model.method().tag()
        )));
    }
    if !model.kernel().supports_inference() {
        return Err(Error::Kernel(
            "the untruncated Gaussian kernel is estimation-only; inference needs compact support"
                .into(),
        ));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }

    let distances = model.distances_to(x)?;
    let h = model.bandwidth().resolve(&distances)?;
    let weights = crate::kernel::nw_weights(&distances, h, model.kernel())?;
    let effective_n = weights.effective_n();

    let d = model.dim();
    let n = model.n();
    let mut rows = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            rows.push(model.responses()[(i, j)]);
        }
    }
    let cloud = PointCloud::from_rows(rows, n, d, weights)?;
    let sol = solve_median(&cloud, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mu = sol.point;

    let sigma = sigma_n(&cloud, &mu)?;
    let (hess, dropped_terms) = hessian_dropping(&cloud, &mu)?;
    let sb = small_ball_estimates(model.kernel(), &distances, h)?;
    let pc = PluginCovariance {
        sigma,
        hess,
        m1: sb.m1,
        m2: sb.m2,
        f_xn_h: sb.f_xn_h,
        n,
        dropped_terms,
    };
    let (shape_inv, ridge) = gamma_inverse(&pc)?;
    let radius2 = chi2_quantile(d, alpha)?;
    Ok(Ellipsoid {
        center: mu,
        shape_inv,
        level: alpha,
        radius2,
        diagnostics: EllipsoidDiagnostics { ridge, dropped_terms, effective_n },
    })
}

/// Membership test: returns `(inside, statistic)` where
/// `statistic = (y−c)ᵀ S (y−c)` and `inside = statistic ≤ r²`.
pub fn ellipsoid_contains(e: &Ellipsoid, y: &DVector<f64>) -> Result<(bool, f64)> {
    if y.len() != e.center.len() {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, ellipsoid lives in {}",
            y.len(),
            e.center.len()
        )));
    }
    let diff = y - &e.center;
    let statistic = (diff.transpose() * &e.shape_inv * &diff)[(0, 0)];
    Ok((statistic <= e.radius2, statistic))
}

/// Semi-axis lengths, longest first: `sqrt(r² / λ_j)` over the eigenvalues
/// of the shape matrix.
pub fn ellipsoid_axes(e: &Ellipsoid) -> Vec<f64> {
    let eig = e.shape_inv.clone().symmetric_eigen();
    let mut axes: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > 0.0 { (e.radius2 / l).sqrt() } else { f64::INFINITY })
        .collect();
    axes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    axes
}

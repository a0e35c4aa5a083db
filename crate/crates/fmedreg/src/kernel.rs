//! Kernels, Nadaraya–Watson weights, and small-ball estimates.
//!
//! Weights are built from an asymmetric kernel `K` supported on `[0, 1]`
//! applied to semi-metric distances scaled by a bandwidth: `w_i ∝ K(d_i/h)`.
//! The same distances drive the empirical small-ball probability
//! `F(u) = #{d_i ≤ u}/n` and its normalized concentration profile
//! `τ(u) = F(uh)/F(h)`, from which the kernel moment constants
//! `m_j = ∫ K^j dτ` are computed. Those constants calibrate the plug-in
//! covariance used for confidence ellipsoids.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Kernel on `[0, 1]` applied to normalized distances `u = d/h`.
///
/// Both supported kernels vanish for `u < 0` and `u > 1`. The
/// [`KernelSpec::UnsafeGauss`] variant drops the truncation at 1; it exists
/// only for exploratory estimation (weights reach every observation) and is
/// rejected by the inference layer, whose calibration constants assume
/// compact support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// `K(u) = (3/2)(1 − u²)` on `[0, 1]`.
    Quadratic,
    /// `K(u) = (2π)^{−1/2} exp(−u²/2)` on `[0, 1]`.
    TruncGauss,
    /// `K(u) = (2π)^{−1/2} exp(−u²/2)` for all `u ≥ 0` (estimation only).
    UnsafeGauss,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl KernelSpec {
    /// Whether this kernel may be used by the inference layer.
    pub fn supports_inference(self) -> bool {
        !matches!(self, KernelSpec::UnsafeGauss)
    }
}

/// Evaluate the kernel at `u`. Total: out-of-support arguments (including
/// negative ones) return 0 rather than erroring.
pub fn kernel_eval(spec: KernelSpec, u: f64) -> f64 {
    if !u.is_finite() || u < 0.0 {
        return 0.0;
    }
    match spec {
        KernelSpec::Quadratic => {
            if u > 1.0 {
                0.0
            } else {
                1.5 * (1.0 - u * u)
            }
        }
        KernelSpec::TruncGauss => {
            if u > 1.0 {
                0.0
            } else {
                INV_SQRT_2PI * (-0.5 * u * u).exp()
            }
        }
        KernelSpec::UnsafeGauss => INV_SQRT_2PI * (-0.5 * u * u).exp(),
    }
}

/// Derivative `K'(u)` inside the open support; used for moment integrals.
fn kernel_deriv(spec: KernelSpec, u: f64) -> f64 {
    match spec {
        KernelSpec::Quadratic => -3.0 * u,
        KernelSpec::TruncGauss | KernelSpec::UnsafeGauss => -u * INV_SQRT_2PI * (-0.5 * u * u).exp(),
    }
}

/// Normalized, non-negative observation weights.
///
/// Entries sum to 1 (within 1e-12) and `effective_n` counts the strictly
/// positive ones.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    effective_n: usize,
}

impl WeightVector {
    /// Normalize raw non-negative weights. Fails on negative, non-finite, or
    /// all-zero input.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &w) in raw.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Invalid(format!("weight {i} is {w}, must be finite and >= 0")));
            }
            sum += w;
        }
        if sum <= 0.0 {
            return Err(Error::Invalid("weights sum to zero".into()));
        }
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let effective_n = weights.iter().filter(|&&w| w > 0.0).count();
        Ok(WeightVector { weights, effective_n })
    }

    /// Equal weights `1/n` on `n` observations.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform weights need at least one observation");
        WeightVector {
            weights: vec![1.0 / n as f64; n],
            effective_n: n,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of strictly positive weights.
    pub fn effective_n(&self) -> usize {
        self.effective_n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn check_distances(distances: &[f64]) -> Result<()> {
    if distances.is_empty() {
        return Err(Error::Invalid("empty distance vector".into()));
    }
    for (i, &d) in distances.iter().enumerate() {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::Invalid(format!("distance {i} is {d}, must be finite and >= 0")));
        }
    }
    Ok(())
}

/// Nadaraya–Watson weights `w_i = K(d_i/h) / Σ_j K(d_j/h)`.
///
/// # Errors
///
/// [`Error::EmptyWindow`] when every kernel value vanishes, carrying the
/// smallest observed distance.
pub fn nw_weights(distances: &[f64], h: f64, spec: KernelSpec) -> Result<WeightVector> {
    check_distances(distances)?;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Invalid(format!("bandwidth must be finite and > 0, got {h}")));
    }
    let raw: Vec<f64> = distances.iter().map(|&d| kernel_eval(spec, d / h)).collect();
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        let smallest = distances.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::EmptyWindow { smallest_distance: smallest });
    }
    let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
    let effective_n = weights.iter().filter(|&&w| w > 0.0).count();
    Ok(WeightVector { weights, effective_n })
}

/// Empirical small-ball probability `F(u) = #{d_i ≤ u} / n`.
pub fn empirical_small_ball(distances: &[f64], u: f64) -> Result<f64> {
    check_distances(distances)?;
    let count = distances.iter().filter(|&&d| d <= u).count();
    Ok(count as f64 / distances.len() as f64)
}

/// Normalized concentration profile `τ(u) = F(uh) / F(h)` for `u ∈ [0, 1]`.
///
/// # Errors
///
/// [`Error::EmptyWindow`] when `F(h) = 0` (no observation within `h`).
pub fn tau_n(distances: &[f64], h: f64, u: f64) -> Result<f64> {
    check_distances(distances)?;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Invalid(format!("bandwidth must be finite and > 0, got {h}")));
    }
    let at_h = distances.iter().filter(|&&d| d <= h).count();
    if at_h == 0 {
        let smallest = distances.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::EmptyWindow { smallest_distance: smallest });
    }
    let at_uh = distances.iter().filter(|&&d| d <= u * h).count();
    Ok(at_uh as f64 / at_h as f64)
}

/// Composite Simpson rule on `[0, 1]` with 201 nodes.
fn simpson_201(f: impl Fn(f64) -> f64) -> f64 {
    const N: usize = 200; // intervals (even)
    let h = 1.0 / N as f64;
    let mut acc = f(0.0) + f(1.0);
    for k in 1..N {
        let coeff = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += coeff * f(k as f64 * h);
    }
    acc * h / 3.0
}

/// Kernel moment constants `m_j = ∫_0^1 K^j dτ`, `j = 1, 2`, for a
/// concentration profile `τ` given as a function handle.
///
/// Evaluated in the integrated-by-parts form
/// `m_j = K^j(1)·τ(1) − ∫_0^1 (K^j)'(s) τ(s) ds` with a 201-node Simpson
/// rule, which avoids differentiating `τ`. For an exact treatment of the
/// empirical step profile use [`small_ball_estimates`].
pub fn moment_constants(spec: KernelSpec, tau: impl Fn(f64) -> f64) -> (f64, f64) {
    let k1 = kernel_eval(spec, 1.0);
    let t1 = tau(1.0);
    let m1 = k1 * t1 - simpson_201(|s| kernel_deriv(spec, s) * tau(s));
    let m2 = k1 * k1 * t1
        - simpson_201(|s| 2.0 * kernel_eval(spec, s) * kernel_deriv(spec, s) * tau(s));
    (m1, m2)
}

/// Small-ball summary at a point: `F(h)`, a sampled concentration profile,
/// and the kernel moment constants taken against the empirical profile.
#[derive(Debug, Clone, Serialize)]
pub struct SmallBallEstimates {
    /// Empirical small-ball probability `F(h)` at the working bandwidth.
    pub f_xn_h: f64,
    /// `τ(u)` sampled at 101 equispaced `u ∈ [0, 1]` (diagnostics).
    pub tau_curve: Vec<(f64, f64)>,
    /// `∫ K dτ` against the empirical step profile (exact sum).
    pub m1: f64,
    /// `∫ K² dτ` against the empirical step profile (exact sum).
    pub m2: f64,
}

/// Compute [`SmallBallEstimates`] from observed distances and bandwidth.
///
/// The empirical `τ` is a step function with an atom of mass `1/m` at each
/// of the `m` normalized distances `d_i/h ≤ 1`, so the moment integrals
/// reduce to the exact sums `m_j = (1/m) Σ_{d_i ≤ h} K^j(d_i/h)`.
///
/// # Errors
///
/// [`Error::EmptyWindow`] when no observation lies within `h`.
pub fn small_ball_estimates(
    spec: KernelSpec,
    distances: &[f64],
    h: f64,
) -> Result<SmallBallEstimates> {
    check_distances(distances)?;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Invalid(format!("bandwidth must be finite and > 0, got {h}")));
    }
    let inside: Vec<f64> = distances.iter().filter(|&&d| d <= h).map(|&d| d / h).collect();
    if inside.is_empty() {
        let smallest = distances.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::EmptyWindow { smallest_distance: smallest });
    }
    let m = inside.len() as f64;
    let f_xn_h = m / distances.len() as f64;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for &u in &inside {
        let k = kernel_eval(spec, u);
        m1 += k;
        m2 += k * k;
    }
    m1 /= m;
    m2 /= m;
    let tau_curve: Vec<(f64, f64)> = (0..=100)
        .map(|i| {
            let u = i as f64 / 100.0;
            let count = inside.iter().filter(|&&v| v <= u).count();
            (u, count as f64 / m)
        })
        .collect();
    Ok(SmallBallEstimates { f_xn_h, tau_curve, m1, m2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn quadratic_values() {
        assert_relative_eq!(kernel_eval(KernelSpec::Quadratic, 0.0), 1.5);
        assert_eq!(kernel_eval(KernelSpec::Quadratic, 1.2), 0.0);
        assert_eq!(kernel_eval(KernelSpec::Quadratic, -0.3), 0.0);
        assert_relative_eq!(kernel_eval(KernelSpec::Quadratic, 0.5), 1.125);
    }

    #[test]
    fn trunc_gauss_values() {
        assert_relative_eq!(
            kernel_eval(KernelSpec::TruncGauss, 0.0),
            0.3989422804014327,
            epsilon = 1e-12
        );
        assert_eq!(kernel_eval(KernelSpec::TruncGauss, 1.0001), 0.0);
        // Untruncated variant keeps the same profile past 1.
        assert!(kernel_eval(KernelSpec::UnsafeGauss, 1.5) > 0.0);
        assert_relative_eq!(
            kernel_eval(KernelSpec::UnsafeGauss, 0.5),
            kernel_eval(KernelSpec::TruncGauss, 0.5)
        );
    }

    #[test]
    fn nw_weights_two_points() {
        let w = nw_weights(&[0.1, 0.2], 0.4, KernelSpec::Quadratic).unwrap();
        assert_relative_eq!(w.weights()[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(w.weights()[1], 4.0 / 9.0, epsilon = 1e-15);
        assert_eq!(w.effective_n(), 2);
    }

    #[test]
    fn nw_weights_empty_window() {
        let err = nw_weights(&[0.5, 0.9], 0.4, KernelSpec::Quadratic).unwrap_err();
        match err {
            Error::EmptyWindow { smallest_distance } => {
                assert_relative_eq!(smallest_distance, 0.5)
            }
            other => panic!("expected EmptyWindow, got {other:?}"),
        }
    }

    #[test]
    fn nw_weights_rejects_bad_input() {
        assert!(nw_weights(&[0.1, f64::NAN], 0.4, KernelSpec::Quadratic).is_err());
        assert!(nw_weights(&[0.1, -0.2], 0.4, KernelSpec::Quadratic).is_err());
        assert!(nw_weights(&[0.1], 0.0, KernelSpec::Quadratic).is_err());
        assert!(nw_weights(&[], 0.4, KernelSpec::Quadratic).is_err());
    }

    #[test]
    fn untruncated_gauss_reaches_far_points() {
        // Same distances that empty the truncated window still get weight.
        let w = nw_weights(&[0.5, 0.9], 0.4, KernelSpec::UnsafeGauss).unwrap();
        assert_eq!(w.effective_n(), 2);
        assert!(w.weights()[0] > w.weights()[1]);
    }

    #[test]
    fn small_ball_counts() {
        let d = [0.1, 0.2, 0.3];
        assert_relative_eq!(empirical_small_ball(&d, 0.2).unwrap(), 2.0 / 3.0);
        assert_relative_eq!(empirical_small_ball(&d, 0.05).unwrap(), 0.0);
        assert_relative_eq!(empirical_small_ball(&d, 1.0).unwrap(), 1.0);
        // Boundary is inclusive, including at zero.
        assert_relative_eq!(empirical_small_ball(&[0.0, 0.5], 0.0).unwrap(), 0.5);
    }

    #[test]
    fn tau_step_values() {
        let d = [0.1, 0.2, 0.4];
        assert_relative_eq!(tau_n(&d, 0.4, 0.5).unwrap(), 2.0 / 3.0);
        assert_relative_eq!(tau_n(&d, 0.4, 1.0).unwrap(), 1.0);
        assert!(matches!(
            tau_n(&d, 0.05, 0.5),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn moment_constants_linear_tau() {
        // τ(s) = s: m1 = ∫ K = 1 (kernel integrates to one), m2 = ∫ K² = 1.2.
        let (m1, m2) = moment_constants(KernelSpec::Quadratic, |s| s);
        assert_relative_eq!(m1, 1.0, epsilon = 1e-9);
        assert_relative_eq!(m2, 1.2, epsilon = 1e-9);
    }

    #[test]
    fn moment_constants_quadratic_tau() {
        // τ(s) = s²: m1 = ∫ (3/2)(1 − s²) · 2s ds = 3/4.
        let (m1, _) = moment_constants(KernelSpec::Quadratic, |s| s * s);
        assert_relative_eq!(m1, 0.75, epsilon = 1e-9);
    }

    #[test]
    fn empirical_moments_point_mass() {
        // All distances zero: τ ≡ 1 on [0, 1], so m_j = K^j(0).
        let sb = small_ball_estimates(KernelSpec::Quadratic, &[0.0, 0.0, 0.0], 0.5).unwrap();
        assert_relative_eq!(sb.m1, 1.5);
        assert_relative_eq!(sb.m2, 2.25);
        assert_relative_eq!(sb.f_xn_h, 1.0);
        assert_relative_eq!(sb.tau_curve[0].1, 1.0);
    }

    #[test]
    fn empirical_moments_match_handle_form() {
        // The Simpson evaluation of the step profile must agree with the
        // exact Stieltjes sum to quadrature accuracy.
        let d = [0.05, 0.1, 0.15, 0.2, 0.3, 0.45, 0.9];
        let h = 0.5;
        let sb = small_ball_estimates(KernelSpec::Quadratic, &d, h).unwrap();
        let tau = |u: f64| tau_n(&d, h, u).unwrap();
        let (m1, m2) = moment_constants(KernelSpec::Quadratic, tau);
        // Simpson on a step function converges ~1/N; just check proximity.
        assert_relative_eq!(sb.m1, m1, epsilon = 2e-2);
        assert_relative_eq!(sb.m2, m2, epsilon = 2e-2);
        assert_relative_eq!(sb.f_xn_h, 6.0 / 7.0);
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![0.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![-1.0, 2.0]).is_err());
        let w = WeightVector::new(vec![2.0, 0.0, 6.0]).unwrap();
        assert_relative_eq!(w.weights()[0], 0.25);
        assert_eq!(w.effective_n(), 2);
    }

    proptest! {
        // Weights always normalize and count positives correctly.
        #[test]
        fn weights_normalized(
            ds in proptest::collection::vec(0.0f64..2.0, 1..40),
            h in 0.05f64..3.0,
        ) {
            if let Ok(w) = nw_weights(&ds, h, KernelSpec::Quadratic) {
                let sum: f64 = w.weights().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(w.weights().iter().all(|&x| x >= 0.0));
                prop_assert_eq!(
                    w.effective_n(),
                    w.weights().iter().filter(|&&x| x > 0.0).count()
                );
            }
        }

        // Rescaling distances and bandwidth together leaves weights unchanged.
        // Powers of two keep the quotient d/h bit-identical, so equality is exact.
        #[test]
        fn weights_scale_coupling_exact(
            ds in proptest::collection::vec(0.0f64..2.0, 1..30),
            h in 0.05f64..3.0,
            pow in -8i32..9,
        ) {
            let c = (2.0f64).powi(pow);
            let scaled: Vec<f64> = ds.iter().map(|d| d * c).collect();
            let a = nw_weights(&ds, h, KernelSpec::TruncGauss);
            let b = nw_weights(&scaled, h * c, KernelSpec::TruncGauss);
            match (a, b) {
                (Ok(wa), Ok(wb)) => prop_assert_eq!(wa.weights(), wb.weights()),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "scale coupling changed the outcome"),
            }
        }

        // τ is a CDF-like profile: nondecreasing in u with τ(1) = 1.
        #[test]
        fn tau_monotone(
            ds in proptest::collection::vec(0.0f64..2.0, 1..40),
            h in 0.05f64..3.0,
            u1 in 0.0f64..1.0,
            u2 in 0.0f64..1.0,
        ) {
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            if let (Ok(tl), Ok(th), Ok(t1)) =
                (tau_n(&ds, h, lo), tau_n(&ds, h, hi), tau_n(&ds, h, 1.0))
            {
                prop_assert!(tl <= th);
                prop_assert!((t1 - 1.0).abs() < 1e-15);
            }
        }

        // Moment constants stay positive whenever some mass lies strictly
        // inside the window.
        #[test]
        fn moments_positive(
            ds in proptest::collection::vec(0.0f64..1.0, 1..40),
            h in 1.001f64..3.0,
        ) {
            // h > max distance guarantees a non-empty window with an
            // interior point (all u = d/h < 1).
            let sb = small_ball_estimates(KernelSpec::Quadratic, &ds, h).unwrap();
            prop_assert!(sb.m1 > 0.0);
            prop_assert!(sb.m2 > 0.0);
            prop_assert!(sb.f_xn_h > 0.0 && sb.f_xn_h <= 1.0);
        }
    }
}

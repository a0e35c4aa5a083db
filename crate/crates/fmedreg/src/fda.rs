//! Functional-data plumbing: observation grids, curve samples, functional
//! PCA, and semi-metrics between curves.
//!
//! Curves are observed on one shared, strictly increasing grid. Integrals
//! are trapezoid sums throughout, so every inner product and norm uses the
//! grid's quadrature weights. Three semi-metrics are supported:
//!
//! * `Deriv2` — L2 distance between second derivatives (finite differences);
//! * `Fpca`  — Euclidean distance between leading FPCA score vectors;
//! * `RawL2` — plain L2 distance between the curves.
//!
//! Each curve is first mapped to a feature vector (derivative curve, score
//! vector, or the curve itself) and distances are computed between features;
//! batch helpers cache the features per curve, which makes them agree
//! bit-for-bit with the one-pair evaluation.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Strictly increasing observation grid with precomputed trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    quad_weights: Vec<f64>,
}

impl Grid {
    /// Validate and build a grid. Requires at least 3 strictly increasing,
    /// finite abscissae (second derivatives need 3 points).
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Invalid(format!(
                "grid needs at least 3 points, got {}",
                points.len()
            )));
        }
        for (i, &t) in points.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Invalid(format!("grid point {i} is not finite")));
            }
            if i > 0 && t <= points[i - 1] {
                return Err(Error::Invalid(format!(
                    "grid must be strictly increasing (violated at index {i})"
                )));
            }
        }
        let p = points.len();
        let mut quad_weights = vec![0.0; p];
        quad_weights[0] = (points[1] - points[0]) / 2.0;
        quad_weights[p - 1] = (points[p - 1] - points[p - 2]) / 2.0;
        for i in 1..p - 1 {
            quad_weights[i] = (points[i + 1] - points[i - 1]) / 2.0;
        }
        Ok(Grid { points, quad_weights })
    }

    /// Equispaced grid of `p` points on `[a, b]`.
    pub fn equispaced(p: usize, a: f64, b: f64) -> Result<Self> {
        if p < 3 || !(b > a) {
            return Err(Error::Invalid(format!(
                "equispaced grid needs p >= 3 and b > a (got p = {p}, [{a}, {b}])"
            )));
        }
        let step = (b - a) / (p - 1) as f64;
        Grid::new((0..p).map(|i| a + i as f64 * step).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Trapezoid quadrature weights (positive, sum to the grid span).
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Trapezoid integral of values sampled on this grid.
    pub fn trapezoid(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::Dimension(format!(
                "expected {} values on the grid, got {}",
                self.len(),
                values.len()
            )));
        }
        Ok(self
            .quad_weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum())
    }
}

/// Sample of `n` curves observed on a common grid (rows are curves).
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    grid: Grid,
    values: DMatrix<f64>,
}

impl FunctionalSample {
    pub fn new(grid: Grid, values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(Error::Shape(format!(
                "curves have {} columns but the grid has {} points",
                values.ncols(),
                grid.len()
            )));
        }
        if values.nrows() == 0 {
            return Err(Error::Shape("functional sample must contain at least one curve".into()));
        }
        if let Some((i, j)) = find_non_finite(&values) {
            return Err(Error::Invalid(format!("curve {i} has a non-finite value at grid index {j}")));
        }
        Ok(FunctionalSample { grid, values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Curve `i` copied into a contiguous vector.
    pub fn curve(&self, i: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|j| self.values[(i, j)]).collect()
    }
}

fn find_non_finite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return Some((i, j));
            }
        }
    }
    None
}

/// Second derivative by 3-point divided differences on a possibly
/// non-uniform grid: centered in the interior, one-sided (first/last three
/// points) at the boundary. Exact for quadratics, annihilates affine curves.
pub fn second_derivative(grid: &Grid, x: &[f64]) -> Result<Vec<f64>> {
    let p = grid.len();
    if x.len() != p {
        return Err(Error::Dimension(format!(
            "curve has {} values but the grid has {p} points",
            x.len()
        )));
    }
    let t = grid.points();
    let dd = |a: usize, b: usize, c: usize| -> f64 {
        let s1 = (x[b] - x[a]) / (t[b] - t[a]);
        let s2 = (x[c] - x[b]) / (t[c] - t[b]);
        2.0 * (s2 - s1) / (t[c] - t[a])
    };
    let mut out = vec![0.0; p];
    out[0] = dd(0, 1, 2);
    for i in 1..p - 1 {
        out[i] = dd(i - 1, i, i + 1);
    }
    out[p - 1] = dd(p - 3, p - 2, p - 1);
    Ok(out)
}

/// Fitted functional PCA basis: mean curve, leading components (rows), and
/// their eigenvalues, all tied to the fitting grid.
#[derive(Debug, Clone)]
pub struct FpcaBasis {
    grid: Grid,
    mean: DVector<f64>,
    /// `q × p`; row `j` is component `j`, unit-norm under the grid's
    /// quadrature and signed so its largest-magnitude entry is positive.
    components: DMatrix<f64>,
    /// Leading `q` eigenvalues, nonincreasing, clamped at 0.
    eigenvalues: Vec<f64>,
    /// Sum of all (clamped) eigenvalues — total sample variance.
    total_variance: f64,
}

impl FpcaBasis {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// Number of retained components.
    pub fn q(&self) -> usize {
        self.components.nrows()
    }

    /// Projection scores `s_j = ∫ (x − mean) f_j` of one curve.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.grid.len();
        if x.len() != p {
            return Err(Error::Dimension(format!(
                "curve has {} values but the basis grid has {p} points",
                x.len()
            )));
        }
        let w = self.grid.quad_weights();
        let q = self.q();
        let mut s = vec![0.0; q];
        for j in 0..q {
            let mut acc = 0.0;
            for k in 0..p {
                acc += w[k] * (x[k] - self.mean[k]) * self.components[(j, k)];
            }
            s[j] = acc;
        }
        Ok(s)
    }
}

/// Fit a functional PCA basis with `q` components.
///
/// The discretized covariance operator (divisor `n − 1`) is symmetrized by
/// the quadrature weights — with `W = diag(quad weights)` the eigenproblem
/// solved is `W^{1/2} C W^{1/2} g = λ g`, and components are `W^{-1/2} g` —
/// so the retained components are exactly orthonormal in the quadrature
/// inner product and score variances equal the eigenvalues.
pub fn fit_fpca(sample: &FunctionalSample, q: usize) -> Result<FpcaBasis> {
    let n = sample.n();
    let p = sample.grid().len();
    if n < 2 {
        return Err(Error::Dimension(format!("FPCA needs at least 2 curves, got {n}")));
    }
    let q_max = (n - 1).min(p);
    if q == 0 || q > q_max {
        return Err(Error::Dimension(format!(
            "component count q = {q} out of range 1..={q_max} (n = {n}, p = {p})"
        )));
    }

    let values = sample.values();
    let mut mean = DVector::zeros(p);
    for j in 0..p {
        let mut acc = 0.0;
        for i in 0..n {
            acc += values[(i, j)];
        }
        mean[j] = acc / n as f64;
    }

    let w = sample.grid().quad_weights();
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();

    // B = W^{1/2} C W^{1/2} built as A^t A / (n−1), A_{ij} = (x_ij − mean_j) √w_j.
    let mut a = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            a[(i, j)] = (values[(i, j)] - mean[j]) * sqrt_w[j];
        }
    }
    let b = a.transpose() * &a / (n as f64 - 1.0);

    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());

    let total_variance: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    let mut components = DMatrix::zeros(q, p);
    let mut eigenvalues = Vec::with_capacity(q);
    for (row, &col) in order.iter().take(q).enumerate() {
        eigenvalues.push(eig.eigenvalues[col].max(0.0));
        // Component = W^{-1/2} g, signed so the largest-|entry| is positive.
        let mut comp: Vec<f64> = (0..p).map(|k| eig.eigenvectors[(k, col)] / sqrt_w[k]).collect();
        let mut arg = 0usize;
        for k in 1..p {
            if comp[k].abs() > comp[arg].abs() {
                arg = k;
            }
        }
        if comp[arg] < 0.0 {
            comp.iter_mut().for_each(|v| *v = -*v);
        }
        for k in 0..p {
            components[(row, k)] = comp[k];
        }
    }

    Ok(FpcaBasis {
        grid: sample.grid().clone(),
        mean,
        components,
        eigenvalues,
        total_variance,
    })
}

/// A semi-metric choice before it is bound to a learning sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SemiMetricKind {
    /// Second-derivative L2 distance.
    Deriv2,
    /// FPCA-score distance with `q` components.
    Fpca { q: usize },
    /// Raw L2 distance.
    RawL2,
}

impl SemiMetricKind {
    /// Bind the choice to a learning sample (fits an FPCA basis if needed).
    pub fn realize(self, sample: &FunctionalSample) -> Result<SemiMetric> {
        match self {
            SemiMetricKind::Deriv2 => Ok(SemiMetric::Deriv2),
            SemiMetricKind::RawL2 => Ok(SemiMetric::RawL2),
            SemiMetricKind::Fpca { q } => Ok(SemiMetric::Fpca(fit_fpca(sample, q)?)),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            SemiMetricKind::Deriv2 => "deriv2".into(),
            SemiMetricKind::Fpca { q } => format!("fpca:{q}"),
            SemiMetricKind::RawL2 => "rawl2".into(),
        }
    }
}

/// Semi-metric between curves on a shared grid.
#[derive(Debug, Clone)]
pub enum SemiMetric {
    /// L2 distance between 3-point finite-difference second derivatives.
    Deriv2,
    /// Euclidean distance between leading FPCA scores under a fitted basis.
    Fpca(FpcaBasis),
    /// L2 distance between the raw curves.
    RawL2,
}

impl SemiMetric {
    /// Short tag used in reports and CLI output.
    pub fn tag(&self) -> String {
        match self {
            SemiMetric::Deriv2 => "deriv2".into(),
            SemiMetric::Fpca(b) => format!("fpca:{}", b.q()),
            SemiMetric::RawL2 => "rawl2".into(),
        }
    }

    /// Per-curve feature vector; distances compare features.
    fn features(&self, grid: &Grid, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            SemiMetric::Deriv2 => second_derivative(grid, x),
            SemiMetric::Fpca(basis) => {
                if basis.grid().len() != grid.len() {
                    return Err(Error::Dimension(format!(
                        "FPCA basis grid has {} points, curves have {}",
                        basis.grid().len(),
                        grid.len()
                    )));
                }
                basis.scores(x)
            }
            SemiMetric::RawL2 => {
                if x.len() != grid.len() {
                    return Err(Error::Dimension(format!(
                        "curve has {} values but the grid has {} points",
                        x.len(),
                        grid.len()
                    )));
                }
                Ok(x.to_vec())
            }
        }
    }

    /// Distance between feature vectors: quadrature L2 for curve-valued
    /// features, Euclidean for score vectors.
    fn feature_distance(&self, grid: &Grid, f1: &[f64], f2: &[f64]) -> f64 {
        match self {
            SemiMetric::Fpca(_) => {
                let mut s = 0.0;
                for (a, b) in f1.iter().zip(f2) {
                    let t = a - b;
                    s += t * t;
                }
                s.sqrt()
            }
            SemiMetric::Deriv2 | SemiMetric::RawL2 => {
                let w = grid.quad_weights();
                let mut s = 0.0;
                for k in 0..f1.len() {
                    let t = f1[k] - f2[k];
                    s += w[k] * t * t;
                }
                s.sqrt()
            }
        }
    }
}

/// Semi-metric distance between two curves on `grid`.
pub fn semimetric_eval(spec: &SemiMetric, grid: &Grid, x1: &[f64], x2: &[f64]) -> Result<f64> {
    let f1 = spec.features(grid, x1)?;
    let f2 = spec.features(grid, x2)?;
    Ok(spec.feature_distance(grid, &f1, &f2))
}

/// All distances `d(x0, X_i)` from one curve to a sample (features cached).
pub fn distances_to(sample: &FunctionalSample, spec: &SemiMetric, x0: &[f64]) -> Result<Vec<f64>> {
    let grid = sample.grid();
    let f0 = spec.features(grid, x0)?;
    let mut out = Vec::with_capacity(sample.n());
    for i in 0..sample.n() {
        let fi = spec.features(grid, &sample.curve(i))?;
        out.push(spec.feature_distance(grid, &f0, &fi));
    }
    Ok(out)
}

/// Full symmetric pairwise distance matrix of a sample (features cached).
pub fn pairwise_distances(sample: &FunctionalSample, spec: &SemiMetric) -> Result<DMatrix<f64>> {
    let grid = sample.grid();
    let n = sample.n();
    let feats: Vec<Vec<f64>> = (0..n)
        .map(|i| spec.features(grid, &sample.curve(i)))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = spec.feature_distance(grid, &feats[i], &feats[j]);
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    Ok(m)
}

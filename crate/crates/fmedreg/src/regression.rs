//! Conditional median predictors for functional covariates.
//!
//! Three estimators share one kernel-weighting backbone:
//!
//! * `Cmm` — conditional multivariate median: the weighted spatial median of
//!   the responses (the headline estimator; supports inference);
//! * `Vccm` — vector of conditional component medians: per-component
//!   generalized inverse of the weighted conditional CDF at 1/2;
//! * `Nf` — naive flattening: treats discretized curves as plain Euclidean
//!   vectors and applies the spatial median (a baseline).
//!
//! Bandwidths are either fixed or k-nearest-neighbour rules resolved per
//! query point, selected by leave-one-out L1 cross-validation, and
//! transferable to new curves via the nearest learning curve's rule.

use crate::error::{Error, Result};
use crate::fda::{self, FunctionalSample, SemiMetric};
use crate::geomedian::{self, weiszfeld};
use crate::kernel::{kernel_eval, nw_weights, KernelSpec, WeightVector};
use crate::stats::quantile_sorted;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Which conditional-median estimator a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Conditional multivariate (spatial) median.
    Cmm,
    /// Vector of conditional component-wise medians.
    Vccm,
    /// Naive flattening: raw curves as Euclidean vectors.
    Nf,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Cmm => "cmm",
            Method::Vccm => "vccm",
            Method::Nf => "nf",
        }
    }
}

/// Bandwidth policy resolved against the distances at a query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandwidthRule {
    /// Fixed bandwidth `h > 0`.
    FixedH { h: f64 },
    /// `h` slightly above the distance to the `k`-th nearest neighbour
    /// (closed window: at least `k` points inside).
    Knn { k: usize },
}

impl BandwidthRule {
    pub fn fixed(h: f64) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::Invalid(format!("fixed bandwidth must be finite and > 0, got {h}")));
        }
        Ok(BandwidthRule::FixedH { h })
    }

    pub fn knn(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("k-nearest-neighbour rule needs k >= 1".into()));
        }
        Ok(BandwidthRule::Knn { k })
    }

    /// Resolve to a concrete bandwidth given the distances from the query
    /// point to the learning curves.
    ///
    /// The k-NN bandwidth is `(1 + 1e-9) × d_(k)` so the k-th neighbour lies
    /// strictly inside the window even for kernels vanishing at 1. When
    /// `d_(k) = 0` (k duplicates of the query) the window degenerates; the
    /// rule then shrinks the bandwidth below the smallest positive distance
    /// so exactly the coincident curves carry weight.
    pub fn resolve(&self, distances: &[f64]) -> Result<f64> {
        match *self {
            BandwidthRule::FixedH { h } => Ok(h),
            BandwidthRule::Knn { k } => {
                if k > distances.len() {
                    return Err(Error::Invalid(format!(
                        "k = {k} exceeds the {} available learning curves",
                        distances.len()
                    )));
                }
                let mut d = distances.to_vec();
                let (_, kth, _) = d.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
                let dk = *kth;
                let h = (1.0 + 1e-9) * dk;
                if h > 0.0 {
                    return Ok(h);
                }
                match distances.iter().cloned().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
                {
                    pos if pos.is_finite() => Ok(pos * 1e-9),
                    _ => Ok(1.0), // every curve coincides with the query
                }
            }
        }
    }

    pub fn tag(&self) -> String {
        match self {
            BandwidthRule::FixedH { h } => format!("h={h}"),
            BandwidthRule::Knn { k } => format!("knn={k}"),
        }
    }
}

/// A ready-to-predict model: learning data plus estimation policy.
#[derive(Debug, Clone)]
pub struct FittedModel {
    covariates: FunctionalSample,
    responses: DMatrix<f64>,
    /// Row-major copy of the responses (hot path for median solves).
    response_rows: Vec<f64>,
    semimetric: SemiMetric,
    kernel: KernelSpec,
    bandwidth: BandwidthRule,
    method: Method,
}

impl FittedModel {
    /// Validate and assemble a model. `Cmm` and `Nf` need `d ≥ 2` responses
    /// (the spatial median is multivariate); `Vccm` accepts `d ≥ 1`.
    pub fn new(
        covariates: FunctionalSample,
        responses: DMatrix<f64>,
        semimetric: SemiMetric,
        kernel: KernelSpec,
        bandwidth: BandwidthRule,
        method: Method,
    ) -> Result<Self> {
        let n = covariates.n();
        let d = responses.ncols();
        if responses.nrows() != n {
            return Err(Error::Shape(format!(
                "{} curves but {} response rows",
                n,
                responses.nrows()
            )));
        }
        if d == 0 {
            return Err(Error::Shape("responses must have at least one column".into()));
        }
        if matches!(method, Method::Cmm | Method::Nf) && d < 2 {
            return Err(Error::Dimension(format!(
                "{} needs multivariate responses (d >= 2), got d = {d}; use vccm for univariate",
                method.tag()
            )));
        }
        for i in 0..n {
            for j in 0..d {
                if !responses[(i, j)].is_finite() {
                    return Err(Error::Invalid(format!(
                        "response ({i}, {j}) is not finite"
                    )));
                }
            }
        }
        let mut response_rows = Vec::with_capacity(n * d);
        for i in 0..n {
            for j in 0..d {
                response_rows.push(responses[(i, j)]);
            }
        }
        Ok(FittedModel {
            covariates,
            responses,
            response_rows,
            semimetric,
            kernel,
            bandwidth,
            method,
        })
    }

    pub fn n(&self) -> usize {
        self.covariates.n()
    }

    /// Response dimension `d`.
    pub fn dim(&self) -> usize {
        self.responses.ncols()
    }

    pub fn covariates(&self) -> &FunctionalSample {
        &self.covariates
    }

    pub fn responses(&self) -> &DMatrix<f64> {
        &self.responses
    }

    pub fn semimetric(&self) -> &SemiMetric {
        &self.semimetric
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn bandwidth(&self) -> BandwidthRule {
        self.bandwidth
    }

    pub fn set_bandwidth(&mut self, rule: BandwidthRule) {
        self.bandwidth = rule;
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Distances from a query curve to every learning curve: the model's
    /// semi-metric for `Cmm`/`Vccm`, plain Euclidean distance between raw
    /// discretized curves for `Nf`.
    pub fn distances_to(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.method {
            Method::Nf => {
                let p = self.covariates.grid().len();
                if x.len() != p {
                    return Err(Error::Dimension(format!(
                        "query curve has {} values but the sample grid has {p}",
                        x.len()
                    )));
                }
                let values = self.covariates.values();
                let mut out = Vec::with_capacity(self.n());
                for i in 0..self.n() {
                    let mut s = 0.0;
                    for j in 0..p {
                        let t = values[(i, j)] - x[j];
                        s += t * t;
                    }
                    out.push(s.sqrt());
                }
                Ok(out)
            }
            _ => fda::distances_to(&self.covariates, &self.semimetric, x),
        }
    }

    /// Kernel weights at a query curve under this model's bandwidth rule.
    pub fn weights_at(&self, x: &[f64]) -> Result<(WeightVector, f64)> {
        let distances = self.distances_to(x)?;
        let h = self.bandwidth.resolve(&distances)?;
        let w = nw_weights(&distances, h, self.kernel)?;
        Ok((w, h))
    }

    /// Predict at a query curve with the model's bandwidth rule.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.predict_with_rule(x, &self.bandwidth)
    }

    /// Predict at a query curve with an explicit bandwidth rule (used by
    /// bandwidth transfer).
    pub fn predict_with_rule(&self, x: &[f64], rule: &BandwidthRule) -> Result<Prediction> {
        let distances = self.distances_to(x)?;
        let h = rule.resolve(&distances)?;
        let weights = nw_weights(&distances, h, self.kernel)?;
        let y_hat = self.point_estimate(&weights)?;
        Ok(Prediction { y_hat, weights_used: weights, h_used: h, method: self.method })
    }

    /// The point estimate given prepared weights.
    fn point_estimate(&self, weights: &WeightVector) -> Result<DVector<f64>> {
        match self.method {
            Method::Cmm | Method::Nf => Ok(self.weighted_spatial_median(weights)),
            Method::Vccm => self.componentwise_median(weights),
        }
    }

    fn weighted_spatial_median(&self, weights: &WeightVector) -> DVector<f64> {
        let sol = weiszfeld(
            &self.response_rows,
            self.n(),
            self.dim(),
            weights,
            response_eps(&self.response_rows, self.n(), self.dim(), weights),
            geomedian::DEFAULT_TOL,
            geomedian::DEFAULT_MAX_ITER,
        );
        sol.point
    }

    fn componentwise_median(&self, weights: &WeightVector) -> Result<DVector<f64>> {
        let d = self.dim();
        let w = weights.weights();
        let mut out = DVector::zeros(d);
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(weights.effective_n());
        for j in 0..d {
            pairs.clear();
            for i in 0..self.n() {
                if w[i] > 0.0 {
                    pairs.push((self.responses[(i, j)], w[i]));
                }
            }
            out[j] = weighted_median_1d(&mut pairs);
        }
        Ok(out)
    }

    /// Weighted conditional CDF of response component `j` at `y`:
    /// `F̂(y | x) = Σ_k w_k(x) 1{Y_kj ≤ y}`.
    pub fn conditional_cdf(&self, x: &[f64], j: usize, y: f64) -> Result<f64> {
        if j >= self.dim() {
            return Err(Error::Dimension(format!(
                "component {j} out of range for d = {}",
                self.dim()
            )));
        }
        let (weights, _) = self.weights_at(x)?;
        let w = weights.weights();
        let mut acc = 0.0;
        for i in 0..self.n() {
            if self.responses[(i, j)] <= y {
                acc += w[i];
            }
        }
        Ok(acc)
    }
}

/// Singularity threshold for the response cloud (same convention as
/// `PointCloud`): `1e-10 × (diameter scale + 1)`.
fn response_eps(rows: &[f64], n: usize, d: usize, weights: &WeightVector) -> f64 {
    let w = weights.weights();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        if w[i] > 0.0 {
            for j in 0..d {
                mean[j] += w[i] * rows[i * d + j];
            }
        }
    }
    let mut max_r2: f64 = 0.0;
    for i in 0..n {
        if w[i] > 0.0 {
            let mut s = 0.0;
            for j in 0..d {
                let t = rows[i * d + j] - mean[j];
                s += t * t;
            }
            max_r2 = max_r2.max(s);
        }
    }
    1e-10 * (2.0 * max_r2.sqrt() + 1.0)
}

/// Generalized inverse at 1/2 of a weighted empirical CDF: the smallest
/// observed value whose cumulative weight reaches 1/2 (tiny slack absorbs
/// floating-point summation).
fn weighted_median_1d(pairs: &mut [(f64, f64)]) -> f64 {
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut cum = 0.0;
    for &(v, w) in pairs.iter() {
        cum += w;
        if cum >= 0.5 - 1e-12 {
            return v;
        }
    }
    pairs.last().expect("non-empty weighted support").0
}

/// One prediction with its provenance.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Estimated conditional median.
    pub y_hat: DVector<f64>,
    /// The kernel weights that produced it.
    pub weights_used: WeightVector,
    /// The resolved bandwidth.
    pub h_used: f64,
    /// Which estimator produced it.
    pub method: Method,
}

/// Candidate set for bandwidth selection.
#[derive(Debug, Clone)]
pub enum CandidateGrid {
    /// Fixed bandwidth values (ascending).
    FixedH(Vec<f64>),
    /// Neighbour counts (ascending).
    Knn(Vec<usize>),
}

/// One cross-validation row: candidate, total L1 error, empty folds.
#[derive(Debug, Clone, Serialize)]
pub struct CvRecord {
    pub rule: BandwidthRule,
    pub score: f64,
    pub empty_folds: usize,
}

/// Pairwise distances between a model's learning curves under its
/// prediction distance (semi-metric, or Euclidean for `Nf`).
pub fn pairwise_for_model(model: &FittedModel) -> Result<DMatrix<f64>> {
    match model.method {
        Method::Nf => {
            let values = model.covariates.values();
            let (n, p) = values.shape();
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    let mut s = 0.0;
                    for k in 0..p {
                        let t = values[(i, k)] - values[(j, k)];
                        s += t * t;
                    }
                    let dist = s.sqrt();
                    m[(i, j)] = dist;
                    m[(j, i)] = dist;
                }
            }
            Ok(m)
        }
        _ => fda::pairwise_distances(&model.covariates, &model.semimetric),
    }
}

/// Default fixed-bandwidth candidates: empirical quantiles of the positive
/// pairwise distances at 15 log-spaced levels between 5% and 95%.
pub fn quantile_h_candidates(pairwise: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = pairwise.nrows();
    let mut d: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(pairwise[(i, j)]);
        }
    }
    if d.is_empty() {
        return Err(Error::Invalid("need at least two curves for a bandwidth grid".into()));
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo: f64 = 0.05;
    let hi: f64 = 0.95;
    let ratio = (hi / lo).ln();
    let mut out = Vec::with_capacity(15);
    for i in 0..15 {
        let level = lo * (ratio * i as f64 / 14.0).exp();
        let q = quantile_sorted(&d, level);
        if q > 0.0 && out.last().map_or(true, |&prev| q > prev) {
            out.push(q);
        }
    }
    if out.is_empty() {
        return Err(Error::BandwidthSelection { candidates: 15 });
    }
    Ok(out)
}

/// Default neighbour-count candidates `{3, 5, …, min(41, n−1)}`.
pub fn knn_candidates(n: usize) -> Vec<usize> {
    let cap = 41.min(n.saturating_sub(1));
    (3..=cap).step_by(2).collect()
}

/// Leave-one-out L1 cross-validation over a candidate grid.
///
/// For each candidate the score is `Σ_i ‖Y_i − μ̂_{(−i)}(X_i)‖`; a fold whose
/// kernel window empties contributes a disqualifying penalty of ten times
/// the sample's total deviation from its mean. Ties pick the smaller
/// bandwidth / neighbour count.
///
/// # Errors
///
/// [`Error::BandwidthSelection`] when every candidate has at least one
/// empty-window fold.
pub fn bandwidth_cv_l1(
    model: &FittedModel,
    grid: &CandidateGrid,
) -> Result<(BandwidthRule, Vec<CvRecord>)> {
    let pairwise = pairwise_for_model(model)?;
    bandwidth_cv_l1_with(model, grid, &pairwise)
}

/// [`bandwidth_cv_l1`] against a precomputed pairwise distance matrix.
pub fn bandwidth_cv_l1_with(
    model: &FittedModel,
    grid: &CandidateGrid,
    pairwise: &DMatrix<f64>,
) -> Result<(BandwidthRule, Vec<CvRecord>)> {
    let n = model.n();
    if pairwise.nrows() != n || pairwise.ncols() != n {
        return Err(Error::Shape(format!(
            "pairwise matrix is {}x{}, expected {n}x{n}",
            pairwise.nrows(),
            pairwise.ncols()
        )));
    }
    if n < 2 {
        return Err(Error::Invalid("cross-validation needs at least two curves".into()));
    }
    let candidates: Vec<BandwidthRule> = match grid {
        CandidateGrid::FixedH(hs) => {
            let mut hs = hs.clone();
            hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            hs.dedup();
            hs.into_iter().map(BandwidthRule::fixed).collect::<Result<_>>()?
        }
        CandidateGrid::Knn(ks) => {
            let mut ks = ks.clone();
            ks.sort_unstable();
            ks.dedup();
            if let Some(&bad) = ks.iter().find(|&&k| k > n - 1) {
                return Err(Error::Invalid(format!(
                    "k = {bad} too large for leave-one-out with n = {n} (max {})",
                    n - 1
                )));
            }
            ks.into_iter().map(BandwidthRule::knn).collect::<Result<_>>()?
        }
    };
    if candidates.is_empty() {
        return Err(Error::Invalid("empty candidate grid".into()));
    }

    // Disqualifying penalty: 10 × total deviation of the responses from
    // their mean, charged per empty fold.
    let d = model.dim();
    let mut ybar = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            ybar[j] += model.responses[(i, j)] / n as f64;
        }
    }
    let mut total_dev = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..d {
            let t = model.responses[(i, j)] - ybar[j];
            s += t * t;
        }
        total_dev += s.sqrt();
    }
    let penalty = 10.0 * total_dev;

    // Scratch buffers reused across folds.
    let mut dist_i = vec![0.0; n];
    let mut others = vec![0.0; n - 1];
    let mut raw = vec![0.0; n];

    let mut records = Vec::with_capacity(candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for (ci, cand) in candidates.iter().enumerate() {
        let mut score = 0.0;
        let mut empty_folds = 0usize;
        for i in 0..n {
            for j in 0..n {
                dist_i[j] = pairwise[(j, i)];
            }
            // Resolve the candidate on the left-out fold's distances.
            let h = match *cand {
                BandwidthRule::FixedH { h } => h,
                BandwidthRule::Knn { k } => {
                    let mut m = 0;
                    for j in 0..n {
                        if j != i {
                            others[m] = dist_i[j];
                            m += 1;
                        }
                    }
                    BandwidthRule::Knn { k }.resolve(&others[..m])?
                }
            };
            let mut sum = 0.0;
            for j in 0..n {
                let v = if j == i { 0.0 } else { kernel_eval(model.kernel, dist_i[j] / h) };
                raw[j] = v;
                sum += v;
            }
            if sum <= 0.0 {
                score += penalty;
                empty_folds += 1;
                continue;
            }
            let weights = WeightVector::new(raw.clone()).expect("validated nonzero weights");
            let y_hat = model.point_estimate(&weights)?;
            let mut s = 0.0;
            for j in 0..d {
                let t = model.responses[(i, j)] - y_hat[j];
                s += t * t;
            }
            score += s.sqrt();
        }
        records.push(CvRecord { rule: *cand, score, empty_folds });
        if empty_folds == 0 {
            // Candidates are ascending; strict improvement keeps the
            // smaller bandwidth on ties.
            if best.map_or(true, |(_, b)| score < b) {
                best = Some((ci, score));
            }
        }
    }

    match best {
        Some((ci, _)) => Ok((candidates[ci], records)),
        None => Err(Error::BandwidthSelection { candidates: candidates.len() }),
    }
}

/// Resolve a model's bandwidth rule at each learning curve (leave-one-out
/// distances), yielding the concrete per-curve bandwidths that bandwidth
/// transfer hands to test curves.
pub fn resolved_loo_bandwidths(model: &FittedModel) -> Result<Vec<BandwidthRule>> {
    let pairwise = pairwise_for_model(model)?;
    let n = model.n();
    let mut out = Vec::with_capacity(n);
    let mut others = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let mut m = 0;
        for j in 0..n {
            if j != i {
                others[m] = pairwise[(j, i)];
                m += 1;
            }
        }
        let h = model.bandwidth.resolve(&others[..m])?;
        out.push(BandwidthRule::FixedH { h });
    }
    Ok(out)
}

/// Bandwidth transfer: a new curve reuses the rule attached to its nearest
/// learning curve (ties resolve to the smallest index).
pub fn transfer_bandwidth(
    model: &FittedModel,
    x: &[f64],
    per_sample_rules: &[BandwidthRule],
) -> Result<BandwidthRule> {
    let n = model.n();
    if per_sample_rules.len() != n {
        return Err(Error::Shape(format!(
            "{} per-curve rules for {n} learning curves",
            per_sample_rules.len()
        )));
    }
    let distances = model.distances_to(x)?;
    let mut arg = 0usize;
    for i in 1..n {
        if distances[i] < distances[arg] {
            arg = i;
        }
    }
    Ok(per_sample_rules[arg])
}

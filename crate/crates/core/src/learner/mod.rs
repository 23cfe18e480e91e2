//! RBF-kernel support vector classifier with sigmoid calibration and
//! cross-validated `(C, gamma)` selection.
//!
//! ```
//! use patchleak::learner::{train, calibrate, KernelParams};
//!
//! let xs = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
//! let ys = vec![false, false, true, true];
//! let model = train(&xs, &ys, KernelParams::new(10.0, 1.0).unwrap()).unwrap();
//! assert!(model.decision_value(&[0.0, 1.0]).unwrap() > 0.0);
//! assert!(model.decision_value(&[1.0, 1.0]).unwrap() < 0.0);
//! let model = calibrate(model, &xs, &ys, 7).unwrap();
//! let p = model.score(&[0.0, 1.0]).unwrap();
//! assert!((0.0..=1.0).contains(&p));
//! ```

mod grid;
mod kernel;
mod platt;
mod smo;

pub use grid::{cv_accuracy, default_grid, grid_search, GridResult};
pub use platt::{Sigmoid, MAX_SLOPE};

use kernel::SparseVec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;

pub const MODEL_FORMAT: &str = "patchleak-svm";
pub const MODEL_VERSION: u32 = 1;

/// Folds used for out-of-fold calibration scores.
pub const CALIBRATION_FOLDS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("training set has a single class")]
    SingleClassTrainingSet,
    #[error("solver hit the iteration cap after {} pair updates", .model.iterations)]
    NonConvergence { model: Box<TrainedModel> },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("cannot stratify: every fold needs both classes in its training part")]
    SingleClassFold,
    #[error("model has no calibration")]
    UncalibratedModel,
    #[error("model serialization: {0}")]
    Serialization(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub c: f64,
    pub gamma: f64,
}

impl KernelParams {
    pub fn new(c: f64, gamma: f64) -> Result<Self, LearnerError> {
        let p = Self { c, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(LearnerError::InvalidParams(format!("C must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(LearnerError::InvalidParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    /// `C = 1`, `gamma = 1 / dim`.
    pub fn fallback(dim: usize) -> Self {
        Self { c: 1.0, gamma: 1.0 / dim.max(1) as f64 }
    }
}

pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64, LearnerError> {
    if x.len() != y.len() {
        return Err(LearnerError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-gamma * d).exp())
}

/// Solver settings. The defaults stop at a KKT gap of `1e-3` and allow
/// `10^7` pair updates.
#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub eps: f64,
    pub max_iter: u64,
    pub cache_bytes: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { eps: 1e-3, max_iter: 10_000_000, cache_bytes: 128 << 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    pub params: KernelParams,
    pub dim: usize,
    pub support_vectors: Vec<FeatureVector>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub calibration: Option<Sigmoid>,
    /// Position of each support vector in the training data.
    pub support_indices: Vec<usize>,
    pub converged: bool,
    pub iterations: u64,
    #[serde(skip)]
    sparse: Vec<SparseVec>,
}

impl TrainedModel {
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, LearnerError> {
        self.check_dim(x)?;
        Ok(self.decision_sparse(&SparseVec::from_dense(x)))
    }

    fn decision_sparse(&self, x: &SparseVec) -> f64 {
        let gamma = self.params.gamma;
        let sum: f64 = self.sparse.iter().zip(&self.dual_coefficients).map(|(sv, coef)| coef * sv.rbf(x, gamma)).sum();
        sum + self.bias
    }

    /// Calibrated probability of the positive class.
    pub fn score(&self, x: &[f64]) -> Result<f64, LearnerError> {
        let sig = self.calibration.ok_or(LearnerError::UncalibratedModel)?;
        Ok(sig.probability(self.decision_value(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool, LearnerError> {
        Ok(self.decision_value(x)? > 0.0)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), LearnerError> {
        if x.len() != self.dim {
            return Err(LearnerError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, LearnerError> {
        serde_json::to_string(self).map_err(|e| LearnerError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self, LearnerError> {
        let mut m: Self = serde_json::from_str(s).map_err(|e| LearnerError::Serialization(e.to_string()))?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(LearnerError::Serialization(format!("unsupported model format {} v{}", m.format, m.version)));
        }
        if m.support_vectors.len() != m.dual_coefficients.len() || m.support_vectors.iter().any(|v| v.len() != m.dim) {
            return Err(LearnerError::Serialization("inconsistent support vectors".into()));
        }
        m.params.validate()?;
        m.sparse = m.support_vectors.iter().map(|v| SparseVec::from_dense(v)).collect();
        Ok(m)
    }
}

fn check_data(xs: &[FeatureVector], ys: &[bool]) -> Result<usize, LearnerError> {
    if xs.len() != ys.len() {
        return Err(LearnerError::InsufficientData(format!("{} vectors but {} labels", xs.len(), ys.len())));
    }
    let dim = xs.first().map_or(0, Vec::len);
    if let Some(v) = xs.iter().find(|v| v.len() != dim) {
        return Err(LearnerError::DimensionMismatch { expected: dim, got: v.len() });
    }
    Ok(dim)
}

pub fn train(xs: &[FeatureVector], ys: &[bool], params: KernelParams) -> Result<TrainedModel, LearnerError> {
    train_with(xs, ys, params, &TrainOptions::default())
}

/// Trains on the data. Hitting the iteration cap yields
/// [`LearnerError::NonConvergence`] carrying the last iterate.
pub fn train_with(
    xs: &[FeatureVector],
    ys: &[bool],
    params: KernelParams,
    opts: &TrainOptions,
) -> Result<TrainedModel, LearnerError> {
    params.validate()?;
    let dim = check_data(xs, ys)?;
    if !(ys.iter().any(|&y| y) && ys.iter().any(|&y| !y)) {
        return Err(LearnerError::SingleClassTrainingSet);
    }
    let sparse: Vec<SparseVec> = xs.iter().map(|v| SparseVec::from_dense(v)).collect();
    let model = train_sparse(&sparse, xs, ys, dim, params, opts);
    if model.converged {
        Ok(model)
    } else {
        Err(LearnerError::NonConvergence { model: Box::new(model) })
    }
}

fn train_sparse(
    sparse: &[SparseVec],
    xs: &[FeatureVector],
    ys: &[bool],
    dim: usize,
    params: KernelParams,
    opts: &TrainOptions,
) -> TrainedModel {
    let y: Vec<f64> = ys.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
    let cfg = smo::SolverConfig { eps: opts.eps, max_iter: opts.max_iter, cache_bytes: opts.cache_bytes };
    let sol = smo::solve(sparse, &y, params.c, params.gamma, &cfg);
    let support_indices: Vec<usize> = (0..xs.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    TrainedModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        params,
        dim,
        support_vectors: support_indices.iter().map(|&i| xs[i].clone()).collect(),
        dual_coefficients: support_indices.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
        bias: -sol.rho,
        calibration: None,
        sparse: support_indices.iter().map(|&i| sparse[i].clone()).collect(),
        support_indices,
        converged: sol.converged,
        iterations: sol.iterations,
    }
}

/// Fits the probability sigmoid on out-of-fold decision values. A fold whose
/// training part holds one class contributes `+1` or `-1` for that class.
pub fn calibrate(
    model: TrainedModel,
    xs: &[FeatureVector],
    ys: &[bool],
    seed: u64,
) -> Result<TrainedModel, LearnerError> {
    calibrate_with(model, xs, ys, seed, &TrainOptions::default())
}

pub fn calibrate_with(
    mut model: TrainedModel,
    xs: &[FeatureVector],
    ys: &[bool],
    seed: u64,
    opts: &TrainOptions,
) -> Result<TrainedModel, LearnerError> {
    let dim = check_data(xs, ys)?;
    if dim != model.dim {
        return Err(LearnerError::DimensionMismatch { expected: model.dim, got: dim });
    }
    if !(ys.iter().any(|&y| y) && ys.iter().any(|&y| !y)) {
        return Err(LearnerError::SingleClassTrainingSet);
    }
    let sparse: Vec<SparseVec> = xs.iter().map(|v| SparseVec::from_dense(v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let folds = grid::stratified_folds(ys, CALIBRATION_FOLDS, &mut rng);
    let mut dec = vec![0.0; xs.len()];
    for f in 0..CALIBRATION_FOLDS {
        let train_idx: Vec<usize> = (0..xs.len()).filter(|&i| folds[i] != f).collect();
        let test_idx: Vec<usize> = (0..xs.len()).filter(|&i| folds[i] == f).collect();
        if test_idx.is_empty() {
            continue;
        }
        let tr_y: Vec<bool> = train_idx.iter().map(|&i| ys[i]).collect();
        if tr_y.iter().all(|&b| b) || tr_y.iter().all(|&b| !b) {
            let v = if tr_y.first().copied().unwrap_or(false) { 1.0 } else { -1.0 };
            for &i in &test_idx {
                dec[i] = v;
            }
            continue;
        }
        let tr_s: Vec<SparseVec> = train_idx.iter().map(|&i| sparse[i].clone()).collect();
        let tr_x: Vec<FeatureVector> = train_idx.iter().map(|&i| xs[i].clone()).collect();
        let sub = train_sparse(&tr_s, &tr_x, &tr_y, dim, model.params, opts);
        for &i in &test_idx {
            dec[i] = sub.decision_sparse(&sparse[i]);
        }
    }
    model.calibration = Some(platt::fit(&dec, ys));
    Ok(model)
}

/// Trains and calibrates in one step. Non-convergence is tolerated and
/// reported through `converged`.
pub fn fit(xs: &[FeatureVector], ys: &[bool], params: KernelParams, seed: u64) -> Result<TrainedModel, LearnerError> {
    let model = match train(xs, ys, params) {
        Ok(m) => m,
        Err(LearnerError::NonConvergence { model }) => *model,
        Err(e) => return Err(e),
    };
    calibrate(model, xs, ys, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Largest amount by which any margin condition is violated.
    pub max_violation: f64,
    /// `|sum alpha_i y_i|`.
    pub dual_sum: f64,
    /// Every multiplier lies in `[0, C]`.
    pub box_feasible: bool,
}

/// Measures the model against its optimality conditions on the data it was
/// trained on.
pub fn check_kkt(model: &TrainedModel, xs: &[FeatureVector], ys: &[bool]) -> Result<KktReport, LearnerError> {
    check_data(xs, ys)?;
    let c = model.params.c;
    let mut alpha = vec![0.0; xs.len()];
    for (&i, coef) in model.support_indices.iter().zip(&model.dual_coefficients) {
        if i >= xs.len() {
            return Err(LearnerError::InsufficientData("support index out of range".into()));
        }
        alpha[i] = coef.abs();
    }
    let dual_sum = model.dual_coefficients.iter().sum::<f64>().abs();
    let box_feasible = alpha.iter().all(|&a| (0.0..=c).contains(&a));
    let mut max_violation: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let y = if ys[i] { 1.0 } else { -1.0 };
        let m = y * model.decision_value(x)?;
        let v = if alpha[i] <= 0.0 {
            1.0 - m
        } else if alpha[i] >= c {
            m - 1.0
        } else {
            (m - 1.0).abs()
        };
        max_violation = max_violation.max(v);
    }
    Ok(KktReport { max_violation, dual_sum, box_feasible })
}

//! Single-hidden-layer autoencoder whose connectivity is the item-by-feature
//! mask: hidden units are graph entities and a weight exists only where an
//! item links to a feature.
//!
//! Weights are stored sparsely, one value per mask entry. Entry `e = (i, j)`
//! holds both `W1[i][j]` (item -> feature) and `W2[j][i]` (feature -> item),
//! so off-mask weights do not exist and are zero by construction. The
//! [`dense`] module keeps a full-matrix reference path that applies the
//! Hadamard mask explicitly on every step.

pub mod dense;
mod persist;
mod trainer;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Catalog, MaskMatrix, RatingsTable, UserId};

pub use persist::{read_model, write_model};
pub use trainer::{train_users, user_seed, UserFit};

pub const DEFAULT_EPOCHS: usize = 1000;
pub const DEFAULT_LEARNING_RATE: f64 = 0.03;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("mask has no entries")]
    EmptyMask,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid rating vector: {0}")]
    InvalidRating(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("model has already been trained")]
    AlreadyTrained,
    #[error("model has not been trained")]
    NotTrained,
    #[error("non-finite loss at epoch {epoch} (max |weight| = {max_abs_weight})")]
    NonFinite { epoch: usize, max_abs_weight: f64 },
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Which reconstruction errors enter the loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Every item, with unrated items as target 0.
    #[default]
    Full,
    /// Only rated items.
    RatedOnly,
}

/// Plain full-gradient descent with a sigmoid activation and Glorot-uniform
/// initialisation. There is no regularisation term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub loss: LossMode,
}

fn default_epochs() -> usize {
    DEFAULT_EPOCHS
}
fn default_learning_rate() -> f64 {
    DEFAULT_LEARNING_RATE
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: DEFAULT_EPOCHS,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: DEFAULT_SEED,
            loss: LossMode::Full,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        TrainConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 {
            return Err(ModelError::InvalidConfig("epochs must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epochs={} lr={} activation=sigmoid init=xavier_uniform regularization=none loss={} seed={}",
            self.epochs,
            self.learning_rate,
            match self.loss {
                LossMode::Full => "full",
                LossMode::RatedOnly => "rated_only",
            },
            self.seed
        )
    }
}

/// One user's ratings over the catalog, scaled to `[0, 1]` (stars / 5).
/// Unrated positions are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingVector {
    values: Vec<f64>,
    rated: BTreeSet<usize>,
}

impl RatingVector {
    pub fn zeros(len: usize) -> Self {
        RatingVector {
            values: vec![0.0; len],
            rated: BTreeSet::new(),
        }
    }

    /// `stars` are `(row, stars)` pairs on a five-star scale.
    pub fn from_stars(
        len: usize,
        stars: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self, ModelError> {
        let mut v = Self::zeros(len);
        for (row, s) in stars {
            if row >= len {
                return Err(ModelError::Dimension { expected: len, found: row + 1 });
            }
            if !(s > 0.0 && s <= 5.0) {
                return Err(ModelError::InvalidRating(format!("{s} stars at row {row}")));
            }
            v.values[row] = s / 5.0;
            v.rated.insert(row);
        }
        Ok(v)
    }

    /// Already-normalised values; non-zero positions count as rated.
    pub fn from_normalized(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ModelError::InvalidRating(format!("{bad} outside [0, 1]")));
        }
        let rated = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(RatingVector { values, rated })
    }

    /// Builds the vector for `user`; ratings of items missing from the
    /// catalog are skipped and counted.
    pub fn for_user(catalog: &Catalog, ratings: &RatingsTable, user: UserId) -> (Self, usize) {
        let mut skipped = 0;
        let stars: Vec<(usize, f64)> = ratings
            .user_ratings(user)
            .filter_map(|r| {
                let row = catalog.row_of(r.item);
                if row.is_none() {
                    skipped += 1;
                }
                row.map(|row| (row, r.rating))
            })
            .collect();
        let v = Self::from_stars(catalog.len(), stars).expect("table ratings are within scale");
        (v, skipped)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rated(&self) -> &BTreeSet<usize> {
        &self.rated
    }

    pub fn is_rated(&self, row: usize) -> bool {
        self.rated.contains(&row)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `E = 1/2 * sum_i (x_i - o_i)^2`.
pub fn loss(x: &[f64], o: &[f64]) -> Result<f64, ModelError> {
    if x.len() != o.len() {
        return Err(ModelError::Dimension { expected: x.len(), found: o.len() });
    }
    Ok(0.5 * x.iter().zip(o).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
}

fn loss_with_mode(x: &RatingVector, o: &[f64], mode: LossMode) -> f64 {
    match mode {
        LossMode::Full => loss(&x.values, o).expect("lengths checked by caller"),
        LossMode::RatedOnly => {
            0.5 * x
                .rated
                .iter()
                .map(|&i| (x.values[i] - o[i]).powi(2))
                .sum::<f64>()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    /// One value per feature column.
    pub hidden: Vec<f64>,
    /// One value per catalog item.
    pub output: Vec<f64>,
}

/// Gradients aligned with the mask entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct UserAutoencoder {
    mask: Arc<MaskMatrix>,
    config: TrainConfig,
    w1: Vec<f64>,
    w2: Vec<f64>,
    trained: bool,
    loss_history: Vec<f64>,
}

impl UserAutoencoder {
    /// Glorot-uniform draws in `±sqrt(6 / (m + n))` for every mask entry:
    /// all of `W1` in entry order, then all of `W2`.
    pub fn init(mask: Arc<MaskMatrix>, config: TrainConfig) -> Result<Self, ModelError> {
        if mask.nnz() == 0 {
            return Err(ModelError::EmptyMask);
        }
        config.validate()?;
        let bound = xavier_bound(mask.rows(), mask.cols());
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w1 = (0..mask.nnz()).map(|_| dist.sample(&mut rng)).collect();
        let w2 = (0..mask.nnz()).map(|_| dist.sample(&mut rng)).collect();
        Ok(UserAutoencoder {
            mask,
            config,
            w1,
            w2,
            trained: false,
            loss_history: Vec::new(),
        })
    }

    /// Wraps explicit per-entry weights (untrained).
    pub fn from_weights(
        mask: Arc<MaskMatrix>,
        config: TrainConfig,
        w1: Vec<f64>,
        w2: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if mask.nnz() == 0 {
            return Err(ModelError::EmptyMask);
        }
        for w in [&w1, &w2] {
            if w.len() != mask.nnz() {
                return Err(ModelError::Dimension { expected: mask.nnz(), found: w.len() });
            }
        }
        Ok(UserAutoencoder {
            mask,
            config,
            w1,
            w2,
            trained: false,
            loss_history: Vec::new(),
        })
    }

    pub fn mask(&self) -> &Arc<MaskMatrix> {
        &self.mask
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Loss before each update followed by the loss after the last one
    /// (`epochs + 1` values once trained).
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.trained.then(|| *self.loss_history.last().expect("trained model has history"))
    }

    pub fn initial_loss(&self) -> Option<f64> {
        self.loss_history.first().copied()
    }

    /// Per-entry input-to-hidden weights.
    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    /// Per-entry hidden-to-output weights.
    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    /// `W1` as an `m x n` matrix, zero off the mask.
    pub fn dense_w1(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.mask.cols()]; self.mask.rows()];
        for (&(i, j), &w) in self.mask.entries().iter().zip(&self.w1) {
            d[i][j] = w;
        }
        d
    }

    /// `W2` as an `n x m` matrix, zero off the transposed mask.
    pub fn dense_w2(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.mask.rows()]; self.mask.cols()];
        for (&(i, j), &w) in self.mask.entries().iter().zip(&self.w2) {
            d[j][i] = w;
        }
        d
    }

    fn check_input(&self, x: &RatingVector) -> Result<(), ModelError> {
        if x.len() != self.mask.rows() {
            return Err(ModelError::Dimension { expected: self.mask.rows(), found: x.len() });
        }
        Ok(())
    }

    /// `h = sigmoid(x (W1 . M))`, `o = sigmoid(h (W2 . M^T))`.
    pub fn forward(&self, x: &RatingVector) -> Result<Activations, ModelError> {
        self.check_input(x)?;
        let mut hidden = vec![0.0; self.mask.cols()];
        let mut output = vec![0.0; self.mask.rows()];
        self.forward_into(&x.values, &mut hidden, &mut output);
        Ok(Activations { hidden, output })
    }

    fn forward_into(&self, x: &[f64], hidden: &mut [f64], output: &mut [f64]) {
        let entries = self.mask.entries();
        hidden.fill(0.0);
        for (&(i, j), &w) in entries.iter().zip(&self.w1) {
            hidden[j] += x[i] * w;
        }
        for h in hidden.iter_mut() {
            *h = sigmoid(*h);
        }
        output.fill(0.0);
        for (&(i, j), &w) in entries.iter().zip(&self.w2) {
            output[i] += hidden[j] * w;
        }
        for o in output.iter_mut() {
            *o = sigmoid(*o);
        }
    }

    pub fn loss(&self, x: &RatingVector) -> Result<f64, ModelError> {
        let act = self.forward(x)?;
        Ok(loss_with_mode(x, &act.output, self.config.loss))
    }

    /// Analytic gradient of the loss w.r.t. each stored weight. Off-mask
    /// weights have no storage, so their gradient is identically zero.
    pub fn backward(&self, x: &RatingVector) -> Result<Gradients, ModelError> {
        self.check_input(x)?;
        let mut ws = Workspace::new(&self.mask);
        self.forward_into(&x.values, &mut ws.hidden, &mut ws.output);
        self.gradients_into(x, &mut ws);
        Ok(Gradients { w1: ws.grad_w1, w2: ws.grad_w2 })
    }

    fn gradients_into(&self, x: &RatingVector, ws: &mut Workspace) {
        let entries = self.mask.entries();
        let xv = &x.values;
        for (i, (d, &o)) in ws.delta_out.iter_mut().zip(&ws.output).enumerate() {
            let active = match self.config.loss {
                LossMode::Full => true,
                LossMode::RatedOnly => x.rated.contains(&i),
            };
            *d = if active { (o - xv[i]) * o * (1.0 - o) } else { 0.0 };
        }
        ws.delta_hidden.fill(0.0);
        for (e, &(i, j)) in entries.iter().enumerate() {
            ws.grad_w2[e] = ws.hidden[j] * ws.delta_out[i];
            ws.delta_hidden[j] += self.w2[e] * ws.delta_out[i];
        }
        for (d, &h) in ws.delta_hidden.iter_mut().zip(&ws.hidden) {
            *d *= h * (1.0 - h);
        }
        for (e, &(i, j)) in entries.iter().enumerate() {
            ws.grad_w1[e] = xv[i] * ws.delta_hidden[j];
        }
    }

    /// Runs `epochs` full-gradient steps on `x`. Returns the final loss.
    pub fn train(&mut self, x: &RatingVector) -> Result<f64, ModelError> {
        if self.trained {
            return Err(ModelError::AlreadyTrained);
        }
        self.check_input(x)?;
        let lr = self.config.learning_rate;
        let mut ws = Workspace::new(&self.mask);
        let mut history = Vec::with_capacity(self.config.epochs + 1);
        for epoch in 0..=self.config.epochs {
            self.forward_into(&x.values, &mut ws.hidden, &mut ws.output);
            let e = loss_with_mode(x, &ws.output, self.config.loss);
            if !e.is_finite() {
                return Err(ModelError::NonFinite {
                    epoch,
                    max_abs_weight: self.max_abs_weight(),
                });
            }
            history.push(e);
            if epoch == self.config.epochs {
                break;
            }
            self.gradients_into(x, &mut ws);
            for (w, g) in self.w1.iter_mut().zip(&ws.grad_w1) {
                *w -= lr * g;
            }
            for (w, g) in self.w2.iter_mut().zip(&ws.grad_w2) {
                *w -= lr * g;
            }
        }
        self.loss_history = history;
        self.trained = true;
        Ok(*self.loss_history.last().unwrap())
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.w1
            .iter()
            .chain(&self.w2)
            .fold(0.0_f64, |m, w| m.max(w.abs()))
    }

    pub(crate) fn restore(
        mask: Arc<MaskMatrix>,
        config: TrainConfig,
        w1: Vec<f64>,
        w2: Vec<f64>,
        final_loss: Option<f64>,
    ) -> Self {
        UserAutoencoder {
            mask,
            config,
            w1,
            w2,
            trained: final_loss.is_some(),
            loss_history: final_loss.into_iter().collect(),
        }
    }
}

pub fn xavier_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Initialises and trains a fresh model on `x`.
pub fn fit(
    mask: Arc<MaskMatrix>,
    config: TrainConfig,
    x: &RatingVector,
) -> Result<UserAutoencoder, ModelError> {
    let mut ae = UserAutoencoder::init(mask, config)?;
    ae.train(x)?;
    Ok(ae)
}

struct Workspace {
    hidden: Vec<f64>,
    output: Vec<f64>,
    delta_out: Vec<f64>,
    delta_hidden: Vec<f64>,
    grad_w1: Vec<f64>,
    grad_w2: Vec<f64>,
}

impl Workspace {
    fn new(mask: &MaskMatrix) -> Self {
        Workspace {
            hidden: vec![0.0; mask.cols()],
            output: vec![0.0; mask.rows()],
            delta_out: vec![0.0; mask.rows()],
            delta_hidden: vec![0.0; mask.cols()],
            grad_w1: vec![0.0; mask.nnz()],
            grad_w2: vec![0.0; mask.nnz()],
        }
    }
}

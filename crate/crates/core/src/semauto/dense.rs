//! Full-matrix reference implementation, used to cross-check the sparse
//! path on small instances. It stores every `W1[i][j]` and `W2[j][i]`,
//! multiplies by the mask inside the forward pass and re-applies the mask
//! in every update: `W <- (W . M) - r * dE/dW`.

use super::{sigmoid, LossMode, ModelError, TrainConfig, UserAutoencoder};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseAutoencoder {
    /// `m x n` 0/1 mask.
    pub mask: Vec<Vec<f64>>,
    /// `m x n`.
    pub w1: Vec<Vec<f64>>,
    /// `n x m`.
    pub w2: Vec<Vec<f64>>,
    pub config: TrainConfig,
}

impl DenseAutoencoder {
    pub fn from_sparse(ae: &UserAutoencoder) -> Self {
        let mask = ae
            .mask()
            .to_dense()
            .into_iter()
            .map(|r| r.into_iter().map(f64::from).collect())
            .collect();
        DenseAutoencoder {
            mask,
            w1: ae.dense_w1(),
            w2: ae.dense_w2(),
            config: *ae.config(),
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.mask.len(), self.mask.first().map_or(0, Vec::len))
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        let (m, n) = self.dims();
        if x.len() != m {
            return Err(ModelError::Dimension { expected: m, found: x.len() });
        }
        let h: Vec<f64> = (0..n)
            .map(|j| sigmoid((0..m).map(|i| x[i] * self.w1[i][j] * self.mask[i][j]).sum()))
            .collect();
        let o: Vec<f64> = (0..m)
            .map(|i| sigmoid((0..n).map(|j| h[j] * self.w2[j][i] * self.mask[i][j]).sum()))
            .collect();
        Ok((h, o))
    }

    /// Returns `(dE/dW1, dE/dW2)` as dense matrices.
    #[allow(clippy::type_complexity)]
    pub fn backward(
        &self,
        x: &[f64],
        rated: &[bool],
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), ModelError> {
        let (m, n) = self.dims();
        let (h, o) = self.forward(x)?;
        let delta_out: Vec<f64> = (0..m)
            .map(|i| {
                let active = self.config.loss == LossMode::Full || rated[i];
                if active {
                    (o[i] - x[i]) * o[i] * (1.0 - o[i])
                } else {
                    0.0
                }
            })
            .collect();
        let mut dw2 = vec![vec![0.0; m]; n];
        for j in 0..n {
            for i in 0..m {
                dw2[j][i] = h[j] * delta_out[i] * self.mask[i][j];
            }
        }
        let delta_hidden: Vec<f64> = (0..n)
            .map(|j| {
                let g: f64 = (0..m)
                    .map(|i| self.w2[j][i] * self.mask[i][j] * delta_out[i])
                    .sum();
                g * h[j] * (1.0 - h[j])
            })
            .collect();
        let mut dw1 = vec![vec![0.0; n]; m];
        for i in 0..m {
            for j in 0..n {
                dw1[i][j] = x[i] * delta_hidden[j] * self.mask[i][j];
            }
        }
        Ok((dw1, dw2))
    }

    /// One masked update per epoch. Returns the per-epoch loss history in
    /// the same layout as [`UserAutoencoder::loss_history`].
    pub fn train(&mut self, x: &[f64], rated: &[bool]) -> Result<Vec<f64>, ModelError> {
        let (m, n) = self.dims();
        let r = self.config.learning_rate;
        let mut history = Vec::with_capacity(self.config.epochs + 1);
        for epoch in 0..=self.config.epochs {
            let (_, o) = self.forward(x)?;
            let e = 0.5
                * (0..m)
                    .filter(|&i| self.config.loss == LossMode::Full || rated[i])
                    .map(|i| (x[i] - o[i]).powi(2))
                    .sum::<f64>();
            if !e.is_finite() {
                return Err(ModelError::NonFinite { epoch, max_abs_weight: f64::NAN });
            }
            history.push(e);
            if epoch == self.config.epochs {
                break;
            }
            let (dw1, dw2) = self.backward(x, rated)?;
            for i in 0..m {
                for j in 0..n {
                    self.w1[i][j] = self.w1[i][j] * self.mask[i][j] - r * dw1[i][j];
                    self.w2[j][i] = self.w2[j][i] * self.mask[i][j] - r * dw2[j][i];
                }
            }
        }
        Ok(history)
    }

    /// Largest `|W1[i][j]|` or `|W2[j][i]|` where `M[i][j] = 0`.
    pub fn max_off_mask(&self) -> f64 {
        let (m, n) = self.dims();
        let mut max = 0.0_f64;
        for i in 0..m {
            for j in 0..n {
                if self.mask[i][j] == 0.0 {
                    max = max.max(self.w1[i][j].abs()).max(self.w2[j][i].abs());
                }
            }
        }
        max
    }
}

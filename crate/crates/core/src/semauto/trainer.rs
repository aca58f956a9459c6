use std::sync::Arc;

use rayon::prelude::*;

use crate::data::{MaskMatrix, UserId};
use crate::seed::derive_seed;

use super::{fit, ModelError, RatingVector, TrainConfig, UserAutoencoder};

/// Per-user initialisation seed. Depends only on the base seed and the
/// user id, never on which worker trains the user.
pub fn user_seed(base: u64, user: UserId) -> u64 {
    derive_seed(base, u64::from(user.0))
}

pub struct UserFit {
    pub user: UserId,
    pub model: Result<UserAutoencoder, ModelError>,
}

/// Trains one model per user on `jobs` worker threads. Results come back in
/// input order and are identical for every `jobs` value.
pub fn train_users(
    mask: &Arc<MaskMatrix>,
    config: &TrainConfig,
    jobs: usize,
    inputs: &[(UserId, RatingVector)],
) -> Result<Vec<UserFit>, ModelError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ModelError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        inputs
            .par_iter()
            .map(|(user, x)| {
                let cfg = config.with_seed(user_seed(config.seed, *user));
                UserFit {
                    user: *user,
                    model: fit(Arc::clone(mask), cfg, x),
                }
            })
            .collect()
    }))
}

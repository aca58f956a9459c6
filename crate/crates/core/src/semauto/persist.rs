//! Text model format:
//!
//! ```text
//! semauto-model 1
//! m <items>
//! n <features>
//! seed <u64>
//! epochs <usize>
//! lr <f64>
//! loss <full|rated_only>
//! final_loss <f64|untrained>
//! W1 <nnz>
//! <i> <j> <value>        # item row, feature column
//! W2 <nnz>
//! <j> <i> <value>        # feature row, item column
//! ```
//!
//! Floats carry 17 significant digits so a read after write is bit-exact.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::data::MaskMatrix;

use super::{LossMode, ModelError, TrainConfig, UserAutoencoder};

const MAGIC: &str = "semauto-model 1";

pub fn write_model(mut w: impl Write, ae: &UserAutoencoder) -> std::io::Result<()> {
    let mask = ae.mask();
    let cfg = ae.config();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "m {}", mask.rows())?;
    writeln!(w, "n {}", mask.cols())?;
    writeln!(w, "seed {}", cfg.seed)?;
    writeln!(w, "epochs {}", cfg.epochs)?;
    writeln!(w, "lr {:.16e}", cfg.learning_rate)?;
    writeln!(
        w,
        "loss {}",
        match cfg.loss {
            LossMode::Full => "full",
            LossMode::RatedOnly => "rated_only",
        }
    )?;
    match ae.final_loss() {
        Some(l) => writeln!(w, "final_loss {l:.16e}")?,
        None => writeln!(w, "final_loss untrained")?,
    }
    writeln!(w, "W1 {}", mask.nnz())?;
    for (&(i, j), v) in mask.entries().iter().zip(ae.w1()) {
        writeln!(w, "{i} {j} {v:.16e}")?;
    }
    writeln!(w, "W2 {}", mask.nnz())?;
    let mut by_feature: Vec<(usize, usize, f64)> = mask
        .entries()
        .iter()
        .zip(ae.w2())
        .map(|(&(i, j), &v)| (j, i, v))
        .collect();
    by_feature.sort_by_key(|&(j, i, _)| (j, i));
    for (j, i, v) in by_feature {
        writeln!(w, "{j} {i} {v:.16e}")?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::iter::Enumerate<std::io::Lines<R>>,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<(usize, String), ModelError> {
        match self.inner.next() {
            Some((n, Ok(l))) => Ok((n + 1, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(ModelError::Format { line: 0, message: "unexpected end of file".into() }),
        }
    }

    fn field(&mut self, key: &str) -> Result<(usize, String), ModelError> {
        let (n, line) = self.next()?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| bad(n, format!("expected `{key} <value>`")))?;
        Ok((n, value.trim().to_string()))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ModelError>
    where
        T::Err: std::fmt::Display,
    {
        let (n, v) = self.field(key)?;
        num(n, &v)
    }

    fn section(&mut self, key: &str, mask: &MaskMatrix, transposed: bool) -> Result<Vec<f64>, ModelError> {
        let (n, v) = self.field(key)?;
        let nnz: usize = num(n, &v)?;
        if nnz != mask.nnz() {
            return Err(bad(n, format!("{key} has {nnz} entries, mask has {}", mask.nnz())));
        }
        let mut values = vec![f64::NAN; nnz];
        for _ in 0..nnz {
            let (n, line) = self.next()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad(n, "expected `row col value`".into()));
            }
            let (a, b): (usize, usize) = (num(n, parts[0])?, num(n, parts[1])?);
            let (i, j) = if transposed { (b, a) } else { (a, b) };
            let e = mask
                .entry_index(i, j)
                .ok_or_else(|| bad(n, format!("({a}, {b}) is not a mask position")))?;
            values[e] = num(n, parts[2])?;
        }
        Ok(values)
    }
}

fn bad(line: usize, message: String) -> ModelError {
    ModelError::Format { line, message }
}

fn num<T: std::str::FromStr>(n: usize, v: &str) -> Result<T, ModelError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| bad(n, e.to_string()))
}

/// Reads a model written by [`write_model`]; coordinates must match `mask`.
pub fn read_model(r: impl BufRead, mask: Arc<MaskMatrix>) -> Result<UserAutoencoder, ModelError> {
    let mut lines = Lines { inner: r.lines().enumerate() };
    let (n, magic) = lines.next()?;
    if magic.trim() != MAGIC {
        return Err(bad(n, format!("expected `{MAGIC}`")));
    }
    let rows: usize = lines.parsed("m")?;
    let (n, c) = lines.field("n")?;
    let cols: usize = num(n, &c)?;
    if rows != mask.rows() || cols != mask.cols() {
        return Err(bad(
            n,
            format!("model is {rows}x{cols}, mask is {}x{}", mask.rows(), mask.cols()),
        ));
    }
    let seed = lines.parsed("seed")?;
    let epochs = lines.parsed("epochs")?;
    let learning_rate = lines.parsed("lr")?;
    let (n, v) = lines.field("loss")?;
    let loss = match v.as_str() {
        "full" => LossMode::Full,
        "rated_only" => LossMode::RatedOnly,
        other => return Err(bad(n, format!("unknown loss mode `{other}`"))),
    };
    let (n, v) = lines.field("final_loss")?;
    let final_loss = if v == "untrained" { None } else { Some(num::<f64>(n, &v)?) };
    let w1 = lines.section("W1", &mask, false)?;
    let w2 = lines.section("W2", &mask, true)?;
    let config = TrainConfig { epochs, learning_rate, seed, loss };
    Ok(UserAutoencoder::restore(mask, config, w1, w2, final_loss))
}

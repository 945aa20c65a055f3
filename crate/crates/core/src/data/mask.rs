//! Missing-feature mask generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major boolean matrix; used as the known-entry mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub values: Vec<bool>,
}

impl BoolMatrix {
    pub fn filled(n_rows: usize, n_cols: usize, value: bool) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![value; n_rows * n_cols],
        }
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "bool buffer has {} values, expected {}x{}",
                values.len(),
                n_rows,
                n_cols
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.values[i * self.n_cols + j]
    }

    pub fn count_true(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }
}

/// Whether missingness is drawn per feature entry or per node row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    UniformEntry,
    WholeNode,
}

impl std::str::FromStr for MaskMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-entry" => Ok(MaskMode::UniformEntry),
            "whole-node" => Ok(MaskMode::WholeNode),
            other => Err(Error::InvalidArgument(format!(
                "unknown mask mode '{other}'"
            ))),
        }
    }
}

/// Draws a known-entry mask: each entry (or each node row) is marked
/// unknown independently with probability `rate`. Pure function of its
/// arguments.
pub fn generate_mask(
    n: usize,
    d: usize,
    rate: f64,
    mode: MaskMode,
    seed: u64,
) -> Result<BoolMatrix> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "missing rate {rate} outside [0,1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![true; n * d];
    match mode {
        MaskMode::UniformEntry => {
            for v in values.iter_mut() {
                if rng.gen::<f64>() < rate {
                    *v = false;
                }
            }
        }
        MaskMode::WholeNode => {
            for row in 0..n {
                if rng.gen::<f64>() < rate {
                    values[row * d..(row + 1) * d].fill(false);
                }
            }
        }
    }
    BoolMatrix::from_vec(n, d, values)
}

use serde::{Deserialize, Serialize};

use crate::LearnError;

/// Columns with a standard deviation below this are only centered.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Per-feature z-score statistics fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[&[f64]]) -> Result<Scaler, LearnError> {
        let first = rows.first().ok_or(LearnError::EmptyInput)?;
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            if r.len() != d {
                return Err(LearnError::Dimension {
                    expected: d,
                    got: r.len(),
                });
            }
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m).powi(2);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Scaler { mean, std })
    }

    fn divisor(&self, j: usize) -> f64 {
        if self.std[j] < DEGENERATE_STD {
            1.0
        } else {
            self.std[j]
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, x)| (x - self.mean[j]) / self.divisor(j))
            .collect()
    }

    pub fn transform(&self, rows: &[&[f64]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, z)| z * self.divisor(j) + self.mean[j])
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{GmmError, Result};

/// `n` samples in `ℝᵈ`, stored one sample per column.
#[derive(Debug, Clone)]
pub struct Dataset {
    cols: DMatrix<f64>,
    augmented: OnceLock<DMatrix<f64>>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.cols == other.cols
    }
}

impl Dataset {
    /// Builds a dataset from a `d × n` matrix whose columns are samples.
    pub fn from_columns(cols: DMatrix<f64>) -> Result<Self> {
        if cols.nrows() == 0 || cols.ncols() == 0 {
            return Err(GmmError::InvalidArgument("dataset must be non-empty".into()));
        }
        if let Some(pos) = cols.iter().position(|v| !v.is_finite()) {
            return Err(GmmError::InvalidArgument(format!(
                "non-finite value in sample {}",
                pos / cols.nrows()
            )));
        }
        Ok(Self {
            cols,
            augmented: OnceLock::new(),
        })
    }

    /// Builds a dataset from an `n × d` matrix whose rows are samples.
    pub fn from_row_matrix(rows: &DMatrix<f64>) -> Result<Self> {
        Self::from_columns(rows.transpose())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(GmmError::InvalidArgument(format!(
                "row {i} has {} entries, expected {d}",
                rows[i].len()
            )));
        }
        let cols = DMatrix::from_fn(d, rows.len(), |r, c| rows[c][r]);
        Self::from_columns(cols)
    }

    pub fn n(&self) -> usize {
        self.cols.ncols()
    }

    pub fn d(&self) -> usize {
        self.cols.nrows()
    }

    pub fn sample(&self, i: usize) -> DVectorView<'_, f64> {
        self.cols.column(i)
    }

    /// The `d × n` sample matrix.
    pub fn columns(&self) -> &DMatrix<f64> {
        &self.cols
    }

    /// The `(d+1) × n` augmented sample matrix, each column `[xᵢ; 1]`.
    pub fn augmented_columns(&self) -> &DMatrix<f64> {
        self.augmented.get_or_init(|| self.cols.clone().insert_row(self.d(), 1.0))
    }

    /// The `n × (d+1)` augmented matrix with rows `[xᵢᵀ 1]`.
    pub fn augment(&self) -> DMatrix<f64> {
        self.augmented_columns().transpose()
    }

    /// `n × d` row-major view as a matrix.
    pub fn to_row_matrix(&self) -> DMatrix<f64> {
        self.cols.transpose()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.cols.column_mean()
    }

    /// Maximum-likelihood (1/n) covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mu = self.mean();
        let mut centered = self.cols.clone();
        for mut c in centered.column_iter_mut() {
            c -= &mu;
        }
        (&centered * centered.transpose()) / self.n() as f64
    }

    /// Mean per-coordinate variance, `tr(cov) / d`.
    pub fn variance_scale(&self) -> f64 {
        self.covariance().trace() / self.d() as f64
    }

    /// Samples at the given column indices.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let cols = DMatrix::from_fn(self.d(), idx.len(), |r, c| self.cols[(r, idx[c])]);
        Self::from_columns(cols)
    }
}

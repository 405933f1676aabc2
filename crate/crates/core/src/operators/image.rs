use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Point;

pub const CHANNELS: usize = 3;

/// An `M × N × 3` image with intensities nominally in `[0, 1]`.
///
/// Storage is row-major with interleaved channels: entry `(i, j, c)` lives at
/// `(i·N + j)·3 + c`, which is also the layout of [`ImageTensor::to_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols * CHANNELS],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols * CHANNELS {
            return Err(Error::DimensionMismatch {
                expected: rows * cols * CHANNELS,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                for c in 0..CHANNELS {
                    out.data[(i * cols + j) * CHANNELS + c] = f(i, j, c);
                }
            }
        }
        out
    }

    pub fn from_point(rows: usize, cols: usize, p: &Point) -> Result<Self> {
        Self::from_vec(rows, cols, p.as_slice().to_vec())
    }

    pub fn to_point(&self) -> Point {
        Point::from_column_slice(&self.data)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.cols + j) * CHANNELS + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `X_(1) = [X_··1 X_··2 X_··3]`, an `M × 3N` matrix.
    pub fn unfold1(&self) -> DMatrix<f64> {
        let (m, n) = (self.rows, self.cols);
        DMatrix::from_fn(m, CHANNELS * n, |i, col| self.get(i, col % n, col / n))
    }

    /// `X_(2) = [X_··1ᵀ X_··2ᵀ X_··3ᵀ]ᵀ`, a `3M × N` matrix.
    pub fn unfold2(&self) -> DMatrix<f64> {
        let (m, n) = (self.rows, self.cols);
        DMatrix::from_fn(CHANNELS * m, n, |row, j| self.get(row % m, j, row / m))
    }

    /// Inverse of [`ImageTensor::unfold1`].
    pub fn refold1(mat: &DMatrix<f64>, rows: usize, cols: usize) -> Result<Self> {
        if mat.shape() != (rows, CHANNELS * cols) {
            return Err(Error::domain(format!(
                "refold1 expects a {rows}x{} matrix, got {:?}",
                CHANNELS * cols,
                mat.shape()
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j, c| mat[(i, c * cols + j)]))
    }

    /// Inverse of [`ImageTensor::unfold2`].
    pub fn refold2(mat: &DMatrix<f64>, rows: usize, cols: usize) -> Result<Self> {
        if mat.shape() != (CHANNELS * rows, cols) {
            return Err(Error::domain(format!(
                "refold2 expects a {}x{cols} matrix, got {:?}",
                CHANNELS * rows,
                mat.shape()
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j, c| mat[(c * rows + i, j)]))
    }
}

/// Pixel mask `Ω ∈ {0,1}^{M×N}`; `false` marks a damaged pixel on all channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    keep: Vec<bool>,
}

impl Mask {
    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            keep: vec![true; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, keep: Vec<bool>) -> Result<Self> {
        if keep.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: keep.len(),
            });
        }
        Ok(Self { rows, cols, keep })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn keeps(&self, i: usize, j: usize) -> bool {
        self.keep[i * self.cols + j]
    }

    pub fn erased_count(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }

    /// The masking operator `𝒜` on a flattened image point.
    pub fn apply_point(&self, x: &Point) -> Point {
        let mut out = x.clone();
        for (px, keep) in self.keep.iter().enumerate() {
            if !keep {
                for c in 0..CHANNELS {
                    out[px * CHANNELS + c] = 0.0;
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &ImageTensor) -> ImageTensor {
        debug_assert_eq!(x.dims(), self.dims());
        let data = self.apply_point(&x.to_point());
        ImageTensor::from_point(self.rows, self.cols, &data).expect("same shape")
    }
}

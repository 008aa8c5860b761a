//! Block upper-unipotent matrices
//!
//! ```text
//! ⎡ I  B01  B02 ⎤
//! ⎢ 0   I   B12 ⎥
//! ⎣ 0   0    I  ⎦
//! ```
//!
//! with diagonal blocks of sizes `h20`, `h11`, `h02` (`h20 = h02`).

use serde::{Deserialize, Serialize};

use crate::error::{HodgeError, Result};
use crate::linalg::{c64, max_abs, serde_matrix, CMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockUpperUnipotent {
    #[serde(with = "serde_matrix")]
    pub b01: CMatrix,
    #[serde(with = "serde_matrix")]
    pub b02: CMatrix,
    #[serde(with = "serde_matrix")]
    pub b12: CMatrix,
}

impl BlockUpperUnipotent {
    pub fn identity(h20: usize, h11: usize) -> Self {
        Self {
            b01: CMatrix::zeros(h20, h11),
            b02: CMatrix::zeros(h20, h20),
            b12: CMatrix::zeros(h11, h20),
        }
    }

    pub fn new(b01: CMatrix, b02: CMatrix, b12: CMatrix) -> Result<Self> {
        let h20 = b01.nrows();
        let h11 = b01.ncols();
        if b02.nrows() != h20 || b02.ncols() != h20 {
            return Err(HodgeError::dim(format!(
                "B02 must be {h20}×{h20}, got {}×{}",
                b02.nrows(),
                b02.ncols()
            )));
        }
        if b12.nrows() != h11 || b12.ncols() != h20 {
            return Err(HodgeError::dim(format!(
                "B12 must be {h11}×{h20}, got {}×{}",
                b12.nrows(),
                b12.ncols()
            )));
        }
        Ok(Self { b01, b02, b12 })
    }

    /// `(h20, h11, h02)`.
    pub fn hodge_numbers(&self) -> (usize, usize, usize) {
        (self.b01.nrows(), self.b01.ncols(), self.b02.ncols())
    }

    pub fn dim(&self) -> usize {
        let (a, b, c) = self.hodge_numbers();
        a + b + c
    }

    /// `A = B02 − B01·B12`, the block entering the Kähler transport equation.
    pub fn a_matrix(&self) -> CMatrix {
        &self.b02 - &self.b01 * &self.b12
    }

    /// Composite `P·Q` in the same group.
    pub fn product(&self, q: &Self) -> Result<Self> {
        if self.hodge_numbers() != q.hodge_numbers() {
            return Err(HodgeError::dim(format!(
                "block shapes differ: {:?} vs {:?}",
                self.hodge_numbers(),
                q.hodge_numbers()
            )));
        }
        Ok(Self {
            b01: &self.b01 + &q.b01,
            b02: &self.b02 + &q.b02 + &self.b01 * &q.b12,
            b12: &self.b12 + &q.b12,
        })
    }

    pub fn to_dense(&self) -> CMatrix {
        let (h20, h11, h02) = self.hodge_numbers();
        let n = h20 + h11 + h02;
        let mut m = CMatrix::identity(n, n);
        m.view_mut((0, h20), (h20, h11)).copy_from(&self.b01);
        m.view_mut((0, h20 + h11), (h20, h02)).copy_from(&self.b02);
        m.view_mut((h20, h20 + h11), (h11, h02)).copy_from(&self.b12);
        m
    }

    pub fn is_identity(&self) -> bool {
        self.b01.iter().chain(self.b02.iter()).chain(self.b12.iter()).all(|z| *z == c64(0.0, 0.0))
    }

    /// Largest entry modulus of each block: `(|B01|, |B02|, |B12|)`.
    pub fn magnitudes(&self) -> (f64, f64, f64) {
        (max_abs(&self.b01), max_abs(&self.b02), max_abs(&self.b12))
    }

    /// Largest entry modulus of `self − other` over all three blocks.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        if self.hodge_numbers() != other.hodge_numbers() {
            return f64::INFINITY;
        }
        max_abs(&(&self.b01 - &other.b01))
            .max(max_abs(&(&self.b02 - &other.b02)))
            .max(max_abs(&(&self.b12 - &other.b12)))
    }
}

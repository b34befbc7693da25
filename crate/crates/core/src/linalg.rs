//! Banded direct solver for the five-point finite-volume systems.
//!
//! Every matrix assembled by the solvers is either symmetric and diagonally
//! dominant (potential, heat) or column diagonally dominant (exponentially
//! fitted transport), so LU factorisation without pivoting is stable.

use crate::error::{Result, SimError};

/// Square matrix with `bw` sub- and super-diagonals stored row by row.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.bw >= row && col <= row + self.bw);
        row * (2 * self.bw + 1) + (col + self.bw - row)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col + self.bw < row || col > row + self.bw {
            0.0
        } else {
            self.data[self.slot(row, col)]
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.bw);
                let hi = (r + self.bw).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.slot(r, c)] * x[c]).sum()
            })
            .collect()
    }

    /// Factorises in place and solves `A x = b`. Returns `x`.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let bw = self.bw;
        let width = 2 * bw + 1;
        if b.len() != n {
            return Err(SimError::LinearSolve(format!(
                "rhs length {} does not match dimension {n}",
                b.len()
            )));
        }
        let mut x = b.to_vec();
        for k in 0..n {
            let pivot = self.data[k * width + bw];
            if !(pivot.is_finite() && pivot.abs() > 0.0) {
                return Err(SimError::LinearSolve(format!("zero or non-finite pivot {pivot} at row {k}")));
            }
            let last = (k + bw).min(n - 1);
            for r in k + 1..=last {
                let lk = r * width + (k + bw - r);
                let factor = self.data[lk] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.data[lk] = factor;
                // row r, columns k+1..=last  <-  minus factor * row k
                let len = last - k;
                let (head, tail) = self.data.split_at_mut(r * width);
                let src = &head[k * width + bw + 1..k * width + bw + 1 + len];
                let off = k + bw - r + 1;
                for (d, s) in tail[off..off + len].iter_mut().zip(src) {
                    *d -= factor * s;
                }
                x[r] -= factor * x[k];
            }
        }
        for k in (0..n).rev() {
            let last = (k + bw).min(n - 1);
            let row_k = k * width + bw;
            let mut acc = x[k];
            for c in 1..=(last - k) {
                acc -= self.data[row_k + c] * x[k + c];
            }
            x[k] = acc / self.data[row_k];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::LinearSolve("non-finite solution".into()));
        }
        Ok(x)
    }
}

/// Relative residual `|A x - b| / |b|` in the max norm.
pub fn relative_residual(a: &BandedMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let num = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

//! Small dense matrices: Perron-Frobenius power iteration, the subinvariance
//! comparison and Gaussian elimination. Dimensions are the number of queues,
//! so nothing here needs to be clever.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{numeric, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix rows must be square");
        Matrix { n, data: rows.iter().flatten().copied().collect() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] += c;
        }
        m
    }

    /// Strong connectivity of the graph with an edge `i -> j` whenever the
    /// off-diagonal entry `(i, j)` is positive.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n;
        if n <= 1 {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let w = if forward { self[(i, j)] } else { self[(j, i)] };
                    if i != j && w > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Solve `self * x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs()))
                .expect("non-empty range");
            if a[pivot * n + col].abs() <= 1e-13 * scale {
                return Err(numeric!("singular linear system (pivot {} in column {col})", a[pivot * n + col]));
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                x.swap(col, pivot);
            }
            for row in col + 1..n {
                let f = a[row * n + col] / a[col * n + col];
                if f != 0.0 {
                    for k in col..n {
                        a[row * n + k] -= f * a[col * n + k];
                    }
                    x[row] -= f * x[col];
                }
            }
        }
        for row in (0..n).rev() {
            let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
            x[row] = (x[row] - tail) / a[row * n + row];
        }
        Ok(x)
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Dominant eigenpair of a nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronRoot {
    pub value: f64,
    /// Nonnegative right eigenvector with unit l1 norm.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 100_000;

/// Spectral radius and Perron vector of a nonnegative matrix by power
/// iteration on `M + I`. The unit shift keeps the same Perron vector, raises
/// the dominant eigenvalue by exactly one and makes irreducible periodic
/// matrices aperiodic, so cyclic spectra do not stall the iteration.
pub fn spectral_radius_nonneg(m: &Matrix) -> PerronRoot {
    let n = m.dim();
    let shifted = m.shifted(1.0);
    let mut w = vec![1.0 / n as f64; n];
    let mut value = f64::NAN;
    for it in 1..=POWER_MAX_ITER {
        let next = shifted.mul_vec(&w);
        let norm: f64 = next.iter().map(|x| x.abs()).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return PerronRoot { value: f64::NAN, vector: w, iterations: it, converged: false };
        }
        let next: Vec<f64> = next.iter().map(|x| x / norm).collect();
        let delta: f64 = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum();
        let moved = (norm - value).abs();
        value = norm;
        w = next;
        if delta < POWER_TOL && moved < POWER_TOL * value.max(1.0) {
            return PerronRoot { value: value - 1.0, vector: w, iterations: it, converged: true };
        }
    }
    PerronRoot { value: value - 1.0, vector: w, iterations: POWER_MAX_ITER, converged: false }
}

/// Dominant (largest real part) eigenpair of a matrix with nonnegative
/// off-diagonal entries, via the nonnegative matrix `A + cI`.
pub fn spectral_abscissa_metzler(a: &Matrix) -> PerronRoot {
    let n = a.dim();
    let c = 1.0 + (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let mut root = spectral_radius_nonneg(&a.shifted(c));
    root.value -= c;
    root
}

/// Outcome of comparing `M w` with `w` coordinate by coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Less,
    Equal,
    Greater,
    Mixed,
}

pub const SUBINVARIANCE_TOL: f64 = 1e-10;

/// Compare `M w` with a positive vector `w`: `Less` when every coordinate is
/// strictly smaller, `Greater` when every coordinate is strictly larger,
/// `Equal` when every coordinate agrees within the tolerance.
pub fn subinvariance_check(m: &Matrix, w: &[f64]) -> Ordering {
    let mw = m.mul_vec(w);
    let signs: Vec<i8> = mw
        .iter()
        .zip(w)
        .map(|(a, b)| {
            let d = a - b;
            if d.abs() <= SUBINVARIANCE_TOL * b.abs().max(1.0) {
                0
            } else if d < 0.0 {
                -1
            } else {
                1
            }
        })
        .collect();
    if signs.iter().all(|&s| s == 0) {
        Ordering::Equal
    } else if signs.iter().all(|&s| s == -1) {
        Ordering::Less
    } else if signs.iter().all(|&s| s == 1) {
        Ordering::Greater
    } else {
        Ordering::Mixed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_examples() {
        let m = Matrix::from_rows(&[vec![0.26, 0.09], vec![0.20, 0.30]]);
        let oracle = (0.56 + libm::sqrt(0.56 * 0.56 - 4.0 * 0.06)) / 2.0;
        let r = spectral_radius_nonneg(&m);
        assert!(r.converged);
        assert!((r.value - oracle).abs() < 1e-11);
        assert!((r.value - 0.41565).abs() < 1e-5);

        let r = spectral_radius_nonneg(&Matrix::identity(3));
        assert!(r.converged && (r.value - 1.0).abs() < 1e-14);

        let tri = Matrix::from_rows(&[vec![0.10714, 0.0], vec![0.28571, 0.0]]);
        let r = spectral_radius_nonneg(&tri);
        assert!(r.converged && (r.value - 0.10714).abs() < 1e-10);
    }

    #[test]
    fn cyclic_matrix_converges() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]);
        let r = spectral_radius_nonneg(&m);
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn metzler_abscissa() {
        let a = Matrix::from_rows(&[vec![-0.8, 0.3], vec![0.2, -0.7]]);
        let r = spectral_abscissa_metzler(&a);
        assert!((r.value + 0.5).abs() < 1e-11);
        assert!(r.vector.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn subinvariance_examples() {
        let m = Matrix::from_rows(&[vec![0.5, 0.4], vec![0.3, 0.6]]);
        let r = spectral_radius_nonneg(&m);
        assert!((r.value - 0.9).abs() < 1e-11);
        assert_eq!(subinvariance_check(&m, &r.vector), Ordering::Less);
        assert_eq!(subinvariance_check(&Matrix::identity(2), &[0.3, 2.0]), Ordering::Equal);
        let d = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]);
        assert_eq!(subinvariance_check(&d, &[1.0, 1.0]), Ordering::Mixed);
    }

    #[test]
    fn solve_and_irreducibility() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]]);
        let x = a.solve(&[3.0, 5.0, 5.0]).unwrap();
        for (v, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((v - e).abs() < 1e-14);
        }
        assert!(Matrix::zeros(2).solve(&[1.0, 1.0]).is_err());
        assert!(a.is_irreducible());
        let tri = Matrix::from_rows(&[vec![0.1, 0.0], vec![0.3, 0.0]]);
        assert!(!tri.is_irreducible());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn subinvariance_tracks_spectral_radius(entries in proptest::collection::vec(0.01..1.0f64, 9), target in prop_oneof![0.2..0.95f64, Just(1.0), 1.05..3.0f64]) {
                let rows: Vec<Vec<f64>> = entries.chunks(3).map(|c| c.to_vec()).collect();
                let m = Matrix::from_rows(&rows);
                let r0 = spectral_radius_nonneg(&m);
                let scaled = Matrix::from_rows(&rows.iter().map(|r| r.iter().map(|x| x * target / r0.value).collect()).collect::<Vec<_>>());
                let r = spectral_radius_nonneg(&scaled);
                prop_assert!(r.converged);
                let expected = if target < 1.0 { Ordering::Less } else if target > 1.0 { Ordering::Greater } else { Ordering::Equal };
                prop_assert_eq!(subinvariance_check(&scaled, &r.vector), expected);
            }
        }
    }
}

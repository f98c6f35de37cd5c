//! Deterministic numerical kernels: seeded sampling, dense row-major
//! matrices, and construction of orthogonal / ill-conditioned test matrices.
//!
//! Everything here is plain `f64` with fixed evaluation order (sequential
//! left-to-right sums, fixed loop nests), so identical seeds produce
//! bit-identical results across runs on the same machine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

// ======================================================================
// Seeding
// ======================================================================

/// Seed for all randomized constructions. Identical seeds yield bit-identical
/// sampled streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Derive an independent sub-seed for a named purpose (dataset, init,
    /// shuffling, ...) so that consumers never share a random stream.
    pub fn derive(self, tag: u64) -> Seed {
        Seed(splitmix64(
            self.0 ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ))
    }

    /// Deterministic generator for this seed.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// SplitMix64 finalizer; used only to decorrelate derived seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

// ======================================================================
// Vectors
// ======================================================================

/// Dot product with deterministic sequential left-to-right summation.
///
/// Panics if the lengths differ (programmer error).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch {} vs {}", a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// True iff every entry is finite.
pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

// ======================================================================
// Matrices
// ======================================================================

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a row-major buffer; panics unless `data.len() == rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Matrix {
        assert_eq!(
            data.len(),
            rows * cols,
            "matrix data length {} does not match {rows}x{cols}",
            data.len()
        );
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major backing slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Contiguous row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec: dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            y[i] = dot(self.row(i), x);
        }
        y
    }

    /// `self * rhs` with a deterministic i-k-j loop nest.
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                let lhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for j in 0..rhs.cols {
                    out_row[j] += a * lhs_row[j];
                }
            }
        }
        out
    }

    /// `selfᵀ * rhs` without materializing the transpose.
    pub fn transpose_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "transpose_matmul: dimension mismatch");
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self[(k, i)];
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for j in 0..rhs.cols {
                    out_row[j] += a * rhs_row[j];
                }
            }
        }
        out
    }

    /// `self * rhsᵀ` without materializing the transpose.
    pub fn matmul_transpose(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.cols, "matmul_transpose: dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            for j in 0..rhs.rows {
                out[(i, j)] = dot(self.row(i), rhs.row(j));
            }
        }
        out
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        let mut acc = 0.0;
        for v in &self.data {
            acc += v * v;
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

// ======================================================================
// Random constructions
// ======================================================================

/// `dim x n` matrix whose columns are independent standard normal samples,
/// drawn column by column from a ChaCha stream seeded by `seed`.
pub fn gaussian_sample(dim: usize, n: usize, seed: Seed) -> Matrix {
    let mut rng = seed.rng();
    let mut out = Matrix::zeros(dim, n);
    for j in 0..n {
        for i in 0..dim {
            out[(i, j)] = rng.sample(StandardNormal);
        }
    }
    out
}

/// Random `n x n` orthogonal matrix: Gaussian columns orthonormalized by
/// modified Gram-Schmidt with one re-orthogonalization pass.
///
/// The triangular factor's diagonal (the residual norms) is non-negative by
/// construction, which fixes the column signs and makes the output unique for
/// a given seed. Panics if `n == 0`.
pub fn random_orthogonal(n: usize, seed: Seed) -> Matrix {
    assert!(n > 0, "random_orthogonal: n must be positive");
    let g = gaussian_sample(n, n, seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        // Two MGS sweeps: the second pass removes the O(eps * kappa) residue
        // the first leaves behind, pushing orthogonality to machine precision.
        for _ in 0..2 {
            for u in q.iter() {
                let proj = dot(u, &v);
                for i in 0..n {
                    v[i] -= proj * u[i];
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        assert!(
            norm > 1e-300,
            "random_orthogonal: degenerate column {j} (norm {norm:e})"
        );
        for x in v.iter_mut() {
            *x /= norm;
        }
        q.push(v);
    }
    let mut out = Matrix::zeros(n, n);
    for (j, col) in q.iter().enumerate() {
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    out
}

/// Factors `(U, sigma, V)` of a `rows x cols` matrix with exact condition
/// number `kappa`: `U` is the first `cols` columns of a random `rows x rows`
/// orthogonal matrix, `V` is `cols x cols` orthogonal, and the spectrum is
/// log-uniformly spaced from `1` down to `1 / kappa`.
///
/// Panics unless `rows >= cols >= 2` and `kappa >= 1` (finite).
pub fn conditioned_factors(
    rows: usize,
    cols: usize,
    kappa: f64,
    seed: Seed,
) -> (Matrix, Vec<f64>, Matrix) {
    assert!(
        rows >= cols && cols >= 2,
        "conditioned_factors: need rows >= cols >= 2, got {rows}x{cols}"
    );
    assert!(
        kappa.is_finite() && kappa >= 1.0,
        "conditioned_factors: kappa must be finite and >= 1, got {kappa}"
    );
    let u_full = random_orthogonal(rows, seed.derive(1));
    let v = random_orthogonal(cols, seed.derive(2));
    let mut u = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            u[(i, j)] = u_full[(i, j)];
        }
    }
    let inv_kappa = 1.0 / kappa;
    let sigma: Vec<f64> = (0..cols)
        .map(|i| inv_kappa.powf(i as f64 / (cols - 1) as f64))
        .collect();
    (u, sigma, v)
}

/// `rows x cols` matrix with singular values log-uniformly spaced from `1`
/// down to `1 / kappa`, built as `U * diag(sigma) * Vᵀ` from
/// [`conditioned_factors`]. Same preconditions.
pub fn conditioned_matrix(rows: usize, cols: usize, kappa: f64, seed: Seed) -> Matrix {
    let (u, sigma, v) = conditioned_factors(rows, cols, kappa, seed);
    scaled_factor_product(&u, &sigma, &v)
}

/// `U * diag(sigma) * Vᵀ` for thin `U` (`rows x k`), spectrum `sigma` (`k`),
/// and square `V` (`cols x k` columns used).
pub fn scaled_factor_product(u: &Matrix, sigma: &[f64], v: &Matrix) -> Matrix {
    assert_eq!(u.cols(), sigma.len(), "factor product: spectrum length");
    assert_eq!(v.cols(), sigma.len(), "factor product: V width");
    let mut u_scaled = u.clone();
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            u_scaled[(i, j)] *= sigma[j];
        }
    }
    u_scaled.matmul_transpose(v)
}

//! Ill-conditioned bilinear regression.
//!
//! The model `W1 * W2 * x` is fit to targets `A * x` for a fixed matrix `A`
//! with prescribed condition number and a fixed Gaussian sample set, making
//! the objective a deterministic, realizable matrix-factorization problem:
//! the loss over the whole dataset is `mean_i ||W1 W2 x_i - A x_i||^2` and
//! its population counterpart is `||W1 W2 - A||_F^2`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{all_finite, conditioned_factors, gaussian_sample, Matrix, Seed};
use crate::problems::{Batch, Problem};

/// Default output dimension of `A`.
const DEFAULT_ROWS: usize = 10;
/// Default input dimension of `A`.
const DEFAULT_COLS: usize = 6;
/// Default dataset size.
const DEFAULT_SAMPLES: usize = 1000;

/// The `W1 * W2 * x ≈ A * x` factorization problem with controlled
/// condition number.
///
/// Parameters are the flattened pair `(W1: rows x inner, W2: inner x cols)`,
/// `W1` first, both row-major. The dataset (and hence the loss surface) is
/// fixed at construction and fully determined by the seed.
#[derive(Debug, Clone)]
pub struct ConditionedRegression {
    u: Matrix,
    sigma: Vec<f64>,
    v: Matrix,
    a: Matrix,
    /// `cols x n`; column `j` is sample `x_j`.
    samples: Matrix,
    /// Empirical second moment `(1/n) * X * Xᵀ` (`cols x cols`), the
    /// sufficient statistic for whole-dataset evaluation.
    sxx: Matrix,
    rows: usize,
    cols: usize,
    inner: usize,
    kappa: f64,
}

impl ConditionedRegression {
    /// Default instance: `A` is `10 x 6`, `W1` is `10 x 6`, `W2` is `6 x 6`
    /// (96 parameters), with 1000 fixed Gaussian samples.
    pub fn new(kappa: f64, seed: Seed) -> ConditionedRegression {
        Self::with_dims(
            DEFAULT_ROWS,
            DEFAULT_COLS,
            DEFAULT_COLS,
            kappa,
            DEFAULT_SAMPLES,
            seed,
        )
    }

    /// Scaled-up instance with the inner dimension doubled: `W1` is
    /// `10 x 12`, `W2` is `12 x 6` (192 parameters); `A` stays `10 x 6`.
    pub fn scaled_up(kappa: f64, seed: Seed) -> ConditionedRegression {
        Self::with_dims(
            DEFAULT_ROWS,
            DEFAULT_COLS,
            2 * DEFAULT_COLS,
            kappa,
            DEFAULT_SAMPLES,
            seed,
        )
    }

    /// General constructor. `A` is `rows x cols` with condition number
    /// `kappa`; the factors are `W1: rows x inner` and `W2: inner x cols`.
    /// Panics unless `rows >= cols >= 2`, `inner >= cols` (so the optimum is
    /// realizable), `kappa >= 1`, and `n_samples >= 1`.
    pub fn with_dims(
        rows: usize,
        cols: usize,
        inner: usize,
        kappa: f64,
        n_samples: usize,
        seed: Seed,
    ) -> ConditionedRegression {
        assert!(
            inner >= cols,
            "regression: inner dimension {inner} must be >= {cols} for a realizable optimum"
        );
        assert!(n_samples >= 1, "regression: need at least one sample");
        let (u, sigma, v) = conditioned_factors(rows, cols, kappa, seed.derive(1));
        let mut u_scaled = u.clone();
        for i in 0..rows {
            for j in 0..cols {
                u_scaled[(i, j)] *= sigma[j];
            }
        }
        let a = u_scaled.matmul_transpose(&v);
        let samples = gaussian_sample(cols, n_samples, seed.derive(2));
        let mut sxx = samples.matmul_transpose(&samples);
        let inv_n = 1.0 / n_samples as f64;
        for x in sxx.data_mut() {
            *x *= inv_n;
        }
        ConditionedRegression {
            u,
            sigma,
            v,
            a,
            samples,
            sxx,
            rows,
            cols,
            inner,
            kappa,
        }
    }

    /// Output dimension of `A`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Input dimension of `A`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Shared inner dimension of the factors.
    pub fn inner(&self) -> usize {
        self.inner
    }

    /// Configured condition number of `A`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The target matrix `A`.
    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    /// Singular values of `A`, descending from 1 to `1 / kappa`.
    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    /// The fixed sample matrix (`cols x n`; one sample per column).
    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    /// Split a flat parameter vector into `(W1, W2)` views as matrices.
    fn split(&self, params: &[f64]) -> (Matrix, Matrix) {
        assert_eq!(
            params.len(),
            self.param_count(),
            "regression: expected {} parameters, got {}",
            self.param_count(),
            params.len()
        );
        let w1_len = self.rows * self.inner;
        let w1 = Matrix::from_vec(self.rows, self.inner, params[..w1_len].to_vec());
        let w2 = Matrix::from_vec(self.inner, self.cols, params[w1_len..].to_vec());
        (w1, w2)
    }

    /// Residual matrix `W1 * W2 - A`.
    fn residual_matrix(&self, params: &[f64]) -> Result<Matrix> {
        if !all_finite(params) {
            return Err(Error::NonFinite {
                what: "regression parameters",
            });
        }
        let (w1, w2) = self.split(params);
        let mut m = w1.matmul(&w2);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] -= self.a[(i, j)];
            }
        }
        Ok(m)
    }

    /// Population loss `||W1 W2 - A||_F^2` — the expectation of the sample
    /// loss over `x ~ N(0, I)`.
    pub fn frobenius_loss(&self, params: &[f64]) -> Result<f64> {
        Ok(self.residual_matrix(params)?.frobenius_sq())
    }

    /// A parameter vector achieving zero loss: the first `cols` columns of
    /// `W1` hold `U * diag(sigma)` and the first `cols` rows of `W2` hold
    /// `Vᵀ`; any extra inner dimensions are zero, so `W1 * W2 = A` exactly.
    pub fn realizable_params(&self) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                params[i * self.inner + j] = self.u[(i, j)] * self.sigma[j];
            }
        }
        let w2_base = self.rows * self.inner;
        for i in 0..self.cols {
            for j in 0..self.cols {
                params[w2_base + i * self.cols + j] = self.v[(j, i)];
            }
        }
        params
    }

    /// Whole-dataset evaluation through the sufficient statistic:
    /// `loss = <M, M * Sxx>` and gradients `2 * M * Sxx * W2ᵀ`,
    /// `2 * W1ᵀ * M * Sxx` for `M = W1 W2 - A`.
    fn loss_grad_all(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let m = self.residual_matrix(params)?;
        let (w1, w2) = self.split(params);
        let t = m.matmul(&self.sxx);
        let loss: f64 = m
            .data()
            .iter()
            .zip(t.data())
            .map(|(&mij, &tij)| mij * tij)
            .sum();
        let mut grad = Vec::with_capacity(self.param_count());
        let g1 = t.matmul_transpose(&w2);
        grad.extend(g1.data().iter().map(|&x| 2.0 * x));
        let g2 = w1.transpose_matmul(&t);
        grad.extend(g2.data().iter().map(|&x| 2.0 * x));
        self.check_outputs(loss, grad)
    }

    /// Mini-batch evaluation sample by sample: with `r_i = M x_i`,
    /// `loss = mean_i ||r_i||^2`, `dW1 = (2/k) Σ r_i (W2 x_i)ᵀ`, and
    /// `dW2 = (2/k) Σ (W1ᵀ r_i) x_iᵀ`.
    fn loss_grad_batch(&self, params: &[f64], indices: &[usize]) -> Result<(f64, Vec<f64>)> {
        assert!(!indices.is_empty(), "regression: empty batch");
        let m = self.residual_matrix(params)?;
        let (w1, w2) = self.split(params);
        let mut loss = 0.0;
        let mut g1 = Matrix::zeros(self.rows, self.inner);
        let mut g2 = Matrix::zeros(self.inner, self.cols);
        for &idx in indices {
            assert!(
                idx < self.num_samples(),
                "regression: sample index {idx} out of range for {} samples",
                self.num_samples()
            );
            let x = self.samples.column(idx);
            let r = m.matvec(&x);
            loss += r.iter().map(|ri| ri * ri).sum::<f64>();
            let w2x = w2.matvec(&x);
            for i in 0..self.rows {
                for j in 0..self.inner {
                    g1[(i, j)] += r[i] * w2x[j];
                }
            }
            let w1tr = w1.transpose().matvec(&r);
            for i in 0..self.inner {
                for j in 0..self.cols {
                    g2[(i, j)] += w1tr[i] * x[j];
                }
            }
        }
        let scale = 2.0 / indices.len() as f64;
        let mut grad = Vec::with_capacity(self.param_count());
        grad.extend(g1.data().iter().map(|&x| scale * x));
        grad.extend(g2.data().iter().map(|&x| scale * x));
        self.check_outputs(loss / indices.len() as f64, grad)
    }

    fn check_outputs(&self, loss: f64, grad: Vec<f64>) -> Result<(f64, Vec<f64>)> {
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                what: "regression loss",
            });
        }
        if !all_finite(&grad) {
            return Err(Error::NonFinite {
                what: "regression gradient",
            });
        }
        Ok((loss, grad))
    }
}

impl Problem for ConditionedRegression {
    fn param_count(&self) -> usize {
        self.rows * self.inner + self.inner * self.cols
    }

    fn num_samples(&self) -> usize {
        self.samples.cols()
    }

    /// Gaussian initialization with standard deviation 1e-3: far from the
    /// optimum relative to the small singular values, but finite.
    fn init_params(&self, seed: Seed) -> Vec<f64> {
        let mut rng = seed.rng();
        (0..self.param_count())
            .map(|_| 1e-3 * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn loss_grad(&self, params: &[f64], batch: Batch) -> Result<(f64, Vec<f64>)> {
        match batch {
            Batch::All => self.loss_grad_all(params),
            Batch::Indices(indices) => self.loss_grad_batch(params, indices),
        }
    }

    fn full_loss(&self, params: &[f64]) -> Result<f64> {
        let m = self.residual_matrix(params)?;
        let t = m.matmul(&self.sxx);
        let loss: f64 = m
            .data()
            .iter()
            .zip(t.data())
            .map(|(&mij, &tij)| mij * tij)
            .sum();
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                what: "regression loss",
            });
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_problem() -> ConditionedRegression {
        ConditionedRegression::new(1e10, Seed(42))
    }

    /// Central finite differences with per-coordinate step
    /// `h * max(1, |theta_i|)`.
    fn fd_gradient(prob: &ConditionedRegression, params: &[f64], h: f64) -> Vec<f64> {
        let mut fd = Vec::with_capacity(params.len());
        for i in 0..params.len() {
            let hi = h * params[i].abs().max(1.0);
            let mut plus = params.to_vec();
            plus[i] += hi;
            let mut minus = params.to_vec();
            minus[i] -= hi;
            let lp = prob.full_loss(&plus).unwrap();
            let lm = prob.full_loss(&minus).unwrap();
            fd.push((lp - lm) / (2.0 * hi));
        }
        fd
    }

    #[test]
    fn default_dims_give_96_parameters_and_doubling_gives_192() {
        assert_eq!(default_problem().param_count(), 96);
        assert_eq!(ConditionedRegression::scaled_up(1e10, Seed(42)).param_count(), 192);
    }

    #[test]
    fn spectrum_spans_one_down_to_inverse_kappa() {
        let prob = default_problem();
        let sigma = prob.singular_values();
        assert_eq!(sigma[0], 1.0);
        assert!((sigma[sigma.len() - 1] - 1e-10).abs() < 1e-22);
        assert!(sigma.windows(2).all(|w| w[0] > w[1]), "descending spectrum");
    }

    #[test]
    fn realizable_optimum_achieves_zero_loss_and_zero_gradient() {
        for prob in [default_problem(), ConditionedRegression::scaled_up(1e10, Seed(9))] {
            let params = prob.realizable_params();
            let loss = prob.full_loss(&params).unwrap();
            assert!(loss < 1e-20, "optimum loss {loss:e} should vanish");
            assert!(prob.frobenius_loss(&params).unwrap() < 1e-25);
            let (_, grad) = prob.loss_grad(&params, Batch::All).unwrap();
            let max = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            assert!(max < 1e-12, "gradient at optimum has max entry {max:e}");
        }
    }

    #[test]
    fn zero_first_factor_gives_frobenius_norm_of_a() {
        let prob = default_problem();
        let mut params = prob.init_params(Seed(3));
        for p in params[..prob.rows() * prob.inner()].iter_mut() {
            *p = 0.0;
        }
        let expected: f64 = prob.singular_values().iter().map(|s| s * s).sum();
        let got = prob.frobenius_loss(&params).unwrap();
        assert!(
            (got - expected).abs() <= 1e-12 * expected,
            "||A||_F^2 = sum of squared singular values: {got} vs {expected}"
        );
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        for (prob, seed) in [
            (default_problem(), Seed(100)),
            (ConditionedRegression::scaled_up(1e10, Seed(5)), Seed(101)),
        ] {
            // Order-one evaluation points, where the cubic finite-difference
            // truncation error is far below the 1e-5 gate.
            let mut rng = seed.rng();
            let params: Vec<f64> = (0..prob.param_count())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let (_, grad) = prob.loss_grad(&params, Batch::All).unwrap();
            let fd = fd_gradient(&prob, &params, 1e-5);
            let mut worst = 0.0f64;
            for (a, f) in grad.iter().zip(&fd) {
                let rel = (a - f).abs() / a.abs().max(f.abs()).max(1e-12);
                worst = worst.max(rel);
            }
            assert!(worst < 1e-5, "max relative gradient error {worst:e}");
        }
    }

    #[test]
    fn whole_dataset_loss_equals_mean_of_per_sample_losses() {
        let prob = default_problem();
        let params = prob.init_params(Seed(17));
        let (all_loss, all_grad) = prob.loss_grad(&params, Batch::All).unwrap();
        let n = prob.num_samples();

        // Mean of singleton-batch losses.
        let mut mean = 0.0;
        for i in 0..n {
            let (li, _) = prob.loss_grad(&params, Batch::Indices(&[i])).unwrap();
            mean += li;
        }
        mean /= n as f64;
        assert!(
            (all_loss - mean).abs() <= 1e-12 * all_loss.abs().max(mean.abs()),
            "sufficient-statistic loss {all_loss:e} vs per-sample mean {mean:e}"
        );

        // One big index batch must agree too, gradients included.
        let indices: Vec<usize> = (0..n).collect();
        let (batch_loss, batch_grad) = prob.loss_grad(&params, Batch::Indices(&indices)).unwrap();
        assert!((all_loss - batch_loss).abs() <= 1e-12 * all_loss.abs());
        for (a, b) in all_grad.iter().zip(&batch_grad) {
            assert!(
                (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-30),
                "gradient routes disagree: {a:e} vs {b:e}"
            );
        }
    }

    #[test]
    fn frobenius_loss_matches_monte_carlo_over_fresh_samples() {
        let prob = default_problem();
        let mut rng = Seed(23).rng();
        let params: Vec<f64> = (0..prob.param_count())
            .map(|_| 0.3 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let frob = prob.frobenius_loss(&params).unwrap();

        let fresh = gaussian_sample(prob.cols(), 100_000, Seed(555));
        let (w1, w2) = prob.split(&params);
        let mut m = w1.matmul(&w2);
        for i in 0..prob.rows() {
            for j in 0..prob.cols() {
                m[(i, j)] -= prob.matrix()[(i, j)];
            }
        }
        let mut mc = 0.0;
        for j in 0..fresh.cols() {
            let r = m.matvec(&fresh.column(j));
            mc += r.iter().map(|x| x * x).sum::<f64>();
        }
        mc /= fresh.cols() as f64;
        assert!(
            (frob - mc).abs() < 0.02 * frob,
            "Frobenius {frob:e} vs Monte-Carlo {mc:e}"
        );
    }

    #[test]
    fn duplicated_indices_average_over_the_list() {
        let prob = default_problem();
        let params = prob.init_params(Seed(2));
        let (single, gs) = prob.loss_grad(&params, Batch::Indices(&[4])).unwrap();
        let (doubled, gd) = prob.loss_grad(&params, Batch::Indices(&[4, 4])).unwrap();
        assert_eq!(single, doubled);
        assert_eq!(gs, gd);
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let prob = default_problem();
        let mut params = prob.init_params(Seed(1));
        params[10] = f64::NAN;
        assert!(matches!(
            prob.loss_grad(&params, Batch::All),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn problem_construction_is_deterministic_per_seed() {
        let a = ConditionedRegression::new(1e10, Seed(77));
        let b = ConditionedRegression::new(1e10, Seed(77));
        let c = ConditionedRegression::new(1e10, Seed(78));
        assert_eq!(a.matrix().data(), b.matrix().data());
        assert_eq!(a.samples().data(), b.samples().data());
        assert_ne!(a.matrix().data(), c.matrix().data());
        assert_eq!(a.init_params(Seed(0)), b.init_params(Seed(0)));
    }

    #[test]
    #[should_panic(expected = "inner dimension")]
    fn unrealizable_inner_dimension_is_rejected() {
        ConditionedRegression::with_dims(10, 6, 5, 1e3, 10, Seed(0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Losses are non-negative on arbitrary parameters and batches.
        #[test]
        fn losses_are_non_negative(
            seed in 0u64..1000,
            scale in 0.0f64..3.0,
            start in 0usize..990,
            len in 1usize..10,
        ) {
            let prob = ConditionedRegression::with_dims(5, 3, 3, 1e4, 990 + 10, Seed(9));
            let mut rng = Seed(seed).rng();
            let params: Vec<f64> = (0..prob.param_count())
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let indices: Vec<usize> = (start..start + len).collect();
            let (batch_loss, _) = prob.loss_grad(&params, Batch::Indices(&indices)).unwrap();
            let (all_loss, _) = prob.loss_grad(&params, Batch::All).unwrap();
            prop_assert!(batch_loss >= 0.0);
            prop_assert!(all_loss >= 0.0);
        }

        /// A batch loss is the plain mean of its singleton losses.
        #[test]
        fn batch_loss_is_mean_of_singletons(indices in proptest::collection::vec(0usize..20, 1..6)) {
            let prob = ConditionedRegression::with_dims(4, 3, 3, 100.0, 20, Seed(31));
            let params = prob.init_params(Seed(3));
            let (batch_loss, _) = prob.loss_grad(&params, Batch::Indices(&indices)).unwrap();
            let mut mean = 0.0;
            for &i in &indices {
                mean += prob.loss_grad(&params, Batch::Indices(&[i])).unwrap().0;
            }
            mean /= indices.len() as f64;
            prop_assert!((batch_loss - mean).abs() <= 1e-12 * batch_loss.max(1e-300));
        }
    }
}

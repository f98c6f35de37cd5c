//! Fully connected ReLU classifier with a softmax cross-entropy head.
//!
//! The architecture is a plain stack of dense layers (weights and biases)
//! with ReLU activations between them and raw logits at the top; the loss
//! is mean softmax cross-entropy, computed through a log-sum-exp that is
//! stable for arbitrary logit magnitudes. Gradients come from standard
//! backpropagation, with the ReLU subgradient at exactly zero taken as 0.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data_io::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{all_finite, Matrix, Seed};
use crate::problems::{Batch, Problem};

/// Hidden widths of the standard two-layer configuration.
const STANDARD_HIDDEN: [usize; 2] = [300, 100];

/// Architecture of a dense ReLU network: layer widths from input to output.
///
/// Parameters are flattened layer by layer, each layer's weight matrix
/// (`dims[l+1] x dims[l]`, row-major) followed by its bias vector
/// (`dims[l+1]`).
#[derive(Debug, Clone)]
pub struct MlpClassifier {
    dims: Vec<usize>,
}

impl MlpClassifier {
    /// Network with the given layer widths (at least input and output).
    pub fn new(dims: Vec<usize>) -> MlpClassifier {
        assert!(dims.len() >= 2, "mlp: need at least input and output widths");
        assert!(dims.iter().all(|&d| d >= 1), "mlp: zero-width layer");
        MlpClassifier { dims }
    }

    /// The standard configuration: `input - 300 - 100 - classes`.
    pub fn standard(input_dim: usize, num_classes: usize) -> MlpClassifier {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&STANDARD_HIDDEN);
        dims.push(num_classes);
        MlpClassifier::new(dims)
    }

    /// Layer widths from input to output.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of dense layers (weight/bias pairs).
    fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// Total number of parameters: `sum dims[l+1] * (dims[l] + 1)`.
    pub fn param_count(&self) -> usize {
        (0..self.num_layers())
            .map(|l| self.dims[l + 1] * (self.dims[l] + 1))
            .sum()
    }

    /// Offset of layer `l`'s weight block in the flat parameter vector.
    fn layer_offset(&self, l: usize) -> usize {
        (0..l).map(|k| self.dims[k + 1] * (self.dims[k] + 1)).sum()
    }

    /// Weight matrix and bias slice of layer `l`.
    fn layer(&self, params: &[f64], l: usize) -> (Matrix, Vec<f64>) {
        let (rows, cols) = (self.dims[l + 1], self.dims[l]);
        let w_start = self.layer_offset(l);
        let b_start = w_start + rows * cols;
        let w = Matrix::from_vec(rows, cols, params[w_start..b_start].to_vec());
        let b = params[b_start..b_start + rows].to_vec();
        (w, b)
    }

    /// He-style seeded initialization: weights are Gaussian with standard
    /// deviation `sqrt(2 / fan_in)`, biases start at zero.
    pub fn init_params(&self, seed: Seed) -> Vec<f64> {
        let mut rng = seed.rng();
        let mut params = Vec::with_capacity(self.param_count());
        for l in 0..self.num_layers() {
            let fan_in = self.dims[l];
            let std = (2.0 / fan_in as f64).sqrt();
            for _ in 0..self.dims[l + 1] * fan_in {
                params.push(std * rng.sample::<f64, _>(StandardNormal));
            }
            params.extend(std::iter::repeat(0.0).take(self.dims[l + 1]));
        }
        params
    }

    /// Forward pass over a batch (one column per sample); returns the
    /// pre-activations of every layer, `pre[l] = W_l a_l + b_l`, with the
    /// last entry holding the logits.
    fn forward(&self, params: &[f64], inputs: &Matrix) -> Result<Vec<Matrix>> {
        assert_eq!(
            params.len(),
            self.param_count(),
            "mlp: expected {} parameters, got {}",
            self.param_count(),
            params.len()
        );
        assert_eq!(
            inputs.rows(),
            self.dims[0],
            "mlp: input dimension {} does not match the network ({})",
            inputs.rows(),
            self.dims[0]
        );
        if !all_finite(params) {
            return Err(Error::NonFinite {
                what: "mlp parameters",
            });
        }
        let batch = inputs.cols();
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut activation = inputs.clone();
        for l in 0..self.num_layers() {
            let (w, b) = self.layer(params, l);
            let mut z = w.matmul(&activation);
            for i in 0..z.rows() {
                for j in 0..batch {
                    z[(i, j)] += b[i];
                }
            }
            if !all_finite(z.data()) {
                return Err(Error::NonFinite {
                    what: "mlp activations",
                });
            }
            if l + 1 < self.num_layers() {
                activation = z.clone();
                for x in activation.data_mut() {
                    *x = x.max(0.0);
                }
            }
            pre.push(z);
        }
        Ok(pre)
    }

    /// Raw output logits for a batch (one column per sample).
    pub fn logits(&self, params: &[f64], inputs: &Matrix) -> Result<Matrix> {
        Ok(self.forward(params, inputs)?.pop().expect("at least one layer"))
    }

    /// Smallest `|pre-activation|` across all hidden units and samples —
    /// the margin to the nearest ReLU kink. Finite-difference probes are
    /// only trustworthy at points whose margin exceeds the probe step, so
    /// gradient checks use this to reject unlucky evaluation points.
    /// Networks without hidden layers report an infinite margin.
    pub fn hidden_kink_margin(&self, params: &[f64], inputs: &Matrix) -> Result<f64> {
        let pre = self.forward(params, inputs)?;
        let mut margin = f64::INFINITY;
        for z in &pre[..pre.len() - 1] {
            for &value in z.data() {
                margin = margin.min(value.abs());
            }
        }
        Ok(margin)
    }

    /// Mean softmax cross-entropy over the batch and its gradient with
    /// respect to the flat parameter vector.
    pub fn loss_grad(
        &self,
        params: &[f64],
        inputs: &Matrix,
        labels: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        let batch = inputs.cols();
        assert!(batch > 0, "mlp: empty batch");
        assert_eq!(
            batch,
            labels.len(),
            "mlp: {batch} input columns but {} labels",
            labels.len()
        );
        let classes = *self.dims.last().unwrap();
        assert!(
            labels.iter().all(|&l| l < classes),
            "mlp: label out of range for {classes} classes"
        );

        let pre = self.forward(params, inputs)?;
        let logits = pre.last().unwrap();

        // Stable softmax cross-entropy: per column, with m = max logit,
        // loss = m + ln(sum exp(z - m)) - z[label].
        let mut loss = 0.0;
        let mut delta = Matrix::zeros(classes, batch);
        let inv_batch = 1.0 / batch as f64;
        for j in 0..batch {
            let mut max = f64::NEG_INFINITY;
            for i in 0..classes {
                max = max.max(logits[(i, j)]);
            }
            let mut sum = 0.0;
            for i in 0..classes {
                sum += (logits[(i, j)] - max).exp();
            }
            let lse = max + sum.ln();
            loss += lse - logits[(labels[j], j)];
            for i in 0..classes {
                delta[(i, j)] = ((logits[(i, j)] - lse).exp()
                    - if i == labels[j] { 1.0 } else { 0.0 })
                    * inv_batch;
            }
        }
        loss *= inv_batch;

        // Backpropagation. delta holds dLoss/dPre of the current layer.
        let mut grad = vec![0.0; self.param_count()];
        for l in (0..self.num_layers()).rev() {
            let prev_activation = if l == 0 {
                inputs.clone()
            } else {
                let mut a = pre[l - 1].clone();
                for x in a.data_mut() {
                    *x = x.max(0.0);
                }
                a
            };
            let dw = delta.matmul_transpose(&prev_activation);
            let w_start = self.layer_offset(l);
            grad[w_start..w_start + dw.data().len()].copy_from_slice(dw.data());
            let b_start = w_start + dw.data().len();
            for i in 0..self.dims[l + 1] {
                let mut sum = 0.0;
                for j in 0..batch {
                    sum += delta[(i, j)];
                }
                grad[b_start + i] = sum;
            }
            if l > 0 {
                let (w, _) = self.layer(params, l);
                let mut upstream = w.transpose_matmul(&delta);
                // ReLU mask: subgradient 0 at exactly zero.
                for i in 0..upstream.rows() {
                    for j in 0..batch {
                        if pre[l - 1][(i, j)] <= 0.0 {
                            upstream[(i, j)] = 0.0;
                        }
                    }
                }
                delta = upstream;
            }
        }

        if !loss.is_finite() {
            return Err(Error::NonFinite { what: "mlp loss" });
        }
        Ok((loss, grad))
    }

    /// Fraction of samples whose argmax logit equals the label (ties broken
    /// towards the lowest class index).
    pub fn accuracy(&self, params: &[f64], inputs: &Matrix, labels: &[usize]) -> Result<f64> {
        let logits = self.logits(params, inputs)?;
        let mut correct = 0usize;
        for j in 0..inputs.cols() {
            let mut best = 0;
            for i in 1..logits.rows() {
                if logits[(i, j)] > logits[(best, j)] {
                    best = i;
                }
            }
            if best == labels[j] {
                correct += 1;
            }
        }
        Ok(correct as f64 / inputs.cols() as f64)
    }
}

/// An [`MlpClassifier`] bound to a fixed dataset, exposing the batched
/// [`Problem`] interface used by optimizers and the harness.
#[derive(Debug, Clone)]
pub struct MlpProblem {
    classifier: MlpClassifier,
    data: Dataset,
}

impl MlpProblem {
    /// Bind a classifier to its dataset; widths must match the data.
    pub fn new(classifier: MlpClassifier, data: Dataset) -> MlpProblem {
        assert_eq!(
            classifier.dims()[0],
            data.feature_dim(),
            "mlp problem: input width does not match the dataset"
        );
        assert_eq!(
            *classifier.dims().last().unwrap(),
            data.num_classes(),
            "mlp problem: output width does not match the class count"
        );
        MlpProblem { classifier, data }
    }

    /// The standard `input - 300 - 100 - classes` network on `data`.
    pub fn standard(data: Dataset) -> MlpProblem {
        let classifier = MlpClassifier::standard(data.feature_dim(), data.num_classes());
        MlpProblem::new(classifier, data)
    }

    /// The underlying architecture.
    pub fn classifier(&self) -> &MlpClassifier {
        &self.classifier
    }

    /// The bound dataset.
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Whole-dataset classification accuracy.
    pub fn accuracy(&self, params: &[f64]) -> Result<f64> {
        self.classifier
            .accuracy(params, self.data.inputs(), self.data.labels())
    }

    /// Copy the selected samples into a dense batch.
    fn gather(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        assert!(!indices.is_empty(), "mlp problem: empty batch");
        let dim = self.data.feature_dim();
        let mut inputs = Matrix::zeros(dim, indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for (j, &idx) in indices.iter().enumerate() {
            assert!(
                idx < self.data.n(),
                "mlp problem: sample index {idx} out of range for {} samples",
                self.data.n()
            );
            for i in 0..dim {
                inputs[(i, j)] = self.data.inputs()[(i, idx)];
            }
            labels.push(self.data.labels()[idx]);
        }
        (inputs, labels)
    }
}

impl Problem for MlpProblem {
    fn param_count(&self) -> usize {
        self.classifier.param_count()
    }

    fn num_samples(&self) -> usize {
        self.data.n()
    }

    fn init_params(&self, seed: Seed) -> Vec<f64> {
        self.classifier.init_params(seed)
    }

    fn loss_grad(&self, params: &[f64], batch: Batch) -> Result<(f64, Vec<f64>)> {
        match batch {
            Batch::All => {
                self.classifier
                    .loss_grad(params, self.data.inputs(), self.data.labels())
            }
            Batch::Indices(indices) => {
                let (inputs, labels) = self.gather(indices);
                self.classifier.loss_grad(params, &inputs, &labels)
            }
        }
    }
}

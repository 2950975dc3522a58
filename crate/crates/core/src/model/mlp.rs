//! Three fully connected layers with a rectifier between them and a
//! softmax head over the class labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelError;
use crate::vocabulary::LabelSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Row-major, `output_dim` rows of `input_dim` columns.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            output_dim,
            weights: vec![0.0; input_dim * output_dim],
            biases: vec![0.0; output_dim],
        }
    }

    fn seeded(input_dim: usize, output_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        // uniform scaled by fan-in
        let bound = 1.0 / (input_dim as f64).sqrt();
        let mut layer = Self::zeros(input_dim, output_dim);
        for w in &mut layer.weights {
            *w = rng.gen_range(-bound..bound);
        }
        layer
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for row in 0..self.output_dim {
            let weights = &self.weights[row * self.input_dim..(row + 1) * self.input_dim];
            let mut acc = self.biases[row];
            for (w, x) in weights.iter().zip(input) {
                acc += w * x;
            }
            out.push(acc);
        }
    }
}

/// Per-parameter gradients, mirroring the layer layout.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>, // (d_weights, d_biases)
}

impl Gradients {
    pub fn zeros_like(model: &MlpClassifier) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub layers: Vec<Layer>,
    pub label_set: LabelSet,
    pub backend_name: String,
}

impl MlpClassifier {
    /// Builds `[m, h1, h2, c]` with seeded fan-in-scaled uniform weights.
    pub fn new(
        embedding_dim: usize,
        hidden1: usize,
        hidden2: usize,
        label_set: LabelSet,
        backend_name: &str,
        seed: u64,
    ) -> Self {
        let c = label_set.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = vec![
            Layer::seeded(embedding_dim, hidden1, &mut rng),
            Layer::seeded(hidden1, hidden2, &mut rng),
            Layer::seeded(hidden2, c, &mut rng),
        ];
        Self {
            layers,
            label_set,
            backend_name: backend_name.to_string(),
        }
    }

    /// All-zero weights; softmax is then uniform for every input.
    pub fn zeroed(
        embedding_dim: usize,
        hidden1: usize,
        hidden2: usize,
        label_set: LabelSet,
        backend_name: &str,
    ) -> Self {
        let c = label_set.len();
        Self {
            layers: vec![
                Layer::zeros(embedding_dim, hidden1),
                Layer::zeros(hidden1, hidden2),
                Layer::zeros(hidden2, c),
            ],
            label_set,
            backend_name: backend_name.to_string(),
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn class_count(&self) -> usize {
        self.layers.last().unwrap().output_dim
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].input_dim];
        dims.extend(self.layers.iter().map(|l| l.output_dim));
        dims
    }

    /// Softmax probabilities over the class labels.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, ModelError> {
        if input.len() != self.embedding_dim() {
            return Err(ModelError::DimensionMismatch {
                got: input.len(),
                expected: self.embedding_dim(),
            });
        }
        let (_, _, logits) = self.forward_trace(input);
        Ok(softmax(&logits))
    }

    // pre-activation traces kept for backprop
    fn forward_trace(&self, input: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut h1 = Vec::new();
        self.layers[0].affine(input, &mut h1);
        relu_inplace(&mut h1);
        let mut h2 = Vec::new();
        self.layers[1].affine(&h1, &mut h2);
        relu_inplace(&mut h2);
        let mut logits = Vec::new();
        self.layers[2].affine(&h2, &mut logits);
        (h1, h2, logits)
    }

    /// Mean cross-entropy over the batch plus exact gradients for every
    /// parameter of the softmax–cross-entropy composition.
    pub fn loss_and_gradients(
        &self,
        batch: &[(&[f64], usize)],
    ) -> Result<(f64, Gradients), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let c = self.class_count();
        let mut grads = Gradients::zeros_like(self);
        let mut total_loss = 0.0;
        let scale = 1.0 / batch.len() as f64;

        for (input, label) in batch {
            if *label >= c {
                return Err(ModelError::InvalidLabel(*label));
            }
            if input.len() != self.embedding_dim() {
                return Err(ModelError::DimensionMismatch {
                    got: input.len(),
                    expected: self.embedding_dim(),
                });
            }
            let (h1, h2, logits) = self.forward_trace(input);
            let probs = softmax(&logits);
            total_loss -= probs[*label].max(f64::MIN_POSITIVE).ln();

            // dL/dlogits = p - onehot(label), scaled by 1/batch
            let mut delta: Vec<f64> = probs.iter().map(|p| p * scale).collect();
            delta[*label] -= scale;

            let delta = self.backprop_layer(2, &h2, &delta, &mut grads);
            let delta = apply_relu_mask(delta, &h2);
            let delta = self.backprop_layer(1, &h1, &delta, &mut grads);
            let delta = apply_relu_mask(delta, &h1);
            self.backprop_layer(0, input, &delta, &mut grads);
        }

        let loss = total_loss * scale;
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss);
        }
        Ok((loss, grads))
    }

    // accumulates d_weights/d_biases for `layer_idx` and returns dL/d_input
    fn backprop_layer(
        &self,
        layer_idx: usize,
        input: &[f64],
        delta: &[f64],
        grads: &mut Gradients,
    ) -> Vec<f64> {
        let layer = &self.layers[layer_idx];
        let (gw, gb) = &mut grads.layers[layer_idx];
        let mut d_input = vec![0.0; layer.input_dim];
        for row in 0..layer.output_dim {
            let d = delta[row];
            gb[row] += d;
            let weights = &layer.weights[row * layer.input_dim..(row + 1) * layer.input_dim];
            let gw_row = &mut gw[row * layer.input_dim..(row + 1) * layer.input_dim];
            for col in 0..layer.input_dim {
                gw_row[col] += d * input[col];
                d_input[col] += d * weights[col];
            }
        }
        d_input
    }

    /// Predicted class: argmax with lowest-index tie-break.
    pub fn predict(&self, input: &[f64]) -> Result<(usize, Vec<f64>), ModelError> {
        let probs = self.forward(input)?;
        Ok((argmax(&probs), probs))
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    pub fn assign_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut offset = 0;
        for layer in &mut self.layers {
            let w_len = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + w_len]);
            offset += w_len;
            let b_len = layer.biases.len();
            layer.biases.copy_from_slice(&params[offset..offset + b_len]);
            offset += b_len;
        }
    }
}

fn relu_inplace(values: &mut [f64]) {
    for v in values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn apply_relu_mask(mut delta: Vec<f64>, activated: &[f64]) -> Vec<f64> {
    for (d, a) in delta.iter_mut().zip(activated) {
        if *a <= 0.0 {
            *d = 0.0;
        }
    }
    delta
}

/// Numerically stable softmax; output sums to 1 within f64 rounding.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Lowest-index argmax.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocabulary::{AttributeKind, LabelSet};

    fn label_set(c: usize) -> LabelSet {
        let classes: Vec<String> = (0..c).map(|i| format!("class-{i}")).collect();
        LabelSet::new(AttributeKind::Color, classes, c - 1)
    }

    fn random_input(dim: usize, seed: u64) -> Vec<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_model_is_uniform() {
        let model = MlpClassifier::zeroed(8, 6, 5, label_set(4), "hashing");
        let probs = model.forward(&[0.3; 8]).unwrap();
        for p in &probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = MlpClassifier::new(8, 6, 5, label_set(4), "hashing", 3);
        for seed in 0..50 {
            let probs = model.forward(&random_input(8, seed)).unwrap();
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let model = MlpClassifier::new(8, 6, 5, label_set(4), "hashing", 3);
        assert!(matches!(
            model.forward(&[0.0; 7]),
            Err(ModelError::DimensionMismatch { got: 7, expected: 8 })
        ));
    }

    // independently coded naive route: explicit matrix-vector products
    fn naive_forward(model: &MlpClassifier, input: &[f64]) -> Vec<f64> {
        let mut activation: Vec<f64> = input.to_vec();
        for (idx, layer) in model.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.output_dim];
            #[allow(clippy::needless_range_loop)]
            for r in 0..layer.output_dim {
                let mut s = 0.0;
                for c in 0..layer.input_dim {
                    s += layer.weights[r * layer.input_dim + c] * activation[c];
                }
                next[r] = s + layer.biases[r];
            }
            if idx < model.layers.len() - 1 {
                for v in &mut next {
                    *v = v.max(0.0);
                }
            }
            activation = next;
        }
        let max = activation.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = activation.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.iter().map(|e| e / sum).collect()
    }

    #[test]
    fn forward_matches_naive_route() {
        let model = MlpClassifier::new(8, 6, 5, label_set(4), "hashing", 11);
        for seed in 0..20 {
            let input = random_input(8, seed);
            let fast = model.forward(&input).unwrap();
            let naive = naive_forward(&model, &input);
            for (a, b) in fast.iter().zip(&naive) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn loss_on_confident_correct_prediction_is_zero() {
        // drive one logit far above the others through the last-layer bias
        let mut model = MlpClassifier::zeroed(8, 6, 5, label_set(4), "hashing");
        model.layers[2].biases[2] = 60.0;
        let input = vec![0.0; 8];
        let (loss, _) = model.loss_and_gradients(&[(&input, 2)]).unwrap();
        assert!(loss < 1e-12, "loss was {loss}");
    }

    #[test]
    fn uniform_output_loss_is_ln_c() {
        let model = MlpClassifier::zeroed(8, 6, 5, label_set(4), "hashing");
        let input = vec![0.1; 8];
        let (loss, _) = model.loss_and_gradients(&[(&input, 1)]).unwrap();
        assert!((loss - 4.0_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut model = MlpClassifier::new(8, 6, 5, label_set(4), "hashing", 7);
        let inputs: Vec<Vec<f64>> = (0..8).map(|s| random_input(8, 100 + s)).collect();
        let labels = [0usize, 1, 2, 3, 0, 1, 2, 3];
        let batch: Vec<(&[f64], usize)> = inputs
            .iter()
            .zip(labels)
            .map(|(v, l)| (v.as_slice(), l))
            .collect();

        let (_, grads) = model.loss_and_gradients(&batch).unwrap();
        let analytic = grads.flatten();
        let mut params = model.flatten_params();
        let step = 1e-5;
        for i in 0..params.len() {
            let orig = params[i];
            params[i] = orig + step;
            model.assign_params(&params);
            let (lp, _) = model.loss_and_gradients(&batch).unwrap();
            params[i] = orig - step;
            model.assign_params(&params);
            let (lm, _) = model.loss_and_gradients(&batch).unwrap();
            params[i] = orig;
            let numeric = (lp - lm) / (2.0 * step);
            let denom = (analytic[i].abs() + numeric.abs()).max(1e-5);
            let rel = (analytic[i] - numeric).abs() / denom;
            assert!(
                rel < 1e-4,
                "param {i}: analytic {} vs numeric {} (rel {rel})",
                analytic[i],
                numeric
            );
        }
        model.assign_params(&params);
    }
}

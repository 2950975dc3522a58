//! Adam with bias correction.

use super::mlp::{Gradients, MlpClassifier};

#[derive(Debug, Clone)]
pub struct AdamState {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        assert!(beta1 > 0.0 && beta1 < 1.0);
        assert!(beta2 > 0.0 && beta2 < 1.0);
        Self {
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over the flattened parameter vector.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64], learning_rate: f64) {
        assert_eq!(params.len(), self.first_moment.len());
        assert_eq!(params.len(), grads.len());
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.first_moment[i] = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * g;
            self.second_moment[i] = self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first_moment[i] / bias1;
            let v_hat = self.second_moment[i] / bias2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }

    /// One update directly on a model, given layered gradients.
    pub fn apply_to_model(
        &mut self,
        model: &mut MlpClassifier,
        grads: &Gradients,
        learning_rate: f64,
    ) {
        let mut params = model.flatten_params();
        let flat = grads.flatten();
        self.apply(&mut params, &flat, learning_rate);
        model.assign_params(&params);
    }
}

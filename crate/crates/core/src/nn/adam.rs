use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Adam hyperparameters. Weight decay is coupled: `weight_decay · w` is added
/// to the gradient before the moment updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// First and second moment estimates for a fixed list of parameters.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        let first: Vec<_> = params.into_iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect();
        let second = first.clone();
        Self { first, second, step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. `grads[i]` must be the gradient of `params[i]`; a missing
    /// gradient means backward has not run and is an error.
    pub fn step<'a>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut Tensor<T>>,
        grads: &[Option<Tensor<T>>],
        cfg: &AdamConfig,
    ) -> Result<()> {
        let params: Vec<&mut Tensor<T>> = params.into_iter().collect();
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(Error::Invalid(format!(
                "adam tracks {} parameters, got {} parameters and {} gradients",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(Option::is_none) {
            return Err(Error::MissingGradient(format!(
                "parameter {i} has no gradient; run backward first"
            )));
        }
        self.step += 1;
        let t = self.step as f64;
        let lr = T::lit(cfg.learning_rate);
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let (one_b1, one_b2) = (T::lit(1.0 - cfg.beta1), T::lit(1.0 - cfg.beta2));
        let bc1 = T::lit(1.0 - cfg.beta1.powf(t));
        let bc2 = T::lit(1.0 - cfg.beta2.powf(t));
        let eps = T::lit(cfg.eps);
        let wd = T::lit(cfg.weight_decay);

        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let g = g.as_ref().expect("checked above");
            if g.shape() != p.shape() {
                return Err(Error::shape(
                    "adam",
                    format!("param {:?} vs grad {:?}", p.shape(), g.shape()),
                ));
            }
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                let gi = gi + wd * *w;
                *mi = b1 * *mi + one_b1 * gi;
                *vi = b2 * *vi + one_b2 * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

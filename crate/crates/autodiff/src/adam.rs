use crate::error::TensorError;
use crate::tensor::Tensor;

/// Adam hyperparameters. `with_learning_rate` fills in the conventional
/// defaults for the moment decays and epsilon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer with bias-corrected first and second moments:
///
/// ```text
/// m <- b1*m + (1-b1)*g        m_hat = m / (1 - b1^t)
/// v <- b2*v + (1-b2)*g^2      v_hat = v / (1 - b2^t)
/// p <- p - lr * m_hat / (sqrt(v_hat) + epsilon)
/// ```
///
/// Moment buffers are allocated on the first step and locked to that
/// parameter list's shapes afterwards.
#[derive(Debug)]
pub struct Adam {
    config: AdamConfig,
    step_count: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step_count: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.config.learning_rate
    }

    /// Changes the learning rate for subsequent steps, leaving moment
    /// buffers and the step count intact.
    pub fn set_learning_rate(&mut self, learning_rate: f64) {
        self.config.learning_rate = learning_rate;
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update to `params` in place from matching `grads`.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[&Tensor]) -> Result<(), TensorError> {
        if params.len() != grads.len() {
            return Err(TensorError::ParamCountMismatch {
                got: grads.len(),
                expected: params.len(),
            });
        }
        if self.m.is_empty() && self.step_count == 0 {
            self.m = params.iter().map(|p| vec![0.0; p.numel()]).collect();
            self.v = params.iter().map(|p| vec![0.0; p.numel()]).collect();
        }
        if params.len() != self.m.len() {
            return Err(TensorError::ParamCountMismatch {
                got: params.len(),
                expected: self.m.len(),
            });
        }
        for (param, grad) in params.iter().zip(grads.iter()) {
            if param.shape() != grad.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "adam step",
                    lhs: param.shape().to_vec(),
                    rhs: grad.shape().to_vec(),
                });
            }
        }

        let t = self.step_count + 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let bias1 = 1.0 - beta1.powi(t as i32);
        let bias2 = 1.0 - beta2.powi(t as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for ((p, &g), (m, v)) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
            param.check_finite("adam step")?;
        }
        self.step_count = t;
        Ok(())
    }
}

//! Rectified Adam over a flat parameter vector.

use serde::{Deserialize, Serialize};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;
/// The adaptive step is used once the variance length estimate exceeds this.
const RHO_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadamState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

/// What a step did, for logging and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Momentum-only update while the variance estimate is untrustworthy.
    Unrectified,
    Rectified,
    /// Non-finite gradient: parameters and state left untouched.
    Skipped,
}

impl RadamState {
    pub fn new(len: usize) -> Self {
        Self {
            step: 0,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }

    /// Applies one update in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> StepKind {
        assert_eq!(params.len(), self.len(), "parameter count changed");
        assert_eq!(grads.len(), self.len(), "gradient count mismatch");
        if grads.iter().any(|g| !g.is_finite()) {
            return StepKind::Skipped;
        }
        self.step += 1;
        let t = self.step as f64;
        let b1t = BETA1.powf(t);
        let b2t = BETA2.powf(t);
        let rho_inf = 2.0 / (1.0 - BETA2) - 1.0;
        let rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
        let rect = if rho_t > RHO_THRESHOLD {
            Some(
                ((rho_t - 4.0) * (rho_t - 2.0) * rho_inf
                    / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                    .sqrt(),
            )
        } else {
            None
        };
        for i in 0..params.len() {
            let g = grads[i];
            self.first_moment[i] = BETA1 * self.first_moment[i] + (1.0 - BETA1) * g;
            self.second_moment[i] = BETA2 * self.second_moment[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.first_moment[i] / (1.0 - b1t);
            params[i] -= match rect {
                Some(r) => {
                    let v_hat = (self.second_moment[i] / (1.0 - b2t)).sqrt();
                    lr * r * m_hat / (v_hat + EPSILON)
                }
                None => lr * m_hat,
            };
        }
        if rect.is_some() {
            StepKind::Rectified
        } else {
            StepKind::Unrectified
        }
    }
}

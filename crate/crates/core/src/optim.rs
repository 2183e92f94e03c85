//! First-order update rules over a flat parameter vector.
//!
//! Every algorithm keeps its own state (step count plus whichever of the
//! previous update, squared-gradient accumulator and moment estimates it
//! needs). State persists across calls, so a model can keep training on new
//! data with the optimizer exactly where it left off.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "SGD")]
    Sgd,
    #[serde(rename = "SGD-m")]
    SgdMomentum,
    #[serde(rename = "NAG")]
    Nag,
    #[serde(rename = "NAG-m")]
    NagMomentum,
    #[serde(rename = "AdaGrad")]
    AdaGrad,
    #[serde(rename = "Adam")]
    Adam,
    #[serde(rename = "Nadam")]
    Nadam,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Sgd,
        Algorithm::SgdMomentum,
        Algorithm::Nag,
        Algorithm::NagMomentum,
        Algorithm::AdaGrad,
        Algorithm::Adam,
        Algorithm::Nadam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgd => "SGD",
            Algorithm::SgdMomentum => "SGD-m",
            Algorithm::Nag => "NAG",
            Algorithm::NagMomentum => "NAG-m",
            Algorithm::AdaGrad => "AdaGrad",
            Algorithm::Adam => "Adam",
            Algorithm::Nadam => "Nadam",
        }
    }

    fn uses_momentum(self) -> bool {
        matches!(
            self,
            Algorithm::SgdMomentum | Algorithm::Nag | Algorithm::NagMomentum
        )
    }

    fn uses_lookahead(self) -> bool {
        matches!(self, Algorithm::Nag | Algorithm::NagMomentum)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::Config(format!("unknown algorithm `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn defaults(algorithm: Algorithm) -> Self {
        let learning_rate = match algorithm {
            Algorithm::Adam | Algorithm::Nadam => 0.001,
            _ => 0.01,
        };
        OptimizerConfig {
            algorithm,
            learning_rate,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{}: {what}", self.algorithm)));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    /// Completed steps.
    pub step: u64,
    pub prev_update: Vec<f64>,
    pub grad_sq_sum: Vec<f64>,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl OptimizerState {
    fn zeroed(algorithm: Algorithm, n: usize) -> Self {
        let sized = |used: bool| if used { vec![0.0; n] } else { Vec::new() };
        let moments = matches!(algorithm, Algorithm::Adam | Algorithm::Nadam);
        OptimizerState {
            step: 0,
            prev_update: sized(algorithm.uses_momentum()),
            grad_sq_sum: sized(algorithm == Algorithm::AdaGrad),
            first_moment: sized(moments),
            second_moment: sized(moments),
        }
    }

    /// SHA-256 over the step count and every state value's bit pattern.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.step.to_le_bytes());
        for v in [&self.prev_update, &self.grad_sq_sum, &self.first_moment, &self.second_moment] {
            h.update((v.len() as u64).to_le_bytes());
            for x in v {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub state: OptimizerState,
    n_params: usize,
}

fn check_gradient(g: &[f64], n: usize) -> Result<()> {
    if g.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: g.len(),
        });
    }
    match g.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteGradient { index }),
        None => Ok(()),
    }
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, n_params: usize) -> Result<Self> {
        config.validate()?;
        Ok(Optimizer {
            config,
            state: OptimizerState::zeroed(config.algorithm, n_params),
            n_params,
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Point at which the next gradient is taken: the lookahead
    /// `theta + momentum * prev_update` for the Nesterov variants, `theta`
    /// otherwise.
    pub fn gradient_point(&self, theta: &[f64]) -> Vec<f64> {
        if self.config.algorithm.uses_lookahead() {
            let m = self.config.momentum;
            theta
                .iter()
                .zip(&self.state.prev_update)
                .map(|(t, d)| t + m * d)
                .collect()
        } else {
            theta.to_vec()
        }
    }

    /// One update. `grad` is evaluated at [`Optimizer::gradient_point`].
    /// Returns the applied update. On error neither `theta` nor the state
    /// is touched.
    pub fn step<F>(&mut self, theta: &mut [f64], mut grad: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        if theta.len() != self.n_params {
            return Err(Error::Dimension {
                expected: self.n_params,
                got: theta.len(),
            });
        }
        let g = grad(&self.gradient_point(theta))?;
        self.apply_gradient(theta, &g)
    }

    /// Update from a gradient already evaluated at the gradient point.
    pub fn apply_gradient(&mut self, theta: &mut [f64], g: &[f64]) -> Result<Vec<f64>> {
        check_gradient(g, self.n_params)?;
        let c = self.config;
        let s = &mut self.state;
        let k = s.step + 1;
        let update: Vec<f64> = match c.algorithm {
            Algorithm::Sgd => g.iter().map(|gi| -c.learning_rate * gi).collect(),
            Algorithm::SgdMomentum | Algorithm::NagMomentum => {
                let upd: Vec<f64> = g
                    .iter()
                    .zip(&s.prev_update)
                    .map(|(gi, d)| c.momentum * d - c.learning_rate * gi)
                    .collect();
                s.prev_update.clone_from(&upd);
                upd
            }
            Algorithm::Nag => {
                let upd: Vec<f64> = g.iter().map(|gi| -c.learning_rate * gi).collect();
                s.prev_update.clone_from(&upd);
                upd
            }
            Algorithm::AdaGrad => g
                .iter()
                .zip(s.grad_sq_sum.iter_mut())
                .map(|(gi, acc)| {
                    *acc += gi * gi;
                    let denom = acc.sqrt() + c.epsilon;
                    if denom > 0.0 {
                        -c.learning_rate * gi / denom
                    } else {
                        0.0
                    }
                })
                .collect(),
            Algorithm::Adam | Algorithm::Nadam => {
                let bc1 = 1.0 - c.beta1.powf(k as f64);
                let bc2 = 1.0 - c.beta2.powf(k as f64);
                let nesterov = c.algorithm == Algorithm::Nadam;
                g.iter()
                    .zip(s.first_moment.iter_mut().zip(s.second_moment.iter_mut()))
                    .map(|(gi, (m, v))| {
                        *m = c.beta1 * *m + (1.0 - c.beta1) * gi;
                        *v = c.beta2 * *v + (1.0 - c.beta2) * gi * gi;
                        let m_hat = *m / bc1;
                        let v_hat = *v / bc2;
                        let dir = if nesterov {
                            c.beta1 * m_hat + (1.0 - c.beta1) * gi / bc1
                        } else {
                            m_hat
                        };
                        let denom = v_hat.sqrt() + c.epsilon;
                        if denom > 0.0 {
                            -c.learning_rate * dir / denom
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        };
        for (t, d) in theta.iter_mut().zip(&update) {
            *t += d;
        }
        s.step = k;
        Ok(update)
    }
}

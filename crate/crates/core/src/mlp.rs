//! Feed-forward classifier with a two-way softmax output, mean cross-entropy
//! loss and exact backpropagation.
//!
//! Parameters live in one flat vector so optimizers can treat them as a
//! single point. Layer `l` occupies `out_l * in_l` weights (row-major, one
//! row per output unit) followed by `out_l` biases.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!(
                "unknown activation `{other}` (expected relu or tanh)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    /// `[inputs, hidden..., 2]`.
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
}

#[derive(Clone, Copy, Debug)]
struct LayerSpan {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl LayerSpan {
    fn weights<'a>(&self, theta: &'a [f64]) -> ArrayView2<'a, f64> {
        let n = self.inputs * self.outputs;
        ArrayView2::from_shape((self.outputs, self.inputs), &theta[self.offset..self.offset + n])
            .expect("layer span matches parameter layout")
    }

    fn biases<'a>(&self, theta: &'a [f64]) -> ArrayView1<'a, f64> {
        let start = self.offset + self.inputs * self.outputs;
        ArrayView1::from(&theta[start..start + self.outputs])
    }
}

impl MlpArchitecture {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        let arch = MlpArchitecture {
            layer_sizes,
            activation,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// `[inputs, hidden..., 2]` with the default hidden widths 64 and 32.
    pub fn default_for(inputs: usize) -> Self {
        MlpArchitecture {
            layer_sizes: vec![inputs, 64, 32, 2],
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(Error::Config("architecture needs at least one hidden layer".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Config("layer sizes must be at least 1".into()));
        }
        if self.layer_sizes.last() != Some(&2) {
            return Err(Error::Config("output layer must have 2 units".into()));
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    fn spans(&self) -> Vec<LayerSpan> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let span = LayerSpan {
                    inputs: w[0],
                    outputs: w[1],
                    offset,
                };
                offset += (w[0] + 1) * w[1];
                span
            })
            .collect()
    }

    fn check(&self, theta: &[f64], x_cols: usize) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::Dimension {
                expected: self.param_count(),
                got: theta.len(),
            });
        }
        if x_cols != self.inputs() {
            return Err(Error::Dimension {
                expected: self.inputs(),
                got: x_cols,
            });
        }
        Ok(())
    }
}

/// Scaled-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_params(arch: &MlpArchitecture, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = vec![0.0; arch.param_count()];
    for span in arch.spans() {
        let bound = init_bound(span.inputs, span.outputs);
        for w in &mut theta[span.offset..span.offset + span.inputs * span.outputs] {
            *w = rng.gen_range(-bound..=bound);
        }
    }
    theta
}

pub fn init_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Row-wise softmax with max subtraction.
fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    p
}

/// Hidden activations of every layer and the output logits.
struct ForwardPass {
    hidden: Vec<Array2<f64>>,
    logits: Array2<f64>,
}

fn forward_pass(theta: &[f64], arch: &MlpArchitecture, x: ArrayView2<f64>) -> ForwardPass {
    let spans = arch.spans();
    let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(spans.len() - 1);
    let mut logits = Array2::zeros((0, 0));
    for (l, span) in spans.iter().enumerate() {
        let input = if l == 0 { x } else { hidden[l - 1].view() };
        let mut z = input.dot(&span.weights(theta).t());
        z += &span.biases(theta);
        if l + 1 == spans.len() {
            logits = z;
        } else {
            match arch.activation {
                Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
                Activation::Tanh => z.mapv_inplace(f64::tanh),
            }
            hidden.push(z);
        }
    }
    ForwardPass { hidden, logits }
}

/// Class probabilities `[p_secure, p_insecure]` for one standardized input.
pub fn forward(theta: &[f64], arch: &MlpArchitecture, x: &[f64]) -> Result<[f64; 2]> {
    let x = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
    let p = predict_proba(theta, arch, x)?;
    Ok([p[(0, 0)], p[(0, 1)]])
}

/// Output logits for a batch (rows are samples).
pub fn logits(theta: &[f64], arch: &MlpArchitecture, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    arch.check(theta, x.ncols())?;
    Ok(forward_pass(theta, arch, x).logits)
}

pub fn predict_proba(theta: &[f64], arch: &MlpArchitecture, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    Ok(softmax_rows(&logits(theta, arch, x)?))
}

/// `-log softmax(z)[class]` computed from logits without forming probabilities.
fn nll(row: ArrayView1<f64>, class: usize) -> f64 {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - row[class]
}

fn check_labels(y: &[usize], rows: usize) -> Result<()> {
    if y.len() != rows {
        return Err(Error::Dimension {
            expected: rows,
            got: y.len(),
        });
    }
    if y.iter().any(|&c| c > 1) {
        return Err(Error::invalid("class indices must be 0 or 1"));
    }
    Ok(())
}

/// Mean cross-entropy over the batch and its exact gradient in the flat
/// parameter layout.
pub fn loss_and_gradient(
    theta: &[f64],
    arch: &MlpArchitecture,
    x: ArrayView2<f64>,
    y: &[usize],
) -> Result<(f64, Vec<f64>)> {
    arch.check(theta, x.ncols())?;
    if x.nrows() == 0 {
        return Err(Error::invalid("empty batch"));
    }
    check_labels(y, x.nrows())?;
    let n = x.nrows() as f64;
    let pass = forward_pass(theta, arch, x);
    let loss = pass
        .logits
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &c)| nll(row, c))
        .sum::<f64>()
        / n;

    // dL/dz at the output: (p - onehot) / n
    let mut delta = softmax_rows(&pass.logits);
    for (mut row, &c) in delta.rows_mut().into_iter().zip(y) {
        row[c] -= 1.0;
    }
    delta /= n;

    let spans = arch.spans();
    let mut grad = vec![0.0; theta.len()];
    for l in (0..spans.len()).rev() {
        let span = spans[l];
        let input = if l == 0 { x } else { pass.hidden[l - 1].view() };
        let gw = delta.t().dot(&input);
        let gb: Array1<f64> = delta.sum_axis(Axis(0));
        let w_end = span.offset + span.inputs * span.outputs;
        grad[span.offset..w_end].copy_from_slice(gw.as_slice().expect("standard layout"));
        grad[w_end..w_end + span.outputs].copy_from_slice(gb.as_slice().expect("contiguous"));
        if l > 0 {
            let mut back = delta.dot(&span.weights(theta));
            let act = &pass.hidden[l - 1];
            match arch.activation {
                Activation::Relu => back.zip_mut_with(act, |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                }),
                Activation::Tanh => back.zip_mut_with(act, |d, &a| *d *= 1.0 - a * a),
            }
            delta = back;
        }
    }
    Ok((loss, grad))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub loss: f64,
}

/// Accuracy and mean cross-entropy. Equal probabilities predict class 0.
pub fn evaluate(theta: &[f64], arch: &MlpArchitecture, x: ArrayView2<f64>, y: &[usize]) -> Result<Metrics> {
    check_labels(y, x.nrows())?;
    let z = logits(theta, arch, x)?;
    if y.is_empty() {
        return Ok(Metrics {
            accuracy: 0.0,
            loss: 0.0,
        });
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    for (row, &c) in z.rows().into_iter().zip(y) {
        let predicted = if row[1] > row[0] { 1 } else { 0 };
        correct += usize::from(predicted == c);
        loss += nll(row, c);
    }
    let n = y.len() as f64;
    Ok(Metrics {
        accuracy: correct as f64 / n,
        loss: loss / n,
    })
}

/// Per-feature mean and standard deviation of a training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1.0 for constant features.
    pub std: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit(ds: &Dataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::invalid("cannot standardize an empty dataset"));
        }
        let m = ds.feature_names.len();
        let n = ds.len() as f64;
        let mut mean = vec![0.0; m];
        for s in &ds.samples {
            for (acc, x) in mean.iter_mut().zip(&s.features) {
                *acc += x;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);
        let mut var = vec![0.0; m];
        for s in &ds.samples {
            for ((acc, x), mu) in var.iter_mut().zip(&s.features).zip(&mean) {
                *acc += (x - mu) * (x - mu);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 * (1.0 + sd.abs()) && sd.is_finite() && sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(StandardizationStats { mean, std })
    }

    /// Standardized design matrix and class indices for a dataset.
    pub fn apply(&self, ds: &Dataset) -> Result<(Array2<f64>, Vec<usize>)> {
        let m = self.mean.len();
        if ds.feature_names.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: ds.feature_names.len(),
            });
        }
        let mut x = Array2::zeros((ds.len(), m));
        for (mut row, s) in x.rows_mut().into_iter().zip(&ds.samples) {
            for j in 0..m {
                row[j] = (s.features[j] - self.mean[j]) / self.std[j];
            }
        }
        let y = ds.samples.iter().map(|s| s.label.class_index()).collect();
        Ok((x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn arch(sizes: &[usize]) -> MlpArchitecture {
        MlpArchitecture::new(sizes.to_vec(), Activation::Tanh).unwrap()
    }

    #[test]
    fn architecture_validation() {
        assert!(MlpArchitecture::new(vec![4, 2], Activation::Relu).is_err());
        assert!(MlpArchitecture::new(vec![4, 0, 2], Activation::Relu).is_err());
        assert!(MlpArchitecture::new(vec![4, 3, 3], Activation::Relu).is_err());
        assert_eq!(arch(&[4, 8, 2]).param_count(), 5 * 8 + 9 * 2);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = arch(&[10, 6, 2]);
        let t1 = init_params(&a, 5);
        assert_eq!(t1, init_params(&a, 5));
        assert_ne!(t1, init_params(&a, 6));
        let spans = a.spans();
        for s in &spans {
            let w_end = s.offset + s.inputs * s.outputs;
            let bound = init_bound(s.inputs, s.outputs);
            assert!(t1[s.offset..w_end].iter().all(|w| w.abs() <= bound));
            assert!(t1[w_end..w_end + s.outputs].iter().all(|b| *b == 0.0));
        }
    }

    #[test]
    fn zero_params_give_uniform_prediction() {
        let a = arch(&[3, 4, 2]);
        let theta = vec![0.0; a.param_count()];
        assert_eq!(forward(&theta, &a, &[1.0, -2.0, 5.0]).unwrap(), [0.5, 0.5]);
        let x = array![[1.0, 2.0, 3.0], [0.0, 0.0, 1.0]];
        let (loss, _) = loss_and_gradient(&theta, &a, x.view(), &[0, 1]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn equal_logits_are_uniform() {
        for z in [-800.0, 0.0, 3.5, 900.0] {
            let p = softmax_rows(&array![[z, z]]);
            assert_eq!(p, array![[0.5, 0.5]]);
        }
    }

    #[test]
    fn confident_correct_model_has_zero_loss() {
        // One hidden tanh unit saturates at 1; output bias pushes class 0.
        let a = arch(&[1, 1, 2]);
        let theta = vec![0.0, 50.0, 2000.0, 0.0, 0.0, -2000.0];
        let x = array![[1.0], [2.0], [-3.0]];
        let (loss, grad) = loss_and_gradient(&theta, &a, x.view(), &[0, 0, 0]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn dimension_errors() {
        let a = arch(&[3, 4, 2]);
        let theta = vec![0.0; a.param_count()];
        assert!(forward(&theta, &a, &[1.0]).is_err());
        assert!(forward(&theta[1..], &a, &[1.0, 2.0, 3.0]).is_err());
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(loss_and_gradient(&theta, &a, empty.view(), &[]).is_err());
    }

    #[test]
    fn tie_predicts_class_zero() {
        let a = arch(&[2, 2, 2]);
        let theta = vec![0.0; a.param_count()];
        let x = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let m = evaluate(&theta, &a, x.view(), &[0, 1, 0]).unwrap();
        assert!((m.accuracy - 2.0 / 3.0).abs() < 1e-15);
    }

    /// Central-difference gradient of the mean loss.
    fn numeric_gradient(theta: &[f64], a: &MlpArchitecture, x: ArrayView2<f64>, y: &[usize], h: f64) -> Vec<f64> {
        let mut t = theta.to_vec();
        (0..t.len())
            .map(|i| {
                let orig = t[i];
                t[i] = orig + h;
                let up = loss_and_gradient(&t, a, x, y).unwrap().0;
                t[i] = orig - h;
                let down = loss_and_gradient(&t, a, x, y).unwrap().0;
                t[i] = orig;
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for act in [Activation::Tanh, Activation::Relu] {
            let a = MlpArchitecture::new(vec![4, 8, 2], act).unwrap();
            let theta: Vec<f64> = (0..a.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = Array2::from_shape_fn((3, 4), |_| rng.gen_range(-2.0..2.0));
            let y = [0, 1, 1];
            let (_, g) = loss_and_gradient(&theta, &a, x.view(), &y).unwrap();
            let fd = numeric_gradient(&theta, &a, x.view(), &y, 1e-5);
            for (i, (an, num)) in g.iter().zip(&fd).enumerate() {
                let rel = (an - num).abs() / an.abs().max(num.abs()).max(1e-5);
                assert!(rel <= 1e-5, "{act:?} coord {i}: {an} vs {num}");
            }
        }
    }
}

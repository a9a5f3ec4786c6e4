//! Hybrid quanvolutional classifier: one VQC slid over the image as a 2×2
//! filter, one output channel per qubit, then a dense head.

mod dataset;
mod train;

use rand::Rng;

pub use dataset::{normalize_pixel, quantize_pixel, stripes_vs_checkers, Dataset, Split};
pub use train::{evaluate, train, EpochRecord, SplitMetrics, TrainConfig, TrainLog};

use crate::encodings::{execute, parameter_shift_jacobian, CircuitSpec, ParamVector};
use crate::error::{QclabError, Result};

/// Window side length of the quantum filter.
pub const FILTER: usize = 2;
pub const DEFAULT_STRIDE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// One sigmoid output unit.
    Binary,
    /// Softmax over this many classes.
    Multiclass(usize),
}

impl Task {
    pub fn for_classes(n_classes: usize) -> Result<Task> {
        match n_classes {
            0 | 1 => Err(QclabError::Config(format!("need >= 2 classes, got {n_classes}"))),
            2 => Ok(Task::Binary),
            n => Ok(Task::Multiclass(n)),
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            Task::Binary => 2,
            Task::Multiclass(n) => n,
        }
    }

    pub fn n_outputs(self) -> usize {
        match self {
            Task::Binary => 1,
            Task::Multiclass(n) => n,
        }
    }
}

/// Per-qubit feature maps, `[qubit][row][col]` flattened channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl FeatureMap {
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.values[(channel * self.height + row) * self.width + col]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub spec: CircuitSpec,
    pub params: ParamVector,
    /// `[n_outputs][n_features]`, row-major.
    pub head: Vec<f64>,
    pub bias: Vec<f64>,
    pub stride: usize,
    pub task: Task,
    pub image_height: usize,
    pub image_width: usize,
}

/// Output side length of a `FILTER`×`FILTER` convolution.
pub fn output_side(input: usize, stride: usize) -> Result<usize> {
    if stride == 0 {
        return Err(QclabError::Config("stride must be >= 1".into()));
    }
    if input < FILTER {
        return Err(QclabError::DimensionMismatch {
            expected: FILTER,
            found: input,
        });
    }
    Ok((input - FILTER) / stride + 1)
}

impl HybridModel {
    /// Zero-initialised model; see [`HybridModel::init`] for random weights.
    pub fn new(spec: CircuitSpec, task: Task, image_height: usize, image_width: usize, stride: usize) -> Result<Self> {
        if spec.n_features() != FILTER * FILTER {
            return Err(QclabError::Config(format!(
                "the quantum filter takes {} features, spec has {}",
                FILTER * FILTER,
                spec.n_features()
            )));
        }
        if let Task::Multiclass(n) = task {
            if n < 2 {
                return Err(QclabError::Config(format!("need >= 2 classes, got {n}")));
            }
        }
        let out_h = output_side(image_height, stride)?;
        let out_w = output_side(image_width, stride)?;
        let n_features = spec.n_qubits() * out_h * out_w;
        Ok(HybridModel {
            params: ParamVector::zeros(&spec),
            head: vec![0.0; task.n_outputs() * n_features],
            bias: vec![0.0; task.n_outputs()],
            spec,
            stride,
            task,
            image_height,
            image_width,
        })
    }

    /// θ ~ U[0, 2π), head ~ U[−s, s] with s = 1/√fan_in, zero bias.
    pub fn init(mut self, rng: &mut impl Rng) -> Self {
        self.params = ParamVector::random(&self.spec, rng);
        let s = 1.0 / (self.n_features() as f64).sqrt();
        for w in &mut self.head {
            *w = rng.random_range(-s..=s);
        }
        self
    }

    pub fn output_shape(&self) -> (usize, usize) {
        let side = |n| (n - FILTER) / self.stride + 1;
        (side(self.image_height), side(self.image_width))
    }

    /// Flattened feature count `n_qubits × out_h × out_w`.
    pub fn n_features(&self) -> usize {
        let (h, w) = self.output_shape();
        self.spec.n_qubits() * h * w
    }

    /// Quantum parameters, then head weights, then bias.
    pub fn n_parameters(&self) -> usize {
        self.params.len() + self.head.len() + self.bias.len()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_parameters());
        out.extend_from_slice(self.params.values());
        out.extend_from_slice(&self.head);
        out.extend_from_slice(&self.bias);
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_parameters() {
            return Err(QclabError::DimensionMismatch {
                expected: self.n_parameters(),
                found: values.len(),
            });
        }
        let (q, rest) = values.split_at(self.params.len());
        let (w, b) = rest.split_at(self.head.len());
        self.params.values_mut().copy_from_slice(q);
        self.head.copy_from_slice(w);
        self.bias.copy_from_slice(b);
        Ok(())
    }

    fn check_image(&self, image: &[f64]) -> Result<()> {
        if image.len() != self.image_height * self.image_width {
            return Err(QclabError::DimensionMismatch {
                expected: self.image_height * self.image_width,
                found: image.len(),
            });
        }
        Ok(())
    }

    /// Row-major windows, each flattened row-major.
    fn windows(&self, image: &[f64]) -> Vec<[f64; FILTER * FILTER]> {
        let (out_h, out_w) = self.output_shape();
        let mut out = Vec::with_capacity(out_h * out_w);
        for r in 0..out_h {
            for c in 0..out_w {
                let (r0, c0) = (r * self.stride, c * self.stride);
                let px = |dr: usize, dc: usize| image[(r0 + dr) * self.image_width + c0 + dc];
                out.push([px(0, 0), px(0, 1), px(1, 0), px(1, 1)]);
            }
        }
        out
    }

    pub fn quantum_convolve(&self, image: &[f64]) -> Result<FeatureMap> {
        self.check_image(image)?;
        let (out_h, out_w) = self.output_shape();
        let positions = out_h * out_w;
        let mut values = vec![0.0; self.n_features()];
        for (pos, window) in self.windows(image).iter().enumerate() {
            for (q, z) in execute(&self.spec, window, &self.params)?.into_iter().enumerate() {
                values[q * positions + pos] = z;
            }
        }
        Ok(FeatureMap {
            channels: self.spec.n_qubits(),
            height: out_h,
            width: out_w,
            values,
        })
    }

    fn logits(&self, features: &[f64]) -> Vec<f64> {
        let n = features.len();
        self.bias
            .iter()
            .enumerate()
            .map(|(o, b)| b + self.head[o * n..(o + 1) * n].iter().zip(features).map(|(w, f)| w * f).sum::<f64>())
            .collect()
    }

    /// Class probabilities; binary returns `[1 − p, p]`.
    pub fn forward(&self, image: &[f64]) -> Result<Vec<f64>> {
        let features = self.quantum_convolve(image)?;
        Ok(probabilities(self.task, &self.logits(&features.values)))
    }

    /// Loss of one labelled image and its gradient in [`HybridModel::parameters`] layout.
    pub fn loss_and_gradient(&self, image: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        self.check_image(image)?;
        self.check_label(label)?;
        let windows = self.windows(image);
        let positions = windows.len();
        let n_q = self.spec.n_qubits();
        let mut features = vec![0.0; self.n_features()];
        let mut jacobians = Vec::with_capacity(positions);
        for (pos, window) in windows.iter().enumerate() {
            for (q, z) in execute(&self.spec, window, &self.params)?.into_iter().enumerate() {
                features[q * positions + pos] = z;
            }
            jacobians.push(quantum_gradient(&self.spec, window, &self.params)?);
        }
        let logits = self.logits(&features);
        let (loss, dlogits) = loss_and_logit_gradient(self.task, &logits, label);

        let n_f = features.len();
        let mut grad = vec![0.0; self.n_parameters()];
        let (gq, rest) = grad.split_at_mut(self.params.len());
        let (gw, gb) = rest.split_at_mut(self.head.len());
        let mut dfeatures = vec![0.0; n_f];
        for (o, d) in dlogits.iter().enumerate() {
            gb[o] = *d;
            let row = &self.head[o * n_f..(o + 1) * n_f];
            for i in 0..n_f {
                gw[o * n_f + i] = d * features[i];
                dfeatures[i] += d * row[i];
            }
        }
        for (pos, jac) in jacobians.iter().enumerate() {
            for (k, row) in jac.iter().enumerate() {
                gq[k] += (0..n_q).map(|q| dfeatures[q * positions + pos] * row[q]).sum::<f64>();
            }
        }
        Ok((loss, grad))
    }

    /// Loss and probabilities of one labelled image, without gradients.
    pub fn loss(&self, image: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        self.check_label(label)?;
        let features = self.quantum_convolve(image)?;
        let logits = self.logits(&features.values);
        let (loss, _) = loss_and_logit_gradient(self.task, &logits, label);
        Ok((loss, probabilities(self.task, &logits)))
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.task.n_classes() {
            return Err(QclabError::Dataset(format!(
                "label {label} outside 0..{}",
                self.task.n_classes()
            )));
        }
        Ok(())
    }
}

/// `∂⟨Z_q⟩/∂θ_k` by the two-point parameter-shift rule, indexed `[k][q]`.
pub fn quantum_gradient(spec: &CircuitSpec, x: &[f64], params: &ParamVector) -> Result<Vec<Vec<f64>>> {
    parameter_shift_jacobian(params, |p| execute(spec, x, p))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn probabilities(task: Task, logits: &[f64]) -> Vec<f64> {
    match task {
        Task::Binary => {
            let p = sigmoid(logits[0]);
            vec![1.0 - p, p]
        }
        Task::Multiclass(_) => {
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / total).collect()
        }
    }
}

/// Binary or categorical cross-entropy and its gradient w.r.t. the logits.
fn loss_and_logit_gradient(task: Task, logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    match task {
        Task::Binary => {
            let z = logits[0];
            let y = label as f64;
            (softplus(z) - y * z, vec![sigmoid(z) - y])
        }
        Task::Multiclass(_) => {
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            let grad = logits
                .iter()
                .enumerate()
                .map(|(k, z)| (z - lse).exp() - if k == label { 1.0 } else { 0.0 })
                .collect();
            (lse - logits[label], grad)
        }
    }
}

/// Index of the largest probability; ties go to the lower class.
pub fn predicted_class(probs: &[f64]) -> usize {
    probs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
        .0
}

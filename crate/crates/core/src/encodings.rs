//! Parameterized circuits: encoding block `S(x)`, basic entangling ansatz
//! `W(θ)`, and data reuploading of the pair `L` times.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{QclabError, Result};
use crate::statevector::{mottonen_gates, zero_state, Gate, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EncodingKind {
    AngleX,
    AngleY,
    HigherOrder,
    Amplitude,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 4] = [
        EncodingKind::AngleX,
        EncodingKind::AngleY,
        EncodingKind::HigherOrder,
        EncodingKind::Amplitude,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::AngleX => "angle_x",
            EncodingKind::AngleY => "angle_y",
            EncodingKind::HigherOrder => "higher_order",
            EncodingKind::Amplitude => "amplitude",
        }
    }

    /// Qubits needed for `n_features` inputs.
    pub fn qubits_for(self, n_features: usize) -> Result<usize> {
        match self {
            EncodingKind::Amplitude => {
                if n_features < 2 || !n_features.is_power_of_two() {
                    return Err(QclabError::Config(format!(
                        "amplitude encoding needs a power-of-two feature count >= 2, got {n_features}"
                    )));
                }
                Ok(n_features.trailing_zeros() as usize)
            }
            _ => Ok(n_features),
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncodingKind {
    type Err = QclabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "angle_x" | "rx" => Ok(EncodingKind::AngleX),
            "angle_y" | "ry" => Ok(EncodingKind::AngleY),
            "higher_order" | "zz" => Ok(EncodingKind::HigherOrder),
            "amplitude" => Ok(EncodingKind::Amplitude),
            other => Err(QclabError::Config(format!("unknown encoding `{other}`"))),
        }
    }
}

/// Trainable block variant. Only `BasicEntangling` is used for models; the
/// other two are diagnostics for the metric estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AnsatzKind {
    /// RX(θ_i) on every qubit, then a CNOT ring.
    #[default]
    BasicEntangling,
    /// RX(θ_i) only, no CNOTs.
    RotationsOnly,
    /// CNOT ring only; θ is ignored.
    EntanglersOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    encoding: EncodingKind,
    n_features: usize,
    scaling: f64,
    layers: usize,
    ansatz: AnsatzKind,
    n_qubits: usize,
}

impl CircuitSpec {
    pub fn new(encoding: EncodingKind, n_features: usize, scaling: f64, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(QclabError::Config("layers must be >= 1".into()));
        }
        if !(scaling.is_finite() && scaling > 0.0) {
            return Err(QclabError::Config(format!(
                "scaling must be finite and > 0, got {scaling}"
            )));
        }
        if n_features == 0 {
            return Err(QclabError::Config("n_features must be >= 1".into()));
        }
        let n_qubits = encoding.qubits_for(n_features)?;
        if n_qubits > crate::statevector::MAX_QUBITS {
            return Err(QclabError::Config(format!(
                "{n_qubits} qubits exceed the simulator capacity"
            )));
        }
        Ok(Self {
            encoding,
            n_features,
            scaling,
            layers,
            ansatz: AnsatzKind::BasicEntangling,
            n_qubits,
        })
    }

    pub fn with_ansatz(mut self, ansatz: AnsatzKind) -> Self {
        self.ansatz = ansatz;
        self
    }

    pub fn encoding(&self) -> EncodingKind {
        self.encoding
    }
    pub fn n_features(&self) -> usize {
        self.n_features
    }
    pub fn scaling(&self) -> f64 {
        self.scaling
    }
    pub fn layers(&self) -> usize {
        self.layers
    }
    pub fn ansatz(&self) -> AnsatzKind {
        self.ansatz
    }
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn n_params(&self) -> usize {
        self.layers * self.n_qubits
    }
}

/// Rotation angles θ indexed by `(layer, qubit)`, stored layer-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    n_qubits: usize,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(spec: &CircuitSpec) -> Self {
        Self {
            n_qubits: spec.n_qubits(),
            values: vec![0.0; spec.n_params()],
        }
    }

    pub fn from_values(spec: &CircuitSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.n_params() {
            return Err(QclabError::DimensionMismatch {
                expected: spec.n_params(),
                found: values.len(),
            });
        }
        Ok(Self {
            n_qubits: spec.n_qubits(),
            values,
        })
    }

    /// Uniform draw from `[0, 2π)^d`.
    pub fn random(spec: &CircuitSpec, rng: &mut impl Rng) -> Self {
        Self {
            n_qubits: spec.n_qubits(),
            values: (0..spec.n_params()).map(|_| rng.random_range(0.0..TAU)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_layers(&self) -> usize {
        self.values.len() / self.n_qubits
    }

    pub fn layer(&self, layer: usize) -> &[f64] {
        &self.values[layer * self.n_qubits..(layer + 1) * self.n_qubits]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, layer: usize, qubit: usize) -> f64 {
        self.values[layer * self.n_qubits + qubit]
    }

    /// Copy with entry `index` shifted by `delta`.
    pub fn shifted(&self, index: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.values[index] += delta;
        out
    }
}

/// Applies the encoding block for features `x`.
///
/// An all-zero amplitude window is encoded as the uniform superposition.
pub fn apply_encoding(state: &mut Statevector, spec: &CircuitSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.n_features() {
        return Err(QclabError::DimensionMismatch {
            expected: spec.n_features(),
            found: x.len(),
        });
    }
    if state.n_qubits() != spec.n_qubits() {
        return Err(QclabError::DimensionMismatch {
            expected: spec.n_qubits(),
            found: state.n_qubits(),
        });
    }
    let f = spec.scaling();
    match spec.encoding() {
        EncodingKind::AngleX => {
            for (qubit, xi) in x.iter().enumerate() {
                state.apply(&Gate::Rx {
                    qubit,
                    angle: f * xi,
                })?;
            }
        }
        EncodingKind::AngleY => {
            for (qubit, xi) in x.iter().enumerate() {
                state.apply(&Gate::Ry {
                    qubit,
                    angle: f * xi,
                })?;
            }
        }
        EncodingKind::HigherOrder => {
            let n = x.len();
            for qubit in 0..n {
                state.apply(&Gate::H { qubit })?;
            }
            for (qubit, xi) in x.iter().enumerate() {
                state.apply(&Gate::Rz {
                    qubit,
                    angle: f * xi,
                })?;
            }
            for a in 0..n {
                for b in a + 1..n {
                    state.apply(&Gate::Rzz {
                        a,
                        b,
                        angle: f * x[a] * x[b],
                    })?;
                }
            }
        }
        EncodingKind::Amplitude => {
            let gates = mottonen_gates(&amplitude_vector(x, f))?;
            state.apply_all(&gates)?;
        }
    }
    Ok(())
}

/// Normalised amplitude target for `f·x`.
pub fn amplitude_vector(x: &[f64], scaling: f64) -> Vec<f64> {
    let scaled: Vec<f64> = x.iter().map(|v| v * scaling).collect();
    let norm = scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        log::debug!("all-zero amplitude window encoded as the uniform state");
        let u = 1.0 / (x.len() as f64).sqrt();
        return vec![u; x.len()];
    }
    scaled.into_iter().map(|v| v / norm).collect()
}

/// One trainable block: RX rotations then a CNOT ring `0→1→…→n−1→0`.
/// Two qubits get a single CNOT(0→1); one qubit gets none.
pub fn apply_ansatz(state: &mut Statevector, thetas: &[f64], ansatz: AnsatzKind) -> Result<()> {
    let n = state.n_qubits();
    if thetas.len() != n {
        return Err(QclabError::DimensionMismatch {
            expected: n,
            found: thetas.len(),
        });
    }
    if ansatz != AnsatzKind::EntanglersOnly {
        for (qubit, &angle) in thetas.iter().enumerate() {
            state.apply(&Gate::Rx { qubit, angle })?;
        }
    }
    if ansatz != AnsatzKind::RotationsOnly {
        for gate in entangler_ring(n) {
            state.apply(&gate)?;
        }
    }
    Ok(())
}

fn entangler_ring(n: usize) -> Vec<Gate> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![Gate::Cnot {
            control: 0,
            target: 1,
        }],
        _ => (0..n)
            .map(|q| Gate::Cnot {
                control: q,
                target: (q + 1) % n,
            })
            .collect(),
    }
}

/// Final state of the reuploading circuit before measurement.
pub fn prepare_state(spec: &CircuitSpec, x: &[f64], params: &ParamVector) -> Result<Statevector> {
    if params.len() != spec.n_params() {
        return Err(QclabError::DimensionMismatch {
            expected: spec.n_params(),
            found: params.len(),
        });
    }
    let mut state = zero_state(spec.n_qubits())?;
    for layer in 0..spec.layers() {
        apply_encoding(&mut state, spec, x)?;
        apply_ansatz(&mut state, params.layer(layer), spec.ansatz())?;
    }
    Ok(state)
}

/// Per-qubit `⟨Z⟩` of the reuploading circuit.
pub fn execute(spec: &CircuitSpec, x: &[f64], params: &ParamVector) -> Result<Vec<f64>> {
    Ok(prepare_state(spec, x, params)?.expectations_z())
}

/// Two-term parameter-shift Jacobian of any vector-valued expectation
/// `g(θ)`; row `k` holds `∂g/∂θ_k`. Exact for circuits whose parameters only
/// enter single Pauli rotations.
pub fn parameter_shift_jacobian<F>(params: &ParamVector, mut g: F) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&ParamVector) -> Result<Vec<f64>>,
{
    (0..params.len())
        .map(|k| {
            let plus = g(&params.shifted(k, FRAC_PI_2))?;
            let minus = g(&params.shifted(k, -FRAC_PI_2))?;
            Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / 2.0).collect())
        })
        .collect()
}

//! Circuit-quality metrics: expressibility, entanglement capability and
//! normalized effective dimension.

mod effective_dimension;
mod entanglement;
mod expressibility;

pub use effective_dimension::{
    effective_dimension, fisher_information, normalized_effective_dimension, ProbabilisticModel,
    QuantumReadoutModel, PROBABILITY_FLOOR,
};
pub use entanglement::{entanglement_capability, meyer_wallach};
pub use expressibility::{
    expressibility, expressibility_from_fidelities, fidelity_histogram, haar_bin_probabilities,
    haar_pdf, kl_divergence,
};

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::Rng;

use crate::encodings::{prepare_state, CircuitSpec, ParamVector};
use crate::error::{QclabError, Result};
use crate::statevector::Statevector;

/// How circuit inputs are chosen while sampling parameter draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputSampling {
    /// Fixed all-zeros feature vector.
    Zeros,
    /// Fresh `x ~ U[-1, 1]^n_features` per sampled state.
    #[default]
    Uniform,
}

impl FromStr for InputSampling {
    type Err = QclabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zeros" => Ok(Self::Zeros),
            "uniform" => Ok(Self::Uniform),
            other => Err(QclabError::Config(format!("unknown input sampling `{other}`"))),
        }
    }
}

impl InputSampling {
    pub fn name(self) -> &'static str {
        match self {
            Self::Zeros => "zeros",
            Self::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub n_fidelity_pairs: usize,
    pub n_bins: usize,
    pub n_entanglement_samples: usize,
    pub n_theta_samples: usize,
    pub n_data_samples: usize,
    pub gamma: f64,
    /// Sample count `n` in the effective-dimension scale `γn / (2π ln n)`.
    pub n_effective: u64,
    pub seed: u64,
    pub input: InputSampling,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            n_fidelity_pairs: 5000,
            n_bins: 75,
            n_entanglement_samples: 5000,
            n_theta_samples: 100,
            n_data_samples: 100,
            gamma: 1.0,
            n_effective: 100_000,
            seed: 0,
            input: InputSampling::Uniform,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_fidelity_pairs", self.n_fidelity_pairs),
            ("n_entanglement_samples", self.n_entanglement_samples),
            ("n_theta_samples", self.n_theta_samples),
            ("n_data_samples", self.n_data_samples),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(QclabError::Config(format!("{name} must be >= 1")));
            }
        }
        if self.n_bins < 2 {
            return Err(QclabError::Config("n_bins must be >= 2".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(QclabError::Config(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.n_effective < 2 {
            return Err(QclabError::Config("n_effective must be >= 2".into()));
        }
        if self.volume_scale() <= 1.0 {
            return Err(QclabError::Config(format!(
                "gamma * n / (2 pi ln n) = {} must exceed 1",
                self.volume_scale()
            )));
        }
        Ok(())
    }

    /// `γn / (2π ln n)`.
    pub fn volume_scale(&self) -> f64 {
        let n = self.n_effective as f64;
        self.gamma * n / (TAU * n.ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub spec: CircuitSpec,
    pub config: MetricsConfig,
    pub expressibility: f64,
    pub entanglement: f64,
    pub normalized_effective_dimension: f64,
}

/// Computes all three metrics for `spec`. NED is taken over the quantum
/// layer with a computational-basis readout.
pub fn evaluate(spec: &CircuitSpec, config: &MetricsConfig) -> Result<MetricsReport> {
    config.validate()?;
    let expressibility = expressibility(spec, config)?;
    let entanglement = entanglement_capability(spec, config)?;
    let ned = normalized_effective_dimension(&QuantumReadoutModel::new(spec.clone()), config)?;
    for (name, v) in [
        ("expressibility", expressibility),
        ("entanglement", entanglement),
        ("normalized effective dimension", ned),
    ] {
        if !v.is_finite() {
            return Err(QclabError::NonFinite(format!("{name} = {v}")));
        }
    }
    Ok(MetricsReport {
        spec: spec.clone(),
        config: config.clone(),
        expressibility,
        entanglement,
        normalized_effective_dimension: ned,
    })
}

pub(crate) fn sample_input(spec: &CircuitSpec, mode: InputSampling, rng: &mut impl Rng) -> Vec<f64> {
    match mode {
        InputSampling::Zeros => vec![0.0; spec.n_features()],
        InputSampling::Uniform => (0..spec.n_features())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect(),
    }
}

/// One random circuit state: θ uniform in `[0, 2π)^d`, input per `mode`.
pub(crate) fn sample_state(
    spec: &CircuitSpec,
    mode: InputSampling,
    rng: &mut impl Rng,
) -> Result<Statevector> {
    let theta = ParamVector::random(spec, rng);
    let x = sample_input(spec, mode, rng);
    prepare_state(spec, &x, &theta)
}

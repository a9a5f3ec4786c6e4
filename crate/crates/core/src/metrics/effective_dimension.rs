use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::MetricsConfig;
use crate::encodings::{parameter_shift_jacobian, prepare_state, CircuitSpec, ParamVector};
use crate::error::{QclabError, Result};
use crate::rng::{stream, Domain};

/// Probabilities are clamped here before taking logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// A parametric conditional distribution `p(y | x; θ)` over a finite label set.
pub trait ProbabilisticModel: Sync {
    fn n_params(&self) -> usize;

    fn sample_input(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Uniform draw from the parameter domain.
    fn sample_params(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// `p(·|x;θ)` and its Jacobian; `jacobian[k][y] = ∂p(y|x;θ)/∂θ_k`.
    fn probabilities_and_jacobian(&self, x: &[f64], theta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)>;
}

/// Quantum layer with the computational-basis distribution as readout.
#[derive(Debug, Clone)]
pub struct QuantumReadoutModel {
    spec: CircuitSpec,
}

impl QuantumReadoutModel {
    pub fn new(spec: CircuitSpec) -> Self {
        Self { spec }
    }
}

impl ProbabilisticModel for QuantumReadoutModel {
    fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    fn sample_input(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.spec.n_features())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect()
    }

    fn sample_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.n_params()).map(|_| rng.random_range(0.0..TAU)).collect()
    }

    fn probabilities_and_jacobian(&self, x: &[f64], theta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let params = ParamVector::from_values(&self.spec, theta.to_vec())?;
        let probs = prepare_state(&self.spec, x, &params)?.probabilities();
        let jac = parameter_shift_jacobian(&params, |p| {
            Ok(prepare_state(&self.spec, x, p)?.probabilities())
        })?;
        Ok((probs, jac))
    }
}

/// Monte-Carlo Fisher information at `theta`: mean over `inputs` of the
/// score outer product, with one label per input drawn from the model.
pub fn fisher_information(
    model: &dyn ProbabilisticModel,
    theta: &[f64],
    inputs: &[Vec<f64>],
    label_rng: &mut dyn RngCore,
) -> Result<DMatrix<f64>> {
    let d = model.n_params();
    let mut fim = DMatrix::zeros(d, d);
    if inputs.is_empty() {
        return Err(QclabError::ContractViolation("no data samples".into()));
    }
    for x in inputs {
        let (probs, jac) = model.probabilities_and_jacobian(x, theta)?;
        let y = sample_label(&probs, label_rng)?;
        let p = probs[y].max(PROBABILITY_FLOOR);
        let score = nalgebra::DVector::from_iterator(d, jac.iter().map(|row| row[y] / p));
        fim += &score * score.transpose();
    }
    Ok(fim / inputs.len() as f64)
}

fn sample_label(probs: &[f64], rng: &mut dyn RngCore) -> Result<usize> {
    let total: f64 = probs.iter().sum();
    if !(total.is_finite() && (total - 1.0).abs() < 1e-6) || probs.iter().any(|p| *p < -1e-12) {
        return Err(QclabError::ContractViolation(format!(
            "model output is not a probability distribution (sum {total})"
        )));
    }
    let u: f64 = rng.random_range(0.0..total);
    let mut acc = 0.0;
    for (y, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(y);
        }
    }
    Ok(probs.len() - 1)
}

/// Effective dimension `d_eff` of `model`, averaged over `n_theta_samples`
/// uniform parameter draws with the trace-normalised Fisher matrix.
pub fn effective_dimension(model: &dyn ProbabilisticModel, config: &MetricsConfig) -> Result<f64> {
    config.validate()?;
    let d = model.n_params();
    if d == 0 {
        return Err(QclabError::ContractViolation("model has no parameters".into()));
    }
    let inputs: Vec<Vec<f64>> = (0..config.n_data_samples)
        .map(|i| model.sample_input(&mut stream(config.seed, Domain::FisherData, i as u64)))
        .collect();
    let draws = (0..config.n_theta_samples)
        .into_par_iter()
        .map(|t| {
            let theta = model.sample_params(&mut stream(config.seed, Domain::FisherTheta, t as u64));
            let mut labels = stream(config.seed, Domain::FisherData, (1 << 32) + t as u64);
            let fim = fisher_information(model, &theta, &inputs, &mut labels)?;
            Ok((theta, fim))
        })
        .collect::<Result<Vec<_>>>()?;

    let mean_trace = draws.iter().map(|(_, f)| f.trace()).sum::<f64>() / draws.len() as f64;
    let kappa = config.volume_scale();
    let half_logdets = draws
        .iter()
        .map(|(theta, fim)| {
            let normalised = if mean_trace > 0.0 {
                fim * (d as f64 / mean_trace)
            } else {
                DMatrix::zeros(d, d)
            };
            let m = DMatrix::identity(d, d) + normalised * kappa;
            let logdet = m
                .cholesky()
                .map(|c| 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    QclabError::NonFinite(format!("log-determinant at theta = {theta:?}"))
                })?;
            Ok(0.5 * logdet)
        })
        .collect::<Result<Vec<f64>>>()?;

    let max = half_logdets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_mean = max
        + (half_logdets.iter().map(|z| (z - max).exp()).sum::<f64>() / half_logdets.len() as f64).ln();
    Ok(2.0 * log_mean / kappa.ln())
}

/// `d_eff / d`.
pub fn normalized_effective_dimension(model: &dyn ProbabilisticModel, config: &MetricsConfig) -> Result<f64> {
    Ok(effective_dimension(model, config)? / model.n_params() as f64)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::encodings::EncodingKind;

    /// `p(y=1) = (1 + sin θ)/2`, input ignored. Analytic Fisher information
    /// is `cos²θ / (p(1−p)) = 1` for every θ with `p ∈ (0,1)`.
    struct Bernoulli;

    impl ProbabilisticModel for Bernoulli {
        fn n_params(&self) -> usize {
            1
        }
        fn sample_input(&self, _: &mut dyn RngCore) -> Vec<f64> {
            vec![]
        }
        fn sample_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
            vec![rng.random_range(0.0..TAU)]
        }
        fn probabilities_and_jacobian(&self, _: &[f64], theta: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
            let p1 = (1.0 + theta[0].sin()) / 2.0;
            let dp1 = theta[0].cos() / 2.0;
            Ok((vec![1.0 - p1, p1], vec![vec![-dp1, dp1]]))
        }
    }

    /// Two parameters with unequal curvature and θ-dependent probabilities.
    struct Skewed;

    impl ProbabilisticModel for Skewed {
        fn n_params(&self) -> usize {
            2
        }
        fn sample_input(&self, rng: &mut dyn RngCore) -> Vec<f64> {
            vec![rng.random_range(-1.0..1.0)]
        }
        fn sample_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
            vec![rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)]
        }
        fn probabilities_and_jacobian(&self, x: &[f64], t: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
            let a = t[0] + 0.3 * x[0] * t[1];
            let p1 = 0.5 + 0.4 * a.sin();
            let dp = 0.4 * a.cos();
            let da = [1.0, 0.3 * x[0]];
            Ok((
                vec![1.0 - p1, p1],
                da.iter().map(|g| vec![-dp * g, dp * g]).collect(),
            ))
        }
    }

    /// Model whose distribution does not depend on θ.
    struct Frozen;

    impl ProbabilisticModel for Frozen {
        fn n_params(&self) -> usize {
            3
        }
        fn sample_input(&self, _: &mut dyn RngCore) -> Vec<f64> {
            vec![]
        }
        fn sample_params(&self, _: &mut dyn RngCore) -> Vec<f64> {
            vec![0.0; 3]
        }
        fn probabilities_and_jacobian(&self, _: &[f64], _: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
            Ok((vec![0.25, 0.75], vec![vec![0.0, 0.0]; 3]))
        }
    }

    #[test]
    fn bernoulli_fisher_matches_analytic_value() {
        let inputs = vec![vec![]; 10_000];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let f = fisher_information(&Bernoulli, &[0.0], &inputs, &mut rng).unwrap();
        assert!((f[(0, 0)] - 1.0).abs() < 0.05);
    }

    #[test]
    fn fisher_estimate_converges() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let small: Vec<Vec<f64>> = (0..10_000).map(|_| Skewed.sample_input(&mut rng)).collect();
        let large: Vec<Vec<f64>> = (0..20_000).map(|_| Skewed.sample_input(&mut rng)).collect();
        let theta = [0.4, 1.1];
        let a = fisher_information(&Skewed, &theta, &small, &mut rng).unwrap();
        let b = fisher_information(&Skewed, &theta, &large, &mut rng).unwrap();
        assert!((a.norm() - b.norm()).abs() / b.norm() < 0.05);
    }

    #[test]
    fn theta_independent_model_has_zero_fisher_and_dimension() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let f = fisher_information(&Frozen, &[0.0; 3], &vec![vec![]; 50], &mut rng).unwrap();
        assert_eq!(f.norm(), 0.0);
        let config = MetricsConfig {
            n_theta_samples: 5,
            n_data_samples: 5,
            ..MetricsConfig::default()
        };
        assert_eq!(effective_dimension(&Frozen, &config).unwrap(), 0.0);
        assert_eq!(normalized_effective_dimension(&Frozen, &config).unwrap(), 0.0);
    }

    #[test]
    fn quantum_fisher_is_symmetric_psd() {
        let spec = CircuitSpec::new(EncodingKind::HigherOrder, 4, 1.0, 2).unwrap();
        let model = QuantumReadoutModel::new(spec);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let inputs: Vec<Vec<f64>> = (0..40).map(|_| model.sample_input(&mut rng)).collect();
        let theta = model.sample_params(&mut rng);
        let f = fisher_information(&model, &theta, &inputs, &mut rng).unwrap();
        assert!((&f - f.transpose()).norm() < 1e-12);
        let eig = f.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|e| *e >= -1e-9));
    }

    #[test]
    fn readout_jacobian_matches_finite_differences() {
        let spec = CircuitSpec::new(EncodingKind::Amplitude, 4, 1.0, 2).unwrap();
        let model = QuantumReadoutModel::new(spec);
        let x = [0.3, -0.2, 0.8, 0.1];
        let theta = [0.4, 2.0, 5.1, 1.2];
        let (_, jac) = model.probabilities_and_jacobian(&x, &theta).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            let mut tp = theta;
            tp[k] += h;
            let mut tm = theta;
            tm[k] -= h;
            let (pp, _) = model.probabilities_and_jacobian(&x, &tp).unwrap();
            let (pm, _) = model.probabilities_and_jacobian(&x, &tm).unwrap();
            for y in 0..4 {
                assert!((jac[k][y] - (pp[y] - pm[y]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn ned_is_bounded_and_deterministic() {
        let spec = CircuitSpec::new(EncodingKind::AngleX, 4, 1.0, 1).unwrap();
        let model = QuantumReadoutModel::new(spec);
        let config = MetricsConfig {
            n_theta_samples: 10,
            n_data_samples: 20,
            seed: 5,
            ..MetricsConfig::default()
        };
        let a = normalized_effective_dimension(&model, &config).unwrap();
        let b = normalized_effective_dimension(&model, &config).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a > 0.0 && a <= 1.0, "{a}");
    }

    #[test]
    fn invalid_config_is_rejected() {
        let config = MetricsConfig {
            gamma: 0.0,
            ..MetricsConfig::default()
        };
        assert!(matches!(
            effective_dimension(&Bernoulli, &config),
            Err(QclabError::Config(_))
        ));
        let config = MetricsConfig {
            n_effective: 3,
            gamma: 0.1,
            ..MetricsConfig::default()
        };
        assert!(config.validate().is_err());
    }
}

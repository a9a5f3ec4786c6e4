use rayon::prelude::*;

use super::{sample_state, MetricsConfig};
use crate::encodings::CircuitSpec;
use crate::error::{QclabError, Result};
use crate::rng::{stream, Domain};
use crate::statevector::fidelity;

/// Haar fidelity density `(N−1)(1−F)^{N−2}` for Hilbert dimension `N`.
pub fn haar_pdf(f: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(QclabError::ContractViolation(format!(
            "Hilbert dimension must be >= 2, got {dim}"
        )));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(QclabError::ContractViolation(format!(
            "fidelity {f} outside [0, 1]"
        )));
    }
    Ok((dim as f64 - 1.0) * (1.0 - f).powi(dim as i32 - 2))
}

/// Exact Haar mass of each of `n_bins` equal-width bins over `[0, 1]`,
/// from the CDF `1 − (1−F)^{N−1}`.
pub fn haar_bin_probabilities(n_bins: usize, dim: usize) -> Vec<f64> {
    let tail = |f: f64| (1.0 - f).powi(dim as i32 - 1);
    (0..n_bins)
        .map(|b| {
            let lo = b as f64 / n_bins as f64;
            let hi = (b + 1) as f64 / n_bins as f64;
            tail(lo) - tail(hi)
        })
        .collect()
}

/// Normalised histogram of fidelities; `F = 1` falls in the last bin.
pub fn fidelity_histogram(fidelities: &[f64], n_bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_bins];
    for &f in fidelities {
        let bin = ((f.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    let total = fidelities.len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// `Σ p ln(p/q)`, with empty `p` bins contributing zero.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi.max(f64::MIN_POSITIVE)).ln())
        .sum()
}

/// KL divergence of the binned fidelity sample from the binned Haar law.
pub fn expressibility_from_fidelities(fidelities: &[f64], n_bins: usize, dim: usize) -> Result<f64> {
    if fidelities.is_empty() {
        return Err(QclabError::ContractViolation("no fidelities".into()));
    }
    if dim < 2 || n_bins < 2 {
        return Err(QclabError::Config(format!(
            "need dim >= 2 and n_bins >= 2, got {dim} and {n_bins}"
        )));
    }
    let p = fidelity_histogram(fidelities, n_bins);
    let q = haar_bin_probabilities(n_bins, dim);
    Ok(kl_divergence(&p, &q))
}

/// Expressibility of `spec`: fidelities of independently drawn state pairs
/// against the Haar distribution. Lower means more expressible.
pub fn expressibility(spec: &CircuitSpec, config: &MetricsConfig) -> Result<f64> {
    config.validate()?;
    let fidelities = (0..config.n_fidelity_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, Domain::Expressibility, i as u64);
            let a = sample_state(spec, config.input, &mut rng)?;
            let b = sample_state(spec, config.input, &mut rng)?;
            fidelity(&a, &b)
        })
        .collect::<Result<Vec<f64>>>()?;
    expressibility_from_fidelities(&fidelities, config.n_bins, 1 << spec.n_qubits())
}

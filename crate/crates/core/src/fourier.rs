//! Univariate Fourier spectra of circuit outputs and the degrees-of-freedom
//! count of the parallel ansatz.
//!
//! Coefficients use the `1/K` convention: `c_k = (1/K) Σ_j s_j e^{−2πi jk/K}`,
//! so a unit cosine at frequency 1 gives `|c_1| = 0.5`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::encodings::{execute, CircuitSpec, EncodingKind, ParamVector};
use crate::error::{QclabError, Result};
use crate::rng::{stream, Domain};

pub const DEFAULT_GRID_POINTS: usize = 21;
pub const DEFAULT_COEFFICIENTS: usize = 10;
/// Magnitude above which a coefficient counts as non-null.
pub const NONNULL_THRESHOLD: f64 = 1e-6;

/// `n_points` ascending inputs `t_j = −1 + 2j/K` covering `[−1, 1)`; one
/// full period of the sampling grid.
pub fn input_grid(n_points: usize) -> Vec<f64> {
    (0..n_points)
        .map(|j| -1.0 + 2.0 * j as f64 / n_points as f64)
        .collect()
}

/// Runs the circuit with `x = (t, …, t)` for every grid value `t`.
/// Result is indexed `[qubit][grid point]`.
pub fn univariate_outputs(spec: &CircuitSpec, params: &ParamVector, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if spec.encoding() == EncodingKind::Amplitude {
        return Err(QclabError::UnsupportedEncoding(
            "univariate Fourier analysis is undefined for amplitude encoding".into(),
        ));
    }
    let mut out = vec![Vec::with_capacity(grid.len()); spec.n_qubits()];
    for &t in grid {
        let x = vec![t; spec.n_features()];
        for (q, z) in execute(spec, &x, params)?.into_iter().enumerate() {
            out[q].push(z);
        }
    }
    Ok(out)
}

/// One-sided discrete Fourier coefficients for `k = 0..=⌊K/2⌋`.
pub fn dft_coefficients(samples: &[f64]) -> Result<Vec<Complex64>> {
    let k_len = samples.len();
    if k_len < 2 {
        return Err(QclabError::ContractViolation(format!(
            "need at least 2 samples, got {k_len}"
        )));
    }
    let twiddle: Vec<Complex64> = (0..k_len)
        .map(|m| Complex64::from_polar(1.0, -TAU * m as f64 / k_len as f64))
        .collect();
    let scale = 1.0 / k_len as f64;
    Ok((0..=k_len / 2)
        .map(|k| {
            samples
                .iter()
                .enumerate()
                .map(|(j, s)| twiddle[(j * k) % k_len] * *s)
                .sum::<Complex64>()
                * scale
        })
        .collect())
}

/// Inverse of [`dft_coefficients`] for a real series of length `len`.
pub fn reconstruct_series(coefficients: &[Complex64], len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| {
            coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let term = (c * Complex64::from_polar(1.0, TAU * (j * k % len) as f64 / len as f64)).re;
                    let paired = k != 0 && !(len % 2 == 0 && k == len / 2);
                    if paired {
                        2.0 * term
                    } else {
                        term
                    }
                })
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub weights: ParamVector,
    /// `[qubit][rank]`, DC at rank 0.
    pub per_qubit_coefficients: Vec<Vec<Complex64>>,
    /// Sampled outputs `[qubit][grid point]` the coefficients came from.
    pub outputs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    pub spec: CircuitSpec,
    pub input_grid: Vec<f64>,
    pub n_coeffs: usize,
    pub samples: Vec<SpectrumSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientStats {
    pub qubit: usize,
    pub rank: usize,
    pub mean: Complex64,
    /// Covariance of `(Re, Im)` over draws: `[[rr, ri], [ri, ii]]`.
    pub covariance: [[f64; 2]; 2],
    /// Fraction of draws with `|c| > NONNULL_THRESHOLD`.
    pub nonnull_fraction: f64,
    pub max_abs_imag: f64,
    pub max_abs: f64,
}

/// Samples `n_weight_draws` weight vectors uniformly from `[0, 2π)` and
/// records the per-qubit spectrum (DC + `n_coeffs`) of each.
pub fn sample_spectrum(spec: &CircuitSpec, n_weight_draws: usize, seed: u64) -> Result<FourierSpectrum> {
    sample_spectrum_with(spec, n_weight_draws, seed, DEFAULT_GRID_POINTS, DEFAULT_COEFFICIENTS)
}

pub fn sample_spectrum_with(
    spec: &CircuitSpec,
    n_weight_draws: usize,
    seed: u64,
    grid_points: usize,
    n_coeffs: usize,
) -> Result<FourierSpectrum> {
    if grid_points < 2 * n_coeffs + 1 {
        return Err(QclabError::Config(format!(
            "{grid_points} grid points cannot resolve {n_coeffs} frequencies (need >= {})",
            2 * n_coeffs + 1
        )));
    }
    if n_weight_draws == 0 {
        return Err(QclabError::Config("n_weight_draws must be >= 1".into()));
    }
    let grid = input_grid(grid_points);
    let samples = (0..n_weight_draws)
        .into_par_iter()
        .map(|i| {
            let weights = ParamVector::random(spec, &mut stream(seed, Domain::Fourier, i as u64));
            let outputs = univariate_outputs(spec, &weights, &grid)?;
            let per_qubit_coefficients = outputs
                .iter()
                .map(|series| {
                    let mut c = dft_coefficients(series)?;
                    c.truncate(n_coeffs + 1);
                    Ok(c)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SpectrumSample {
                weights,
                per_qubit_coefficients,
                outputs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FourierSpectrum {
        spec: spec.clone(),
        input_grid: grid,
        n_coeffs,
        samples,
    })
}

impl FourierSpectrum {
    pub fn n_qubits(&self) -> usize {
        self.spec.n_qubits()
    }

    /// Per `(qubit, rank)` statistics over the weight draws, qubit-major.
    pub fn summary(&self) -> Vec<CoefficientStats> {
        let n = self.samples.len() as f64;
        let mut out = Vec::new();
        for qubit in 0..self.n_qubits() {
            for rank in 0..=self.n_coeffs {
                let values: Vec<Complex64> = self
                    .samples
                    .iter()
                    .map(|s| s.per_qubit_coefficients[qubit][rank])
                    .collect();
                let mean = values.iter().sum::<Complex64>() / n;
                let mut cov = [[0.0; 2]; 2];
                for v in &values {
                    let d = v - mean;
                    cov[0][0] += d.re * d.re;
                    cov[0][1] += d.re * d.im;
                    cov[1][1] += d.im * d.im;
                }
                for row in &mut cov {
                    for c in row.iter_mut() {
                        *c /= n;
                    }
                }
                cov[1][0] = cov[0][1];
                out.push(CoefficientStats {
                    qubit,
                    rank,
                    mean,
                    covariance: cov,
                    nonnull_fraction: values.iter().filter(|v| v.norm() > NONNULL_THRESHOLD).count() as f64 / n,
                    max_abs_imag: values.iter().map(|v| v.im.abs()).fold(0.0, f64::max),
                    max_abs: values.iter().map(|v| v.norm()).fold(0.0, f64::max),
                });
            }
        }
        out
    }

    /// Number of ranks `1..=n_coeffs` that are non-null in at least one draw.
    pub fn nonnull_rank_count(&self, qubit: usize) -> usize {
        (1..=self.n_coeffs)
            .filter(|&rank| self.rank_is_nonnull(qubit, rank))
            .count()
    }

    /// Highest rank that is non-null in at least one draw (0 if only DC).
    pub fn max_nonnull_rank(&self, qubit: usize) -> usize {
        (1..=self.n_coeffs)
            .rev()
            .find(|&rank| self.rank_is_nonnull(qubit, rank))
            .unwrap_or(0)
    }

    fn rank_is_nonnull(&self, qubit: usize, rank: usize) -> bool {
        self.samples
            .iter()
            .any(|s| s.per_qubit_coefficients[qubit][rank].norm() > NONNULL_THRESHOLD)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.per_qubit_coefficients.iter().flatten())
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation between sampled outputs and their reconstruction
    /// from the retained one-sided coefficients.
    pub fn max_reconstruction_error(&self) -> f64 {
        let len = self.input_grid.len();
        self.samples
            .iter()
            .flat_map(|s| {
                s.outputs
                    .iter()
                    .zip(&s.per_qubit_coefficients)
                    .map(move |(series, coeffs)| {
                        reconstruct_series(coeffs, len)
                            .iter()
                            .zip(series)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max)
                    })
            })
            .fold(0.0, f64::max)
    }
}

/// Parameter and degree-of-freedom counts for a parallel ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofReport {
    /// Local dimension `d = 2^n`.
    pub local_dim: u32,
    pub qubits: u32,
    pub layers: u32,
    /// `(d^{2M} − 1)(L + 1)`.
    pub n_params: u128,
    /// `(d − 1) L`.
    pub degree: u64,
    /// `(2D + 1)^M`.
    pub nu: u128,
    pub saturated: bool,
}

/// Local dimension per encoding: 2 for single-qubit encodings, 4 for the
/// higher-order encoding whose pair terms couple qubits.
pub fn local_dimension(encoding: EncodingKind) -> Option<u32> {
    match encoding {
        EncodingKind::AngleX | EncodingKind::AngleY => Some(2),
        EncodingKind::HigherOrder => Some(4),
        EncodingKind::Amplitude => None,
    }
}

pub fn dof_report(spec: &CircuitSpec) -> Result<DofReport> {
    let d = local_dimension(spec.encoding()).ok_or_else(|| {
        QclabError::UnsupportedEncoding(format!("no local dimension for {}", spec.encoding()))
    })?;
    dof_for(d, spec.n_qubits() as u32, spec.layers() as u32)
}

pub fn dof_for(local_dim: u32, qubits: u32, layers: u32) -> Result<DofReport> {
    let overflow = || QclabError::Config(format!("counts overflow for d={local_dim}, M={qubits}, L={layers}"));
    let d = local_dim as u128;
    let n_params = d
        .checked_pow(2 * qubits)
        .and_then(|p| (p - 1).checked_mul(layers as u128 + 1))
        .ok_or_else(overflow)?;
    let degree = (local_dim as u64 - 1) * layers as u64;
    let nu = (2 * degree as u128 + 1).checked_pow(qubits).ok_or_else(overflow)?;
    Ok(DofReport {
        local_dim,
        qubits,
        layers,
        n_params,
        degree,
        nu,
        saturated: n_params >= nu,
    })
}

/// Largest layer count for which `N_p >= ν` still holds.
pub fn max_saturated_layers(local_dim: u32, qubits: u32) -> Result<u32> {
    let mut layers = 0;
    while dof_for(local_dim, qubits, layers + 1)?.saturated {
        layers += 1;
    }
    Ok(layers)
}

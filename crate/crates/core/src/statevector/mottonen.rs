//! Möttönen state preparation for real amplitude vectors.
//!
//! The target state is built most-significant qubit first. Qubit `k` receives
//! a uniformly controlled RY whose controls are the qubits above it; the
//! angle for control pattern `p` splits the norm of block `p` between its
//! `bit k = 0` and `bit k = 1` halves. The last level (qubit 0) uses the
//! signed pair, which carries negative amplitudes without phase gates.
//!
//! Each uniformly controlled rotation is decomposed into `2^c` RY gates and
//! `2^c` CNOTs along a Gray-code path, so the preparation is an ordinary gate
//! sequence and can be re-applied as a unitary on any state.

use super::{zero_state, Gate, Statevector};
use crate::error::{QclabError, Result};

const NORM_TOLERANCE: f64 = 1e-9;

/// Gate sequence that maps `|0…0⟩` onto `amplitudes`.
pub fn mottonen_gates(amplitudes: &[f64]) -> Result<Vec<Gate>> {
    let len = amplitudes.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(QclabError::ContractViolation(format!(
            "amplitude count {len} is not a power of two >= 2"
        )));
    }
    if amplitudes.iter().any(|a| !a.is_finite()) {
        return Err(QclabError::ContractViolation(
            "amplitudes contain non-finite values".into(),
        ));
    }
    let norm_sqr: f64 = amplitudes.iter().map(|a| a * a).sum();
    if norm_sqr == 0.0 {
        return Err(QclabError::DegenerateInput(
            "cannot prepare the zero vector".into(),
        ));
    }
    if (norm_sqr.sqrt() - 1.0).abs() > NORM_TOLERANCE {
        return Err(QclabError::ContractViolation(format!(
            "amplitudes have L2 norm {}, expected 1",
            norm_sqr.sqrt()
        )));
    }

    let n = len.trailing_zeros() as usize;
    let mut gates = Vec::new();
    for target in (0..n).rev() {
        let n_controls = n - 1 - target;
        let alphas: Vec<f64> = (0..1usize << n_controls)
            .map(|pattern| split_angle(amplitudes, target, pattern))
            .collect();
        let controls: Vec<usize> = (target + 1..n).collect();
        uniformly_controlled_ry(&mut gates, &alphas, &controls, target);
    }
    Ok(gates)
}

/// Prepares the real state `amplitudes` from `|0…0⟩`.
pub fn mottonen_prepare(amplitudes: &[f64]) -> Result<Statevector> {
    let gates = mottonen_gates(amplitudes)?;
    let mut state = zero_state(amplitudes.len().trailing_zeros() as usize)?;
    state.apply_all(&gates)?;
    Ok(state)
}

/// RY angle at qubit `target` for the block whose higher bits equal `pattern`.
fn split_angle(amplitudes: &[f64], target: usize, pattern: usize) -> f64 {
    let base = pattern << (target + 1);
    if target == 0 {
        return 2.0 * amplitudes[base | 1].atan2(amplitudes[base]);
    }
    let half = 1usize << target;
    let block_norm = |offset: usize| {
        amplitudes[base + offset..base + offset + half]
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
    };
    2.0 * block_norm(half).atan2(block_norm(0))
}

/// Appends a uniformly controlled RY: on control pattern `p` (bit `m` of `p`
/// is the state of `controls[m]`) the target is rotated by `alphas[p]`.
fn uniformly_controlled_ry(gates: &mut Vec<Gate>, alphas: &[f64], controls: &[usize], target: usize) {
    let k = controls.len();
    if k == 0 {
        gates.push(Gate::Ry {
            qubit: target,
            angle: alphas[0],
        });
        return;
    }
    let count = 1usize << k;
    let scale = 1.0 / count as f64;
    for i in 0..count {
        let gray = i ^ (i >> 1);
        let theta: f64 = alphas
            .iter()
            .enumerate()
            .map(|(p, a)| {
                if (p & gray).count_ones() % 2 == 0 {
                    *a
                } else {
                    -*a
                }
            })
            .sum::<f64>()
            * scale;
        gates.push(Gate::Ry {
            qubit: target,
            angle: theta,
        });
        let flip_bit = if i + 1 < count {
            (i + 1).trailing_zeros() as usize
        } else {
            k - 1
        };
        gates.push(Gate::Cnot {
            control: controls[flip_bit],
            target,
        });
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::statevector::fidelity;

    fn random_unit(rng: &mut impl Rng, len: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / n).collect()
    }

    fn target_state(v: &[f64]) -> Statevector {
        Statevector::from_amplitudes(v.iter().map(|&a| Complex64::new(a, 0.0)).collect()).unwrap()
    }

    /// Direct block-diagonal application of a uniformly controlled RY, used
    /// to check the Gray-code decomposition.
    fn multiplexed_ry(state: &mut [Complex64], alphas: &[f64], controls: &[usize], target: usize) {
        let tm = 1usize << target;
        for i in 0..state.len() {
            if i & tm != 0 {
                continue;
            }
            let pattern = controls
                .iter()
                .enumerate()
                .fold(0usize, |acc, (m, q)| acc | ((i >> q & 1) << m));
            let (s, c) = (alphas[pattern] / 2.0).sin_cos();
            let (a0, a1) = (state[i], state[i | tm]);
            state[i] = a0 * c - a1 * s;
            state[i | tm] = a0 * s + a1 * c;
        }
    }

    #[test]
    fn basis_vector() {
        let s = mottonen_prepare(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_vector_matches_hadamards() {
        let s = mottonen_prepare(&[0.5; 4]).unwrap();
        let mut hh = zero_state(2).unwrap();
        hh.apply(&Gate::H { qubit: 0 }).unwrap();
        hh.apply(&Gate::H { qubit: 1 }).unwrap();
        assert!((fidelity(&s, &hh).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_vectors_are_reproduced_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for n in 1..=5 {
            for _ in 0..50 {
                let v = random_unit(&mut rng, 1 << n);
                let s = mottonen_prepare(&v).unwrap();
                assert!(fidelity(&s, &target_state(&v)).unwrap() >= 1.0 - 1e-9);
                for (a, e) in s.amplitudes().iter().zip(&v) {
                    assert!((a - Complex64::new(*e, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn sparse_and_negative_vectors() {
        let cases: [&[f64]; 4] = [
            &[0.0, 0.0, 0.0, -1.0],
            &[0.0, -1.0],
            &[-0.6, 0.0, 0.0, 0.8],
            &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        ];
        for v in cases {
            let s = mottonen_prepare(v).unwrap();
            assert!(fidelity(&s, &target_state(v)).unwrap() >= 1.0 - 1e-12, "{v:?}");
        }
    }

    #[test]
    fn gray_code_decomposition_matches_multiplexor() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for k in 0..=3 {
            let n = k + 1;
            let controls: Vec<usize> = (1..n).collect();
            let alphas: Vec<f64> = (0..1 << k).map(|_| rng.random_range(-6.0..6.0)).collect();
            // Arbitrary starting state so the whole unitary is exercised.
            let v = random_unit(&mut rng, 1 << n);
            let mut direct: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a, 0.0)).collect();
            multiplexed_ry(&mut direct, &alphas, &controls, 0);
            let mut gates = Vec::new();
            uniformly_controlled_ry(&mut gates, &alphas, &controls, 0);
            let mut s = target_state(&v);
            s.apply_all(&gates).unwrap();
            for (a, b) in s.amplitudes().iter().zip(&direct) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            mottonen_prepare(&[0.0; 4]),
            Err(QclabError::DegenerateInput(_))
        ));
        assert!(matches!(
            mottonen_prepare(&[1.0, 1.0]),
            Err(QclabError::ContractViolation(_))
        ));
        assert!(matches!(
            mottonen_prepare(&[1.0, 0.0, 0.0]),
            Err(QclabError::ContractViolation(_))
        ));
        assert!(mottonen_prepare(&[f64::NAN, 0.0]).is_err());
    }
}

use num_complex::Complex64;
use rayon::prelude::*;

use super::{sample_state, MetricsConfig};
use crate::encodings::CircuitSpec;
use crate::error::{QclabError, Result};
use crate::rng::{stream, Domain};
use crate::statevector::Statevector;

/// Meyer-Wallach measure `Q = (4/N) Σ_j D(ι_j(0)ψ, ι_j(1)ψ)`.
///
/// `D(u, v) = ½ Σ_{i,k} |u_i v_k − u_k v_i|²` is evaluated through the
/// identity `D = ‖u‖²‖v‖² − |⟨v|u⟩|²`.
pub fn meyer_wallach(state: &Statevector) -> Result<f64> {
    let n = state.n_qubits();
    if n < 2 {
        return Err(QclabError::ContractViolation(
            "Meyer-Wallach measure needs at least two qubits".into(),
        ));
    }
    let amps = state.amplitudes();
    let half = amps.len() / 2;
    let mut total = 0.0;
    for j in 0..n {
        let low = (1usize << j) - 1;
        let (mut uu, mut vv) = (0.0, 0.0);
        let mut uv = Complex64::new(0.0, 0.0);
        for r in 0..half {
            // Re-insert bit j into the reduced index r.
            let i0 = ((r & !low) << 1) | (r & low);
            let (u, v) = (amps[i0], amps[i0 | 1 << j]);
            uu += u.norm_sqr();
            vv += v.norm_sqr();
            uv += u * v.conj();
        }
        total += uu * vv - uv.norm_sqr();
    }
    Ok((4.0 / n as f64 * total).clamp(0.0, 1.0))
}

/// Mean Meyer-Wallach measure over `n_entanglement_samples` random draws.
pub fn entanglement_capability(spec: &CircuitSpec, config: &MetricsConfig) -> Result<f64> {
    config.validate()?;
    let values = (0..config.n_entanglement_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, Domain::Entanglement, i as u64);
            meyer_wallach(&sample_state(spec, config.input, &mut rng)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

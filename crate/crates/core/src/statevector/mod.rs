//! Dense statevector simulation.
//!
//! Basis-state indices are little-endian in the qubits: qubit 0 is the least
//! significant bit, so `|q_{n-1} … q_1 q_0⟩` has index `Σ q_k 2^k`.

mod gate;
mod mottonen;

pub use gate::Gate;
pub use mottonen::{mottonen_gates, mottonen_prepare};

use num_complex::Complex64;

use crate::error::{QclabError, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// `|0…0⟩` on `n_qubits` qubits.
pub fn zero_state(n_qubits: usize) -> Result<Statevector> {
    check_capacity(n_qubits)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    Ok(Statevector {
        n_qubits,
        amplitudes,
    })
}

fn check_capacity(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(QclabError::Config(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

impl Statevector {
    /// Wraps raw amplitudes. The length must be a power of two; the vector is
    /// taken as given (no renormalisation).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QclabError::ContractViolation(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_capacity(n_qubits)?;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(QclabError::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by `e^{iα}`.
    pub fn with_global_phase(mut self, alpha: f64) -> Self {
        let phase = Complex64::from_polar(1.0, alpha);
        for a in &mut self.amplitudes {
            *a *= phase;
        }
        self
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(QclabError::Index {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// `⟨Z_qubit⟩`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum())
    }

    /// `⟨Z_q⟩` for every qubit, in qubit order.
    pub fn expectations_z(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, acc) in out.iter_mut().enumerate() {
                if i >> q & 1 == 0 {
                    *acc += p;
                } else {
                    *acc -= p;
                }
            }
        }
        out
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::H { qubit } => {
                self.check_qubit(qubit)?;
                if let Some(m) = gate.single_qubit_matrix() {
                    self.apply_single(qubit, m);
                }
            }
            Gate::Cnot { control, target } => {
                self.check_pair(control, target)?;
                let (cm, tm) = (1usize << control, 1usize << target);
                for i in 0..self.amplitudes.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
            Gate::Rzz { a, b, angle } => {
                self.check_pair(a, b)?;
                let same = Complex64::from_polar(1.0, -angle / 2.0);
                let diff = same.conj();
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if (i >> a & 1) == (i >> b & 1) {
                        *amp *= same;
                    } else {
                        *amp *= diff;
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies every gate of `gates` in order.
    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// Functional form of [`Statevector::apply`].
    pub fn applied(mut self, gate: &Gate) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(QclabError::ContractViolation(format!(
                "two-qubit gate needs distinct qubits, got {a} twice"
            )));
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let mask = 1usize << qubit;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }
}

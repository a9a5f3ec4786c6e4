use nalgebra::DMatrix;
use num_complex::Complex64;

/// A gate of the circuit family used throughout the crate.
///
/// Rotations follow `R_P(φ) = exp(-i φ P / 2)`; `Rzz(φ) = exp(-i φ Z⊗Z / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    H { qubit: usize },
    Cnot { control: usize, target: usize },
    Rzz { a: usize, b: usize, angle: f64 },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                vec![qubit]
            }
            Gate::H { qubit } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Rzz { a, b, .. } => vec![a, b],
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx { angle, .. }
            | Gate::Ry { angle, .. }
            | Gate::Rz { angle, .. }
            | Gate::Rzz { angle, .. } => Some(angle),
            Gate::H { .. } | Gate::Cnot { .. } => None,
        }
    }

    /// Same gate with its angle negated; the inverse for every rotation.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: -angle },
            Gate::Ry { qubit, angle } => Gate::Ry { qubit, angle: -angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: -angle },
            Gate::Rzz { a, b, angle } => Gate::Rzz { a, b, angle: -angle },
            g @ (Gate::H { .. } | Gate::Cnot { .. }) => g,
        }
    }

    /// 2×2 matrix for single-qubit gates, `None` for two-qubit gates.
    pub fn single_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *self {
            Gate::Rx { angle, .. } => {
                let (s, co) = (angle / 2.0).sin_cos();
                Some([[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]])
            }
            Gate::Ry { angle, .. } => {
                let (s, co) = (angle / 2.0).sin_cos();
                Some([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
            }
            Gate::Rz { angle, .. } => {
                let p = Complex64::from_polar(1.0, -angle / 2.0);
                Some([[p, c(0.0, 0.0)], [c(0.0, 0.0), p.conj()]])
            }
            Gate::H { .. } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                Some([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
            }
            Gate::Cnot { .. } | Gate::Rzz { .. } => None,
        }
    }

    /// Local unitary on the gate's own qubits.
    ///
    /// For two-qubit gates the first listed qubit is the most significant
    /// bit of the 4×4 row index (control for CNOT).
    pub fn local_matrix(&self) -> DMatrix<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        if let Some(m) = self.single_qubit_matrix() {
            return DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
        }
        match *self {
            Gate::Cnot { .. } => DMatrix::from_row_slice(
                4,
                4,
                &[
                    one, z, z, z, //
                    z, one, z, z, //
                    z, z, z, one, //
                    z, z, one, z,
                ],
            ),
            Gate::Rzz { angle, .. } => {
                let p = Complex64::from_polar(1.0, -angle / 2.0);
                let mut m = DMatrix::from_element(4, 4, z);
                m[(0, 0)] = p;
                m[(1, 1)] = p.conj();
                m[(2, 2)] = p.conj();
                m[(3, 3)] = p;
                m
            }
            _ => unreachable!("single-qubit gates handled above"),
        }
    }
}

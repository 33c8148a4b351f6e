//! Quantum process tomography by linear inversion in the Pauli basis.
//!
//! The process is written as `E(ρ) = Σ_{mn} χ_{mn} σ_m ρ σ_n†` with basis
//! order (I, X, Y, Z). Four probe states with linearly independent density
//! matrices fix the superoperator, which is then converted to `χ` by solving
//! the 16×16 linear system relating the two.

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{ExperimentConfig, SequenceKind};
use crate::qubit::{c, pauli_basis, state_from_angles, BlochVector, Op, PureState, ROUNDOFF_TOL};
use crate::tomography::reconstruct_exact;

/// Below this |det| the probe inputs are treated as linearly dependent.
const GRAM_FLOOR: f64 = 1e-9;

/// Four input states and their (reconstructed) output Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub inputs: [PureState; 4],
    pub outputs: [BlochVector; 4],
}

impl ProbeSet {
    /// `|1⟩, (|0⟩ - i|1⟩)/√2, (|0⟩ + |1⟩)/√2, |0⟩`
    pub fn standard_inputs() -> [PureState; 4] {
        [PureState::excited(), PureState::minus_i(), PureState::plus_x(), PureState::ground()]
    }

    /// Gram determinant of the vectorized input density matrices.
    pub fn gram_determinant(&self) -> Result<f64> {
        let cols = input_matrix(&self.inputs)?;
        Ok((cols.adjoint() * &cols).determinant().re)
    }
}

/// Process matrix in the (I, X, Y, Z) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiMatrix(pub Matrix4<Complex64>);

impl ChiMatrix {
    /// χ of a unitary `U = Σ a_m σ_m` is `a a†`.
    pub fn from_unitary(u: &Op) -> Self {
        let basis = pauli_basis();
        let a: Vec<Complex64> = basis.iter().map(|p| (p.adjoint() * u).trace() * 0.5).collect();
        Self(Matrix4::from_fn(|m, n| a[m] * a[n].conj()))
    }

    pub fn identity_process() -> Self {
        Self::from_unitary(&Op::identity())
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.0[(m, n)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ χ_{mn} σ_m ρ σ_n†`
    pub fn apply(&self, rho: &Op) -> Op {
        let basis = pauli_basis();
        let mut out = Op::zeros();
        for m in 0..4 {
            for n in 0..4 {
                out += (basis[m] * rho * basis[n].adjoint()) * self.0[(m, n)];
            }
        }
        out
    }

    pub fn real_part(&self) -> [[f64; 4]; 4] {
        std::array::from_fn(|m| std::array::from_fn(|n| self.0[(m, n)].re))
    }

    pub fn imag_part(&self) -> [[f64; 4]; 4] {
        std::array::from_fn(|m| std::array::from_fn(|n| self.0[(m, n)].im))
    }

    pub fn max_abs_diff(&self, other: &ChiMatrix) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Column-stacked vectorization, `vec(ρ)[i + 2j] = ρ_ij`.
fn vectorize(rho: &Op) -> [Complex64; 4] {
    [rho[(0, 0)], rho[(1, 0)], rho[(0, 1)], rho[(1, 1)]]
}

fn matrix_unit(k: usize) -> Op {
    let mut e = Op::zeros();
    e[(k % 2, k / 2)] = c(1.0, 0.0);
    e
}

/// Density operator `(I + r·σ)/2`, without a physicality check so noisy
/// reconstructions pass through unchanged.
fn rho_from_bloch(b: &BlochVector) -> Op {
    Op::new(
        c(0.5 * (1.0 + b.z), 0.0),
        c(0.5 * b.x, -0.5 * b.y),
        c(0.5 * b.x, 0.5 * b.y),
        c(0.5 * (1.0 - b.z), 0.0),
    )
}

fn input_matrix(inputs: &[PureState; 4]) -> Result<DMatrix<Complex64>> {
    let mut cols = DMatrix::zeros(4, 4);
    for (j, s) in inputs.iter().enumerate() {
        let v = vectorize(state_from_angles(*s)?.rho());
        for i in 0..4 {
            cols[(i, j)] = v[i];
        }
    }
    Ok(cols)
}

/// 16×16 map from χ (index `4m + n`) to the vectorized superoperator
/// (index `4·col + row`).
fn chi_to_superop() -> DMatrix<Complex64> {
    let basis = pauli_basis();
    let mut b = DMatrix::zeros(16, 16);
    for m in 0..4 {
        for n in 0..4 {
            for col in 0..4 {
                let image = vectorize(&(basis[m] * matrix_unit(col) * basis[n].adjoint()));
                for row in 0..4 {
                    b[(4 * col + row, 4 * m + n)] = image[row];
                }
            }
        }
    }
    b
}

pub fn qpt_reconstruct(probes: &ProbeSet) -> Result<ChiMatrix> {
    let gram = probes.gram_determinant()?;
    if gram.abs() < GRAM_FLOOR {
        return Err(Error::SingularInversion(format!("probe Gram determinant {gram:e}")));
    }
    let inputs = input_matrix(&probes.inputs)?;
    let mut outputs = DMatrix::zeros(4, 4);
    for (j, b) in probes.outputs.iter().enumerate() {
        let v = vectorize(&rho_from_bloch(b));
        for i in 0..4 {
            outputs[(i, j)] = v[i];
        }
    }
    let inv = inputs
        .try_inverse()
        .ok_or_else(|| Error::SingularInversion("probe matrix is not invertible".into()))?;
    let superop = outputs * inv;

    let rhs = DVector::from_fn(16, |k, _| superop[(k % 4, k / 4)]);
    let solution = chi_to_superop()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularInversion("Pauli transfer system is singular".into()))?;
    let chi = ChiMatrix(Matrix4::from_fn(|m, n| solution[4 * m + n]));

    let residual = probes
        .inputs
        .iter()
        .zip(&probes.outputs)
        .map(|(s, b)| {
            let rho = state_from_angles(*s).map(|q| *q.rho())?;
            Ok(crate::qubit::max_abs_diff(&chi.apply(&rho), &rho_from_bloch(b)))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if residual > ROUNDOFF_TOL {
        return Err(Error::SingularInversion(format!("reconstruction residual {residual:e}")));
    }
    Ok(chi)
}

/// Overlap with an ideal π rotation about X: `Re χ(X,X)`.
pub fn process_fidelity(c: &ChiMatrix) -> f64 {
    c.0[(1, 1)].re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    /// Eigenvalues of the Hermitian part of χ, ascending.
    pub eigenvalues: [f64; 4],
    pub min_eigenvalue: f64,
    pub hermiticity_residual: f64,
    pub trace: f64,
    /// False when the reconstruction leaves the completely positive set.
    pub is_cp: bool,
}

pub fn cp_diagnostics(c: &ChiMatrix) -> CpReport {
    let herm = (c.0 + c.0.adjoint()) * Complex64::new(0.5, 0.0);
    let mut eig: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let eigenvalues = [eig[0], eig[1], eig[2], eig[3]];
    CpReport {
        eigenvalues,
        min_eigenvalue: eig[0],
        hermiticity_residual: c.hermiticity_residual(),
        trace: c.trace().re,
        is_cp: eig[0] >= -ROUNDOFF_TOL,
    }
}

/// Exact-mode probes: each standard input run through the uncollapsing
/// sequence and reconstructed by state tomography.
pub fn uncollapse_probes_exact(cfg: &ExperimentConfig) -> Result<ProbeSet> {
    let inputs = ProbeSet::standard_inputs();
    let mut outputs = [BlochVector::new(0.0, 0.0, 0.0); 4];
    for (out, s) in outputs.iter_mut().zip(inputs) {
        *out = reconstruct_exact(SequenceKind::Uncollapse, &cfg.with_initial(s))?;
    }
    Ok(ProbeSet { inputs, outputs })
}

pub fn uncollapse_chi_exact(cfg: &ExperimentConfig) -> Result<ChiMatrix> {
    qpt_reconstruct(&uncollapse_probes_exact(cfg)?)
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{SpinSystem, StateVector};
use crate::error::{Error, Result};

pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const UNITARY_TOLERANCE: f64 = 1e-10;
/// Adjacent eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    General,
}

/// Dense operator on the Dicke ladder of a [`SpinSystem`].
#[derive(Clone, Debug)]
pub struct Operator {
    system: SpinSystem,
    matrix: DMatrix<C64>,
    kind: OperatorKind,
}

impl Operator {
    /// Wraps `matrix`, checking its shape and the invariant promised by `kind`.
    pub fn new(system: SpinSystem, matrix: DMatrix<C64>, kind: OperatorKind) -> Result<Self> {
        system.check_dim(matrix.nrows())?;
        system.check_dim(matrix.ncols())?;
        match kind {
            OperatorKind::Hermitian => {
                let residual = hermiticity_residual(&matrix);
                if residual > HERMITIAN_TOLERANCE {
                    return Err(Error::NotHermitian { residual });
                }
            }
            OperatorKind::Unitary => {
                let residual = unitarity_residual(&matrix);
                if residual > UNITARY_TOLERANCE {
                    return Err(Error::NotUnitary { residual });
                }
            }
            OperatorKind::General => {}
        }
        Ok(Self { system, matrix, kind })
    }

    pub fn hermitian(system: SpinSystem, matrix: DMatrix<C64>) -> Result<Self> {
        Self::new(system, matrix, OperatorKind::Hermitian)
    }

    pub fn unitary(system: SpinSystem, matrix: DMatrix<C64>) -> Result<Self> {
        Self::new(system, matrix, OperatorKind::Unitary)
    }

    pub fn general(system: SpinSystem, matrix: DMatrix<C64>) -> Result<Self> {
        Self::new(system, matrix, OperatorKind::General)
    }

    pub fn identity(system: SpinSystem) -> Self {
        let d = system.dim();
        Self { system, matrix: DMatrix::identity(d, d), kind: OperatorKind::Unitary }
    }

    pub(crate) fn from_parts_unchecked(
        system: SpinSystem,
        matrix: DMatrix<C64>,
        kind: OperatorKind,
    ) -> Self {
        Self { system, matrix, kind }
    }

    pub fn system(&self) -> SpinSystem {
        self.system
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn adjoint(&self) -> Operator {
        Self { system: self.system, matrix: self.matrix.adjoint(), kind: self.kind }
    }

    /// Operator product `self * rhs`; unitarity is kept when both factors are unitary.
    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        self.same_system(rhs.system)?;
        let kind = match (self.kind, rhs.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Self { system: self.system, matrix: &self.matrix * &rhs.matrix, kind })
    }

    /// `[self, rhs]` as a general operator.
    pub fn commutator(&self, rhs: &Operator) -> Result<Operator> {
        self.same_system(rhs.system)?;
        let m = &self.matrix * &rhs.matrix - &rhs.matrix * &self.matrix;
        Ok(Self { system: self.system, matrix: m, kind: OperatorKind::General })
    }

    pub fn apply_vector(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }

    /// Applies a unitary operator to a state, renormalizing away rounding drift.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.same_system(psi.system())?;
        if self.kind != OperatorKind::Unitary {
            return Err(Error::InvalidParameter(
                "only unitary operators map states to states".into(),
            ));
        }
        StateVector::from_unnormalized(self.system, &self.matrix * psi.amplitudes())
    }

    /// `<psi|O|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> C64 {
        let v = &self.matrix * psi.amplitudes();
        psi.amplitudes().dotc(&v)
    }

    /// Largest entry modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Operator) -> f64 {
        max_abs(&(&self.matrix - &rhs.matrix))
    }

    fn same_system(&self, other: SpinSystem) -> Result<()> {
        if other != self.system {
            return Err(Error::DimensionMismatch {
                expected: self.system.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn unitarity_residual(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    max_abs(&(m.adjoint() * m - DMatrix::<C64>::identity(d, d)))
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues come back in descending order; each eigenvector is rotated so that
/// its leading largest-magnitude component is real and positive. Degenerate
/// eigenspaces are returned as whatever orthonormal basis the solver produced.
pub(crate) fn spectral_decomposition(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let d = m.nrows();
    let is_real = m.iter().all(|z| z.im == 0.0);
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if is_real {
        let re = m.map(|z| z.re);
        let eig = re.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = m.clone().symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut sorted_vals = Vec::with_capacity(d);
    let mut sorted_vecs = DMatrix::<C64>::zeros(d, d);
    for (col, &src) in order.iter().enumerate() {
        sorted_vals.push(values[src]);
        let mut v = vectors.column(src).clone_owned();
        fix_phase(&mut v);
        sorted_vecs.set_column(col, &v);
    }
    (sorted_vals, sorted_vecs)
}

fn fix_phase(v: &mut DVector<C64>) {
    let max = v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return;
    }
    // First component within rounding of the maximum, so mirror-symmetric
    // vectors pick the same index on every run.
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0);
    let z = v[pivot];
    let phase = z.conj() / z.norm();
    v.iter_mut().for_each(|c| *c *= phase);
}

/// Eigenvalues (descending) and the unitary whose columns are the eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigenbasis {
    pub values: Vec<f64>,
    pub vectors: Operator,
}

/// Non-degenerate spectral decomposition of a Hermitian operator.
pub fn eigenbasis(op: &Operator) -> Result<Eigenbasis> {
    require_hermitian(op)?;
    let (values, vectors) = spectral_decomposition(op.matrix());
    if let Some((value, multiplicity)) = worst_cluster(&values) {
        return Err(Error::DegenerateSpectrum { value, multiplicity });
    }
    Ok(Eigenbasis {
        values,
        vectors: Operator::from_parts_unchecked(op.system(), vectors, OperatorKind::Unitary),
    })
}

/// Eigenvector belonging to the smallest eigenvalue, which must be non-degenerate.
pub fn min_eigenstate(op: &Operator) -> Result<StateVector> {
    require_hermitian(op)?;
    let (values, vectors) = spectral_decomposition(op.matrix());
    let d = values.len();
    let lowest = values[d - 1];
    let multiplicity =
        values.iter().filter(|&&v| (v - lowest).abs() < DEGENERACY_TOLERANCE).count();
    if multiplicity > 1 {
        return Err(Error::DegenerateSpectrum { value: lowest, multiplicity });
    }
    StateVector::from_unnormalized(op.system(), vectors.column(d - 1).clone_owned())
}

fn require_hermitian(op: &Operator) -> Result<()> {
    let residual = hermiticity_residual(op.matrix());
    if op.kind() != OperatorKind::Hermitian || residual > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

/// Largest cluster of eigenvalues closer than the degeneracy tolerance, if any.
fn worst_cluster(sorted_desc: &[f64]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    let mut start = 0;
    for i in 1..=sorted_desc.len() {
        let split = i == sorted_desc.len()
            || (sorted_desc[i - 1] - sorted_desc[i]).abs() >= DEGENERACY_TOLERANCE;
        if split {
            let len = i - start;
            if len > 1 && best.map_or(true, |(_, m)| len > m) {
                best = Some((sorted_desc[start], len));
            }
            start = i;
        }
    }
    best
}

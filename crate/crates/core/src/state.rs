//! Pure states and density matrices on a photon-number sector.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::C64;

/// Read access shared by pure and mixed states, in the occupation basis.
pub trait QuantumState {
    fn basis(&self) -> &SectorBasis;

    /// Diagonal probabilities `rho_mm`.
    fn populations(&self) -> Vec<f64>;

    /// Matrix element `rho_ab`.
    fn coherence(&self, a: usize, b: usize) -> C64;

    fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<SectorBasis>,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: Arc<SectorBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::config(format!(
                "amplitude vector has length {}, sector dimension is {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, amps })
    }

    /// Localized Fock state with photons on `sites`.
    pub fn fock(basis: Arc<SectorBasis>, sites: &[usize]) -> Result<Self> {
        let mask = crate::basis::mask_of(sites);
        let idx = basis
            .index_of(mask)
            .ok_or_else(|| Error::config(format!("sites {sites:?} do not form a state of the sector")))?;
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { basis, amps })
    }

    pub fn basis_arc(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_sector(self.basis(), other.basis())?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

impl QuantumState for StateVector {
    fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn coherence(&self, a: usize, b: usize) -> C64 {
        self.amps[a] * self.amps[b].conj()
    }
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    basis: Arc<SectorBasis>,
    rho: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(basis: Arc<SectorBasis>, rho: DMatrix<C64>) -> Result<Self> {
        let d = basis.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::config(format!("density matrix must be {d}x{d}")));
        }
        Ok(Self { basis, rho })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Self { basis: psi.basis.clone(), rho: &v * v.adjoint() }
    }

    pub fn basis_arc(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.rho
    }

    pub fn trace_complex(&self) -> C64 {
        self.rho.trace()
    }

    /// Largest `|rho - rho^dag|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.rho.nrows();
        let mut worst = 0.0f64;
        for c in 0..d {
            for r in 0..=c {
                worst = worst.max((self.rho[(r, c)] - self.rho[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_part(&self.rho).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `<psi|rho|psi>`.
    pub fn expectation_projector(&self, psi: &StateVector) -> Result<f64> {
        same_sector(self.basis(), psi.basis())?;
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Ok((v.adjoint() * &self.rho * &v)[(0, 0)].re)
    }

    /// `0.5 * |rho - sigma|_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        same_sector(self.basis(), other.basis())?;
        let diff = hermitian_part(&(&self.rho - &other.rho));
        Ok(0.5 * diff.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
    }
}

impl QuantumState for DensityMatrix {
    fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|x| x.re).collect()
    }

    fn coherence(&self, a: usize, b: usize) -> C64 {
        self.rho[(a, b)]
    }
}

/// Either kind of state, for APIs that accept both.
#[derive(Debug, Clone)]
pub enum AnyState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl AnyState {
    pub fn as_dyn(&self) -> &dyn QuantumState {
        match self {
            AnyState::Pure(s) => s,
            AnyState::Mixed(r) => r,
        }
    }
}

impl From<StateVector> for AnyState {
    fn from(s: StateVector) -> Self {
        AnyState::Pure(s)
    }
}

impl From<DensityMatrix> for AnyState {
    fn from(r: DensityMatrix) -> Self {
        AnyState::Mixed(r)
    }
}

pub(crate) fn same_sector(a: &SectorBasis, b: &SectorBasis) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::SectorMismatch)
    }
}

pub(crate) fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Positive square root of a Hermitian positive semidefinite matrix (negative
/// eigenvalues from rounding are clipped).
pub(crate) fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let d = m.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for k in 0..d {
        let s = eig.eigenvalues[k].max(0.0).sqrt();
        scaled.column_mut(k).iter_mut().for_each(|x| *x *= s);
    }
    &scaled * eig.eigenvectors.adjoint()
}

//! Reproducible experiment procedures built on the lattice and state engine.
//!
//! Sweeps run their points in parallel on the current rayon pool; results are
//! always returned in grid order.

pub mod adiabatic;
pub mod butterfly;
pub mod calibration;
pub mod correlations;
pub mod currents;
pub mod defects;
pub mod gap_map;
pub mod streda;

use std::sync::Arc;

use crate::basis::{enumerate_basis, SectorBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianTemplate, SparseHermitian};
use crate::lattice::{landau_gauge, Couplings, GaugeField, Lattice, Potential};
use crate::spectrum::{diagonalize, SpectrumResult};
use crate::state::StateVector;

/// A fixed-photon-number system on a uniformly coupled lattice in Landau gauge.
#[derive(Debug, Clone)]
pub struct Model {
    pub lattice: Lattice,
    pub basis: Arc<SectorBasis>,
    pub j_mhz: f64,
}

impl Model {
    pub fn new(lx: usize, ly: usize, n_photons: usize, j_mhz: f64) -> Result<Self> {
        let lattice = Lattice::new(lx, ly)?;
        let basis = Arc::new(enumerate_basis(&lattice, n_photons)?);
        Ok(Self { lattice, basis, j_mhz })
    }

    pub fn n_photons(&self) -> usize {
        self.basis.n_photons()
    }

    pub fn gauge(&self, phi: f64) -> GaugeField {
        landau_gauge(&self.lattice, phi)
    }

    pub fn couplings(&self) -> Couplings {
        Couplings::uniform(&self.lattice, self.j_mhz)
    }

    pub fn template(&self, phi: f64) -> Result<HamiltonianTemplate> {
        HamiltonianTemplate::new(&self.basis, &self.gauge(phi))
    }

    pub fn hamiltonian(&self, phi: f64, potential: &Potential) -> Result<SparseHermitian> {
        Ok(self.template(phi)?.instant(&self.couplings(), potential).to_sparse())
    }

    pub fn spectrum(&self, phi: f64, potential: &Potential, want_vectors: bool) -> Result<SpectrumResult> {
        diagonalize(&self.hamiltonian(phi, potential)?, want_vectors)
    }

    /// Exact ground state (flat potential unless given).
    pub fn ground_state(&self, phi: f64, potential: Option<&Potential>) -> Result<StateVector> {
        let flat = Potential::flat(&self.lattice);
        let spec = self.spectrum(phi, potential.unwrap_or(&flat), true)?;
        let amps = spec.ground_state().ok_or_else(|| Error::config("empty sector"))?;
        StateVector::new(self.basis.clone(), amps)
    }
}

/// Evenly spaced grid `start, start + step, ..` up to `stop` (inclusive within 1e-9 of a step).
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::config(format!("bad grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// Sites given as `(x, y)` pairs.
pub fn sites_of(lattice: &Lattice, coords: &[(usize, usize)]) -> Result<Vec<usize>> {
    coords
        .iter()
        .map(|&(x, y)| {
            if x < lattice.lx() && y < lattice.ly() {
                Ok(lattice.site(x, y))
            } else {
                Err(Error::config(format!("site ({x}, {y}) is off the {}x{} lattice", lattice.lx(), lattice.ly())))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_inclusive() {
        let g = linear_grid(0.1, 0.4, 0.02).unwrap();
        assert_eq!(g.len(), 16);
        assert!((g[15] - 0.4).abs() < 1e-12);
        assert_eq!(linear_grid(0.25, 0.32, 0.01).unwrap().len(), 8);
        assert!(linear_grid(0.0, 1.0, 0.0).is_err());
    }
}

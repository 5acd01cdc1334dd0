//! Dense exact diagonalization of sector Hamiltonians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHermitian;
use crate::C64;

/// Largest dimension accepted by the dense path.
pub const DENSE_DIM_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending, rad/us.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: Option<DMatrix<C64>>,
}

impl SpectrumResult {
    /// `E1 - E0` in rad/us; zero for one-dimensional sectors.
    pub fn gap(&self) -> f64 {
        match self.eigenvalues.as_slice() {
            [e0, e1, ..] => (e1 - e0).max(0.0),
            _ => 0.0,
        }
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Ground-state amplitudes; `None` when vectors were not requested.
    pub fn ground_state(&self) -> Option<Vec<C64>> {
        self.eigenvector(0)
    }

    pub fn eigenvector(&self, k: usize) -> Option<Vec<C64>> {
        self.eigenvectors.as_ref().map(|v| v.column(k).iter().copied().collect())
    }
}

pub fn diagonalize(h: &SparseHermitian, want_vectors: bool) -> Result<SpectrumResult> {
    let dim = h.dim();
    if dim > DENSE_DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DENSE_DIM_CAP });
    }
    if dim == 0 {
        return Ok(SpectrumResult { eigenvalues: Vec::new(), eigenvectors: want_vectors.then(|| DMatrix::zeros(0, 0)) });
    }
    let dense = h.to_dense();
    if !want_vectors {
        let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        return Ok(SpectrumResult { eigenvalues: ev, eigenvectors: None });
    }
    let eig = dense.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectrumResult { eigenvalues, eigenvectors: Some(vecs) })
}

/// Largest `|Hv - lambda v|` over all returned pairs.
pub fn max_residual(h: &SparseHermitian, spec: &SpectrumResult) -> Option<f64> {
    let vecs = spec.eigenvectors.as_ref()?;
    let dim = h.dim();
    let mut y = vec![C64::new(0.0, 0.0); dim];
    let mut worst = 0.0f64;
    for (k, &e) in spec.eigenvalues.iter().enumerate() {
        let v: Vec<C64> = vecs.column(k).iter().copied().collect();
        h.apply(&v, &mut y);
        let r = DVector::from_iterator(dim, y.iter().zip(&v).map(|(a, b)| a - b * e)).norm();
        worst = worst.max(r);
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::hamiltonian::build_hamiltonian;
    use crate::lattice::{landau_gauge, Couplings, Lattice, Potential};
    use std::f64::consts::PI;

    #[test]
    fn two_site_dimer() {
        let l = Lattice::new(2, 1).unwrap();
        let b = enumerate_basis(&l, 1).unwrap();
        let h = build_hamiltonian(&l, &landau_gauge(&l, 0.0), &Couplings::uniform(&l, 5.0), &Potential::flat(&l), &b).unwrap();
        let s = diagonalize(&h, true).unwrap();
        assert!((s.eigenvalues[0] + 10.0 * PI).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 10.0 * PI).abs() < 1e-12);
        assert!((s.gap() - 20.0 * PI).abs() < 1e-12);
        assert!(max_residual(&h, &s).unwrap() < 1e-10);
    }

    #[test]
    fn vectors_and_values_agree() {
        let l = Lattice::new(4, 4).unwrap();
        let b = enumerate_basis(&l, 2).unwrap();
        let v = Potential::from_sites(&l, [(3, 1.0), (12, -2.0)]).unwrap();
        let h = build_hamiltonian(&l, &landau_gauge(&l, 0.3), &Couplings::uniform(&l, 5.0), &v, &b).unwrap();
        let a = diagonalize(&h, false).unwrap();
        let s = diagonalize(&h, true).unwrap();
        assert!(a.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        for (x, y) in a.eigenvalues.iter().zip(&s.eigenvalues) {
            assert!((x - y).abs() < 1e-9);
        }
        let scale = h.to_dense().norm();
        assert!(max_residual(&h, &s).unwrap() <= 1e-8 * scale);
    }

    #[test]
    fn dimension_cap() {
        let h = SparseHermitian::from_upper(DENSE_DIM_CAP + 1, []).unwrap();
        assert!(matches!(diagonalize(&h, false), Err(Error::DimensionCap { .. })));
    }
}

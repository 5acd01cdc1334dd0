//! Sector-restricted hard-core boson Hamiltonian with Peierls phases.
//!
//! `H = sum_bonds 2*pi*J_st * e^{i theta(s->t)} sigma_t^dag sigma_s + h.c. + 2*pi * sum_s v_s n_s`
//! in rad/us, with J and v given in MHz.

use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::basis::{occupied, SectorBasis};
use crate::error::{Error, Result};
use crate::lattice::{Couplings, GaugeField, Lattice, Potential};
use crate::C64;

/// One photon hop connecting basis states `from` and `to` (stored once per pair, `from < to`).
#[derive(Debug, Clone, Copy)]
struct Hop {
    from: usize,
    to: usize,
    bond: usize,
    /// Photon moves along the bond's `a -> b` direction.
    forward: bool,
}

/// Precomputed hop structure of a set of occupation states; reused for every instant of a schedule.
#[derive(Debug, Clone)]
pub struct HamiltonianTemplate {
    lattice: Lattice,
    states: Vec<u32>,
    hops: Vec<Hop>,
    /// `e^{i theta(a -> b)}` per bond.
    bond_phase: Vec<C64>,
}

impl HamiltonianTemplate {
    pub fn new(basis: &SectorBasis, gauge: &GaugeField) -> Result<Self> {
        Self::from_states(basis.lattice(), gauge, basis.states().to_vec())
    }

    /// Template over an arbitrary ascending list of occupation masks closed under hops
    /// (a sector, or the full two-level space).
    pub fn from_states(lattice: &Lattice, gauge: &GaugeField, states: Vec<u32>) -> Result<Self> {
        let bond_phase = lattice
            .bonds()
            .iter()
            .map(|b| {
                gauge
                    .theta(b.a, b.b)
                    .map(|th| C64::from_polar(1.0, th))
                    .ok_or_else(|| Error::config(format!("gauge has no phase on bond ({}, {})", b.a, b.b)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut hops = Vec::new();
        for (i, &m) in states.iter().enumerate() {
            for (k, b) in lattice.bonds().iter().enumerate() {
                let (oa, ob) = (occupied(m, b.a), occupied(m, b.b));
                if oa == ob {
                    continue;
                }
                let target = m ^ (1 << b.a) ^ (1 << b.b);
                let j = states
                    .binary_search(&target)
                    .map_err(|_| Error::config("state list is not closed under photon hops"))?;
                if i < j {
                    hops.push(Hop { from: i, to: j, bond: k, forward: oa });
                }
            }
        }
        Ok(Self { lattice: lattice.clone(), states, hops, bond_phase })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Numerical Hamiltonian for given couplings and potentials.
    pub fn instant(&self, couplings: &Couplings, potential: &Potential) -> InstantHamiltonian<'_> {
        let j = couplings.values();
        let hop_values = self
            .hops
            .iter()
            .map(|h| {
                let k = TAU * j[h.bond] * self.bond_phase[h.bond];
                if h.forward {
                    k
                } else {
                    k.conj()
                }
            })
            .collect();
        let v = potential.values();
        let diag = self
            .states
            .iter()
            .map(|&m| {
                let mut e = 0.0;
                let mut rest = m;
                while rest != 0 {
                    let s = rest.trailing_zeros() as usize;
                    e += v.get(s).copied().unwrap_or(0.0);
                    rest &= rest - 1;
                }
                TAU * e
            })
            .collect();
        InstantHamiltonian { template: self, hop_values, diag }
    }
}

/// Hamiltonian at one instant: `hop_values[k] = <to|H|from>` for hop `k`, plus the diagonal.
#[derive(Debug, Clone)]
pub struct InstantHamiltonian<'a> {
    template: &'a HamiltonianTemplate,
    hop_values: Vec<C64>,
    diag: Vec<f64>,
}

impl InstantHamiltonian<'_> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi * d;
        }
        for (h, &k) in self.template.hops.iter().zip(&self.hop_values) {
            y[h.to] += k * x[h.from];
            y[h.from] += k.conj() * x[h.to];
        }
    }

    /// `out = H M` for a column-major `dim x dim` matrix.
    pub fn apply_columns(&self, m: &[C64], out: &mut [C64]) {
        let d = self.dim();
        for (col_in, col_out) in m.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            self.apply(col_in, col_out);
        }
    }

    /// Gershgorin bound on the spectral radius, rad/us.
    pub fn norm_bound(&self) -> f64 {
        let mut rows: Vec<f64> = self.diag.iter().map(|d| d.abs()).collect();
        for (h, k) in self.template.hops.iter().zip(&self.hop_values) {
            let a = k.norm();
            rows[h.to] += a;
            rows[h.from] += a;
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn to_sparse(&self) -> SparseHermitian {
        let mut entries: Vec<(usize, usize, C64)> = self
            .diag
            .iter()
            .enumerate()
            .filter(|(_, d)| **d != 0.0)
            .map(|(i, &d)| (i, i, C64::new(d, 0.0)))
            .collect();
        for (h, &k) in self.template.hops.iter().zip(&self.hop_values) {
            if k != C64::new(0.0, 0.0) {
                // from < to, so (from, to) is the upper-triangular slot holding <from|H|to>.
                entries.push((h.from, h.to, k.conj()));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        SparseHermitian { dim: self.dim(), entries }
    }
}

/// Hermitian matrix stored once per upper-triangular position, rad/us.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    /// Builds from upper-triangular entries; duplicate positions are summed, diagonal
    /// entries must be real.
    pub fn from_upper(dim: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Result<Self> {
        let mut v: Vec<(usize, usize, C64)> = Vec::new();
        for (r, c, x) in entries {
            if r > c || c >= dim {
                return Err(Error::config(format!("entry ({r}, {c}) is not upper-triangular in dim {dim}")));
            }
            if r == c && x.im != 0.0 {
                return Err(Error::config(format!("diagonal entry ({r}, {r}) is not real")));
            }
            v.push((r, c, x));
        }
        v.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(v.len());
        for e in v {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        Ok(Self { dim, entries: merged })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, x) in &self.entries {
            m[(r, c)] += x;
            if r != c {
                m[(c, r)] += x.conj();
            }
        }
        m
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
            if r != c {
                y[c] += v.conj() * x[r];
            }
        }
    }

    /// Largest entry magnitude; zero matrix gives 0.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.norm()))
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|&(r, c, _)| r == c)
    }
}

pub fn build_hamiltonian(
    lattice: &Lattice,
    gauge: &GaugeField,
    couplings: &Couplings,
    potential: &Potential,
    basis: &SectorBasis,
) -> Result<SparseHermitian> {
    if basis.lattice() != lattice {
        return Err(Error::config("sector basis was built for a different lattice"));
    }
    if couplings.values().len() != lattice.num_bonds() {
        return Err(Error::config("coupling table does not match lattice bonds"));
    }
    if potential.values().len() != lattice.num_sites() {
        return Err(Error::config("potential table does not match lattice sites"));
    }
    let tpl = HamiltonianTemplate::new(basis, gauge)?;
    Ok(tpl.instant(couplings, potential).to_sparse())
}

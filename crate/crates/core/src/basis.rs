//! Fixed-photon-number sectors of the hard-core (two-level per site) Hilbert space.

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Occupation bitmasks (bit `s` = site `s` occupied), strictly ascending. Either a
/// fixed-photon-number sector or, for superpositions across sectors, every
/// pattern with at most `n_photons` photons.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    lattice: Lattice,
    n_photons: usize,
    cumulative: bool,
    states: Vec<u32>,
}

impl PartialEq for SectorBasis {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.n_photons == other.n_photons && self.cumulative == other.cumulative
    }
}

impl SectorBasis {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Photon number of the sector (the maximum for a cumulative basis).
    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    /// `Some(N)` when every state carries exactly `N` photons.
    pub fn fixed_photon_number(&self) -> Option<usize> {
        (!self.cumulative).then_some(self.n_photons)
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u32 {
        self.states[i]
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }
}

pub fn enumerate_basis(lattice: &Lattice, n_photons: usize) -> Result<SectorBasis> {
    let sites = lattice.num_sites();
    if n_photons > sites {
        return Err(Error::PhotonCount { n: n_photons, sites });
    }
    Ok(SectorBasis {
        lattice: lattice.clone(),
        n_photons,
        cumulative: false,
        states: masks_with_popcount(sites, n_photons),
    })
}

/// Direct sum of the sectors `0..=n_max`.
pub fn enumerate_up_to(lattice: &Lattice, n_max: usize) -> Result<SectorBasis> {
    let sites = lattice.num_sites();
    if n_max > sites {
        return Err(Error::PhotonCount { n: n_max, sites });
    }
    let mut states: Vec<u32> = (0..=n_max).flat_map(|n| masks_with_popcount(sites, n)).collect();
    states.sort_unstable();
    Ok(SectorBasis { lattice: lattice.clone(), n_photons: n_max, cumulative: true, states })
}

/// Bitmask of a list of sites.
pub fn mask_of(sites: &[usize]) -> u32 {
    sites.iter().fold(0u32, |m, &s| m | (1 << s))
}

pub fn occupied(mask: u32, site: usize) -> bool {
    mask >> site & 1 == 1
}

/// All `n`-bit-set masks below `1 << sites` in ascending order (Gosper's hack).
fn masks_with_popcount(sites: usize, n: usize) -> Vec<u32> {
    if n == 0 {
        return vec![0];
    }
    let limit: u64 = 1 << sites;
    let mut out = Vec::new();
    let mut v: u64 = (1 << n) - 1;
    while v < limit {
        out.push(v as u32);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Every occupation pattern of the lattice, all sectors together, ascending.
pub fn full_space_states(lattice: &Lattice) -> Vec<u32> {
    (0..1u32 << lattice.num_sites()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn sector_sizes_on_4x4() {
        let l = Lattice::new(4, 4).unwrap();
        assert_eq!(enumerate_basis(&l, 0).unwrap().dim(), 1);
        assert_eq!(enumerate_basis(&l, 2).unwrap().dim(), 120);
        assert_eq!(enumerate_basis(&l, 3).unwrap().dim(), 560);
        for n in 0..=4 {
            assert_eq!(enumerate_basis(&l, n).unwrap().dim(), binomial(16, n));
        }
    }

    #[test]
    fn ascending_and_complete() {
        let l = Lattice::new(3, 3).unwrap();
        for n in 0..=9 {
            let b = enumerate_basis(&l, n).unwrap();
            assert!(b.states().windows(2).all(|w| w[0] < w[1]));
            let brute: Vec<u32> = (0..1u32 << 9).filter(|m| m.count_ones() as usize == n).collect();
            assert_eq!(b.states(), brute.as_slice());
            for (i, &m) in b.states().iter().enumerate() {
                assert_eq!(b.index_of(m), Some(i));
            }
        }
    }

    #[test]
    fn cumulative_basis() {
        let l = Lattice::new(4, 4).unwrap();
        let b = enumerate_up_to(&l, 1).unwrap();
        assert_eq!(b.dim(), 17);
        assert_eq!(b.state(0), 0);
        assert_eq!(b.fixed_photon_number(), None);
        assert_ne!(b, enumerate_basis(&l, 1).unwrap());
        assert_eq!(enumerate_up_to(&l, 16).unwrap().states(), full_space_states(&l).as_slice());
    }

    #[test]
    fn too_many_photons() {
        let l = Lattice::new(2, 2).unwrap();
        assert!(matches!(enumerate_basis(&l, 5), Err(Error::PhotonCount { .. })));
        assert_eq!(enumerate_basis(&l, 4).unwrap().dim(), 1);
    }
}

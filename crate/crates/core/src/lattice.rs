//! Lattice geometry, Peierls phases, couplings and on-site potentials.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Open rectangular lattice with site index `s = x + lx * y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    lx: usize,
    ly: usize,
    bonds: Vec<Bond>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Nearest-neighbour bond stored with `a < b`; the +x or +y neighbour of `a` is `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub axis: Axis,
}

/// Unit cell identified by its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plaquette {
    pub x: usize,
    pub y: usize,
}

impl Lattice {
    pub const MAX_SITES: usize = 24;

    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::config(format!("lattice dimensions must be positive, got {lx}x{ly}")));
        }
        if lx * ly > Self::MAX_SITES {
            return Err(Error::config(format!(
                "lattice {lx}x{ly} has {} sites, cap is {}",
                lx * ly,
                Self::MAX_SITES
            )));
        }
        let mut bonds = Vec::new();
        for y in 0..ly {
            for x in 0..lx {
                let s = x + lx * y;
                if x + 1 < lx {
                    bonds.push(Bond { a: s, b: s + 1, axis: Axis::X });
                }
                if y + 1 < ly {
                    bonds.push(Bond { a: s, b: s + lx, axis: Axis::Y });
                }
            }
        }
        Ok(Self { lx, ly, bonds })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn num_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.lx && y < self.ly);
        x + self.lx * y
    }

    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s % self.lx, s / self.lx)
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Index into [`Lattice::bonds`] for the unordered pair `{s, t}`.
    pub fn bond_index(&self, s: usize, t: usize) -> Option<usize> {
        let (a, b) = if s < t { (s, t) } else { (t, s) };
        self.bonds.iter().position(|bd| bd.a == a && bd.b == b)
    }

    pub fn are_neighbors(&self, s: usize, t: usize) -> bool {
        if s >= self.num_sites() || t >= self.num_sites() {
            return false;
        }
        let (xs, ys) = self.coords(s);
        let (xt, yt) = self.coords(t);
        xs.abs_diff(xt) + ys.abs_diff(yt) == 1
    }

    pub fn neighbors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.bonds.iter().filter_map(move |bd| {
            if bd.a == s {
                Some(bd.b)
            } else if bd.b == s {
                Some(bd.a)
            } else {
                None
            }
        })
    }

    pub fn plaquettes(&self) -> Vec<Plaquette> {
        let mut out = Vec::new();
        for y in 0..self.ly.saturating_sub(1) {
            for x in 0..self.lx.saturating_sub(1) {
                out.push(Plaquette { x, y });
            }
        }
        out
    }

    /// Counterclockwise corner sites of a plaquette, starting at the lower-left.
    pub fn plaquette_sites(&self, p: Plaquette) -> [usize; 4] {
        [
            self.site(p.x, p.y),
            self.site(p.x + 1, p.y),
            self.site(p.x + 1, p.y + 1),
            self.site(p.x, p.y + 1),
        ]
    }

    /// Boundary sites in counterclockwise order starting at the origin.
    pub fn boundary_loop(&self) -> Vec<usize> {
        let (lx, ly) = (self.lx, self.ly);
        if lx < 2 || ly < 2 {
            return (0..self.num_sites()).collect();
        }
        let mut out = Vec::with_capacity(2 * (lx + ly) - 4);
        out.extend((0..lx).map(|x| self.site(x, 0)));
        out.extend((1..ly).map(|y| self.site(lx - 1, y)));
        out.extend((0..lx - 1).rev().map(|x| self.site(x, ly - 1)));
        out.extend((1..ly - 1).rev().map(|y| self.site(0, y)));
        out
    }
}

/// Directed Peierls phases on the bonds of a lattice.
///
/// Only the `a -> b` phase of each bond is stored, so `theta(b -> a) = -theta(a -> b)`
/// holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField {
    phases: BTreeMap<(usize, usize), f64>,
    flux_parameter: Option<f64>,
}

impl GaugeField {
    pub fn zero(lattice: &Lattice) -> Self {
        landau_gauge(lattice, 0.0)
    }

    /// Builds a gauge from directed phases `(s, t) -> theta(s -> t)`. Bonds may be left out.
    pub fn from_phases(
        lattice: &Lattice,
        phases: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self> {
        let mut out = BTreeMap::new();
        for ((s, t), theta) in phases {
            if !lattice.are_neighbors(s, t) {
                return Err(Error::config(format!("phase given on non-bond ({s}, {t})")));
            }
            if !theta.is_finite() {
                return Err(Error::config(format!("non-finite phase on ({s}, {t})")));
            }
            if s < t {
                out.insert((s, t), theta);
            } else {
                out.insert((t, s), -theta);
            }
        }
        Ok(Self { phases: out, flux_parameter: None })
    }

    /// Phase acquired by a photon hopping `s -> t`, if the bond is covered.
    pub fn theta(&self, s: usize, t: usize) -> Option<f64> {
        if s < t {
            self.phases.get(&(s, t)).copied()
        } else {
            self.phases.get(&(t, s)).map(|p| -p)
        }
    }

    pub fn flux_parameter(&self) -> Option<f64> {
        self.flux_parameter
    }

    pub fn covers(&self, lattice: &Lattice) -> bool {
        lattice.bonds().iter().all(|b| self.phases.contains_key(&(b.a, b.b)))
    }
}

/// Landau gauge: `theta((x,y) -> (x+1,y)) = -2*pi*phi*y`, vertical bonds carry no phase.
pub fn landau_gauge(lattice: &Lattice, phi: f64) -> GaugeField {
    let phases = lattice
        .bonds()
        .iter()
        .map(|b| {
            let theta = match b.axis {
                Axis::X => -TAU * phi * lattice.coords(b.a).1 as f64,
                Axis::Y => 0.0,
            };
            ((b.a, b.b), theta)
        })
        .collect();
    GaugeField { phases, flux_parameter: Some(phi) }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaquetteFlux {
    pub plaquette: Plaquette,
    /// Counterclockwise phase sum wrapped into `(-pi, pi]`.
    pub phase: f64,
}

impl PlaquetteFlux {
    /// Flux quanta through the cell.
    pub fn phi(&self) -> f64 {
        self.phase / TAU
    }
}

pub fn plaquette_fluxes(gauge: &GaugeField, lattice: &Lattice) -> Result<Vec<PlaquetteFlux>> {
    lattice
        .plaquettes()
        .into_iter()
        .map(|p| {
            let c = lattice.plaquette_sites(p);
            let mut sum = 0.0;
            for k in 0..4 {
                let (s, t) = (c[k], c[(k + 1) % 4]);
                sum += gauge
                    .theta(s, t)
                    .ok_or_else(|| Error::config(format!("missing phase on bond ({s}, {t})")))?;
            }
            Ok(PlaquetteFlux { plaquette: p, phase: wrap_phase(sum) })
        })
        .collect()
}

/// Site-local gauge transform `theta'(s -> t) = theta(s -> t) + chi(t) - chi(s)`.
pub fn gauge_transform(gauge: &GaugeField, chi: &[f64]) -> Result<GaugeField> {
    let mut phases = BTreeMap::new();
    for (&(a, b), &theta) in &gauge.phases {
        let (ca, cb) = match (chi.get(a), chi.get(b)) {
            (Some(ca), Some(cb)) => (*ca, *cb),
            _ => return Err(Error::config("site phase map does not cover all sites")),
        };
        phases.insert((a, b), theta + cb - ca);
    }
    Ok(GaugeField { phases, flux_parameter: gauge.flux_parameter })
}

/// Hopping amplitudes per bond, MHz, indexed like [`Lattice::bonds`].
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    values: Vec<f64>,
}

impl Couplings {
    pub fn uniform(lattice: &Lattice, j_mhz: f64) -> Self {
        Self { values: vec![j_mhz; lattice.num_bonds()] }
    }

    pub fn zero(lattice: &Lattice) -> Self {
        Self::uniform(lattice, 0.0)
    }

    /// Uniform default plus explicit `(s, t, J)` overrides.
    pub fn with_overrides(
        lattice: &Lattice,
        default_mhz: f64,
        overrides: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut c = Self::uniform(lattice, default_mhz);
        for (s, t, j) in overrides {
            c.set(lattice, s, t, j)?;
        }
        Ok(c)
    }

    pub fn set(&mut self, lattice: &Lattice, s: usize, t: usize, j_mhz: f64) -> Result<()> {
        let idx = lattice
            .bond_index(s, t)
            .ok_or_else(|| Error::config(format!("coupling on nonexistent bond ({s}, {t})")))?;
        if !j_mhz.is_finite() {
            return Err(Error::config(format!("non-finite coupling on ({s}, {t})")));
        }
        self.values[idx] = j_mhz;
        Ok(())
    }

    pub fn get(&self, lattice: &Lattice, s: usize, t: usize) -> Option<f64> {
        lattice.bond_index(s, t).map(|i| self.values[i])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn lerp(&self, other: &Self, u: f64) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + (b - a) * u).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// On-site potential per site, MHz. Unlisted sites sit at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn flat(lattice: &Lattice) -> Self {
        Self { values: vec![0.0; lattice.num_sites()] }
    }

    pub fn from_sites(lattice: &Lattice, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut p = Self::flat(lattice);
        for (s, v) in entries {
            p.set(s, v)?;
        }
        Ok(p)
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("non-finite potential"));
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, s: usize, v_mhz: f64) -> Result<()> {
        if !v_mhz.is_finite() {
            return Err(Error::config(format!("non-finite potential on site {s}")));
        }
        let slot = self
            .values
            .get_mut(s)
            .ok_or_else(|| Error::config(format!("potential on nonexistent site {s}")))?;
        *slot = v_mhz;
        Ok(())
    }

    pub fn add(&mut self, s: usize, dv_mhz: f64) -> Result<()> {
        let v = self.get(s) + dv_mhz;
        self.set(s, v)
    }

    pub fn get(&self, s: usize) -> f64 {
        self.values.get(s).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn lerp(&self, other: &Self, u: f64) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + (b - a) * u).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lat44() -> Lattice {
        Lattice::new(4, 4).unwrap()
    }

    #[test]
    fn bond_and_plaquette_counts() {
        let l = lat44();
        assert_eq!(l.num_bonds(), 24);
        assert_eq!(l.plaquettes().len(), 9);
        assert_eq!(l.boundary_loop().len(), 12);
        assert!(Lattice::new(5, 5).is_err());
        assert!(Lattice::new(0, 3).is_err());
    }

    #[test]
    fn zero_flux_is_all_zero() {
        let l = lat44();
        let g = landau_gauge(&l, 0.0);
        for b in l.bonds() {
            assert_eq!(g.theta(b.a, b.b), Some(0.0));
        }
    }

    #[test]
    fn landau_phase_on_row_two() {
        let l = lat44();
        let g = landau_gauge(&l, 0.3);
        let th = g.theta(l.site(1, 2), l.site(2, 2)).unwrap();
        assert_abs_diff_eq!(th, -1.2 * PI, epsilon = 1e-12);
        assert_eq!(g.theta(l.site(2, 2), l.site(1, 2)).unwrap(), -th);
        assert_eq!(g.theta(l.site(1, 1), l.site(1, 2)).unwrap(), 0.0);
    }

    #[test]
    fn landau_plaquettes_carry_phi() {
        let l = lat44();
        for phi in [0.0, 0.1, 0.3, 0.45, -0.2] {
            let f = plaquette_fluxes(&landau_gauge(&l, phi), &l).unwrap();
            assert_eq!(f.len(), 9);
            for p in f {
                assert_abs_diff_eq!(p.phi(), phi, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn missing_bond_is_config_error() {
        let l = lat44();
        let g = GaugeField::from_phases(&l, [((0, 1), 0.5)]).unwrap();
        assert!(!g.covers(&l));
        assert!(matches!(plaquette_fluxes(&g, &l), Err(Error::Config(_))));
        assert!(GaugeField::from_phases(&l, [((0, 5), 0.5)]).is_err());
    }

    #[test]
    fn constant_chi_leaves_gauge_unchanged() {
        let l = lat44();
        let g = landau_gauge(&l, 0.3);
        assert_eq!(gauge_transform(&g, &vec![0.0; 16]).unwrap(), g);
        let shifted = gauge_transform(&g, &vec![1.7; 16]).unwrap();
        for b in l.bonds() {
            assert_abs_diff_eq!(shifted.theta(b.a, b.b).unwrap(), g.theta(b.a, b.b).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn coupling_on_non_bond_rejected() {
        let l = lat44();
        assert!(Couplings::with_overrides(&l, 5.0, [(0, 5, 1.0)]).is_err());
        let c = Couplings::with_overrides(&l, 5.0, [(1, 0, 2.0)]).unwrap();
        assert_eq!(c.get(&l, 0, 1), Some(2.0));
    }

    #[test]
    fn wrap_range() {
        assert_abs_diff_eq!(wrap_phase(PI), PI);
        assert_abs_diff_eq!(wrap_phase(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_phase(3.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-12);
    }
}

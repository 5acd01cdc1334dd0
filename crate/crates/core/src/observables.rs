//! Expectation values derived from sector states.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::basis::occupied;
use crate::error::{Error, Result};
use crate::evolve::{evolve_lindblad_with, evolve_pure_with, Dephasing};
use crate::fit::{fit_sinusoid, SinusoidFit};
use crate::lattice::{Couplings, GaugeField, Lattice, Potential};
use crate::schedule::DriveSchedule;
use crate::state::{hermitian_part, psd_sqrt, same_sector, AnyState, DensityMatrix, QuantumState};
use crate::{C64, DEFAULT_DT_US};

/// `<n_s>` per site.
pub fn densities<S: QuantumState + ?Sized>(state: &S) -> Vec<f64> {
    let b = state.basis();
    let mut n = vec![0.0; b.lattice().num_sites()];
    for (p, &m) in state.populations().iter().zip(b.states()) {
        let mut rest = m;
        while rest != 0 {
            n[rest.trailing_zeros() as usize] += p;
            rest &= rest - 1;
        }
    }
    n
}

/// `<sigma_s^dag sigma_t>`; for `s == t` this is `<n_s>`.
pub fn expect_bond<S: QuantumState + ?Sized>(state: &S, s: usize, t: usize) -> C64 {
    let b = state.basis();
    if s == t {
        return C64::new(densities(state)[s], 0.0);
    }
    // <m'|O|m> = 1 for m with t occupied, s empty, m' = m - t + s; Tr(rho O) = sum rho_{m m'}.
    let mut acc = C64::new(0.0, 0.0);
    for (i, &m) in b.states().iter().enumerate() {
        if occupied(m, t) && !occupied(m, s) {
            if let Some(j) = b.index_of(m ^ (1 << t) ^ (1 << s)) {
                acc += state.coherence(i, j);
            }
        }
    }
    acc
}

/// `<sigma_s>`, the photon annihilation expectation; nonzero only for states spanning
/// adjacent photon numbers.
pub fn expect_lowering<S: QuantumState + ?Sized>(state: &S, s: usize) -> C64 {
    let b = state.basis();
    let mut acc = C64::new(0.0, 0.0);
    for (i, &m) in b.states().iter().enumerate() {
        if occupied(m, s) {
            if let Some(j) = b.index_of(m ^ (1 << s)) {
                acc += state.coherence(i, j);
            }
        }
    }
    acc
}

/// `<n_i n_j>` for all site pairs.
pub fn pair_correlations<S: QuantumState + ?Sized>(state: &S) -> DMatrix<f64> {
    let b = state.basis();
    let l = b.lattice().num_sites();
    let mut c = DMatrix::zeros(l, l);
    for (p, &m) in state.populations().iter().zip(b.states()) {
        for i in (0..l).filter(|&i| occupied(m, i)) {
            for j in (0..l).filter(|&j| occupied(m, j)) {
                c[(i, j)] += p;
            }
        }
    }
    c
}

/// The four central sites of a 4x4 lattice.
pub fn default_bulk_sites(lattice: &Lattice) -> Result<Vec<usize>> {
    if lattice.lx() == 4 && lattice.ly() == 4 {
        Ok(vec![lattice.site(1, 1), lattice.site(2, 1), lattice.site(1, 2), lattice.site(2, 2)])
    } else {
        Err(Error::config(format!(
            "bulk sites are only defined by default on 4x4; give an explicit set for {}x{}",
            lattice.lx(),
            lattice.ly()
        )))
    }
}

/// Averaged `g2(d)` keyed by displacement `(dx, dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    pub values: BTreeMap<(i64, i64), f64>,
    pub n_photons: usize,
    pub bulk_sites: Vec<usize>,
}

impl CorrelationMap {
    pub fn get(&self, dx: i64, dy: i64) -> Option<f64> {
        self.values.get(&(dx, dy)).copied()
    }
}

/// `g2(d) = N/(N-1) * mean_i <n_i n_{i+d}> / (<n_i><n_{i+d}>)` over ordered pairs with at
/// least one site in `bulk`; tiny denominators are skipped.
pub fn g2_map<S: QuantumState + ?Sized>(state: &S, bulk: &[usize]) -> Result<CorrelationMap> {
    let n = state.basis().fixed_photon_number().ok_or_else(|| Error::config("g2 needs a fixed photon number"))?;
    g2_map_with_count(state, bulk, n)
}

/// As [`g2_map`] with the photon number supplied, for states spanning several sectors.
pub fn g2_map_with_count<S: QuantumState + ?Sized>(state: &S, bulk: &[usize], n: usize) -> Result<CorrelationMap> {
    let b = state.basis();
    if n < 2 {
        return Err(Error::UndefinedCorrelation(n));
    }
    let lat = b.lattice();
    let dens = densities(state);
    let pairs = pair_correlations(state);
    let prefactor = n as f64 / (n as f64 - 1.0);
    let mut sums: BTreeMap<(i64, i64), (f64, usize)> = BTreeMap::new();
    for i in 0..lat.num_sites() {
        for j in 0..lat.num_sites() {
            if i == j || !(bulk.contains(&i) || bulk.contains(&j)) {
                continue;
            }
            let den = dens[i] * dens[j];
            if den < 1e-12 {
                continue;
            }
            let (xi, yi) = lat.coords(i);
            let (xj, yj) = lat.coords(j);
            let d = (xj as i64 - xi as i64, yj as i64 - yi as i64);
            let e = sums.entry(d).or_insert((0.0, 0));
            e.0 += pairs[(i, j)] / den;
            e.1 += 1;
        }
    }
    let values = sums.into_iter().map(|(d, (s, c))| (d, prefactor * s / c as f64)).collect();
    Ok(CorrelationMap { values, n_photons: n, bulk_sites: bulk.to_vec() })
}

/// `(|d|, mean g2)` grouped by distance rounded to 1e-6, ascending.
pub fn g2_radial(map: &CorrelationMap) -> Vec<(f64, f64)> {
    let mut groups: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for (&(dx, dy), &g) in &map.values {
        let r = ((dx * dx + dy * dy) as f64).sqrt();
        let key = (r * 1e6).round() as i64;
        let e = groups.entry(key).or_insert((0.0, 0));
        e.0 += g;
        e.1 += 1;
    }
    groups.into_iter().map(|(k, (s, c))| (k as f64 * 1e-6, s / c as f64)).collect()
}

/// Mean of the radial curve over distances satisfying `keep`; `None` if no point qualifies.
pub fn g2_class_mean(radial: &[(f64, f64)], keep: impl Fn(f64) -> bool) -> Option<f64> {
    let sel: Vec<f64> = radial.iter().filter(|(r, _)| keep(*r)).map(|(_, g)| *g).collect();
    (!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64)
}

/// Which current operator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurrentForm {
    /// Includes the Peierls phase; satisfies the continuity equation in any gauge.
    #[default]
    Covariant,
    /// `i J <sigma^dag sigma> + h.c.` without the bond phase.
    Literal,
}

/// Bond currents `j(a -> b)` per bond, photons/us, indexed like [`Lattice::bonds`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    lattice: Lattice,
    values: Vec<f64>,
}

impl CurrentField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `j(s -> t)`; antisymmetric, `None` off the bond set.
    pub fn get(&self, s: usize, t: usize) -> Option<f64> {
        let k = self.lattice.bond_index(s, t)?;
        let b = self.lattice.bonds()[k];
        Some(if b.a == s { self.values[k] } else { -self.values[k] })
    }

    /// Net current into each site.
    pub fn divergence(&self) -> Vec<f64> {
        let mut net = vec![0.0; self.lattice.num_sites()];
        for (b, &j) in self.lattice.bonds().iter().zip(&self.values) {
            net[b.a] -= j;
            net[b.b] += j;
        }
        net
    }

    /// Sum of `j(loop[k] -> loop[k+1])` around a closed loop of neighbouring sites.
    pub fn circulation(&self, sites: &[usize]) -> Result<f64> {
        let n = sites.len();
        let mut total = 0.0;
        for k in 0..n {
            let (s, t) = (sites[k], sites[(k + 1) % n]);
            total += self.get(s, t).ok_or_else(|| Error::config(format!("loop step ({s}, {t}) is not a bond")))?;
        }
        Ok(total)
    }

    /// Sum over the lattice's plaquettes of their counterclockwise circulation,
    /// restricted to plaquettes whose corners all lie in `region`.
    pub fn plaquette_circulation(&self, region: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for p in self.lattice.plaquettes() {
            let corners = self.lattice.plaquette_sites(p);
            if corners.iter().all(|c| region.contains(c)) {
                total += self.circulation(&corners)?;
            }
        }
        Ok(total)
    }
}

/// `j(s -> t) = i J_ang e^{-i theta(s->t)} <sigma_s^dag sigma_t> + c.c.` (covariant form).
pub fn current_direct<S: QuantumState + ?Sized>(
    state: &S,
    gauge: &GaugeField,
    couplings: &Couplings,
    form: CurrentForm,
) -> Result<CurrentField> {
    let lat = state.basis().lattice().clone();
    let mut values = Vec::with_capacity(lat.num_bonds());
    for (b, &j) in lat.bonds().iter().zip(couplings.values()) {
        let phase = match form {
            CurrentForm::Covariant => gauge
                .theta(b.a, b.b)
                .ok_or_else(|| Error::config(format!("gauge has no phase on bond ({}, {})", b.a, b.b)))?,
            CurrentForm::Literal => 0.0,
        };
        let x = C64::new(0.0, TAU * j) * C64::from_polar(1.0, -phase) * expect_bond(state, b.a, b.b);
        values.push(2.0 * x.re);
    }
    Ok(CurrentField { lattice: lat, values })
}

/// Settings for the isolation-and-fit current estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationFit {
    pub duration_us: f64,
    pub sample_us: f64,
    pub dt_us: f64,
    /// Largest acceptable rms fit residual, photons.
    pub max_residual: f64,
}

impl Default for IsolationFit {
    fn default() -> Self {
        Self { duration_us: 0.4, sample_us: 0.002, dt_us: DEFAULT_DT_US, max_residual: 1e-3 }
    }
}

/// Estimate of `j(s -> t)` from the density exchange after isolating the bond.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolatedCurrent {
    pub current: f64,
    pub fit: Option<SinusoidFit>,
    pub times_us: Vec<f64>,
    pub target_density: Vec<f64>,
}

/// Decouples every bond touching `s` or `t` except `(s, t)`, evolves, fits
/// `<n_t>(t)` with a sinusoid and returns its initial slope as `j(s -> t)`.
pub fn current_isolated_fit(
    state: &AnyState,
    gauge: &GaugeField,
    couplings: &Couplings,
    potential: &Potential,
    bond: (usize, usize),
    cfg: &IsolationFit,
) -> Result<IsolatedCurrent> {
    let (s, t) = bond;
    let lat = state.as_dyn().basis().lattice().clone();
    let j_st = couplings
        .get(&lat, s, t)
        .ok_or_else(|| Error::config(format!("({s}, {t}) is not a bond")))?;
    let mut iso = couplings.clone();
    for b in lat.bonds() {
        let touches = [b.a, b.b].iter().any(|x| *x == s || *x == t);
        let same = (b.a, b.b) == (s.min(t), s.max(t));
        if touches && !same {
            iso.set(&lat, b.a, b.b, 0.0)?;
        }
    }
    let schedule = DriveSchedule::new_uncapped(
        &lat,
        vec![crate::schedule::Segment::linear(cfg.duration_us, (iso.clone(), iso), (potential.clone(), potential.clone()))],
    )?;
    let mut times = Vec::new();
    let mut target = Vec::new();
    match state {
        AnyState::Pure(psi) => {
            evolve_pure_with(&schedule, gauge, psi, cfg.dt_us, Some(cfg.sample_us), |time, st, _| {
                times.push(time);
                target.push(densities(st)[t]);
            })?;
        }
        AnyState::Mixed(rho) => {
            evolve_lindblad_with(&schedule, gauge, rho, &Dephasing::none(), cfg.dt_us, Some(cfg.sample_us), |time, st, _| {
                times.push(time);
                target.push(densities(st)[t]);
            })?;
        }
    }
    let spread = target.iter().copied().fold(f64::NEG_INFINITY, f64::max) - target.iter().copied().fold(f64::INFINITY, f64::min);
    if j_st == 0.0 || spread < 1e-12 {
        return Ok(IsolatedCurrent { current: 0.0, fit: None, times_us: times, target_density: target });
    }
    let fit = fit_sinusoid(&times, &target)?;
    if fit.residual_rms > cfg.max_residual {
        return Err(Error::FitFailure { residual: fit.residual_rms, threshold: cfg.max_residual });
    }
    Ok(IsolatedCurrent { current: fit.initial_slope(), fit: Some(fit), times_us: times, target_density: target })
}

/// Mean density over `bulk` (defaults to the 4x4 central plaquette).
pub fn bulk_density<S: QuantumState + ?Sized>(state: &S, bulk: Option<&[usize]>) -> Result<f64> {
    let sites = match bulk {
        Some(b) => b.to_vec(),
        None => default_bulk_sites(state.basis().lattice())?,
    };
    if sites.is_empty() {
        return Err(Error::config("empty bulk set"));
    }
    let n = densities(state);
    Ok(sites.iter().map(|&s| n[s]).sum::<f64>() / sites.len() as f64)
}

/// `(N_upper, N_lower)`; rows `y >= ly/2` are upper.
pub fn imbalance<S: QuantumState + ?Sized>(state: &S) -> (f64, f64) {
    let lat = state.basis().lattice();
    let n = densities(state);
    let half = lat.ly() / 2;
    n.iter().enumerate().fold((0.0, 0.0), |(u, l), (s, &v)| {
        if lat.coords(s).1 >= half {
            (u + v, l)
        } else {
            (u, l + v)
        }
    })
}

/// Density-weighted `(<x>, <y>)`, normalized by total photon number.
pub fn centroid<S: QuantumState + ?Sized>(state: &S) -> (f64, f64) {
    let lat = state.basis().lattice();
    let n = densities(state);
    let total: f64 = n.iter().sum();
    if total <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let (mut x, mut y) = (0.0, 0.0);
    for (s, v) in n.iter().enumerate() {
        let (cx, cy) = lat.coords(s);
        x += cx as f64 * v;
        y += cy as f64 * v;
    }
    (x / total, y / total)
}

/// `|<a|b>|` for pure states, `sqrt(<psi|rho|psi>)` for pure/mixed pairs and the
/// Uhlmann root fidelity `Tr sqrt(sqrt(rho) sigma sqrt(rho))` for two mixed states.
pub fn state_fidelity(a: &AnyState, b: &AnyState) -> Result<f64> {
    let f = match (a, b) {
        (AnyState::Pure(x), AnyState::Pure(y)) => x.inner(y)?.norm(),
        (AnyState::Pure(x), AnyState::Mixed(r)) | (AnyState::Mixed(r), AnyState::Pure(x)) => {
            r.expectation_projector(x)?.max(0.0).sqrt()
        }
        (AnyState::Mixed(r), AnyState::Mixed(s)) => uhlmann(r, s)?,
    };
    Ok(f.clamp(0.0, 1.0))
}

fn uhlmann(r: &DensityMatrix, s: &DensityMatrix) -> Result<f64> {
    same_sector(r.basis(), s.basis())?;
    let sr = psd_sqrt(r.matrix());
    let inner = hermitian_part(&(&sr * s.matrix() * &sr));
    Ok(inner.symmetric_eigenvalues().iter().map(|l| l.max(0.0).sqrt()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_basis, enumerate_up_to};
    use crate::state::StateVector;
    use std::sync::Arc;

    fn lat44() -> Lattice {
        Lattice::new(4, 4).unwrap()
    }

    #[test]
    fn localized_pair_g2() {
        let l = lat44();
        let b = Arc::new(enumerate_basis(&l, 2).unwrap());
        let psi = StateVector::fock(b, &[5, 10]).unwrap();
        let n = densities(&psi);
        assert_eq!(n.iter().filter(|v| **v == 1.0).count(), 2);
        let m = g2_map(&psi, &default_bulk_sites(&l).unwrap()).unwrap();
        // only the two occupied sites have nonzero density
        assert_eq!(m.values.len(), 2);
        assert_eq!(m.get(1, 1), Some(2.0));
        assert_eq!(m.get(-1, -1), Some(2.0));
    }

    #[test]
    fn g2_needs_two_photons() {
        let l = lat44();
        let psi = StateVector::fock(Arc::new(enumerate_basis(&l, 1).unwrap()), &[5]).unwrap();
        assert!(matches!(g2_map(&psi, &[5]), Err(Error::UndefinedCorrelation(1))));
    }

    #[test]
    fn radial_grouping() {
        let mut values = BTreeMap::new();
        values.insert((1, 0), 0.4);
        values.insert((0, 1), 0.8);
        values.insert((1, 1), 1.5);
        let m = CorrelationMap { values, n_photons: 2, bulk_sites: vec![] };
        let r = g2_radial(&m);
        assert_eq!(r.len(), 2);
        assert!((r[0].0 - 1.0).abs() < 1e-9 && (r[0].1 - 0.6).abs() < 1e-12);
        assert!((r[1].0 - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn fock_state_has_no_current() {
        let l = Lattice::new(2, 1).unwrap();
        let psi = StateVector::fock(Arc::new(enumerate_basis(&l, 1).unwrap()), &[0]).unwrap();
        let j = current_direct(&psi, &GaugeField::zero(&l), &Couplings::uniform(&l, 5.0), CurrentForm::Covariant).unwrap();
        assert_eq!(j.values(), &[0.0]);
    }

    #[test]
    fn lowering_of_vacuum_superposition() {
        let l = Lattice::new(2, 1).unwrap();
        let b = Arc::new(enumerate_up_to(&l, 1).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![C64::new(0.0, 0.0); b.dim()];
        amps[b.index_of(0).unwrap()] = C64::new(h, 0.0);
        amps[b.index_of(1).unwrap()] = C64::new(h, 0.0);
        let psi = StateVector::new(b, amps).unwrap();
        assert!((expect_lowering(&psi, 0) - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(expect_lowering(&psi, 1), C64::new(0.0, 0.0));
    }

    #[test]
    fn bulk_imbalance_centroid() {
        let l = lat44();
        let psi = StateVector::fock(Arc::new(enumerate_basis(&l, 2).unwrap()), &[5, 14]).unwrap();
        assert_eq!(bulk_density(&psi, None).unwrap(), 0.25);
        assert_eq!(imbalance(&psi), (1.0, 1.0));
        let (x, y) = centroid(&psi);
        assert_eq!((x, y), (1.5, 2.0));
        assert!(bulk_density(&StateVector::fock(Arc::new(enumerate_basis(&Lattice::new(3, 3).unwrap(), 1).unwrap()), &[4]).unwrap(), None).is_err());
    }

    #[test]
    fn fidelities() {
        let l = Lattice::new(2, 2).unwrap();
        let b = Arc::new(enumerate_basis(&l, 1).unwrap());
        let a = StateVector::fock(b.clone(), &[0]).unwrap();
        let c = StateVector::fock(b, &[1]).unwrap();
        let ra = DensityMatrix::from_pure(&a);
        let pa = AnyState::from(a.clone());
        assert!((state_fidelity(&pa, &pa).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(state_fidelity(&pa, &AnyState::from(c.clone())).unwrap(), 0.0);
        assert!((state_fidelity(&AnyState::from(ra.clone()), &pa).unwrap() - 1.0).abs() < 1e-12);
        assert!((state_fidelity(&AnyState::from(ra.clone()), &AnyState::from(ra)).unwrap() - 1.0).abs() < 1e-6);
        assert!(state_fidelity(&AnyState::from(DensityMatrix::from_pure(&c)), &pa).unwrap() < 1e-12);
    }
}

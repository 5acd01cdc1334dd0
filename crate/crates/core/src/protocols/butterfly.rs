//! Single-photon spectroscopy across flux.
//!
//! Each site is prepared in `(|0> + |1>)/sqrt2` with the rest empty, so the state spans
//! the vacuum and one-photon sectors. `chi_i(t) = <sx_i> + i<sy_i> = 2<sigma_i>`
//! equals `<i|e^{-iHt}|i>` and its transform peaks at the single-photon energies.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::{enumerate_basis, enumerate_up_to, mask_of};
use crate::error::{Error, Result};
use crate::evolve::evolve_pure_with;
use crate::hamiltonian::build_hamiltonian;
use crate::lattice::{landau_gauge, Couplings, Lattice, Potential};
use crate::observables::expect_lowering;
use crate::record::ExperimentRecord;
use crate::schedule::{DriveSchedule, Segment};
use crate::spectral::{find_peaks, resolution_mhz, windowed_spectrum};
use crate::spectrum::diagonalize;
use crate::state::StateVector;
use crate::{C64, DEFAULT_DT_US, J_MAX_MHZ};

#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyConfig {
    pub lx: usize,
    pub ly: usize,
    pub j_mhz: f64,
    pub t_evolve_us: f64,
    pub dt_sample_us: f64,
    pub dt_us: f64,
}

impl Default for ButterflyConfig {
    fn default() -> Self {
        Self { lx: 4, ly: 4, j_mhz: J_MAX_MHZ, t_evolve_us: 2.0, dt_sample_us: 0.002, dt_us: DEFAULT_DT_US }
    }
}

#[derive(Debug, Clone)]
pub struct ButterflyMap {
    pub phis: Vec<f64>,
    /// Ascending, MHz.
    pub freqs_mhz: Vec<f64>,
    /// Site-averaged `|transform|`, one row per flux.
    pub spectra: Vec<Vec<f64>>,
    /// Local maxima at or above half the row maximum, MHz.
    pub peaks_mhz: Vec<Vec<f64>>,
    /// Exact one-photon eigenfrequencies, MHz.
    pub exact_mhz: Vec<Vec<f64>>,
    pub resolution_mhz: f64,
}

impl ButterflyMap {
    /// Distance from each peak to the nearest exact eigenfrequency, per flux.
    pub fn peak_errors(&self) -> Vec<Vec<f64>> {
        self.peaks_mhz
            .iter()
            .zip(&self.exact_mhz)
            .map(|(peaks, exact)| {
                peaks
                    .iter()
                    .map(|p| exact.iter().map(|e| (p - e).abs()).fold(f64::INFINITY, f64::min))
                    .collect()
            })
            .collect()
    }

    /// Long-format record: one row per (flux, frequency).
    pub fn to_record(&self) -> Result<ExperimentRecord> {
        let mut r = ExperimentRecord::with_columns("butterfly", &["phi_quanta", "freq_mhz", "amplitude_ratio"])?;
        for (phi, row) in self.phis.iter().zip(&self.spectra) {
            for (f, a) in self.freqs_mhz.iter().zip(row) {
                r.push_row(&[*phi, *f, *a])?;
            }
        }
        r.set_meta("resolution_mhz", self.resolution_mhz);
        Ok(r)
    }
}

fn check_sampling(cfg: &ButterflyConfig, lattice: &Lattice) -> Result<()> {
    if !(cfg.t_evolve_us > 0.0 && cfg.dt_sample_us > 0.0) {
        return Err(Error::config("evolution time and sample interval must be positive"));
    }
    // Single-photon band edge bound: coordination number times J.
    let edge = 4.0 * cfg.j_mhz.abs().max(1e-12) * if lattice.lx() > 1 && lattice.ly() > 1 { 1.0 } else { 0.5 };
    let nyquist = 0.5 / cfg.dt_sample_us;
    if nyquist <= edge {
        return Err(Error::config(format!(
            "sample interval {} us gives Nyquist {nyquist:.1} MHz below the band edge {edge:.1} MHz",
            cfg.dt_sample_us
        )));
    }
    let n = (cfg.t_evolve_us / cfg.dt_sample_us).round() as usize + 1;
    let res = resolution_mhz(n, cfg.dt_sample_us);
    if 2.0 * edge / res < 2.0 {
        return Err(Error::config(format!(
            "evolution time {} us resolves {res:.2} MHz, fewer than 2 bins across the {:.1} MHz band",
            cfg.t_evolve_us,
            2.0 * edge
        )));
    }
    Ok(())
}

/// `chi_i(t)` sampled on `0, dt_sample, .., t_evolve` for every site.
pub fn site_signals(cfg: &ButterflyConfig, phi: f64) -> Result<Vec<Vec<C64>>> {
    let lat = Lattice::new(cfg.lx, cfg.ly)?;
    let basis = Arc::new(enumerate_up_to(&lat, 1)?);
    let gauge = landau_gauge(&lat, phi);
    let j = Couplings::uniform(&lat, cfg.j_mhz);
    let v = Potential::flat(&lat);
    let sched = DriveSchedule::new_uncapped(&lat, vec![Segment::linear(cfg.t_evolve_us, (j.clone(), j), (v.clone(), v))])?;
    let vac = basis.index_of(0).expect("vacuum present");
    (0..lat.num_sites())
        .map(|site| {
            let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
            amps[vac] = C64::new(FRAC_1_SQRT_2, 0.0);
            amps[basis.index_of(mask_of(&[site])).expect("one-photon state")] = C64::new(FRAC_1_SQRT_2, 0.0);
            let psi = StateVector::new(basis.clone(), amps)?;
            let mut chi = Vec::new();
            evolve_pure_with(&sched, &gauge, &psi, cfg.dt_us, Some(cfg.dt_sample_us), |_, s, _| {
                chi.push(2.0 * expect_lowering(s, site));
            })?;
            Ok(chi)
        })
        .collect()
}

/// Exact one-photon eigenfrequencies at flux `phi`, MHz.
pub fn exact_frequencies(lx: usize, ly: usize, j_mhz: f64, phi: f64) -> Result<Vec<f64>> {
    let lat = Lattice::new(lx, ly)?;
    let b = enumerate_basis(&lat, 1)?;
    let h = build_hamiltonian(&lat, &landau_gauge(&lat, phi), &Couplings::uniform(&lat, j_mhz), &Potential::flat(&lat), &b)?;
    Ok(diagonalize(&h, false)?.eigenvalues.iter().map(|e| e / TAU).collect())
}

pub fn run_butterfly(cfg: &ButterflyConfig, phis: &[f64]) -> Result<ButterflyMap> {
    let lat = Lattice::new(cfg.lx, cfg.ly)?;
    check_sampling(cfg, &lat)?;
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = phis
        .par_iter()
        .map(|&phi| {
            let signals = site_signals(cfg, phi)?;
            let mut freqs = Vec::new();
            let mut mean: Vec<f64> = Vec::new();
            for chi in &signals {
                let (f, m) = windowed_spectrum(chi, cfg.dt_sample_us);
                if mean.is_empty() {
                    mean = vec![0.0; m.len()];
                    freqs = f;
                }
                mean.iter_mut().zip(&m).for_each(|(a, b)| *a += b / signals.len() as f64);
            }
            let peaks = find_peaks(&freqs, &mean, 0.5);
            let exact = exact_frequencies(cfg.lx, cfg.ly, cfg.j_mhz, phi)?;
            Ok((freqs, mean, peaks, exact))
        })
        .collect::<Result<_>>()?;
    let n_samples = (cfg.t_evolve_us / cfg.dt_sample_us).round() as usize + 1;
    let mut map = ButterflyMap {
        phis: phis.to_vec(),
        freqs_mhz: rows.first().map(|r| r.0.clone()).unwrap_or_default(),
        spectra: Vec::new(),
        peaks_mhz: Vec::new(),
        exact_mhz: Vec::new(),
        resolution_mhz: resolution_mhz(n_samples, cfg.dt_sample_us),
    };
    for (_, s, p, e) in rows {
        map.spectra.push(s);
        map.peaks_mhz.push(p);
        map.exact_mhz.push(e);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_sampling() {
        let cfg = ButterflyConfig { dt_sample_us: 0.05, ..Default::default() };
        assert!(run_butterfly(&cfg, &[0.0]).is_err());
        let cfg = ButterflyConfig { t_evolve_us: 0.01, ..Default::default() };
        assert!(run_butterfly(&cfg, &[0.0]).is_err());
    }

    #[test]
    fn chi_starts_at_one() {
        let cfg = ButterflyConfig { lx: 2, ly: 2, t_evolve_us: 0.02, ..Default::default() };
        let s = site_signals(&cfg, 0.1).unwrap();
        assert_eq!(s.len(), 4);
        for chi in s {
            assert!((chi[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }
}

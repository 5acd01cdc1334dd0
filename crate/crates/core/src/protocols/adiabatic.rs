//! Gap-adaptive two-stage adiabatic preparation and reversal fidelity.
//!
//! Stage 1 ramps every coupling from 0 to `J` while the initially occupied sites sit
//! in deep traps. Stage 2 keeps `J`, releases the traps and, optionally, ramps boundary
//! defects to `-V/2` (dips) and `+V/2` (bumps). Within each stage the path parameter
//! follows `ds/dt = c * Delta(s)^2` with the gap clamped from below.

use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use super::{sites_of, Model};
use crate::basis::{mask_of, SectorBasis};
use crate::error::{Error, Result};
use crate::evolve::{evolve_lindblad_with, evolve_pure_with, Dephasing};
use crate::hamiltonian::HamiltonianTemplate;
use crate::lattice::{Couplings, Lattice, Potential};
use crate::observables;
use crate::record::ExperimentRecord;
use crate::schedule::{DriveSchedule, Reparam, Segment};
use crate::spectrum::diagonalize;
use crate::state::{AnyState, DensityMatrix, QuantumState, StateVector};
use crate::{DEFAULT_DT_US, J_MAX_MHZ};

/// Boundary traps ramped in during stage 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Defects {
    /// Sites pulled down to `-V/2`.
    pub dips: Vec<usize>,
    /// Sites pushed up to `+V/2`.
    pub bumps: Vec<usize>,
    /// Full depth `V`, MHz.
    pub depth_mhz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparationConfig {
    pub lx: usize,
    pub ly: usize,
    pub n_photons: usize,
    pub phi: f64,
    pub duration_us: f64,
    pub initial_sites: Vec<usize>,
    pub j_mhz: f64,
    /// Trap depth on the initial sites, MHz (negative).
    pub disorder_mhz: f64,
    /// Share of the total duration spent in stage 1.
    pub stage1_fraction: f64,
    /// Lower clamp on the gap in the rate law, MHz.
    pub gap_floor_mhz: f64,
    pub grid_points: usize,
    pub defects: Option<Defects>,
    pub dt_us: f64,
    /// Density snapshot interval.
    pub record_every_us: f64,
}

impl PreparationConfig {
    /// 4x4 defaults for `n_photons` photons at flux `phi`.
    pub fn new(n_photons: usize, phi: f64) -> Result<Self> {
        let lattice = Lattice::new(4, 4)?;
        Ok(Self {
            lx: 4,
            ly: 4,
            n_photons,
            phi,
            duration_us: if n_photons >= 3 { 1.8 } else { 1.0 },
            initial_sites: default_initial_sites(&lattice, n_photons)?,
            j_mhz: J_MAX_MHZ,
            disorder_mhz: -15.0,
            stage1_fraction: 0.2,
            gap_floor_mhz: 0.5,
            grid_points: 101,
            defects: None,
            dt_us: DEFAULT_DT_US,
            record_every_us: 0.01,
        })
    }

    pub fn with_duration(mut self, t_us: f64) -> Self {
        self.duration_us = t_us;
        self
    }

    pub fn with_defects(mut self, d: Option<Defects>) -> Self {
        self.defects = d;
        self
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.lx, self.ly)
    }

    pub fn initial_mask(&self) -> u32 {
        mask_of(&self.initial_sites)
    }

    fn validate(&self, lattice: &Lattice) -> Result<()> {
        if !(self.duration_us > 0.0) {
            return Err(Error::config("preparation duration must be positive"));
        }
        if !(self.stage1_fraction > 0.0 && self.stage1_fraction < 1.0) {
            return Err(Error::config("stage-1 fraction must lie strictly between 0 and 1"));
        }
        if self.grid_points < 2 {
            return Err(Error::config("gap grid needs at least two points"));
        }
        if !(self.gap_floor_mhz > 0.0) {
            return Err(Error::config("gap floor must be positive"));
        }
        let mut sorted = self.initial_sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.n_photons || sorted.iter().any(|&s| s >= lattice.num_sites()) {
            return Err(Error::config(format!(
                "need {} distinct on-lattice initial sites, got {:?}",
                self.n_photons, self.initial_sites
            )));
        }
        Ok(())
    }
}

/// Localized starting sites: `(1,1),(2,2)` for two photons, plus `(1,2)` for three.
pub fn default_initial_sites(lattice: &Lattice, n: usize) -> Result<Vec<usize>> {
    let coords: &[(usize, usize)] = match n {
        1 => &[(1, 1)],
        2 => &[(1, 1), (2, 2)],
        3 => &[(1, 1), (2, 2), (1, 2)],
        _ => return Err(Error::config(format!("no default initial sites for N = {n}; list them explicitly"))),
    };
    sites_of(lattice, coords)
}

/// The constructed schedule plus the data it was derived from.
#[derive(Debug, Clone)]
pub struct AdiabaticPath {
    pub schedule: DriveSchedule,
    pub stage_durations_us: [f64; 2],
    /// Raw gaps `E1 - E0` on the uniform grid, MHz.
    pub gaps_mhz: [Vec<f64>; 2],
    /// `c` in `ds/dt = c * Delta^2`, with `Delta` in rad/us.
    pub rate_constants: [f64; 2],
}

fn stage_endpoints(cfg: &PreparationConfig, lattice: &Lattice) -> Result<[(Couplings, Potential); 3]> {
    let traps = Potential::from_sites(lattice, cfg.initial_sites.iter().map(|&s| (s, cfg.disorder_mhz)))?;
    let mut released = Potential::flat(lattice);
    if let Some(d) = &cfg.defects {
        for &s in &d.dips {
            released.add(s, -0.5 * d.depth_mhz)?;
        }
        for &s in &d.bumps {
            released.add(s, 0.5 * d.depth_mhz)?;
        }
    }
    let j = Couplings::uniform(lattice, cfg.j_mhz);
    Ok([(Couplings::zero(lattice), traps.clone()), (j.clone(), traps), (j, released)])
}

/// Inverts `t(s) ~ int_0^s du / Delta(u)^2` on the grid (trapezoid rule).
fn reparam_from_gaps(gaps_rad: &[f64], floor_rad: f64) -> Result<(Reparam, f64)> {
    let n = gaps_rad.len();
    let du = 1.0 / (n - 1) as f64;
    let w: Vec<f64> = gaps_rad.iter().map(|g| g.max(floor_rad).powi(-2)).collect();
    let mut cum = vec![0.0; n];
    for k in 1..n {
        cum[k] = cum[k - 1] + 0.5 * (w[k] + w[k - 1]) * du;
    }
    let total = cum[n - 1];
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::config("gap table is degenerate"));
    }
    let tau: Vec<f64> = cum.iter().map(|c| c / total).collect();
    let s: Vec<f64> = (0..n).map(|k| k as f64 * du).collect();
    let mut tau = tau;
    let mut s = s;
    tau[n - 1] = 1.0;
    s[n - 1] = 1.0;
    Ok((Reparam::new(tau, s)?, total))
}

fn gap_table(tpl: &HamiltonianTemplate, from: &(Couplings, Potential), to: &(Couplings, Potential), n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|k| {
            let u = k as f64 / (n - 1) as f64;
            let h = tpl.instant(&from.0.lerp(&to.0, u), &from.1.lerp(&to.1, u)).to_sparse();
            Ok(diagonalize(&h, false)?.gap())
        })
        .collect()
}

pub fn make_adiabatic_schedule(cfg: &PreparationConfig) -> Result<AdiabaticPath> {
    let lattice = cfg.lattice()?;
    cfg.validate(&lattice)?;
    let model = Model::new(cfg.lx, cfg.ly, cfg.n_photons, cfg.j_mhz)?;
    let tpl = model.template(cfg.phi)?;
    let [p0, p1, p2] = stage_endpoints(cfg, &lattice)?;
    let floor = TAU * cfg.gap_floor_mhz;

    let g1 = gap_table(&tpl, &p0, &p1, cfg.grid_points)?;
    let g2 = gap_table(&tpl, &p1, &p2, cfg.grid_points)?;
    let (r1, i1) = reparam_from_gaps(&g1, floor)?;
    let (r2, i2) = reparam_from_gaps(&g2, floor)?;
    let t1 = cfg.duration_us * cfg.stage1_fraction;
    let t2 = cfg.duration_us - t1;

    let s1 = Segment::linear(t1, (p0.0, p1.0.clone()), (p0.1, p1.1.clone())).with_reparam(r1);
    let s2 = Segment::linear(t2, (p1.0, p2.0), (p1.1, p2.1)).with_reparam(r2);
    let schedule = if cfg.j_mhz > J_MAX_MHZ {
        DriveSchedule::new_uncapped(&lattice, vec![s1, s2])?
    } else {
        DriveSchedule::new(&lattice, vec![s1, s2])?
    };
    Ok(AdiabaticPath {
        schedule,
        stage_durations_us: [t1, t2],
        gaps_mhz: [g1.iter().map(|g| g / TAU).collect(), g2.iter().map(|g| g / TAU).collect()],
        rate_constants: [i1 / t1, i2 / t2],
    })
}

/// Result of evolving a state along a schedule.
#[derive(Debug, Clone)]
pub struct Preparation {
    pub final_state: AnyState,
    pub record: ExperimentRecord,
    pub path: AdiabaticPath,
}

fn initial_state(cfg: &PreparationConfig, basis: Arc<SectorBasis>) -> Result<StateVector> {
    StateVector::fock(basis, &cfg.initial_sites)
}

/// Evolves `start` along `schedule`, recording densities; noise switches to the
/// Lindblad integrator.
fn run_schedule(
    name: &str,
    schedule: &DriveSchedule,
    cfg: &PreparationConfig,
    model: &Model,
    start: &StateVector,
    noise: Option<&Dephasing>,
) -> Result<(AnyState, ExperimentRecord)> {
    let sites = model.lattice.num_sites();
    let mut cols = vec!["t_us".to_string()];
    cols.extend((0..sites).map(|s| format!("n{s}_photons")));
    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut rec = ExperimentRecord::with_columns(name, &refs)?;
    let mut push = |t: f64, st: &dyn QuantumState| {
        let mut row = vec![t];
        row.extend(observables::densities(st));
        rec.push_row(&row).expect("fixed width");
    };
    let gauge = model.gauge(cfg.phi);
    let every = Some(cfg.record_every_us);
    let fin = match noise {
        None => AnyState::Pure(evolve_pure_with(schedule, &gauge, start, cfg.dt_us, every, |t, s, _| push(t, s))?),
        Some(d) => {
            let rho0 = DensityMatrix::from_pure(start);
            AnyState::Mixed(evolve_lindblad_with(schedule, &gauge, &rho0, d, cfg.dt_us, every, |t, s, _| push(t, s))?)
        }
    };
    Ok((fin, rec))
}

fn describe(rec: &mut ExperimentRecord, cfg: &PreparationConfig, path: &AdiabaticPath, noise: Option<&Dephasing>) {
    rec.set_meta("n_photons", cfg.n_photons);
    rec.set_meta("phi", cfg.phi);
    rec.set_meta("duration_us", cfg.duration_us);
    rec.set_meta("initial_sites", json!(cfg.initial_sites));
    rec.set_meta("j_mhz", cfg.j_mhz);
    rec.set_meta("disorder_mhz", cfg.disorder_mhz);
    rec.set_meta("stage_durations_us", json!(path.stage_durations_us));
    rec.set_meta("rate_constants", json!(path.rate_constants));
    rec.set_meta("gap_floor_mhz", cfg.gap_floor_mhz);
    rec.set_meta("min_gap_mhz", json!([min(&path.gaps_mhz[0]), min(&path.gaps_mhz[1])]));
    rec.set_meta("dt_us", cfg.dt_us);
    rec.set_meta("t2_us", noise.map_or(serde_json::Value::Null, |d| json!(d.t2_us)));
    if let Some(d) = &cfg.defects {
        rec.set_meta("defects", json!({"dips": d.dips, "bumps": d.bumps, "depth_mhz": d.depth_mhz}));
    }
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Adiabatic preparation from the localized Fock state.
pub fn run_preparation(cfg: &PreparationConfig, noise: Option<&Dephasing>) -> Result<Preparation> {
    let path = make_adiabatic_schedule(cfg)?;
    let model = Model::new(cfg.lx, cfg.ly, cfg.n_photons, cfg.j_mhz)?;
    let psi0 = initial_state(cfg, model.basis.clone())?;
    let (final_state, mut record) = run_schedule("prepare", &path.schedule, cfg, &model, &psi0, noise)?;
    describe(&mut record, cfg, &path, noise);
    Ok(Preparation { final_state, record, path })
}

#[derive(Debug, Clone)]
pub struct Reversal {
    /// `sqrt` of the return probability to the initial bitmask.
    pub fidelity: f64,
    pub forward: Preparation,
    pub returned: AnyState,
}

/// Forward preparation followed by the time-mirrored schedule.
pub fn run_reversal_fidelity(cfg: &PreparationConfig, noise: Option<&Dephasing>) -> Result<Reversal> {
    let forward = run_preparation(cfg, noise)?;
    let model = Model::new(cfg.lx, cfg.ly, cfg.n_photons, cfg.j_mhz)?;
    let back = forward.path.schedule.reversed();
    let gauge = model.gauge(cfg.phi);
    let returned = match &forward.final_state {
        AnyState::Pure(psi) => AnyState::Pure(evolve_pure_with(&back, &gauge, psi, cfg.dt_us, None, |_, _, _| {})?),
        AnyState::Mixed(rho) => {
            let d = noise.cloned().unwrap_or_else(Dephasing::none);
            AnyState::Mixed(evolve_lindblad_with(&back, &gauge, rho, &d, cfg.dt_us, None, |_, _, _| {})?)
        }
    };
    let idx = model
        .basis
        .index_of(cfg.initial_mask())
        .ok_or_else(|| Error::config("initial sites outside the sector"))?;
    let p = returned.as_dyn().populations()[idx];
    Ok(Reversal { fidelity: p.max(0.0).sqrt(), forward, returned })
}

/// Reversal fidelity over a flux grid, in grid order.
pub fn fidelity_sweep(base: &PreparationConfig, phis: &[f64], noise: Option<&Dephasing>) -> Result<Vec<f64>> {
    phis.par_iter()
        .map(|&phi| {
            let cfg = PreparationConfig { phi, ..base.clone() };
            run_reversal_fidelity(&cfg, noise).map(|r| r.fidelity)
        })
        .collect()
}

/// Interior grid points lower than both neighbours.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] < values[k - 1] && values[k] <= values[k + 1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reparam_is_monotone_and_spans() {
        let gaps = [10.0, 5.0, 1.0, 5.0, 10.0];
        let (r, total) = reparam_from_gaps(&gaps, TAU * 0.5).unwrap();
        assert!(total > 0.0);
        let (tau, s) = r.knots();
        assert_eq!((tau[0], s[0]), (0.0, 0.0));
        assert_eq!((tau[4], s[4]), (1.0, 1.0));
        // the small-gap interval takes the largest share of time
        let shares: Vec<f64> = tau.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(shares[1] > shares[0] && shares[2] > shares[3]);
    }

    #[test]
    fn minima() {
        assert_eq!(local_minima(&[3.0, 1.0, 2.0, 0.5, 4.0]), vec![1, 3]);
        assert!(local_minima(&[1.0, 2.0]).is_empty());
    }

    #[test]
    fn default_sites() {
        let l = Lattice::new(4, 4).unwrap();
        assert_eq!(default_initial_sites(&l, 2).unwrap(), vec![5, 10]);
        assert_eq!(default_initial_sites(&l, 3).unwrap(), vec![5, 10, 9]);
        assert!(default_initial_sites(&l, 5).is_err());
    }
}

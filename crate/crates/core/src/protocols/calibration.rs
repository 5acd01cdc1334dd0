//! Few-site calibration experiments: Rabi chevron, four-site loop, Lorentz deflection.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;

use super::{sites_of, Model};
use crate::basis::{enumerate_basis, mask_of};
use crate::error::Result;
use crate::evolve::evolve_pure_with;
use crate::lattice::{landau_gauge, Couplings, Lattice, Potential};
use crate::observables::{centroid, densities};
use crate::record::ExperimentRecord;
use crate::schedule::DriveSchedule;
use crate::state::{QuantumState, StateVector};
use crate::{C64, DEFAULT_DT_US};

/// Two-site chevron in long format: one row per (detuning, time).
#[derive(Debug, Clone)]
pub struct Chevron {
    pub record: ExperimentRecord,
    /// Largest transferred population per detuning.
    pub amplitudes: Vec<f64>,
}

/// Photon starts on site 0 of a 1x2 pair; detuning `delta` enters as `+delta/2`,
/// `-delta/2` on the two sites.
pub fn run_two_site_rabi(j_mhz: f64, detunings_mhz: &[f64], duration_us: f64, sample_us: f64) -> Result<Chevron> {
    let lat = Lattice::new(2, 1)?;
    let basis = Arc::new(enumerate_basis(&lat, 1)?);
    let gauge = landau_gauge(&lat, 0.0);
    let rows: Vec<Vec<(f64, f64)>> = detunings_mhz
        .par_iter()
        .map(|&delta| {
            let v = Potential::from_values(vec![0.5 * delta, -0.5 * delta])?;
            let sched = DriveSchedule::new_uncapped(
                &lat,
                vec![crate::schedule::Segment::linear(
                    duration_us,
                    (Couplings::uniform(&lat, j_mhz), Couplings::uniform(&lat, j_mhz)),
                    (v.clone(), v),
                )],
            )?;
            let psi = StateVector::fock(basis.clone(), &[0])?;
            let mut out = Vec::new();
            evolve_pure_with(&sched, &gauge, &psi, rabi_dt(j_mhz, delta), Some(sample_us), |t, s, _| {
                out.push((t, densities(s)[1]));
            })?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut record = ExperimentRecord::with_columns("rabi", &["detuning_mhz", "t_us", "transfer_photons"])?;
    let mut amplitudes = Vec::with_capacity(rows.len());
    for (&delta, series) in detunings_mhz.iter().zip(&rows) {
        amplitudes.push(series.iter().map(|p| p.1).fold(0.0, f64::max));
        for &(t, p) in series {
            record.push_row(&[delta, t, p])?;
        }
    }
    record.set_meta("j_mhz", j_mhz);
    record.set_meta("duration_us", duration_us);
    record.set_meta("sample_us", sample_us);
    Ok(Chevron { record, amplitudes })
}

/// Default step, shrunk when a large detuning would violate the step bound.
fn rabi_dt(j_mhz: f64, delta_mhz: f64) -> f64 {
    let norm_mhz = j_mhz.abs() + 0.5 * delta_mhz.abs();
    DEFAULT_DT_US.min(0.05 / norm_mhz.max(1e-12))
}

/// Analytic peak transfer `(2J)^2 / ((2J)^2 + delta^2)`.
pub fn rabi_amplitude(j_mhz: f64, delta_mhz: f64) -> f64 {
    let w = (2.0 * j_mhz).powi(2);
    w / (w + delta_mhz * delta_mhz)
}

/// Evolution time `pi / (2 |J_ang|)` of the loop experiment, us.
pub fn ab_loop_time(j_mhz: f64) -> f64 {
    PI / (2.0 * (TAU * j_mhz).abs())
}

/// Site populations of a single photon started at corner 0 of a 2x2 loop after
/// `ab_loop_time`, one row per flux.
pub fn run_ab_loop(j_mhz: f64, phis: &[f64]) -> Result<ExperimentRecord> {
    let lat = Lattice::new(2, 2)?;
    let basis = Arc::new(enumerate_basis(&lat, 1)?);
    let t = ab_loop_time(j_mhz);
    let pops: Vec<Vec<f64>> = phis
        .par_iter()
        .map(|&phi| {
            let sched = DriveSchedule::new_uncapped(
                &lat,
                vec![crate::schedule::Segment::linear(
                    t,
                    (Couplings::uniform(&lat, j_mhz), Couplings::uniform(&lat, j_mhz)),
                    (Potential::flat(&lat), Potential::flat(&lat)),
                )],
            )?;
            let psi = StateVector::fock(basis.clone(), &[0])?;
            let fin = evolve_pure_with(&sched, &landau_gauge(&lat, phi), &psi, DEFAULT_DT_US / 4.0, None, |_, _, _| {})?;
            Ok(densities(&fin))
        })
        .collect::<Result<_>>()?;
    let mut record = ExperimentRecord::with_columns("ab_loop", &["phi_quanta", "p0_photons", "p1_photons", "p2_photons", "p3_photons"])?;
    for (&phi, p) in phis.iter().zip(&pops) {
        record.push_row(&[phi, p[0], p[1], p[2], p[3]])?;
    }
    record.set_meta("j_mhz", j_mhz);
    record.set_meta("t_us", t);
    Ok(record)
}

/// Centroid trajectory of one photon launched in the equal-phase superposition of the
/// two bottom-centre sites of a 4x4 lattice.
pub fn run_deflection(j_mhz: f64, phi: f64, duration_us: f64, sample_us: f64) -> Result<ExperimentRecord> {
    let model = Model::new(4, 4, 1, j_mhz)?;
    let lat = &model.lattice;
    let start = sites_of(lat, &[(1, 0), (2, 0)])?;
    let mut amps = vec![C64::new(0.0, 0.0); model.basis.dim()];
    for s in &start {
        let i = model.basis.index_of(mask_of(&[*s])).expect("single-photon sector");
        amps[i] = C64::new(FRAC_1_SQRT_2, 0.0);
    }
    let psi = StateVector::new(model.basis.clone(), amps)?;
    let sched = DriveSchedule::new_uncapped(
        lat,
        vec![crate::schedule::Segment::linear(
            duration_us,
            (model.couplings(), model.couplings()),
            (Potential::flat(lat), Potential::flat(lat)),
        )],
    )?;
    let mut record = ExperimentRecord::with_columns("deflect", &["t_us", "x_index", "y_index"])?;
    evolve_pure_with(&sched, &model.gauge(phi), &psi, DEFAULT_DT_US, Some(sample_us), |t, s: &StateVector, _| {
        let (x, y) = centroid(s as &dyn QuantumState);
        record.push_row(&[t, x, y]).expect("fixed width");
    })?;
    record.set_meta("j_mhz", j_mhz);
    record.set_meta("phi", phi);
    record.set_meta("duration_us", duration_us);
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_time() {
        assert!((ab_loop_time(5.0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn amplitude_formula() {
        assert_eq!(rabi_amplitude(5.0, 0.0), 1.0);
        assert!((rabi_amplitude(5.0, 10.0) - 0.5).abs() < 1e-15);
    }
}

//! Many-body gap over flux and trap depth.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::adiabatic::{default_initial_sites, local_minima};
use super::Model;
use crate::error::Result;
use crate::lattice::Potential;
use crate::record::ExperimentRecord;

#[derive(Debug, Clone)]
pub struct GapMap {
    pub phis: Vec<f64>,
    /// Trap depth applied to the initial sites, MHz.
    pub disorders_mhz: Vec<f64>,
    /// `gaps_mhz[d][p]` for disorder `d`, flux `p`.
    pub gaps_mhz: Vec<Vec<f64>>,
}

impl GapMap {
    /// Flux of the smallest gap for each disorder row.
    pub fn min_gap_locus(&self) -> Vec<f64> {
        self.gaps_mhz
            .iter()
            .map(|row| {
                let k = row
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map_or(0, |(k, _)| k);
                self.phis[k]
            })
            .collect()
    }

    /// Interior local minima of one row lying below `threshold_mhz`, as fluxes.
    pub fn closings(&self, row: usize, threshold_mhz: f64) -> Vec<f64> {
        let g = &self.gaps_mhz[row];
        local_minima(g).into_iter().filter(|&k| g[k] < threshold_mhz).map(|k| self.phis[k]).collect()
    }

    pub fn to_record(&self) -> Result<ExperimentRecord> {
        let mut r = ExperimentRecord::with_columns("gap_map", &["disorder_mhz", "phi_quanta", "gap_mhz"])?;
        for (d, row) in self.disorders_mhz.iter().zip(&self.gaps_mhz) {
            for (p, g) in self.phis.iter().zip(row) {
                r.push_row(&[*d, *p, *g])?;
            }
        }
        Ok(r)
    }
}

/// Gap `E1 - E0` at every `(disorder, phi)`; disorder sits on the default initial sites.
pub fn run_gap_map(model: &Model, phis: &[f64], disorders_mhz: &[f64]) -> Result<GapMap> {
    let sites = default_initial_sites(&model.lattice, model.n_photons())?;
    let points: Vec<(f64, f64)> = disorders_mhz.iter().flat_map(|&d| phis.iter().map(move |&p| (d, p))).collect();
    let flat: Vec<f64> = points
        .par_iter()
        .map(|&(d, phi)| {
            let v = Potential::from_sites(&model.lattice, sites.iter().map(|&s| (s, d)))?;
            Ok(model.spectrum(phi, &v, false)?.gap() / TAU)
        })
        .collect::<Result<_>>()?;
    let gaps_mhz = flat.chunks(phis.len().max(1)).map(<[f64]>::to_vec).collect();
    Ok(GapMap { phis: phis.to_vec(), disorders_mhz: disorders_mhz.to_vec(), gaps_mhz })
}

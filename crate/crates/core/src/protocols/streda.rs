//! Bulk density versus flux and its linear slope.

use rayon::prelude::*;
use serde_json::json;

use super::adiabatic::{run_preparation, PreparationConfig};
use super::Model;
use crate::error::{Error, Result};
use crate::evolve::Dephasing;
use crate::fit::{linear_fit, LinearFit};
use crate::observables::{default_bulk_sites, densities};
use crate::record::ExperimentRecord;
use crate::state::QuantumState;

/// How the state at each flux is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum StredaMode {
    /// Exact ground state.
    Ideal,
    /// Adiabatic preparation, optionally with dephasing.
    Realistic { base: PreparationConfig, t2_us: Option<f64> },
}

#[derive(Debug, Clone)]
pub struct StredaResult {
    pub phis: Vec<f64>,
    pub rho_bulk: Vec<f64>,
    /// Standard error of the mean over the bulk sites.
    pub rho_bulk_err: Vec<f64>,
    pub fit: LinearFit,
}

impl StredaResult {
    pub fn to_record(&self) -> Result<ExperimentRecord> {
        let mut r = ExperimentRecord::new("streda");
        r.push_column("phi_quanta", self.phis.clone())?;
        r.push_column("rho_bulk_photons", self.rho_bulk.clone())?;
        r.push_column("rho_bulk_err_photons", self.rho_bulk_err.clone())?;
        r.set_meta("slope", self.fit.slope);
        r.set_meta("slope_stderr", self.fit.slope_stderr);
        r.set_meta("intercept", self.fit.intercept);
        Ok(r)
    }
}

/// Mean and standard error of the bulk densities.
fn bulk_stats(state: &dyn QuantumState, bulk: &[usize]) -> (f64, f64) {
    let n = densities(state);
    let v: Vec<f64> = bulk.iter().map(|&s| n[s]).collect();
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    (mean, (var / k).sqrt())
}

pub fn run_streda(model: &Model, phis: &[f64], mode: &StredaMode) -> Result<StredaResult> {
    if phis.len() < 3 {
        return Err(Error::TooFewPoints { need: 3, got: phis.len() });
    }
    let bulk = default_bulk_sites(&model.lattice)?;
    let stats: Vec<(f64, f64)> = phis
        .par_iter()
        .map(|&phi| match mode {
            StredaMode::Ideal => {
                let gs = model.ground_state(phi, None)?;
                Ok(bulk_stats(&gs, &bulk))
            }
            StredaMode::Realistic { base, t2_us } => {
                let cfg = PreparationConfig { phi, ..base.clone() };
                let noise = t2_us.map(Dephasing::uniform).transpose()?;
                let prep = run_preparation(&cfg, noise.as_ref())?;
                Ok(bulk_stats(prep.final_state.as_dyn(), &bulk))
            }
        })
        .collect::<Result<_>>()?;
    let rho_bulk: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let fit = linear_fit(phis, &rho_bulk)?;
    Ok(StredaResult { phis: phis.to_vec(), rho_bulk, rho_bulk_err: stats.iter().map(|s| s.1).collect(), fit })
}

/// Metadata describing the mode, for records.
pub fn mode_meta(mode: &StredaMode) -> serde_json::Value {
    match mode {
        StredaMode::Ideal => json!({"mode": "ideal"}),
        StredaMode::Realistic { base, t2_us } => {
            json!({"mode": "realistic", "duration_us": base.duration_us, "t2_us": t2_us})
        }
    }
}

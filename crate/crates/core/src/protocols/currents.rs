//! Chiral current patterns of ground states.

use super::Model;
use crate::error::Result;
use crate::lattice::Potential;
use crate::observables::{current_direct, current_isolated_fit, default_bulk_sites, CurrentField, CurrentForm, IsolationFit};
use crate::record::ExperimentRecord;
use crate::state::{AnyState, StateVector};

#[derive(Debug, Clone)]
pub struct CurrentSummary {
    pub phi: f64,
    pub field: CurrentField,
    /// Counterclockwise sum along the outer boundary, photons/us.
    pub boundary_circulation: f64,
    /// Counterclockwise sum around the central plaquette.
    pub bulk_circulation: f64,
    /// Mean `|j|` over bonds joining bulk and boundary sites.
    pub radial_mean_abs: f64,
    pub max_divergence: f64,
}

pub fn summarize(model: &Model, phi: f64, state: &StateVector, form: CurrentForm) -> Result<CurrentSummary> {
    let lat = &model.lattice;
    let field = current_direct(state, &model.gauge(phi), &model.couplings(), form)?;
    let bulk = default_bulk_sites(lat)?;
    let boundary_circulation = field.circulation(&lat.boundary_loop())?;
    let bulk_circulation = field.plaquette_circulation(&bulk)?;
    let radial: Vec<f64> = lat
        .bonds()
        .iter()
        .zip(field.values())
        .filter(|(b, _)| bulk.contains(&b.a) != bulk.contains(&b.b))
        .map(|(_, j)| j.abs())
        .collect();
    let max_divergence = field.divergence().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(CurrentSummary {
        phi,
        boundary_circulation,
        bulk_circulation,
        radial_mean_abs: radial.iter().sum::<f64>() / radial.len().max(1) as f64,
        max_divergence,
        field,
    })
}

/// Ground-state currents plus the isolation-fit estimate on every bond.
#[derive(Debug, Clone)]
pub struct CurrentComparison {
    pub summary: CurrentSummary,
    pub fitted: Vec<f64>,
}

impl CurrentComparison {
    pub fn to_record(&self, model: &Model) -> Result<ExperimentRecord> {
        let mut r = ExperimentRecord::with_columns(
            "currents",
            &["from_index", "to_index", "j_direct_per_us", "j_fit_per_us"],
        )?;
        for ((b, j), f) in model.lattice.bonds().iter().zip(self.summary.field.values()).zip(&self.fitted) {
            r.push_row(&[b.a as f64, b.b as f64, *j, *f])?;
        }
        r.set_meta("phi", self.summary.phi);
        r.set_meta("boundary_circulation_per_us", self.summary.boundary_circulation);
        r.set_meta("bulk_circulation_per_us", self.summary.bulk_circulation);
        r.set_meta("radial_mean_abs_per_us", self.summary.radial_mean_abs);
        r.set_meta("max_divergence_per_us", self.summary.max_divergence);
        Ok(r)
    }
}

pub fn run_currents(model: &Model, phi: f64, form: CurrentForm, fit: Option<&IsolationFit>) -> Result<CurrentComparison> {
    let gs = model.ground_state(phi, None)?;
    let summary = summarize(model, phi, &gs, form)?;
    let fitted = match fit {
        None => vec![f64::NAN; model.lattice.num_bonds()],
        Some(cfg) => {
            let state = AnyState::Pure(gs);
            let flat = Potential::flat(&model.lattice);
            model
                .lattice
                .bonds()
                .iter()
                .map(|b| {
                    current_isolated_fit(&state, &model.gauge(phi), &model.couplings(), &flat, (b.a, b.b), cfg)
                        .map(|r| r.current)
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(CurrentComparison { summary, fitted })
}

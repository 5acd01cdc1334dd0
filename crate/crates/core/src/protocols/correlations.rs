//! Ground-state density correlations across flux.

use rayon::prelude::*;

use super::Model;
use crate::error::{Error, Result};
use crate::observables::{default_bulk_sites, g2_class_mean, g2_map, g2_radial};
use crate::record::ExperimentRecord;

/// Distance classes: `|d| <= small_max` and `|d| >= large_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceClasses {
    pub small_max: f64,
    pub large_min: f64,
}

impl Default for DistanceClasses {
    fn default() -> Self {
        Self { small_max: 1.0, large_min: 2.8 }
    }
}

#[derive(Debug, Clone)]
pub struct G2Sweep {
    pub phis: Vec<f64>,
    pub small: Vec<f64>,
    pub large: Vec<f64>,
    /// `(|d|, g2)` per flux.
    pub radial: Vec<Vec<(f64, f64)>>,
}

impl G2Sweep {
    pub fn to_record(&self) -> Result<ExperimentRecord> {
        let mut r = ExperimentRecord::new("g2");
        r.push_column("phi_quanta", self.phis.clone())?;
        r.push_column("g2_small_ratio", self.small.clone())?;
        r.push_column("g2_large_ratio", self.large.clone())?;
        Ok(r)
    }

    /// Long-format radial curves.
    pub fn radial_record(&self) -> Result<ExperimentRecord> {
        let mut r = ExperimentRecord::with_columns("g2_radial", &["phi_quanta", "distance_index", "g2_ratio"])?;
        for (phi, curve) in self.phis.iter().zip(&self.radial) {
            for (d, g) in curve {
                r.push_row(&[*phi, *d, *g])?;
            }
        }
        Ok(r)
    }
}

pub fn g2_flux_sweep(model: &Model, phis: &[f64], classes: DistanceClasses) -> Result<G2Sweep> {
    let bulk = default_bulk_sites(&model.lattice)?;
    let rows: Vec<(f64, f64, Vec<(f64, f64)>)> = phis
        .par_iter()
        .map(|&phi| {
            let gs = model.ground_state(phi, None)?;
            let radial = g2_radial(&g2_map(&gs, &bulk)?);
            let small = g2_class_mean(&radial, |r| r <= classes.small_max + 1e-9)
                .ok_or_else(|| Error::config("no displacement in the small-distance class"))?;
            let large = g2_class_mean(&radial, |r| r >= classes.large_min - 1e-9)
                .ok_or_else(|| Error::config("no displacement in the large-distance class"))?;
            Ok((small, large, radial))
        })
        .collect::<Result<_>>()?;
    Ok(G2Sweep {
        phis: phis.to_vec(),
        small: rows.iter().map(|r| r.0).collect(),
        large: rows.iter().map(|r| r.1).collect(),
        radial: rows.into_iter().map(|r| r.2).collect(),
    })
}
